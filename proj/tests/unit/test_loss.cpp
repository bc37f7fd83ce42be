#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "drum/error.hpp"
#include "drum/loss.hpp"
#include "oracles.hpp"

using namespace drum;

namespace {

std::vector<double> vec(const RasterImage& r) { return {r.pixels().begin(), r.pixels().end()}; }

RasterImage shape_image() {
    return rasterize(Polygon({{-0.3, -1.0}, {1.5, -0.4}, {0.9, 1.1}, {-1.2, 0.8}, {-1.6, -0.3}}));
}

}  // namespace

TEST(Jaccard, ExactValues) {
    Rng rng(1);
    const auto t = oracle::random_image(rng, 1681, 0.4, true);
    EXPECT_EQ(jaccard(t, t), 1.0);
    std::vector<double> a(1681, 0.0), b(1681, 0.0);
    a[3] = 1;
    b[4] = 1;
    EXPECT_EQ(jaccard(a, b), 0.0);
    std::vector<double> half(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) half[i] = 0.5 * t[i];
    EXPECT_NEAR(jaccard(half, t), 2.0 / 3.0, 1e-15);
    const std::vector<double> zero(1681, 0.0);
    EXPECT_THROW(jaccard(zero, zero), Error);
}

TEST(D4Loss, BruteForceFiveByFive) {
    Rng rng(55);
    for (int trial = 0; trial < 2000; ++trial) {
        const bool binary = trial % 2 == 0;
        const auto p = oracle::random_image(rng, 25, 0.5, binary);
        const auto t = oracle::random_image(rng, 25, 0.5, binary);
        bool pz = true, tz = true;
        for (int i = 0; i < 25; ++i) {
            pz = pz && p[i] == 0;
            tz = tz && t[i] == 0;
        }
        if (pz && tz) continue;
        const auto [ref, arg] = oracle::d4_loss(p, t, 5);
        const D4Loss got = d4_loss(p, t, 5);
        ASSERT_NEAR(got.loss, ref, 1e-15) << trial;
        // Equal-loss candidates are resolved to the earliest element in both.
        ASSERT_EQ(static_cast<int>(got.element), arg) << trial;
    }
}

TEST(D4Loss, MatchesOracleOnFullGrid) {
    Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const auto p = oracle::random_image(rng, 1681, 0.3);
        const auto t = oracle::random_image(rng, 1681, 0.3, true);
        const auto [ref, arg] = oracle::d4_loss(p, t, 41);
        const D4Loss got = d4_loss(p, t, 41);
        ASSERT_NEAR(got.loss, ref, 1e-14);
        ASSERT_EQ(static_cast<int>(got.element), arg);
    }
}

TEST(D4Loss, KnownMinimizers) {
    const RasterImage t = shape_image();
    const D4Loss same = d4_loss(t, t);
    EXPECT_EQ(same.loss, 0.0);
    EXPECT_EQ(same.element, D4::id);
    const D4Loss rot = d4_loss(d4_transform(t, D4::r90), t);
    EXPECT_EQ(rot.loss, 0.0);
    EXPECT_EQ(rot.element, D4::r270);
    const D4Loss zero = d4_loss(RasterImage{}, t);
    EXPECT_EQ(zero.loss, 1.0);
}

TEST(D4Loss, InvariantUnderPrecomposition) {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const RasterImage p(oracle::random_image(rng, 1681, 0.3));
        const RasterImage t(oracle::random_image(rng, 1681, 0.3, true));
        const double base = d4_loss(p, t).loss;
        for (D4 g : kD4Elements) ASSERT_EQ(d4_loss(d4_transform(p, g), t).loss, base);
    }
}

TEST(D4Loss, GradientMatchesFiniteDifferences) {
    Rng rng(21);
    const auto t = oracle::random_image(rng, 49, 0.5, true);
    auto p = oracle::random_image(rng, 49, 1.0);
    std::vector<double> grad(49, 0.0);
    const D4Loss l = d4_loss_grad(p, t, 7, grad);
    EXPECT_NEAR(l.loss, d4_loss(p, t, 7).loss, 1e-15);
    for (int i = 0; i < 49; ++i) {
        const double h = 1e-6;
        auto a = p, b = p;
        a[i] += h;
        b[i] -= h;
        const double fd = (d4_loss(a, t, 7).loss - d4_loss(b, t, 7).loss) / (2 * h);
        ASSERT_NEAR(grad[i], fd, 1e-7 + 1e-5 * std::abs(fd)) << i;
    }
}

TEST(RotationSearch, Recovery) {
    const RasterImage t = shape_image();
    const RotationSearch self = rotation_search(t, t);
    EXPECT_LT(std::min(self.theta, 2 * std::numbers::pi - self.theta), std::numbers::pi / 180 + 1e-12);
    EXPECT_FALSE(self.reflect);
    EXPECT_LE(self.loss, 0.02);

    const RasterImage rotated = rotate_image(t, 150.0 * std::numbers::pi / 180, false);
    const RotationSearch back = rotation_search(rotated, t);
    EXPECT_NEAR(back.theta * 180 / std::numbers::pi, 210.0, 1.0 + 1e-9);
    EXPECT_FALSE(back.reflect);
    EXPECT_LT(back.loss, 0.2);

    std::ostringstream os;
    const std::vector<RotationRow> rows = {{3, 0.5, back}};
    write_rotation_csv(os, rows);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "sample_id,d4_loss,best_theta_deg,reflect,best_loss");
}
