#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "drum/error.hpp"
#include "drum/image.hpp"
#include "oracles.hpp"

using namespace drum;

namespace {

RasterImage random_raster(std::uint64_t seed) {
    Rng rng(seed);
    return RasterImage(oracle::random_image(rng, RasterImage::kPixels));
}

std::vector<double> as_vec(const RasterImage& img) { return {img.pixels().begin(), img.pixels().end()}; }

}  // namespace

TEST(Raster, UnitSquarePixelCount) {
    const Polygon sq({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
    const RasterImage img = rasterize(sq);
    // Centres on the boundary count, so the 11 x 11 block from -0.5 to 0.5 is set.
    EXPECT_EQ(img.count_above(0.5), 121u);
    EXPECT_EQ(img.at(RasterImage::kCenter, RasterImage::kCenter), 1.0);
    EXPECT_EQ(img.at(RasterImage::kCenter + 5, RasterImage::kCenter + 5), 1.0);
    EXPECT_EQ(img.at(RasterImage::kCenter + 6, RasterImage::kCenter), 0.0);
}

TEST(Raster, MatchesWindingNumberOracle) {
    Rng rng(11);
    for (int s = 0; s < 300; ++s) {
        const Polygon p = canonicalize(generate_pentagon(GenConfig{}, rng));
        bool fits = true;
        for (const auto& v : p.vertices()) fits = fits && std::abs(v.x) <= 2.0 && std::abs(v.y) <= 2.0;
        if (!fits) {
            EXPECT_THROW(rasterize(p), GeometryError);
            continue;
        }
        const RasterImage img = rasterize(p);
        ASSERT_TRUE(img.is_binary());
        for (int iy = 0; iy < RasterImage::kSide; ++iy)
            for (int ix = 0; ix < RasterImage::kSide; ++ix)
                ASSERT_EQ(img.at(ix, iy) == 1.0,
                          oracle::inside(p, RasterImage::center_coord(ix), RasterImage::center_coord(iy)))
                    << "sample " << s << " pixel " << ix << ',' << iy;
        const double est = static_cast<double>(img.count_above(0.5)) * 0.01;
        ASSERT_LE(std::abs(est - area(p)), 0.1 * perimeter(p) / 2 + 0.05);
    }
}

TEST(Raster, DegenerateInputThrows) {
    EXPECT_THROW(rasterize(Polygon({{0, 0}, {1, 0}, {2, 0}})), GeometryError);
    EXPECT_THROW(rasterize(Polygon{}), GeometryError);
    EXPECT_THROW(rasterize(Polygon({{0, 0}, {2.5, 0}, {0, 1}})), GeometryError);
}

TEST(D4, MatchesCoordinateOracle) {
    const RasterImage img = random_raster(3);
    for (int g = 0; g < 8; ++g)
        EXPECT_EQ(as_vec(d4_transform(img, kD4Elements[g])), oracle::d4_push(as_vec(img), RasterImage::kSide, g))
            << d4_name(kD4Elements[g]);
}

TEST(D4, GenericSideMatchesOracle) {
    for (int side : {1, 3, 5, 7}) {
        Rng rng(static_cast<std::uint64_t>(side));
        const auto img = oracle::random_image(rng, static_cast<std::size_t>(side * side), 1.0);
        for (int g = 0; g < 8; ++g) {
            const auto src = d4_source_index(kD4Elements[g], side);
            std::vector<double> out(img.size());
            for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[src[i]];
            ASSERT_EQ(out, oracle::d4_push(img, side, g)) << "side " << side << " g " << g;
        }
    }
}

TEST(D4, GroupLaws) {
    const RasterImage img = random_raster(4);
    EXPECT_EQ(d4_transform(img, D4::id), img);
    RasterImage r = img;
    for (int i = 0; i < 4; ++i) r = d4_transform(r, D4::r90);
    EXPECT_EQ(r, img);
    EXPECT_EQ(d4_transform(d4_transform(img, D4::r90), D4::r90), d4_transform(img, D4::r180));
    for (D4 m : {D4::fx, D4::fy, D4::d1, D4::d2}) EXPECT_EQ(d4_transform(d4_transform(img, m), m), img);
    for (D4 g : kD4Elements) {
        EXPECT_EQ(d4_transform(d4_transform(img, g), d4_inverse(g)), img);
        for (D4 h : kD4Elements)
            ASSERT_EQ(d4_transform(d4_transform(img, h), g), d4_transform(img, d4_compose(g, h)));
    }
    // The centre pixel is fixed by every element.
    for (D4 g : kD4Elements)
        EXPECT_EQ(d4_transform(img, g).at(RasterImage::kCenter, RasterImage::kCenter),
                  img.at(RasterImage::kCenter, RasterImage::kCenter));
}

TEST(Rotate, IdentityAndQuarterTurn) {
    const RasterImage img = random_raster(5);
    EXPECT_EQ(rotate_image(img, 0.0, false), img);
    const RasterImage rot = rotate_image(img, std::numbers::pi / 2, false);
    const RasterImage ref = d4_transform(img, D4::r90);
    for (int iy = 1; iy < RasterImage::kSide - 1; ++iy)
        for (int ix = 1; ix < RasterImage::kSide - 1; ++ix) ASSERT_NEAR(rot.at(ix, iy), ref.at(ix, iy), 1e-12);
    const RasterImage flip = rotate_image(img, 0.0, true);
    EXPECT_EQ(flip, d4_transform(img, D4::fx));
    const RasterImage zero;
    EXPECT_EQ(rotate_image(zero, 0.7, true), zero);
}

TEST(Pgm, HeaderAndOrientation) {
    RasterImage img;
    img.at(0, RasterImage::kSide - 1) = 1.0;  // top-left in the file
    std::ostringstream os;
    write_pgm(os, img);
    const std::string s = os.str();
    const std::string header = "P5\n41 41\n255\n";
    ASSERT_EQ(s.substr(0, header.size()), header);
    ASSERT_EQ(s.size(), header.size() + 41 * 41);
    EXPECT_EQ(static_cast<unsigned char>(s[header.size()]), 255);
    std::ostringstream strip;
    const std::array<RasterImage, 2> two = {img, img};
    write_pgm_strip(strip, two);
    EXPECT_EQ(strip.str().substr(0, 12), "P5\n83 41\n255");
}
