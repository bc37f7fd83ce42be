#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "drum/error.hpp"
#include "drum/layers.hpp"
#include "drum/network.hpp"
#include "drum/parallel.hpp"
#include "drum/training.hpp"
#include "oracles.hpp"

using namespace drum;
using nn::Mat;
using nn::Vec;

namespace {

std::vector<double> random_params(std::size_t n, std::uint64_t seed, double scale = 0.3) {
    Rng rng(seed);
    std::vector<double> p(n);
    for (auto& v : p) v = rng.uniform(-scale, scale);
    return p;
}

/// Records with the geometry of small pentagons and a synthetic ascending
/// spectrum (the model only reads the eigenvalues and the image).
std::vector<SampleRecord> synthetic_records(std::size_t n, int n_eigs, std::uint64_t seed) {
    std::vector<SampleRecord> out;
    Rng rng(seed);
    while (out.size() < n) {
        const Polygon p = canonicalize(generate_pentagon(GenConfig{0.5, 1.2, 0.5, 2.0, 0}, rng));
        SampleRecord r;
        r.seed = out.size();
        for (std::size_t v = 0; v < 5; ++v) {
            r.vertices[2 * v] = p[v].x;
            r.vertices[2 * v + 1] = p[v].y;
        }
        // Weyl-like growth with the area controlling the slope.
        double e = 0.0;
        for (int k = 0; k < n_eigs; ++k) {
            e += 4 * std::numbers::pi / area(p) * (1.0 + 0.3 * rng.uniform());
            r.eigenvalues.push_back(e);
        }
        const RasterImage img = rasterize(p);
        for (std::size_t k = 0; k < RasterImage::kPixels; ++k) r.image.push_back(img[k] > 0.5 ? 1 : 0);
        out.push_back(std::move(r));
    }
    return out;
}

ModelConfig small_model() {
    ModelConfig m;
    m.input_length = 10;
    return m;
}

}  // namespace

TEST(Layers, TransConvMatchesNaiveScatter) {
    nn::TransConv t{2, 3, 3, 2, 4, 0};
    ASSERT_EQ(t.out_side(), 9);
    const auto p = random_params(t.size(), 1);
    Rng rng(2);
    Mat x(2, 16);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    Mat y;
    t.forward(p.data(), x, y);
    Mat ref = Mat::Zero(3, 81);
    const std::size_t wsz = static_cast<std::size_t>(3 * 9 * 2);
    for (int co = 0; co < 3; ++co) {
        for (int i = 0; i < 81; ++i) ref(co, i) = p[wsz + co];
        for (int ci = 0; ci < 2; ++ci)
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const double w = p[static_cast<std::size_t>(ci) * 27 + co * 9 + ky * 3 + kx];
                            ref(co, (2 * r + ky) * 9 + 2 * c + kx) += w * x(ci, r * 4 + c);
                        }
    }
    EXPECT_LE((y - ref).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Layers, BackwardMatchesFiniteDifferences) {
    Rng rng(3);
    // Scalar objective sum(y .* m) with a fixed random m, for each layer type.
    nn::Dense d{4, 3, 0};
    nn::Lstm l{2, 3, 0};
    nn::TransConv t{2, 2, 3, 2, 2, 0};
    auto check = [](auto&& objective, auto&& analytic, std::vector<double> p) {
        std::vector<double> g(p.size(), 0.0);
        analytic(p, g);
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto a = p, b = p;
            a[i] += 1e-6;
            b[i] -= 1e-6;
            const double fd = (objective(a) - objective(b)) / 2e-6;
            ASSERT_NEAR(g[i], fd, 1e-7 + 1e-6 * std::abs(fd)) << i;
        }
    };
    {
        Vec x = Vec::Random(4), m = Vec::Random(3);
        auto f = [&](const std::vector<double>& p) {
            Vec y;
            d.forward(p.data(), x, y);
            return y.dot(m);
        };
        check(f, [&](const std::vector<double>& p, std::vector<double>& g) { d.backward(p.data(), x, m, nullptr, g.data()); },
              random_params(d.size(), 4));
    }
    {
        Mat x = Mat::Random(2, 5), m = Mat::Random(3, 5);
        auto f = [&](const std::vector<double>& p) {
            nn::Lstm::Cache c;
            l.forward(p.data(), x, c);
            return (c.h.rightCols(5).array() * m.array()).sum();
        };
        check(f,
              [&](const std::vector<double>& p, std::vector<double>& g) {
                  nn::Lstm::Cache c;
                  l.forward(p.data(), x, c);
                  l.backward(p.data(), c, m, nullptr, g.data());
              },
              random_params(l.size(), 5));
    }
    {
        Mat x = Mat::Random(2, 4), m = Mat::Random(2, 25);
        auto f = [&](const std::vector<double>& p) {
            Mat y;
            t.forward(p.data(), x, y);
            return (y.array() * m.array()).sum();
        };
        check(f, [&](const std::vector<double>& p, std::vector<double>& g) { t.backward(p.data(), x, m, nullptr, g.data()); },
              random_params(t.size(), 6));
    }
}

TEST(Network, ShapesAndDeterminism) {
    const Network net(ModelConfig::toy());
    EXPECT_EQ(ModelConfig::toy().decoder_side(), 47);
    std::vector<double> in(100);
    for (int i = 0; i < 100; ++i) in[i] = 1.0 + 0.01 * i;
    const auto a = net.forward(in);
    const auto b = net.forward(in);
    EXPECT_EQ(a.image.pixels().size(), 1681u);
    EXPECT_EQ(a.latent.size(), 10u);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.latent, b.latent);
    for (double v : a.image.pixels()) ASSERT_TRUE(v > 0.0 && v < 1.0);
    EXPECT_THROW(net.forward(std::vector<double>(99, 1.0)), ShapeError);
}

TEST(Network, ZeroWeightsGiveSigmoidOfBias) {
    Network net(ModelConfig::toy());
    std::fill(net.params().begin(), net.params().end(), 0.0);
    const auto out = net.forward(std::vector<double>(100, 3.0));
    for (double v : out.image.pixels()) ASSERT_EQ(v, 0.5);
}

TEST(Network, Presets) {
    EXPECT_EQ(ModelConfig::full().decoder_side(), 47);
    EXPECT_NO_THROW(Network(ModelConfig::dense_encoder()));
    EXPECT_NO_THROW(Network(ModelConfig::linear()));
    KeyValueConfig c;
    c.set("model", std::string("full"));
    EXPECT_EQ(ModelConfig::from_config(c), ModelConfig::full());
    EXPECT_EQ(ModelConfig::from_config(ModelConfig::toy().to_config()), ModelConfig::toy());
    c.set("model", std::string("huge"));
    EXPECT_THROW(ModelConfig::from_config(c), ConfigError);
    ModelConfig bad;
    bad.latent = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    ModelConfig crop;
    crop.conv_strides = {1, 1, 1, 1};  // too small to crop 41 x 41
    EXPECT_THROW(crop.validate(), ConfigError);
}

TEST(Network, CheckpointRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "drum_ckpt_test";
    std::filesystem::create_directories(dir);
    ModelConfig m = small_model();
    m.normalize_inputs = true;
    Network net(m);
    net.set_normalization(std::vector<double>(10, 0.5), std::vector<double>(10, 2.0));
    KeyValueConfig echo;
    echo.set("learning_rate", 0.001);
    save_checkpoint(dir / "a.sdnn", net, echo);
    const Checkpoint ck = load_checkpoint(dir / "a.sdnn");
    EXPECT_EQ(ck.network.config(), m);
    EXPECT_TRUE(std::equal(ck.network.params().begin(), ck.network.params().end(), net.params().begin()));
    EXPECT_EQ(ck.network.input_mean(), net.input_mean());
    EXPECT_EQ(ck.echo.get_double("learning_rate", 0), 0.001);
    std::ofstream(dir / "bad.sdnn") << "NOPE";
    EXPECT_THROW(load_checkpoint(dir / "bad.sdnn"), FormatError);
    std::filesystem::remove_all(dir);
}

TEST(Training, GradientCheckLinearIsExact) {
    const auto recs = synthetic_records(3, 100, 1);
    ModelConfig m = ModelConfig::linear();
    Network net(m);
    // Smooth everywhere, so a wider step cuts rounding noise at no truncation cost.
    GradCheckOptions o;
    o.epsilon = 1e-4;
    for (const auto& r : recs) {
        const auto rep = gradient_check(net, model_input(r, 100), r.raster(), o);
        EXPECT_EQ(rep.excluded, 0);
        EXPECT_LE(rep.max_deviation, 1e-6);
    }
}

TEST(Training, GradientCheckToy) {
    const auto recs = synthetic_records(3, 100, 2);
    Network net(ModelConfig::toy());
    for (const auto& r : recs) {
        const auto rep = gradient_check(net, model_input(r, 100), r.raster());
        if (rep.argmin_tie) continue;
        EXPECT_GT(rep.checked, 50);
        EXPECT_LE(rep.max_deviation, 1e-3);
    }
}

TEST(Training, ZeroLearningRateKeepsLossConstant) {
    const auto recs = synthetic_records(40, 10, 3);
    Network net(small_model());
    TrainConfig tc;
    tc.learning_rate = 0.0;
    tc.epochs_first = tc.epochs_last = 3;
    tc.batch_size = 8;
    const std::span<const SampleRecord> all(recs);
    const auto rep = train(net, all.subspan(0, 32), all.subspan(32), tc);
    ASSERT_EQ(rep.epochs.size(), 3u);
    for (const auto& e : rep.epochs) {
        EXPECT_NEAR(e.train_loss, rep.epochs[0].train_loss, 1e-12);
        EXPECT_EQ(e.val_loss, rep.epochs[0].val_loss);
    }
}

TEST(Training, LossDecreasesAndIsThreadIndependent) {
    const auto recs = synthetic_records(80, 10, 4);
    const std::span<const SampleRecord> all(recs);
    TrainConfig tc;
    tc.epochs_first = tc.epochs_last = 6;
    tc.batch_size = 16;
    tc.learning_rate = 3e-3;
    set_worker_count(1);
    Network a(small_model());
    const auto ra = train(a, all.subspan(0, 64), all.subspan(64), tc);
    set_worker_count(3);
    Network b(small_model());
    const auto rb = train(b, all.subspan(0, 64), all.subspan(64), tc);
    set_worker_count(0);
    EXPECT_LT(ra.epochs.back().train_loss, ra.epochs.front().train_loss);
    ASSERT_EQ(ra.epochs.size(), rb.epochs.size());
    for (std::size_t i = 0; i < ra.epochs.size(); ++i) EXPECT_EQ(ra.epochs[i].train_loss, rb.epochs[i].train_loss);
    EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
}

TEST(Training, ConfigAndSchedule) {
    KeyValueConfig c;
    c.set("epochs", 7);
    EXPECT_EQ(TrainConfig::from_config(c).total_epochs(), 7);
    TrainConfig t;
    t.chunks = 11;
    t.epochs_first = 50;
    t.epochs_last = 10;
    EXPECT_EQ(t.total_epochs(), 330);
    KeyValueConfig bad;
    bad.set("validation_fraction", 1.5);
    EXPECT_THROW(TrainConfig::from_config(bad), ConfigError);
    TrainConfig tc;
    tc.learning_rate = 1.0;
    tc.decay = 1.0;
    Adam adam(1, tc);
    std::vector<double> p = {0.0}, g = {1.0};
    EXPECT_EQ(adam.step(p, g), 1.0);   // t = 0
    EXPECT_EQ(adam.step(p, g), 0.5);   // 1 / (1 + 1)
}

TEST(Training, ConstantBaseline) {
    const auto recs = synthetic_records(30, 10, 5);
    const ConstantBaseline b = constant_image_baseline(recs);
    EXPECT_TRUE(b.image.is_binary());
    EXPECT_NEAR(b.train_loss, mean_constant_loss(b.image, recs), 1e-12);
    EXPECT_LT(b.train_loss, 1.0);
}
