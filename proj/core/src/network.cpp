#include "drum/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drum/error.hpp"
#include "drum/random.hpp"

namespace drum {

namespace {

constexpr int kOut = RasterImage::kSide;

constexpr std::array<std::string_view, 14> kModelKeys = {
    "model",        "input_length", "encoder",      "encoder_widths", "latent",      "decoder_dense",
    "maps",         "map_side",     "conv_channels", "conv_kernels",  "conv_strides", "leaky_slope",
    "normalize_inputs", "init_seed"};

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double leaky_gain(double slope) { return std::sqrt(6.0 / (1.0 + slope * slope)); }

ModelConfig preset(const std::string& name) {
    if (name == "toy") return ModelConfig::toy();
    if (name == "full") return ModelConfig::full();
    if (name == "dense") return ModelConfig::dense_encoder();
    if (name == "linear") return ModelConfig::linear();
    throw ConfigError("model", "unknown preset '" + name + "' (expected toy, full, dense or linear)");
}

}  // namespace

// ---------------------------------------------------------------- config

ModelConfig ModelConfig::toy() { return {}; }

ModelConfig ModelConfig::full() {
    ModelConfig c;
    c.encoder_widths = {128, 128, 128};
    c.decoder_dense = {50, 512, 1024, 3200};
    c.maps = 128;
    c.conv_channels = {64, 32, 16, 1};
    return c;
}

ModelConfig ModelConfig::dense_encoder() {
    ModelConfig c;
    c.encoder = EncoderKind::dense;
    c.encoder_widths = {128, 128};
    return c;
}

ModelConfig ModelConfig::linear() {
    ModelConfig c;
    c.encoder = EncoderKind::dense;
    c.encoder_widths = {};
    c.decoder_dense = {kOut * kOut};
    c.conv_channels = {};
    c.conv_kernels = {};
    c.conv_strides = {};
    return c;
}

int ModelConfig::decoder_side() const {
    if (conv_channels.empty()) return kOut;
    int side = map_side;
    for (std::size_t i = 0; i < conv_kernels.size(); ++i) side = (side - 1) * conv_strides[i] + conv_kernels[i];
    return side;
}

void ModelConfig::validate() const {
    auto positive = [](const std::vector<int>& v) { return std::all_of(v.begin(), v.end(), [](int x) { return x > 0; }); };
    if (input_length < 1) throw ConfigError("input_length", "must be positive");
    if (!positive(encoder_widths)) throw ConfigError("encoder_widths", "widths must be positive");
    if (encoder == EncoderKind::lstm && encoder_widths.empty())
        throw ConfigError("encoder_widths", "the LSTM encoder needs at least one layer");
    if (latent < 7) throw ConfigError("latent", "must be at least 7 (pentagon degrees of freedom)");
    if (decoder_dense.empty() || !positive(decoder_dense))
        throw ConfigError("decoder_dense", "needs at least one positive width");
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope", "must be in [0, 1)");
    if (conv_channels.empty()) {
        if (!conv_kernels.empty() || !conv_strides.empty())
            throw ConfigError("conv_kernels", "kernels and strides need matching channels");
        if (decoder_dense.back() != kOut * kOut)
            throw ConfigError("decoder_dense", "without convolutions the last width must be 1681");
        return;
    }
    if (conv_kernels.size() != conv_channels.size() || conv_strides.size() != conv_channels.size())
        throw ConfigError("conv_channels", "channels, kernels and strides must have equal length");
    if (!positive(conv_channels) || !positive(conv_kernels) || !positive(conv_strides))
        throw ConfigError("conv_channels", "channels, kernels and strides must be positive");
    if (conv_channels.back() != 1) throw ConfigError("conv_channels", "the last layer must have one channel");
    if (maps < 1 || map_side < 1) throw ConfigError("maps", "maps and map_side must be positive");
    if (decoder_dense.back() != maps * map_side * map_side)
        throw ConfigError("decoder_dense", "last width must equal maps * map_side^2");
    const int side = decoder_side();
    if (side < kOut || (side - kOut) % 2 != 0)
        throw ConfigError("conv_kernels", "decoder output side " + std::to_string(side) +
                                              " cannot be centre-cropped to 41");
}

std::span<const std::string_view> ModelConfig::keys() { return kModelKeys; }

ModelConfig ModelConfig::from_config(const KeyValueConfig& c) {
    return from_config(c, preset(c.get_string("model", "toy")));
}

ModelConfig ModelConfig::from_config(const KeyValueConfig& c, const ModelConfig& base) {
    ModelConfig m = base;
    m.input_length = static_cast<int>(c.get_int("input_length", m.input_length));
    const std::string enc = c.get_string("encoder", m.encoder == EncoderKind::lstm ? "lstm" : "dense");
    if (enc == "lstm")
        m.encoder = EncoderKind::lstm;
    else if (enc == "dense")
        m.encoder = EncoderKind::dense;
    else
        throw ConfigError("encoder", "expected lstm or dense");
    m.encoder_widths = c.get_int_list("encoder_widths", m.encoder_widths);
    m.latent = static_cast<int>(c.get_int("latent", m.latent));
    m.decoder_dense = c.get_int_list("decoder_dense", m.decoder_dense);
    m.maps = static_cast<int>(c.get_int("maps", m.maps));
    m.map_side = static_cast<int>(c.get_int("map_side", m.map_side));
    m.conv_channels = c.get_int_list("conv_channels", m.conv_channels);
    m.conv_kernels = c.get_int_list("conv_kernels", m.conv_kernels);
    m.conv_strides = c.get_int_list("conv_strides", m.conv_strides);
    m.leaky_slope = c.get_double("leaky_slope", m.leaky_slope);
    m.normalize_inputs = c.get_bool("normalize_inputs", m.normalize_inputs);
    m.init_seed = c.get_u64("init_seed", m.init_seed);
    m.validate();
    return m;
}

KeyValueConfig ModelConfig::to_config() const {
    KeyValueConfig c;
    c.set("input_length", input_length);
    c.set("encoder", std::string(encoder == EncoderKind::lstm ? "lstm" : "dense"));
    c.set("encoder_widths", encoder_widths);
    c.set("latent", latent);
    c.set("decoder_dense", decoder_dense);
    c.set("maps", maps);
    c.set("map_side", map_side);
    c.set("conv_channels", conv_channels);
    c.set("conv_kernels", conv_kernels);
    c.set("conv_strides", conv_strides);
    c.set("leaky_slope", leaky_slope);
    c.set("normalize_inputs", normalize_inputs);
    c.set("init_seed", init_seed);
    return c;
}

// ---------------------------------------------------------------- network

Network::Network(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    std::size_t offset = 0;
    auto place = [&offset](auto& layer) {
        layer.offset = offset;
        offset += layer.size();
    };

    int width = 1;
    if (config_.encoder == EncoderKind::lstm) {
        for (int h : config_.encoder_widths) {
            lstm_.push_back({width, h});
            place(lstm_.back());
            width = h;
        }
    } else {
        width = config_.input_length;
        for (int h : config_.encoder_widths) {
            enc_dense_.push_back({width, h});
            place(enc_dense_.back());
            width = h;
        }
    }
    to_latent_ = {width, config_.latent};
    place(to_latent_);
    width = config_.latent;
    for (int h : config_.decoder_dense) {
        dec_dense_.push_back({width, h});
        place(dec_dense_.back());
        width = h;
    }
    int channels = config_.maps;
    int side = config_.map_side;
    for (std::size_t i = 0; i < config_.conv_channels.size(); ++i) {
        nn::TransConv t;
        t.cin = channels;
        t.cout = config_.conv_channels[i];
        t.kernel = config_.conv_kernels[i];
        t.stride = config_.conv_strides[i];
        t.in_side = side;
        place(t);
        convs_.push_back(t);
        channels = t.cout;
        side = t.out_side();
    }
    params_.assign(offset, 0.0);
    initialize(config_.init_seed);
}

void Network::initialize(std::uint64_t seed) {
    Rng rng(seed);
    double* p = params_.data();
    const double leaky = leaky_gain(config_.leaky_slope);
    for (const auto& l : lstm_) l.init(p, rng);
    for (const auto& d : enc_dense_) d.init(p, rng, leaky);
    to_latent_.init(p, rng, std::sqrt(3.0));
    for (std::size_t i = 0; i < dec_dense_.size(); ++i) {
        const bool sigmoid_out = convs_.empty() && i + 1 == dec_dense_.size();
        dec_dense_[i].init(p, rng, sigmoid_out ? std::sqrt(3.0) : leaky);
    }
    for (std::size_t i = 0; i < convs_.size(); ++i)
        convs_[i].init(p, rng, i + 1 == convs_.size() ? std::sqrt(3.0) : std::sqrt(6.0));
}

void Network::set_normalization(std::vector<double> mean, std::vector<double> stddev) {
    if (!mean.empty() && (mean.size() != static_cast<std::size_t>(config_.input_length) || stddev.size() != mean.size()))
        throw ShapeError("set_normalization: statistics must match the input length");
    for (double s : stddev)
        if (!(s > 0.0)) throw ShapeError("set_normalization: standard deviations must be positive");
    mean_ = std::move(mean);
    std_ = std::move(stddev);
}

void Network::encode_into(std::span<const double> spacings, Cache& cache) const {
    const int n = config_.input_length;
    if (spacings.size() != static_cast<std::size_t>(n))
        throw ShapeError("forward: expected " + std::to_string(n) + " inputs, got " + std::to_string(spacings.size()));
    const double* params = params_.data();
    cache.input.resize(n);
    for (int i = 0; i < n; ++i)
        cache.input(i) = mean_.empty() ? spacings[i] : (spacings[i] - mean_[i]) / std_[i];

    if (!lstm_.empty()) {
        cache.lstm.resize(lstm_.size());
        nn::Mat x = cache.input.transpose();
        for (std::size_t l = 0; l < lstm_.size(); ++l) {
            lstm_[l].forward(params, x, cache.lstm[l]);
            x = cache.lstm[l].h.rightCols(n);
        }
        cache.encoded = cache.lstm.back().h.col(n);
    } else {
        cache.enc_pre.resize(enc_dense_.size());
        cache.enc_act.resize(enc_dense_.size());
        nn::Vec a = cache.input;
        for (std::size_t l = 0; l < enc_dense_.size(); ++l) {
            enc_dense_[l].forward(params, a, cache.enc_pre[l]);
            cache.enc_act[l] = nn::leaky_relu(cache.enc_pre[l], config_.leaky_slope);
            a = cache.enc_act[l];
        }
        cache.encoded = a;
    }
    to_latent_.forward(params, cache.encoded, cache.latent);
}

void Network::forward(std::span<const double> spacings, Cache& cache) const {
    encode_into(spacings, cache);
    const double* params = params_.data();
    const std::size_t nd = dec_dense_.size();
    cache.dec_pre.resize(nd);
    cache.dec_act.resize(nd);
    nn::Vec a = cache.latent;
    for (std::size_t l = 0; l < nd; ++l) {
        dec_dense_[l].forward(params, a, cache.dec_pre[l]);
        const bool sigmoid_out = convs_.empty() && l + 1 == nd;
        cache.dec_act[l] = sigmoid_out ? nn::sigmoid(cache.dec_pre[l]) : nn::leaky_relu(cache.dec_pre[l], config_.leaky_slope);
        a = cache.dec_act[l];
    }

    cache.output.resize(RasterImage::kPixels);
    if (convs_.empty()) {
        std::copy(a.data(), a.data() + a.size(), cache.output.begin());
        return;
    }
    const int s2 = config_.map_side * config_.map_side;
    nn::Mat x = Eigen::Map<const nn::Mat>(a.data(), s2, config_.maps).transpose();
    cache.conv_in.resize(convs_.size());
    cache.conv_pre.resize(convs_.size());
    for (std::size_t l = 0; l < convs_.size(); ++l) {
        cache.conv_in[l] = x;
        convs_[l].forward(params, x, cache.conv_pre[l]);
        if (l + 1 < convs_.size()) x = cache.conv_pre[l].cwiseMax(0.0);
    }
    const int side = config_.decoder_side();
    const int off = (side - kOut) / 2;
    const nn::Mat& last = cache.conv_pre.back();
    for (int iy = 0; iy < kOut; ++iy)
        for (int ix = 0; ix < kOut; ++ix)
            cache.output[RasterImage::index(ix, iy)] = logistic(last(0, (iy + off) * side + ix + off));
}

void Network::backward(const Cache& cache, std::span<const double> d_output, std::span<double> grad) const {
    if (d_output.size() != RasterImage::kPixels || grad.size() != params_.size())
        throw ShapeError("backward: gradient buffers have the wrong size");
    const double* params = params_.data();
    double* g = grad.data();
    const std::size_t nd = dec_dense_.size();

    nn::Vec d_act;  // gradient with respect to the last dense activation
    nn::Vec d_pre;
    if (convs_.empty()) {
        d_pre.resize(static_cast<Eigen::Index>(RasterImage::kPixels));
        for (std::size_t i = 0; i < RasterImage::kPixels; ++i) {
            const double s = cache.output[i];
            d_pre(static_cast<Eigen::Index>(i)) = d_output[i] * s * (1.0 - s);
        }
    } else {
        const int side = config_.decoder_side();
        const int off = (side - kOut) / 2;
        nn::Mat dy = nn::Mat::Zero(1, static_cast<Eigen::Index>(side) * side);
        for (int iy = 0; iy < kOut; ++iy) {
            for (int ix = 0; ix < kOut; ++ix) {
                const std::size_t i = RasterImage::index(ix, iy);
                const double s = cache.output[i];
                dy(0, (iy + off) * side + ix + off) = d_output[i] * s * (1.0 - s);
            }
        }
        nn::Mat dx;
        for (std::size_t l = convs_.size(); l-- > 0;) {
            if (l + 1 < convs_.size()) dy = dx.cwiseProduct((cache.conv_pre[l].array() > 0.0).cast<double>().matrix());
            convs_[l].backward(params, cache.conv_in[l], dy, &dx, g);
        }
        const int s2 = config_.map_side * config_.map_side;
        d_act.resize(static_cast<Eigen::Index>(s2) * config_.maps);
        Eigen::Map<nn::Mat>(d_act.data(), s2, config_.maps) = dx.transpose();
    }

    nn::Vec dx;
    for (std::size_t l = nd; l-- > 0;) {
        const bool sigmoid_out = convs_.empty() && l + 1 == nd;
        if (!sigmoid_out) d_pre = nn::leaky_relu_backward(cache.dec_pre[l], d_act, config_.leaky_slope);
        const nn::Vec& in = l == 0 ? cache.latent : cache.dec_act[l - 1];
        dec_dense_[l].backward(params, in, d_pre, &dx, g);
        d_act = dx;
    }

    nn::Vec d_encoded;
    to_latent_.backward(params, cache.encoded, d_act, &d_encoded, g);

    if (!lstm_.empty()) {
        const int n = config_.input_length;
        nn::Mat dh = nn::Mat::Zero(lstm_.back().hidden, n);
        dh.col(n - 1) = d_encoded;
        for (std::size_t l = lstm_.size(); l-- > 0;) {
            nn::Mat dxs;
            lstm_[l].backward(params, cache.lstm[l], dh, l > 0 ? &dxs : nullptr, g);
            if (l > 0) dh = std::move(dxs);
        }
    } else {
        nn::Vec d = d_encoded;
        for (std::size_t l = enc_dense_.size(); l-- > 0;) {
            const nn::Vec dp = nn::leaky_relu_backward(cache.enc_pre[l], d, config_.leaky_slope);
            const nn::Vec& in = l == 0 ? cache.input : cache.enc_act[l - 1];
            enc_dense_[l].backward(params, in, dp, l > 0 ? &dx : nullptr, g);
            if (l > 0) d = dx;
        }
    }
}

std::vector<std::uint8_t> Network::kink_signature(const Cache& cache) const {
    std::vector<std::uint8_t> sig;
    auto add = [&sig](const auto& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) sig.push_back(m.data()[i] > 0.0 ? 1 : 0);
    };
    for (const auto& v : cache.enc_pre) add(v);
    for (std::size_t l = 0; l < cache.dec_pre.size(); ++l)
        if (!(convs_.empty() && l + 1 == cache.dec_pre.size())) add(cache.dec_pre[l]);
    for (std::size_t l = 0; l + 1 < cache.conv_pre.size(); ++l) add(cache.conv_pre[l]);
    return sig;
}

Network::Output Network::forward(std::span<const double> spacings) const {
    Cache cache;
    forward(spacings, cache);
    Output out{RasterImage(std::move(cache.output)), {}};
    out.latent.assign(cache.latent.data(), cache.latent.data() + cache.latent.size());
    return out;
}

std::vector<double> Network::encode(std::span<const double> spacings) const {
    Cache cache;
    encode_into(spacings, cache);
    return {cache.latent.data(), cache.latent.data() + cache.latent.size()};
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr std::array<char, 4> kCheckpointMagic = {'S', 'D', 'N', 'N'};

void put_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is, std::uint64_t& offset, const char* what) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (is.gcount() != 8) throw FormatError(std::string("truncated checkpoint while reading ") + what, offset);
    offset += 8;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

std::string get_text(std::istream& is, std::uint64_t& offset, const char* what) {
    const std::uint64_t n = get_u64(is, offset, what);
    if (n > (1u << 24)) throw FormatError(std::string("implausible length for ") + what, offset);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(is.gcount()) != n)
        throw FormatError(std::string("truncated checkpoint while reading ") + what, offset);
    offset += n;
    return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net, const KeyValueConfig& echo) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_checkpoint: cannot open " + path.string() + " for writing");
    KeyValueConfig model = net.config().to_config();
    if (!net.input_mean().empty()) {
        model.set("input_mean", net.input_mean());
        model.set("input_std", net.input_std());
    }
    os.write(kCheckpointMagic.data(), 4);
    const std::uint32_t version = Checkpoint::kVersion;
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((version >> (8 * i)) & 0xff));
    const std::string model_text = model.str();
    const std::string echo_text = echo.str();
    put_u64(os, model_text.size());
    os.write(model_text.data(), static_cast<std::streamsize>(model_text.size()));
    put_u64(os, echo_text.size());
    os.write(echo_text.data(), static_cast<std::streamsize>(echo_text.size()));
    put_u64(os, net.param_count());
    for (double p : net.params()) put_u64(os, std::bit_cast<std::uint64_t>(p));
    os.close();
    if (!os) throw Error("save_checkpoint: write to " + path.string() + " failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("load_checkpoint: cannot open " + path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), 4);
    if (is.gcount() != 4 || magic != kCheckpointMagic) throw FormatError("bad magic (expected SDNN)", 0);
    unsigned char vb[4];
    is.read(reinterpret_cast<char*>(vb), 4);
    if (is.gcount() != 4) throw FormatError("truncated checkpoint while reading version", 4);
    const std::uint32_t version = vb[0] | (vb[1] << 8) | (vb[2] << 16) | (static_cast<std::uint32_t>(vb[3]) << 24);
    if (version != Checkpoint::kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    std::uint64_t offset = 8;
    const KeyValueConfig model = KeyValueConfig::parse(get_text(is, offset, "model config"));
    const KeyValueConfig echo = KeyValueConfig::parse(get_text(is, offset, "echo"));

    Network net(ModelConfig::from_config(model, ModelConfig::toy()));
    if (model.has("input_mean"))
        net.set_normalization(model.get_double_list("input_mean", {}), model.get_double_list("input_std", {}));
    const std::uint64_t count = get_u64(is, offset, "parameter count");
    if (count != net.param_count())
        throw FormatError("parameter count " + std::to_string(count) + " does not match the model (" +
                              std::to_string(net.param_count()) + ")",
                          offset - 8);
    for (double& p : net.params()) p = std::bit_cast<double>(get_u64(is, offset, "parameters"));
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after parameters", offset);
    return {std::move(net), echo};
}

}  // namespace drum
