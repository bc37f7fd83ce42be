#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "drum/config.hpp"
#include "drum/image.hpp"
#include "drum/layers.hpp"

namespace drum {

enum class EncoderKind { lstm, dense };

/// Architecture of the spacings -> latent -> image network.
///
/// Decoder: dense stack (LeakyReLU), reshape to `maps` channels of
/// map_side x map_side, transposed convolutions (ReLU, last one sigmoid), and a
/// centre crop to 41 x 41. With no convolutions the last dense layer must have
/// 1681 units and takes the sigmoid instead.
struct ModelConfig {
    int input_length = 100;
    EncoderKind encoder = EncoderKind::lstm;
    /// LSTM layer widths, or dense layer widths for the dense encoder.
    std::vector<int> encoder_widths = {32};
    int latent = 10;
    std::vector<int> decoder_dense = {50, 256, 800};
    int maps = 32;
    int map_side = 5;
    std::vector<int> conv_channels = {16, 8, 4, 1};
    std::vector<int> conv_kernels = {3, 3, 3, 1};
    std::vector<int> conv_strides = {2, 2, 2, 1};
    double leaky_slope = 0.3;
    /// Standardize each input position with training-set statistics.
    bool normalize_inputs = false;
    std::uint64_t init_seed = 1;

    /// Desk-scale default.
    static ModelConfig toy();
    /// Full published architecture (3 x 128 LSTM, dense 50/512/1024/3200, 128 maps).
    static ModelConfig full();
    /// Toy decoder behind a dense 128 -> 128 encoder.
    static ModelConfig dense_encoder();
    /// Two linear maps (input -> latent -> 1681) and a sigmoid; no kinks.
    static ModelConfig linear();

    /// Side of the final transposed-convolution output before cropping.
    int decoder_side() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;

    static ModelConfig from_config(const KeyValueConfig& c);
    /// Starts from `base` and overrides the keys present in `c`.
    static ModelConfig from_config(const KeyValueConfig& c, const ModelConfig& base);
    KeyValueConfig to_config() const;
    static std::span<const std::string_view> keys();

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

class Network {
public:
    /// Values kept from a forward pass for backpropagation.
    struct Cache {
        nn::Vec input;
        std::vector<nn::Lstm::Cache> lstm;
        std::vector<nn::Vec> enc_pre, enc_act;
        nn::Vec encoded;
        nn::Vec latent;
        std::vector<nn::Vec> dec_pre, dec_act;
        std::vector<nn::Mat> conv_in, conv_pre;
        /// 1681 sigmoid outputs in RasterImage order.
        std::vector<double> output;
    };

    struct Output {
        RasterImage image;
        std::vector<double> latent;
    };

    explicit Network(ModelConfig config);

    const ModelConfig& config() const noexcept { return config_; }
    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }
    std::size_t param_count() const noexcept { return params_.size(); }
    /// Reinitializes every parameter from `seed`.
    void initialize(std::uint64_t seed);

    void set_normalization(std::vector<double> mean, std::vector<double> stddev);
    const std::vector<double>& input_mean() const noexcept { return mean_; }
    const std::vector<double>& input_std() const noexcept { return std_; }

    /// Throws ShapeError when the input length differs from the config.
    Output forward(std::span<const double> spacings) const;
    std::vector<double> encode(std::span<const double> spacings) const;
    void forward(std::span<const double> spacings, Cache& cache) const;
    /// Accumulates dLoss/dparams into `grad` given dLoss/doutput.
    void backward(const Cache& cache, std::span<const double> d_output, std::span<double> grad) const;

    /// Sign pattern of every piecewise-linear pre-activation, for kink detection.
    std::vector<std::uint8_t> kink_signature(const Cache& cache) const;

private:
    void encode_into(std::span<const double> spacings, Cache& cache) const;

    ModelConfig config_;
    std::vector<nn::Lstm> lstm_;
    std::vector<nn::Dense> enc_dense_;
    nn::Dense to_latent_;
    std::vector<nn::Dense> dec_dense_;
    std::vector<nn::TransConv> convs_;
    std::vector<double> params_;
    std::vector<double> mean_, std_;
};

struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;
    Network network;
    /// Training settings and anything else echoed by the writer.
    KeyValueConfig echo;
};

/// "SDNN" magic, u32 version, u64 length + config text (model, normalization,
/// echo), u64 count + little-endian f64 parameters in layer order.
void save_checkpoint(const std::filesystem::path& path, const Network& net, const KeyValueConfig& echo = {});
/// Throws FormatError for malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drum
