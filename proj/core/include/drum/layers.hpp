#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "drum/random.hpp"

// Differentiable building blocks over a flat parameter vector. Each layer
// owns the slice [offset, offset + size()) and accumulates (+=) into the
// matching slice of a gradient vector.
namespace drum::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Vec leaky_relu(const Vec& z, double slope);
/// dy * f'(z) for LeakyReLU; slope 0 gives ReLU.
Vec leaky_relu_backward(const Vec& z, const Vec& dy, double slope);
Vec sigmoid(const Vec& z);

/// y = W x + b with W stored column-major (out x in), then b.
struct Dense {
    int in = 0;
    int out = 0;
    std::size_t offset = 0;

    std::size_t size() const { return static_cast<std::size_t>(in) * out + out; }
    void forward(const double* params, const Vec& x, Vec& y) const;
    void backward(const double* params, const Vec& x, const Vec& dy, Vec* dx, double* grad) const;
    /// Uniform(-limit, limit) weights with limit = gain / sqrt(in); zero bias.
    void init(double* params, Rng& rng, double gain) const;
};

/// Single LSTM layer over a sequence (gate order i, f, g, o). Parameters:
/// Wx (4H x in), Wh (4H x H), b (4H), all column-major.
struct Lstm {
    int in = 0;
    int hidden = 0;
    std::size_t offset = 0;

    struct Cache {
        Mat x;      ///< in x T
        Mat gates;  ///< 4H x T, post-activation
        Mat c;      ///< H x (T + 1), column 0 is the zero initial state
        Mat h;      ///< H x (T + 1)
    };

    std::size_t size() const {
        const auto g = static_cast<std::size_t>(4 * hidden);
        return g * static_cast<std::size_t>(in) + g * static_cast<std::size_t>(hidden) + g;
    }
    void forward(const double* params, const Mat& x, Cache& cache) const;
    /// dh: H x T gradient with respect to every hidden output h_1..h_T.
    void backward(const double* params, const Cache& cache, const Mat& dh, Mat* dx, double* grad) const;
    /// Uniform(+-1/sqrt(H)) weights; forget-gate bias 1.
    void init(double* params, Rng& rng) const;
};

/// Transposed convolution without padding: out = (in - 1) * stride + kernel.
/// Activations are channel x pixel matrices, pixel = row * side + col.
/// Parameters: W (cout*k*k x cin, column-major, row = co*k*k + ky*k + kx), b (cout).
struct TransConv {
    int cin = 0;
    int cout = 0;
    int kernel = 1;
    int stride = 1;
    int in_side = 1;
    std::size_t offset = 0;

    int out_side() const { return (in_side - 1) * stride + kernel; }
    std::size_t size() const {
        return static_cast<std::size_t>(cout) * kernel * kernel * cin + static_cast<std::size_t>(cout);
    }
    void forward(const double* params, const Mat& x, Mat& y) const;
    void backward(const double* params, const Mat& x, const Mat& dy, Mat* dx, double* grad) const;
    /// Uniform(-limit, limit), limit = gain / sqrt(cin * k^2 / stride^2); zero bias.
    void init(double* params, Rng& rng, double gain) const;
};

}  // namespace drum::nn
