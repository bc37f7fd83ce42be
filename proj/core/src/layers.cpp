#include "drum/layers.hpp"

#include <algorithm>
#include <cmath>

namespace drum::nn {

namespace {

using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;
using CVMap = Eigen::Map<const Vec>;
using VMap = Eigen::Map<Vec>;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void fill_uniform(double* p, std::size_t n, Rng& rng, double limit) {
    for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform(-limit, limit);
}

}  // namespace

Vec leaky_relu(const Vec& z, double slope) {
    return z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

Vec leaky_relu_backward(const Vec& z, const Vec& dy, double slope) {
    Vec out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = z(i) > 0.0 ? dy(i) : slope * dy(i);
    return out;
}

Vec sigmoid(const Vec& z) { return z.unaryExpr([](double v) { return logistic(v); }); }

// ---------------------------------------------------------------- Dense

void Dense::forward(const double* params, const Vec& x, Vec& y) const {
    const CMap w(params + offset, out, in);
    const CVMap b(params + offset + static_cast<std::size_t>(in) * out, out);
    y.noalias() = w * x;
    y += b;
}

void Dense::backward(const double* params, const Vec& x, const Vec& dy, Vec* dx, double* grad) const {
    MMap gw(grad + offset, out, in);
    VMap gb(grad + offset + static_cast<std::size_t>(in) * out, out);
    gw.noalias() += dy * x.transpose();
    gb += dy;
    if (dx) {
        const CMap w(params + offset, out, in);
        dx->noalias() = w.transpose() * dy;
    }
}

void Dense::init(double* params, Rng& rng, double gain) const {
    fill_uniform(params + offset, static_cast<std::size_t>(in) * out, rng, gain / std::sqrt(static_cast<double>(in)));
    std::fill_n(params + offset + static_cast<std::size_t>(in) * out, out, 0.0);
}

// ---------------------------------------------------------------- LSTM

void Lstm::forward(const double* params, const Mat& x, Cache& cache) const {
    const int g4 = 4 * hidden;
    const CMap wx(params + offset, g4, in);
    const CMap wh(params + offset + static_cast<std::size_t>(g4) * in, g4, hidden);
    const CVMap b(params + offset + static_cast<std::size_t>(g4) * (in + hidden), g4);
    const Eigen::Index steps = x.cols();

    cache.x = x;
    cache.gates.resize(g4, steps);
    cache.gates.noalias() = wx * x;
    cache.c = Mat::Zero(hidden, steps + 1);
    cache.h = Mat::Zero(hidden, steps + 1);
    Vec z(g4);
    for (Eigen::Index t = 0; t < steps; ++t) {
        z = cache.gates.col(t) + b;
        z.noalias() += wh * cache.h.col(t);
        for (int k = 0; k < hidden; ++k) {
            const double i = logistic(z(k));
            const double f = logistic(z(hidden + k));
            const double g = std::tanh(z(2 * hidden + k));
            const double o = logistic(z(3 * hidden + k));
            const double c = f * cache.c(k, t) + i * g;
            cache.gates(k, t) = i;
            cache.gates(hidden + k, t) = f;
            cache.gates(2 * hidden + k, t) = g;
            cache.gates(3 * hidden + k, t) = o;
            cache.c(k, t + 1) = c;
            cache.h(k, t + 1) = o * std::tanh(c);
        }
    }
}

void Lstm::backward(const double* params, const Cache& cache, const Mat& dh, Mat* dx, double* grad) const {
    const int g4 = 4 * hidden;
    const std::size_t wh_off = offset + static_cast<std::size_t>(g4) * in;
    const std::size_t b_off = wh_off + static_cast<std::size_t>(g4) * hidden;
    const CMap wx(params + offset, g4, in);
    const CMap wh(params + wh_off, g4, hidden);
    const Eigen::Index steps = cache.x.cols();

    Mat dz(g4, steps);
    Vec dh_next = Vec::Zero(hidden);
    Vec dc_next = Vec::Zero(hidden);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        for (int k = 0; k < hidden; ++k) {
            const double i = cache.gates(k, t);
            const double f = cache.gates(hidden + k, t);
            const double g = cache.gates(2 * hidden + k, t);
            const double o = cache.gates(3 * hidden + k, t);
            const double tc = std::tanh(cache.c(k, t + 1));
            const double dhk = dh(k, t) + dh_next(k);
            const double dc = dc_next(k) + dhk * o * (1.0 - tc * tc);
            dz(k, t) = dc * g * i * (1.0 - i);
            dz(hidden + k, t) = dc * cache.c(k, t) * f * (1.0 - f);
            dz(2 * hidden + k, t) = dc * i * (1.0 - g * g);
            dz(3 * hidden + k, t) = dhk * tc * o * (1.0 - o);
            dc_next(k) = dc * f;
        }
        dh_next.noalias() = wh.transpose() * dz.col(t);
    }

    MMap gwx(grad + offset, g4, in);
    MMap gwh(grad + wh_off, g4, hidden);
    VMap gb(grad + b_off, g4);
    gwx.noalias() += dz * cache.x.transpose();
    gwh.noalias() += dz * cache.h.leftCols(steps).transpose();
    gb += dz.rowwise().sum();
    if (dx) dx->noalias() = wx.transpose() * dz;
}

void Lstm::init(double* params, Rng& rng) const {
    const std::size_t g4 = static_cast<std::size_t>(4 * hidden);
    const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill_uniform(params + offset, g4 * static_cast<std::size_t>(in + hidden), rng, limit);
    double* b = params + offset + g4 * static_cast<std::size_t>(in + hidden);
    std::fill_n(b, g4, 0.0);
    std::fill_n(b + hidden, hidden, 1.0);
}

// ---------------------------------------------------------------- TransConv

void TransConv::forward(const double* params, const Mat& x, Mat& y) const {
    const int kk = kernel * kernel;
    const CMap w(params + offset, cout * kk, cin);
    const CVMap b(params + offset + static_cast<std::size_t>(cout) * kk * cin, cout);
    const int os = out_side();

    const Mat cols = w * x;  // (cout*k*k) x (in_side^2)
    y = Mat::Zero(cout, static_cast<Eigen::Index>(os) * os);
    for (int r = 0; r < in_side; ++r) {
        for (int c = 0; c < in_side; ++c) {
            const int p = r * in_side + c;
            for (int co = 0; co < cout; ++co) {
                for (int ky = 0; ky < kernel; ++ky) {
                    const int base = (r * stride + ky) * os + c * stride;
                    const int row = co * kk + ky * kernel;
                    for (int kx = 0; kx < kernel; ++kx) y(co, base + kx) += cols(row + kx, p);
                }
            }
        }
    }
    y.colwise() += b;
}

void TransConv::backward(const double* params, const Mat& x, const Mat& dy, Mat* dx, double* grad) const {
    const int kk = kernel * kernel;
    const std::size_t b_off = offset + static_cast<std::size_t>(cout) * kk * cin;
    const int os = out_side();

    Mat dcols(cout * kk, static_cast<Eigen::Index>(in_side) * in_side);
    for (int r = 0; r < in_side; ++r) {
        for (int c = 0; c < in_side; ++c) {
            const int p = r * in_side + c;
            for (int co = 0; co < cout; ++co) {
                for (int ky = 0; ky < kernel; ++ky) {
                    const int base = (r * stride + ky) * os + c * stride;
                    const int row = co * kk + ky * kernel;
                    for (int kx = 0; kx < kernel; ++kx) dcols(row + kx, p) = dy(co, base + kx);
                }
            }
        }
    }
    MMap gw(grad + offset, cout * kk, cin);
    VMap gb(grad + b_off, cout);
    gw.noalias() += dcols * x.transpose();
    gb += dy.rowwise().sum();
    if (dx) {
        const CMap w(params + offset, cout * kk, cin);
        dx->noalias() = w.transpose() * dcols;
    }
}

void TransConv::init(double* params, Rng& rng, double gain) const {
    const double fan_in = static_cast<double>(cin) * kernel * kernel / (static_cast<double>(stride) * stride);
    const std::size_t n = static_cast<std::size_t>(cout) * kernel * kernel * cin;
    fill_uniform(params + offset, n, rng, gain / std::sqrt(std::max(1.0, fan_in)));
    std::fill_n(params + offset + n, cout, 0.0);
}

}  // namespace drum::nn
