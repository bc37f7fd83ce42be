// Reference implementations used only by tests. They are written for
// clarity and share no code with the library versions they check.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "drum/geometry.hpp"
#include "drum/image.hpp"
#include "drum/random.hpp"

namespace oracle {

/// Image of the centred offset (u, v) under D4 element index g.
inline std::pair<int, int> d4_apply(int g, int u, int v) {
    switch (g) {
        case 0: return {u, v};
        case 1: return {-v, u};
        case 2: return {-u, -v};
        case 3: return {v, -u};
        case 4: return {-u, v};
        case 5: return {u, -v};
        case 6: return {v, u};
        default: return {-v, -u};
    }
}

/// Pushes every pixel forward: out[g q] = img[q]. Side must be odd.
inline std::vector<double> d4_push(const std::vector<double>& img, int side, int g) {
    const int c = side / 2;
    std::vector<double> out(img.size());
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            auto [u, v] = d4_apply(g, x - c, y - c);
            out[static_cast<std::size_t>((v + c) * side + (u + c))] = img[static_cast<std::size_t>(y * side + x)];
        }
    return out;
}

inline double jaccard(const std::vector<double>& p, const std::vector<double>& q) {
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        num += static_cast<long double>(p[i]) * q[i];
        den += static_cast<long double>(p[i]) * p[i] + static_cast<long double>(q[i]) * q[i] -
               static_cast<long double>(p[i]) * q[i];
    }
    // Sums are exact for 8-bit pixel values, so a final double division makes
    // the oracle bit-comparable there.
    return static_cast<double>(num) / static_cast<double>(den);
}

/// Exhaustive min over the 8 elements of 1 - J(g pred, truth); first minimizer wins.
inline std::pair<double, int> d4_loss(const std::vector<double>& pred, const std::vector<double>& truth, int side) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int g = 0; g < 8; ++g) {
        const double l = 1.0 - jaccard(d4_push(pred, side, g), truth);
        if (l < best) {
            best = l;
            arg = g;
        }
    }
    return {best, arg};
}

/// Winding-number inclusion with an explicit on-segment test for the boundary.
inline bool inside(const drum::Polygon& p, double x, double y) {
    const std::size_t n = p.size();
    int wn = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = p[i];
        const auto b = p[(i + 1) % n];
        const double cr = (b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y);
        const bool within = std::min(a.x, b.x) - 1e-12 <= x && x <= std::max(a.x, b.x) + 1e-12 &&
                            std::min(a.y, b.y) - 1e-12 <= y && y <= std::max(a.y, b.y) + 1e-12;
        if (std::abs(cr) <= 1e-12 && within) return true;
        if (a.y <= y) {
            if (b.y > y && cr > 0) ++wn;
        } else if (b.y <= y && cr < 0) {
            --wn;
        }
    }
    return wn != 0;
}

inline std::vector<double> random_image(drum::Rng& rng, std::size_t n, double density = 0.5, bool binary = false) {
    std::vector<double> img(n);
    for (auto& v : img) v = binary ? (rng.uniform() < density ? 1.0 : 0.0) : (rng.uniform() < density ? rng.uniform() : 0.0);
    return img;
}

/// Pixel values on the 8-bit grid k / 256.
inline std::vector<double> random_image_8bit(drum::Rng& rng, std::size_t n, double density = 0.5) {
    std::vector<double> img(n);
    for (auto& v : img) v = rng.uniform() < density ? static_cast<double>(1 + rng.below(256)) / 256.0 : 0.0;
    return img;
}

}  // namespace oracle
