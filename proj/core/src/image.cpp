#include "drum/image.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "drum/error.hpp"

namespace drum {

RasterImage::RasterImage(std::vector<double> pixels) : pixels_(std::move(pixels)) {
    if (pixels_.size() != kPixels) throw ShapeError("RasterImage: expected 41x41 pixels");
}

RasterImage RasterImage::filled(double value) { return RasterImage(std::vector<double>(kPixels, value)); }

double RasterImage::sum() const {
    double s = 0.0;
    for (double v : pixels_) s += v;
    return s;
}

std::size_t RasterImage::count_above(double threshold) const {
    return static_cast<std::size_t>(std::count_if(pixels_.begin(), pixels_.end(), [&](double v) { return v > threshold; }));
}

bool RasterImage::is_binary() const {
    return std::all_of(pixels_.begin(), pixels_.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

RasterImage rasterize(const Polygon& p) {
    if (p.size() < 3 || area(p) < 1e-14) throw GeometryError("rasterize: degenerate polygon");
    for (const Point& v : p.vertices()) {
        if (!(std::abs(v.x) <= RasterImage::kHalfExtent && std::abs(v.y) <= RasterImage::kHalfExtent))
            throw GeometryError("rasterize: vertex outside the [-2, 2]^2 window");
    }
    RasterImage img;
    for (int iy = 0; iy < RasterImage::kSide; ++iy) {
        const double y = RasterImage::center_coord(iy);
        for (int ix = 0; ix < RasterImage::kSide; ++ix) {
            if (contains(p, {RasterImage::center_coord(ix), y})) img.at(ix, iy) = 1.0;
        }
    }
    return img;
}

std::array<int, 4> d4_matrix(D4 g) {
    switch (g) {
        case D4::id: return {1, 0, 0, 1};
        case D4::r90: return {0, -1, 1, 0};
        case D4::r180: return {-1, 0, 0, -1};
        case D4::r270: return {0, 1, -1, 0};
        case D4::fx: return {-1, 0, 0, 1};
        case D4::fy: return {1, 0, 0, -1};
        case D4::d1: return {0, 1, 1, 0};
        case D4::d2: return {0, -1, -1, 0};
    }
    return {1, 0, 0, 1};
}

D4 d4_compose(D4 g, D4 h) {
    const auto a = d4_matrix(g);
    const auto b = d4_matrix(h);
    const std::array<int, 4> m = {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
                                  a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
    for (D4 e : kD4Elements)
        if (d4_matrix(e) == m) return e;
    return D4::id;  // unreachable: D4 is closed
}

D4 d4_inverse(D4 g) {
    for (D4 e : kD4Elements)
        if (d4_compose(g, e) == D4::id) return e;
    return D4::id;
}

std::string_view d4_name(D4 g) {
    static constexpr std::array<std::string_view, 8> names = {"id", "r90", "r180", "r270", "fx", "fy", "d1", "d2"};
    return names[static_cast<int>(g)];
}

namespace {

std::array<std::array<std::uint16_t, RasterImage::kPixels>, 8> build_d4_tables() {
    std::array<std::array<std::uint16_t, RasterImage::kPixels>, 8> tables{};
    for (D4 g : kD4Elements) {
        const auto m = d4_matrix(d4_inverse(g));
        auto& table = tables[static_cast<int>(g)];
        for (int iy = 0; iy < RasterImage::kSide; ++iy) {
            for (int ix = 0; ix < RasterImage::kSide; ++ix) {
                const int u = ix - RasterImage::kCenter;
                const int v = iy - RasterImage::kCenter;
                const int su = m[0] * u + m[1] * v + RasterImage::kCenter;
                const int sv = m[2] * u + m[3] * v + RasterImage::kCenter;
                table[RasterImage::index(ix, iy)] = static_cast<std::uint16_t>(RasterImage::index(su, sv));
            }
        }
    }
    return tables;
}

double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

const std::array<std::uint16_t, RasterImage::kPixels>& d4_source_index(D4 g) {
    static const auto tables = build_d4_tables();
    return tables[static_cast<int>(g)];
}

std::vector<std::uint32_t> d4_source_index(D4 g, int side) {
    if (side < 1) throw Error("d4_source_index: side must be positive");
    // Doubled offsets keep the centre on the lattice for even sides.
    const auto m = d4_matrix(d4_inverse(g));
    const int c = side - 1;
    std::vector<std::uint32_t> table(static_cast<std::size_t>(side) * side);
    for (int iy = 0; iy < side; ++iy) {
        for (int ix = 0; ix < side; ++ix) {
            const int u = 2 * ix - c;
            const int v = 2 * iy - c;
            const int sx = (m[0] * u + m[1] * v + c) / 2;
            const int sy = (m[2] * u + m[3] * v + c) / 2;
            table[static_cast<std::size_t>(iy) * side + ix] = static_cast<std::uint32_t>(sy * side + sx);
        }
    }
    return table;
}

RasterImage d4_transform(const RasterImage& img, D4 g) {
    const auto& src = d4_source_index(g);
    RasterImage out;
    for (std::size_t i = 0; i < RasterImage::kPixels; ++i) out[i] = img[src[i]];
    return out;
}

RasterImage rotate_image(const RasterImage& img, double radians, bool reflect) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    auto sample = [&](int ix, int iy) {
        if (ix < 0 || iy < 0 || ix >= RasterImage::kSide || iy >= RasterImage::kSide) return 0.0;
        return img.at(ix, iy);
    };
    RasterImage out;
    for (int iy = 0; iy < RasterImage::kSide; ++iy) {
        for (int ix = 0; ix < RasterImage::kSide; ++ix) {
            const double u = ix - RasterImage::kCenter;
            const double v = iy - RasterImage::kCenter;
            // Inverse map: undo the rotation, then undo the x-flip.
            double su = c * u + s * v;
            const double sv = snap(-s * u + c * v);
            if (reflect) su = -su;
            su = snap(su);
            const double x = su + RasterImage::kCenter;
            const double y = sv + RasterImage::kCenter;
            const int x0 = static_cast<int>(std::floor(x));
            const int y0 = static_cast<int>(std::floor(y));
            const double tx = x - x0;
            const double ty = y - y0;
            double value = (1.0 - tx) * (1.0 - ty) * sample(x0, y0);
            if (tx > 0.0) value += tx * (1.0 - ty) * sample(x0 + 1, y0);
            if (ty > 0.0) value += (1.0 - tx) * ty * sample(x0, y0 + 1);
            if (tx > 0.0 && ty > 0.0) value += tx * ty * sample(x0 + 1, y0 + 1);
            out.at(ix, iy) = std::clamp(value, 0.0, 1.0);
        }
    }
    return out;
}

namespace {

unsigned char to_gray(double v) {
    return static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

}  // namespace

void write_pgm(std::ostream& os, const RasterImage& img) {
    os << "P5\n" << RasterImage::kSide << ' ' << RasterImage::kSide << "\n255\n";
    for (int iy = RasterImage::kSide - 1; iy >= 0; --iy)
        for (int ix = 0; ix < RasterImage::kSide; ++ix) os.put(static_cast<char>(to_gray(img.at(ix, iy))));
}

void write_pgm_strip(std::ostream& os, std::span<const RasterImage> images) {
    const int n = static_cast<int>(images.size());
    const int width = n == 0 ? 0 : n * RasterImage::kSide + (n - 1);
    os << "P5\n" << width << ' ' << RasterImage::kSide << "\n255\n";
    for (int iy = RasterImage::kSide - 1; iy >= 0; --iy) {
        for (int k = 0; k < n; ++k) {
            if (k > 0) os.put(static_cast<char>(128));
            for (int ix = 0; ix < RasterImage::kSide; ++ix)
                os.put(static_cast<char>(to_gray(images[k].at(ix, iy))));
        }
    }
}

}  // namespace drum
