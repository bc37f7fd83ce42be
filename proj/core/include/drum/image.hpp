#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "drum/geometry.hpp"

namespace drum {

/// 41x41 pixel grid over [-2.05, 2.05]^2 with pixel size 0.1.
///
/// Pixel (ix, iy) is centred at ((ix - 20) / 10, (iy - 20) / 10); iy grows
/// with y, so the origin is the centre pixel and D4 acts about it exactly.
class RasterImage {
public:
    static constexpr int kSide = 41;
    static constexpr int kCenter = 20;
    static constexpr std::size_t kPixels = kSide * kSide;
    static constexpr double kPixelSize = 0.1;
    static constexpr double kHalfExtent = 2.0;

    RasterImage() : pixels_(kPixels, 0.0) {}
    explicit RasterImage(std::vector<double> pixels);
    static RasterImage filled(double value);

    double& at(int ix, int iy) { return pixels_[index(ix, iy)]; }
    double at(int ix, int iy) const { return pixels_[index(ix, iy)]; }
    double& operator[](std::size_t i) { return pixels_[i]; }
    double operator[](std::size_t i) const { return pixels_[i]; }

    std::span<double> pixels() noexcept { return pixels_; }
    std::span<const double> pixels() const noexcept { return pixels_; }

    double sum() const;
    std::size_t count_above(double threshold) const;
    bool is_binary() const;

    static constexpr std::size_t index(int ix, int iy) { return static_cast<std::size_t>(iy) * kSide + ix; }
    static constexpr double center_coord(int i) { return (i - kCenter) / 10.0; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::vector<double> pixels_;
};

/// Pixel = 1 iff its centre lies in the polygon (boundary inclusive).
/// Throws GeometryError for degenerate polygons or vertices outside [-2, 2]^2.
RasterImage rasterize(const Polygon& p);

/// Elements of the dihedral group of the square, in tie-break order.
enum class D4 : int { id = 0, r90, r180, r270, fx, fy, d1, d2 };

inline constexpr std::array<D4, 8> kD4Elements = {D4::id, D4::r90, D4::r180, D4::r270,
                                                  D4::fx, D4::fy,  D4::d1,   D4::d2};

/// Integer 2x2 matrix {a, b, c, d} acting on centred pixel offsets (u, v) -> (a u + b v, c u + d v).
/// r90 is a counter-clockwise quarter turn; fx negates x; fy negates y; d1 swaps x and y;
/// d2 maps (x, y) -> (-y, -x).
std::array<int, 4> d4_matrix(D4 g);
/// g o h: apply h first.
D4 d4_compose(D4 g, D4 h);
D4 d4_inverse(D4 g);
std::string_view d4_name(D4 g);

/// Exact pixel permutation: out(p) = img(g^-1 p).
RasterImage d4_transform(const RasterImage& img, D4 g);
/// Index map of d4_transform: out[i] = img[source[i]].
const std::array<std::uint16_t, RasterImage::kPixels>& d4_source_index(D4 g);
/// Same map for a row-major side x side grid (any side >= 1).
std::vector<std::uint32_t> d4_source_index(D4 g, int side);

/// Bilinear resampling of the image rotated counter-clockwise by `radians`
/// about the grid centre. With `reflect`, an x-flip is applied before the
/// rotation. Sources outside the grid read as 0.
RasterImage rotate_image(const RasterImage& img, double radians, bool reflect);

/// Binary PGM (P5), maxval 255, top row = largest y.
void write_pgm(std::ostream& os, const RasterImage& img);
/// Several images side by side with a one-pixel separator column.
void write_pgm_strip(std::ostream& os, std::span<const RasterImage> images);

}  // namespace drum
