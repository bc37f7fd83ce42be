#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "drum/config.hpp"
#include "drum/geometry.hpp"
#include "drum/image.hpp"
#include "drum/spectral.hpp"

namespace drum {

/// Settings for sample generation, echoed into every dataset header.
struct DatasetConfig {
    GenConfig gen;
    double fem_h = 0.03;
    bool extrapolate = true;
    /// Recorded for downstream training; the stored spacings are never normalized.
    bool normalize = false;
    std::uint32_t n_eigs = 100;

    void validate() const;
    static DatasetConfig from_config(const KeyValueConfig& c);
    KeyValueConfig to_config() const;
    static std::span<const std::string_view> keys();

    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct SampleRecord {
    std::uint64_t seed = 0;
    /// Canonical vertices x0, y0, x1, y1, ...
    std::array<double, 10> vertices{};
    std::vector<double> eigenvalues;
    /// area / 4pi, perimeter / 4pi, corner constant.
    std::array<double, 3> weyl{};
    /// 41 x 41 pixels, 0 or 1, row-major with row 0 at the lowest y.
    std::vector<std::uint8_t> image;

    Polygon polygon() const;
    RasterImage raster() const;
    WeylParams weyl_params() const { return {weyl[0], weyl[1], weyl[2]}; }

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetHeader {
    static constexpr std::uint32_t kVersion = 1;
    std::uint32_t version = kVersion;
    std::uint64_t count = 0;
    std::uint32_t n_eigs = 100;
    std::uint32_t grid = RasterImage::kSide;
    DatasetConfig config;

    friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Dataset {
    DatasetHeader header;
    std::vector<SampleRecord> records;
};

/// Deterministic record for `seed`. Canonical shapes leaving [-2, 2]^2 are
/// redrawn from the same stream; `rejections` (optional) counts them.
/// FEM failures throw FemError with the seed in the message.
SampleRecord make_sample(std::uint64_t seed, const DatasetConfig& config, int* rejections = nullptr);

/// Seed of the j-th candidate sample of a run.
std::uint64_t candidate_seed(std::uint64_t base_seed, std::uint64_t j);

struct GenerationLog {
    std::size_t rejected = 0;
    std::vector<std::uint64_t> failed_seeds;
};

/// The first `count` successful candidates in order, generated in parallel.
/// Independent of the worker count. `progress` receives the number finished.
std::vector<SampleRecord> generate_records(const DatasetConfig& config, std::size_t count, GenerationLog* log = nullptr,
                                           const std::function<void(std::size_t)>& progress = {});

/// Little-endian "SDRM" format. Throws Error when the stream fails.
void write_dataset(std::ostream& os, const DatasetConfig& config, std::span<const SampleRecord> records);
void write_dataset(const std::filesystem::path& path, const DatasetConfig& config,
                   std::span<const SampleRecord> records);
/// Throws FormatError with byte offset (and record index) on malformed input.
Dataset read_dataset(std::istream& is);
Dataset read_dataset(const std::filesystem::path& path);

struct VerifyIssue {
    std::size_t record = 0;
    std::string message;
};

struct VerifyOptions {
    /// Recompute the spectrum of this many leading records (0 = skip).
    std::size_t recompute_spectra = 0;
    double spectrum_rel_tol = 1e-8;
};

/// Checks every SampleRecord invariant; empty result means the dataset is valid.
std::vector<VerifyIssue> verify_dataset(const Dataset& data, const VerifyOptions& options = {});

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) cut into disjoint parts of sizes round(f_i n)
/// (clipped so the parts fit). Fractions must be non-negative with sum <= 1.
Split split(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed);

/// CSV "record,seed,index,eigenvalue" (index 1-based).
void write_spectra_csv(std::ostream& os, std::span<const SampleRecord> records);
/// CSV "record,seed,a,b,k".
void write_weyl_params_csv(std::ostream& os, std::span<const SampleRecord> records);

}  // namespace drum
