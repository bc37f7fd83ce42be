#include "drum/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "drum/error.hpp"
#include "drum/fem.hpp"
#include "drum/parallel.hpp"

namespace drum {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'D', 'R', 'M'};

constexpr std::array<std::string_view, 9> kConfigKeys = {
    "radius_min", "radius_max", "angle_min", "angle_max", "seed", "fem_h", "extrapolate", "normalize", "n_eigs"};

// Byte-level little-endian IO, independent of host order.
class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(const void* data, std::size_t n) { os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }

private:
    void le(std::uint64_t v, int n) {
        char buf[8];
        for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        os_.write(buf, n);
    }
    std::ostream& os_;
};

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    std::uint64_t offset() const { return offset_; }
    void set_record(std::int64_t r) { record_ = r; }

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1, "u8")); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4, "u32")); }
    std::uint64_t u64() { return le(8, "u64"); }
    double f64() { return std::bit_cast<double>(le(8, "f64")); }
    void bytes(void* data, std::size_t n, const char* what) {
        is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) truncated(what);
        offset_ += n;
    }
    bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

    [[noreturn]] void fail(const std::string& message) const { throw FormatError(message, offset_, record_); }

private:
    [[noreturn]] void truncated(const char* what) const {
        throw FormatError(std::string("truncated file while reading ") + what, offset_, record_);
    }

    std::uint64_t le(int n, const char* what) {
        unsigned char buf[8];
        is_.read(reinterpret_cast<char*>(buf), n);
        if (is_.gcount() != n) truncated(what);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        offset_ += static_cast<std::uint64_t>(n);
        return v;
    }

    std::istream& is_;
    std::uint64_t offset_ = 0;
    std::int64_t record_ = FormatError::kNoRecord;
};

bool inside_window(const Polygon& p) {
    for (const Point& v : p.vertices())
        if (std::abs(v.x) > RasterImage::kHalfExtent || std::abs(v.y) > RasterImage::kHalfExtent) return false;
    return true;
}

}  // namespace

void DatasetConfig::validate() const {
    gen.validate();
    if (!(fem_h > 0.0)) throw ConfigError("fem_h", "must be positive");
    if (n_eigs < 1) throw ConfigError("n_eigs", "must be at least 1");
}

std::span<const std::string_view> DatasetConfig::keys() { return kConfigKeys; }

DatasetConfig DatasetConfig::from_config(const KeyValueConfig& c) {
    DatasetConfig d;
    d.gen.radius_min = c.get_double("radius_min", d.gen.radius_min);
    d.gen.radius_max = c.get_double("radius_max", d.gen.radius_max);
    d.gen.angle_min = c.get_double("angle_min", d.gen.angle_min);
    d.gen.angle_max = c.get_double("angle_max", d.gen.angle_max);
    d.gen.seed = c.get_u64("seed", d.gen.seed);
    d.fem_h = c.get_double("fem_h", d.fem_h);
    d.extrapolate = c.get_bool("extrapolate", d.extrapolate);
    d.normalize = c.get_bool("normalize", d.normalize);
    const long long n = c.get_int("n_eigs", d.n_eigs);
    if (n < 1 || n > 100000) throw ConfigError("n_eigs", "must be in [1, 100000]");
    d.n_eigs = static_cast<std::uint32_t>(n);
    d.validate();
    return d;
}

KeyValueConfig DatasetConfig::to_config() const {
    KeyValueConfig c;
    c.set("radius_min", gen.radius_min);
    c.set("radius_max", gen.radius_max);
    c.set("angle_min", gen.angle_min);
    c.set("angle_max", gen.angle_max);
    c.set("seed", gen.seed);
    c.set("fem_h", fem_h);
    c.set("extrapolate", extrapolate);
    c.set("normalize", normalize);
    c.set("n_eigs", static_cast<long long>(n_eigs));
    return c;
}

Polygon SampleRecord::polygon() const {
    std::vector<Point> pts(5);
    for (int i = 0; i < 5; ++i) pts[i] = {vertices[2 * i], vertices[2 * i + 1]};
    return Polygon(std::move(pts));
}

RasterImage SampleRecord::raster() const {
    if (image.size() != RasterImage::kPixels) throw ShapeError("SampleRecord: image must have 41x41 pixels");
    std::vector<double> px(image.begin(), image.end());
    return RasterImage(std::move(px));
}

std::uint64_t candidate_seed(std::uint64_t base_seed, std::uint64_t j) { return splitmix64(base_seed ^ splitmix64(j)); }

SampleRecord make_sample(std::uint64_t seed, const DatasetConfig& config, int* rejections) {
    constexpr int kMaxRedraws = 10000;
    Rng rng(seed);
    Polygon canonical;
    int redraws = 0;
    for (;; ++redraws) {
        if (redraws == kMaxRedraws)
            throw GeometryError("make_sample: seed " + std::to_string(seed) + " never produced an in-window shape");
        canonical = canonicalize(generate_pentagon(config.gen, rng));
        if (inside_window(canonical)) break;
    }
    if (rejections) *rejections = redraws;

    SampleRecord r;
    r.seed = seed;
    for (int i = 0; i < 5; ++i) {
        r.vertices[2 * i] = canonical[i].x;
        r.vertices[2 * i + 1] = canonical[i].y;
    }
    try {
        const Spectrum s = spectrum_of(canonical, static_cast<int>(config.n_eigs), config.fem_h, config.extrapolate);
        r.eigenvalues.assign(s.values().begin(), s.values().end());
    } catch (const FemError& e) {
        throw FemError("seed " + std::to_string(seed) + ": " + e.what());
    }
    const WeylParams w = weyl_params(canonical);
    r.weyl = {w.a, w.b, w.k};
    const RasterImage img = rasterize(canonical);
    r.image.resize(RasterImage::kPixels);
    for (std::size_t i = 0; i < RasterImage::kPixels; ++i) r.image[i] = img[i] > 0.5 ? 1 : 0;
    return r;
}

std::vector<SampleRecord> generate_records(const DatasetConfig& config, std::size_t count, GenerationLog* log,
                                           const std::function<void(std::size_t)>& progress) {
    config.validate();
    std::vector<SampleRecord> out;
    out.reserve(count);
    std::uint64_t next = 0;
    while (out.size() < count) {
        // Over-provision a wave so failures rarely need another round; keep
        // the first successes in candidate order.
        const std::size_t wave = std::max<std::size_t>(count - out.size(), worker_count());
        std::vector<SampleRecord> results(wave);
        std::vector<int> ok(wave, 0), rejected(wave, 0);
        parallel_for(wave, [&](std::size_t i) {
            try {
                results[i] = make_sample(candidate_seed(config.gen.seed, next + i), config, &rejected[i]);
                ok[i] = 1;
            } catch (const FemError&) {
                ok[i] = 0;
            } catch (const GeometryError&) {
                ok[i] = 0;
            }
        });
        for (std::size_t i = 0; i < wave && out.size() < count; ++i) {
            if (log) log->rejected += static_cast<std::size_t>(rejected[i]);
            if (ok[i])
                out.push_back(std::move(results[i]));
            else if (log)
                log->failed_seeds.push_back(candidate_seed(config.gen.seed, next + i));
        }
        next += wave;
        if (progress) progress(out.size());
    }
    return out;
}

void write_dataset(std::ostream& os, const DatasetConfig& config, std::span<const SampleRecord> records) {
    Writer w(os);
    w.bytes(kMagic.data(), kMagic.size());
    w.u32(DatasetHeader::kVersion);
    w.u64(records.size());
    w.u32(config.n_eigs);
    w.u32(RasterImage::kSide);
    w.f64(config.gen.radius_min);
    w.f64(config.gen.radius_max);
    w.f64(config.gen.angle_min);
    w.f64(config.gen.angle_max);
    w.f64(config.fem_h);
    w.u8(config.extrapolate ? 1 : 0);
    w.u8(config.normalize ? 1 : 0);
    w.u64(config.gen.seed);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SampleRecord& r = records[i];
        if (r.eigenvalues.size() != config.n_eigs || r.image.size() != RasterImage::kPixels)
            throw ShapeError("write_dataset: record " + std::to_string(i) + " does not match the header shape");
        w.u64(r.seed);
        for (double v : r.vertices) w.f64(v);
        for (double v : r.eigenvalues) w.f64(v);
        for (double v : r.weyl) w.f64(v);
        w.bytes(r.image.data(), r.image.size());
    }
    if (!os) throw Error("write_dataset: write failed");
}

void write_dataset(const std::filesystem::path& path, const DatasetConfig& config,
                   std::span<const SampleRecord> records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_dataset: cannot open " + path.string() + " for writing");
    write_dataset(os, config, records);
    os.close();
    if (!os) throw Error("write_dataset: write to " + path.string() + " failed");
}

Dataset read_dataset(std::istream& is) {
    Reader r(is);
    Dataset d;
    std::array<char, 4> magic{};
    r.bytes(magic.data(), magic.size(), "magic");
    if (magic != kMagic) throw FormatError("bad magic (expected SDRM)", 0);
    d.header.version = r.u32();
    if (d.header.version != DatasetHeader::kVersion)
        throw FormatError("unsupported dataset version " + std::to_string(d.header.version), 4);
    d.header.count = r.u64();
    d.header.n_eigs = r.u32();
    d.header.grid = r.u32();
    if (d.header.grid != RasterImage::kSide) r.fail("unsupported grid size " + std::to_string(d.header.grid));
    if (d.header.n_eigs < 1 || d.header.n_eigs > 100000) r.fail("implausible n_eigs " + std::to_string(d.header.n_eigs));
    DatasetConfig& c = d.header.config;
    c.gen.radius_min = r.f64();
    c.gen.radius_max = r.f64();
    c.gen.angle_min = r.f64();
    c.gen.angle_max = r.f64();
    c.fem_h = r.f64();
    c.extrapolate = r.u8() != 0;
    c.normalize = r.u8() != 0;
    c.gen.seed = r.u64();
    c.n_eigs = d.header.n_eigs;

    const std::size_t pixels = RasterImage::kPixels;
    for (std::uint64_t i = 0; i < d.header.count; ++i) {
        r.set_record(static_cast<std::int64_t>(i));
        SampleRecord rec;
        rec.seed = r.u64();
        for (double& v : rec.vertices) v = r.f64();
        rec.eigenvalues.resize(d.header.n_eigs);
        for (double& v : rec.eigenvalues) v = r.f64();
        for (double& v : rec.weyl) v = r.f64();
        rec.image.resize(pixels);
        r.bytes(rec.image.data(), pixels, "image");
        for (std::uint8_t b : rec.image)
            if (b > 1) r.fail("image byte is not 0 or 1");
        d.records.push_back(std::move(rec));
    }
    r.set_record(FormatError::kNoRecord);
    if (!r.at_end()) r.fail("trailing bytes after the last record");
    return d;
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("read_dataset: cannot open " + path.string());
    return read_dataset(is);
}

std::vector<VerifyIssue> verify_dataset(const Dataset& data, const VerifyOptions& options) {
    std::vector<VerifyIssue> issues;
    if (data.header.count != data.records.size())
        issues.push_back({0, "header count " + std::to_string(data.header.count) + " differs from record count"});

    std::vector<std::vector<std::string>> found(data.records.size());
    parallel_for(data.records.size(), [&](std::size_t i) {
        const SampleRecord& r = data.records[i];
        auto& msgs = found[i];
        if (r.eigenvalues.size() != data.header.n_eigs) msgs.push_back("eigenvalue count differs from header");
        for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) {
            if (!(r.eigenvalues[k] > 0.0) || (k > 0 && r.eigenvalues[k] < r.eigenvalues[k - 1])) {
                msgs.push_back("eigenvalues are not positive and ascending");
                break;
            }
        }
        Polygon p;
        try {
            p = r.polygon();
            if (!is_simple(p) || !is_ccw(p)) throw GeometryError("polygon is not simple and counter-clockwise");
            const Polygon again = canonicalize(p);
            double drift = 0.0;
            for (std::size_t v = 0; v < 5; ++v) drift = std::max(drift, distance(again[v], p[v]));
            if (drift > 1e-9) msgs.push_back("vertices are not in canonical gauge (drift " + format_real(drift) + ")");
            if (r.vertices[1] != 0.0) msgs.push_back("vertex 0 is not on the positive x axis");
        } catch (const Error& e) {
            msgs.push_back(std::string("invalid polygon: ") + e.what());
            return;
        }
        try {
            const RasterImage img = rasterize(p);
            bool same = r.image.size() == RasterImage::kPixels;
            for (std::size_t k = 0; same && k < RasterImage::kPixels; ++k)
                same = (img[k] > 0.5 ? 1 : 0) == r.image[k];
            if (!same) msgs.push_back("image differs from rasterize(vertices)");
        } catch (const Error& e) {
            msgs.push_back(std::string("cannot rasterize: ") + e.what());
        }
        const WeylParams w = weyl_params(p);
        const std::array<double, 3> expect = {w.a, w.b, w.k};
        for (int k = 0; k < 3; ++k)
            if (!(std::abs(expect[k] - r.weyl[k]) <= 1e-10)) {
                msgs.push_back("weyl field " + std::to_string(k) + " differs from geometry");
                break;
            }
        if (i < options.recompute_spectra) {
            const DatasetConfig& c = data.header.config;
            const Spectrum s = spectrum_of(p, static_cast<int>(data.header.n_eigs), c.fem_h, c.extrapolate);
            for (std::size_t k = 0; k < s.size() && k < r.eigenvalues.size(); ++k) {
                if (std::abs(s[k] - r.eigenvalues[k]) > options.spectrum_rel_tol * s[k]) {
                    msgs.push_back("eigenvalue " + std::to_string(k + 1) + " differs from a fresh FEM solve");
                    break;
                }
            }
        }
    });
    for (std::size_t i = 0; i < found.size(); ++i)
        for (auto& m : found[i]) issues.push_back({i, std::move(m)});
    return issues;
}

Split split(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
    double total = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) throw ConfigError("fractions", "must be non-negative");
        total += f;
    }
    if (total > 1.0 + 1e-12) throw ConfigError("fractions", "must sum to at most 1");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::array<std::size_t, 3> sizes{};
    std::size_t left = n;
    for (int k = 0; k < 3; ++k) {
        sizes[k] = std::min(left, static_cast<std::size_t>(std::llround(fractions[k] * static_cast<double>(n))));
        left -= sizes[k];
    }
    Split s;
    auto take = [&, pos = std::size_t{0}](std::vector<std::size_t>& dst, std::size_t count) mutable {
        dst.assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + count));
        pos += count;
    };
    take(s.train, sizes[0]);
    take(s.val, sizes[1]);
    take(s.test, sizes[2]);
    return s;
}

void write_spectra_csv(std::ostream& os, std::span<const SampleRecord> records) {
    os << "record,seed,index,eigenvalue\n";
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t k = 0; k < records[i].eigenvalues.size(); ++k)
            os << i << ',' << records[i].seed << ',' << (k + 1) << ',' << format_real(records[i].eigenvalues[k]) << '\n';
}

void write_weyl_params_csv(std::ostream& os, std::span<const SampleRecord> records) {
    os << "record,seed,a,b,k\n";
    for (std::size_t i = 0; i < records.size(); ++i)
        os << i << ',' << records[i].seed << ',' << format_real(records[i].weyl[0]) << ','
           << format_real(records[i].weyl[1]) << ',' << format_real(records[i].weyl[2]) << '\n';
}

}  // namespace drum
