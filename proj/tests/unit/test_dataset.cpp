#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "drum/dataset.hpp"
#include "drum/error.hpp"
#include "drum/parallel.hpp"
#include "drum/spectral.hpp"

using namespace drum;

namespace {

DatasetConfig fast_config(std::uint64_t seed = 99) {
    DatasetConfig c;
    c.gen.seed = seed;
    c.fem_h = 0.2;
    c.extrapolate = false;
    c.n_eigs = 10;
    return c;
}

const std::vector<SampleRecord>& fast_records() {
    static const std::vector<SampleRecord> records = generate_records(fast_config(), 200);
    return records;
}

std::string serialize(const DatasetConfig& c, std::span<const SampleRecord> r) {
    std::ostringstream os;
    write_dataset(os, c, r);
    return os.str();
}

Dataset parse(const std::string& bytes) {
    std::istringstream is(bytes);
    return read_dataset(is);
}

constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4 + 4 + 5 * 8 + 1 + 1 + 8;

}  // namespace

TEST(Dataset, SampleIsDeterministic) {
    const auto c = fast_config();
    EXPECT_EQ(make_sample(1234, c), make_sample(1234, c));
    EXPECT_NE(make_sample(1234, c).vertices, make_sample(1235, c).vertices);
}

TEST(Dataset, SampleSanity) {
    constexpr double j0 = 2.404825557695773;
    for (const auto& r : fast_records()) {
        std::size_t set = 0;
        for (auto b : r.image) set += b;
        ASSERT_GE(set, 1u);
        ASSERT_LE(set, 1681u);
        const Polygon p = r.polygon();
        ASSERT_LE(std::abs(set * 0.01 - area(p)), 0.1 * perimeter(p) / 2 + 0.05);
        ASSERT_GT(r.eigenvalues[0], 0.0);
        ASSERT_LT(r.eigenvalues[0], 100.0);
        // Faber-Krahn; conforming FEM eigenvalues lie above the exact ones.
        ASSERT_GE(r.eigenvalues[0], std::numbers::pi * j0 * j0 / area(p));
        const WeylParams w = weyl_params(p);
        ASSERT_EQ(r.weyl[0], w.a);
        ASSERT_EQ(r.weyl[1], w.b);
        ASSERT_EQ(r.weyl[2], w.k);
        ASSERT_EQ(r.vertices[1], 0.0);
    }
}

TEST(Dataset, GenerationIndependentOfWorkerCount) {
    set_worker_count(1);
    const auto one = generate_records(fast_config(5), 12);
    set_worker_count(4);
    const auto four = generate_records(fast_config(5), 12);
    set_worker_count(0);
    EXPECT_EQ(one, four);
}

TEST(Dataset, RoundTrip) {
    const auto c = fast_config();
    const std::span<const SampleRecord> first(fast_records().data(), 100);
    const std::string bytes = serialize(c, first);
    EXPECT_EQ(bytes.size(), kHeaderBytes + 100 * (8 + 80 + 10 * 8 + 24 + 1681));
    const Dataset d = parse(bytes);
    EXPECT_EQ(d.header.count, 100u);
    EXPECT_EQ(d.header.n_eigs, 10u);
    EXPECT_EQ(d.header.config, c);
    ASSERT_EQ(d.records.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) ASSERT_EQ(d.records[i], first[i]);
    EXPECT_EQ(serialize(c, d.records), bytes);
    EXPECT_TRUE(verify_dataset(d).empty());
}

TEST(Dataset, EmptyDataset) {
    const std::string bytes = serialize(fast_config(), {});
    EXPECT_EQ(bytes.size(), kHeaderBytes);
    const Dataset d = parse(bytes);
    EXPECT_TRUE(d.records.empty());
    EXPECT_TRUE(verify_dataset(d).empty());
}

TEST(Dataset, MalformedFiles) {
    const std::string bytes = serialize(fast_config(), std::span<const SampleRecord>(fast_records().data(), 5));
    const std::size_t rec = (bytes.size() - kHeaderBytes) / 5;
    try {
        parse(bytes.substr(0, kHeaderBytes + 3 * rec + 17));
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.record(), 3);
        EXPECT_NE(std::string(e.what()).find("record 3"), std::string::npos);
    }
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(parse(bad), FormatError);
    bad = bytes;
    bad[4] = 9;  // version
    EXPECT_THROW(parse(bad), FormatError);
    EXPECT_THROW(parse(bytes + "x"), FormatError);
    EXPECT_THROW(parse(bytes.substr(0, 10)), FormatError);
    bad = bytes;
    bad[kHeaderBytes + rec - 1] = 7;  // image byte outside {0, 1}
    EXPECT_THROW(parse(bad), FormatError);
}

TEST(Dataset, VerifyFindsCorruption) {
    Dataset d;
    d.header.n_eigs = 10;
    d.header.config = fast_config();
    d.records.assign(fast_records().begin(), fast_records().begin() + 6);
    d.header.count = 6;
    d.records[2].image[800] ^= 1;
    d.records[4].weyl[1] += 1e-9;
    d.records[5].eigenvalues[3] = d.records[5].eigenvalues[2] * 0.5;
    const auto issues = verify_dataset(d);
    ASSERT_EQ(issues.size(), 3u);
    EXPECT_EQ(issues[0].record, 2u);
    EXPECT_EQ(issues[1].record, 4u);
    EXPECT_EQ(issues[2].record, 5u);

    Dataset ok;
    ok.header = d.header;
    ok.records.assign(fast_records().begin(), fast_records().begin() + 6);
    VerifyOptions o;
    o.recompute_spectra = 3;
    EXPECT_TRUE(verify_dataset(ok, o).empty());
    ok.records[1].eigenvalues[0] *= 1.0 + 1e-6;
    EXPECT_EQ(verify_dataset(ok, o).size(), 1u);
}

TEST(Dataset, Split) {
    const Split s = split(100, {0.8, 0.2, 0.0}, 3);
    EXPECT_EQ(s.train.size(), 80u);
    EXPECT_EQ(s.val.size(), 20u);
    EXPECT_EQ(s.test.size(), 0u);
    const Split again = split(100, {0.8, 0.2, 0.0}, 3);
    EXPECT_EQ(s.train, again.train);
    EXPECT_EQ(s.val, again.val);
    std::vector<int> seen(100, 0);
    for (auto i : s.train) seen[i]++;
    for (auto i : s.val) seen[i]++;
    for (int v : seen) EXPECT_EQ(v, 1);
    EXPECT_THROW(split(10, {0.8, 0.5, 0.0}, 1), ConfigError);
    EXPECT_THROW(split(10, {-0.1, 0.5, 0.0}, 1), ConfigError);
}

TEST(Dataset, ConfigValidation) {
    KeyValueConfig c;
    c.set("angle_min", 2.0);
    c.set("angle_max", 1.0);
    try {
        DatasetConfig::from_config(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_TRUE(e.field() == "angle_min" || e.field() == "angle_max");
    }
    KeyValueConfig h;
    h.set("fem_h", -1.0);
    EXPECT_THROW(DatasetConfig::from_config(h), ConfigError);
    const DatasetConfig d = fast_config();
    EXPECT_EQ(DatasetConfig::from_config(d.to_config()), d);
}

TEST(Dataset, CsvExports) {
    const std::span<const SampleRecord> two(fast_records().data(), 2);
    std::ostringstream spectra, weyl;
    write_spectra_csv(spectra, two);
    write_weyl_params_csv(weyl, two);
    EXPECT_EQ(spectra.str().substr(0, spectra.str().find('\n')), "record,seed,index,eigenvalue");
    EXPECT_EQ(weyl.str().substr(0, weyl.str().find('\n')), "record,seed,a,b,k");
    const std::string text = spectra.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 21);
}
