#include <gtest/gtest.h>

#include "drum/config.hpp"
#include "drum/error.hpp"
#include "drum/parallel.hpp"

#include <atomic>
#include <stdexcept>

using namespace drum;

TEST(Config, ParseAndTypedGetters) {
    const auto c = KeyValueConfig::parse(
        "# comment\n"
        "seed = 17\n"
        "  fem_h=0.05   # trailing\n"
        "\n"
        "extrapolate = false\n"
        "encoder_widths = 32, 64\n"
        "name = toy\n");
    EXPECT_EQ(c.get_u64("seed", 0), 17u);
    EXPECT_DOUBLE_EQ(c.get_double("fem_h", 0), 0.05);
    EXPECT_FALSE(c.get_bool("extrapolate", true));
    EXPECT_EQ(c.get_int_list("encoder_widths", {}), (std::vector<int>{32, 64}));
    EXPECT_EQ(c.get_string("name", ""), "toy");
    EXPECT_EQ(c.get_int("missing", 5), 5);
}

TEST(Config, BadValuesNameTheField) {
    const auto c = KeyValueConfig::parse("fem_h = abc\nflag = maybe\nn = 1.5\n");
    try {
        (void)c.get_double("fem_h", 0);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "fem_h");
    }
    EXPECT_THROW((void)c.get_bool("flag", false), ConfigError);
    EXPECT_THROW((void)c.get_int("n", 0), ConfigError);
    EXPECT_THROW(KeyValueConfig::parse("novalue\n"), ConfigError);
}

TEST(Config, WriteParseRoundTrip) {
    KeyValueConfig c;
    c.set("b", 0.1);
    c.set("a", 3);
    c.set("list", std::vector<double>{0.5, 1.0});
    c.set("flag", true);
    const auto back = KeyValueConfig::parse(c.str());
    EXPECT_EQ(back, c);
    EXPECT_DOUBLE_EQ(back.get_double("b", 0), 0.1);
    EXPECT_EQ(c.str().substr(0, 6), "a = 3\n");
}

TEST(Config, UnknownKeys) {
    const auto c = KeyValueConfig::parse("seed = 1\nsede = 2\n");
    const std::array<std::string_view, 1> known = {"seed"};
    EXPECT_EQ(c.unknown_keys(known), (std::vector<std::string>{"sede"}));
}

TEST(Config, RealList) {
    EXPECT_EQ(parse_real_list("s", "0.5,1.0, 2.5"), (std::vector<double>{0.5, 1.0, 2.5}));
    EXPECT_THROW(parse_real_list("s", "0.5,,1"), ConfigError);
    EXPECT_THROW(parse_real_list("s", "x"), ConfigError);
}

TEST(Parallel, CoversEveryIndexOnce) {
    set_worker_count(3);
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 7) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
    set_worker_count(0);
}
