#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "drum_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(DRUM_CLI) + " " + args + " > " + (workdir() / "stdout.txt").string() +
                            " 2> " + (workdir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

// ctest runs each test in its own process, so every test writes what it needs.
std::string fast_cfg() {
    std::ofstream(path("fast.cfg")) << "fem_h = 0.2\nextrapolate = false\nn_eigs = 12\n";
    return path("fast.cfg");
}

}  // namespace

TEST(Cli, VersionAndUsage) {
    EXPECT_EQ(run("--version"), 0);
    EXPECT_NE(slurp(workdir() / "stdout.txt").find("dataset format 1"), std::string::npos);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("gen --count 3"), 2);
    EXPECT_EQ(run("gen --count x -o " + path("x.sdrm")), 2);
}

TEST(Cli, GenIsDeterministicAndValidates) {
    ASSERT_EQ(run("gen --config " + fast_cfg() + " --count 6 --seed 7 -o " + path("a.sdrm")), 0);
    ASSERT_EQ(run("--threads 1 gen --config " + path("fast.cfg") + " --count 6 --seed 7 -o " + path("b.sdrm")), 0);
    EXPECT_EQ(slurp(path("a.sdrm")), slurp(path("b.sdrm")));
    EXPECT_TRUE(fs::exists(path("a.sdrm.config")));
    EXPECT_EQ(run("verify --data " + path("a.sdrm")), 0);
    EXPECT_EQ(run("verify --data " + path("a.sdrm") + " --recompute-spectra 2"), 0);

    ASSERT_EQ(run("gen --count 0 -o " + path("empty.sdrm")), 0);
    EXPECT_EQ(run("verify --data " + path("empty.sdrm")), 0);

    std::ofstream(path("bad.cfg")) << "angle_min = 2\nangle_max = 1\n";
    EXPECT_EQ(run("gen --config " + path("bad.cfg") + " --count 1 -o " + path("c.sdrm")), 2);
    EXPECT_NE(slurp(workdir() / "stderr.txt").find("angle_m"), std::string::npos);
    std::ofstream(path("typo.cfg")) << "fem_hh = 0.1\n";
    EXPECT_EQ(run("gen --config " + path("typo.cfg") + " --count 1 -o " + path("c.sdrm")), 2);
    EXPECT_EQ(run("gen --count 1 -o /proc/forbidden/x.sdrm"), 1);
}

TEST(Cli, VerifyNamesCorruptedRecord) {
    ASSERT_EQ(run("gen --config " + fast_cfg() + " --count 4 --seed 3 -o " + path("v.sdrm")), 0);
    std::string bytes = slurp(path("v.sdrm"));
    const std::size_t header = 74, record = 8 + 80 + 12 * 8 + 24 + 1681;
    ASSERT_EQ(bytes.size(), header + 4 * record);
    bytes[header + 2 * record + 8 + 80 + 12 * 8 + 24 + 840] ^= 1;  // flip a pixel of record 2
    std::ofstream(path("v_bad.sdrm"), std::ios::binary) << bytes;
    EXPECT_EQ(run("verify --data " + path("v_bad.sdrm")), 1);
    EXPECT_NE(slurp(workdir() / "stderr.txt").find("record 2"), std::string::npos);
    std::ofstream(path("v_trunc.sdrm"), std::ios::binary) << bytes.substr(0, header + record + 100);
    EXPECT_EQ(run("verify --data " + path("v_trunc.sdrm")), 1);
    EXPECT_NE(slurp(workdir() / "stderr.txt").find("record 1"), std::string::npos);
    EXPECT_EQ(run("verify --data " + path("missing.sdrm")), 1);
}

TEST(Cli, TrainEvalAndFriends) {
    ASSERT_EQ(run("gen --config " + fast_cfg() + " --count 30 --seed 5 -o " + path("t.sdrm")), 0);
    std::ofstream(path("model.cfg")) << "input_length = 12\nepochs = 2\nbatch_size = 8\n";
    const std::string out = path("run");
    ASSERT_EQ(run("--threads 1 train --config " + path("model.cfg") + " --data " + path("t.sdrm") + " -o " + out), 0);
    for (const char* f : {"checkpoint.sdnn", "training.csv", "summary.csv", "config.txt"})
        EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
    const std::string ck = out + "/checkpoint.sdnn";
    ASSERT_EQ(run("eval --checkpoint " + ck + " --data " + path("t.sdrm") + " -o " + path("eval")), 0);
    for (const char* f : {"cdf.csv", "losses.csv", "good.pgm", "mediocre.pgm", "bad.pgm", "triptych.pgm",
                          "weyl_deltas.csv", "rotation.csv", "summary.csv", "config.txt"})
        EXPECT_TRUE(fs::exists(fs::path(path("eval")) / f)) << f;
    EXPECT_EQ(slurp(path("eval") + "/cdf.csv").substr(0, 9), "loss,cdf\n");
    ASSERT_EQ(run("scale-exp --checkpoint " + ck + " --data " + path("t.sdrm") + " --s 0.5,1.0,1.5,2.0,2.5 -o " +
                  path("scale")),
              0);
    EXPECT_NE(slurp(path("scale") + "/scaling_fit.csv").find("area_exponent,"), std::string::npos);
    std::ofstream(path("probe.cfg")) << "probe_epochs = 5\n";
    ASSERT_EQ(run("probe --config " + path("probe.cfg") + " --checkpoint " + ck + " --data " + path("t.sdrm") +
                  " --layers 0,1 --s 0.5,1,2 -o " + path("probe")),
              0);
    EXPECT_TRUE(fs::exists(path("probe") + "/probe.csv"));
    EXPECT_TRUE(fs::exists(path("probe") + "/probe_scaling_fit.csv"));
    ASSERT_EQ(run("export --data " + path("t.sdrm") + " --images 3 -o " + path("export")), 0);
    EXPECT_TRUE(fs::exists(path("export") + "/images/record_000002.pgm"));
    EXPECT_TRUE(fs::exists(path("export") + "/spectra.csv"));

    EXPECT_EQ(run("eval --checkpoint " + path("none.sdnn") + " --data " + path("t.sdrm") + " -o " + path("e2")), 1);
    EXPECT_EQ(run("scale-exp --checkpoint " + ck + " --data " + path("t.sdrm") + " --s 1,-2 -o " + path("s2")), 2);
}

TEST(Cli, FemValidate) {
    EXPECT_EQ(run("fem-validate --h 0.2 --gww-eigs 5 -o " + path("val")), 0);
    const std::string csv = slurp(path("val") + "/validation.csv");
    EXPECT_EQ(csv.substr(0, 30), "check,measured,tolerance,pass\n");
    EXPECT_EQ(csv.find(",0\n"), std::string::npos);
    EXPECT_EQ(run("fem-validate --h 0.5"), 2);
}
