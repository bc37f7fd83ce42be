// drum: dataset generation, FEM validation, training and analysis.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drum/config.hpp"
#include "drum/dataset.hpp"
#include "drum/error.hpp"
#include "drum/experiments.hpp"
#include "drum/network.hpp"
#include "drum/parallel.hpp"
#include "drum/probe.hpp"
#include "drum/training.hpp"
#include "drum/validation.hpp"

namespace fs = std::filesystem;
using namespace drum;

namespace {

constexpr const char* kToolVersion = "0.1.0";

/// Loads `path` (if given) and rejects keys that no component understands.
KeyValueConfig load_config(const std::string& path) {
    KeyValueConfig c;
    if (!path.empty()) {
        if (!fs::exists(path)) throw ConfigError("config", "file not found: " + path);
        c = KeyValueConfig::load(path);
    }
    std::vector<std::string_view> known;
    for (auto keys : {DatasetConfig::keys(), ModelConfig::keys(), TrainConfig::keys(), ProbeConfig::keys()})
        known.insert(known.end(), keys.begin(), keys.end());
    const auto unknown = c.unknown_keys(known);
    if (!unknown.empty()) throw ConfigError(unknown.front(), "unknown configuration key");
    return c;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    return os;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

void echo_config(const fs::path& path, const KeyValueConfig& c) {
    auto os = open_out(path);
    c.write(os);
}

template <class Summary>
void write_summary(const fs::path& path, const Summary& rows) {
    auto os = open_out(path);
    os << "quantity,value\n";
    for (const auto& [k, v] : rows) os << k << ',' << format_real(v) << '\n';
}

std::vector<SampleRecord> gather(const std::vector<SampleRecord>& all, const std::vector<std::size_t>& idx) {
    std::vector<SampleRecord> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

Dataset load_data(const std::string& path) {
    if (!fs::exists(path)) throw Error("dataset not found: " + path);
    return read_dataset(fs::path(path));
}

Checkpoint load_model(const std::string& path) {
    if (!fs::exists(path)) throw Error("checkpoint not found: " + path);
    return load_checkpoint(fs::path(path));
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    std::string config, out;
    std::size_t count = 0;
    std::optional<std::uint64_t> seed;
    std::optional<double> h;
    std::optional<std::uint32_t> n_eigs;
};

int run_gen(const GenArgs& a) {
    KeyValueConfig c = load_config(a.config);
    if (a.seed) c.set("seed", *a.seed);
    if (a.h) c.set("fem_h", *a.h);
    if (a.n_eigs) c.set("n_eigs", static_cast<std::uint64_t>(*a.n_eigs));
    const DatasetConfig cfg = DatasetConfig::from_config(c);

    const fs::path out(a.out);
    if (out.has_parent_path()) make_dir(out.parent_path());
    auto os = open_out(out);  // fail early on an unwritable path

    GenerationLog log;
    std::size_t next_report = 1;
    const auto progress = [&](std::size_t done) {
        if (done * 10 >= next_report * a.count) {
            std::cerr << "gen: " << done << '/' << a.count << " samples\n";
            next_report = done * 10 / a.count + 1;
        }
    };
    const auto records = generate_records(cfg, a.count, &log, progress);
    write_dataset(os, cfg, records);
    os.close();
    if (!os) throw Error("write failed: " + out.string());
    echo_config(fs::path(out.string() + ".config"), cfg.to_config());
    std::cerr << "gen: wrote " << records.size() << " records to " << out.string() << " (rejected " << log.rejected
              << ", FEM failures " << log.failed_seeds.size() << ")\n";
    for (auto s : log.failed_seeds) std::cerr << "gen: FEM failure for seed " << s << '\n';
    return 0;
}

// ---------------------------------------------------------------- fem-validate

struct ValidateArgs {
    double h = 0.05;
    bool no_extrapolate = false;
    int gww_eigs = 20;
    bool skip_gww = false;
    std::string out;
};

int run_validate(const ValidateArgs& a) {
    ValidationOptions o;
    o.h = a.h;
    o.extrapolate = !a.no_extrapolate;
    o.gww_eigenvalues = a.gww_eigs;
    o.run_gww = !a.skip_gww;
    const auto rows = fem_validate(o);
    write_validation_csv(std::cout, rows);
    if (!a.out.empty()) {
        make_dir(a.out);
        auto os = open_out(fs::path(a.out) / "validation.csv");
        write_validation_csv(os, rows);
        KeyValueConfig echo;
        echo.set("h", o.h);
        echo.set("extrapolate", o.extrapolate);
        echo.set("gww_eigenvalues", o.gww_eigenvalues);
        echo.set("run_gww", o.run_gww);
        echo_config(fs::path(a.out) / "config.txt", echo);
    }
    const bool ok = std::all_of(rows.begin(), rows.end(), [](const ValidationRow& r) { return r.pass; });
    std::cerr << "fem-validate: " << (ok ? "all checks passed" : "FAILED") << '\n';
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string config, data, out, model;
    std::optional<int> epochs;
    std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
    KeyValueConfig c = load_config(a.config);
    if (!a.model.empty()) c.set("model", a.model);
    if (a.epochs) c.set("epochs", *a.epochs);
    if (a.seed) c.set("train_seed", *a.seed);
    const ModelConfig model = ModelConfig::from_config(c);
    const TrainConfig tc = TrainConfig::from_config(c);

    const Dataset data = load_data(a.data);
    if (data.records.size() < 2) throw Error("train: need at least 2 records");
    const double vf = tc.validation_fraction;
    const Split parts = split(data.records.size(), {1.0 - vf, vf, 0.0}, tc.seed);
    const auto train_set = gather(data.records, parts.train);
    const auto val_set = gather(data.records, parts.val);

    make_dir(a.out);
    const fs::path dir(a.out);
    KeyValueConfig echo = model.to_config();
    echo.merge(tc.to_config());
    echo.set("data", fs::path(a.data).lexically_normal().string());
    echo_config(dir / "config.txt", echo);

    Network net(model);
    const auto report = train(net, train_set, val_set, tc, [](const EpochRow& r) {
        std::cerr << "epoch " << r.epoch << "  train " << format_real(r.train_loss) << "  val "
                  << format_real(r.val_loss) << '\n';
    });
    {
        auto os = open_out(dir / "training.csv");
        write_training_csv(os, report.epochs);
    }
    save_checkpoint(dir / "checkpoint.sdnn", net, echo);

    const ConstantBaseline base = constant_image_baseline(train_set);
    const double base_val = val_set.empty() ? 0.0 : mean_constant_loss(base.image, val_set);
    std::vector<std::pair<std::string, double>> summary = {
        {"train_samples", static_cast<double>(train_set.size())},
        {"val_samples", static_cast<double>(val_set.size())},
        {"first_train_loss", report.epochs.empty() ? 0.0 : report.epochs.front().train_loss},
        {"final_train_loss", report.epochs.empty() ? 0.0 : report.epochs.back().train_loss},
        {"best_epoch", static_cast<double>(report.best_epoch)},
        {"best_val_loss", report.best_val_loss},
        {"constant_baseline_val_loss", base_val},
        {"diverged", report.diverged ? 1.0 : 0.0},
    };
    write_summary(dir / "summary.csv", summary);
    std::cerr << "train: best val loss " << format_real(report.best_val_loss) << " at epoch " << report.best_epoch
              << " (constant baseline " << format_real(base_val) << ")\n";
    return report.diverged ? 1 : 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string checkpoint, data, out;
    double fraction = 0.1;
};

int run_eval(const EvalArgs& a) {
    if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw ConfigError("fraction", "must lie in (0, 1]");
    const Checkpoint ck = load_model(a.checkpoint);
    const Dataset data = load_data(a.data);
    if (data.records.empty()) throw Error("eval: dataset is empty");
    const auto predictor = network_predictor(ck.network);
    const EvalReport report = evaluate(predictor, data.records);

    make_dir(a.out);
    const fs::path dir(a.out);
    KeyValueConfig echo = ck.echo;
    echo.set("checkpoint", fs::path(a.checkpoint).lexically_normal().string());
    echo.set("eval_data", fs::path(a.data).lexically_normal().string());
    echo.set("worst_fraction", a.fraction);
    echo_config(dir / "config.txt", echo);
    {
        auto os = open_out(dir / "cdf.csv");
        write_cdf_csv(os, report.losses);
    }
    {
        auto os = open_out(dir / "losses.csv");
        write_losses_csv(os, report, data.records);
    }
    write_example_images(dir, predictor, report, data.records);
    {
        const auto deltas = weyl_preservation_diagnostic(predictor, data.records, a.fraction);
        auto os = open_out(dir / "weyl_deltas.csv");
        write_weyl_delta_csv(os, deltas);
    }
    {
        const auto rows = rotation_analysis(predictor, data.records, report, a.fraction);
        auto os = open_out(dir / "rotation.csv");
        write_rotation_csv(os, rows);
    }
    std::vector<std::pair<std::string, double>> summary = {
        {"samples", static_cast<double>(report.losses.size())},
        {"mean_loss", report.mean},
        {"good_record", static_cast<double>(report.good)},
        {"mediocre_record", static_cast<double>(report.mediocre)},
        {"bad_record", static_cast<double>(report.bad)},
    };
    write_summary(dir / "summary.csv", summary);
    std::cerr << "eval: mean loss " << format_real(report.mean) << " over " << report.losses.size() << " samples\n";
    return 0;
}

// ---------------------------------------------------------------- probe

struct ProbeArgs {
    std::string config, checkpoint, data, out, targets = "weyl,vertices,edges_angles", layers, s;
    double test_fraction = 0.2;
};

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    return out;
}

int run_probe(const ProbeArgs& a) {
    if (!(a.test_fraction > 0.0 && a.test_fraction < 1.0)) throw ConfigError("test_fraction", "must lie in (0, 1)");
    const KeyValueConfig c = load_config(a.config);
    const ProbeConfig base = ProbeConfig::from_config(c);
    std::vector<ProbeTarget> targets;
    for (const auto& name : split_names(a.targets)) targets.push_back(parse_probe_target(name));
    if (targets.empty()) throw ConfigError("targets", "no probe targets given");
    std::vector<int> layers = {base.hidden_layers};
    if (!a.layers.empty()) {
        layers.clear();
        for (double v : parse_real_list("layers", a.layers)) {
            if (v != static_cast<int>(v)) throw ConfigError("layers", "must be integers");
            layers.push_back(static_cast<int>(v));
        }
    }
    const std::vector<double> S = a.s.empty() ? std::vector<double>{} : parse_real_list("s", a.s);

    const Checkpoint ck = load_model(a.checkpoint);
    const Dataset data = load_data(a.data);
    const Split parts = split(data.records.size(), {1.0 - a.test_fraction, a.test_fraction, 0.0}, base.seed);
    const auto train_set = gather(data.records, parts.train);
    const auto test_set = gather(data.records, parts.val);
    if (train_set.empty() || test_set.empty()) throw Error("probe: dataset too small to split");

    make_dir(a.out);
    const fs::path dir(a.out);
    KeyValueConfig echo = c;
    echo.set("checkpoint", fs::path(a.checkpoint).lexically_normal().string());
    echo.set("probe_data", fs::path(a.data).lexically_normal().string());
    echo.set("targets", a.targets);
    echo.set("layers", layers);
    echo.set("test_fraction", a.test_fraction);
    if (!S.empty()) echo.set("s", S);
    echo_config(dir / "config.txt", echo);

    std::vector<ProbeReport> reports;
    std::optional<ProbeResult> weyl_probe;
    for (ProbeTarget t : targets)
        for (int n : layers) {
            ProbeConfig pc = base;
            pc.target = t;
            pc.hidden_layers = n;
            ProbeResult r = probe_train(ck.network, train_set, test_set, pc);
            std::cerr << "probe: " << probe_target_name(t) << " with " << n << " hidden layers: mean error "
                      << format_real(100.0 * r.report.mean_error) << "%\n";
            reports.push_back(r.report);
            if (t == ProbeTarget::weyl && n == base.hidden_layers) weyl_probe.emplace(std::move(r));
        }
    {
        auto os = open_out(dir / "probe.csv");
        write_probe_csv(os, reports);
    }
    if (!S.empty()) {
        if (!weyl_probe) {
            ProbeConfig pc = base;
            pc.target = ProbeTarget::weyl;
            weyl_probe.emplace(probe_train(ck.network, train_set, test_set, pc));
        }
        const auto scaling = probe_scaling(weyl_probe_predictor(ck.network, weyl_probe->probe), test_set, S);
        auto os = open_out(dir / "probe_scaling.csv");
        write_probe_scaling_csv(os, scaling);
        auto fit = open_out(dir / "probe_scaling_fit.csv");
        write_probe_scaling_fit_csv(fit, scaling);
    }
    return 0;
}

// ---------------------------------------------------------------- scale-exp

struct ScaleArgs {
    std::string checkpoint, data, out, s = "0.5,1.0,1.5,2.0,2.5";
};

int run_scale(const ScaleArgs& a) {
    const std::vector<double> S = parse_real_list("s", a.s);
    if (S.size() < 2) throw ConfigError("s", "need at least two scale factors");
    for (double v : S)
        if (!(v > 0.0)) throw ConfigError("s", "scale factors must be positive");
    const Checkpoint ck = load_model(a.checkpoint);
    const Dataset data = load_data(a.data);
    if (data.records.empty()) throw Error("scale-exp: dataset is empty");
    const ScalingReport report = scaling_experiment(network_predictor(ck.network), data.records, S);

    make_dir(a.out);
    const fs::path dir(a.out);
    KeyValueConfig echo = ck.echo;
    echo.set("checkpoint", fs::path(a.checkpoint).lexically_normal().string());
    echo.set("scale_data", fs::path(a.data).lexically_normal().string());
    echo.set("s", S);
    echo_config(dir / "config.txt", echo);
    {
        auto os = open_out(dir / "scaling.csv");
        write_scaling_csv(os, report);
    }
    std::vector<std::pair<std::string, double>> summary = {
        {"area_exponent", report.exponent},
        {"samples", static_cast<double>(data.records.size())},
    };
    write_summary(dir / "scaling_fit.csv", summary);
    std::cerr << "scale-exp: area exponent " << format_real(report.exponent) << '\n';
    return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::string data;
    std::size_t recompute = 0;
};

int run_verify(const VerifyArgs& a) {
    const Dataset data = load_data(a.data);
    VerifyOptions o;
    o.recompute_spectra = a.recompute;
    const auto issues = verify_dataset(data, o);
    for (const auto& i : issues) std::cerr << "verify: record " << i.record << ": " << i.message << '\n';
    if (!issues.empty()) {
        std::cerr << "verify: " << issues.size() << " problem(s) found\n";
        return 1;
    }
    std::cout << "verify: " << data.records.size() << " records OK\n";
    return 0;
}

// ---------------------------------------------------------------- export

struct ExportArgs {
    std::string data, out;
    std::size_t images = 10;
};

int run_export(const ExportArgs& a) {
    const Dataset data = load_data(a.data);
    make_dir(a.out);
    const fs::path dir(a.out);
    echo_config(dir / "config.txt", data.header.config.to_config());
    {
        auto os = open_out(dir / "spectra.csv");
        write_spectra_csv(os, data.records);
    }
    {
        auto os = open_out(dir / "weyl.csv");
        write_weyl_params_csv(os, data.records);
    }
    {
        auto os = open_out(dir / "polygons.csv");
        os << "record,seed,vertex,x,y\n";
        for (std::size_t r = 0; r < data.records.size(); ++r)
            for (std::size_t v = 0; v < 5; ++v)
                os << r << ',' << data.records[r].seed << ',' << v << ',' << format_real(data.records[r].vertices[2 * v])
                   << ',' << format_real(data.records[r].vertices[2 * v + 1]) << '\n';
    }
    const std::size_t n = std::min(a.images, data.records.size());
    if (n > 0) make_dir(dir / "images");
    for (std::size_t r = 0; r < n; ++r) {
        char name[32];
        std::snprintf(name, sizeof name, "record_%06zu.pgm", r);
        auto os = open_out(dir / "images" / name);
        write_pgm(os, data.records[r].raster());
    }
    std::cerr << "export: " << data.records.size() << " records, " << n << " images\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hearing the shape of polygonal drums: spectra, training and analysis"};
    // "--h" is the mesh-size option, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version",
                         std::string("drum ") + kToolVersion + "\ndataset format " +
                             std::to_string(DatasetHeader::kVersion) + "\ncheckpoint format " +
                             std::to_string(Checkpoint::kVersion));
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: DRUM_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a dataset of random pentagons");
    g->add_option("--config", gen.config, "Key-value configuration file");
    g->add_option("--count", gen.count, "Number of samples")->required();
    g->add_option("--out,-o", gen.out, "Output dataset file")->required();
    g->add_option("--seed", gen.seed, "Base seed (overrides the config)");
    g->add_option("--h", gen.h, "FEM mesh size (overrides the config)");
    g->add_option("--n-eigs", gen.n_eigs, "Eigenvalues per sample (overrides the config)");

    ValidateArgs val;
    auto* v = app.add_subcommand("fem-validate", "Check the FEM solver against analytic and isospectral references");
    v->add_option("--h", val.h, "Mesh size (at most 0.3)");
    v->add_flag("--no-extrapolate", val.no_extrapolate, "Use the single-mesh spectrum");
    v->add_option("--gww-eigs", val.gww_eigs, "Eigenvalues compared on the isospectral pair");
    v->add_flag("--skip-gww", val.skip_gww, "Skip the isospectral-pair check");
    v->add_option("--out,-o", val.out, "Directory for validation.csv");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train the encoder-decoder network");
    t->add_option("--config", tr.config, "Key-value configuration file");
    t->add_option("--data", tr.data, "Training dataset")->required();
    t->add_option("--out,-o", tr.out, "Output directory")->required();
    t->add_option("--model", tr.model, "Preset: toy, full, dense or linear");
    t->add_option("--epochs", tr.epochs, "Epochs (overrides the config)");
    t->add_option("--seed", tr.seed, "Training seed (overrides the config)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
    e->add_option("--data", ev.data, "Evaluation dataset")->required();
    e->add_option("--out,-o", ev.out, "Output directory")->required();
    e->add_option("--fraction", ev.fraction, "Worst fraction for the Weyl and rotation diagnostics");

    ProbeArgs pr;
    auto* p = app.add_subcommand("probe", "Train small networks on the frozen latent space");
    p->add_option("--config", pr.config, "Key-value configuration file");
    p->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
    p->add_option("--data", pr.data, "Dataset")->required();
    p->add_option("--out,-o", pr.out, "Output directory")->required();
    p->add_option("--targets", pr.targets, "Comma-separated: weyl, vertices, edges_angles");
    p->add_option("--layers", pr.layers, "Comma-separated hidden layer counts (0..5)");
    p->add_option("--test-fraction", pr.test_fraction, "Held-out fraction");
    p->add_option("--s", pr.s, "Spectrum scale factors for the Weyl probe scaling run");

    ScaleArgs sc;
    auto* s = app.add_subcommand("scale-exp", "Predicted area against spectrum scaling");
    s->add_option("--checkpoint", sc.checkpoint, "Checkpoint file")->required();
    s->add_option("--data", sc.data, "Dataset")->required();
    s->add_option("--out,-o", sc.out, "Output directory")->required();
    s->add_option("--s", sc.s, "Comma-separated scale factors");

    VerifyArgs ver;
    auto* vr = app.add_subcommand("verify", "Re-check every record invariant of a dataset");
    vr->add_option("--data", ver.data, "Dataset")->required();
    vr->add_option("--recompute-spectra", ver.recompute, "Recompute the spectra of this many leading records");

    ExportArgs ex;
    auto* x = app.add_subcommand("export", "Write CSV tables and PGM images of a dataset");
    x->add_option("--data", ex.data, "Dataset")->required();
    x->add_option("--out,-o", ex.out, "Output directory")->required();
    x->add_option("--images", ex.images, "Number of records rendered as PGM");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) set_worker_count(static_cast<std::size_t>(threads));
        if (g->parsed()) return run_gen(gen);
        if (v->parsed()) return run_validate(val);
        if (t->parsed()) return run_train(tr);
        if (e->parsed()) return run_eval(ev);
        if (p->parsed()) return run_probe(pr);
        if (s->parsed()) return run_scale(sc);
        if (vr->parsed()) return run_verify(ver);
        if (x->parsed()) return run_export(ex);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 2;
}
