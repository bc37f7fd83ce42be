#include "drum/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "drum/error.hpp"
#include "drum/parallel.hpp"
#include "drum/training.hpp"

namespace drum {

namespace {

std::vector<std::size_t> order_by_loss(std::span<const double> losses) {
    std::vector<std::size_t> order(losses.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    return order;
}

/// Median member of the rank band [lo, hi) given as fractions of n.
std::size_t band_median(std::span<const std::size_t> order, double lo, double hi) {
    const auto n = static_cast<double>(order.size());
    auto first = static_cast<std::size_t>(std::floor(lo * n));
    auto last = std::max(first + 1, static_cast<std::size_t>(std::ceil(hi * n)));
    last = std::min(last, order.size());
    first = std::min(first, last - 1);
    return order[(first + last - 1) / 2];
}

void save_pgm(const std::filesystem::path& path, std::span<const RasterImage> images) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    write_pgm_strip(os, images);
}

RasterImage threshold(const RasterImage& img) {
    RasterImage out;
    for (std::size_t i = 0; i < RasterImage::kPixels; ++i) out[i] = img[i] > 0.5 ? 1.0 : 0.0;
    return out;
}

}  // namespace

ImagePredictor network_predictor(const Network& net) {
    return [&net](const SampleRecord& r, double S) {
        auto input = model_input(r, static_cast<std::size_t>(net.config().input_length));
        if (S != 1.0)
            for (double& v : input) v *= S;
        return net.forward(input).image;
    };
}

ImagePredictor oracle_predictor() {
    return [](const SampleRecord& r, double) { return r.raster(); };
}

EvalReport evaluate(const ImagePredictor& predictor, std::span<const SampleRecord> records) {
    EvalReport report;
    report.losses.resize(records.size());
    report.elements.resize(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
        const RasterImage truth = records[i].raster();
        const RasterImage pred = predictor(records[i], 1.0);
        // An all-zero prediction against an all-zero truth cannot occur: truth
        // images always contain the polygon centroid.
        const D4Loss l = d4_loss(pred, truth);
        report.losses[i] = l.loss;
        report.elements[i] = l.element;
    });
    double sum = 0.0;
    for (double l : report.losses) sum += l;
    report.mean = records.empty() ? 0.0 : sum / static_cast<double>(records.size());
    if (!records.empty()) {
        const auto order = order_by_loss(report.losses);
        report.good = band_median(order, 0.0, 0.15);
        report.mediocre = band_median(order, 0.15, 0.85);
        report.bad = band_median(order, 0.90, 1.0);
    }
    return report;
}

void write_cdf_csv(std::ostream& os, std::span<const double> losses) {
    std::vector<double> sorted(losses.begin(), losses.end());
    std::sort(sorted.begin(), sorted.end());
    os << "loss,cdf\n";
    for (std::size_t i = 0; i < sorted.size(); ++i)
        os << format_real(sorted[i]) << ',' << format_real(static_cast<double>(i + 1) / static_cast<double>(sorted.size()))
           << '\n';
}

void write_losses_csv(std::ostream& os, const EvalReport& report, std::span<const SampleRecord> records) {
    os << "record,seed,d4_loss,element\n";
    for (std::size_t i = 0; i < report.losses.size(); ++i)
        os << i << ',' << records[i].seed << ',' << format_real(report.losses[i]) << ',' << d4_name(report.elements[i])
           << '\n';
}

void write_example_images(const std::filesystem::path& dir, const ImagePredictor& predictor, const EvalReport& report,
                          std::span<const SampleRecord> records) {
    if (records.empty()) return;
    std::filesystem::create_directories(dir);
    const std::array<std::pair<const char*, std::size_t>, 3> picks = {
        {{"good", report.good}, {"mediocre", report.mediocre}, {"bad", report.bad}}};
    std::vector<RasterImage> triptych;
    for (const auto& [name, idx] : picks) {
        const RasterImage aligned = d4_transform(predictor(records[idx], 1.0), report.elements[idx]);
        const std::array<RasterImage, 2> pair = {records[idx].raster(), aligned};
        save_pgm(dir / (std::string(name) + ".pgm"), pair);
        triptych.push_back(aligned);
    }
    save_pgm(dir / "triptych.pgm", triptych);
}

ScalingReport scaling_experiment(const ImagePredictor& predictor, std::span<const SampleRecord> records,
                                 std::span<const double> S_values) {
    ScalingReport report;
    for (double S : S_values) {
        if (!(S > 0.0)) throw Error("scaling_experiment: S must be positive");
        std::vector<double> sums(records.size());
        parallel_for(records.size(), [&](std::size_t i) { sums[i] = predictor(records[i], S).sum(); });
        double total = 0.0;
        for (double s : sums) total += s;
        ScalingRow row;
        row.S = S;
        row.pixel_sum = records.empty() ? 0.0 : total / static_cast<double>(records.size());
        row.area = row.pixel_sum * RasterImage::kPixelSize * RasterImage::kPixelSize;
        report.rows.push_back(row);
    }
    // Least-squares slope in log-log coordinates.
    double mx = 0.0, my = 0.0;
    bool valid = report.rows.size() >= 2;
    for (const auto& r : report.rows) {
        valid = valid && r.area > 0.0;
        if (!valid) break;
        mx += std::log(r.S);
        my += std::log(r.area);
    }
    if (!valid) {
        report.exponent = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    const auto n = static_cast<double>(report.rows.size());
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : report.rows) {
        sxy += (std::log(r.S) - mx) * (std::log(r.area) - my);
        sxx += (std::log(r.S) - mx) * (std::log(r.S) - mx);
    }
    report.exponent = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
    return report;
}

void write_scaling_csv(std::ostream& os, const ScalingReport& report) {
    os << "S,pixel_sum,area\n";
    for (const auto& r : report.rows)
        os << format_real(r.S) << ',' << format_real(r.pixel_sum) << ',' << format_real(r.area) << '\n';
}

double pixel_area(const RasterImage& img) {
    return static_cast<double>(img.count_above(0.5)) * RasterImage::kPixelSize * RasterImage::kPixelSize;
}

double pixel_perimeter(const RasterImage& img) {
    const int n = RasterImage::kSide;
    auto on = [&](int x, int y) { return x >= 0 && y >= 0 && x < n && y < n && img.at(x, y) > 0.5; };
    long exposed = 0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (on(x, y)) exposed += !on(x - 1, y) + !on(x + 1, y) + !on(x, y - 1) + !on(x, y + 1);
    return static_cast<double>(exposed) * RasterImage::kPixelSize * std::numbers::pi / 4.0;
}

std::vector<WeylDelta> weyl_preservation_diagnostic(const ImagePredictor& predictor,
                                                    std::span<const SampleRecord> records, double fraction) {
    const EvalReport eval = evaluate(predictor, records);
    const auto order = order_by_loss(eval.losses);
    const auto count = std::min(order.size(), static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(order.size()))));
    std::vector<WeylDelta> rows(count);
    parallel_for(count, [&](std::size_t j) {
        const std::size_t i = order[order.size() - 1 - j];
        const SampleRecord& r = records[i];
        const RasterImage truth = r.raster();
        const RasterImage pred = threshold(d4_transform(predictor(r, 1.0), eval.elements[i]));
        const Polygon p = r.polygon();
        WeylDelta d;
        d.record = i;
        d.loss = eval.losses[i];
        d.true_area = area(p);
        d.true_perimeter = perimeter(p);
        d.truth_area_proxy = pixel_area(truth);
        d.truth_perimeter_proxy = pixel_perimeter(truth);
        d.pred_area_proxy = pixel_area(pred);
        d.pred_perimeter_proxy = pixel_perimeter(pred);
        d.area_delta = (d.pred_area_proxy - d.truth_area_proxy) / d.truth_area_proxy;
        d.perimeter_delta = (d.pred_perimeter_proxy - d.truth_perimeter_proxy) / d.truth_perimeter_proxy;
        rows[j] = d;
    });
    return rows;
}

void write_weyl_delta_csv(std::ostream& os, std::span<const WeylDelta> rows) {
    os << "record,loss,true_area,true_perimeter,truth_area_proxy,truth_perimeter_proxy,pred_area_proxy,"
          "pred_perimeter_proxy,area_delta,perimeter_delta\n";
    for (const auto& d : rows)
        os << d.record << ',' << format_real(d.loss) << ',' << format_real(d.true_area) << ','
           << format_real(d.true_perimeter) << ',' << format_real(d.truth_area_proxy) << ','
           << format_real(d.truth_perimeter_proxy) << ',' << format_real(d.pred_area_proxy) << ','
           << format_real(d.pred_perimeter_proxy) << ',' << format_real(d.area_delta) << ','
           << format_real(d.perimeter_delta) << '\n';
}

std::vector<RotationRow> rotation_analysis(const ImagePredictor& predictor, std::span<const SampleRecord> records,
                                           const EvalReport& report, double fraction, double step) {
    const auto order = order_by_loss(report.losses);
    const auto count = std::min(order.size(), static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(order.size()))));
    std::vector<RotationRow> rows(count);
    parallel_for(count, [&](std::size_t j) {
        const std::size_t i = order[order.size() - 1 - j];
        rows[j].sample_id = i;
        rows[j].d4_loss = report.losses[i];
        rows[j].best = rotation_search(predictor(records[i], 1.0), records[i].raster(), step);
    });
    return rows;
}

}  // namespace drum
