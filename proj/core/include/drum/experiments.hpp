#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

#include "drum/dataset.hpp"
#include "drum/loss.hpp"
#include "drum/network.hpp"

namespace drum {

/// Image prediction from (record, spectrum scale S); S = 1 is the stored spectrum.
using ImagePredictor = std::function<RasterImage(const SampleRecord&, double S)>;

ImagePredictor network_predictor(const Network& net);
/// Returns each record's true image (ignores S).
ImagePredictor oracle_predictor();

struct EvalReport {
    std::vector<double> losses;
    std::vector<D4> elements;
    double mean = 0.0;
    /// Representative record indices: median of the best 15%, the middle 70%
    /// and the worst 10% by loss.
    std::size_t good = 0, mediocre = 0, bad = 0;
};

EvalReport evaluate(const ImagePredictor& predictor, std::span<const SampleRecord> records);

/// CSV "loss,cdf": sorted losses with cumulative fraction i/n.
void write_cdf_csv(std::ostream& os, std::span<const double> losses);
/// CSV "record,seed,d4_loss,element".
void write_losses_csv(std::ostream& os, const EvalReport& report, std::span<const SampleRecord> records);
/// Writes good/mediocre/bad PGM strips (truth | aligned prediction) and a
/// triptych of the three aligned predictions into `dir`.
void write_example_images(const std::filesystem::path& dir, const ImagePredictor& predictor, const EvalReport& report,
                          std::span<const SampleRecord> records);

struct ScalingRow {
    double S = 1.0;
    /// Mean sum of output pixel values.
    double pixel_sum = 0.0;
    /// pixel_sum times the pixel area 0.01.
    double area = 0.0;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    /// Log-log least-squares slope of area against S.
    double exponent = 0.0;
};

/// Feeds each spectrum multiplied by S and averages the predicted area.
ScalingReport scaling_experiment(const ImagePredictor& predictor, std::span<const SampleRecord> records,
                                 std::span<const double> S_values);
/// CSV "S,pixel_sum,area".
void write_scaling_csv(std::ostream& os, const ScalingReport& report);

struct WeylDelta {
    std::size_t record = 0;
    double loss = 0.0;
    double true_area = 0.0;        ///< shoelace area
    double true_perimeter = 0.0;   ///< polygon perimeter
    double truth_area_proxy = 0.0;
    double truth_perimeter_proxy = 0.0;
    double pred_area_proxy = 0.0;
    double pred_perimeter_proxy = 0.0;
    /// Relative deltas of the prediction proxy against the truth-image proxy.
    double area_delta = 0.0;
    double perimeter_delta = 0.0;
};

/// Pixel-count area (0.01 per pixel above 0.5).
double pixel_area(const RasterImage& img);
/// Exposed pixel-edge length times pi/4 (isotropic Crofton correction).
double pixel_perimeter(const RasterImage& img);

/// Worst-decile predictions (by D4 loss): area and perimeter proxies of the
/// thresholded, D4-aligned prediction against the same proxies of the truth image.
std::vector<WeylDelta> weyl_preservation_diagnostic(const ImagePredictor& predictor,
                                                    std::span<const SampleRecord> records, double fraction = 0.1);
/// CSV "record,loss,true_area,true_perimeter,truth_area_proxy,truth_perimeter_proxy,pred_area_proxy,pred_perimeter_proxy,area_delta,perimeter_delta".
void write_weyl_delta_csv(std::ostream& os, std::span<const WeylDelta> rows);

/// Rotation search over the `fraction` worst predictions (by D4 loss).
std::vector<RotationRow> rotation_analysis(const ImagePredictor& predictor, std::span<const SampleRecord> records,
                                           const EvalReport& report, double fraction = 0.1,
                                           double step = std::numbers::pi / 180.0);

}  // namespace drum
