#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arm/infer/heatmap.hpp"

namespace arm::eval {

enum class Label { Benign, Tumor };

struct LabeledFOV {
    std::string id;
    Label label = Label::Benign;
    double score = 0.0;
    std::string magnification;
    std::string source;
    std::string heatmap_path;
    std::string image_path;
};

// Max over all cells; throws EmptyInput.
double fov_likelihood(const infer::Heatmap& h);

struct ConfusionCounts {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Tumour predicted iff score >= t.
ConfusionCounts confusion_at_threshold(std::span<const LabeledFOV> data, double t);

// nullopt marks a metric whose denominator is zero.
struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> fpr;
};

Metrics metrics(const ConfusionCounts& c);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0; // +inf for the (0, 0) corner
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

// Sweep over unique scores, trapezoid AUC. Throws SingleClass.
RocCurve roc_curve(std::span<const LabeledFOV> data);

// P(score+ > score-) + P(tie) / 2 by direct pair counting.
double auc_pair_counting(std::span<const LabeledFOV> data);

using Statistic = std::function<double(std::span<const LabeledFOV>)>;

struct BootstrapResult {
    double lo = 0.0;
    double hi = 0.0;
    int replications = 0;
    std::uint64_t skipped = 0; // single-class resamples drawn again
};

// Percentile interval over FOV resamples. Replication i draws from its own
// stream seeded by (seed, i), so results do not depend on evaluation order.
// With require_both_classes, single-class resamples are redrawn and counted.
BootstrapResult bootstrap_ci(std::span<const LabeledFOV> data, const Statistic& statistic, int replications,
                             std::uint64_t seed, bool require_both_classes = true, double level = 0.95);

double auc_statistic(std::span<const LabeledFOV> data);

struct MetricCI {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct OperatingPoint {
    std::string name; // high_accuracy | high_precision | high_recall
    double threshold = 0.0;
    ConfusionCounts counts;
    Metrics metrics;
    std::optional<MetricCI> accuracy_ci, precision_ci, recall_ci;
};

struct OperatingRules {
    double precision_recall_floor = 0.5;
    double recall_target = 0.95;
};

// Candidates are the unique scores. high_accuracy: best accuracy, ties to the
// higher threshold. high_precision: best precision with recall >= floor, ties
// to the higher recall, then the higher threshold. high_recall: highest threshold reaching the recall
// target, else the recall-maximizing one (lowest score). Throws SingleClass.
std::vector<OperatingPoint> pick_operating_points(std::span<const LabeledFOV> data, const OperatingRules& rules = {});

// Bootstrap CIs for accuracy/precision/recall at each point's fixed threshold.
void attach_confidence_intervals(std::vector<OperatingPoint>& points, std::span<const LabeledFOV> data, int replications,
                                 std::uint64_t seed);

} // namespace arm::eval
