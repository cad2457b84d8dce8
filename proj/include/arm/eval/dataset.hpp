#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <vector>

#include "arm/eval/metrics.hpp"

namespace arm::eval {

// Scores an FOV image listed in a manifest's image_path column.
using ImageScorer = std::function<double(const std::filesystem::path& image)>;

// CSV with header; required columns fov_id, label (benign|tumor|0|1), and
// either score or heatmap_path or image_path. Optional: magnification, source.
// An empty score is taken from the heatmap (max cell) or, failing that, from
// the image via `scorer`. Relative paths resolve against `base_dir`.
std::vector<LabeledFOV> read_manifest(std::istream& is, const std::filesystem::path& base_dir = {},
                                      const ImageScorer& scorer = {});
std::vector<LabeledFOV> read_manifest(const std::filesystem::path& path, const ImageScorer& scorer = {});

void write_manifest(std::ostream& os, const std::vector<LabeledFOV>& data);

// fpr,tpr,threshold ("inf" for the first point)
void write_roc_csv(std::ostream& os, const RocCurve& roc);

// Long format: name,threshold,metric,value,lo,hi,tp,tn,fp,fn. One "auc" row,
// then accuracy/precision/recall/fpr per operating point; "NA" when undefined.
void write_metrics_csv(std::ostream& os, double auc, const std::optional<BootstrapResult>& auc_ci,
                       const std::vector<OperatingPoint>& points);

} // namespace arm::eval
