#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "arm/eval/metrics.hpp"
#include "arm/infer/executor.hpp"
#include "arm/infer/heatmap.hpp"
#include "arm/net/builders.hpp"
#include "arm/scope/demo.hpp"
#include "arm/scope/session.hpp"

namespace arm::app {

// Objectives that get a demo colour detector.
inline const std::vector<std::string> kDemoModelObjectives{"10X", "20X"};

net::NetGraph demo_detector(const std::string& objective_tag);
std::shared_ptr<scope::ModelRegistry> demo_registry();

struct DemoDataOptions {
    std::uint64_t seed = 1;
    int slides_per_family = 2;
    scope::DemoSlideOptions slide;
    int fov_px = 256;
    std::string objective = "10X";
};

struct DemoFov {
    std::string fov_id;
    std::string slide_id;
    int cell = 0;
    scope::DemoBlob blob;
    infer::Heatmap heatmap;
    eval::LabeledFOV labeled;
};

struct DemoData {
    std::vector<scope::DemoSlide> slides;
    std::vector<DemoFov> fovs; // one per non-empty cell
};

// Slides in both stain families (ids pink-<i>, purple-<i>), one FOV per
// non-empty cell centred on it and scored by the detector through the
// capture pipeline (mosaic, debayer, FCN, max of the heatmap).
DemoData build_demo_data(const DemoDataOptions& options);

// Writes slides/, models/ (10X and 20X detectors), models/bench/ (mini-Inception
// and its same-padded variant), fovs/, heatmaps/ and manifest.csv under `out`.
DemoData write_demo(const std::filesystem::path& out, const DemoDataOptions& options);

// FOV capture through the virtual scope at a cell, debayered.
tensor::Tensor capture_cell(const scope::DemoSlide& slide, const std::shared_ptr<const scope::ModelRegistry>& models,
                            const scope::DemoSlideOptions& layout, int cell, int fov_px, const std::string& objective);

// Bench network saved by make-demo.
inline constexpr const char* kBenchModelPath = "bench/mini_inception.json";
inline constexpr const char* kBenchSameModelPath = "bench/mini_inception_same.json";

} // namespace arm::app
