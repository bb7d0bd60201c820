#pragma once

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace sparseff {

/// All tunables of a run. Defaults reproduce the reference settings
/// (S = 10, SpF = 2, weights 0.1 / 1.0).
struct PipelineConfig {
    // Speed-up and sampling.
    double speedup = 10.0;
    int spf = 2;
    double weight_low = 0.1;
    double weight_high = 1.0;
    double tau = 1e-3;
    int max_iterations = 10000;
    double step_floor = 1e-12;

    // Semantic segmentation.
    int profile_window = 51;
    int min_segment_length = 50;
    std::optional<double> semantic_threshold;  // mean of the smoothed profile when unset
    double min_segment_speedup = 2.0;
    double max_speedup_factor = 10.0;          // non-semantic cap = factor * speedup

    // Descriptors.
    int flow_block = 8;
    int flow_radius = 7;
    int cdc_window = 31;
    bool normalize_blocks = false;

    // Transitions and metrics.
    int hist_bins = 32;
    int instability_window = 4;

    // Inputs and outputs.
    std::filesystem::path frames_dir;
    std::filesystem::path features;
    std::filesystem::path detections;
    std::filesystem::path flows;
    std::filesystem::path out;
    bool export_frames = false;
    int frame_width = 0;   // geometry for feature-only runs without frames
    int frame_height = 0;
    double fps = 30.0;

    int workers = 1;

    /// Throws ConfigError on the first violated constraint.
    void validate() const;
};

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::json config_to_json(const PipelineConfig& config);

/// Reads a JSON object of config keys; unknown keys are rejected.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

}  // namespace sparseff
