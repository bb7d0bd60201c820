#include "sparseff/config.hpp"

#include <fstream>
#include <set>

#include "sparseff/error.hpp"

namespace sparseff {

using nlohmann::json;

void PipelineConfig::validate() const {
    if (!(speedup > 1.0)) throw ConfigError("speed-up must exceed 1");
    if (spf < 1) throw ConfigError("spf must be at least 1");
    if (!(weight_low > 0.0 && weight_low <= weight_high)) {
        throw ConfigError("weights must satisfy 0 < weight_low <= weight_high");
    }
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
    if (max_iterations < 1) throw ConfigError("max_iterations must be positive");
    if (!(step_floor > 0.0)) throw ConfigError("step_floor must be positive");
    if (profile_window < 1 || profile_window % 2 == 0) {
        throw ConfigError("profile_window must be a positive odd number");
    }
    if (cdc_window < 1 || cdc_window % 2 == 0) {
        throw ConfigError("cdc_window must be a positive odd number");
    }
    if (min_segment_length < 1) throw ConfigError("min_segment_length must be positive");
    if (!(min_segment_speedup >= 1.0)) throw ConfigError("min_segment_speedup must be >= 1");
    if (!(max_speedup_factor >= 1.0)) throw ConfigError("max_speedup_factor must be >= 1");
    if (flow_block < 4) throw ConfigError("flow_block must be at least 4 pixels");
    if (flow_radius < 0) throw ConfigError("flow_radius must be nonnegative");
    if (hist_bins < 1 || hist_bins > 256) throw ConfigError("hist_bins must lie in [1, 256]");
    if (instability_window < 2) throw ConfigError("instability_window must be at least 2");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (frame_width < 0 || frame_height < 0) throw ConfigError("frame dimensions must be nonnegative");
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

void read_path(const json& j, const char* key, std::filesystem::path& field) {
    if (j.contains(key)) field = j.at(key).get<std::string>();
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "speedup", "spf", "weight_low", "weight_high", "weights", "tau", "max_iterations",
        "step_floor", "profile_window", "min_segment_length", "semantic_threshold",
        "min_segment_speedup", "max_speedup_factor", "flow_block", "flow_radius", "cdc_window",
        "normalize_blocks", "hist_bins", "instability_window", "frames_dir", "input", "features",
        "detections", "flows", "out", "export_frames", "frame_width", "frame_height", "fps",
        "workers"};
    return keys;
}

}  // namespace

PipelineConfig config_from_json(const json& j, PipelineConfig c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    try {
        read_key(j, "speedup", c.speedup);
        read_key(j, "spf", c.spf);
        read_key(j, "weight_low", c.weight_low);
        read_key(j, "weight_high", c.weight_high);
        if (j.contains("weights")) {
            const auto& w = j.at("weights");
            if (!w.is_array() || w.size() != 2) throw ConfigError("weights must be [low, high]");
            c.weight_low = w[0].get<double>();
            c.weight_high = w[1].get<double>();
        }
        read_key(j, "tau", c.tau);
        read_key(j, "max_iterations", c.max_iterations);
        read_key(j, "step_floor", c.step_floor);
        read_key(j, "profile_window", c.profile_window);
        read_key(j, "min_segment_length", c.min_segment_length);
        if (j.contains("semantic_threshold")) {
            if (j.at("semantic_threshold").is_null()) {
                c.semantic_threshold.reset();
            } else {
                c.semantic_threshold = j.at("semantic_threshold").get<double>();
            }
        }
        read_key(j, "min_segment_speedup", c.min_segment_speedup);
        read_key(j, "max_speedup_factor", c.max_speedup_factor);
        read_key(j, "flow_block", c.flow_block);
        read_key(j, "flow_radius", c.flow_radius);
        read_key(j, "cdc_window", c.cdc_window);
        read_key(j, "normalize_blocks", c.normalize_blocks);
        read_key(j, "hist_bins", c.hist_bins);
        read_key(j, "instability_window", c.instability_window);
        read_path(j, "frames_dir", c.frames_dir);
        read_path(j, "input", c.frames_dir);
        read_path(j, "features", c.features);
        read_path(j, "detections", c.detections);
        read_path(j, "flows", c.flows);
        read_path(j, "out", c.out);
        read_key(j, "export_frames", c.export_frames);
        read_key(j, "frame_width", c.frame_width);
        read_key(j, "frame_height", c.frame_height);
        read_key(j, "fps", c.fps);
        read_key(j, "workers", c.workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

json config_to_json(const PipelineConfig& c) {
    json j = {{"speedup", c.speedup},
              {"spf", c.spf},
              {"weight_low", c.weight_low},
              {"weight_high", c.weight_high},
              {"tau", c.tau},
              {"max_iterations", c.max_iterations},
              {"step_floor", c.step_floor},
              {"profile_window", c.profile_window},
              {"min_segment_length", c.min_segment_length},
              {"semantic_threshold", nullptr},
              {"min_segment_speedup", c.min_segment_speedup},
              {"max_speedup_factor", c.max_speedup_factor},
              {"flow_block", c.flow_block},
              {"flow_radius", c.flow_radius},
              {"cdc_window", c.cdc_window},
              {"normalize_blocks", c.normalize_blocks},
              {"hist_bins", c.hist_bins},
              {"instability_window", c.instability_window},
              {"frames_dir", c.frames_dir.string()},
              {"features", c.features.string()},
              {"detections", c.detections.string()},
              {"flows", c.flows.string()},
              {"out", c.out.string()},
              {"export_frames", c.export_frames},
              {"frame_width", c.frame_width},
              {"frame_height", c.frame_height},
              {"fps", c.fps},
              {"workers", c.workers}};
    if (c.semantic_threshold) j["semantic_threshold"] = *c.semantic_threshold;
    return j;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace sparseff
