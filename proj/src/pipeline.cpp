#include "sparseff/pipeline.hpp"

#include <Eigen/Core>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <png.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "sparseff/error.hpp"
#include "sparseff/parallel.hpp"

namespace fs = std::filesystem;

namespace sparseff {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256 initialisation failed");
        }
    }
    void update(const void* data, std::size_t size) {
        if (size > 0 && EVP_DigestUpdate(ctx_.get(), data, size) != 1) {
            throw std::runtime_error("sha256 update failed");
        }
    }
    std::string hex() {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int length = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), digest, &length) != 1) {
            throw std::runtime_error("sha256 finalisation failed");
        }
        static constexpr char kDigits[] = "0123456789abcdef";
        std::string out;
        out.reserve(length * 2);
        for (unsigned int i = 0; i < length; ++i) {
            out.push_back(kDigits[digest[i] >> 4]);
            out.push_back(kDigits[digest[i] & 0xF]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

template <typename Fn>
void timed_stage(const char* name, std::vector<StageTiming>& timings, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
        fn();
    } catch (const StageError&) {
        throw;
    } catch (const InputError& e) {
        throw StageError(name, e.what(), true);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what(), false);
    }
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    timings.push_back({name, elapsed.count()});
}

std::pair<int, int> frame_geometry(const PipelineConfig& config, const PipelineInputs& inputs) {
    if (inputs.frames) return {inputs.frames->width(), inputs.frames->height()};
    return {config.frame_width, config.frame_height};
}

std::vector<double> scores_for(const PipelineConfig& config, const PipelineInputs& inputs) {
    const std::size_t n = inputs.frame_count();
    if (inputs.detections.empty()) return std::vector<double>(n, 0.0);
    if (inputs.detections.size() != n) {
        throw InputError("detections cover " + std::to_string(inputs.detections.size()) +
                         " frames, video has " + std::to_string(n));
    }
    const auto [width, height] = frame_geometry(config, inputs);
    if (width <= 0 || height <= 0) {
        throw InputError("detections need frame geometry: supply frames or frame_width/frame_height");
    }
    return semantic_scores(inputs.detections, width, height);
}

/// Appearance cost for a run: the injected one, color histograms of the
/// frames, or a constant 1 when neither is available.
AppearanceCostFn appearance_for(const PipelineConfig& config, const PipelineInputs& inputs) {
    if (inputs.appearance) return inputs.appearance;
    if (inputs.frames) {
        auto histograms = std::make_shared<HistogramAppearance>(*inputs.frames, config.hist_bins,
                                                                config.workers);
        return [histograms](std::size_t x, std::size_t y) { return (*histograms)(x, y); };
    }
    return [](std::size_t, std::size_t) { return 1.0; };
}

bool has_appearance(const PipelineInputs& inputs) {
    return static_cast<bool>(inputs.appearance) || inputs.frames.has_value();
}

void check_selection(const std::vector<std::size_t>& selection, std::size_t n) {
    if (selection.empty()) throw InputError("selection is empty");
    for (std::size_t i = 0; i < selection.size(); ++i) {
        if (selection[i] >= n) {
            throw InputError("selected frame " + std::to_string(selection[i]) + " outside video of " +
                             std::to_string(n) + " frames");
        }
        if (i > 0 && selection[i] <= selection[i - 1]) {
            throw InputError("selection must be strictly increasing");
        }
    }
}

std::string format_real(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

}  // namespace

std::size_t PipelineInputs::frame_count() const {
    if (frames) return frames->size();
    if (features) return features->cols();
    return 0;
}

PipelineInputs load_inputs(const PipelineConfig& config) {
    PipelineInputs inputs;
    if (config.frames_dir.empty() && config.features.empty()) {
        throw ConfigError("either an input frame directory or a feature file is required");
    }
    if (!config.frames_dir.empty()) inputs.frames = load_frame_sequence(config.frames_dir, config.fps);
    if (!config.features.empty()) inputs.features = load_feature_matrix(config.features);
    const std::size_t n = inputs.frame_count();
    if (inputs.frames && inputs.features && inputs.features->cols() != n) {
        throw InputError("feature file has " + std::to_string(inputs.features->cols()) +
                         " columns, frame directory has " + std::to_string(n) + " frames");
    }
    const auto [width, height] = frame_geometry(config, inputs);
    if (!config.flows.empty()) {
        inputs.flows = load_flows(config.flows, width, height);
        if (inputs.flows->size() != n) {
            throw InputError("flow file has " + std::to_string(inputs.flows->size()) +
                             " frames, expected " + std::to_string(n));
        }
    }
    if (!config.detections.empty()) {
        inputs.detections = load_detections(config.detections, n);
        if (width > 0 && height > 0) clamp_detections(inputs.detections, width, height);
    }
    return inputs;
}

std::vector<std::size_t> uniform_selection(std::size_t n, double speedup) {
    if (!(speedup > 1.0)) throw ConfigError("speed-up must exceed 1");
    const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) / speedup));
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(static_cast<std::size_t>(std::floor(static_cast<double>(k) * speedup)));
    }
    return out;
}

EvaluationReport evaluate_selection(const PipelineConfig& config, const PipelineInputs& inputs,
                                    const std::vector<std::size_t>& selection,
                                    std::vector<double>* instability_series) {
    const std::size_t n = inputs.frame_count();
    check_selection(selection, n);
    EvaluationReport report;
    report.n_original = n;
    report.n_selected = selection.size();
    report.required_speedup = config.speedup;
    report.speedup_achieved = static_cast<double>(n) / static_cast<double>(selection.size());
    report.speedup_deviation = speedup_deviation(n, selection.size(), config.speedup);
    report.instability_window = config.instability_window;

    const auto scores = scores_for(config, inputs);
    report.semantic_retention = semantic_retention(selection, scores, config.speedup);

    if (inputs.frames && selection.size() >= static_cast<std::size_t>(config.instability_window)) {
        auto result = instability_index(*inputs.frames, selection, config.instability_window);
        report.instability = result.index;
        if (instability_series) *instability_series = std::move(result.per_window);
    }
    if (selection.size() >= 3 && has_appearance(inputs)) {
        std::vector<double> costs;
        costs.reserve(selection.size() - 1);
        if (inputs.appearance) {
            for (std::size_t i = 1; i < selection.size(); ++i) {
                costs.push_back(inputs.appearance(selection[i - 1], selection[i]));
            }
        } else {
            ColorHistogram prev = color_histogram(inputs.frames->frames[selection[0]], config.hist_bins);
            for (std::size_t i = 1; i < selection.size(); ++i) {
                ColorHistogram next = color_histogram(inputs.frames->frames[selection[i]], config.hist_bins);
                costs.push_back(appearance_cost(prev, next));
                prev = std::move(next);
            }
        }
        report.appearance_cv = appearance_cost_cv(costs);
    }
    return report;
}

EvaluationReport compare_uniform(const PipelineConfig& config, const PipelineInputs& inputs) {
    return evaluate_selection(config, inputs, uniform_selection(inputs.frame_count(), config.speedup));
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    PipelineInputs inputs;
    PipelineResult result;
    timed_stage("ingest", result.timings, [&] { inputs = load_inputs(config); });
    auto rest = run_pipeline(config, inputs);
    rest.timings.insert(rest.timings.begin(), result.timings.front());
    return rest;
}

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs) {
    config.validate();
    PipelineResult result;
    const std::size_t n = inputs.frame_count();

    timed_stage("descriptor", result.timings, [&] {
        if (!inputs.frames && !inputs.features) throw InputError("no frames or features supplied");
        if (n < 2) throw InputError("need at least 2 frames, got " + std::to_string(n));
        if (!inputs.detections.empty() && inputs.detections.size() != n) {
            throw InputError("detections cover " + std::to_string(inputs.detections.size()) +
                             " frames, video has " + std::to_string(n));
        }
        std::optional<std::vector<FlowField>> flows = inputs.flows;
        if (!flows && inputs.frames) {
            flows = per_frame_flows(*inputs.frames, config.flow_block, config.flow_radius, config.workers);
        }
        if (inputs.features) {
            result.features = *inputs.features;
        } else {
            const DetectionSet empty(n);
            result.features = describe_sequence(*inputs.frames, *flows,
                                                inputs.detections.empty() ? empty : inputs.detections,
                                                config.normalize_blocks, config.workers);
        }
        if (flows) {
            if (flows->size() != n) throw InputError("flow count does not match frame count");
            MotionProfile motion = cumulative_displacement_curves(*flows, config.cdc_window);
            abrupt_motion_mask(motion, config.weight_low, config.weight_high);
            result.weights = std::move(motion.weights);
        } else {
            result.weights.assign(n, config.weight_high);
        }
    });

    timed_stage("semantics", result.timings, [&] {
        result.profile = build_profile(scores_for(config, inputs), config.profile_window);
        const auto segments = segment_profile(
            result.profile, static_cast<std::size_t>(config.min_segment_length), config.semantic_threshold);
        result.plan = allocate_speedups(segments, config.speedup,
                                        {config.min_segment_speedup, config.max_speedup_factor});
    });

    const LambdaSearchOptions search{config.max_iterations, config.step_floor};
    result.segments.resize(result.plan.segments.size());
    timed_stage("sampler", result.timings, [&] {
        parallel_for(result.segments.size(), config.workers, [&](std::size_t k) {
            const PlannedSegment& planned = result.plan.segments[k];
            SegmentSelection& seg = result.segments[k];
            seg.plan = planned;
            seg.sampler_target = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(static_cast<double>(planned.target_frames) /
                                                         config.spf)));
            const Eigen::MatrixXd D = result.features.block_as_double(planned.start, planned.end);
            const std::span<const double> w(result.weights.data() + planned.start, planned.length());
            const ActivationResult activation = sample_segment(D, w, seg.sampler_target, config.tau, search);
            seg.lambda = activation.lambda;
            seg.activated = activation.activated;
            seg.reached = activation.reached;
            seg.truncated = activation.truncated;
            seg.iterations = activation.iterations;
            seg.timeline.segment_start = planned.start;
            seg.timeline.segment_end = planned.end;
            seg.timeline.speedup = planned.speedup;
            for (std::size_t i : activation.selected) seg.timeline.indices.push_back(planned.start + i);
        });
    });

    AppearanceCostFn cost;
    timed_stage("sft", result.timings, [&] {
        cost = appearance_for(config, inputs);
        parallel_for(result.segments.size(), config.workers, [&](std::size_t k) {
            SegmentSelection& seg = result.segments[k];
            SmoothingResult smoothed = smooth_transitions(seg.timeline, seg.plan.target_frames, cost);
            seg.timeline = std::move(smoothed.timeline);
            seg.inserted = smoothed.inserted;
            seg.boundary_extensions = smoothed.boundary_extensions;
        });
    });

    timed_stage("metrics", result.timings, [&] {
        std::vector<double> segment_speedup;
        for (const auto& seg : result.segments) {
            result.selection.insert(result.selection.end(), seg.timeline.indices.begin(),
                                    seg.timeline.indices.end());
        }
        std::size_t owner = 0;
        for (std::size_t i = 1; i < result.selection.size(); ++i) {
            const std::size_t x = result.selection[i - 1], y = result.selection[i];
            while (result.segments[owner].timeline.segment_end <= y) ++owner;
            const double ac = cost(x, y);
            result.transitions.push_back({x, y, ac, instability(ac, x, y, result.segments[owner].plan.speedup)});
        }
        result.report = evaluate_selection(config, inputs, result.selection, &result.instability_series);
        if (!has_appearance(inputs)) result.report.appearance_cv.reset();

        const auto& scores = result.profile.score;
        for (std::size_t k = 0; k < result.segments.size(); ++k) {
            const auto& seg = result.segments[k];
            SegmentBreakdown b;
            b.segment = k;
            b.start = seg.plan.start;
            b.end = seg.plan.end;
            b.kind = std::string(to_string(seg.plan.kind));
            b.planned_speedup = seg.plan.speedup;
            b.selected = seg.timeline.indices.size();
            b.achieved_speedup = static_cast<double>(seg.plan.length()) / static_cast<double>(b.selected);
            std::vector<std::size_t> local;
            for (std::size_t i : seg.timeline.indices) local.push_back(i - seg.plan.start);
            const std::span<const double> seg_scores(scores.data() + seg.plan.start, seg.plan.length());
            b.semantic_retention = semantic_retention(local, seg_scores, seg.plan.speedup);
            std::vector<double> costs;
            for (const auto& t : result.transitions) {
                if (t.from >= seg.plan.start && t.to < seg.plan.end) costs.push_back(t.appearance);
            }
            b.appearance_cv = costs.size() >= 2 && has_appearance(inputs) ? appearance_cost_cv(costs) : 0.0;
            result.report.segments.push_back(std::move(b));
        }
        if (static_cast<double>(n) >= config.speedup) result.uniform = compare_uniform(config, inputs);
        if (inputs.frames && n >= static_cast<std::size_t>(config.instability_window)) {
            std::vector<std::size_t> all(n);
            for (std::size_t i = 0; i < n; ++i) all[i] = i;
            result.original_instability = instability_index(*inputs.frames, all, config.instability_window).index;
        }
    });
    return result;
}

std::vector<std::size_t> load_selection(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open selection file " + path.string());
    std::vector<std::size_t> out;
    if (path.extension() == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw InputError("invalid selection JSON in " + path.string() + ": " + e.what());
        }
        try {
            if (j.is_array()) return j.get<std::vector<std::size_t>>();
            if (j.contains("segments")) {
                for (const auto& seg : j.at("segments")) {
                    const auto part = seg.at("indices").get<std::vector<std::size_t>>();
                    out.insert(out.end(), part.begin(), part.end());
                }
                return out;
            }
            return j.at("indices").get<std::vector<std::size_t>>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError("malformed selection in " + path.string() + ": " + e.what());
        }
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(first, last - first + 1);
        std::size_t value = 0;
        std::size_t used = 0;
        try {
            if (token.front() == '-') throw std::invalid_argument("negative");
            value = std::stoull(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size()) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a frame index");
        }
        out.push_back(value);
    }
    return out;
}

nlohmann::json selection_to_json(const PipelineResult& result) {
    nlohmann::json segments = nlohmann::json::array();
    for (std::size_t k = 0; k < result.segments.size(); ++k) {
        const auto& seg = result.segments[k];
        segments.push_back({{"segment", k},
                            {"kind", std::string(to_string(seg.plan.kind))},
                            {"start", seg.plan.start},
                            {"end", seg.plan.end},
                            {"speedup", seg.plan.speedup},
                            {"target", seg.plan.target_frames},
                            {"lambda", seg.lambda},
                            {"sampled", seg.sampler_target},
                            {"activated", seg.activated},
                            {"reached", seg.reached},
                            {"truncated", seg.truncated},
                            {"inserted", seg.inserted},
                            {"indices", seg.timeline.indices}});
    }
    return {{"count", result.selection.size()}, {"segments", segments}};
}

std::string sha256_hex(const void* data, std::size_t size) {
    Sha256 h;
    h.update(data, size);
    return h.hex();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    Sha256 h;
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        h.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

void export_selection(const PipelineResult& result, const PipelineConfig& config,
                      const PipelineInputs& inputs, const fs::path& out) {
    std::vector<fs::path> written;
    bool created_frames_dir = false;
    nlohmann::json outputs = nlohmann::json::object();

    const auto write_text = [&](const std::string& name, const std::string& text) {
        const fs::path path = out / name;
        std::ofstream file(path, std::ios::binary);
        if (!file) throw InputError("cannot write " + path.string());
        written.push_back(path);
        file << text;
        file.close();
        if (!file) throw InputError("failed writing " + path.string());
        outputs[name] = sha256_hex(text.data(), text.size());
    };

    try {
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw InputError("cannot create output directory " + out.string() + ": " + ec.message());

        std::ostringstream text;
        for (std::size_t i : result.selection) text << i << '\n';
        write_text("selection.txt", text.str());
        write_text("selection.json", selection_to_json(result).dump(2) + "\n");

        std::string csv = "from,to,appearance,instability\n";
        for (const auto& t : result.transitions) {
            csv += std::to_string(t.from) + ',' + std::to_string(t.to) + ',' + format_real(t.appearance) +
                   ',' + format_real(t.instability) + '\n';
        }
        write_text("transitions.csv", csv);

        csv = "window,instability\n";
        for (std::size_t i = 0; i < result.instability_series.size(); ++i) {
            csv += std::to_string(i) + ',' + format_real(result.instability_series[i]) + '\n';
        }
        write_text("instability.csv", csv);

        nlohmann::json report = {{"selection", report_to_json(result.report)},
                                 {"uniform", report_to_json(result.uniform)},
                                 {"original_instability", nullptr}};
        if (result.original_instability) report["original_instability"] = *result.original_instability;
        write_text("report.json", report.dump(2) + "\n");

        if (config.export_frames && inputs.frames) {
            const fs::path dir = out / "frames";
            created_frames_dir = fs::create_directories(dir, ec);
            if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
            for (std::size_t k = 0; k < result.selection.size(); ++k) {
                char name[32];
                std::snprintf(name, sizeof name, "%06zu.png", k);
                const fs::path path = dir / name;
                write_png(path, inputs.frames->frames[result.selection[k]]);
                written.push_back(path);
                outputs[std::string("frames/") + name] = sha256_file(path);
            }
        }

        nlohmann::json fingerprint = {{"frame_count", inputs.frame_count()}};
        if (inputs.frames) {
            Sha256 h;
            for (const auto& frame : inputs.frames->frames) h.update(frame.data().data(), frame.data().size());
            fingerprint["frames"] = {{"width", inputs.frames->width()},
                                     {"height", inputs.frames->height()},
                                     {"sha256", h.hex()}};
        }
        const auto& values = result.features.values();
        fingerprint["features"] = {{"rows", result.features.rows()},
                                   {"cols", result.features.cols()},
                                   {"sha256", sha256_hex(values.data(), values.size() * sizeof(float))}};
        if (!config.features.empty()) fingerprint["features"]["file_sha256"] = sha256_file(config.features);
        if (!config.detections.empty()) {
            std::size_t count = 0;
            for (const auto& frame : inputs.detections) count += frame.size();
            fingerprint["detections"] = {{"count", count}, {"sha256", sha256_file(config.detections)}};
        }
        if (!config.flows.empty()) fingerprint["flows"] = {{"sha256", sha256_file(config.flows)}};

        nlohmann::json timings = nlohmann::json::object();
        for (const auto& t : result.timings) timings[t.stage] = t.milliseconds;

        const nlohmann::json manifest = {
            {"config", config_to_json(config)},
            {"inputs", fingerprint},
            {"timings_ms", timings},
            {"versions",
             {{"sparseff", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                            "." + std::to_string(EIGEN_MINOR_VERSION)},
              {"libpng", PNG_LIBPNG_VER_STRING},
              {"openssl", OpenSSL_version(OPENSSL_VERSION)},
              {"compiler", __VERSION__}}},
            {"outputs", outputs}};
        const std::string text_manifest = manifest.dump(2) + "\n";
        const fs::path manifest_path = out / "manifest.json";
        std::ofstream file(manifest_path, std::ios::binary);
        if (!file) throw InputError("cannot write " + manifest_path.string());
        written.push_back(manifest_path);
        file << text_manifest;
        file.close();
        if (!file) throw InputError("failed writing " + manifest_path.string());
    } catch (...) {
        std::error_code ignored;
        for (const auto& path : written) fs::remove(path, ignored);
        if (created_frames_dir) fs::remove(out / "frames", ignored);
        throw;
    }
}

}  // namespace sparseff
