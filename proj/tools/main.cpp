#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sparseff/config.hpp"
#include "sparseff/error.hpp"
#include "sparseff/pipeline.hpp"
#include "sparseff/synth.hpp"

namespace {

using namespace sparseff;

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kInternal = 3 };

/// Flags shared by the pipeline subcommands. Unset flags leave the config alone.
struct CommonFlags {
    std::string config;
    std::optional<std::string> input, features, detections, flows, out;
    std::optional<double> speedup, tau;
    std::optional<int> spf, workers, width, height;
    std::vector<double> weights;
    bool export_frames = false;

    void attach(CLI::App& app, bool with_out = true) {
        app.add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
        app.add_option("--input", input, "directory of numbered frames (.png/.ppm)");
        app.add_option("--features", features, "feature matrix file (binary or .csv)");
        app.add_option("--detections", detections, "detections in JSON Lines");
        app.add_option("--flows", flows, "precomputed flow file");
        if (with_out) app.add_option("--out", out, "output directory");
        app.add_option("--speedup", speedup, "required speed-up (default 10)");
        app.add_option("--spf", spf, "oversparsification factor (default 2)");
        app.add_option("--weights", weights, "abrupt,steady sampling weights (default 0.1,1.0)")
            ->delimiter(',')
            ->expected(2);
        app.add_option("--tau", tau, "activation threshold (default 1e-3)");
        app.add_option("--workers", workers, "worker threads (default 1)");
        app.add_option("--width", width, "frame width for feature-only runs");
        app.add_option("--height", height, "frame height for feature-only runs");
    }

    PipelineConfig resolve() const {
        PipelineConfig c = config.empty() ? PipelineConfig{} : load_config(config);
        if (input) c.frames_dir = *input;
        if (features) c.features = *features;
        if (detections) c.detections = *detections;
        if (flows) c.flows = *flows;
        if (out) c.out = *out;
        if (speedup) c.speedup = *speedup;
        if (spf) c.spf = *spf;
        if (tau) c.tau = *tau;
        if (workers) c.workers = *workers;
        if (width) c.frame_width = *width;
        if (height) c.frame_height = *height;
        if (!weights.empty()) {
            c.weight_low = weights[0];
            c.weight_high = weights[1];
        }
        if (export_frames) c.export_frames = true;
        c.validate();
        return c;
    }
};

void print_summary(const PipelineResult& result, const PipelineConfig& config) {
    const auto& r = result.report;
    std::printf("selected %zu of %zu frames (speed-up %.4f, deviation %+.4f)\n", r.n_selected,
                r.n_original, r.speedup_achieved, r.speedup_deviation);
    std::printf("semantic retention %.4f\n", r.semantic_retention);
    if (r.instability) std::printf("instability %.4f (window %d)\n", *r.instability, r.instability_window);
    if (r.appearance_cv) std::printf("appearance cost CV %.4f\n", *r.appearance_cv);
    for (const auto& seg : result.segments) {
        std::printf("  [%zu, %zu) %-12s S=%.3f target=%zu sampled=%zu%s lambda=%g inserted=%zu\n",
                    seg.plan.start, seg.plan.end, std::string(to_string(seg.plan.kind)).c_str(),
                    seg.plan.speedup, seg.plan.target_frames, seg.sampler_target,
                    seg.truncated ? " (truncated)" : "", seg.lambda, seg.inserted);
    }
    for (const auto& t : result.timings) std::printf("  %-10s %10.1f ms\n", t.stage.c_str(), t.milliseconds);
    if (!config.out.empty()) std::printf("outputs written to %s\n", config.out.string().c_str());
}

int run_command(const CommonFlags& flags, bool require_features) {
    const PipelineConfig config = flags.resolve();
    if (require_features && config.features.empty()) throw ConfigError("sample needs --features");
    if (config.out.empty()) throw ConfigError("--out is required");
    const PipelineInputs inputs = load_inputs(config);
    const PipelineResult result = run_pipeline(config, inputs);
    export_selection(result, config, inputs, config.out);
    print_summary(result, config);
    return kOk;
}

int describe_command(const CommonFlags& flags, const std::string& output, const std::string& flows_out) {
    PipelineConfig config = flags.resolve();
    if (config.frames_dir.empty()) throw ConfigError("describe needs --input");
    config.features.clear();
    PipelineInputs inputs = load_inputs(config);
    std::vector<FlowField> flows = inputs.flows ? *inputs.flows
                                                : per_frame_flows(*inputs.frames, config.flow_block,
                                                                  config.flow_radius, config.workers);
    const DetectionSet empty(inputs.frame_count());
    const FeatureMatrix features =
        describe_sequence(*inputs.frames, flows, inputs.detections.empty() ? empty : inputs.detections,
                          config.normalize_blocks, config.workers);
    save_feature_matrix(output, features);
    if (!flows_out.empty()) save_flows(flows_out, flows);
    std::printf("wrote %zu x %zu features to %s\n", features.rows(), features.cols(), output.c_str());
    return kOk;
}

int evaluate_command(const CommonFlags& flags, const std::string& selection_path, const std::string& output) {
    const PipelineConfig config = flags.resolve();
    const PipelineInputs inputs = load_inputs(config);
    const auto selection = load_selection(selection_path);
    const EvaluationReport report = evaluate_selection(config, inputs, selection);
    nlohmann::json j = {{"selection", report_to_json(report)}};
    if (static_cast<double>(inputs.frame_count()) >= config.speedup) {
        j["uniform"] = report_to_json(compare_uniform(config, inputs));
    }
    const std::string text = j.dump(2) + "\n";
    if (output.empty()) {
        std::cout << text;
    } else {
        std::ofstream file(output);
        if (!(file << text)) throw InputError("cannot write " + output);
    }
    return kOk;
}

struct SynthFlags {
    std::string out;
    std::uint64_t seed = 1;
    std::size_t frames = 300;
    int width = 64, height = 48;
    bool features_only = false;
    std::size_t dims = 32;
};

int synth_command(const SynthFlags& f) {
    if (f.features_only) {
        std::filesystem::create_directories(f.out);
        const FeatureMatrix m = synthetic_features(f.frames, f.dims, f.seed);
        save_feature_matrix(std::filesystem::path(f.out) / "features.bin", m);
        std::printf("wrote %zu x %zu synthetic features to %s\n", m.rows(), m.cols(), f.out.c_str());
        return kOk;
    }
    SynthOptions options = random_layout(f.frames, f.seed);
    options.width = f.width;
    options.height = f.height;
    const SynthCorpus corpus = make_corpus(options);
    write_corpus(corpus, f.out);
    save_flows(std::filesystem::path(f.out) / "truth_flows.bin",
               synthetic_flows(f.frames, corpus.pans, f.width, f.height));
    std::printf("wrote %zu frames (%zu pans, %zu bursts) to %s\n", corpus.frames.size(),
                corpus.pans.size(), corpus.bursts.size(), f.out.c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic fast-forward frame selection"};
    app.require_subcommand(1);

    CommonFlags run_flags, sample_flags, describe_flags, evaluate_flags;
    auto* run = app.add_subcommand("run", "full pipeline: frames or features to a selection");
    run_flags.attach(*run);
    run->add_flag("--export-frames", run_flags.export_frames, "copy selected frames into <out>/frames");

    auto* sample = app.add_subcommand("sample", "sample from a feature file");
    sample_flags.attach(*sample);

    std::string describe_out, flows_out;
    auto* describe = app.add_subcommand("describe", "extract per-frame descriptors");
    describe_flags.attach(*describe, false);
    describe->add_option("--out", describe_out, "feature file to write")->required();
    describe->add_option("--flows-out", flows_out, "also save the computed flows");

    std::string selection_path, evaluate_out;
    auto* evaluate = app.add_subcommand("evaluate", "score an external selection");
    evaluate_flags.attach(*evaluate, false);
    evaluate->add_option("--selection", selection_path, "selection (.txt or .json)")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out", evaluate_out, "report file (stdout when omitted)");

    SynthFlags synth_flags;
    auto* synth = app.add_subcommand("synth", "generate a synthetic test corpus");
    synth->add_option("--out", synth_flags.out, "output directory")->required();
    synth->add_option("--seed", synth_flags.seed, "random seed");
    synth->add_option("--frames", synth_flags.frames, "number of frames")->check(CLI::Range(2, 1000000));
    synth->add_option("--width", synth_flags.width, "frame width")->check(CLI::Range(16, 4096));
    synth->add_option("--height", synth_flags.height, "frame height")->check(CLI::Range(16, 4096));
    synth->add_flag("--features-only", synth_flags.features_only, "write a feature matrix instead of frames");
    synth->add_option("--dims", synth_flags.dims, "feature dimensions")->check(CLI::Range(1, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*run) return run_command(run_flags, false);
        if (*sample) return run_command(sample_flags, true);
        if (*describe) return describe_command(describe_flags, describe_out, flows_out);
        if (*evaluate) return evaluate_command(evaluate_flags, selection_path, evaluate_out);
        if (*synth) return synth_command(synth_flags);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const StageError& e) {
        std::fprintf(stderr, "error in stage %s\n", e.what());
        return e.input_related() ? kInput : kInternal;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInput;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kInternal;
    }
    return kUsage;
}
