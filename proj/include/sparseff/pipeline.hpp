#pragma once

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparseff/config.hpp"
#include "sparseff/descriptor.hpp"
#include "sparseff/ingest.hpp"
#include "sparseff/metrics.hpp"
#include "sparseff/sampler.hpp"
#include "sparseff/semantics.hpp"
#include "sparseff/sft.hpp"

namespace sparseff {

inline constexpr const char* kVersion = "1.0.0";

/// Everything a run reads. Either frames or features must be present.
struct PipelineInputs {
    std::optional<FrameSequence> frames;
    std::optional<FeatureMatrix> features;
    std::optional<std::vector<FlowField>> flows;
    DetectionSet detections;  // empty when no detections were supplied
    /// Overrides the color-histogram appearance cost when set.
    AppearanceCostFn appearance;

    std::size_t frame_count() const;
};

PipelineInputs load_inputs(const PipelineConfig& config);

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;
};

struct SegmentSelection {
    PlannedSegment plan;
    std::size_t sampler_target = 0;
    double lambda = 0.0;
    std::size_t activated = 0;
    bool reached = false;
    bool truncated = false;
    std::size_t iterations = 0;
    std::size_t inserted = 0;
    std::size_t boundary_extensions = 0;
    SelectionTimeline timeline;  // global frame indices
};

struct PipelineResult {
    FeatureMatrix features;
    std::vector<double> weights;
    SemanticProfile profile;
    SegmentPlan plan;
    std::vector<SegmentSelection> segments;
    std::vector<std::size_t> selection;   // concatenated, strictly increasing
    std::vector<Transition> transitions;  // between consecutive selected frames
    std::vector<double> instability_series;
    EvaluationReport report;
    EvaluationReport uniform;                 // every S-th frame, same metrics
    std::optional<double> original_instability;
    std::vector<StageTiming> timings;
};

/// Runs every stage in order; failures are rethrown as StageError.
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs);
PipelineResult run_pipeline(const PipelineConfig& config);

/// Frames 0, S, 2S, ... (floor(n / S) of them) for the given video length.
std::vector<std::size_t> uniform_selection(std::size_t n, double speedup);

/// Scores an arbitrary selection with the same metrics as a pipeline run.
EvaluationReport evaluate_selection(const PipelineConfig& config, const PipelineInputs& inputs,
                                    const std::vector<std::size_t>& selection,
                                    std::vector<double>* instability_series = nullptr);

EvaluationReport compare_uniform(const PipelineConfig& config, const PipelineInputs& inputs);

/// Plain text (one index per line) or the JSON written by export_selection.
std::vector<std::size_t> load_selection(const std::filesystem::path& path);

nlohmann::json selection_to_json(const PipelineResult& result);

/// Writes selection.txt, selection.json, transitions.csv, instability.csv,
/// report.json and manifest.json (plus frames/ when requested) into `out`.
/// Files written so far are removed if any write fails.
void export_selection(const PipelineResult& result, const PipelineConfig& config,
                      const PipelineInputs& inputs, const std::filesystem::path& out);

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace sparseff
