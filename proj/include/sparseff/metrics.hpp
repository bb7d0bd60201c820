#pragma once

#include "json.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "sparseff/image.hpp"
#include "sparseff/ingest.hpp"

namespace sparseff {

struct InstabilityResult {
    double index = 0.0;                // mean over windows
    std::vector<double> per_window;    // mean per-pixel temporal std of each window
};

/// Slides a window of `window` consecutive frames over the sequence, takes the
/// population standard deviation of every pixel's BT.601 luma inside the
/// window, averages over pixels, then averages over windows.
InstabilityResult instability_index(std::span<const GrayImage> frames, int window = 4);
InstabilityResult instability_index(const FrameSequence& frames,
                                    std::span<const std::size_t> selection, int window = 4);

/// (n_original / n_selected) - required.
double speedup_deviation(std::size_t n_original, std::size_t n_selected, double required);

/// Selected score mass over the top-round(n / S) score mass, clamped to 1;
/// 1 when that maximum is zero.
double semantic_retention(std::span<const std::size_t> selection, std::span<const double> scores,
                          double required_speedup);

/// Population std / mean of per-transition appearance costs; 0 for zero mean.
/// Needs at least two transitions.
double appearance_cost_cv(std::span<const double> appearance_costs);

struct SegmentBreakdown {
    std::size_t segment = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string kind;
    double planned_speedup = 0.0;
    std::size_t selected = 0;
    double achieved_speedup = 0.0;
    double semantic_retention = 0.0;
    double appearance_cv = 0.0;
};

struct EvaluationReport {
    std::size_t n_original = 0;
    std::size_t n_selected = 0;
    double required_speedup = 0.0;
    double speedup_achieved = 0.0;
    double speedup_deviation = 0.0;
    double semantic_retention = 0.0;
    std::optional<double> instability;   // needs frames
    std::optional<double> appearance_cv; // needs at least two transitions
    int instability_window = 4;
    std::vector<SegmentBreakdown> segments;
};

nlohmann::json report_to_json(const EvaluationReport& report);

}  // namespace sparseff
