#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sparseff/image.hpp"
#include "sparseff/ingest.hpp"

namespace sparseff {

/// Per-channel RGB histograms over `bins` equal-width bins of [0, 256),
/// each channel L1-normalized.
struct ColorHistogram {
    int bins = 0;
    std::array<std::vector<double>, 3> channels;
};

ColorHistogram color_histogram(const Image& frame, int bins = 32);

/// Earth mover's distance between two equal-mass 1-D histograms with unit
/// ground distance between adjacent bins: the L1 distance of their CDFs.
double emd_1d(std::span<const double> a, std::span<const double> b);

/// Appearance cost: sum of the per-channel 1-D EMDs.
double appearance_cost(const ColorHistogram& a, const ColorHistogram& b);

/// Appearance cost between two original-frame indices.
using AppearanceCostFn = std::function<double(std::size_t, std::size_t)>;

/// Color-histogram appearance cost over a frame sequence; histograms are
/// computed up front for every frame.
class HistogramAppearance {
public:
    HistogramAppearance(const FrameSequence& frames, int bins = 32, int workers = 1);

    double operator()(std::size_t x, std::size_t y) const;
    const ColorHistogram& histogram(std::size_t i) const { return histograms_.at(i); }

private:
    std::vector<ColorHistogram> histograms_;
};

/// AC(x, y) * (y - x - speedup). Negative when frames are closer than the
/// speed-up. Requires y > x.
double instability(double appearance, std::size_t x, std::size_t y, double speedup);
double instability(const AppearanceCostFn& cost, std::size_t x, std::size_t y, double speedup);

/// Selected frames of one segment [segment_start, segment_end), strictly increasing.
struct SelectionTimeline {
    std::vector<std::size_t> indices;
    std::size_t segment_start = 0;
    std::size_t segment_end = 0;
    double speedup = 1.0;
};

struct Transition {
    std::size_t from = 0;
    std::size_t to = 0;
    double appearance = 0.0;
    double instability = 0.0;
};

std::vector<Transition> transitions(const SelectionTimeline& timeline, const AppearanceCostFn& cost);

/// Position i of the transition (s_i, s_i+1) with the largest instability
/// among those with at least one frame strictly between them; smallest i on
/// ties. nullopt when no transition admits an insertion.
std::optional<std::size_t> find_shakiest_transition(const SelectionTimeline& timeline,
                                                    const AppearanceCostFn& cost);

/// Frame j strictly inside transition `position` minimizing
/// I(s_i, j)^2 + I(j, s_i+1)^2; smallest j on ties.
std::size_t best_insert_frame(const SelectionTimeline& timeline, std::size_t position,
                              const AppearanceCostFn& cost);

struct SmoothingResult {
    SelectionTimeline timeline;
    std::size_t inserted = 0;
    std::size_t boundary_extensions = 0;  // segment ends added when interior insertions ran out
};

/// Inserts frames into the shakiest transitions until the timeline holds
/// `target` frames. When every transition is saturated but the target is not
/// met, the segment's first or last frame (the side with more uncovered
/// frames) is added and insertion resumes.
SmoothingResult smooth_transitions(SelectionTimeline timeline, std::size_t target,
                                   const AppearanceCostFn& cost);

}  // namespace sparseff
