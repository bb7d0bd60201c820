#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sparseff/ingest.hpp"

namespace sparseff {

struct SemanticProfile {
    std::vector<double> score;
    std::vector<double> smoothed_score;

    std::size_t size() const noexcept { return score.size(); }
};

enum class SegmentKind { kNonSemantic, kSemantic };

std::string_view to_string(SegmentKind kind);

struct Segment {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive
    SegmentKind kind = SegmentKind::kNonSemantic;

    std::size_t length() const noexcept { return end - start; }
};

struct PlannedSegment : Segment {
    double speedup = 1.0;
    std::size_t target_frames = 1;
};

struct SegmentPlan {
    std::vector<PlannedSegment> segments;
    double semantic_speedup = 0.0;      // 0 when there are no semantic frames
    double non_semantic_speedup = 0.0;  // 0 when there are no non-semantic frames
    bool clamped = false;               // a speed-up bound was hit
    bool fallback = false;              // both bounds failed; every segment runs at S

    std::size_t total_target() const;
};

/// Sum over detections of confidence * centrality * relative area, where
/// centrality is a unit-peak Gaussian around the frame center with
/// sigma = width / 4.
double semantic_score(std::span<const Detection> detections, int width, int height);

std::vector<double> semantic_scores(const DetectionSet& detections, int width, int height);

/// Attaches a border-replicated moving average of width `window`.
SemanticProfile build_profile(std::vector<double> scores, int window = 51);

/// Thresholds the smoothed profile (strictly above `threshold`, or above its
/// mean when unset) and merges runs shorter than `min_segment_length`.
std::vector<Segment> segment_profile(const SemanticProfile& profile,
                                     std::size_t min_segment_length = 50,
                                     std::optional<double> threshold = std::nullopt);

struct SpeedupBounds {
    double min_speedup = 2.0;  // slowest allowed semantic rate
    double cap_factor = 10.0;  // non-semantic rate is capped at cap_factor * S
};

/// Chooses one rate for semantic and one for non-semantic segments so that the
/// whole video plays at `speedup`, then sets per-segment frame targets whose
/// sum is round(n / speedup).
SegmentPlan allocate_speedups(std::span<const Segment> segments, double speedup,
                              SpeedupBounds bounds = {});

}  // namespace sparseff
