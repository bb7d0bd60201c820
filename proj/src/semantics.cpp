#include "sparseff/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparseff/error.hpp"
#include "sparseff/signal.hpp"

namespace sparseff {

std::string_view to_string(SegmentKind kind) {
    return kind == SegmentKind::kSemantic ? "semantic" : "non-semantic";
}

std::size_t SegmentPlan::total_target() const {
    std::size_t total = 0;
    for (const auto& s : segments) total += s.target_frames;
    return total;
}

double semantic_score(std::span<const Detection> detections, int width, int height) {
    const double cx = width / 2.0;
    const double cy = height / 2.0;
    const double sigma = width / 4.0;
    const double frame_area = static_cast<double>(width) * height;
    double score = 0.0;
    for (const auto& det : detections) {
        const double bx = det.bbox.x + det.bbox.w / 2.0 - cx;
        const double by = det.bbox.y + det.bbox.h / 2.0 - cy;
        const double centrality = std::exp(-(bx * bx + by * by) / (2.0 * sigma * sigma));
        score += det.confidence * centrality * (det.bbox.w * det.bbox.h / frame_area);
    }
    return score;
}

std::vector<double> semantic_scores(const DetectionSet& detections, int width, int height) {
    std::vector<double> out(detections.size());
    for (std::size_t i = 0; i < detections.size(); ++i) {
        out[i] = semantic_score(detections[i], width, height);
    }
    return out;
}

SemanticProfile build_profile(std::vector<double> scores, int window) {
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0) throw InputError("semantic scores must be finite and >= 0");
    }
    SemanticProfile profile;
    profile.smoothed_score = moving_average(scores, window);
    profile.score = std::move(scores);
    return profile;
}

std::vector<Segment> segment_profile(const SemanticProfile& profile, std::size_t min_segment_length,
                                     std::optional<double> threshold) {
    const auto& smoothed = profile.smoothed_score;
    const std::size_t n = smoothed.size();
    if (n == 0) return {};
    const double t = threshold.value_or(
        std::accumulate(smoothed.begin(), smoothed.end(), 0.0) / static_cast<double>(n));

    std::vector<Segment> runs;
    for (std::size_t i = 0; i < n; ++i) {
        const auto kind = smoothed[i] > t ? SegmentKind::kSemantic : SegmentKind::kNonSemantic;
        if (runs.empty() || runs.back().kind != kind) {
            runs.push_back({i, i + 1, kind});
        } else {
            runs.back().end = i + 1;
        }
    }

    // Runs alternate in kind, so absorbing a short run into either neighbor
    // flips it and fuses it with both. Shortest first; earliest on ties.
    while (runs.size() > 1) {
        auto shortest = std::min_element(runs.begin(), runs.end(), [](const Segment& a, const Segment& b) {
            return a.length() < b.length();
        });
        if (shortest->length() >= min_segment_length) break;
        const auto idx = static_cast<std::size_t>(shortest - runs.begin());
        if (idx > 0) {
            runs[idx - 1].end = runs[idx].end;
            if (idx + 1 < runs.size()) {
                runs[idx - 1].end = runs[idx + 1].end;
                runs.erase(runs.begin() + static_cast<long>(idx), runs.begin() + static_cast<long>(idx) + 2);
            } else {
                runs.erase(runs.begin() + static_cast<long>(idx));
            }
        } else {
            runs[1].start = 0;
            runs.erase(runs.begin());
        }
    }
    return runs;
}

namespace {

// Per-segment targets: rounded shares, residual spread over the longest
// segments first, each target kept in [1, length].
void assign_targets(std::vector<PlannedSegment>& segs, std::size_t total) {
    for (auto& s : segs) {
        const double exact = static_cast<double>(s.length()) / s.speedup;
        s.target_frames = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(exact)), 1,
                                                  s.length());
    }
    std::vector<std::size_t> order(segs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return segs[a].length() > segs[b].length();
    });
    auto sum = [&] {
        std::size_t acc = 0;
        for (const auto& s : segs) acc += s.target_frames;
        return acc;
    };
    for (std::size_t current = sum(); current != total;) {
        bool changed = false;
        for (std::size_t k : order) {
            if (current == total) break;
            auto& s = segs[k];
            if (current < total && s.target_frames < s.length()) {
                ++s.target_frames;
                ++current;
                changed = true;
            } else if (current > total && s.target_frames > 1) {
                --s.target_frames;
                --current;
                changed = true;
            }
        }
        if (!changed) break;
    }
}

}  // namespace

SegmentPlan allocate_speedups(std::span<const Segment> segments, double speedup,
                              SpeedupBounds bounds) {
    if (!(speedup > 1.0)) throw ConfigError("speed-up must exceed 1");
    if (segments.empty()) throw InputError("no segments to plan");
    std::size_t expected_start = 0;
    double semantic_frames = 0.0, other_frames = 0.0;
    for (const auto& s : segments) {
        if (s.start != expected_start || s.end <= s.start) {
            throw InputError("segments must tile the video without gaps or empty ranges");
        }
        expected_start = s.end;
        (s.kind == SegmentKind::kSemantic ? semantic_frames : other_frames) +=
            static_cast<double>(s.length());
    }
    const double total_frames = semantic_frames + other_frames;
    const double budget = total_frames / speedup;

    SegmentPlan plan;
    double s_sem = speedup, s_ns = speedup;
    if (semantic_frames > 0.0 && other_frames > 0.0) {
        const double cap = bounds.cap_factor * speedup;
        s_sem = std::max(bounds.min_speedup, speedup / 2.0);
        const double remaining = budget - semantic_frames / s_sem;
        s_ns = remaining > 0.0 ? other_frames / remaining : std::numeric_limits<double>::infinity();
        if (s_ns > cap || s_ns < speedup) {
            plan.clamped = true;
            s_ns = std::clamp(s_ns, speedup, cap);
            const double left = budget - other_frames / s_ns;
            s_sem = left > 0.0 ? semantic_frames / left : std::numeric_limits<double>::infinity();
            if (!(s_sem >= 1.0 && s_sem <= s_ns)) {
                plan.fallback = true;
                s_sem = s_ns = speedup;
            }
        }
    }
    plan.semantic_speedup = semantic_frames > 0.0 ? s_sem : 0.0;
    plan.non_semantic_speedup = other_frames > 0.0 ? s_ns : 0.0;

    for (const auto& s : segments) {
        PlannedSegment p;
        static_cast<Segment&>(p) = s;
        p.speedup = s.kind == SegmentKind::kSemantic ? s_sem : s_ns;
        plan.segments.push_back(p);
    }
    const auto total = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(budget)));
    assign_targets(plan.segments, total);
    return plan;
}

}  // namespace sparseff
