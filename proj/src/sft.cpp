#include "sparseff/sft.hpp"

#include <algorithm>
#include <cmath>

#include "sparseff/error.hpp"
#include "sparseff/parallel.hpp"

namespace sparseff {

ColorHistogram color_histogram(const Image& frame, int bins) {
    if (bins < 1 || bins > 256) throw InputError("histogram bins must lie in [1, 256]");
    ColorHistogram h;
    h.bins = bins;
    for (auto& c : h.channels) c.assign(static_cast<std::size_t>(bins), 0.0);
    const auto& px = frame.data();
    const std::size_t pixels = px.size() / 3;
    if (pixels == 0) return h;
    for (std::size_t i = 0; i < pixels; ++i) {
        for (int c = 0; c < 3; ++c) {
            const auto bin = static_cast<std::size_t>(px[3 * i + c]) * static_cast<std::size_t>(bins) / 256;
            h.channels[static_cast<std::size_t>(c)][bin] += 1.0;
        }
    }
    for (auto& c : h.channels) {
        for (auto& v : c) v /= static_cast<double>(pixels);
    }
    return h;
}

double emd_1d(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("EMD histograms differ in bin count");
    double mass_a = 0.0, mass_b = 0.0;
    for (double x : a) mass_a += x;
    for (double x : b) mass_b += x;
    if (std::abs(mass_a - mass_b) > 1e-9) throw InputError("EMD histograms differ in total mass");
    double cdf = 0.0, total = 0.0;
    for (std::size_t k = 0; k + 1 < a.size(); ++k) {
        cdf += a[k] - b[k];
        total += std::abs(cdf);
    }
    return total;
}

double appearance_cost(const ColorHistogram& a, const ColorHistogram& b) {
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) total += emd_1d(a.channels[c], b.channels[c]);
    return total;
}

HistogramAppearance::HistogramAppearance(const FrameSequence& frames, int bins, int workers)
    : histograms_(frames.size()) {
    parallel_for(frames.size(), workers,
                 [&](std::size_t i) { histograms_[i] = color_histogram(frames.frames[i], bins); });
}

double HistogramAppearance::operator()(std::size_t x, std::size_t y) const {
    return appearance_cost(histograms_.at(x), histograms_.at(y));
}

double instability(double appearance, std::size_t x, std::size_t y, double speedup) {
    if (y <= x) throw InputError("instability needs y > x");
    return appearance * (static_cast<double>(y - x) - speedup);
}

double instability(const AppearanceCostFn& cost, std::size_t x, std::size_t y, double speedup) {
    return instability(cost(x, y), x, y, speedup);
}

std::vector<Transition> transitions(const SelectionTimeline& timeline, const AppearanceCostFn& cost) {
    std::vector<Transition> out;
    const auto& s = timeline.indices;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double ac = cost(s[i], s[i + 1]);
        out.push_back({s[i], s[i + 1], ac, instability(ac, s[i], s[i + 1], timeline.speedup)});
    }
    return out;
}

namespace {

std::optional<std::size_t> argmax_insertable(std::span<const std::size_t> indices,
                                             std::span<const double> unstable) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i + 1 < indices.size(); ++i) {
        if (indices[i + 1] - indices[i] < 2) continue;
        if (!best || unstable[i] > unstable[*best]) best = i;
    }
    return best;
}

}  // namespace

std::optional<std::size_t> find_shakiest_transition(const SelectionTimeline& timeline,
                                                    const AppearanceCostFn& cost) {
    const auto& s = timeline.indices;
    std::vector<double> unstable(s.size() > 1 ? s.size() - 1 : 0, 0.0);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i + 1] - s[i] >= 2) unstable[i] = instability(cost, s[i], s[i + 1], timeline.speedup);
    }
    return argmax_insertable(s, unstable);
}

std::size_t best_insert_frame(const SelectionTimeline& timeline, std::size_t position,
                              const AppearanceCostFn& cost) {
    const auto& s = timeline.indices;
    if (position + 1 >= s.size()) throw InputError("transition position out of range");
    const std::size_t x = s[position], y = s[position + 1];
    if (y - x < 2) throw InputError("transition has no interior frame");
    std::size_t best = x + 1;
    double best_value = 0.0;
    for (std::size_t j = x + 1; j < y; ++j) {
        const double a = instability(cost, x, j, timeline.speedup);
        const double b = instability(cost, j, y, timeline.speedup);
        const double value = a * a + b * b;
        if (j == x + 1 || value < best_value) {
            best = j;
            best_value = value;
        }
    }
    return best;
}

SmoothingResult smooth_transitions(SelectionTimeline timeline, std::size_t target,
                                   const AppearanceCostFn& cost) {
    auto& s = timeline.indices;
    if (!std::is_sorted(s.begin(), s.end()) || std::adjacent_find(s.begin(), s.end()) != s.end()) {
        throw InputError("timeline indices must be strictly increasing");
    }
    if (!s.empty() && (s.front() < timeline.segment_start || s.back() >= timeline.segment_end)) {
        throw InputError("timeline indices fall outside the segment");
    }
    if (target < s.size()) throw InputError("target is smaller than the current selection");
    if (target > timeline.segment_end - timeline.segment_start) {
        throw InputError("target exceeds the segment length");
    }

    SmoothingResult result;
    std::vector<double> unstable;
    auto score = [&](std::size_t i) {
        return s[i + 1] - s[i] >= 2 ? instability(cost, s[i], s[i + 1], timeline.speedup) : 0.0;
    };
    auto rebuild = [&] {
        unstable.resize(s.empty() ? 0 : s.size() - 1);
        for (std::size_t i = 0; i + 1 < s.size(); ++i) unstable[i] = score(i);
    };
    rebuild();

    while (s.size() < target) {
        const auto position = argmax_insertable(s, unstable);
        if (!position) {
            // Interior exhausted: extend toward the larger uncovered end.
            if (s.empty()) {
                s.push_back(timeline.segment_start);
            } else {
                const std::size_t left = s.front() - timeline.segment_start;
                const std::size_t right = timeline.segment_end - 1 - s.back();
                if (left >= right) s.insert(s.begin(), timeline.segment_start);
                else s.push_back(timeline.segment_end - 1);
            }
            ++result.boundary_extensions;
            rebuild();
            continue;
        }
        const std::size_t j = best_insert_frame(timeline, *position, cost);
        s.insert(s.begin() + static_cast<long>(*position) + 1, j);
        unstable.insert(unstable.begin() + static_cast<long>(*position) + 1, 0.0);
        unstable[*position] = score(*position);
        unstable[*position + 1] = score(*position + 1);
        ++result.inserted;
    }
    result.timeline = std::move(timeline);
    return result;
}

}  // namespace sparseff
