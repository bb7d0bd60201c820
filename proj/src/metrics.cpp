#include "sparseff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "sparseff/error.hpp"

namespace sparseff {

InstabilityResult instability_index(std::span<const GrayImage> frames, int window) {
    if (window < 2) throw InputError("instability window must be at least 2");
    if (frames.size() < static_cast<std::size_t>(window)) {
        throw InputError("instability index needs at least " + std::to_string(window) +
                         " frames, got " + std::to_string(frames.size()));
    }
    const std::size_t pixels = frames.front().values.size();
    for (const auto& f : frames) {
        if (f.values.size() != pixels) throw InputError("instability frames differ in size");
    }
    InstabilityResult result;
    const std::size_t windows = frames.size() - static_cast<std::size_t>(window) + 1;
    result.per_window.reserve(windows);
    const double w = window;
    for (std::size_t start = 0; start < windows; ++start) {
        double total = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) {
            double mean = 0.0;
            for (int k = 0; k < window; ++k) mean += frames[start + static_cast<std::size_t>(k)].values[p];
            mean /= w;
            double var = 0.0;
            for (int k = 0; k < window; ++k) {
                const double d = frames[start + static_cast<std::size_t>(k)].values[p] - mean;
                var += d * d;
            }
            total += std::sqrt(var / w);
        }
        result.per_window.push_back(total / static_cast<double>(pixels));
    }
    result.index = std::accumulate(result.per_window.begin(), result.per_window.end(), 0.0) /
                   static_cast<double>(windows);
    return result;
}

InstabilityResult instability_index(const FrameSequence& frames, std::span<const std::size_t> selection,
                                    int window) {
    std::vector<GrayImage> gray;
    gray.reserve(selection.size());
    for (std::size_t i : selection) gray.push_back(to_gray(frames.frames.at(i)));
    return instability_index(gray, window);
}

double speedup_deviation(std::size_t n_original, std::size_t n_selected, double required) {
    if (n_selected == 0) throw InputError("speed-up needs at least one selected frame");
    return static_cast<double>(n_original) / static_cast<double>(n_selected) - required;
}

double semantic_retention(std::span<const std::size_t> selection, std::span<const double> scores,
                          double required_speedup) {
    const auto expected = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(scores.size()) / required_speedup)));
    std::vector<double> sorted(scores.begin(), scores.end());
    const auto top = std::min(expected, sorted.size());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<long>(top), sorted.end(),
                      std::greater<>());
    const double mpsv = std::accumulate(sorted.begin(), sorted.begin() + static_cast<long>(top), 0.0);
    if (mpsv <= 0.0) return 1.0;
    double got = 0.0;
    for (std::size_t i : selection) got += scores[i];
    return std::min(1.0, got / mpsv);
}

double appearance_cost_cv(std::span<const double> costs) {
    if (costs.size() < 2) throw InputError("coefficient of variation needs at least 2 transitions");
    const double n = static_cast<double>(costs.size());
    const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / n;
    if (mean == 0.0) return 0.0;
    double var = 0.0;
    for (double c : costs) var += (c - mean) * (c - mean);
    return std::sqrt(var / n) / mean;
}

nlohmann::json report_to_json(const EvaluationReport& r) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : r.segments) {
        segments.push_back({{"segment", s.segment},
                            {"start", s.start},
                            {"end", s.end},
                            {"kind", s.kind},
                            {"planned_speedup", s.planned_speedup},
                            {"selected", s.selected},
                            {"achieved_speedup", s.achieved_speedup},
                            {"semantic_retention", s.semantic_retention},
                            {"appearance_cv", s.appearance_cv}});
    }
    nlohmann::json j = {{"n_original", r.n_original},
                        {"n_selected", r.n_selected},
                        {"required_speedup", r.required_speedup},
                        {"speedup_achieved", r.speedup_achieved},
                        {"speedup_deviation", r.speedup_deviation},
                        {"semantic_retention", r.semantic_retention},
                        {"instability", nullptr},
                        {"instability_window", r.instability_window},
                        {"appearance_cv", nullptr},
                        {"segments", segments}};
    if (r.instability) j["instability"] = *r.instability;
    if (r.appearance_cv) j["appearance_cv"] = *r.appearance_cv;
    return j;
}

}  // namespace sparseff
