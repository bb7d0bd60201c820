#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sparseff/error.hpp"
#include "sparseff/metrics.hpp"

using namespace sparseff;

namespace {

GrayImage gray(int w, int h, float value) { return {w, h, std::vector<float>(static_cast<std::size_t>(w * h), value)}; }

GrayImage noise_gray(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    GrayImage g = gray(w, h, 0);
    for (auto& v : g.values) v = u(rng);
    return g;
}

double brute_force_index(const std::vector<GrayImage>& frames, int window) {
    const std::size_t windows = frames.size() - static_cast<std::size_t>(window) + 1;
    double total = 0;
    for (std::size_t s = 0; s < windows; ++s) {
        double pixel_sum = 0;
        for (std::size_t p = 0; p < frames[0].values.size(); ++p) {
            double mean = 0;
            for (int k = 0; k < window; ++k) mean += frames[s + k].values[p];
            mean /= window;
            double var = 0;
            for (int k = 0; k < window; ++k) {
                const double d = frames[s + k].values[p] - mean;
                var += d * d;
            }
            pixel_sum += std::sqrt(var / window);
        }
        total += pixel_sum / static_cast<double>(frames[0].values.size());
    }
    return total / static_cast<double>(windows);
}

}  // namespace

TEST_CASE("instability index examples") {
    const std::vector<GrayImage> still(6, gray(8, 6, 77.0f));
    const auto zero = instability_index(still);
    CHECK(zero.index == 0.0);
    CHECK(zero.per_window.size() == 3);

    std::vector<GrayImage> flicker;
    for (int i = 0; i < 9; ++i) flicker.push_back(gray(8, 6, i % 2 ? 255.0f : 0.0f));
    CHECK(instability_index(flicker).index == doctest::Approx(127.5).epsilon(1e-12));

    CHECK_THROWS_AS(instability_index(std::span<const GrayImage>(still.data(), 3)), InputError);
    CHECK_THROWS_AS(instability_index(still, 1), InputError);
}

TEST_CASE("instability index matches a brute-force recount") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<GrayImage> frames;
        const int count = 4 + trial % 9;
        for (int i = 0; i < count; ++i) frames.push_back(noise_gray(7, 5, rng));
        const int window = 2 + trial % 3;
        CHECK(instability_index(frames, window).index ==
              doctest::Approx(brute_force_index(frames, window)).epsilon(1e-9));
    }
}

TEST_CASE("instability index depends only on the selected pixels") {
    FrameSequence seq;
    for (std::uint64_t i = 0; i < 12; ++i) seq.frames.push_back(testing::noise_image(9, 7, i));
    const std::vector<std::size_t> a = {0, 1, 2, 3, 4};
    const std::vector<std::size_t> b = {5, 6, 7, 8, 9};
    std::vector<GrayImage> picked;
    for (std::size_t i : b) picked.push_back(to_gray(seq.frames[i]));
    CHECK(instability_index(seq, b).index == instability_index(picked).index);

    // Shifting the video in time leaves the score untouched.
    FrameSequence shifted;
    for (std::size_t i = 5; i < 12; ++i) shifted.frames.push_back(seq.frames[i]);
    CHECK(instability_index(shifted, a).index == instability_index(seq, b).index);
}

TEST_CASE("speed-up deviation examples") {
    CHECK(speedup_deviation(1000, 100, 10) == 0.0);
    CHECK(speedup_deviation(1000, 98, 10) == doctest::Approx(0.2040816).epsilon(1e-6));
    CHECK(speedup_deviation(1000, 125, 10) == -2.0);
    CHECK_THROWS(speedup_deviation(1000, 0, 10));
    for (std::size_t n = 10; n < 1000; n += 37)
        for (std::size_t k = 1; k < 8; ++k) CHECK(speedup_deviation(n * k, n, static_cast<double>(k)) == 0.0);
}

TEST_CASE("semantic retention examples") {
    const std::vector<double> scores = {10, 0, 0, 10};
    CHECK(semantic_retention(std::vector<std::size_t>{0, 1}, scores, 2) == 0.5);
    CHECK(semantic_retention(std::vector<std::size_t>{0, 3}, scores, 2) == 1.0);
    CHECK(semantic_retention(std::vector<std::size_t>{1, 2}, std::vector<double>(4, 0.0), 2) == 1.0);
}

TEST_CASE("semantic retention stays in [0, 1] and rewards better swaps") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 20 + rng() % 200;
        std::vector<double> scores(n);
        for (auto& s : scores) s = u(rng) < 0.3 ? u(rng) : 0.0;
        std::vector<std::size_t> sel;
        for (std::size_t i = 0; i < n; ++i)
            if (u(rng) < 0.2) sel.push_back(i);
        if (sel.empty()) sel.push_back(0);
        const double S = 2 + 10 * u(rng);
        const double r = semantic_retention(sel, scores, S);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        // Swap one selected frame for the best unselected one.
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!std::binary_search(sel.begin(), sel.end(), i) && (best == n || scores[i] > scores[best])) best = i;
        if (best == n) continue;
        auto worst = std::min_element(sel.begin(), sel.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
        if (scores[best] <= scores[*worst]) continue;
        *worst = best;
        std::sort(sel.begin(), sel.end());
        CHECK(semantic_retention(sel, scores, S) >= r);
    }
}

TEST_CASE("appearance cost CV examples") {
    CHECK(appearance_cost_cv(std::vector<double>{2, 2, 2}) == 0.0);
    CHECK(appearance_cost_cv(std::vector<double>{1, 3}) == 0.5);
    CHECK(appearance_cost_cv(std::vector<double>{0, 0}) == 0.0);
    CHECK_THROWS_AS(appearance_cost_cv(std::vector<double>{1}), InputError);
}

TEST_CASE("report serializes every headline field") {
    EvaluationReport r;
    r.n_original = 1000;
    r.n_selected = 100;
    r.required_speedup = 10;
    r.speedup_achieved = 10;
    r.semantic_retention = 0.75;
    r.instability = 3.5;
    r.segments.push_back({0, 0, 1000, "non_semantic", 10, 100, 10, 1, 0.2});
    const auto j = report_to_json(r);
    CHECK(j.at("n_selected") == 100);
    CHECK(j.at("semantic_retention") == 0.75);
    CHECK(j.at("instability") == 3.5);
    CHECK(j.at("instability_window") == 4);
    CHECK(j.at("appearance_cv").is_null());
    CHECK(j.at("segments").size() == 1);
}
