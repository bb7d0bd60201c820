#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "sparseff/descriptor.hpp"
#include "sparseff/ingest.hpp"

namespace sparseff {

/// Half-open frame interval [first, second).
using Interval = std::pair<std::size_t, std::size_t>;

struct SynthOptions {
    std::size_t frames = 300;
    int width = 64;
    int height = 48;
    std::uint64_t seed = 1;
    std::vector<Interval> pans;    // fast horizontal camera motion
    std::vector<Interval> bursts;  // a large centered object is visible
    int pan_speed = 4;             // pixels per frame inside pans
    double color_drift = 0.02;     // tint oscillation frequency (radians per frame)
    int noise = 2;                 // per-pixel uniform noise amplitude
};

struct SynthCorpus {
    FrameSequence frames;
    DetectionSet detections;
    std::vector<Interval> pans;
    std::vector<Interval> bursts;
};

/// Static textured scene seen through a camera that pans inside `pans`, with
/// a slow tint drift and an annotated object during `bursts`.
SynthCorpus make_corpus(const SynthOptions& options);

/// Random pan and burst intervals covering roughly the given fractions.
SynthOptions random_layout(std::size_t frames, std::uint64_t seed, double pan_fraction = 0.1,
                           double burst_fraction = 0.1);

/// One centered high-confidence detection per burst frame.
DetectionSet burst_detections(std::size_t frames, const std::vector<Interval>& bursts, int width,
                              int height);

/// Uniform horizontal flow of `speed` inside pans and zero elsewhere on a
/// cells_x x cells_y grid.
std::vector<FlowField> synthetic_flows(std::size_t frames, const std::vector<Interval>& pans,
                                       int width, int height, int block = 8, float speed = 4.0f);

/// Non-negative features with piecewise-constant scene means plus noise.
FeatureMatrix synthetic_features(std::size_t frames, std::size_t dims, std::uint64_t seed,
                                 std::size_t scene_length = 200);

/// Writes frames/NNNNNN.png and detections.jsonl under `dir`.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace sparseff
