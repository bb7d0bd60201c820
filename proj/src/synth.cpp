#include "sparseff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "sparseff/error.hpp"

namespace fs = std::filesystem;

namespace sparseff {

namespace {

bool inside(const std::vector<Interval>& intervals, std::size_t i) {
    return std::any_of(intervals.begin(), intervals.end(),
                       [i](const Interval& r) { return i >= r.first && i < r.second; });
}

/// Smooth periodic value noise: a coarse random lattice, bilinearly upsampled.
class Texture {
public:
    Texture(int width, int height, int cell, std::mt19937_64& rng)
        : width_(width), height_(height), cell_(cell) {
        lx_ = width / cell;
        ly_ = height / cell + 2;
        std::uniform_int_distribution<int> value(0, 255);
        lattice_.resize(static_cast<std::size_t>(lx_ * ly_) * 3);
        for (auto& v : lattice_) v = static_cast<double>(value(rng));
    }

    double sample(int x, int y, int channel) const {
        const int px = ((x % width_) + width_) % width_;
        const double fx = static_cast<double>(px) / cell_;
        const double fy = static_cast<double>(std::clamp(y, 0, height_ - 1)) / cell_;
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const double tx = fx - x0, ty = fy - y0;
        const auto at = [&](int i, int j) {
            i %= lx_;
            j = std::min(j, ly_ - 1);
            return lattice_[(static_cast<std::size_t>(j) * lx_ + i) * 3 + channel];
        };
        const double top = at(x0, y0) * (1 - tx) + at(x0 + 1, y0) * tx;
        const double bottom = at(x0, y0 + 1) * (1 - tx) + at(x0 + 1, y0 + 1) * tx;
        return top * (1 - ty) + bottom * ty;
    }

private:
    int width_, height_, cell_;
    int lx_ = 0, ly_ = 0;
    std::vector<double> lattice_;
};

std::uint8_t clamp_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

BoundingBox burst_box(int width, int height) {
    const double w = width * 0.4, h = height * 0.4;
    return {(width - w) / 2.0, (height - h) / 2.0, w, h};
}

}  // namespace

SynthCorpus make_corpus(const SynthOptions& o) {
    if (o.frames < 2) throw InputError("synthetic corpus needs at least 2 frames");
    if (o.width < 16 || o.height < 16) throw InputError("synthetic frames must be at least 16x16");
    std::mt19937_64 rng(o.seed);
    const int texture_width = (std::max(256, o.width * 4) + 7) / 8 * 8;
    const Texture texture(texture_width, o.height, 8, rng);
    std::uniform_int_distribution<int> noise(-o.noise, o.noise);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double phases[3] = {phase(rng), phase(rng), phase(rng)};

    SynthCorpus corpus;
    corpus.pans = o.pans;
    corpus.bursts = o.bursts;
    corpus.frames.frames.reserve(o.frames);
    const BoundingBox box = burst_box(o.width, o.height);
    long offset = 0;
    for (std::size_t t = 0; t < o.frames; ++t) {
        Image frame(o.width, o.height);
        double tint[3];
        for (int c = 0; c < 3; ++c) tint[c] = 30.0 * std::sin(o.color_drift * static_cast<double>(t) + phases[c]);
        const bool object = inside(o.bursts, t);
        for (int y = 0; y < o.height; ++y) {
            for (int x = 0; x < o.width; ++x) {
                const bool in_box = object && x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h;
                for (int c = 0; c < 3; ++c) {
                    const double base = in_box ? (c == 0 ? 220.0 : 40.0)
                                               : texture.sample(static_cast<int>(x + offset), y, c) + tint[c];
                    frame.at(x, y, c) = clamp_byte(base + noise(rng));
                }
            }
        }
        corpus.frames.frames.push_back(std::move(frame));
        if (inside(o.pans, t)) offset += o.pan_speed;
    }
    corpus.detections = burst_detections(o.frames, o.bursts, o.width, o.height);
    return corpus;
}

SynthOptions random_layout(std::size_t frames, std::uint64_t seed, double pan_fraction,
                           double burst_fraction) {
    SynthOptions o;
    o.frames = frames;
    o.seed = seed;
    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
    const auto place = [&](double fraction, std::size_t length, std::vector<Interval>& out,
                           const std::vector<Interval>& avoid) {
        const auto wanted = static_cast<std::size_t>(fraction * static_cast<double>(frames));
        std::size_t covered = 0;
        for (int attempt = 0; attempt < 200 && covered < wanted && frames > length + 2; ++attempt) {
            std::uniform_int_distribution<std::size_t> start(1, frames - length - 1);
            const std::size_t s = start(rng);
            const Interval r{s, s + length};
            const auto overlaps = [&](const std::vector<Interval>& list) {
                return std::any_of(list.begin(), list.end(), [&](const Interval& q) {
                    return r.first < q.second + length && q.first < r.second + length;
                });
            };
            if (overlaps(out) || overlaps(avoid)) continue;
            out.push_back(r);
            covered += length;
        }
        std::sort(out.begin(), out.end());
    };
    const std::size_t unit = std::clamp<std::size_t>(frames / 20, 10, 120);
    place(burst_fraction, unit, o.bursts, {});
    place(pan_fraction, std::max<std::size_t>(unit / 2, 8), o.pans, o.bursts);
    return o;
}

DetectionSet burst_detections(std::size_t frames, const std::vector<Interval>& bursts, int width,
                              int height) {
    DetectionSet detections(frames);
    const BoundingBox box = burst_box(width, height);
    for (std::size_t t = 0; t < frames; ++t) {
        if (inside(bursts, t)) detections[t].push_back({0, 0.9, box});
    }
    return detections;
}

std::vector<FlowField> synthetic_flows(std::size_t frames, const std::vector<Interval>& pans,
                                       int width, int height, int block, float speed) {
    if (block < 1) throw InputError("block size must be positive");
    std::vector<FlowField> flows(frames);
    const int cells_x = std::max(1, width / block), cells_y = std::max(1, height / block);
    for (std::size_t t = 0; t < frames; ++t) {
        FlowField& f = flows[t];
        f.frame_width = width;
        f.frame_height = height;
        f.cells_x = cells_x;
        f.cells_y = cells_y;
        // Content moves left when the camera pans right.
        const float dx = inside(pans, t) ? -speed : 0.0f;
        f.dx.assign(static_cast<std::size_t>(cells_x * cells_y), dx);
        f.dy.assign(static_cast<std::size_t>(cells_x * cells_y), 0.0f);
    }
    return flows;
}

FeatureMatrix synthetic_features(std::size_t frames, std::size_t dims, std::uint64_t seed,
                                 std::size_t scene_length) {
    if (frames < 1 || dims < 1) throw InputError("synthetic features need positive dimensions");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mean(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.1);
    FeatureMatrix m(dims, frames);
    std::vector<double> scene(dims);
    for (std::size_t j = 0; j < frames; ++j) {
        if (j % std::max<std::size_t>(1, scene_length) == 0) {
            for (auto& s : scene) s = mean(rng);
        }
        for (std::size_t i = 0; i < dims; ++i) {
            m(i, j) = static_cast<float>(std::max(0.0, scene[i] + noise(rng)));
        }
    }
    return m;
}

void write_corpus(const SynthCorpus& corpus, const fs::path& dir) {
    const fs::path frames_dir = dir / "frames";
    std::error_code ec;
    fs::create_directories(frames_dir, ec);
    if (ec) throw InputError("cannot create " + frames_dir.string() + ": " + ec.message());
    for (std::size_t t = 0; t < corpus.frames.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.png", t);
        write_png(frames_dir / name, corpus.frames.frames[t]);
    }
    save_detections(dir / "detections.jsonl", corpus.detections);
}

}  // namespace sparseff
