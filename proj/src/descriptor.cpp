#include "sparseff/descriptor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "sparseff/error.hpp"
#include "sparseff/parallel.hpp"
#include "sparseff/signal.hpp"

namespace sparseff {

CellRange FlowField::column_range(int i) const { return grid_cell(frame_width, cells_x, i); }
CellRange FlowField::row_range(int j) const { return grid_cell(frame_height, cells_y, j); }

FlowField compute_dense_flow(const GrayImage& prev, const GrayImage& next, int block, int radius) {
    if (prev.width != next.width || prev.height != next.height) {
        throw InputError("flow frames differ in size: " + std::to_string(prev.width) + "x" +
                         std::to_string(prev.height) + " vs " + std::to_string(next.width) + "x" +
                         std::to_string(next.height));
    }
    if (block < 4) throw InputError("flow block must be at least 4 pixels");

    FlowField flow;
    flow.frame_width = prev.width;
    flow.frame_height = prev.height;
    flow.cells_x = std::max(1, prev.width / block);
    flow.cells_y = std::max(1, prev.height / block);
    flow.dx.assign(static_cast<std::size_t>(flow.cells_x) * flow.cells_y, 0.0f);
    flow.dy.assign(flow.dx.size(), 0.0f);

    const int w = prev.width;
    const int h = prev.height;
    for (int by = 0; by < flow.cells_y; ++by) {
        const auto rows = flow.row_range(by);
        for (int bx = 0; bx < flow.cells_x; ++bx) {
            const auto cols = flow.column_range(bx);
            float best = std::numeric_limits<float>::infinity();
            int best_dx = 0, best_dy = 0, best_len = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                if (rows.begin + dy < 0 || rows.end + dy > h) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (cols.begin + dx < 0 || cols.end + dx > w) continue;
                    float sad = 0.0f;
                    for (int y = rows.begin; y < rows.end && sad <= best; ++y) {
                        const float* a = &prev.values[static_cast<std::size_t>(y) * w];
                        const float* b = &next.values[static_cast<std::size_t>(y + dy) * w + dx];
                        for (int x = cols.begin; x < cols.end; ++x) sad += std::fabs(a[x] - b[x]);
                    }
                    const int len = std::abs(dx) + std::abs(dy);
                    if (sad < best || (sad == best && len < best_len)) {
                        best = sad;
                        best_dx = dx;
                        best_dy = dy;
                        best_len = len;
                    }
                }
            }
            const auto cell = static_cast<std::size_t>(by) * flow.cells_x + bx;
            flow.dx[cell] = static_cast<float>(best_dx);
            flow.dy[cell] = static_cast<float>(best_dy);
        }
    }
    return flow;
}

FlowField compute_dense_flow(const Image& prev, const Image& next, int block, int radius) {
    return compute_dense_flow(to_gray(prev), to_gray(next), block, radius);
}

std::vector<FlowField> per_frame_flows(const FrameSequence& frames, int block, int radius,
                                       int workers) {
    const std::size_t n = frames.size();
    if (n < 2) throw InputError("need at least 2 frames to compute flow");
    std::vector<GrayImage> gray(n);
    parallel_for(n, workers, [&](std::size_t i) { gray[i] = to_gray(frames.frames[i]); });
    std::vector<FlowField> flows(n);
    parallel_for(n - 1, workers, [&](std::size_t i) {
        flows[i] = compute_dense_flow(gray[i], gray[i + 1], block, radius);
    });
    flows[n - 1] = flows[n - 2];
    return flows;
}

FlowHistograms flow_histograms(const FlowField& flow) {
    FlowHistograms out{std::vector<double>(kHofMagnitudeBins, 0.0),
                       std::vector<double>(kHofOrientationBins, 0.0)};
    const double max_magnitude =
        std::hypot(static_cast<double>(flow.frame_width), static_cast<double>(flow.frame_height)) /
        16.0;
    std::size_t moving = 0;
    for (std::size_t k = 0; k < flow.size(); ++k) {
        const double dx = flow.dx[k], dy = flow.dy[k];
        const double magnitude = std::hypot(dx, dy);
        if (magnitude <= 0.0) continue;
        ++moving;
        double degrees = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
        if (degrees < 0.0) degrees += 360.0;
        auto bin = static_cast<int>(std::floor(degrees / 5.0));
        if (bin >= kHofOrientationBins) bin -= kHofOrientationBins;
        out.orientation[static_cast<std::size_t>(bin)] += 1.0;
    }
    if (moving == 0) return out;

    for (std::size_t k = 0; k < flow.size(); ++k) {
        const double magnitude = std::hypot(static_cast<double>(flow.dx[k]),
                                            static_cast<double>(flow.dy[k]));
        auto bin = static_cast<int>(std::floor(magnitude * kHofMagnitudeBins / max_magnitude));
        bin = std::min(bin, kHofMagnitudeBins - 1);
        out.magnitude[static_cast<std::size_t>(bin)] += 1.0;
    }
    for (auto& v : out.magnitude) v /= static_cast<double>(flow.size());
    for (auto& v : out.orientation) v /= static_cast<double>(moving);
    return out;
}

std::vector<double> appearance_descriptor(const Image& frame) {
    if (frame.width() < 4 || frame.height() < 4) {
        throw InputError("appearance descriptor needs a frame of at least 4x4 pixels, got " +
                         std::to_string(frame.width()) + "x" + std::to_string(frame.height()));
    }
    std::vector<double> out;
    out.reserve(kAppearanceSize);
    std::vector<Hsv> cell_pixels;
    for (int cy = 0; cy < 4; ++cy) {
        const auto rows = grid_cell(frame.height(), 4, cy);
        for (int cx = 0; cx < 4; ++cx) {
            const auto cols = grid_cell(frame.width(), 4, cx);
            cell_pixels.clear();
            for (int y = rows.begin; y < rows.end; ++y) {
                for (int x = cols.begin; x < cols.end; ++x) {
                    cell_pixels.push_back(rgb_to_hsv(frame.at(x, y, 0), frame.at(x, y, 1),
                                                     frame.at(x, y, 2)));
                }
            }
            const double count = static_cast<double>(cell_pixels.size());
            for (double Hsv::*channel : {&Hsv::h, &Hsv::s, &Hsv::v}) {
                // Moments of values shifted by the first sample; exact for constant cells.
                const double origin = cell_pixels.front().*channel;
                double shift = 0.0;
                for (const auto& p : cell_pixels) shift += p.*channel - origin;
                shift /= count;
                const double mean = origin + shift;
                double m2 = 0.0, m3 = 0.0;
                for (const auto& p : cell_pixels) {
                    const double d = (p.*channel - origin) - shift;
                    m2 += d * d;
                    m3 += d * d * d;
                }
                m2 /= count;
                m3 /= count;
                const double stddev = std::sqrt(m2);
                const double skew = stddev < 1e-8 ? 0.0 : m3 / (stddev * stddev * stddev);
                out.push_back(mean);
                out.push_back(stddev);
                out.push_back(skew);
            }
        }
    }
    return out;
}

std::vector<double> content_descriptor(std::span<const Detection> detections) {
    std::vector<double> out(kContentSize, 0.0);
    for (const auto& det : detections) out[static_cast<std::size_t>(det.class_id)] += 1.0;
    return out;
}

std::vector<double> sequence_descriptor(std::size_t index) {
    std::vector<double> out(kSequenceSize, 0.0);
    out[index % kSequenceSize] = 1.0;
    return out;
}

std::vector<double> FrameDescriptor::concatenated() const {
    std::vector<double> out;
    out.reserve(kDescriptorSize);
    for (const auto* part : {&hof_m, &hof_o, &appearance, &content, &sequence}) {
        out.insert(out.end(), part->begin(), part->end());
    }
    return out;
}

namespace {

void normalize_l2(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq <= 0.0) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

}  // namespace

FrameDescriptor describe_frame(const Image& frame, const FlowField& flow,
                               std::span<const Detection> detections, std::size_t index,
                               bool normalize_blocks) {
    auto hof = flow_histograms(flow);
    FrameDescriptor d{std::move(hof.magnitude), std::move(hof.orientation),
                      appearance_descriptor(frame), content_descriptor(detections),
                      sequence_descriptor(index)};
    if (normalize_blocks) {
        for (auto* part : {&d.hof_m, &d.hof_o, &d.appearance, &d.content, &d.sequence}) {
            normalize_l2(*part);
        }
    }
    return d;
}

FeatureMatrix describe_sequence(const FrameSequence& frames, std::span<const FlowField> flows,
                                const DetectionSet& detections, bool normalize_blocks,
                                int workers) {
    const std::size_t n = frames.size();
    if (flows.size() != n || detections.size() != n) {
        throw InputError("describe_sequence: frames, flows and detections disagree in length");
    }
    FeatureMatrix features(kDescriptorSize, n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto d = describe_frame(frames.frames[i], flows[i], detections[i], i, normalize_blocks)
                           .concatenated();
        auto column = features.column(i);
        std::transform(d.begin(), d.end(), column.begin(),
                       [](double v) { return static_cast<float>(v); });
    });
    return features;
}

namespace {

// Fraction of each 5x5 grid cell covered by each flow block, normalized per cell.
Eigen::MatrixXd cell_coverage(const FlowField& flow) {
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(kCdcCurves, static_cast<Eigen::Index>(flow.size()));
    for (int gy = 0; gy < kCdcGrid; ++gy) {
        const auto grow = grid_cell(flow.frame_height, kCdcGrid, gy);
        for (int gx = 0; gx < kCdcGrid; ++gx) {
            const auto gcol = grid_cell(flow.frame_width, kCdcGrid, gx);
            const int curve = gy * kCdcGrid + gx;
            for (int by = 0; by < flow.cells_y; ++by) {
                const auto brow = flow.row_range(by);
                const int oy = std::min(grow.end, brow.end) - std::max(grow.begin, brow.begin);
                if (oy <= 0) continue;
                for (int bx = 0; bx < flow.cells_x; ++bx) {
                    const auto bcol = flow.column_range(bx);
                    const int ox = std::min(gcol.end, bcol.end) - std::max(gcol.begin, bcol.begin);
                    if (ox <= 0) continue;
                    weights(curve, by * flow.cells_x + bx) = static_cast<double>(ox) * oy;
                }
            }
            const double total = weights.row(curve).sum();
            if (total > 0.0) weights.row(curve) /= total;
        }
    }
    return weights;
}

}  // namespace

MotionProfile cumulative_displacement_curves(std::span<const FlowField> flows, int window) {
    if (flows.size() < 2) throw InputError("cumulative displacement curves need at least 2 flow fields");
    const auto n = static_cast<Eigen::Index>(flows.size());
    const FlowField& first = flows.front();
    if (first.frame_width < kCdcGrid || first.frame_height < kCdcGrid) {
        throw InputError("flow frame too small for a 5x5 grid");
    }
    const Eigen::MatrixXd coverage = cell_coverage(first);

    MotionProfile profile;
    profile.curves.resize(kCdcCurves, n);
    Eigen::VectorXd running = Eigen::VectorXd::Zero(kCdcCurves);
    for (Eigen::Index t = 0; t < n; ++t) {
        const FlowField& f = flows[static_cast<std::size_t>(t)];
        if (f.frame_width != first.frame_width || f.frame_height != first.frame_height ||
            f.cells_x != first.cells_x || f.cells_y != first.cells_y) {
            throw InputError("flow fields disagree in geometry at frame " + std::to_string(t));
        }
        const Eigen::VectorXd dx =
            Eigen::Map<const Eigen::VectorXf>(f.dx.data(), static_cast<Eigen::Index>(f.size()))
                .cast<double>();
        running += coverage * dx;
        profile.curves.col(t) = running;
    }

    profile.derivative.resize(kCdcCurves, n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int c = 0; c < kCdcCurves; ++c) {
        for (Eigen::Index t = 0; t < n; ++t) row[static_cast<std::size_t>(t)] = profile.curves(c, t);
        const auto smoothed = moving_average(row, window);
        const auto diff = finite_difference(smoothed);
        for (Eigen::Index t = 0; t < n; ++t) {
            profile.derivative(c, t) = diff[static_cast<std::size_t>(t)];
        }
    }
    return profile;
}

void abrupt_motion_mask(MotionProfile& profile, double weight_low, double weight_high) {
    const auto n = profile.derivative.cols();
    profile.abrupt.assign(static_cast<std::size_t>(n), false);
    profile.weights.assign(static_cast<std::size_t>(n), weight_high);
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto col = profile.derivative.col(t);
        const bool abrupt = (col.array() > 0.0).all() || (col.array() < 0.0).all();
        profile.abrupt[static_cast<std::size_t>(t)] = abrupt;
        if (abrupt) profile.weights[static_cast<std::size_t>(t)] = weight_low;
    }
}

namespace {

void write_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) buf.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_flows(const std::filesystem::path& path, std::span<const FlowField> flows) {
    if (flows.empty()) throw InputError("no flow fields to save");
    const auto& first = flows.front();
    std::vector<unsigned char> buf;
    buf.reserve(12 + flows.size() * first.size() * 8);
    write_u32(buf, static_cast<std::uint32_t>(first.cells_x));
    write_u32(buf, static_cast<std::uint32_t>(first.cells_y));
    write_u32(buf, static_cast<std::uint32_t>(flows.size()));
    for (const auto& f : flows) {
        if (f.cells_x != first.cells_x || f.cells_y != first.cells_y) {
            throw InputError("flow fields disagree in grid size");
        }
        for (std::size_t k = 0; k < f.size(); ++k) {
            write_u32(buf, std::bit_cast<std::uint32_t>(f.dx[k]));
            write_u32(buf, std::bit_cast<std::uint32_t>(f.dy[k]));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw InputError("write failed: " + path.string());
}

std::vector<FlowField> load_flows(const std::filesystem::path& path, int frame_width,
                                  int frame_height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open flow file " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), {});
    if (buf.size() < 12) throw InputError("truncated flow header in " + path.string());
    const int cells_x = static_cast<int>(read_u32(buf.data()));
    const int cells_y = static_cast<int>(read_u32(buf.data() + 4));
    const std::size_t n = read_u32(buf.data() + 8);
    const std::size_t cells = static_cast<std::size_t>(cells_x) * cells_y;
    if (cells == 0) throw InputError("empty flow grid in " + path.string());
    if (buf.size() != 12 + n * cells * 8) {
        throw InputError("payload size mismatch in " + path.string());
    }
    if (frame_width <= 0 || frame_height <= 0) {
        frame_width = cells_x * 8;
        frame_height = cells_y * 8;
    }
    std::vector<FlowField> flows(n);
    const unsigned char* p = buf.data() + 12;
    for (auto& f : flows) {
        f.frame_width = frame_width;
        f.frame_height = frame_height;
        f.cells_x = cells_x;
        f.cells_y = cells_y;
        f.dx.resize(cells);
        f.dy.resize(cells);
        for (std::size_t k = 0; k < cells; ++k, p += 8) {
            f.dx[k] = std::bit_cast<float>(read_u32(p));
            f.dy[k] = std::bit_cast<float>(read_u32(p + 4));
        }
    }
    return flows;
}

}  // namespace sparseff
