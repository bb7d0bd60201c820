#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <vector>

#include "sparseff/image.hpp"
#include "sparseff/ingest.hpp"

namespace sparseff {

inline constexpr int kHofMagnitudeBins = 50;
inline constexpr int kHofOrientationBins = 72;
inline constexpr int kAppearanceSize = 144;
inline constexpr int kContentSize = kNumClasses;
inline constexpr int kSequenceSize = 100;
inline constexpr int kDescriptorSize =
    kHofMagnitudeBins + kHofOrientationBins + kAppearanceSize + kContentSize + kSequenceSize;
static_assert(kDescriptorSize == 446);

inline constexpr int kCdcGrid = 5;
inline constexpr int kCdcCurves = kCdcGrid * kCdcGrid;

/// Block displacement field between two frames. Blocks are `block` pixels
/// wide except the last row/column, which absorbs the remainder.
struct FlowField {
    int frame_width = 0;
    int frame_height = 0;
    int cells_x = 0;
    int cells_y = 0;
    std::vector<float> dx;  // row-major over cells
    std::vector<float> dy;

    std::size_t size() const noexcept { return dx.size(); }
    /// Pixel extent of block column `i` / row `j`.
    CellRange column_range(int i) const;
    CellRange row_range(int j) const;
};

/// Exhaustive SAD block matching on BT.601 luma. `dx`/`dy` give where the
/// block content of `prev` moved to in `next`. Ties prefer the shorter
/// displacement, then scan order.
FlowField compute_dense_flow(const GrayImage& prev, const GrayImage& next, int block = 8,
                             int radius = 7);
FlowField compute_dense_flow(const Image& prev, const Image& next, int block = 8, int radius = 7);

/// Flow assigned to each frame: frame i uses the pair (i, i+1); the last frame
/// reuses the final pair. Requires at least two frames.
std::vector<FlowField> per_frame_flows(const FrameSequence& frames, int block, int radius,
                                       int workers = 1);

struct FlowHistograms {
    std::vector<double> magnitude;    // 50 bins over [0, diagonal / 16], last bin open
    std::vector<double> orientation;  // 72 bins of 5 degrees over [0, 360)
};

FlowHistograms flow_histograms(const FlowField& flow);

/// Mean, population std and skewness of H, S, V over a 4x4 grid; 144 values.
std::vector<double> appearance_descriptor(const Image& frame);

/// Raw per-class detection counts; 80 values.
std::vector<double> content_descriptor(std::span<const Detection> detections);

/// One-hot vector with entry (index mod 100) set.
std::vector<double> sequence_descriptor(std::size_t index);

struct FrameDescriptor {
    std::vector<double> hof_m;
    std::vector<double> hof_o;
    std::vector<double> appearance;
    std::vector<double> content;
    std::vector<double> sequence;

    /// [hof_m | hof_o | appearance | content | sequence], 446 values.
    std::vector<double> concatenated() const;
};

/// With `normalize_blocks`, each block is scaled to unit L2 norm (zero blocks
/// stay zero) before concatenation.
FrameDescriptor describe_frame(const Image& frame, const FlowField& flow,
                               std::span<const Detection> detections, std::size_t index,
                               bool normalize_blocks = false);

/// Describes every frame into a 446 x n feature matrix.
FeatureMatrix describe_sequence(const FrameSequence& frames, std::span<const FlowField> flows,
                                const DetectionSet& detections, bool normalize_blocks = false,
                                int workers = 1);

/// Cumulative displacement curves over a 5x5 grid (rows of `curves`, one
/// column per frame) with their time derivative and the resulting weights.
struct MotionProfile {
    Eigen::MatrixXd curves;
    Eigen::MatrixXd derivative;
    std::vector<bool> abrupt;
    std::vector<double> weights;
};

/// Builds C (running sum of per-cell mean horizontal displacement) and C'
/// (central difference of C after a `window`-wide moving average).
MotionProfile cumulative_displacement_curves(std::span<const FlowField> flows, int window = 31);

/// Marks frames where all curve derivatives share a strict sign and assigns
/// `weight_low` there, `weight_high` elsewhere.
void abrupt_motion_mask(MotionProfile& profile, double weight_low = 0.1, double weight_high = 1.0);

/// Flow cache: u32 cells_x, cells_y, n (little-endian) then, per frame and per
/// cell, float32 dx, dy.
void save_flows(const std::filesystem::path& path, std::span<const FlowField> flows);
/// Frame size restores block geometry; pass 0 to assume 8-pixel blocks.
std::vector<FlowField> load_flows(const std::filesystem::path& path, int frame_width = 0,
                                  int frame_height = 0);

}  // namespace sparseff
