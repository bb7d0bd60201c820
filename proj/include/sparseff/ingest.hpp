#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "sparseff/image.hpp"

namespace sparseff {

/// Ordered frames of one video; every frame has the same dimensions.
struct FrameSequence {
    std::vector<Image> frames;
    std::vector<std::filesystem::path> sources;  // empty for in-memory sequences
    double fps = 30.0;

    std::size_t size() const noexcept { return frames.size(); }
    int width() const { return frames.front().width(); }
    int height() const { return frames.front().height(); }
};

inline constexpr int kNumClasses = 80;

struct BoundingBox {
    double x = 0, y = 0, w = 0, h = 0;
};

struct Detection {
    int class_id = 0;
    double confidence = 0.0;
    BoundingBox bbox;
};

/// Detections bucketed per frame; frames without detections hold empty lists.
using DetectionSet = std::vector<std::vector<Detection>>;

/// Column-major f x n matrix of 32-bit floats, one column per frame.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<float> column(std::size_t j) { return {values_.data() + j * rows_, rows_}; }
    std::span<const float> column(std::size_t j) const {
        return {values_.data() + j * rows_, rows_};
    }
    float operator()(std::size_t i, std::size_t j) const { return values_[j * rows_ + i]; }
    float& operator()(std::size_t i, std::size_t j) { return values_[j * rows_ + i]; }

    Eigen::Map<const Eigen::MatrixXf> map() const {
        return {values_.data(), static_cast<Eigen::Index>(rows_),
                static_cast<Eigen::Index>(cols_)};
    }
    /// Columns [begin, end) widened to double precision.
    Eigen::MatrixXd block_as_double(std::size_t begin, std::size_t end) const;

    const std::vector<float>& values() const noexcept { return values_; }
    std::vector<float>& values() noexcept { return values_; }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> values_;
};

/// Magic of the binary feature file: the bytes "SFFM" read as little-endian u32.
inline constexpr std::uint32_t kFeatureMagic = 0x4D464653u;
inline constexpr std::uint32_t kFeatureVersion = 1;

/// Loads frames named with zero-padded integer stems (.png or .ppm), sorted by
/// numeric stem. Requires at least two frames of identical size.
FrameSequence load_frame_sequence(const std::filesystem::path& dir, double fps = 30.0);

/// Reads JSON Lines detections: {"frame", "class_id", "confidence", "bbox": [x, y, w, h]}.
DetectionSet load_detections(const std::filesystem::path& path, std::size_t frame_count);

/// Clamps every bounding box to the frame rectangle, dropping boxes with no
/// remaining area.
void clamp_detections(DetectionSet& detections, int width, int height);

void save_detections(const std::filesystem::path& path, const DetectionSet& detections);

/// Binary (16-byte header + floats) or, for a ".csv" extension, text with an
/// "f,n" header line followed by f*n values in column-major order.
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);
void save_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& matrix);

}  // namespace sparseff
