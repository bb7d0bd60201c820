#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sparseff {

/// 8-bit interleaved RGB raster.
class Image {
public:
    Image() = default;
    Image(int width, int height, std::uint8_t fill = 0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }

    std::uint8_t& at(int x, int y, int channel) {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + channel];
    }
    std::uint8_t at(int x, int y, int channel) const {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + channel];
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3];
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    const std::vector<std::uint8_t>& data() const noexcept { return pixels_; }
    std::vector<std::uint8_t>& data() noexcept { return pixels_; }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Single-channel float raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// ITU-R BT.601 luma, range [0, 255].
inline double luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

GrayImage to_gray(const Image& image);

struct Hsv {
    double h;  // [0, 1)
    double s;  // [0, 1]
    double v;  // [0, 1]
};

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Half-open pixel range [begin, end) of cell `index` when `extent` pixels
/// are split into `cells` parts by floor division; the last cell absorbs
/// the remainder.
struct CellRange {
    int begin;
    int end;
};
CellRange grid_cell(int extent, int cells, int index);

// Codec helpers. PNG goes through libpng, PPM (binary P6, maxval 255) is
// handled here. Errors throw InputError naming the file.
Image read_image(const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);
void write_image(const std::filesystem::path& path, const Image& image);

}  // namespace sparseff
