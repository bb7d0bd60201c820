#include "sparseff/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "sparseff/error.hpp"

namespace sparseff {

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * height * 3, fill) {
    if (width <= 0 || height <= 0) {
        throw InputError("image dimensions must be positive");
    }
}

GrayImage to_gray(const Image& image) {
    GrayImage gray{image.width(), image.height(), {}};
    gray.values.resize(static_cast<std::size_t>(image.width()) * image.height());
    const auto& px = image.data();
    for (std::size_t i = 0; i < gray.values.size(); ++i) {
        gray.values[i] = static_cast<float>(luma601(px[3 * i], px[3 * i + 1], px[3 * i + 2]));
    }
    return gray;
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
    if (delta > 0.0) {
        double h;
        if (mx == r) {
            h = (g - b) / delta;
            if (h < 0.0) h += 6.0;
        } else if (mx == g) {
            h = (b - r) / delta + 2.0;
        } else {
            h = (r - g) / delta + 4.0;
        }
        out.h = h / 6.0;
        if (out.h >= 1.0) out.h -= 1.0;
    }
    return out;
}

CellRange grid_cell(int extent, int cells, int index) {
    const int size = extent / cells;
    const int begin = index * size;
    const int end = (index == cells - 1) ? extent : begin + size;
    return {begin, end};
}

namespace {

std::string lower_ext(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    return token;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open image " + path.string());
    if (ppm_token(in) != "P6") throw InputError("not a binary PPM (P6): " + path.string());
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(ppm_token(in));
        height = std::stoi(ppm_token(in));
        maxval = std::stoi(ppm_token(in));
    } catch (const std::exception&) {
        throw InputError("malformed PPM header: " + path.string());
    }
    if (width <= 0 || height <= 0 || maxval != 255) {
        throw InputError("unsupported PPM geometry or maxval: " + path.string());
    }
    Image image(width, height);
    in.read(reinterpret_cast<char*>(image.data().data()),
            static_cast<std::streamsize>(image.data().size()));
    if (in.gcount() != static_cast<std::streamsize>(image.data().size())) {
        throw InputError("truncated PPM payload: " + path.string());
    }
    return image;
}

Image read_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
        throw InputError("cannot read PNG " + path.string() + ": " + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    Image image(static_cast<int>(png.width), static_cast<int>(png.height));
    if (!png_image_finish_read(&png, nullptr, image.data().data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw InputError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return image;
}

Image read_image(const std::filesystem::path& path) {
    const auto ext = lower_ext(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".ppm") return read_ppm(path);
    throw InputError("unsupported image format: " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data().data()),
              static_cast<std::streamsize>(image.data().size()));
    if (!out) throw InputError("write failed: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& image) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.data().data(), 0,
                                 nullptr)) {
        throw InputError("cannot write PNG " + path.string() + ": " + png.message);
    }
}

void write_image(const std::filesystem::path& path, const Image& image) {
    const auto ext = lower_ext(path);
    if (ext == ".png") return write_png(path, image);
    if (ext == ".ppm") return write_ppm(path, image);
    throw InputError("unsupported image format: " + path.string());
}

}  // namespace sparseff
