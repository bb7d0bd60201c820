#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "sparseff/image.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("sparseff_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline sparseff::Image noise_image(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    sparseff::Image img(width, height);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(byte(rng));
    return img;
}

inline sparseff::Image solid_image(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    sparseff::Image img(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) img.set(x, y, r, g, b);
    return img;
}

inline std::string frame_name(std::size_t i, const char* ext = ".png") {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu%s", i, ext);
    return buf;
}

}  // namespace testing
