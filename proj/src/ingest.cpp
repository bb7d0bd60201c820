#include "sparseff/ingest.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "sparseff/error.hpp"

namespace sparseff {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::MatrixXd FeatureMatrix::block_as_double(std::size_t begin, std::size_t end) const {
    return map().middleCols(static_cast<Eigen::Index>(begin),
                            static_cast<Eigen::Index>(end - begin))
        .cast<double>();
}

namespace {

bool numeric_stem(const fs::path& path, unsigned long long& value) {
    const auto stem = path.stem().string();
    if (stem.empty() || stem.size() > 18) return false;
    if (!std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return false;
    }
    value = std::stoull(stem);
    return true;
}

bool image_extension(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".ppm";
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

FeatureMatrix load_feature_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open feature file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty feature file " + path.string());
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream header(line);
    long long f = -1, n = -1;
    if (!(header >> f >> n) || f <= 0 || n <= 0) {
        throw InputError("malformed feature header in " + path.string());
    }
    std::vector<float> values;
    values.reserve(static_cast<std::size_t>(f * n));
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        std::string token;
        while (row >> token) {
            try {
                values.push_back(std::stof(token));
            } catch (const std::exception&) {
                throw InputError("non-numeric feature value '" + token + "' in " + path.string());
            }
        }
    }
    if (values.size() != static_cast<std::size_t>(f * n)) {
        throw InputError("payload size mismatch in " + path.string() + ": header declares " +
                         std::to_string(f * n) + " values, found " +
                         std::to_string(values.size()));
    }
    FeatureMatrix m(static_cast<std::size_t>(f), static_cast<std::size_t>(n));
    m.values() = std::move(values);
    return m;
}

}  // namespace

FrameSequence load_frame_sequence(const fs::path& dir, double fps) {
    if (!fs::is_directory(dir)) throw InputError("frame directory not found: " + dir.string());
    std::map<unsigned long long, fs::path> by_index;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !image_extension(entry.path())) continue;
        unsigned long long index = 0;
        if (!numeric_stem(entry.path(), index)) continue;
        auto [it, inserted] = by_index.emplace(index, entry.path());
        if (!inserted) {
            throw InputError("duplicate frame index " + std::to_string(index) + ": " +
                             it->second.filename().string() + " and " +
                             entry.path().filename().string());
        }
    }
    if (by_index.size() < 2) {
        throw InputError("need at least 2 frames in " + dir.string());
    }
    FrameSequence seq;
    seq.fps = fps;
    seq.frames.reserve(by_index.size());
    for (const auto& [index, path] : by_index) {
        Image image = read_image(path);
        if (!seq.frames.empty() && (image.width() != seq.frames.front().width() ||
                                    image.height() != seq.frames.front().height())) {
            throw InputError("frame " + path.filename().string() + " is " +
                             std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                             ", expected " + std::to_string(seq.frames.front().width()) + "x" +
                             std::to_string(seq.frames.front().height()));
        }
        seq.frames.push_back(std::move(image));
        seq.sources.push_back(path);
    }
    return seq;
}

DetectionSet load_detections(const fs::path& path, std::size_t frame_count) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open detections " + path.string());
    DetectionSet out(frame_count);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(where + ": invalid JSON: " + e.what());
        }
        long long frame = 0;
        Detection det;
        try {
            frame = record.at("frame").get<long long>();
            const auto& cls = record.contains("class_id") ? record.at("class_id") : record.at("class");
            det.class_id = cls.get<int>();
            det.confidence = record.at("confidence").get<double>();
            const auto& box = record.at("bbox");
            if (!box.is_array() || box.size() != 4) throw InputError(where + ": bbox must be [x, y, w, h]");
            det.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                        box[3].get<double>()};
        } catch (const json::exception& e) {
            throw InputError(where + ": " + e.what());
        }
        if (det.class_id < 0 || det.class_id >= kNumClasses) {
            throw InputError(where + ": class out of range (" + std::to_string(det.class_id) + ")");
        }
        if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
            throw InputError(where + ": confidence outside [0,1]");
        }
        if (frame < 0 || static_cast<std::size_t>(frame) >= frame_count) {
            throw InputError(where + ": frame " + std::to_string(frame) + " out of range (n=" +
                             std::to_string(frame_count) + ")");
        }
        if (det.bbox.w < 0 || det.bbox.h < 0) throw InputError(where + ": negative bbox size");
        out[static_cast<std::size_t>(frame)].push_back(det);
    }
    return out;
}

void clamp_detections(DetectionSet& detections, int width, int height) {
    for (auto& frame : detections) {
        std::vector<Detection> kept;
        kept.reserve(frame.size());
        for (auto det : frame) {
            const double x0 = std::clamp(det.bbox.x, 0.0, static_cast<double>(width));
            const double y0 = std::clamp(det.bbox.y, 0.0, static_cast<double>(height));
            const double x1 = std::clamp(det.bbox.x + det.bbox.w, 0.0, static_cast<double>(width));
            const double y1 = std::clamp(det.bbox.y + det.bbox.h, 0.0, static_cast<double>(height));
            det.bbox = {x0, y0, x1 - x0, y1 - y0};
            if (det.bbox.w > 0 && det.bbox.h > 0) kept.push_back(det);
        }
        frame = std::move(kept);
    }
}

void save_detections(const fs::path& path, const DetectionSet& detections) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (std::size_t i = 0; i < detections.size(); ++i) {
        for (const auto& det : detections[i]) {
            json record = {{"frame", i},
                           {"class_id", det.class_id},
                           {"confidence", det.confidence},
                           {"bbox", {det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h}}};
            out << record.dump() << '\n';
        }
    }
}

FeatureMatrix load_feature_matrix(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".csv") return load_feature_csv(path);

    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open feature file " + path.string());
    unsigned char header[16];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (in.gcount() != sizeof header) throw InputError("truncated feature header in " + path.string());
    if (get_u32(header) != kFeatureMagic) throw InputError("bad feature file magic in " + path.string());
    if (get_u32(header + 4) != kFeatureVersion) {
        throw InputError("unsupported feature file version in " + path.string());
    }
    const std::size_t f = get_u32(header + 8);
    const std::size_t n = get_u32(header + 12);
    if (f == 0 || n == 0) throw InputError("empty feature matrix in " + path.string());

    const auto payload_bytes = static_cast<std::uintmax_t>(f) * n * 4;
    const auto file_bytes = fs::file_size(path);
    if (file_bytes != payload_bytes + sizeof header) {
        throw InputError("payload size mismatch in " + path.string() + ": expected " +
                         std::to_string(payload_bytes) + " bytes, found " +
                         std::to_string(file_bytes - sizeof header));
    }
    std::vector<unsigned char> raw(payload_bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::uintmax_t>(in.gcount()) != payload_bytes) {
        throw InputError("payload size mismatch in " + path.string());
    }
    FeatureMatrix m(f, n);
    for (std::size_t i = 0; i < f * n; ++i) {
        m.values()[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
    }
    return m;
}

void save_feature_matrix(const fs::path& path, const FeatureMatrix& matrix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    put_u32(out, kFeatureMagic);
    put_u32(out, kFeatureVersion);
    put_u32(out, static_cast<std::uint32_t>(matrix.rows()));
    put_u32(out, static_cast<std::uint32_t>(matrix.cols()));
    std::vector<unsigned char> raw(matrix.values().size() * 4);
    for (std::size_t i = 0; i < matrix.values().size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(matrix.values()[i]);
        for (int b = 0; b < 4; ++b) raw[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace sparseff
