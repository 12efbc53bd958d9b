#pragma once

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "facepipe/align.hpp"
#include "facepipe/detect.hpp"
#include "facepipe/error.hpp"

namespace facepipe {

// Conventional anchor sizes for the three strides of a small anchor-based
// face detector. These are only defaults: anchors live in the config file and
// fixture configs replace them.
inline std::map<int, std::vector<std::array<float, 2>>> default_anchors() {
    return {
        {8, {{4.0f, 5.0f}, {8.0f, 10.0f}, {13.0f, 16.0f}}},
        {16, {{23.0f, 29.0f}, {43.0f, 55.0f}, {73.0f, 105.0f}}},
        {32, {{146.0f, 217.0f}, {231.0f, 300.0f}, {335.0f, 433.0f}}},
    };
}

struct DetectorConfig {
    std::string model_path;
    int input_size = 640; // square, must be a multiple of 32
    double conf_thresh = 0.5;
    double iou_thresh = 0.45;
    int fill = 114; // letterbox fill value
    std::map<int, std::vector<std::array<float, 2>>> anchors = default_anchors();

    std::vector<HeadSpec> heads() const {
        std::vector<HeadSpec> hs;
        for (const auto& [stride, a] : anchors)
            hs.push_back(HeadSpec{stride, a});
        return hs;
    }
};

struct EmbedderConfig {
    std::string model_path;
    int embedding_dim = 128;
    std::string precision = "f32"; // f32 | i8
    bool align = true;
    Points5 template_pts = canonical_template();
};

struct VerifyOptions {
    double threshold = 0.5;
};

struct BenchConfig {
    int warmup = 10;
    int frames = 50;
};

struct Config {
    DetectorConfig detector;
    EmbedderConfig embedder;
    VerifyOptions verify;
    BenchConfig bench;
};

inline void validate_config(const Config& c) {
    if (c.detector.input_size <= 0 || c.detector.input_size % 32 != 0)
        throw ConfigError("detector.input_size must be a positive multiple of 32");
    if (!(c.detector.conf_thresh > 0.0 && c.detector.conf_thresh < 1.0))
        throw ConfigError("detector.conf_thresh must be in (0,1)");
    if (!(c.detector.iou_thresh > 0.0 && c.detector.iou_thresh < 1.0))
        throw ConfigError("detector.iou_thresh must be in (0,1)");
    if (c.detector.fill < 0 || c.detector.fill > 255)
        throw ConfigError("detector.fill must be a byte value");
    if (c.detector.anchors.empty())
        throw ConfigError("detector needs at least one anchor head");
    for (const auto& [stride, a] : c.detector.anchors) {
        if (stride != 8 && stride != 16 && stride != 32)
            throw ConfigError("anchor stride must be one of 8, 16, 32");
        if (a.empty())
            throw ConfigError("each head needs at least one anchor");
    }
    if (!(c.verify.threshold > 0.0 && c.verify.threshold < 1.0))
        throw ConfigError("verify.threshold must be in (0,1)");
    if (c.embedder.embedding_dim <= 0)
        throw ConfigError("embedder.embedding_dim must be positive");
    if (c.embedder.precision != "f32" && c.embedder.precision != "i8")
        throw ConfigError("embedder.precision must be f32 or i8");
    if (c.bench.warmup < 0 || c.bench.frames < 1)
        throw ConfigError("bench.warmup must be >= 0 and bench.frames >= 1");
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_float_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " has a non-numeric element: " + item);
        }
    }
    return out;
}

inline std::vector<std::array<float, 2>> parse_pairs(const std::string& v,
                                                     const std::string& key) {
    const auto flat = parse_float_list(v, key);
    if (flat.empty() || flat.size() % 2 != 0)
        throw ConfigError("config key " + key + " must hold an even number of values");
    std::vector<std::array<float, 2>> pairs;
    for (size_t i = 0; i < flat.size(); i += 2)
        pairs.push_back({static_cast<float>(flat[i]), static_cast<float>(flat[i + 1])});
    return pairs;
}

} // namespace detail

// Minimal TOML-like config: [section] headers, key = value lines, # comments.
// Lists are comma-separated numbers; anchors are flattened (w,h) pairs.
//
//   [detector]
//   model = fixtures/detector.ftm
//   input_size = 640
//   anchors_8 = 4,5, 8,10, 13,16
//   [embedder]
//   model = fixtures/embedder.ftm
//   precision = f32
//   template = 38.2946,51.6963, 73.5318,51.5014, ...
inline Config parse_config(std::istream& in, Config base = {}) {
    Config c = std::move(base);
    std::string line;
    std::string section;
    bool anchors_touched = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        const std::string qual = section + "." + key;

        auto as_int = [&]() {
            try {
                return std::stoi(value);
            } catch (const std::exception&) {
                throw ConfigError("config key " + qual + " expects an integer");
            }
        };
        auto as_double = [&]() {
            try {
                return std::stod(value);
            } catch (const std::exception&) {
                throw ConfigError("config key " + qual + " expects a number");
            }
        };
        auto as_bool = [&]() {
            if (value == "true") return true;
            if (value == "false") return false;
            throw ConfigError("config key " + qual + " expects true or false");
        };

        if (qual == "detector.model") c.detector.model_path = value;
        else if (qual == "detector.input_size") c.detector.input_size = as_int();
        else if (qual == "detector.conf_thresh") c.detector.conf_thresh = as_double();
        else if (qual == "detector.iou_thresh") c.detector.iou_thresh = as_double();
        else if (qual == "detector.fill") c.detector.fill = as_int();
        else if (qual == "detector.anchors_8" || qual == "detector.anchors_16" ||
                 qual == "detector.anchors_32") {
            const int stride = std::stoi(key.substr(key.rfind('_') + 1));
            // the first anchors_* key in a file replaces the inherited set
            if (!anchors_touched) {
                c.detector.anchors.clear();
                anchors_touched = true;
            }
            c.detector.anchors[stride] = detail::parse_pairs(value, qual);
        } else if (qual == "embedder.model") c.embedder.model_path = value;
        else if (qual == "embedder.embedding_dim") c.embedder.embedding_dim = as_int();
        else if (qual == "embedder.precision") c.embedder.precision = value;
        else if (qual == "embedder.align") c.embedder.align = as_bool();
        else if (qual == "embedder.template") {
            const auto pairs = detail::parse_pairs(value, qual);
            if (pairs.size() != 5)
                throw ConfigError("embedder.template must hold exactly 5 points");
            for (int i = 0; i < 5; ++i) c.embedder.template_pts[i] = pairs[i];
        } else if (qual == "verify.threshold") c.verify.threshold = as_double();
        else if (qual == "bench.warmup") c.bench.warmup = as_int();
        else if (qual == "bench.frames") c.bench.frames = as_int();
        else
            throw ConfigError("unknown config key: " + qual);
    }
    validate_config(c);
    return c;
}

inline Config load_config(const std::string& path, Config base = {}) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    return parse_config(in, std::move(base));
}

inline void write_config(const std::string& path, const Config& c) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write config file: " + path);
    out << "[detector]\n";
    out << "model = " << c.detector.model_path << "\n";
    out << "input_size = " << c.detector.input_size << "\n";
    out << "conf_thresh = " << c.detector.conf_thresh << "\n";
    out << "iou_thresh = " << c.detector.iou_thresh << "\n";
    out << "fill = " << c.detector.fill << "\n";
    for (const auto& [stride, anchors] : c.detector.anchors) {
        out << "anchors_" << stride << " = ";
        for (size_t i = 0; i < anchors.size(); ++i) {
            if (i) out << ", ";
            out << anchors[i][0] << "," << anchors[i][1];
        }
        out << "\n";
    }
    out << "\n[embedder]\n";
    out << "model = " << c.embedder.model_path << "\n";
    out << "embedding_dim = " << c.embedder.embedding_dim << "\n";
    out << "precision = " << c.embedder.precision << "\n";
    out << "align = " << (c.embedder.align ? "true" : "false") << "\n";
    out << "template = ";
    for (int i = 0; i < 5; ++i) {
        if (i) out << ", ";
        out << c.embedder.template_pts[i][0] << "," << c.embedder.template_pts[i][1];
    }
    out << "\n";
    out << "\n[verify]\n";
    out << "threshold = " << c.verify.threshold << "\n";
    out << "\n[bench]\n";
    out << "warmup = " << c.bench.warmup << "\n";
    out << "frames = " << c.bench.frames << "\n";
}

} // namespace facepipe
