#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "facepipe/detect.hpp"

namespace facepipe {

// Latency/throughput statistics for one benchmarked stage.
struct PerfReport {
    std::string stage;     // detect | embed | pipeline
    std::string precision; // f32 | i8
    int faces_per_frame = 0;
    int frames = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p90_ms = 0.0;
    double p99_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    double fps = 0.0;     // 1000 / mean latency
    double fps_p50 = 0.0; // 1000 / median latency, emitted alongside
};

namespace detail {

// Nearest-rank percentile on a sorted sample: the ceil(q*n)-th smallest.
inline double nearest_rank(const std::vector<double>& sorted, double q) {
    const size_t n = sorted.size();
    size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<size_t>(rank, 1, n);
    return sorted[rank - 1];
}

inline double safe_fps(double ms) {
    return 1000.0 / std::max(ms, 1e-9);
}

} // namespace detail

// Builds the report statistics from raw per-frame latency samples.
inline PerfReport make_report(std::vector<double> samples_ms, std::string stage,
                              std::string precision, int faces_per_frame) {
    if (samples_ms.empty())
        throw InvalidInputError("make_report: need at least one sample");
    std::vector<double> sorted = samples_ms;
    std::sort(sorted.begin(), sorted.end());

    PerfReport r;
    r.stage = std::move(stage);
    r.precision = std::move(precision);
    r.faces_per_frame = faces_per_frame;
    r.frames = static_cast<int>(samples_ms.size());
    double sum = 0.0;
    for (double s : samples_ms) sum += s;
    r.mean_ms = sum / static_cast<double>(samples_ms.size());
    r.p50_ms = detail::nearest_rank(sorted, 0.50);
    r.p90_ms = detail::nearest_rank(sorted, 0.90);
    r.p99_ms = detail::nearest_rank(sorted, 0.99);
    r.min_ms = sorted.front();
    r.max_ms = sorted.back();
    r.fps = detail::safe_fps(r.mean_ms);
    r.fps_p50 = detail::safe_fps(r.p50_ms);
    return r;
}

// Runs `warmup` untimed iterations, then times each of `frames` invocations
// of `fn` with a monotonic clock. If fn throws, the partial report is
// discarded and the exception propagates.
inline PerfReport measure(const std::function<void()>& fn, int warmup, int frames,
                          std::string stage = "pipeline", std::string precision = "f32",
                          int faces_per_frame = 0) {
    if (frames < 1)
        throw InvalidInputError("measure: frames must be >= 1");
    if (warmup < 0)
        throw InvalidInputError("measure: warmup must be >= 0");
    for (int i = 0; i < warmup; ++i)
        fn();
    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(frames));
    for (int i = 0; i < frames; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return make_report(std::move(samples), std::move(stage), std::move(precision),
                       faces_per_frame);
}

// Benchmarks embedding k faces per frame for each requested count.
// `embed_k_faces(k)` must perform the per-frame work for k faces.
inline std::vector<PerfReport> sweep_faces(const std::function<void(int)>& embed_k_faces,
                                           std::span<const int> face_counts,
                                           const std::string& precision, int warmup,
                                           int frames) {
    std::vector<PerfReport> reports;
    reports.reserve(face_counts.size());
    for (int k : face_counts) {
        if (k < 0)
            throw InvalidInputError("sweep_faces: face count must be >= 0");
        reports.push_back(measure([&] { embed_k_faces(k); }, warmup, frames, "embed",
                                  precision, k));
    }
    return reports;
}

// --- detection evaluation ---------------------------------------------------

struct GtImage {
    std::string image;
    std::vector<Box> boxes;
    std::vector<std::string> difficulty; // per box: "easy" | "hard"; may be empty
};

struct GroundTruthSet {
    std::vector<GtImage> images;
};

struct DetImage {
    std::string image;
    std::vector<Detection> detections;
};

struct DetectionSet {
    std::vector<DetImage> images;
};

// GT JSON: {images:[{image, boxes:[[x1,y1,x2,y2]...],
//                    difficulty:["easy"|"hard"...]}]}
inline GroundTruthSet ground_truth_from_json(const nlohmann::json& j) {
    GroundTruthSet gt;
    for (const auto& ij : j.at("images")) {
        GtImage gi;
        gi.image = ij.at("image").get<std::string>();
        for (const auto& bj : ij.at("boxes")) {
            Box b{bj.at(0).get<float>(), bj.at(1).get<float>(), bj.at(2).get<float>(),
                  bj.at(3).get<float>()};
            if (!(b.x1 < b.x2 && b.y1 < b.y2))
                throw InvalidInputError("ground truth box is not x1<x2, y1<y2");
            gi.boxes.push_back(b);
        }
        if (ij.contains("difficulty"))
            gi.difficulty = ij.at("difficulty").get<std::vector<std::string>>();
        if (!gi.difficulty.empty() && gi.difficulty.size() != gi.boxes.size())
            throw InvalidInputError("difficulty tags do not match box count");
        gt.images.push_back(std::move(gi));
    }
    return gt;
}

// A detection set file is an array of per-image Detection JSON documents (a
// single document is accepted too).
inline DetectionSet detection_set_from_json(const nlohmann::json& j) {
    DetectionSet ds;
    auto parse_one = [&](const nlohmann::json& dj) {
        DetImage di;
        di.image = dj.at("image").get<std::string>();
        di.detections = detections_from_json(dj);
        ds.images.push_back(std::move(di));
    };
    if (j.is_array())
        for (const auto& dj : j) parse_one(dj);
    else
        parse_one(j);
    return ds;
}

// All-point interpolated average precision with per-image greedy matching.
// Detections are ranked by score globally; each is matched to the unmatched
// ground-truth box of highest IoU >= iou_thresh in its image. A non-"all"
// difficulty filter turns out-of-bucket GT boxes into ignore regions:
// detections matched to them count neither as TP nor FP.
inline double average_precision(const DetectionSet& dets, const GroundTruthSet& gt,
                                double iou_thresh, const std::string& difficulty = "all") {
    if (!(iou_thresh > 0.0 && iou_thresh < 1.0))
        throw InvalidInputError("average_precision: iou_thresh must be in (0,1)");

    std::map<std::string, size_t> gt_index;
    for (size_t i = 0; i < gt.images.size(); ++i)
        gt_index[gt.images[i].image] = i;

    // per GT image: counted[b] = box participates in the metric, used[b] =
    // already matched
    std::vector<std::vector<bool>> counted(gt.images.size());
    std::vector<std::vector<bool>> used(gt.images.size());
    int64_t total_gt = 0;
    for (size_t i = 0; i < gt.images.size(); ++i) {
        const auto& gi = gt.images[i];
        counted[i].resize(gi.boxes.size(), true);
        used[i].assign(gi.boxes.size(), false);
        for (size_t b = 0; b < gi.boxes.size(); ++b) {
            if (difficulty != "all") {
                const std::string tag = b < gi.difficulty.size() ? gi.difficulty[b] : "";
                counted[i][b] = (tag == difficulty);
            }
            if (counted[i][b]) ++total_gt;
        }
    }
    if (total_gt == 0)
        throw InvalidInputError("average_precision: empty ground truth");

    struct Ranked {
        float score;
        size_t img;   // index into dets.images
        size_t det;   // index within image
    };
    std::vector<Ranked> ranked;
    for (size_t i = 0; i < dets.images.size(); ++i)
        for (size_t d = 0; d < dets.images[i].detections.size(); ++d)
            ranked.push_back({dets.images[i].detections[d].score, i, d});
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.img != b.img) return a.img < b.img;
        return a.det < b.det;
    });

    int64_t tp = 0, fp = 0;
    std::vector<std::pair<double, double>> pr; // (recall, precision) per rank
    pr.reserve(ranked.size());
    for (const auto& r : ranked) {
        const auto& d = dets.images[r.img].detections[r.det];
        auto git = gt_index.find(dets.images[r.img].image);
        int best = -1;
        float best_iou = 0.0f;
        if (git != gt_index.end()) {
            const auto& gi = gt.images[git->second];
            for (size_t b = 0; b < gi.boxes.size(); ++b) {
                if (used[git->second][b]) continue;
                const float v = iou(d.box, gi.boxes[b]);
                if (v >= iou_thresh && v > best_iou) {
                    best_iou = v;
                    best = static_cast<int>(b);
                }
            }
        }
        if (best >= 0) {
            used[git->second][best] = true;
            if (counted[git->second][best])
                ++tp;
            else
                continue; // ignore region: drop from the ranking entirely
        } else {
            ++fp;
        }
        pr.emplace_back(static_cast<double>(tp) / static_cast<double>(total_gt),
                        static_cast<double>(tp) / static_cast<double>(tp + fp));
    }

    // monotone envelope from the right, integrate where recall increases
    double ap = 0.0;
    double env = 0.0;
    std::vector<double> envelope(pr.size());
    for (size_t i = pr.size(); i-- > 0;) {
        env = std::max(env, pr[i].second);
        envelope[i] = env;
    }
    double prev_recall = 0.0;
    for (size_t i = 0; i < pr.size(); ++i) {
        if (pr[i].first > prev_recall) {
            ap += (pr[i].first - prev_recall) * envelope[i];
            prev_recall = pr[i].first;
        }
    }
    return ap;
}

// --- report serialization ---------------------------------------------------

enum class ReportFormat { csv, json };

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline nlohmann::json report_to_json(const PerfReport& r) {
    nlohmann::json j;
    j["stage"] = r.stage;
    j["precision"] = r.precision;
    j["faces"] = r.faces_per_frame;
    j["frames"] = r.frames;
    j["mean_ms"] = r.mean_ms;
    j["p50"] = r.p50_ms;
    j["p90"] = r.p90_ms;
    j["p99"] = r.p99_ms;
    j["min"] = r.min_ms;
    j["max"] = r.max_ms;
    j["fps"] = r.fps;
    j["fps_p50"] = r.fps_p50;
    return j;
}

inline PerfReport report_from_json(const nlohmann::json& j) {
    PerfReport r;
    r.stage = j.at("stage").get<std::string>();
    r.precision = j.at("precision").get<std::string>();
    r.faces_per_frame = j.at("faces").get<int>();
    r.frames = j.at("frames").get<int>();
    r.mean_ms = j.at("mean_ms").get<double>();
    r.p50_ms = j.at("p50").get<double>();
    r.p90_ms = j.at("p90").get<double>();
    r.p99_ms = j.at("p99").get<double>();
    r.min_ms = j.at("min").get<double>();
    r.max_ms = j.at("max").get<double>();
    r.fps = j.at("fps").get<double>();
    r.fps_p50 = j.value("fps_p50", detail::safe_fps(r.p50_ms));
    return r;
}

inline std::string reports_to_csv(std::span<const PerfReport> reports) {
    std::ostringstream out;
    out << "stage,precision,faces,frames,mean_ms,p50,p90,p99,min,max,fps\n";
    for (const auto& r : reports) {
        out << r.stage << ',' << r.precision << ',' << r.faces_per_frame << ','
            << r.frames << ',' << detail::fmt17(r.mean_ms) << ','
            << detail::fmt17(r.p50_ms) << ',' << detail::fmt17(r.p90_ms) << ','
            << detail::fmt17(r.p99_ms) << ',' << detail::fmt17(r.min_ms) << ','
            << detail::fmt17(r.max_ms) << ',' << detail::fmt17(r.fps) << '\n';
    }
    return out.str();
}

inline std::vector<PerfReport> reports_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line))
        throw InvalidInputError("empty report CSV");
    std::vector<PerfReport> reports;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (cells.size() != 11)
            throw InvalidInputError("report CSV row has wrong column count");
        PerfReport r;
        r.stage = cells[0];
        r.precision = cells[1];
        r.faces_per_frame = std::stoi(cells[2]);
        r.frames = std::stoi(cells[3]);
        r.mean_ms = std::stod(cells[4]);
        r.p50_ms = std::stod(cells[5]);
        r.p90_ms = std::stod(cells[6]);
        r.p99_ms = std::stod(cells[7]);
        r.min_ms = std::stod(cells[8]);
        r.max_ms = std::stod(cells[9]);
        r.fps = std::stod(cells[10]);
        r.fps_p50 = detail::safe_fps(r.p50_ms);
        reports.push_back(std::move(r));
    }
    return reports;
}

inline void emit_report(std::span<const PerfReport> reports, ReportFormat format,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw InvalidInputError("cannot write report file: " + path);
    if (format == ReportFormat::csv) {
        out << reports_to_csv(reports);
    } else {
        auto arr = nlohmann::json::array();
        for (const auto& r : reports) arr.push_back(report_to_json(r));
        out << arr.dump(2) << "\n";
    }
}

inline std::vector<PerfReport> load_reports(const std::string& path, ReportFormat format) {
    std::ifstream in(path);
    if (!in)
        throw InvalidInputError("cannot open report file: " + path);
    if (format == ReportFormat::csv) {
        std::stringstream ss;
        ss << in.rdbuf();
        return reports_from_csv(ss.str());
    }
    nlohmann::json j;
    in >> j;
    std::vector<PerfReport> reports;
    for (const auto& rj : j) reports.push_back(report_from_json(rj));
    return reports;
}

} // namespace facepipe
