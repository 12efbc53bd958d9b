// facepipe command-line tool: detect faces, enroll and identify identities,
// benchmark the pipeline stages, and evaluate detections against ground
// truth. Fixture models for an end-to-end run with no external downloads come
// from `facepipe gen-fixtures`.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <facepipe/facepipe.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGeneric = 1;
constexpr int kExitModel = 2;
constexpr int kExitInput = 3;
constexpr int kExitNoFace = 4;
constexpr int kExitUsage = 5;

struct NoFaceError : facepipe::Error {
    using facepipe::Error::Error;
};

struct UsageError : facepipe::Error {
    using facepipe::Error::Error;
};

facepipe::Model load_model_checked(const std::string& path, const char* role) {
    if (path.empty())
        throw UsageError(std::string("no ") + role + " model specified (flag or config)");
    if (!fs::exists(path))
        throw facepipe::ModelError(std::string(role) + " model not found: " + path);
    return facepipe::load_model_file(path);
}

facepipe::DType parse_precision(const std::string& p) {
    if (p == "f32") return facepipe::DType::f32;
    if (p == "i8") return facepipe::DType::i8;
    throw UsageError("precision must be f32 or i8");
}

void require_quantized_if_i8(const facepipe::Model& m, facepipe::DType precision,
                             const char* role) {
    if (precision == facepipe::DType::i8 && !m.quantized())
        throw facepipe::ModelError(
            std::string(role) +
            " model is not quantized; i8 precision needs an _i8 model file");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw facepipe::InvalidInputError("cannot write output file: " + path);
    out << text;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw facepipe::InvalidInputError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw facepipe::InvalidInputError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

int env_threads() {
    const char* v = std::getenv("FACEPIPE_THREADS");
    if (!v) return 1;
    const int n = std::atoi(v);
    return n < 1 ? 1 : n;
}

// Aligned (or box-resized when alignment is off) crop for one detection.
facepipe::Image face_crop(const facepipe::Image& img, const facepipe::Detection& det,
                          const facepipe::Config& cfg, bool* eye_warn = nullptr) {
    if (cfg.embedder.align) {
        auto res = facepipe::align_face(img, det, cfg.embedder.template_pts, 112);
        if (eye_warn && !res.eye_order_ok) *eye_warn = true;
        return std::move(res.crop);
    }
    return facepipe::crop_box_resize(img, det.box, 112, 112);
}

json match_to_json(const facepipe::Detection& det, const facepipe::MatchResult& m) {
    json j;
    j["box"] = {det.box.x1, det.box.y1, det.box.x2, det.box.y2};
    j["det_score"] = det.score;
    j["id"] = m.id ? json(*m.id) : json(nullptr);
    if (m.display_name) j["display_name"] = *m.display_name;
    j["similarity"] = m.similarity;
    j["accepted"] = m.accepted;
    return j;
}

// ---------------------------------------------------------------------------

struct CommonFlags {
    std::string config_path;
    std::string detector_model;
    std::string embedder_model;
    double conf = -1.0;
    double iou = -1.0;
    std::string precision;
    bool no_align = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_embedder) {
    cmd->add_option("--config", f.config_path, "config file (key = value sections)");
    cmd->add_option("--detector", f.detector_model, "detector model (.ftm)");
    cmd->add_option("--conf", f.conf, "detection confidence threshold");
    cmd->add_option("--iou", f.iou, "NMS IoU threshold");
    if (with_embedder) {
        cmd->add_option("--embedder", f.embedder_model, "embedder model (.ftm)");
        cmd->add_option("--precision", f.precision, "embedder precision: f32 | i8");
        cmd->add_flag("--no-align", f.no_align, "feed raw box crops to the embedder");
    }
}

facepipe::Config resolve_config(const CommonFlags& f) {
    facepipe::Config cfg;
    if (!f.config_path.empty())
        cfg = facepipe::load_config(f.config_path);
    if (!f.detector_model.empty()) cfg.detector.model_path = f.detector_model;
    if (!f.embedder_model.empty()) cfg.embedder.model_path = f.embedder_model;
    if (f.conf >= 0.0) cfg.detector.conf_thresh = f.conf;
    if (f.iou >= 0.0) cfg.detector.iou_thresh = f.iou;
    if (!f.precision.empty()) cfg.embedder.precision = f.precision;
    if (f.no_align) cfg.embedder.align = false;
    facepipe::validate_config(cfg);
    return cfg;
}

// --- detect -----------------------------------------------------------------

int cmd_detect(const CommonFlags& flags, const std::string& input,
               const std::string& out_path, const std::string& dump_aligned) {
    const auto cfg = resolve_config(flags);
    const auto model = load_model_checked(cfg.detector.model_path, "detector");
    const auto img = facepipe::load_image(input);
    const auto heads = cfg.detector.heads();
    const auto dets = facepipe::detect_faces(
        model, heads, img, static_cast<float>(cfg.detector.conf_thresh),
        static_cast<float>(cfg.detector.iou_thresh),
        static_cast<uint8_t>(cfg.detector.fill));

    if (!dump_aligned.empty()) {
        for (size_t i = 0; i < dets.size(); ++i) {
            auto res = facepipe::align_face(img, dets[i], cfg.embedder.template_pts, 112);
            if (!res.eye_order_ok)
                std::cerr << "warning: face " << i
                          << " has swapped eye order after alignment\n";
            facepipe::write_ppm(dump_aligned + "_" + std::to_string(i) + ".ppm",
                                res.crop);
        }
    }

    const std::string text =
        facepipe::detections_to_json(input, img.width, img.height, dets).dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text(out_path, text);
    return kExitOk;
}

// --- enroll / identify --------------------------------------------------------

int cmd_enroll(const CommonFlags& flags, const std::string& gallery_path,
               const std::string& id, const std::string& name,
               const std::string& input) {
    const auto cfg = resolve_config(flags);
    const auto precision = parse_precision(cfg.embedder.precision);
    const auto det_model = load_model_checked(cfg.detector.model_path, "detector");
    const auto emb_model = load_model_checked(cfg.embedder.model_path, "embedder");
    require_quantized_if_i8(emb_model, precision, "embedder");
    const auto img = facepipe::load_image(input);

    const auto heads = cfg.detector.heads();
    auto dets = facepipe::detect_faces(det_model, heads, img,
                                       static_cast<float>(cfg.detector.conf_thresh),
                                       static_cast<float>(cfg.detector.iou_thresh),
                                       static_cast<uint8_t>(cfg.detector.fill));
    if (dets.empty())
        throw NoFaceError("no face found in " + input);
    if (dets.size() > 1)
        std::cerr << "warning: " << dets.size()
                  << " faces found, enrolling the highest-scored one\n";

    bool eye_warn = false;
    const auto crop = face_crop(img, dets.front(), cfg, &eye_warn);
    if (eye_warn)
        std::cerr << "warning: swapped eye order after alignment\n";
    auto emb = facepipe::embed_face(emb_model, crop, precision);

    facepipe::Gallery gallery;
    if (fs::exists(gallery_path))
        gallery = facepipe::Gallery::load(gallery_path);
    gallery.enroll(id, name.empty() ? id : name, std::move(emb));
    gallery.save(gallery_path);

    json j;
    j["enrolled"] = id;
    j["gallery"] = gallery_path;
    j["entries"] = gallery.size();
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_identify(const CommonFlags& flags, const std::string& gallery_path,
                 const std::string& input, double threshold) {
    auto cfg = resolve_config(flags);
    if (threshold >= 0.0) cfg.verify.threshold = threshold;
    facepipe::validate_config(cfg);
    const auto precision = parse_precision(cfg.embedder.precision);
    const auto det_model = load_model_checked(cfg.detector.model_path, "detector");
    const auto emb_model = load_model_checked(cfg.embedder.model_path, "embedder");
    require_quantized_if_i8(emb_model, precision, "embedder");
    const auto img = facepipe::load_image(input);

    facepipe::Gallery gallery;
    if (fs::exists(gallery_path))
        gallery = facepipe::Gallery::load(gallery_path);
    else
        std::cerr << "warning: gallery file missing, matching against empty gallery\n";

    const auto heads = cfg.detector.heads();
    auto dets = facepipe::detect_faces(det_model, heads, img,
                                       static_cast<float>(cfg.detector.conf_thresh),
                                       static_cast<float>(cfg.detector.iou_thresh),
                                       static_cast<uint8_t>(cfg.detector.fill));
    if (dets.empty())
        throw NoFaceError("no face found in " + input);

    for (const auto& det : dets) {
        const auto crop = face_crop(img, det, cfg);
        const auto emb = facepipe::embed_face(emb_model, crop, precision);
        const auto match =
            gallery.identify(emb, static_cast<float>(cfg.verify.threshold));
        std::cout << match_to_json(det, match).dump() << "\n";
    }
    return kExitOk;
}

// --- bench -------------------------------------------------------------------

std::vector<int> parse_face_counts(const std::string& spec) {
    const auto dots = spec.find("..");
    try {
        if (dots == std::string::npos)
            return {std::stoi(spec)};
        const int lo = std::stoi(spec.substr(0, dots));
        const int hi = std::stoi(spec.substr(dots + 2));
        if (lo > hi)
            throw UsageError("--faces range must be low..high");
        std::vector<int> counts;
        for (int k = lo; k <= hi; ++k) counts.push_back(k);
        return counts;
    } catch (const std::invalid_argument&) {
        throw UsageError("--faces expects K or A..B");
    } catch (const std::out_of_range&) {
        throw UsageError("--faces value out of range");
    }
}

// End-to-end per-frame latency with detection of frame t+1 overlapping the
// embed/identify of frame t behind a bounded queue of depth 2. Used when
// FACEPIPE_THREADS >= 2.
facepipe::PerfReport bench_pipeline_overlapped(
    const std::function<std::vector<facepipe::Detection>(const facepipe::Image&)>& detect_fn,
    const std::function<void(const facepipe::Image&, const std::vector<facepipe::Detection>&)>& tail_fn,
    const facepipe::Image& frame, int warmup, int frames, const std::string& precision,
    int faces) {
    for (int i = 0; i < warmup; ++i)
        tail_fn(frame, detect_fn(frame));

    struct Item {
        std::vector<facepipe::Detection> dets;
        std::chrono::steady_clock::time_point start;
    };
    std::deque<Item> queue;
    std::mutex mu;
    std::condition_variable cv_push, cv_pop;
    constexpr size_t kQueueDepth = 2;
    std::exception_ptr producer_error;
    bool producer_done = false;

    std::thread producer([&] {
        try {
            for (int i = 0; i < frames; ++i) {
                const auto t0 = std::chrono::steady_clock::now();
                auto dets = detect_fn(frame);
                std::unique_lock lock(mu);
                cv_push.wait(lock, [&] { return queue.size() < kQueueDepth; });
                queue.push_back({std::move(dets), t0});
                cv_pop.notify_one();
            }
        } catch (...) {
            std::lock_guard lock(mu);
            producer_error = std::current_exception();
            cv_pop.notify_one();
        }
        std::lock_guard lock(mu);
        producer_done = true;
        cv_pop.notify_one();
    });

    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(frames));
    for (int i = 0; i < frames; ++i) {
        Item item;
        {
            std::unique_lock lock(mu);
            cv_pop.wait(lock, [&] {
                return !queue.empty() || producer_error || producer_done;
            });
            if (queue.empty()) break; // producer failed or finished early
            item = std::move(queue.front());
            queue.pop_front();
            cv_push.notify_one();
        }
        tail_fn(frame, item.dets);
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(
            std::chrono::duration<double, std::milli>(t1 - item.start).count());
    }
    producer.join();
    if (producer_error)
        std::rethrow_exception(producer_error);
    return facepipe::make_report(std::move(samples), "pipeline", precision, faces);
}

int cmd_bench(const CommonFlags& flags, const std::string& mode,
              const std::string& faces_spec, int frames_flag, int warmup_flag,
              const std::string& report_path, const std::string& format,
              bool breakdown) {
    auto cfg = resolve_config(flags);
    if (frames_flag >= 0) cfg.bench.frames = frames_flag;
    if (warmup_flag >= 0) cfg.bench.warmup = warmup_flag;
    if (cfg.bench.frames < 1)
        throw UsageError("--frames must be >= 1");
    if (mode != "detect" && mode != "embed" && mode != "pipeline")
        throw UsageError("--mode must be detect, embed or pipeline");
    if (format != "csv" && format != "json")
        throw UsageError("--format must be csv or json");

    const auto counts = parse_face_counts(faces_spec);
    const auto precision = parse_precision(cfg.embedder.precision);
    const char* precision_name = precision == facepipe::DType::i8 ? "i8" : "f32";
    const int size = cfg.detector.input_size;
    const int warmup = cfg.bench.warmup;
    const int frames = cfg.bench.frames;

    std::vector<facepipe::PerfReport> reports;

    if (mode == "detect") {
        const auto det_model = load_model_checked(cfg.detector.model_path, "detector");
        require_quantized_if_i8(det_model, precision, "detector");
        const auto heads = cfg.detector.heads();
        const float conf = static_cast<float>(cfg.detector.conf_thresh);
        const float iou_t = static_cast<float>(cfg.detector.iou_thresh);
        const auto fill = static_cast<uint8_t>(cfg.detector.fill);
        for (int k : counts) {
            const auto frame =
                facepipe::make_synthetic_frame(size, facepipe::default_face_layout(k, size));
            reports.push_back(facepipe::measure(
                [&] {
                    facepipe::detect_faces(det_model, heads, frame, conf, iou_t, fill,
                                           precision);
                },
                warmup, frames, "detect", precision_name, k));
            if (breakdown) {
                // network inference and post-processing timed separately
                reports.push_back(facepipe::measure(
                    [&] { facepipe::detect_forward(det_model, frame, fill, precision); },
                    warmup, frames, "detect_forward", precision_name, k));
                const auto fwd =
                    facepipe::detect_forward(det_model, frame, fill, precision);
                reports.push_back(facepipe::measure(
                    [&] { facepipe::detect_post(fwd, heads, conf, iou_t); }, warmup,
                    frames, "detect_post", precision_name, k));
            }
        }
    } else if (mode == "embed") {
        const auto emb_model = load_model_checked(cfg.embedder.model_path, "embedder");
        require_quantized_if_i8(emb_model, precision, "embedder");
        // crops prepared outside the timed region; the timed work is embedding
        const int max_k = *std::max_element(counts.begin(), counts.end());
        std::vector<facepipe::Image> crops;
        {
            const auto layout = facepipe::default_face_layout(std::max(max_k, 1), size);
            const auto frame = facepipe::make_synthetic_frame(size, layout);
            for (const auto& f : layout)
                crops.push_back(face_crop(
                    frame, facepipe::planted_detection(f.cell_x, f.cell_y), cfg));
        }
        auto embed_k = [&](int k) {
            for (int i = 0; i < k; ++i)
                facepipe::embed_face(emb_model, crops[i], precision);
        };
        auto swept = facepipe::sweep_faces(embed_k, counts, precision_name, warmup, frames);
        reports.insert(reports.end(), swept.begin(), swept.end());
    } else { // pipeline
        const auto det_model = load_model_checked(cfg.detector.model_path, "detector");
        const auto emb_model = load_model_checked(cfg.embedder.model_path, "embedder");
        require_quantized_if_i8(emb_model, precision, "embedder");
        const auto heads = cfg.detector.heads();
        const int threads = env_threads();

        for (int k : counts) {
            const auto layout = facepipe::default_face_layout(std::max(k, 1), size);
            const auto frame = facepipe::make_synthetic_frame(
                size, std::span(layout.data(), static_cast<size_t>(k)));

            // gallery of the planted identities, enrolled from solo frames
            facepipe::Gallery gallery;
            for (int i = 0; i < std::max(k, 1); ++i) {
                const facepipe::PlantedFace solo{layout[0].cell_x, layout[0].cell_y,
                                                 static_cast<uint32_t>(i)};
                const auto solo_frame =
                    facepipe::make_synthetic_frame(size, std::vector{solo});
                const auto crop = face_crop(
                    solo_frame,
                    facepipe::planted_detection(solo.cell_x, solo.cell_y), cfg);
                gallery.enroll("id" + std::to_string(i), "identity " + std::to_string(i),
                               facepipe::embed_face(emb_model, crop, precision));
            }

            auto detect_fn = [&](const facepipe::Image& f) {
                return facepipe::detect_faces(det_model, heads, f,
                                              static_cast<float>(cfg.detector.conf_thresh),
                                              static_cast<float>(cfg.detector.iou_thresh),
                                              static_cast<uint8_t>(cfg.detector.fill));
            };
            auto tail_fn = [&](const facepipe::Image& f,
                               const std::vector<facepipe::Detection>& dets) {
                for (const auto& det : dets) {
                    const auto crop = face_crop(f, det, cfg);
                    const auto emb = facepipe::embed_face(emb_model, crop, precision);
                    gallery.identify(emb, static_cast<float>(cfg.verify.threshold));
                }
            };

            if (threads >= 2) {
                reports.push_back(bench_pipeline_overlapped(
                    detect_fn, tail_fn, frame, warmup, frames, precision_name, k));
            } else {
                reports.push_back(facepipe::measure(
                    [&] { tail_fn(frame, detect_fn(frame)); }, warmup, frames,
                    "pipeline", precision_name, k));
            }
        }
    }

    const auto fmt = format == "csv" ? facepipe::ReportFormat::csv
                                     : facepipe::ReportFormat::json;
    if (report_path.empty()) {
        if (fmt == facepipe::ReportFormat::csv) {
            std::cout << facepipe::reports_to_csv(reports);
        } else {
            auto arr = json::array();
            for (const auto& r : reports) arr.push_back(facepipe::report_to_json(r));
            std::cout << arr.dump(2) << "\n";
        }
    } else {
        facepipe::emit_report(reports, fmt, report_path);
    }
    return kExitOk;
}

// --- eval-ap ------------------------------------------------------------------

int cmd_eval_ap(const std::string& detections_path, const std::string& gt_path,
                double iou_thresh, const std::string& difficulty) {
    if (difficulty != "all" && difficulty != "easy" && difficulty != "hard")
        throw UsageError("--difficulty must be easy, hard or all");
    const auto dets = facepipe::detection_set_from_json(read_json_file(detections_path));
    const auto gt = facepipe::ground_truth_from_json(read_json_file(gt_path));
    const double ap = facepipe::average_precision(dets, gt, iou_thresh, difficulty);
    json j;
    j["ap"] = ap;
    std::cout << j.dump() << "\n";
    return kExitOk;
}

// --- gen-fixtures ---------------------------------------------------------------

int cmd_gen_fixtures(const std::string& dir, int input_size, int embedding_dim) {
    if (input_size <= 0 || input_size % 32 != 0)
        throw UsageError("--input-size must be a positive multiple of 32");
    if (embedding_dim <= 0)
        throw UsageError("--embedding-dim must be positive");
    fs::create_directories(dir);
    const auto set = facepipe::generate_fixtures(dir, input_size, embedding_dim);
    json j;
    j["dir"] = set.dir;
    j["detector"] = set.detector;
    j["detector_i8"] = set.detector_i8;
    j["embedder"] = set.embedder;
    j["embedder_i8"] = set.embedder_i8;
    j["config"] = set.config;
    j["frames"] = {set.blank_frame, set.face_a, set.face_b, set.scene_two};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"face detection, identification and benchmarking pipeline"};
    app.require_subcommand(1);

    CommonFlags detect_flags, enroll_flags, identify_flags, bench_flags;

    auto* detect = app.add_subcommand("detect", "detect faces and write Detection JSON");
    std::string detect_input, detect_out, detect_model, dump_aligned;
    detect->add_option("--model", detect_model, "detector model (.ftm)");
    detect->add_option("--input", detect_input, "input image (PPM)")->required();
    detect->add_option("--out", detect_out, "output JSON path (default stdout)");
    detect->add_option("--dump-aligned", dump_aligned,
                       "write aligned crops as <prefix>_<k>.ppm");
    add_common(detect, detect_flags, true);

    auto* enroll = app.add_subcommand("enroll", "enroll the best face into a gallery");
    std::string enroll_gallery, enroll_id, enroll_name, enroll_input;
    enroll->add_option("--gallery", enroll_gallery, "gallery JSON path")->required();
    enroll->add_option("--id", enroll_id, "identity id")->required();
    enroll->add_option("--name", enroll_name, "display name (default: id)");
    enroll->add_option("--input", enroll_input, "input image (PPM)")->required();
    add_common(enroll, enroll_flags, true);

    auto* identify = app.add_subcommand("identify", "match detected faces against a gallery");
    std::string identify_gallery, identify_input;
    double identify_threshold = -1.0;
    identify->add_option("--gallery", identify_gallery, "gallery JSON path")->required();
    identify->add_option("--input", identify_input, "input image (PPM)")->required();
    identify->add_option("--threshold", identify_threshold, "acceptance threshold");
    add_common(identify, identify_flags, true);

    auto* bench = app.add_subcommand("bench", "benchmark detect/embed/pipeline stages");
    std::string bench_mode, bench_faces = "1", bench_report, bench_format = "csv";
    int bench_frames = -1, bench_warmup = -1;
    bool bench_breakdown = false;
    bench->add_option("--mode", bench_mode, "detect | embed | pipeline")->required();
    bench->add_option("--faces", bench_faces, "face count K or range A..B");
    bench->add_option("--frames", bench_frames, "timed frames per report");
    bench->add_option("--warmup", bench_warmup, "untimed warmup frames");
    bench->add_option("--report", bench_report, "report output path (default stdout)");
    bench->add_option("--format", bench_format, "csv | json");
    bench->add_flag("--breakdown", bench_breakdown,
                    "detect mode: also time inference and post-processing separately");
    add_common(bench, bench_flags, true);

    auto* eval = app.add_subcommand("eval-ap", "average precision of detections vs ground truth");
    std::string eval_dets, eval_gt, eval_difficulty = "all";
    double eval_iou = 0.5;
    eval->add_option("--detections", eval_dets, "Detection JSON (single or array)")->required();
    eval->add_option("--ground-truth", eval_gt, "ground-truth JSON")->required();
    eval->add_option("--iou", eval_iou, "match IoU threshold");
    eval->add_option("--difficulty", eval_difficulty, "easy | hard | all");

    auto* gen = app.add_subcommand("gen-fixtures", "write fixture models, frames and config");
    std::string gen_dir = "fixtures";
    int gen_input_size = 64, gen_dim = 128;
    gen->add_option("--dir", gen_dir, "output directory");
    gen->add_option("--input-size", gen_input_size, "detector input size (multiple of 32)");
    gen->add_option("--embedding-dim", gen_dim, "embedder output dimension");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*detect) {
            if (!detect_model.empty()) detect_flags.detector_model = detect_model;
            return cmd_detect(detect_flags, detect_input, detect_out, dump_aligned);
        }
        if (*enroll)
            return cmd_enroll(enroll_flags, enroll_gallery, enroll_id, enroll_name,
                              enroll_input);
        if (*identify)
            return cmd_identify(identify_flags, identify_gallery, identify_input,
                                identify_threshold);
        if (*bench)
            return cmd_bench(bench_flags, bench_mode, bench_faces, bench_frames,
                             bench_warmup, bench_report, bench_format, bench_breakdown);
        if (*eval)
            return cmd_eval_ap(eval_dets, eval_gt, eval_iou, eval_difficulty);
        if (*gen)
            return cmd_gen_fixtures(gen_dir, gen_input_size, gen_dim);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const facepipe::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NoFaceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoFace;
    } catch (const facepipe::ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModel;
    } catch (const facepipe::InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGeneric;
    }
    return kExitGeneric;
}
