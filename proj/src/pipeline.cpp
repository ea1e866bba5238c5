#include "blpr/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <stdexcept>
#include <thread>

#include "blpr/io.hpp"

namespace blpr {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

} // namespace

const char* to_string(ReadingRoute r) {
    switch (r) {
        case ReadingRoute::FastPath: return "FastPath";
        case ReadingRoute::VlmFallback: return "VlmFallback";
        case ReadingRoute::VlmForced: return "VlmForced";
        default: return "Null";
    }
}

PlateReading process_roi(const ImageBuffer& roi, RecognizerPort& recognizer,
                         VlmPort* vlm, const PipelineConfig& cfg,
                         const std::string& debug_dir) {
    PlateReading out;
    const auto t_total = Clock::now();

    ImageBuffer current = roi;
    if (cfg.rectify_on) {
        const auto t = Clock::now();
        RectifyOutcome rect = rectify(current, cfg.rectify, debug_dir);
        out.timings["rectify"] = ms_since(t);
        out.rectify_route = rect.route;
        current = std::move(rect.image);
    } else {
        out.timings["rectify"] = 0.0;
    }

    if (cfg.photometric_on && current.channels() == 3) {
        const auto t = Clock::now();
        PhotometricResult photo = photometric_correct(current, cfg.photometric);
        out.timings["photometric"] = ms_since(t);
        out.gamma = photo.decision;
        current = std::move(photo.image);
    } else {
        out.timings["photometric"] = 0.0;
    }

    bool want_vlm = false;
    if (cfg.fast_ocr_on) {
        const auto t = Clock::now();
        const std::vector<CharDetection> chars = recognizer.recognize(current);
        AssembledText assembled = assemble(chars, current.width(), current.height(), cfg.reading);
        out.timings["ocr"] = ms_since(t);
        out.assembled = assembled;
        out.text = assembled.text;
        out.route = assembled.text.empty() ? ReadingRoute::Null : ReadingRoute::FastPath;
        want_vlm = cfg.vlm_on && tripwire(assembled, cfg.tripwire.tau, cfg.tripwire.min_chars);
    } else {
        out.timings["ocr"] = 0.0;
        want_vlm = cfg.vlm_on;  // fallback runs unconditionally without fast OCR
    }

    if (want_vlm && vlm) {
        const auto t = Clock::now();
        VlmResult res = vlm->query(current, cfg.vlm);
        out.timings["vlm"] = ms_since(t);
        if (!res.failed) {
            out.text = res.sanitized;
            out.route = cfg.fast_ocr_on ? ReadingRoute::VlmFallback : ReadingRoute::VlmForced;
        }
        // On transport failure the fast-path text (possibly empty) stands.
        out.vlm = std::move(res);
        if (out.text.empty()) out.route = ReadingRoute::Null;
    } else {
        out.timings["vlm"] = 0.0;
    }

    out.timings["total"] = ms_since(t_total);
    return out;
}

namespace {

std::optional<Detection> detect_best(const ImageBuffer& frame, const std::string& name,
                                     DetectorPort& detector, const PipelineConfig& cfg,
                                     double& detect_ms, std::vector<Detection>* all_out) {
    const auto t = Clock::now();
    const FrameDetections dets = detector.detect(frame, name, cfg.conf_threshold);
    const std::vector<Detection> valid = validate_plates(dets.plates, dets.cars, cfg.inside_frac);
    detect_ms = ms_since(t);
    if (all_out) *all_out = valid;
    return best_box(valid);
}

} // namespace

std::optional<PlateReading> process_frame(const ImageBuffer& frame, const std::string& name,
                                          DetectorPort& detector, RecognizerPort& recognizer,
                                          VlmPort* vlm, const PipelineConfig& cfg,
                                          const std::string& debug_dir) {
    const auto t_total = Clock::now();
    double detect_ms = 0.0;
    const std::optional<Detection> best = detect_best(frame, name, detector, cfg, detect_ms, nullptr);
    if (!best) return std::nullopt;

    const ImageBuffer roi = crop_padded(frame, *best, cfg.pad_px);
    PlateReading out = process_roi(roi, recognizer, vlm, cfg, debug_dir);
    out.source_box = *best;
    out.timings["detect"] = detect_ms;
    out.timings["total"] = ms_since(t_total);
    return out;
}

std::vector<PlateReading> process_frame_all(const ImageBuffer& frame, const std::string& name,
                                            DetectorPort& detector, RecognizerPort& recognizer,
                                            VlmPort* vlm, const PipelineConfig& cfg) {
    double detect_ms = 0.0;
    std::vector<Detection> valid;
    detect_best(frame, name, detector, cfg, detect_ms, &valid);
    std::vector<PlateReading> out;
    for (const Detection& d : valid) {
        const auto t_total = Clock::now();
        const ImageBuffer roi = crop_padded(frame, d, cfg.pad_px);
        PlateReading r = process_roi(roi, recognizer, vlm, cfg);
        r.source_box = d;
        r.timings["detect"] = detect_ms;
        r.timings["total"] += detect_ms + ms_since(t_total) - r.timings["total"];
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<BatchResult> process_batch(const std::vector<BatchItem>& items,
                                       DetectorPort& detector, RecognizerPort& recognizer,
                                       VlmPort* vlm, const PipelineConfig& cfg, int workers) {
    if (workers < 1) throw std::invalid_argument("process_batch: workers must be >= 1");
    std::vector<BatchResult> results(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                const ImageBuffer frame = read_png(items[i].image_path);
                results[i].reading =
                    process_frame(frame, items[i].name, detector, recognizer, vlm, cfg);
            } catch (const std::exception& e) {
                results[i].error = true;
                results[i].error_msg = e.what();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

json reading_to_json(const PlateReading& r, bool include_timings) {
    json j;
    j["text"] = r.text;
    j["route"] = to_string(r.route);
    if (r.assembled) {
        json a;
        a["text"] = r.assembled->text;
        a["count"] = r.assembled->count;
        if (r.assembled->count > 0) {
            a["min_conf"] = r.assembled->min_conf;
            a["max_conf"] = r.assembled->max_conf;
        }
        if (r.assembled->dropped_department)
            a["dropped_department"] = glyph_name(*r.assembled->dropped_department);
        j["assembled"] = a;
    }
    if (r.vlm) {
        json v;
        v["raw_text"] = r.vlm->raw_text;
        v["sanitized"] = r.vlm->sanitized;
        v["failed"] = r.vlm->failed;
        if (r.vlm->failed) v["reason"] = r.vlm->fail_reason;
        if (include_timings) v["latency_ms"] = r.vlm->latency_ms;
        j["vlm"] = v;
    }
    json g;
    g["skipped"] = r.gamma.skipped;
    if (r.gamma.gamma_raw) g["gamma_raw"] = *r.gamma.gamma_raw;
    if (r.gamma.gamma_clamped) g["gamma_clamped"] = *r.gamma.gamma_clamped;
    g["mean_v"] = r.gamma.stats.mean_v;
    g["std_v"] = r.gamma.stats.std_v;
    j["gamma"] = g;
    if (r.rectify_route) j["rectify_route"] = to_string(*r.rectify_route);
    if (include_timings) j["timings"] = r.timings;
    j["source_box"] = {r.source_box.box.x0, r.source_box.box.y0,
                       r.source_box.box.x1, r.source_box.box.y1};
    j["source_confidence"] = r.source_box.confidence;
    return j;
}

json batch_result_to_json(const BatchResult& r, const std::string& name, bool include_timings) {
    json j;
    j["image"] = name;
    if (r.error) {
        j["error"] = r.error_msg;
    } else if (r.reading) {
        j["reading"] = reading_to_json(*r.reading, include_timings);
    } else {
        j["reading"] = nullptr;
    }
    return j;
}

} // namespace blpr
