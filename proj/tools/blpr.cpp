// blpr: plate-recognition pipeline driver.
//
// Exit codes: 0 success, 1 invariant violation, 2 I/O or config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blpr/eval.hpp"
#include "blpr/io.hpp"
#include "blpr/kernels.hpp"
#include "blpr/pipeline.hpp"
#include "blpr/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;  // key=value overrides
    bool print_config = false;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string debug_dir;
    bool no_vlm = false;
    bool all_plates = false;
    std::string vlm_endpoint;
    std::string detections;     // fixture sidecar JSONL
    std::string detector_cmd;   // external stdio detector
    double jitter = 0.0;
    double drop_rate = 0.0;
    std::string backend = "auto";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "config file (section.key = value lines)");
    cmd->add_option("--set", o.sets, "override one config key, e.g. --set tripwire.tau=0.25");
    cmd->add_flag("--print-config", o.print_config, "print the effective config and exit");
    cmd->add_option("--seed", o.seed, "deterministic run: fixes detector RNG, omits timings");
    cmd->add_option("--debug-dir", o.debug_dir, "dump per-stage PNGs here");
    cmd->add_flag("--no-vlm", o.no_vlm, "disable the fallback");
    cmd->add_option("--vlm-endpoint", o.vlm_endpoint, "override vlm.endpoint");
    cmd->add_option("--detections", o.detections, "fixture detector sidecar (JSONL)");
    cmd->add_option("--detector-cmd", o.detector_cmd, "external detector command (stdio JSON)");
    cmd->add_option("--jitter", o.jitter, "fixture detector box jitter, px");
    cmd->add_option("--drop-rate", o.drop_rate, "fixture detector drop probability");
    cmd->add_option("--backend", o.backend, "kernel backend: auto|scalar|avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
}

blpr::PipelineConfig make_config(const CommonOpts& o) {
    blpr::PipelineConfig cfg;
    if (!o.config_path.empty()) cfg = blpr::load_config(o.config_path);
    for (const std::string& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects key=value, got: " + kv);
        std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        // tolerate spaces around '='
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        if (!blpr::set_config_key(cfg, key, value))
            throw std::runtime_error("unknown config key: " + key);
    }
    if (o.no_vlm) cfg.vlm_on = false;
    if (o.all_plates) cfg.all_plates = true;
    if (!o.vlm_endpoint.empty()) cfg.vlm.endpoint = o.vlm_endpoint;
    else if (const char* env = std::getenv("BLPR_VLM_ENDPOINT")) cfg.vlm.endpoint = env;
    blpr::validate_config(cfg);
    return cfg;
}

int maybe_print_config(const CommonOpts& o, const blpr::PipelineConfig& cfg) {
    if (!o.print_config) return -1;
    for (const auto& [k, v] : blpr::dump_config(cfg)) std::cout << k << " = " << v << "\n";
    return 0;
}

std::unique_ptr<blpr::DetectorPort> make_detector(const CommonOpts& o) {
    if (!o.detector_cmd.empty())
        return std::make_unique<blpr::StdioDetectorAdapter>(o.detector_cmd);
    if (o.detections.empty())
        throw std::runtime_error("a detector is required: pass --detections or --detector-cmd");
    return std::make_unique<blpr::FixtureDetector>(o.detections, o.jitter, o.drop_rate,
                                                   o.seed.value_or(0));
}

std::vector<blpr::BatchItem> manifest_items(const std::vector<blpr::eval::EvalRecord>& records,
                                            const std::string& root) {
    std::vector<blpr::BatchItem> items;
    for (const auto& r : records) {
        const std::string path = root.empty() ? r.image : (fs::path(root) / r.image).string();
        items.push_back({path, r.image});
    }
    return items;
}

// ---- subcommand bodies ------------------------------------------------------

int cmd_run(const CommonOpts& o, const std::string& image) {
    const blpr::PipelineConfig cfg = make_config(o);
    if (const int rc = maybe_print_config(o, cfg); rc >= 0) return rc;

    const blpr::ImageBuffer frame = blpr::read_png(image);
    auto detector = make_detector(o);
    blpr::TemplateRecognizer recognizer;
    blpr::HttpVlmClient vlm;
    blpr::VlmPort* vlm_ptr = cfg.vlm_on ? &vlm : nullptr;
    const std::string name = fs::path(image).filename().string();
    const bool timings = !o.seed.has_value();

    if (cfg.all_plates) {
        const auto readings =
            blpr::process_frame_all(frame, name, *detector, recognizer, vlm_ptr, cfg);
        json out = json::array();
        for (const auto& r : readings) out.push_back(blpr::reading_to_json(r, timings));
        std::cout << out.dump() << "\n";
        return 0;
    }
    const auto reading =
        blpr::process_frame(frame, name, *detector, recognizer, vlm_ptr, cfg, o.debug_dir);
    if (!reading) {
        std::cout << "null\n";
        return 0;
    }
    std::cout << blpr::reading_to_json(*reading, timings).dump() << "\n";
    return 0;
}

int cmd_batch(const CommonOpts& o, const std::string& manifest, const std::string& root,
              const std::string& out_path) {
    const blpr::PipelineConfig cfg = make_config(o);
    if (const int rc = maybe_print_config(o, cfg); rc >= 0) return rc;

    const auto records = blpr::eval::load_manifest(manifest);
    const std::string image_root = root.empty() ? fs::path(manifest).parent_path().string() : root;
    const auto items = manifest_items(records, image_root);

    auto detector = make_detector(o);
    blpr::TemplateRecognizer recognizer;
    blpr::HttpVlmClient vlm;
    blpr::VlmPort* vlm_ptr = cfg.vlm_on ? &vlm : nullptr;

    const auto results =
        blpr::process_batch(items, *detector, recognizer, vlm_ptr, cfg, o.workers);
    const bool timings = !o.seed.has_value();

    std::ostringstream trace;
    for (std::size_t i = 0; i < results.size(); ++i)
        trace << blpr::batch_result_to_json(results[i], items[i].name, timings).dump() << "\n";

    if (out_path.empty()) {
        std::cout << trace.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << trace.str();
    }
    return 0;
}

int cmd_synth(int n, std::uint64_t seed, const std::string& out_dir, double h_min, double h_max,
              double v_min, double v_max, double gain_min, double gain_max, double noise_sigma,
              double salt_pepper, int blur, double far_frac) {
    blpr::synth::CorpusOptions opts;
    opts.n = n;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.h_angle_min = h_min;
    opts.h_angle_max = h_max;
    opts.v_angle_min = v_min;
    opts.v_angle_max = v_max;
    opts.gain_min = gain_min;
    opts.gain_max = gain_max;
    opts.noise.gaussian_sigma = noise_sigma;
    opts.noise.salt_pepper_p = salt_pepper;
    opts.noise.blur_radius = blur;
    opts.far_frac = far_frac;
    const auto entries = blpr::synth::generate_corpus(opts);
    std::cout << json{{"n", entries.size()},
                      {"out_dir", out_dir},
                      {"manifest", (fs::path(out_dir) / "manifest.jsonl").string()},
                      {"detections", (fs::path(out_dir) / "detections.jsonl").string()}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& manifest, const std::string& root,
             bool include_far, const std::string& per_record_csv) {
    const blpr::PipelineConfig cfg = make_config(o);
    if (const int rc = maybe_print_config(o, cfg); rc >= 0) return rc;

    const auto records = blpr::eval::load_manifest(manifest);
    auto detector = make_detector(o);
    blpr::TemplateRecognizer recognizer;
    blpr::HttpVlmClient vlm;
    blpr::VlmPort* vlm_ptr = cfg.vlm_on ? &vlm : nullptr;

    blpr::eval::EvalOptions eopts;
    eopts.image_root = root.empty() ? fs::path(manifest).parent_path().string() : root;
    eopts.exclude_far = !include_far;
    eopts.workers = o.workers;
    std::vector<blpr::eval::PerRecord> per_record;
    if (!per_record_csv.empty()) eopts.per_record = &per_record;

    const auto report =
        blpr::eval::run_eval(records, *detector, recognizer, vlm_ptr, cfg, eopts);
    std::cout << blpr::eval::report_to_json(report).dump() << "\n";

    if (!per_record_csv.empty()) {
        std::ofstream csv(per_record_csv);
        if (!csv) throw std::runtime_error("cannot write " + per_record_csv);
        csv << "image,gt,pred,similarity,time_ms,fallback,error\n";
        for (const auto& r : per_record)
            csv << r.image << ',' << r.gt << ',' << r.pred << ',' << r.similarity << ','
                << r.time_ms << ',' << (r.fallback ? 1 : 0) << ',' << (r.error ? 1 : 0) << "\n";
    }
    return 0;
}

int cmd_ablate(const CommonOpts& o, const std::string& manifest, const std::string& root,
               const std::string& out_path, const std::string& configs_csv) {
    const blpr::PipelineConfig cfg = make_config(o);
    if (const int rc = maybe_print_config(o, cfg); rc >= 0) return rc;

    const auto records = blpr::eval::load_manifest(manifest);
    auto detector = make_detector(o);
    blpr::TemplateRecognizer recognizer;
    blpr::HttpVlmClient vlm;

    std::vector<std::string> only;
    if (!configs_csv.empty()) {
        std::istringstream ss(configs_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) only.push_back(tok);
    }

    blpr::eval::EvalOptions eopts;
    eopts.image_root = root.empty() ? fs::path(manifest).parent_path().string() : root;
    eopts.workers = o.workers;

    const auto rows =
        blpr::eval::run_ablation(records, *detector, recognizer, &vlm, cfg, eopts, only);
    std::cout << blpr::eval::ablation_table_json(rows).dump() << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << blpr::eval::ablation_table_text(rows);
    }
    return 0;
}

int cmd_stage(const CommonOpts& o, const std::string& stage, const std::string& image,
              const std::string& out_image) {
    const blpr::PipelineConfig cfg = make_config(o);
    if (const int rc = maybe_print_config(o, cfg); rc >= 0) return rc;
    const blpr::ImageBuffer roi = blpr::read_png(image);

    json stats;
    blpr::ImageBuffer out_img;
    if (stage == "rectify") {
        const blpr::RectifyOutcome r = blpr::rectify(roi, cfg.rectify, o.debug_dir);
        stats["route"] = blpr::to_string(r.route);
        if (r.measure) {
            stats["fr"] = r.measure->fr;
            stats["tilt_deg"] = r.measure->tilt_deg;
        }
        if (r.quad) {
            json corners = json::array();
            for (const auto& p : r.quad->corners) corners.push_back({p.x, p.y});
            stats["quad"] = corners;
        }
        out_img = r.image;
    } else if (stage == "enhance") {
        const blpr::PhotometricResult r = blpr::photometric_correct(roi, cfg.photometric);
        stats["skipped"] = r.decision.skipped;
        stats["mean_v"] = r.decision.stats.mean_v;
        stats["std_v"] = r.decision.stats.std_v;
        if (r.decision.gamma_raw) stats["gamma_raw"] = *r.decision.gamma_raw;
        if (r.decision.gamma_clamped) stats["gamma_clamped"] = *r.decision.gamma_clamped;
        out_img = r.image;
    } else if (stage == "ocr") {
        blpr::TemplateRecognizer recognizer;
        const auto chars = recognizer.recognize(roi);
        const blpr::AssembledText assembled =
            blpr::assemble(chars, roi.width(), roi.height(), cfg.reading);
        json list = json::array();
        for (const auto& c : chars)
            list.push_back({{"glyph", blpr::glyph_name(c.glyph)},
                            {"box", {c.box.x0, c.box.y0, c.box.x1, c.box.y1}},
                            {"confidence", c.confidence}});
        stats["characters"] = list;
        stats["text"] = assembled.text;
        stats["tripwire"] =
            blpr::tripwire(assembled, cfg.tripwire.tau, cfg.tripwire.min_chars);
        out_img = roi;
    } else {
        throw std::runtime_error("unknown stage: " + stage);
    }
    if (!out_image.empty()) blpr::write_png(out_image, out_img);
    std::cout << stats.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bolivian license-plate recognition pipeline"};
    app.require_subcommand(1);

    CommonOpts o;

    // run
    std::string run_image;
    CLI::App* run = app.add_subcommand("run", "process a single frame");
    run->add_option("image", run_image, "input PNG")->required();
    run->add_flag("--all-plates", o.all_plates, "emit every validated plate");
    add_common(run, o);

    // batch
    std::string batch_manifest, batch_root, batch_out;
    CLI::App* batch = app.add_subcommand("batch", "process a manifest of frames");
    batch->add_option("manifest", batch_manifest, "manifest JSONL")->required();
    batch->add_option("--root", batch_root, "image root (default: manifest directory)");
    batch->add_option("--out", batch_out, "trace file (default: stdout)");
    batch->add_option("--workers", o.workers, "parallel frames")->check(CLI::PositiveNumber);
    add_common(batch, o);

    // synth
    int synth_n = 100, synth_blur = 0;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    double h_min = 90, h_max = 90, v_min = 90, v_max = 90;
    double gain_min = 1.0, gain_max = 1.0, noise_sigma = 0.0, salt_pepper = 0.0, far_frac = 0.0;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--n", synth_n, "number of plates")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--h-min", h_min, "horizontal angle min, degrees [30,150]");
    synth->add_option("--h-max", h_max, "horizontal angle max");
    synth->add_option("--v-min", v_min, "vertical angle min, degrees [90,150]");
    synth->add_option("--v-max", v_max, "vertical angle max");
    synth->add_option("--gain-min", gain_min, "illumination gain min");
    synth->add_option("--gain-max", gain_max, "illumination gain max");
    synth->add_option("--noise-sigma", noise_sigma, "gaussian noise sigma");
    synth->add_option("--salt-pepper", salt_pepper, "salt-and-pepper probability");
    synth->add_option("--blur", synth_blur, "box blur radius");
    synth->add_option("--far-frac", far_frac, "fraction labeled far");

    // eval
    std::string eval_manifest, eval_root, eval_csv;
    bool eval_include_far = false;
    CLI::App* evalc = app.add_subcommand("eval", "run the pipeline and score it");
    evalc->add_option("manifest", eval_manifest, "manifest JSONL")->required();
    evalc->add_option("--root", eval_root, "image root (default: manifest directory)");
    evalc->add_option("--workers", o.workers, "parallel records")->check(CLI::PositiveNumber);
    evalc->add_flag("--include-far", eval_include_far, "keep far-distance records");
    evalc->add_option("--per-record", eval_csv, "CSV dump of per-record results");
    add_common(evalc, o);

    // ablate
    std::string abl_manifest, abl_root, abl_out, abl_configs;
    CLI::App* ablate = app.add_subcommand("ablate", "run the configuration grid");
    ablate->add_option("manifest", abl_manifest, "manifest JSONL")->required();
    ablate->add_option("--root", abl_root, "image root (default: manifest directory)");
    ablate->add_option("--out", abl_out, "plain-text table file");
    ablate->add_option("--configs", abl_configs,
                       "comma list: raw,no-illum,no-rectify,no-vlm,raw-vlm,preprocessed-vlm,full");
    ablate->add_option("--workers", o.workers, "parallel records")->check(CLI::PositiveNumber);
    add_common(ablate, o);

    // single-stage debug commands
    std::string stage_image, stage_out;
    CLI::App* rectify = app.add_subcommand("rectify", "run only geometric rectification");
    rectify->add_option("image", stage_image, "input ROI PNG")->required();
    rectify->add_option("--out", stage_out, "output PNG");
    add_common(rectify, o);
    CLI::App* enhance = app.add_subcommand("enhance", "run only illumination correction");
    enhance->add_option("image", stage_image, "input ROI PNG")->required();
    enhance->add_option("--out", stage_out, "output PNG");
    add_common(enhance, o);
    CLI::App* ocr = app.add_subcommand("ocr", "run only template OCR + assembly");
    ocr->add_option("image", stage_image, "input ROI PNG")->required();
    ocr->add_option("--out", stage_out, "output PNG");
    add_common(ocr, o);

    CLI11_PARSE(app, argc, argv);

    try {
        blpr::kernels::select_backend(o.backend.c_str());
        if (run->parsed()) return cmd_run(o, run_image);
        if (batch->parsed()) return cmd_batch(o, batch_manifest, batch_root, batch_out);
        if (synth->parsed())
            return cmd_synth(synth_n, synth_seed, synth_out, h_min, h_max, v_min, v_max,
                             gain_min, gain_max, noise_sigma, salt_pepper, synth_blur, far_frac);
        if (evalc->parsed()) return cmd_eval(o, eval_manifest, eval_root, eval_include_far,
                                             eval_csv);
        if (ablate->parsed()) return cmd_ablate(o, abl_manifest, abl_root, abl_out, abl_configs);
        if (rectify->parsed()) return cmd_stage(o, "rectify", stage_image, stage_out);
        if (enhance->parsed()) return cmd_stage(o, "enhance", stage_image, stage_out);
        if (ocr->parsed()) return cmd_stage(o, "ocr", stage_image, stage_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
