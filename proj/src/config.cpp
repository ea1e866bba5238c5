#include "blpr/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace blpr {

namespace {

struct Binding {
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw std::runtime_error("config: bad boolean '" + s + "'");
}

#define BIND_NUM(key, field, type) \
    {key, Binding{[](PipelineConfig& c, const std::string& v) { c.field = static_cast<type>(std::stod(v)); }, \
                  [](const PipelineConfig& c) { return fmt(c.field); }}}
#define BIND_BOOL(key, field) \
    {key, Binding{[](PipelineConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
                  [](const PipelineConfig& c) { return fmt(c.field); }}}
#define BIND_STR(key, field) \
    {key, Binding{[](PipelineConfig& c, const std::string& v) { c.field = v; }, \
                  [](const PipelineConfig& c) { return c.field; }}}

const std::vector<std::pair<std::string, Binding>>& bindings() {
    static const std::vector<std::pair<std::string, Binding>> kBindings = {
        BIND_NUM("detect.conf_threshold", conf_threshold, double),
        BIND_NUM("detect.pad_px", pad_px, int),
        BIND_NUM("detect.inside_frac", inside_frac, double),
        BIND_BOOL("pipeline.rectify_on", rectify_on),
        BIND_BOOL("pipeline.photometric_on", photometric_on),
        BIND_BOOL("pipeline.vlm_on", vlm_on),
        BIND_BOOL("pipeline.fast_ocr_on", fast_ocr_on),
        BIND_BOOL("pipeline.all_plates", all_plates),
        BIND_NUM("rectify.fr_severe", rectify.fr_severe, double),
        BIND_NUM("rectify.tilt_severe", rectify.tilt_severe, double),
        BIND_NUM("rectify.fr_flat", rectify.fr_flat, double),
        BIND_NUM("rectify.tilt_flat", rectify.tilt_flat, double),
        BIND_NUM("rectify.guardrail_frac", rectify.guardrail_frac, double),
        BIND_NUM("rectify.min_quad_area_frac", rectify.min_quad_area_frac, double),
        BIND_NUM("rectify.min_solidity", rectify.min_solidity, double),
        BIND_NUM("rectify.blob_area_min_frac", rectify.blob_area_min_frac, double),
        BIND_NUM("rectify.blob_area_max_frac", rectify.blob_area_max_frac, double),
        BIND_NUM("rectify.morph_w", rectify.morph_w, int),
        BIND_NUM("rectify.morph_h", rectify.morph_h, int),
        BIND_NUM("rectify.clahe_tiles", rectify.clahe_tiles, int),
        BIND_NUM("rectify.clahe_clip", rectify.clahe_clip, double),
        BIND_NUM("rectify.canny_low", rectify.canny_low, int),
        BIND_NUM("rectify.canny_high", rectify.canny_high, int),
        BIND_NUM("rectify.approx_eps_frac", rectify.approx_eps_frac, double),
        BIND_NUM("photometric.sigma_skip", photometric.sigma_skip, double),
        BIND_NUM("photometric.mu_skip_low", photometric.mu_skip_low, double),
        BIND_NUM("photometric.mu_skip_high", photometric.mu_skip_high, double),
        BIND_NUM("photometric.gamma_min", photometric.gamma_min, double),
        BIND_NUM("photometric.gamma_max", photometric.gamma_max, double),
        BIND_NUM("tripwire.tau", tripwire.tau, double),
        BIND_NUM("tripwire.min_chars", tripwire.min_chars, int),
        BIND_NUM("reading.overlap_frac", reading.overlap_frac, double),
        BIND_NUM("reading.dept_right_frac", reading.dept_right_frac, double),
        BIND_NUM("reading.dept_top_frac", reading.dept_top_frac, double),
        BIND_STR("vlm.endpoint", vlm.endpoint),
        BIND_STR("vlm.model", vlm.model),
        BIND_STR("vlm.prompt", vlm.prompt),
        BIND_NUM("vlm.timeout_ms", vlm.timeout_ms, int),
        BIND_NUM("vlm.jpeg_quality", vlm.jpeg_quality, int),
    };
    return kBindings;
}

#undef BIND_NUM
#undef BIND_BOOL
#undef BIND_STR

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

bool set_config_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [k, b] : bindings()) {
        if (k == key) {
            b.set(cfg, value);
            return true;
        }
    }
    return false;
}

std::vector<std::pair<std::string, std::string>> dump_config(const PipelineConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(bindings().size());
    for (const auto& [k, b] : bindings()) out.emplace_back(k, b.get(cfg));
    return out;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!set_config_key(cfg, key, val))
            throw std::runtime_error("config: unknown key '" + key + "'");
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const PipelineConfig& cfg) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::runtime_error(std::string("config: ") + what);
    };
    require(cfg.conf_threshold >= 0.0 && cfg.conf_threshold <= 1.0, "conf_threshold out of [0,1]");
    require(cfg.pad_px >= 0, "pad_px must be >= 0");
    require(cfg.inside_frac >= 0.0 && cfg.inside_frac <= 1.0, "inside_frac out of [0,1]");
    require(cfg.fast_ocr_on || cfg.vlm_on, "at least one of fast_ocr_on / vlm_on must be enabled");
    require(cfg.rectify.fr_severe >= 1.0 && cfg.rectify.fr_flat >= 1.0, "fr thresholds must be >= 1");
    require(cfg.rectify.fr_flat <= cfg.rectify.fr_severe, "fr_flat must not exceed fr_severe");
    require(cfg.rectify.guardrail_frac > 0.0, "guardrail_frac must be positive");
    require(cfg.tripwire.tau > 0.0 && cfg.tripwire.tau <= 1.0, "tripwire.tau out of (0,1]");
    require(cfg.tripwire.min_chars >= 0, "tripwire.min_chars must be >= 0");
    require(cfg.photometric.gamma_min > 0.0 &&
            cfg.photometric.gamma_min <= cfg.photometric.gamma_max, "bad gamma clamp range");
    require(cfg.vlm.timeout_ms > 0, "vlm.timeout_ms must be positive");
    require(cfg.vlm.jpeg_quality >= 1 && cfg.vlm.jpeg_quality <= 100, "vlm.jpeg_quality out of [1,100]");
}

} // namespace blpr
