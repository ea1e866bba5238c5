#pragma once

#include <string>
#include <utility>
#include <vector>

namespace blpr {

struct RectifyConfig {
    double fr_severe = 1.15;       // Route 1: fr > this
    double tilt_severe = 15.0;     // Route 1: tilt > this (degrees)
    double fr_flat = 1.06;         // Route 2: fr < this
    double tilt_flat = 5.0;        // Route 2: tilt < this
    double guardrail_frac = 0.25;  // max corner displacement / ROI width
    double min_quad_area_frac = 0.15;
    double min_solidity = 0.45;
    double blob_area_min_frac = 0.05;
    double blob_area_max_frac = 0.80;
    int morph_w = 5;
    int morph_h = 3;
    int clahe_tiles = 8;
    double clahe_clip = 2.0;
    int canny_low = 50;
    int canny_high = 150;
    double approx_eps_frac = 0.02;  // of contour perimeter
};

struct PhotometricConfig {
    double sigma_skip = 60.0;   // skip when sigma_v > this
    double mu_skip_low = 80.0;  // or mu_v within [low, high]
    double mu_skip_high = 160.0;
    double gamma_min = 0.6;
    double gamma_max = 1.5;
};

struct TripwireConfig {
    double tau = 0.2;
    int min_chars = 6;
};

struct ReadingConfig {
    double overlap_frac = 0.5;      // of the shorter box height
    double dept_right_frac = 0.15;  // x-center in the rightmost fraction
    double dept_top_frac = 0.40;    // y-center in the top fraction
};

struct VlmConfig {
    std::string endpoint = "http://127.0.0.1:11434/api/generate";
    std::string model = "gemma3:4b";
    std::string prompt = "Read plate. Alphanumeric only. No BOLIVIA.";
    int timeout_ms = 30000;
    int jpeg_quality = 90;
};

struct PipelineConfig {
    double conf_threshold = 0.50;
    int pad_px = 10;
    double inside_frac = 0.9;  // plate-in-car overlap requirement
    bool rectify_on = true;
    bool photometric_on = true;
    bool vlm_on = true;
    bool fast_ocr_on = true;
    bool all_plates = false;
    RectifyConfig rectify;
    PhotometricConfig photometric;
    TripwireConfig tripwire;
    ReadingConfig reading;
    VlmConfig vlm;
};

// Flat "section.key = value" document, '#' comments.
PipelineConfig load_config(const std::string& path);
bool set_config_key(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::pair<std::string, std::string>> dump_config(const PipelineConfig& cfg);
void validate_config(const PipelineConfig& cfg);  // throws on out-of-range values

} // namespace blpr
