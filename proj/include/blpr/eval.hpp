#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "blpr/pipeline.hpp"

namespace blpr::eval {

// Edit distance with unit costs.
int levenshtein(const std::string& a, const std::string& b);

// 1 - lev/max(|gt|,|pred|); both empty -> 1.0. Symmetric, in [0,1],
// equals 1 only for exact matches.
double similarity(const std::string& gt, const std::string& pred);

struct PrfCounts {
    long tp = 0, fp = 0, fn = 0;
};

// Character-level alignment counts from the Levenshtein traceback.
// Ties break match > substitution > deletion > insertion.
PrfCounts char_prf(const std::string& gt, const std::string& pred);

struct EvalRecord {
    std::string image;  // relative to the manifest directory
    std::string plate;  // ground truth, [0-9A-Z]+
    std::optional<double> lux;
    std::string distance = "normal";  // near | normal | far
    std::string angle_category;       // Normal | Tilted | Steep
    std::string illum_category;       // Low | Medium | High
};

// Parses the corpus manifest (one JSON object per line). Throws on
// malformed lines or an invalid plate alphabet.
std::vector<EvalRecord> load_manifest(const std::string& path);

struct MetricsReport {
    double avg_similarity = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mean_time_ms = 0.0;
    double fallback_rate = 0.0;
    double exact_match_rate = 0.0;
    int n_plates = 0;
    int n_excluded_far = 0;
    int n_errors = 0;  // failures, counted as empty predictions
    std::map<std::string, MetricsReport> by_angle;  // Normal/Tilted/Steep
    std::map<std::string, MetricsReport> by_illum;  // Low/Medium/High
};

nlohmann::json report_to_json(const MetricsReport& r, bool with_breakdowns = true);

struct PerRecord {
    std::string image;
    std::string gt;
    std::string pred;
    double similarity = 0.0;
    double time_ms = 0.0;
    bool fallback = false;
    bool error = false;
};

struct EvalOptions {
    std::string image_root;      // prefix joined to record image paths
    bool exclude_far = true;
    int workers = 1;
    std::vector<PerRecord>* per_record = nullptr;  // optional dump
};

MetricsReport run_eval(const std::vector<EvalRecord>& records, DetectorPort& detector,
                       RecognizerPort& recognizer, VlmPort* vlm, const PipelineConfig& cfg,
                       const EvalOptions& opts);

struct AblationRow {
    std::string name;
    MetricsReport report;
};

// The six Table-5 variants plus the full system, in that order. Names:
// raw, no-illum, no-rectify, no-vlm, raw-vlm, preprocessed-vlm, full.
std::vector<std::string> ablation_config_names();

// Applies a named variant's toggles on top of a base config.
PipelineConfig ablation_config(const std::string& name, const PipelineConfig& base);

std::vector<AblationRow> run_ablation(const std::vector<EvalRecord>& records,
                                      DetectorPort& detector, RecognizerPort& recognizer,
                                      VlmPort* vlm, const PipelineConfig& base,
                                      const EvalOptions& opts,
                                      const std::vector<std::string>& only = {});

// Fixed-width table for terminals; one row per configuration.
std::string ablation_table_text(const std::vector<AblationRow>& rows);
nlohmann::json ablation_table_json(const std::vector<AblationRow>& rows);

} // namespace blpr::eval
