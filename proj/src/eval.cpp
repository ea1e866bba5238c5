#include "blpr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "blpr/io.hpp"

namespace blpr::eval {

using json = nlohmann::json;

int levenshtein(const std::string& a, const std::string& b) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    std::vector<int> prev(m + 1), cur(m + 1);
    for (int j = 0; j <= m; ++j) prev[j] = j;
    for (int i = 1; i <= n; ++i) {
        cur[0] = i;
        for (int j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double similarity(const std::string& gt, const std::string& pred) {
    const std::size_t denom = std::max(gt.size(), pred.size());
    if (denom == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(gt, pred)) / static_cast<double>(denom);
}

PrfCounts char_prf(const std::string& gt, const std::string& pred) {
    const int n = static_cast<int>(gt.size());
    const int m = static_cast<int>(pred.size());
    // Full DP table so we can trace back.
    std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
    for (int i = 0; i <= n; ++i) d[i][0] = i;
    for (int j = 0; j <= m; ++j) d[0][j] = j;
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= m; ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (gt[i - 1] == pred[j - 1] ? 0 : 1)});

    long tp = 0;
    int i = n, j = m;
    while (i > 0 || j > 0) {
        // Ties break match > substitution > deletion > insertion.
        if (i > 0 && j > 0 && gt[i - 1] == pred[j - 1] && d[i][j] == d[i - 1][j - 1]) {
            ++tp;
            --i; --j;
        } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
            --i; --j;
        } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
            --i;
        } else {
            --j;
        }
    }
    return PrfCounts{tp, m - tp, n - tp};
}

std::vector<EvalRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    std::vector<EvalRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        EvalRecord r;
        r.image = j.at("image").get<std::string>();
        r.plate = j.at("plate").get<std::string>();
        if (r.plate.empty() ||
            r.plate.find_first_not_of("0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ") != std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": plate must be non-empty [0-9A-Z]");
        if (j.contains("lux") && j["lux"].is_number()) r.lux = j["lux"].get<double>();
        if (j.contains("distance")) r.distance = j["distance"].get<std::string>();
        if (j.contains("angle")) r.angle_category = j["angle"].get<std::string>();
        if (j.contains("illumination")) r.illum_category = j["illumination"].get<std::string>();
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

struct Tally {
    double sim_sum = 0.0;
    double time_sum = 0.0;
    long tp = 0, fp = 0, fn = 0;
    int n = 0;
    int n_fallback = 0;
    int n_exact = 0;
    int n_errors = 0;

    void add(const std::string& gt, const std::string& pred, double time_ms, bool fallback,
             bool error) {
        const PrfCounts c = char_prf(gt, pred);
        sim_sum += similarity(gt, pred);
        time_sum += time_ms;
        tp += c.tp; fp += c.fp; fn += c.fn;
        ++n;
        if (fallback) ++n_fallback;
        if (gt == pred) ++n_exact;
        if (error) ++n_errors;
    }

    MetricsReport finish() const {
        MetricsReport r;
        r.n_plates = n;
        r.n_errors = n_errors;
        if (n == 0) return r;
        r.avg_similarity = sim_sum / n;
        r.mean_time_ms = time_sum / n;
        r.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
        r.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
        r.f1 = (r.precision + r.recall) > 0.0
                   ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                   : 0.0;
        r.fallback_rate = static_cast<double>(n_fallback) / n;
        r.exact_match_rate = static_cast<double>(n_exact) / n;
        return r;
    }
};

} // namespace

MetricsReport run_eval(const std::vector<EvalRecord>& records, DetectorPort& detector,
                       RecognizerPort& recognizer, VlmPort* vlm, const PipelineConfig& cfg,
                       const EvalOptions& opts) {
    namespace fs = std::filesystem;
    std::vector<const EvalRecord*> kept;
    int excluded = 0;
    for (const EvalRecord& r : records) {
        if (opts.exclude_far && r.distance == "far") {
            ++excluded;
        } else {
            kept.push_back(&r);
        }
    }

    struct Row {
        std::string pred;
        double time_ms = 0.0;
        bool fallback = false;
        bool error = false;
    };
    std::vector<Row> rows(kept.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= kept.size()) return;
            const EvalRecord& rec = *kept[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const std::string path =
                    opts.image_root.empty() ? rec.image
                                            : (fs::path(opts.image_root) / rec.image).string();
                const ImageBuffer frame = read_png(path);
                const std::optional<PlateReading> reading =
                    process_frame(frame, rec.image, detector, recognizer, vlm, cfg);
                if (reading) {
                    rows[i].pred = reading->text;
                    rows[i].fallback = reading->route == ReadingRoute::VlmFallback ||
                                       reading->route == ReadingRoute::VlmForced;
                }
            } catch (const std::exception&) {
                rows[i].error = true;  // counts as an empty prediction
            }
            rows[i].time_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
        }
    };
    const int workers = std::max(1, opts.workers);
    if (workers == 1 || kept.size() < 2) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    Tally overall;
    std::map<std::string, Tally> by_angle, by_illum;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const EvalRecord& rec = *kept[i];
        const Row& row = rows[i];
        overall.add(rec.plate, row.pred, row.time_ms, row.fallback, row.error);
        if (!rec.angle_category.empty())
            by_angle[rec.angle_category].add(rec.plate, row.pred, row.time_ms, row.fallback,
                                             row.error);
        if (!rec.illum_category.empty())
            by_illum[rec.illum_category].add(rec.plate, row.pred, row.time_ms, row.fallback,
                                             row.error);
        if (opts.per_record)
            opts.per_record->push_back({rec.image, rec.plate, row.pred,
                                        similarity(rec.plate, row.pred), row.time_ms,
                                        row.fallback, row.error});
    }

    MetricsReport report = overall.finish();
    report.n_excluded_far = excluded;
    for (const auto& [k, t] : by_angle) report.by_angle[k] = t.finish();
    for (const auto& [k, t] : by_illum) report.by_illum[k] = t.finish();
    return report;
}

std::vector<std::string> ablation_config_names() {
    return {"raw", "no-illum", "no-rectify", "no-vlm", "raw-vlm", "preprocessed-vlm", "full"};
}

PipelineConfig ablation_config(const std::string& name, const PipelineConfig& base) {
    PipelineConfig cfg = base;
    auto set = [&](bool rect, bool photo, bool vlm, bool ocr) {
        cfg.rectify_on = rect;
        cfg.photometric_on = photo;
        cfg.vlm_on = vlm;
        cfg.fast_ocr_on = ocr;
    };
    if (name == "raw")                  set(false, false, false, true);
    else if (name == "no-illum")        set(true, false, false, true);
    else if (name == "no-rectify")      set(false, true, false, true);
    else if (name == "no-vlm")          set(true, true, false, true);
    else if (name == "raw-vlm")         set(false, false, true, false);
    else if (name == "preprocessed-vlm") set(true, true, true, false);
    else if (name == "full")            set(true, true, true, true);
    else throw std::invalid_argument("unknown ablation config: " + name);
    return cfg;
}

std::vector<AblationRow> run_ablation(const std::vector<EvalRecord>& records,
                                      DetectorPort& detector, RecognizerPort& recognizer,
                                      VlmPort* vlm, const PipelineConfig& base,
                                      const EvalOptions& opts,
                                      const std::vector<std::string>& only) {
    const std::vector<std::string> names =
        only.empty() ? ablation_config_names() : only;
    std::vector<AblationRow> rows;
    for (const std::string& name : names) {
        const PipelineConfig cfg = ablation_config(name, base);
        rows.push_back({name, run_eval(records, detector, recognizer, vlm, cfg, opts)});
    }
    return rows;
}

json report_to_json(const MetricsReport& r, bool with_breakdowns) {
    json j = {{"avg_similarity", r.avg_similarity},
              {"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1},
              {"mean_time_ms", r.mean_time_ms},
              {"fallback_rate", r.fallback_rate},
              {"exact_match_rate", r.exact_match_rate},
              {"n_plates", r.n_plates},
              {"n_excluded_far", r.n_excluded_far},
              {"n_errors", r.n_errors}};
    if (with_breakdowns) {
        json a = json::object(), il = json::object();
        for (const auto& [k, sub] : r.by_angle) a[k] = report_to_json(sub, false);
        for (const auto& [k, sub] : r.by_illum) il[k] = report_to_json(sub, false);
        j["by_angle"] = a;
        j["by_illumination"] = il;
    }
    return j;
}

json ablation_table_json(const std::vector<AblationRow>& rows) {
    json out = json::array();
    for (const AblationRow& row : rows) {
        json j = {{"config", row.name},
                  {"avg_similarity", row.report.avg_similarity},
                  {"precision", row.report.precision},
                  {"recall", row.report.recall},
                  {"f1", row.report.f1},
                  {"time_ms", row.report.mean_time_ms},
                  {"fallback_rate", row.report.fallback_rate}};
        out.push_back(std::move(j));
    }
    return out;
}

std::string ablation_table_text(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-18s %14s %10s %8s %8s %10s %9s\n", "config",
                  "avg_similarity", "precision", "recall", "f1", "time_ms", "fallback");
    os << buf;
    for (const AblationRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-18s %14.4f %10.4f %8.4f %8.4f %10.2f %9.3f\n",
                      r.name.c_str(), r.report.avg_similarity, r.report.precision,
                      r.report.recall, r.report.f1, r.report.mean_time_ms,
                      r.report.fallback_rate);
        os << buf;
    }
    return os.str();
}

} // namespace blpr::eval
