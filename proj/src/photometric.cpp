#include "blpr/photometric.hpp"

#include <cmath>
#include <stdexcept>

#include "blpr/imaging.hpp"

namespace blpr {

double dynamic_gamma(double mean_v, const PhotometricConfig& cfg) {
    if (mean_v <= 1.0) return cfg.gamma_min;    // all-black crop: brighten as much as allowed
    if (mean_v >= 254.0) return cfg.gamma_max;  // all-white crop: darken as much as allowed
    return std::log(128.0 / 255.0) / std::log(mean_v / 255.0);
}

PhotometricResult photometric_correct(const ImageBuffer& roi, const PhotometricConfig& cfg) {
    if (roi.channels() != 3)
        throw std::invalid_argument("photometric_correct: expected 3-channel ROI");

    const ValueStats stats = rgb_to_hsv_value_stats(roi);
    PhotometricResult r{roi, {}};
    r.decision.stats = {stats.mean, stats.stddev};

    if (stats.stddev > cfg.sigma_skip ||
        (stats.mean >= cfg.mu_skip_low && stats.mean <= cfg.mu_skip_high)) {
        return r;  // visibility confirmed, leave untouched
    }

    const double gamma_raw = dynamic_gamma(stats.mean, cfg);
    const double gamma = std::max(cfg.gamma_min, std::min(cfg.gamma_max, gamma_raw));
    r.decision.skipped = false;
    r.decision.gamma_raw = gamma_raw;
    r.decision.gamma_clamped = gamma;
    r.image = apply_gamma_to_value(roi, gamma);
    return r;
}

} // namespace blpr
