#pragma once

#include <optional>

#include "blpr/config.hpp"
#include "blpr/image.hpp"

namespace blpr {

struct LuminanceStats {
    double mean_v = 0.0;
    double std_v = 0.0;
};

struct GammaDecision {
    bool skipped = true;
    std::optional<double> gamma_raw;
    std::optional<double> gamma_clamped;
    LuminanceStats stats;
};

// Skips well-exposed ROIs (sigma_v > 60 or 80 <= mu_v <= 160), otherwise
// applies clamped dynamic gamma on the Value channel.
struct PhotometricResult {
    ImageBuffer image;
    GammaDecision decision;
};

PhotometricResult photometric_correct(const ImageBuffer& roi,
                                      const PhotometricConfig& cfg = {});

// gamma = log(128/255) / log(mu_v/255), pinned to the clamp bounds for
// degenerate all-black / all-white inputs.
double dynamic_gamma(double mean_v, const PhotometricConfig& cfg = {});

} // namespace blpr
