#pragma once

#include <array>
#include <optional>
#include <string>

#include "blpr/config.hpp"
#include "blpr/geometry.hpp"
#include "blpr/image.hpp"

namespace blpr {

// Four ordered corners (TL, TR, BR, BL) with cached edge lengths.
struct Quadrilateral {
    std::array<Point2, 4> corners{};
    double top_len = 0.0;
    double bottom_len = 0.0;
    double left_len = 0.0;
    double right_len = 0.0;

    static Quadrilateral from_points(const std::array<Point2, 4>& pts);
};

struct GeometryMeasure {
    double fr = 1.0;        // >= 1, max/min of opposing horizontal edges
    double tilt_deg = 0.0;  // top-edge tilt, [0, 90]
};

enum class RectifyRoute { SevereWarp, GentleRefine, PassThrough };

const char* to_string(RectifyRoute r);

struct RectifyOutcome {
    ImageBuffer image;
    RectifyRoute route = RectifyRoute::PassThrough;
    std::optional<Quadrilateral> quad;
    std::optional<GeometryMeasure> measure;
    std::optional<Homography> homography;  // set when a warp was applied
};

// CLAHE -> Canny -> largest contour -> polygon approximation. Empty unless
// the simplification yields exactly four convex, ordered corners.
std::optional<Quadrilateral> extract_largest_quadrilateral(const ImageBuffer& roi,
                                                           const RectifyConfig& cfg = {});

GeometryMeasure calculate_geometry(const Quadrilateral& quad);

// Three-route rectification; every failure degrades to pass-through.
RectifyOutcome rectify(const ImageBuffer& roi, const RectifyConfig& cfg = {},
                       const std::string& debug_dir = "");

// Pure routing decision, exposed so threshold boundaries are testable
// without image fixtures.
enum class RouteDecision { Severe, SevereGuardrailBlocked, Gentle, GentleRejected, PassThrough };
RouteDecision decide_route(const GeometryMeasure& g, double quad_area_frac,
                           double delta_max_frac, std::optional<double> blob_solidity,
                           std::optional<double> blob_area_frac, const RectifyConfig& cfg);

} // namespace blpr
