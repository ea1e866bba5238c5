#include "blpr/rectify.hpp"

#include <algorithm>
#include <cmath>

#include "blpr/imaging.hpp"
#include "blpr/io.hpp"

namespace blpr {

Quadrilateral Quadrilateral::from_points(const std::array<Point2, 4>& pts) {
    Quadrilateral q;
    q.corners = order_corners(pts);
    q.top_len = dist(q.corners[0], q.corners[1]);
    q.bottom_len = dist(q.corners[3], q.corners[2]);
    q.left_len = dist(q.corners[0], q.corners[3]);
    q.right_len = dist(q.corners[1], q.corners[2]);
    return q;
}

const char* to_string(RectifyRoute r) {
    switch (r) {
        case RectifyRoute::SevereWarp: return "SevereWarp";
        case RectifyRoute::GentleRefine: return "GentleRefine";
        default: return "PassThrough";
    }
}

std::optional<Quadrilateral> extract_largest_quadrilateral(const ImageBuffer& roi,
                                                           const RectifyConfig& cfg) {
    if (roi.width() < 20 || roi.height() < 10) return std::nullopt;
    const ImageBuffer gray = roi.channels() == 3 ? to_grayscale(roi) : roi;
    const ImageBuffer enhanced = clahe(gray, cfg.clahe_tiles, cfg.clahe_clip);
    const ImageBuffer edges = canny(enhanced, cfg.canny_low, cfg.canny_high);
    // Canny leaves gaps in the plate outline, worst at the corners where
    // non-maximum suppression eats the junctions; a 5x5 close reconnects the
    // loop before tracing.
    const ImageBuffer linked = morph_close(edges, 5, 5);

    const std::vector<Contour> contours = find_contours(linked);
    if (contours.empty()) return std::nullopt;

    const Contour* largest = nullptr;
    double best_area = 0.0;
    for (const Contour& c : contours) {
        const double a = polygon_area(c.points);
        if (a > best_area) {
            best_area = a;
            largest = &c;
        }
    }
    if (!largest || best_area <= 0.0) return std::nullopt;

    double perimeter = 0.0;
    const std::size_t n = largest->points.size();
    for (std::size_t i = 0; i < n; ++i)
        perimeter += dist(largest->points[i], largest->points[(i + 1) % n]);

    const Contour simplified = approx_poly(*largest, cfg.approx_eps_frac * perimeter);
    if (simplified.points.size() != 4) return std::nullopt;

    std::array<Point2, 4> pts{simplified.points[0], simplified.points[1],
                              simplified.points[2], simplified.points[3]};
    if (!is_convex_quad(pts)) return std::nullopt;

    Quadrilateral q = Quadrilateral::from_points(pts);
    if (q.top_len <= 0 || q.bottom_len <= 0 || q.left_len <= 0 || q.right_len <= 0)
        return std::nullopt;
    // Ordering must be consistent: a quad whose reordered corners no longer
    // form a convex cycle was mis-detected.
    if (!is_convex_quad(q.corners)) return std::nullopt;
    return q;
}

GeometryMeasure calculate_geometry(const Quadrilateral& quad) {
    GeometryMeasure g;
    const double a = std::max(quad.top_len, quad.bottom_len);
    const double b = std::min(quad.top_len, quad.bottom_len);
    g.fr = b > 0 ? a / b : 1.0;
    const double dx = quad.corners[1].x - quad.corners[0].x;
    const double dy = quad.corners[1].y - quad.corners[0].y;
    double deg = std::abs(std::atan2(dy, dx)) * 180.0 / M_PI;
    if (deg > 90.0) deg = 180.0 - deg;
    g.tilt_deg = deg;
    return g;
}

RouteDecision decide_route(const GeometryMeasure& g, double quad_area_frac,
                           double delta_max_frac, std::optional<double> blob_solidity,
                           std::optional<double> blob_area_frac, const RectifyConfig& cfg) {
    if (!(quad_area_frac > cfg.min_quad_area_frac)) return RouteDecision::PassThrough;
    if (g.fr > cfg.fr_severe || g.tilt_deg > cfg.tilt_severe) {
        return delta_max_frac <= cfg.guardrail_frac ? RouteDecision::Severe
                                                    : RouteDecision::SevereGuardrailBlocked;
    }
    if (g.fr < cfg.fr_flat && g.tilt_deg < cfg.tilt_flat) {
        const bool ok = blob_solidity && blob_area_frac &&
                        *blob_solidity > cfg.min_solidity &&
                        *blob_area_frac >= cfg.blob_area_min_frac &&
                        *blob_area_frac <= cfg.blob_area_max_frac;
        return ok ? RouteDecision::Gentle : RouteDecision::GentleRejected;
    }
    return RouteDecision::PassThrough;
}

namespace {

void maybe_dump(const std::string& dir, const char* name, const ImageBuffer& img) {
    if (!dir.empty()) write_png(dir + "/" + name + ".png", img);
}

} // namespace

RectifyOutcome rectify(const ImageBuffer& roi, const RectifyConfig& cfg,
                       const std::string& debug_dir) {
    RectifyOutcome out;
    out.image = roi;

    std::optional<Quadrilateral> quad = extract_largest_quadrilateral(roi, cfg);
    if (!quad) return out;
    out.quad = quad;

    const double roi_area = static_cast<double>(roi.width()) * roi.height();
    std::vector<Point2> corner_vec(quad->corners.begin(), quad->corners.end());
    const double quad_area_frac = polygon_area(corner_vec) / roi_area;
    if (!(quad_area_frac > cfg.min_quad_area_frac)) return out;

    const GeometryMeasure g = calculate_geometry(*quad);
    out.measure = g;

    // Route 1: severe distortion
    if (g.fr > cfg.fr_severe || g.tilt_deg > cfg.tilt_severe) {
        const int out_w = std::max(1, static_cast<int>(std::lround(std::max(quad->top_len, quad->bottom_len))));
        const int out_h = std::max(1, static_cast<int>(std::lround(std::max(quad->left_len, quad->right_len))));
        const std::array<Point2, 4> dst = {{{0, 0},
                                            {static_cast<double>(out_w - 1), 0},
                                            {static_cast<double>(out_w - 1), static_cast<double>(out_h - 1)},
                                            {0, static_cast<double>(out_h - 1)}}};
        Homography h;
        try {
            h = estimate_homography(quad->corners, dst);
        } catch (const std::exception&) {
            return out;
        }
        double delta_max = 0.0;
        for (int i = 0; i < 4; ++i)
            delta_max = std::max(delta_max, dist(quad->corners[i], h.apply(quad->corners[i])));
        if (delta_max <= cfg.guardrail_frac * roi.width()) {
            out.image = warp_perspective(roi, h, out_w, out_h);
            out.route = RectifyRoute::SevereWarp;
            out.homography = h;
            maybe_dump(debug_dir, "rectified", out.image);
        }
        return out;
    }

    // Route 2: flat plates
    if (g.fr < cfg.fr_flat && g.tilt_deg < cfg.tilt_flat) {
        const ImageBuffer denoised = denoise(roi);
        const ImageBuffer gray = denoised.channels() == 3 ? to_grayscale(denoised) : denoised;
        const ImageBuffer bin = binarize(gray, otsu_threshold(gray), /*dark_foreground=*/true);
        const ImageBuffer closed = morph_close(bin, cfg.morph_w, cfg.morph_h);
        maybe_dump(debug_dir, "text_blob", closed);

        const std::vector<Component> comps = connected_components(closed);
        const Component* blob = nullptr;
        for (const Component& c : comps)
            if (!blob || c.area > blob->area) blob = &c;
        if (!blob) return out;

        // Contour of the blob alone.
        ImageBuffer mask(closed.width(), closed.height(), 1, 0);
        for (int p : blob->pixels) mask.data()[p] = 255;
        const std::vector<Contour> blob_contours = find_contours(mask);
        if (blob_contours.empty()) return out;
        const Contour* bc = &blob_contours[0];
        for (const Contour& c : blob_contours)
            if (polygon_area(c.points) > polygon_area(bc->points)) bc = &c;

        double sol = 0.0;
        try {
            sol = solidity(*bc);
        } catch (const std::exception&) {
            return out;
        }
        const double area_frac = static_cast<double>(blob->area) / roi_area;
        if (sol > cfg.min_solidity && area_frac >= cfg.blob_area_min_frac &&
            area_frac <= cfg.blob_area_max_frac) {
            const std::array<Point2, 4> src = order_corners(min_area_rect(bc->points));
            double x0 = src[0].x, y0 = src[0].y, x1 = src[0].x, y1 = src[0].y;
            for (const Point2& p : src) {
                x0 = std::min(x0, p.x); y0 = std::min(y0, p.y);
                x1 = std::max(x1, p.x); y1 = std::max(y1, p.y);
            }
            const std::array<Point2, 4> dst = {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
            try {
                const Homography h = estimate_homography(src, dst);
                out.image = warp_perspective(denoised, h, roi.width(), roi.height());
                out.route = RectifyRoute::GentleRefine;
                out.homography = h;
                maybe_dump(debug_dir, "rectified", out.image);
            } catch (const std::exception&) {
                out.image = roi;  // degenerate rect: pass through
            }
        }
        return out;
    }

    return out;  // Route 3: moderate, pass-through
}

} // namespace blpr
