#pragma once

#include <array>
#include <optional>
#include <vector>

#include "blpr/image.hpp"

namespace blpr {

// 3x3 projective transform, normalized so m[2][2] == 1.
struct Homography {
    std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

    static Homography identity() { return {}; }

    Point2 apply(const Point2& p) const;
    double det() const;
    Homography inverse() const;  // throws std::runtime_error if near-singular
};

// Exact 4-point DLT solution. Throws std::invalid_argument when any three
// source or destination points are collinear.
Homography estimate_homography(const std::array<Point2, 4>& src,
                               const std::array<Point2, 4>& dst);

double polygon_area(const std::vector<Point2>& pts);  // shoelace, absolute
std::vector<Point2> convex_hull(std::vector<Point2> pts);
double solidity(const Contour& c);  // area / hull area, throws on zero area
bool is_convex_quad(const std::array<Point2, 4>& q);

// Minimum-area enclosing rotated rectangle (rotating calipers over the hull).
std::array<Point2, 4> min_area_rect(const std::vector<Point2>& pts);

// TL has min(x+y), BR max(x+y), TR max(x-y), BL min(x-y).
std::array<Point2, 4> order_corners(std::array<Point2, 4> pts);

double dist(const Point2& a, const Point2& b);

} // namespace blpr
