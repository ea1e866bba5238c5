#include "blpr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blpr {

Point2 Homography::apply(const Point2& p) const {
    const double w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
    return {(m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w};
}

double Homography::det() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Homography Homography::inverse() const {
    const double d = det();
    if (std::abs(d) < 1e-9) throw std::runtime_error("Homography: singular matrix");
    Homography r;
    r.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
    r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
    r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
    r.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
    r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
    r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
    r.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
    r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
    r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
    // renormalize so m[2][2] == 1
    const double s = r.m[2][2];
    if (std::abs(s) < 1e-12) throw std::runtime_error("Homography: cannot normalize inverse");
    for (auto& row : r.m)
        for (auto& v : row) v /= s;
    return r;
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool any_three_collinear(const std::array<Point2, 4>& p) {
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                if (std::abs(cross(p[i], p[j], p[k])) < 1e-9) return true;
    return false;
}

// Gaussian elimination with partial pivoting, A is n x (n+1) augmented.
void solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& x) {
    const int n = static_cast<int>(a.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            throw std::invalid_argument("estimate_homography: degenerate configuration");
        std::swap(a[col], a[pivot]);
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    x.resize(n);
    for (int i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
}

} // namespace

Homography estimate_homography(const std::array<Point2, 4>& src,
                               const std::array<Point2, 4>& dst) {
    if (any_three_collinear(src) || any_three_collinear(dst))
        throw std::invalid_argument("estimate_homography: collinear points");

    // 8 unknowns h00..h21 with h22 = 1; two equations per correspondence.
    std::vector<std::vector<double>> a(8, std::vector<double>(9, 0.0));
    for (int i = 0; i < 4; ++i) {
        const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
        a[2 * i] = {x, y, 1, 0, 0, 0, -u * x, -u * y, u};
        a[2 * i + 1] = {0, 0, 0, x, y, 1, -v * x, -v * y, v};
    }
    std::vector<double> h;
    solve_linear(a, h);

    Homography out;
    out.m = {{{h[0], h[1], h[2]}, {h[3], h[4], h[5]}, {h[6], h[7], 1.0}}};
    if (std::abs(out.det()) < 1e-9)
        throw std::invalid_argument("estimate_homography: singular result");
    return out;
}

double polygon_area(const std::vector<Point2>& pts) {
    const std::size_t n = pts.size();
    if (n < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = pts[i];
        const Point2& q = pts[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    return std::abs(s) * 0.5;
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Point2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double solidity(const Contour& c) {
    const double area = polygon_area(c.points);
    if (area <= 0.0) throw std::invalid_argument("solidity: zero-area contour");
    const double hull_area = polygon_area(convex_hull(c.points));
    if (hull_area <= 0.0) throw std::invalid_argument("solidity: degenerate hull");
    return std::min(1.0, area / hull_area);
}

bool is_convex_quad(const std::array<Point2, 4>& q) {
    int sign = 0;
    for (int i = 0; i < 4; ++i) {
        const double c = cross(q[i], q[(i + 1) % 4], q[(i + 2) % 4]);
        if (std::abs(c) < 1e-9) return false;
        const int s = c > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

std::array<Point2, 4> min_area_rect(const std::vector<Point2>& pts) {
    std::vector<Point2> hull = convex_hull(pts);
    if (hull.size() < 3) {
        // Degenerate input: fall back to the axis-aligned box.
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const Point2& p : pts) {
            x0 = std::min(x0, p.x); y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x); y1 = std::max(y1, p.y);
        }
        return {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
    }
    double best_area = 1e300;
    std::array<Point2, 4> best{};
    const std::size_t n = hull.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = hull[i];
        const Point2& b = hull[(i + 1) % n];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len < 1e-12) continue;
        const double ux = (b.x - a.x) / len, uy = (b.y - a.y) / len;  // edge direction
        double lo_u = 1e300, hi_u = -1e300, lo_v = 1e300, hi_v = -1e300;
        for (const Point2& p : hull) {
            const double pu = (p.x - a.x) * ux + (p.y - a.y) * uy;
            const double pv = -(p.x - a.x) * uy + (p.y - a.y) * ux;
            lo_u = std::min(lo_u, pu); hi_u = std::max(hi_u, pu);
            lo_v = std::min(lo_v, pv); hi_v = std::max(hi_v, pv);
        }
        const double area = (hi_u - lo_u) * (hi_v - lo_v);
        if (area < best_area) {
            best_area = area;
            auto corner = [&](double u, double v) -> Point2 {
                return {a.x + u * ux - v * uy, a.y + u * uy + v * ux};
            };
            best = {corner(lo_u, lo_v), corner(hi_u, lo_v), corner(hi_u, hi_v), corner(lo_u, hi_v)};
        }
    }
    return best;
}

std::array<Point2, 4> order_corners(std::array<Point2, 4> pts) {
    std::array<Point2, 4> out{};
    auto pick = [&](auto key, bool want_max) {
        int best = 0;
        for (int i = 1; i < 4; ++i) {
            const double d = key(pts[i]) - key(pts[best]);
            if ((want_max && d > 0) || (!want_max && d < 0)) best = i;
        }
        return pts[best];
    };
    out[0] = pick([](const Point2& p) { return p.x + p.y; }, false);  // TL
    out[2] = pick([](const Point2& p) { return p.x + p.y; }, true);   // BR
    out[1] = pick([](const Point2& p) { return p.x - p.y; }, true);   // TR
    out[3] = pick([](const Point2& p) { return p.x - p.y; }, false);  // BL
    return out;
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

} // namespace blpr
