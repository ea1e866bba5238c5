#include "blpr/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <deque>
#include <stdexcept>

#include "blpr/kernels.hpp"

namespace blpr {

ImageBuffer to_grayscale(const ImageBuffer& img) {
    if (img.channels() != 3) throw std::invalid_argument("to_grayscale: expected 3 channels");
    ImageBuffer out(img.width(), img.height(), 1);
    kernels::luma_u8(img.data(), out.data(), static_cast<std::size_t>(img.width()) * img.height());
    return out;
}

// ---------------------------------------------------------------------------
// CLAHE

namespace {

// Histogram -> clipped, excess redistributed -> mapping LUT.
std::array<std::uint8_t, 256> equalize_mapping(std::array<std::uint32_t, 256> hist,
                                               std::uint32_t total, double clip) {
    if (total == 0) {
        std::array<std::uint8_t, 256> id{};
        for (int i = 0; i < 256; ++i) id[i] = static_cast<std::uint8_t>(i);
        return id;
    }
    const double avg = static_cast<double>(total) / 256.0;
    const std::uint32_t limit = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(clip * avg));
    std::uint64_t excess = 0;
    for (auto& h : hist) {
        if (h > limit) {
            excess += h - limit;
            h = limit;
        }
    }
    const std::uint32_t per_bin = static_cast<std::uint32_t>(excess / 256);
    std::uint32_t rem = static_cast<std::uint32_t>(excess % 256);
    for (int i = 0; i < 256; ++i) {
        hist[i] += per_bin + (static_cast<std::uint32_t>(i) < rem ? 1 : 0);
    }
    std::array<std::uint8_t, 256> lut{};
    std::uint64_t cdf = 0;
    for (int i = 0; i < 256; ++i) {
        cdf += hist[i];
        lut[i] = static_cast<std::uint8_t>(
            std::clamp(std::lround(static_cast<double>(cdf) * 255.0 / total), 0l, 255l));
    }
    return lut;
}

} // namespace

ImageBuffer global_equalize(const ImageBuffer& gray, double clip) {
    std::array<std::uint32_t, 256> hist{};
    const std::size_t n = gray.size();
    for (std::size_t i = 0; i < n; ++i) ++hist[gray.data()[i]];
    const auto lut = equalize_mapping(hist, static_cast<std::uint32_t>(n), clip);
    ImageBuffer out(gray.width(), gray.height(), 1);
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = lut[gray.data()[i]];
    return out;
}

ImageBuffer clahe(const ImageBuffer& gray, int tiles, double clip) {
    if (gray.channels() != 1) throw std::invalid_argument("clahe: expected 1 channel");
    if (tiles < 1 || clip <= 0.0) throw std::invalid_argument("clahe: bad parameters");
    const int w = gray.width(), h = gray.height();
    const int tw = w / tiles, th = h / tiles;
    if (tw < 2 || th < 2) return global_equalize(gray, clip);

    // Per-tile mappings (last tile row/col absorbs the remainder).
    std::vector<std::array<std::uint8_t, 256>> luts(static_cast<std::size_t>(tiles) * tiles);
    std::vector<double> cx(tiles), cy(tiles);  // tile centers
    for (int ty = 0; ty < tiles; ++ty) {
        const int y0 = ty * th;
        const int y1 = (ty == tiles - 1) ? h : y0 + th;
        for (int tx = 0; tx < tiles; ++tx) {
            const int x0 = tx * tw;
            const int x1 = (tx == tiles - 1) ? w : x0 + tw;
            std::array<std::uint32_t, 256> hist{};
            for (int y = y0; y < y1; ++y) {
                const std::uint8_t* row = gray.row(y);
                for (int x = x0; x < x1; ++x) ++hist[row[x]];
            }
            luts[static_cast<std::size_t>(ty) * tiles + tx] =
                equalize_mapping(hist, static_cast<std::uint32_t>((x1 - x0) * (y1 - y0)), clip);
            cx[tx] = 0.5 * (x0 + x1 - 1);
            cy[ty] = 0.5 * (y0 + y1 - 1);
        }
    }

    ImageBuffer out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        int ty0 = 0;
        while (ty0 + 1 < tiles && cy[ty0 + 1] <= y) ++ty0;
        int ty1 = std::min(ty0 + 1, tiles - 1);
        if (y < cy[0]) ty1 = 0;
        const double fy = (ty1 == ty0) ? 0.0 : std::clamp((y - cy[ty0]) / (cy[ty1] - cy[ty0]), 0.0, 1.0);
        const std::uint8_t* src = gray.row(y);
        std::uint8_t* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            int tx0 = 0;
            while (tx0 + 1 < tiles && cx[tx0 + 1] <= x) ++tx0;
            int tx1 = std::min(tx0 + 1, tiles - 1);
            if (x < cx[0]) tx1 = 0;
            const double fx = (tx1 == tx0) ? 0.0 : std::clamp((x - cx[tx0]) / (cx[tx1] - cx[tx0]), 0.0, 1.0);
            const std::uint8_t v = src[x];
            const double v00 = luts[static_cast<std::size_t>(ty0) * tiles + tx0][v];
            const double v01 = luts[static_cast<std::size_t>(ty0) * tiles + tx1][v];
            const double v10 = luts[static_cast<std::size_t>(ty1) * tiles + tx0][v];
            const double v11 = luts[static_cast<std::size_t>(ty1) * tiles + tx1][v];
            const double top = v00 + fx * (v01 - v00);
            const double bot = v10 + fx * (v11 - v10);
            dst[x] = static_cast<std::uint8_t>(std::lround(top + fy * (bot - top)));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canny

namespace {

std::vector<float> gaussian5x5(const ImageBuffer& gray) {
    // sigma = 1.4
    static const std::array<double, 5> k1 = [] {
        std::array<double, 5> k{};
        double s = 0.0;
        for (int i = -2; i <= 2; ++i) {
            k[i + 2] = std::exp(-(i * i) / (2.0 * 1.4 * 1.4));
            s += k[i + 2];
        }
        for (auto& v : k) v /= s;
        return k;
    }();
    const int w = gray.width(), h = gray.height();
    std::vector<float> tmp(static_cast<std::size_t>(w) * h), out(tmp.size());
    auto clampx = [&](int x) { return std::clamp(x, 0, w - 1); };
    auto clampy = [&](int y) { return std::clamp(y, 0, h - 1); };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -2; i <= 2; ++i) s += k1[i + 2] * gray.at(clampx(x + i), y);
            tmp[static_cast<std::size_t>(y) * w + x] = static_cast<float>(s);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -2; i <= 2; ++i) s += k1[i + 2] * tmp[static_cast<std::size_t>(clampy(y + i)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(s);
        }
    return out;
}

} // namespace

ImageBuffer canny(const ImageBuffer& gray, int low, int high) {
    if (gray.channels() != 1) throw std::invalid_argument("canny: expected 1 channel");
    if (!(0 < low && low < high && high <= 255)) throw std::invalid_argument("canny: bad thresholds");
    const int w = gray.width(), h = gray.height();
    const std::vector<float> sm = gaussian5x5(gray);
    auto s = [&](int x, int y) {
        return sm[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    };

    std::vector<float> mag(static_cast<std::size_t>(w) * h, 0.0f);
    std::vector<std::uint8_t> dir(mag.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float gx = (s(x + 1, y - 1) + 2 * s(x + 1, y) + s(x + 1, y + 1)) -
                             (s(x - 1, y - 1) + 2 * s(x - 1, y) + s(x - 1, y + 1));
            const float gy = (s(x - 1, y + 1) + 2 * s(x, y + 1) + s(x + 1, y + 1)) -
                             (s(x - 1, y - 1) + 2 * s(x, y - 1) + s(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            mag[i] = std::hypot(gx, gy);
            const double a = std::atan2(gy, gx) * 180.0 / M_PI;  // [-180, 180]
            double aa = a < 0 ? a + 180.0 : a;
            if (aa >= 157.5) aa -= 180.0;
            if (aa < 22.5) dir[i] = 0;        // horizontal gradient -> vertical edge
            else if (aa < 67.5) dir[i] = 1;   // 45
            else if (aa < 112.5) dir[i] = 2;  // vertical gradient
            else dir[i] = 3;                  // 135
        }

    auto m = [&](int x, int y) -> float {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0.0f;
        return mag[static_cast<std::size_t>(y) * w + x];
    };

    // 0 = candidate strong, 1 = weak, 2 = suppressed
    ImageBuffer out(w, h, 1, 0);
    std::vector<std::uint8_t> weak(mag.size(), 0);
    std::deque<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const float v = mag[i];
            if (v < low) continue;
            float n1, n2;
            switch (dir[i]) {
                case 0: n1 = m(x - 1, y); n2 = m(x + 1, y); break;
                case 1: n1 = m(x + 1, y - 1); n2 = m(x - 1, y + 1); break;
                case 2: n1 = m(x, y - 1); n2 = m(x, y + 1); break;
                default: n1 = m(x - 1, y - 1); n2 = m(x + 1, y + 1); break;
            }
            if (!(v >= n1 && v > n2)) continue;  // >= then > keeps ridges single-pixel
            if (v >= high) {
                out.at(x, y) = 255;
                stack.emplace_back(x, y);
            } else {
                weak[i] = 1;
            }
        }

    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                const std::size_t i = static_cast<std::size_t>(ny) * w + nx;
                if (weak[i] && !out.at(nx, ny)) {
                    out.at(nx, ny) = 255;
                    stack.emplace_back(nx, ny);
                }
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Contours and components

std::vector<Component> connected_components(const ImageBuffer& binary) {
    const int w = binary.width(), h = binary.height();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
    std::vector<Component> comps;
    std::vector<int> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int idx = y * w + x;
            if (!binary.data()[idx] || seen[idx]) continue;
            Component c;
            c.x0 = c.x1 = x;
            c.y0 = c.y1 = y;
            stack.push_back(idx);
            seen[idx] = 1;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cx0 = cur % w, cy0 = cur / w;
                c.pixels.push_back(cur);
                ++c.area;
                c.x0 = std::min(c.x0, cx0); c.x1 = std::max(c.x1, cx0);
                c.y0 = std::min(c.y0, cy0); c.y1 = std::max(c.y1, cy0);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx0 + dx, ny = cy0 + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        const int ni = ny * w + nx;
                        if (binary.data()[ni] && !seen[ni]) {
                            seen[ni] = 1;
                            stack.push_back(ni);
                        }
                    }
            }
            comps.push_back(std::move(c));
        }
    return comps;
}

namespace {

// Moore-neighbor tracing, clockwise, of the component containing (sx, sy).
std::vector<Point2> trace_boundary(const ImageBuffer& binary, int sx, int sy) {
    static const int dx8[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int dy8[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    const int w = binary.width(), h = binary.height();
    auto fg = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && binary.at(x, y) != 0;
    };
    std::vector<Point2> pts;
    int cx = sx, cy = sy;
    int backtrack = 6;  // came from above (start pixel is topmost-leftmost)
    const int start_x = sx, start_y = sy;
    int start_dir = -1;
    for (std::size_t guard = 0; guard < static_cast<std::size_t>(w) * h * 4 + 8; ++guard) {
        pts.push_back({static_cast<double>(cx), static_cast<double>(cy)});
        int d = (backtrack + 2) % 8;  // first candidate clockwise after backtrack
        int found = -1;
        for (int k = 0; k < 8; ++k) {
            const int dd = (d + k) % 8;
            if (fg(cx + dx8[dd], cy + dy8[dd])) {
                found = dd;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        if (cx == start_x && cy == start_y) {
            if (start_dir < 0) start_dir = found;
            else if (found == start_dir && pts.size() > 1) {
                pts.pop_back();
                break;
            }
        }
        cx += dx8[found];
        cy += dy8[found];
        backtrack = (found + 4) % 8;
    }
    // Remove the duplicated closing point if present.
    while (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
    return pts;
}

} // namespace

std::vector<Contour> find_contours(const ImageBuffer& binary) {
    if (binary.channels() != 1) throw std::invalid_argument("find_contours: expected 1 channel");
    std::vector<Contour> out;
    for (const Component& c : connected_components(binary)) {
        // topmost-leftmost pixel of the component
        int best = c.pixels.front();
        const int w = binary.width();
        for (int p : c.pixels) {
            if (p / w < best / w || (p / w == best / w && p % w < best % w)) best = p;
        }
        std::vector<Point2> pts = trace_boundary(binary, best % w, best / w);
        if (pts.size() >= 3) out.push_back(Contour{std::move(pts)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Douglas-Peucker

namespace {

double point_segment_dist(const Point2& p, const Point2& a, const Point2& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    if (len2 < 1e-12) return std::hypot(p.x - a.x, p.y - a.y);
    const double t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

void dp_simplify(const std::vector<Point2>& pts, std::size_t lo, std::size_t hi,
                 double eps, std::vector<char>& keep) {
    if (hi <= lo + 1) return;
    double worst = -1.0;
    std::size_t worst_i = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const double d = point_segment_dist(pts[i], pts[lo], pts[hi]);
        if (d > worst) {
            worst = d;
            worst_i = i;
        }
    }
    if (worst > eps) {
        keep[worst_i] = 1;
        dp_simplify(pts, lo, worst_i, eps, keep);
        dp_simplify(pts, worst_i, hi, eps, keep);
    }
}

} // namespace

Contour approx_poly(const Contour& contour, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("approx_poly: epsilon must be positive");
    const std::vector<Point2>& pts = contour.points;
    const std::size_t n = pts.size();
    if (n <= 3) return contour;

    // Closed curve: anchor at the two mutually farthest-ish points.
    std::size_t a = 0;
    double best = -1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = dist(pts[0], pts[i]);
        if (d > best) { best = d; a = i; }
    }
    std::size_t b = 0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = dist(pts[a], pts[i]);
        if (d > best) { best = d; b = i; }
    }
    if (a > b) std::swap(a, b);

    // Rotate so the curve starts at `a`; the two chains are [0..b'] and [b'..n].
    std::vector<Point2> rot(n + 1);
    for (std::size_t i = 0; i < n; ++i) rot[i] = pts[(a + i) % n];
    rot[n] = pts[a];
    const std::size_t mid = b - a;

    std::vector<char> keep(n + 1, 0);
    keep[0] = keep[mid] = keep[n] = 1;
    dp_simplify(rot, 0, mid, epsilon, keep);
    dp_simplify(rot, mid, n, epsilon, keep);

    Contour out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.points.push_back(rot[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Morphology

namespace {

ImageBuffer morph_rect(const ImageBuffer& in, int kw, int kh, bool dilate) {
    if (kw < 1 || kh < 1 || kw % 2 == 0 || kh % 2 == 0)
        throw std::invalid_argument("morphology: kernel dims must be odd and >= 1");
    const int w = in.width(), h = in.height();
    const int rx = kw / 2, ry = kh / 2;
    ImageBuffer tmp(w, h, 1), out(w, h, 1);
    // horizontal pass
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = in.row(y);
        std::uint8_t* trow = tmp.row(y);
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = dilate ? 0 : 255;
            for (int i = std::max(0, x - rx); i <= std::min(w - 1, x + rx); ++i)
                v = dilate ? std::max(v, row[i]) : std::min(v, row[i]);
            trow[x] = v;
        }
    }
    // vertical pass
    for (int y = 0; y < h; ++y) {
        std::uint8_t* orow = out.row(y);
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = dilate ? 0 : 255;
            for (int j = std::max(0, y - ry); j <= std::min(h - 1, y + ry); ++j)
                v = dilate ? std::max(v, tmp.at(x, j)) : std::min(v, tmp.at(x, j));
            orow[x] = v;
        }
    }
    return out;
}

} // namespace

ImageBuffer morph_dilate(const ImageBuffer& binary, int kw, int kh) {
    return morph_rect(binary, kw, kh, true);
}
ImageBuffer morph_erode(const ImageBuffer& binary, int kw, int kh) {
    return morph_rect(binary, kw, kh, false);
}
ImageBuffer morph_close(const ImageBuffer& binary, int kw, int kh) {
    return morph_erode(morph_dilate(binary, kw, kh), kw, kh);
}

// ---------------------------------------------------------------------------
// Non-local means

namespace {

constexpr int kPatchRadius = 3;   // 7x7
constexpr int kWindowRadius = 10; // 21x21
constexpr double kFilterH = 10.0;

ImageBuffer pad_replicate(const ImageBuffer& gray, int pad) {
    const int w = gray.width(), h = gray.height();
    ImageBuffer out(w + 2 * pad, h + 2 * pad, 1);
    for (int y = 0; y < out.height(); ++y) {
        const int sy = std::clamp(y - pad, 0, h - 1);
        std::uint8_t* dst = out.row(y);
        const std::uint8_t* src = gray.row(sy);
        for (int x = 0; x < out.width(); ++x) dst[x] = src[std::clamp(x - pad, 0, w - 1)];
    }
    return out;
}

ImageBuffer nlm_channel(const ImageBuffer& gray) {
    const int w = gray.width(), h = gray.height();
    const int pad = kPatchRadius + kWindowRadius;
    const ImageBuffer p = pad_replicate(gray, pad);
    const int pw = p.width(), ph = p.height();

    // exp weight LUT over quantized patch SSD
    constexpr int kLutBits = 4;
    static const std::vector<float> lut = [] {
        const double denom = kFilterH * kFilterH * (2 * kPatchRadius + 1) * (2 * kPatchRadius + 1);
        std::vector<float> t(1 << 16);
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = static_cast<float>(std::exp(-static_cast<double>(i << kLutBits) / denom));
        return t;
    }();

    std::vector<double> wsum(static_cast<std::size_t>(w) * h, 0.0);
    std::vector<double> vsum(wsum.size(), 0.0);
    std::vector<std::uint16_t> d2(static_cast<std::size_t>(pw) * ph);
    std::vector<std::uint64_t> integ(static_cast<std::size_t>(pw + 1) * (ph + 1), 0);

    for (int dy = -kWindowRadius; dy <= kWindowRadius; ++dy) {
        for (int dx = -kWindowRadius; dx <= kWindowRadius; ++dx) {
            // squared difference between image and its (dx,dy)-shifted copy,
            // valid over the region where both stay inside the padded frame
            const int x0 = std::max(0, -dx), x1 = std::min(pw, pw - dx);
            const int y0 = std::max(0, -dy), y1 = std::min(ph, ph - dy);
            for (int y = y0; y < y1; ++y) {
                kernels::diff_sq_u8(p.row(y) + x0, p.row(y + dy) + x0 + dx,
                                    d2.data() + static_cast<std::size_t>(y) * pw + x0,
                                    static_cast<std::size_t>(x1 - x0));
            }
            // integral image over the valid region (shifted to origin)
            const int vw = x1 - x0, vh = y1 - y0;
            for (int y = 0; y < vh; ++y) {
                std::uint64_t rowsum = 0;
                const std::uint16_t* src = d2.data() + static_cast<std::size_t>(y + y0) * pw + x0;
                std::uint64_t* cur = integ.data() + static_cast<std::size_t>(y + 1) * (pw + 1) + 1;
                const std::uint64_t* prev = integ.data() + static_cast<std::size_t>(y) * (pw + 1) + 1;
                for (int x = 0; x < vw; ++x) {
                    rowsum += src[x];
                    cur[x] = prev[x] + rowsum;
                }
            }
            auto box = [&](int x, int y) {  // patch SSD centered at valid-region coords
                const int a = x - kPatchRadius, b = y - kPatchRadius;
                const int c = x + kPatchRadius + 1, d = y + kPatchRadius + 1;
                const std::size_t stride = pw + 1;
                return integ[static_cast<std::size_t>(d) * stride + c] -
                       integ[static_cast<std::size_t>(b) * stride + c] -
                       integ[static_cast<std::size_t>(d) * stride + a] +
                       integ[static_cast<std::size_t>(b) * stride + a];
            };
            // Accumulate for every output pixel whose patch and neighbor patch
            // fit the valid region; padding guarantees they always do.
            for (int y = 0; y < h; ++y) {
                const int py = y + pad;  // center in padded coords
                const int vy = py - y0;
                const std::uint8_t* nrow = p.row(py + dy);
                double* ws = wsum.data() + static_cast<std::size_t>(y) * w;
                double* vs = vsum.data() + static_cast<std::size_t>(y) * w;
                for (int x = 0; x < w; ++x) {
                    const int px = x + pad;
                    const std::uint64_t ssd = box(px - x0, vy);
                    const float wgt = lut[std::min<std::uint64_t>(ssd >> kLutBits, lut.size() - 1)];
                    ws[x] += wgt;
                    vs[x] += wgt * nrow[px + dx];
                }
            }
        }
    }

    ImageBuffer out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        std::uint8_t* dst = out.row(y);
        const double* ws = wsum.data() + static_cast<std::size_t>(y) * w;
        const double* vs = vsum.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            dst[x] = static_cast<std::uint8_t>(std::clamp(std::lround(vs[x] / ws[x]), 0l, 255l));
    }
    return out;
}

} // namespace

ImageBuffer denoise(const ImageBuffer& img) {
    if (img.channels() == 1) return nlm_channel(img);
    // Per-channel NLM on the deinterleaved planes.
    const int w = img.width(), h = img.height();
    ImageBuffer out(w, h, 3);
    for (int c = 0; c < 3; ++c) {
        ImageBuffer plane(w, h, 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) plane.at(x, y) = img.at(x, y, c);
        const ImageBuffer f = nlm_channel(plane);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(x, y, c) = f.at(x, y);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Warping

ImageBuffer warp_perspective(const ImageBuffer& img, const Homography& h,
                             int out_w, int out_h) {
    const Homography inv = h.inverse();
    ImageBuffer out(out_w, out_h, img.channels(), 0);
    const int w = img.width(), hh = img.height(), ch = img.channels();
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const Point2 s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
            const int x0 = static_cast<int>(std::floor(s.x));
            const int y0 = static_cast<int>(std::floor(s.y));
            if (x0 < -1 || x0 > w - 1 || y0 < -1 || y0 > hh - 1) continue;
            const double fx = s.x - x0, fy = s.y - y0;
            auto sample = [&](int sx, int sy, int c) -> double {
                if (sx < 0 || sx >= w || sy < 0 || sy >= hh) return 0.0;
                return img.at(sx, sy, c);
            };
            for (int c = 0; c < ch; ++c) {
                const double v = (1 - fx) * (1 - fy) * sample(x0, y0, c) +
                                 fx * (1 - fy) * sample(x0 + 1, y0, c) +
                                 (1 - fx) * fy * sample(x0, y0 + 1, c) +
                                 fx * fy * sample(x0 + 1, y0 + 1, c);
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// HSV value channel

ValueStats rgb_to_hsv_value_stats(const ImageBuffer& img) {
    if (img.channels() != 3) throw std::invalid_argument("rgb_to_hsv_value_stats: expected 3 channels");
    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    std::vector<std::uint8_t> v(n);
    const std::uint8_t* p = img.data();
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::max({p[3 * i], p[3 * i + 1], p[3 * i + 2]});
    const double mean = static_cast<double>(kernels::sum_u8(v.data(), n)) / n;
    const double msq = static_cast<double>(kernels::sum_sq_u8(v.data(), n)) / n;
    return {mean, std::sqrt(std::max(0.0, msq - mean * mean))};
}

ImageBuffer apply_gamma_to_value(const ImageBuffer& img, double gamma) {
    if (img.channels() != 3) throw std::invalid_argument("apply_gamma_to_value: expected 3 channels");
    if (gamma <= 0.0) throw std::invalid_argument("apply_gamma_to_value: gamma must be positive");
    std::array<double, 256> target{};
    for (int v = 0; v < 256; ++v)
        target[v] = 255.0 * std::pow(v / 255.0, gamma);
    ImageBuffer out(img.width(), img.height(), 3);
    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    const std::uint8_t* src = img.data();
    std::uint8_t* dst = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
        const std::uint8_t v = std::max({r, g, b});
        if (v == 0) {
            dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = 0;
            continue;
        }
        // Scaling all channels by V'/V leaves hue and saturation intact.
        const double scale = target[v] / v;
        for (int c = 0; c < 3; ++c)
            dst[3 * i + c] = static_cast<std::uint8_t>(
                std::clamp(std::lround(src[3 * i + c] * scale), 0l, 255l));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Thresholding

int otsu_threshold(const ImageBuffer& gray) {
    std::array<std::uint64_t, 256> hist{};
    const std::size_t n = gray.size();
    for (std::size_t i = 0; i < n; ++i) ++hist[gray.data()[i]];
    double total_mean = 0.0;
    for (int i = 0; i < 256; ++i) total_mean += static_cast<double>(i) * hist[i];
    total_mean /= static_cast<double>(n);

    double best_var = -1.0;
    int best_t = 127;
    double w0 = 0.0, sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[t];
        sum0 += static_cast<double>(t) * hist[t];
        const double w1 = static_cast<double>(n) - w0;
        if (w0 == 0 || w1 == 0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (total_mean * n - sum0) / w1;
        const double var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}

ImageBuffer binarize(const ImageBuffer& gray, int thresh, bool dark_foreground) {
    ImageBuffer out(gray.width(), gray.height(), 1);
    const std::size_t n = gray.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool fg = dark_foreground ? gray.data()[i] <= thresh : gray.data()[i] > thresh;
        out.data()[i] = fg ? 255 : 0;
    }
    return out;
}

} // namespace blpr
