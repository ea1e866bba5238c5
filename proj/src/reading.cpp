#include "blpr/reading.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "blpr/font.hpp"
#include "blpr/imaging.hpp"

namespace blpr {

bool is_letter(GlyphClass g) {
    return g >= GlyphClass::A && g <= GlyphClass::Z;
}
bool is_digit(GlyphClass g) {
    return g >= GlyphClass::D0 && g <= GlyphClass::D9;
}

char glyph_to_char(GlyphClass g) {
    if (is_digit(g)) return static_cast<char>('0' + static_cast<int>(g));
    if (is_letter(g)) return static_cast<char>('A' + static_cast<int>(g) - static_cast<int>(GlyphClass::A));
    throw std::invalid_argument("glyph_to_char: no character for class " + glyph_name(g));
}

GlyphClass glyph_from_char(char c) {
    if (c >= '0' && c <= '9') return static_cast<GlyphClass>(c - '0');
    if (c >= 'A' && c <= 'Z') return static_cast<GlyphClass>(static_cast<int>(GlyphClass::A) + c - 'A');
    throw std::invalid_argument(std::string("glyph_from_char: bad char '") + c + "'");
}

std::string glyph_name(GlyphClass g) {
    if (g == GlyphClass::Bolivia) return "BOLIVIA";
    if (g == GlyphClass::Underscore) return "_";
    return std::string(1, glyph_to_char(g));
}

std::vector<CharDetection> filter_ignored(const std::vector<CharDetection>& chars) {
    std::vector<CharDetection> out;
    out.reserve(chars.size());
    for (const CharDetection& c : chars)
        if (c.glyph != GlyphClass::Bolivia && c.glyph != GlyphClass::Underscore)
            out.push_back(c);
    return out;
}

namespace {

double vertical_overlap(const BBox& a, const BBox& b) {
    return std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
}

bool same_line(const CharDetection& a, const CharDetection& b, double overlap_frac) {
    const double shorter = std::min(a.box.height(), b.box.height());
    if (shorter <= 0) return false;
    return vertical_overlap(a.box, b.box) >= overlap_frac * shorter;
}

} // namespace

std::vector<std::vector<CharDetection>> group_lines(const std::vector<CharDetection>& chars,
                                                    double overlap_frac) {
    const std::size_t n = chars.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (same_line(chars[i], chars[j], overlap_frac)) parent[find(i)] = find(j);

    std::vector<std::vector<CharDetection>> lines;
    std::vector<long> root_to_line(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (root_to_line[r] < 0) {
            root_to_line[r] = static_cast<long>(lines.size());
            lines.emplace_back();
        }
        lines[root_to_line[r]].push_back(chars[i]);
    }
    for (auto& line : lines)
        std::stable_sort(line.begin(), line.end(), [](const CharDetection& a, const CharDetection& b) {
            return (a.box.x0 + a.box.x1) < (b.box.x0 + b.box.x1);
        });
    auto mean_yc = [](const std::vector<CharDetection>& line) {
        double s = 0.0;
        for (const CharDetection& c : line) s += 0.5 * (c.box.y0 + c.box.y1);
        return s / static_cast<double>(line.size());
    };
    std::stable_sort(lines.begin(), lines.end(),
                     [&](const auto& a, const auto& b) { return mean_yc(a) < mean_yc(b); });
    return lines;
}

StrippedLine strip_department_code(const std::vector<std::vector<CharDetection>>& lines,
                                   double roi_w, double roi_h, const ReadingConfig& cfg) {
    if (lines.empty()) throw std::invalid_argument("strip_department_code: no lines");
    // Main line: most characters, bottommost on ties (lines arrive sorted
    // top-to-bottom, so a later line with equal count wins).
    std::size_t main_idx = 0;
    for (std::size_t i = 1; i < lines.size(); ++i)
        if (lines[i].size() >= lines[main_idx].size()) main_idx = i;

    StrippedLine out;
    out.main_line = lines[main_idx];
    if (!out.main_line.empty()) {
        const CharDetection& last = out.main_line.back();
        const double xc = 0.5 * (last.box.x0 + last.box.x1);
        const double yc = 0.5 * (last.box.y0 + last.box.y1);
        if (is_letter(last.glyph) && xc >= (1.0 - cfg.dept_right_frac) * roi_w &&
            yc <= cfg.dept_top_frac * roi_h) {
            out.dropped = last;
            out.main_line.pop_back();
        }
    }
    return out;
}

AssembledText assemble(const std::vector<CharDetection>& chars, double roi_w, double roi_h,
                       const ReadingConfig& cfg) {
    AssembledText out;
    const std::vector<CharDetection> kept = filter_ignored(chars);
    if (kept.empty()) return out;
    const auto lines = group_lines(kept, cfg.overlap_frac);
    const StrippedLine stripped = strip_department_code(lines, roi_w, roi_h, cfg);
    if (stripped.dropped) out.dropped_department = stripped.dropped->glyph;
    if (stripped.main_line.empty()) return out;

    out.min_conf = 1.0;
    for (const CharDetection& c : stripped.main_line) {
        out.text += glyph_to_char(c.glyph);
        out.min_conf = std::min(out.min_conf, c.confidence);
        out.max_conf = std::max(out.max_conf, c.confidence);
    }
    out.count = static_cast<int>(out.text.size());
    return out;
}

bool tripwire(const AssembledText& assembled, double tau, int min_chars) {
    if (assembled.count < min_chars) return true;
    if (assembled.count > 0 && assembled.max_conf > 0.0 &&
        assembled.min_conf / assembled.max_conf < tau)
        return true;
    return false;
}

// ---------------------------------------------------------------------------
// TemplateRecognizer

namespace {

constexpr int kTplW = 20;  // font 5x7 at scale 4
constexpr int kTplH = 28;
constexpr int kBoliviaScale = 2;

// Area-average resample of a gray image into a float patch.
std::vector<float> resample(const ImageBuffer& src, int x0, int y0, int w, int h,
                            int out_w, int out_h) {
    std::vector<float> out(static_cast<std::size_t>(out_w) * out_h, 0.0f);
    const double sx = static_cast<double>(w) / out_w;
    const double sy = static_cast<double>(h) / out_h;
    for (int oy = 0; oy < out_h; ++oy) {
        const int ya = y0 + static_cast<int>(std::floor(oy * sy));
        const int yb = y0 + std::max(ya - y0 + 1, static_cast<int>(std::ceil((oy + 1) * sy)));
        for (int ox = 0; ox < out_w; ++ox) {
            const int xa = x0 + static_cast<int>(std::floor(ox * sx));
            const int xb = x0 + std::max(xa - x0 + 1, static_cast<int>(std::ceil((ox + 1) * sx)));
            double sum = 0.0;
            int cnt = 0;
            for (int y = ya; y < yb; ++y)
                for (int x = xa; x < xb; ++x) {
                    if (x < x0 || y < y0 || x >= x0 + w || y >= y0 + h) continue;
                    sum += src.at(std::clamp(x, 0, src.width() - 1),
                                  std::clamp(y, 0, src.height() - 1));
                    ++cnt;
                }
            out[static_cast<std::size_t>(oy) * out_w + ox] =
                cnt ? static_cast<float>(sum / cnt) : 0.0f;
        }
    }
    return out;
}

// Zero-mean, unit-norm in place; returns false for flat patches.
bool normalize_patch(std::vector<float>& p) {
    double mean = 0.0;
    for (float v : p) mean += v;
    mean /= static_cast<double>(p.size());
    double norm = 0.0;
    for (float& v : p) {
        v -= static_cast<float>(mean);
        norm += static_cast<double>(v) * v;
    }
    if (norm < 1e-6) return false;
    const float inv = static_cast<float>(1.0 / std::sqrt(norm));
    for (float& v : p) v *= inv;
    return true;
}

double ncc(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

} // namespace

TemplateRecognizer::TemplateRecognizer() {
    for (int i = 0; i < 36; ++i) {
        const char c = i < 10 ? static_cast<char>('0' + i) : static_cast<char>('A' + i - 10);
        const ImageBuffer mask = font::render_glyph_mask(c, 4);
        // Components are extracted with tight bounding boxes, so templates
        // must be cropped the same way or narrow glyphs (I, 1) stretch
        // relative to their template and mismatch.
        int tx0 = mask.width(), ty0 = mask.height(), tx1 = -1, ty1 = -1;
        for (int y = 0; y < mask.height(); ++y)
            for (int x = 0; x < mask.width(); ++x)
                if (mask.at(x, y)) {
                    tx0 = std::min(tx0, x); tx1 = std::max(tx1, x);
                    ty0 = std::min(ty0, y); ty1 = std::max(ty1, y);
                }
        if (tx1 < tx0) continue;
        std::vector<float> pat =
            resample(mask, tx0, ty0, tx1 - tx0 + 1, ty1 - ty0 + 1, kTplW, kTplH);
        if (!normalize_patch(pat)) continue;
        glyph_templates_.push_back({i < 10 ? static_cast<GlyphClass>(i) : glyph_from_char(c),
                                    std::move(pat)});
    }
    const ImageBuffer bol = font::render_text_mask("BOLIVIA", kBoliviaScale);
    bolivia_w_ = bol.width();
    bolivia_h_ = bol.height();
    bolivia_template_ = resample(bol, 0, 0, bol.width(), bol.height(), bolivia_w_, bolivia_h_);
    normalize_patch(bolivia_template_);
}

std::vector<CharDetection> TemplateRecognizer::recognize(const ImageBuffer& roi) {
    std::vector<CharDetection> out;
    if (roi.width() < 8 || roi.height() < 8) return out;
    const ImageBuffer gray = roi.channels() == 3 ? to_grayscale(roi) : roi;
    const ImageBuffer bin = binarize(gray, otsu_threshold(gray), /*dark_foreground=*/true);

    const double roi_h = roi.height();
    std::vector<Component> comps = connected_components(bin);

    // Mask-backed NCC classification of glyph-sized components.
    std::vector<const Component*> small;  // BOLIVIA-letter sized leftovers
    for (const Component& comp : comps) {
        const double h_frac = comp.height() / roi_h;
        if (h_frac >= 0.3 && h_frac <= 0.95 && comp.width() <= 2 * comp.height()) {
            ImageBuffer mask(comp.width(), comp.height(), 1, 0);
            for (int p : comp.pixels) {
                const int x = p % bin.width(), y = p / bin.width();
                mask.at(x - comp.x0, y - comp.y0) = 255;
            }
            std::vector<float> pat = resample(mask, 0, 0, mask.width(), mask.height(), kTplW, kTplH);
            if (!normalize_patch(pat)) continue;
            GlyphClass best_glyph = GlyphClass::Underscore;
            double best = -2.0;
            for (const Template& t : glyph_templates_) {
                const double s = ncc(pat, t.pattern);
                if (s > best) {
                    best = s;
                    best_glyph = t.glyph;
                }
            }
            if (best_glyph == GlyphClass::Underscore) continue;
            CharDetection det;
            det.glyph = best_glyph;
            det.box = {static_cast<double>(comp.x0), static_cast<double>(comp.y0),
                       static_cast<double>(comp.x1 + 1), static_cast<double>(comp.y1 + 1)};
            det.confidence = std::clamp(best, 0.0, 1.0);
            out.push_back(det);
        } else if (h_frac >= 0.04 && h_frac < 0.3) {
            small.push_back(&comp);
        }
    }

    // Wide, low clusters of small components: match against the plate-header
    // word and emit it as its own class so assembly can filter it.
    if (!small.empty() && !bolivia_template_.empty()) {
        std::sort(small.begin(), small.end(),
                  [](const Component* a, const Component* b) { return a->x0 < b->x0; });
        std::vector<char> used(small.size(), 0);
        for (std::size_t i = 0; i < small.size(); ++i) {
            if (used[i]) continue;
            int x0 = small[i]->x0, x1 = small[i]->x1, y0 = small[i]->y0, y1 = small[i]->y1;
            used[i] = 1;
            bool grew = true;
            while (grew) {
                grew = false;
                for (std::size_t j = 0; j < small.size(); ++j) {
                    if (used[j]) continue;
                    const int hgt = std::max(y1 - y0 + 1, small[j]->height());
                    const bool v_ok = small[j]->y0 <= y1 && small[j]->y1 >= y0;
                    const bool h_ok = small[j]->x0 <= x1 + 2 * hgt && small[j]->x1 >= x0 - 2 * hgt;
                    if (v_ok && h_ok) {
                        x0 = std::min(x0, small[j]->x0); x1 = std::max(x1, small[j]->x1);
                        y0 = std::min(y0, small[j]->y0); y1 = std::max(y1, small[j]->y1);
                        used[j] = 1;
                        grew = true;
                    }
                }
            }
            const int cw = x1 - x0 + 1, chh = y1 - y0 + 1;
            if (cw < 3 * chh) continue;
            std::vector<float> pat = resample(bin, x0, y0, cw, chh, bolivia_w_, bolivia_h_);
            if (!normalize_patch(pat)) continue;
            if (ncc(pat, bolivia_template_) > 0.5) {
                CharDetection det;
                det.glyph = GlyphClass::Bolivia;
                det.box = {static_cast<double>(x0), static_cast<double>(y0),
                           static_cast<double>(x1 + 1), static_cast<double>(y1 + 1)};
                det.confidence = 0.9;
                out.push_back(det);
            }
        }
    }
    return out;
}

} // namespace blpr
