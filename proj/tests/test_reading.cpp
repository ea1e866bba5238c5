#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "blpr/font.hpp"
#include "blpr/reading.hpp"
#include "blpr/synth.hpp"

using namespace blpr;

namespace {

CharDetection cd(char c, double x0, double y0, double x1, double y1, double conf = 0.9) {
    CharDetection d;
    d.glyph = glyph_from_char(c);
    d.box = {x0, y0, x1, y1};
    d.confidence = conf;
    return d;
}

// Independent O(n^2) oracle: explicit overlap graph + BFS components,
// then sort lines by mean y-center and characters by x-center.
std::vector<std::vector<CharDetection>> oracle_lines(const std::vector<CharDetection>& chars,
                                                     double overlap_frac) {
    const std::size_t n = chars.size();
    std::vector<std::vector<int>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& a = chars[i].box;
            const auto& b = chars[j].box;
            const double ov = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
            const double shorter = std::min(a.height(), b.height());
            if (ov >= overlap_frac * shorter) adj[i].push_back(static_cast<int>(j));
        }
    std::vector<int> comp(n, -1);
    int nc = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] != -1) continue;
        std::vector<int> stack{static_cast<int>(s)};
        comp[s] = nc;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (comp[v] == -1) {
                    comp[v] = nc;
                    stack.push_back(v);
                }
        }
        ++nc;
    }
    std::vector<std::vector<CharDetection>> lines(nc);
    for (std::size_t i = 0; i < n; ++i) lines[comp[i]].push_back(chars[i]);
    for (auto& line : lines)
        std::sort(line.begin(), line.end(), [](const CharDetection& a, const CharDetection& b) {
            return a.box.x0 + a.box.x1 < b.box.x0 + b.box.x1;
        });
    std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) {
        auto mean_y = [](const std::vector<CharDetection>& l) {
            double s = 0;
            for (const auto& c : l) s += (c.box.y0 + c.box.y1) / 2;
            return s / l.size();
        };
        return mean_y(a) < mean_y(b);
    });
    return lines;
}

std::string lines_text(const std::vector<std::vector<CharDetection>>& lines) {
    std::string out;
    for (const auto& l : lines) {
        for (const auto& c : l) out += glyph_to_char(c.glyph);
        out += '|';
    }
    return out;
}

} // namespace

TEST_CASE("glyph class round-trips through char conversion") {
    for (char c = '0'; c <= '9'; ++c) CHECK(glyph_to_char(glyph_from_char(c)) == c);
    for (char c = 'A'; c <= 'Z'; ++c) CHECK(glyph_to_char(glyph_from_char(c)) == c);
    CHECK(is_digit(GlyphClass::D7));
    CHECK(is_letter(GlyphClass::Q));
    CHECK_THROWS(glyph_to_char(GlyphClass::Bolivia));
}

TEST_CASE("filter drops BOLIVIA and underscore classes") {
    std::vector<CharDetection> chars = {cd('1', 0, 0, 10, 20)};
    CharDetection bol;
    bol.glyph = GlyphClass::Bolivia;
    bol.box = {0, 0, 60, 8};
    CharDetection und;
    und.glyph = GlyphClass::Underscore;
    und.box = {20, 0, 30, 20};
    chars.push_back(bol);
    chars.push_back(und);
    const auto kept = filter_ignored(chars);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].glyph == GlyphClass::D1);
}

TEST_CASE("overlap exactly at 50% of the shorter box is inclusive") {
    // boxes of height 20 and 10; overlap 5 = 0.5 * 10
    const auto one_line = group_lines({cd('A', 0, 0, 10, 20), cd('B', 20, 15, 30, 25)}, 0.5);
    CHECK(one_line.size() == 1);
    // overlap 4.9 < 5 -> two lines
    const auto two_lines =
        group_lines({cd('A', 0, 0, 10, 20), cd('B', 20, 15.1, 30, 25.1)}, 0.5);
    CHECK(two_lines.size() == 2);
}

TEST_CASE("group_lines matches the O(n^2) oracle on 1000 random layouts") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(0.0, 200.0);
    std::uniform_real_distribution<double> uy(0.0, 80.0);
    std::uniform_real_distribution<double> uh(8.0, 30.0);
    std::uniform_int_distribution<int> count(1, 8);
    std::uniform_int_distribution<int> glyph(0, 35);
    const std::string alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    for (int t = 0; t < 1000; ++t) {
        std::vector<CharDetection> chars;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            const double x = ux(rng), y = uy(rng), h = uh(rng);
            chars.push_back(cd(alphabet[glyph(rng)], x, y, x + h * 0.6, y + h));
        }
        CHECK(lines_text(group_lines(chars, 0.5)) == lines_text(oracle_lines(chars, 0.5)));
    }
}

TEST_CASE("assemble is permutation-invariant") {
    std::mt19937_64 rng(17);
    std::vector<CharDetection> chars = {
        cd('1', 10, 40, 30, 90),  cd('2', 40, 42, 60, 92), cd('3', 70, 41, 90, 91),
        cd('4', 100, 40, 120, 90), cd('A', 130, 43, 150, 93), cd('B', 160, 40, 180, 90),
        cd('C', 190, 41, 210, 91), cd('L', 370, 5, 390, 45),  // department, top-right
    };
    const AssembledText base = assemble(chars, 400, 130);
    for (int t = 0; t < 50; ++t) {
        std::shuffle(chars.begin(), chars.end(), rng);
        const AssembledText got = assemble(chars, 400, 130);
        CHECK(got.text == base.text);
        CHECK(got.count == base.count);
        CHECK(got.min_conf == base.min_conf);
        CHECK(got.max_conf == base.max_conf);
    }
    // the department letter sits in its own line and never reaches the output
    CHECK(base.text == "1234ABC");
}

TEST_CASE("department letter outside the corner zone is kept") {
    // same layout but the trailing letter sits in the main line
    std::vector<CharDetection> chars = {
        cd('1', 10, 40, 30, 90), cd('2', 40, 40, 60, 90), cd('3', 70, 40, 90, 90),
        cd('A', 100, 40, 120, 90), cd('B', 130, 40, 150, 90), cd('C', 160, 40, 180, 90),
        cd('K', 190, 40, 210, 90),
    };
    const AssembledText a = assemble(chars, 400, 130);
    CHECK(a.text == "123ABCK");
    CHECK(!a.dropped_department.has_value());
}

TEST_CASE("min/max confidence are computed after department stripping") {
    std::vector<CharDetection> chars = {
        cd('1', 10, 40, 30, 90, 0.8), cd('2', 40, 40, 60, 90, 0.9),
        cd('3', 70, 40, 90, 90, 0.85), cd('4', 100, 40, 120, 90, 0.95),
        cd('A', 130, 40, 150, 90, 0.7), cd('B', 160, 40, 180, 90, 0.75),
        cd('C', 190, 40, 210, 90, 0.9),
        cd('Z', 370, 5, 390, 45, 0.01),  // stripped; must not drag min_conf down
    };
    const AssembledText a = assemble(chars, 400, 130);
    CHECK(a.text == "1234ABC");
    CHECK(a.min_conf == doctest::Approx(0.7));
    CHECK(a.max_conf == doctest::Approx(0.95));
}

TEST_CASE("tripwire boundaries are strict") {
    AssembledText a;
    a.text = "1234AB";
    a.count = 6;
    a.min_conf = 0.2;
    a.max_conf = 1.0;
    CHECK(!tripwire(a, 0.2, 6));  // ratio exactly tau: no trigger
    a.min_conf = 0.199999;
    CHECK(tripwire(a, 0.2, 6));   // strictly below tau: trigger
    a.min_conf = 0.9;
    a.count = 6;
    CHECK(!tripwire(a, 0.2, 6));  // count exactly 6: no trigger
    a.count = 5;
    CHECK(tripwire(a, 0.2, 6));   // short reads trigger
    a.count = 0;
    CHECK(tripwire(a, 0.2, 6));   // empty reads trigger
}

TEST_CASE("template recognizer reads back every rendered glyph") {
    const std::string alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    TemplateRecognizer rec;
    for (char c : alphabet) {
        // one glyph on a white card, sized like a cropped plate character
        ImageBuffer card(90, 110, 3, 255);
        font::draw_glyph(card, c, 20, 20, 10, 0, 0, 150);
        const auto chars = rec.recognize(card);
        REQUIRE_MESSAGE(chars.size() == 1, "glyph ", c);
        CHECK_MESSAGE(glyph_to_char(chars[0].glyph) == c, "glyph ", c);
    }
}

TEST_CASE("template recognizer classifies the BOLIVIA header as one token") {
    ImageBuffer card(200, 60, 3, 255);
    const int scale = 2;
    int x = 30;
    for (char c : std::string("BOLIVIA")) {
        font::draw_glyph(card, c, x, 20, scale, 0, 0, 150);
        x += (font::kGlyphCols + 1) * scale;
    }
    TemplateRecognizer rec;
    const auto chars = rec.recognize(card);
    bool saw_bolivia = false;
    for (const auto& d : chars) saw_bolivia |= d.glyph == GlyphClass::Bolivia;
    CHECK(saw_bolivia);
    // nothing from the header may survive assembly
    const AssembledText a = assemble(chars, 200, 60);
    CHECK(a.text.empty());
}

TEST_CASE("recognizer + assembly read a full rendered plate") {
    synth::PlateSpec spec;
    spec.digits = "2475";
    spec.letters = "HNR";
    spec.department = 'S';
    const synth::RenderedPlate plate = synth::render_plate(spec);
    TemplateRecognizer rec;
    const auto chars = rec.recognize(plate.image);
    const AssembledText a =
        assemble(chars, plate.image.width(), plate.image.height());
    // the main line survives; header and department letter do not
    CHECK(a.text == "2475HNR");
    CHECK(a.text.find('S') == std::string::npos);
}
