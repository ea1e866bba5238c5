#include "blpr/font.hpp"

#include <algorithm>
#include <stdexcept>

namespace blpr::font {

namespace {

// Classic 5x7 dot-matrix shapes.
constexpr std::array<std::uint8_t, 7> kGlyphs[36] = {
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
    {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11},  // A
    {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // B
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // C
    {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},  // D
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // E
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // F
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},  // G
    {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // H
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // I
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // J
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // K
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // L
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
    {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},  // N
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // O
    {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // P
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // Q
    {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // R
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // S
    {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // U
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // V
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A},  // W
    {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // X
    {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04},  // Y
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // Z
};

int glyph_index(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'Z') return 10 + (c - 'A');
    throw std::invalid_argument(std::string("font: unsupported glyph '") + c + "'");
}

} // namespace

const std::array<std::uint8_t, kGlyphRows>& glyph(char c) { return kGlyphs[glyph_index(c)]; }

void draw_glyph(ImageBuffer& img, char c, int x, int y, int scale,
                std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const auto& rows = glyph(c);
    for (int gy = 0; gy < kGlyphRows; ++gy) {
        for (int gx = 0; gx < kGlyphCols; ++gx) {
            if (!(rows[gy] & (1 << (kGlyphCols - 1 - gx)))) continue;
            for (int dy = 0; dy < scale; ++dy) {
                for (int dx = 0; dx < scale; ++dx) {
                    const int px = x + gx * scale + dx;
                    const int py = y + gy * scale + dy;
                    if (!img.in_bounds(px, py)) continue;
                    if (img.channels() == 1) {
                        img.at(px, py) = r;
                    } else {
                        img.at(px, py, 0) = r;
                        img.at(px, py, 1) = g;
                        img.at(px, py, 2) = b;
                    }
                }
            }
        }
    }
}

ImageBuffer render_glyph_mask(char c, int scale) {
    ImageBuffer out(kGlyphCols * scale, kGlyphRows * scale, 1, 0);
    draw_glyph(out, c, 0, 0, scale, 255, 255, 255);
    return out;
}

int text_width(int n_chars, int scale) {
    if (n_chars <= 0) return 0;
    return n_chars * kGlyphCols * scale + (n_chars - 1) * scale;
}

ImageBuffer render_text_mask(const std::string& text, int scale) {
    ImageBuffer out(std::max(1, text_width(static_cast<int>(text.size()), scale)),
                    kGlyphRows * scale, 1, 0);
    int x = 0;
    for (char c : text) {
        draw_glyph(out, c, x, 0, scale, 255, 255, 255);
        x += (kGlyphCols + 1) * scale;
    }
    return out;
}

} // namespace blpr::font
