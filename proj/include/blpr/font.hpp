#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "blpr/image.hpp"

namespace blpr {

// Built-in 5x7 dot-matrix font covering 0-9 and A-Z.
namespace font {

constexpr int kGlyphCols = 5;
constexpr int kGlyphRows = 7;

// Row-major bitmask, one byte per row, bit 4 = leftmost column.
const std::array<std::uint8_t, kGlyphRows>& glyph(char c);  // throws on unsupported char

// Draws `c` with its top-left at (x, y), each font dot `scale` pixels square.
void draw_glyph(ImageBuffer& img, char c, int x, int y, int scale,
                std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Renders `c` alone into a gray image (foreground 255 on 0), dot size `scale`.
ImageBuffer render_glyph_mask(char c, int scale);

// Renders a whole string into a gray mask with one blank column between glyphs.
ImageBuffer render_text_mask(const std::string& text, int scale);

int text_width(int n_chars, int scale);  // includes inter-glyph spacing

} // namespace font
} // namespace blpr
