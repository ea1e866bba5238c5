#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blpr/config.hpp"
#include "blpr/detection.hpp"
#include "blpr/image.hpp"

namespace blpr {

// 38 classes: digits, letters, the plate-header word, and underscore.
enum class GlyphClass : std::uint8_t {
    D0, D1, D2, D3, D4, D5, D6, D7, D8, D9,
    A, B, C, D, E, F, G, H, I, J, K, L, M,
    N, O, P, Q, R, S, T, U, V, W, X, Y, Z,
    Bolivia, Underscore,
};

bool is_letter(GlyphClass g);
bool is_digit(GlyphClass g);
char glyph_to_char(GlyphClass g);              // throws for Bolivia/Underscore
GlyphClass glyph_from_char(char c);            // '0'-'9', 'A'-'Z'
std::string glyph_name(GlyphClass g);

struct CharDetection {
    GlyphClass glyph = GlyphClass::Underscore;
    BBox box;
    double confidence = 0.0;
};

struct AssembledText {
    std::string text;                              // over [0-9A-Z]
    int count = 0;
    double min_conf = 0.0;
    double max_conf = 0.0;
    std::optional<GlyphClass> dropped_department;
};

// Abstracts the character recognizer behind the OCR stage.
class RecognizerPort {
public:
    virtual ~RecognizerPort() = default;
    virtual std::vector<CharDetection> recognize(const ImageBuffer& roi) = 0;
};

std::vector<CharDetection> filter_ignored(const std::vector<CharDetection>& chars);

// Lines via >= 50% vertical overlap of the shorter box (transitively closed),
// left-to-right within a line, top-to-bottom across lines.
std::vector<std::vector<CharDetection>> group_lines(const std::vector<CharDetection>& chars,
                                                    double overlap_frac = 0.5);

struct StrippedLine {
    std::vector<CharDetection> main_line;
    std::optional<CharDetection> dropped;
};

StrippedLine strip_department_code(const std::vector<std::vector<CharDetection>>& lines,
                                   double roi_w, double roi_h,
                                   const ReadingConfig& cfg = {});

AssembledText assemble(const std::vector<CharDetection>& chars, double roi_w, double roi_h,
                       const ReadingConfig& cfg = {});

// True when the plate must be routed to the fallback.
bool tripwire(const AssembledText& assembled, double tau = 0.2, int min_chars = 6);

// Desk-scale recognizer: Otsu binarization, connected components, and
// normalized cross-correlation against the built-in font templates.
class TemplateRecognizer : public RecognizerPort {
public:
    TemplateRecognizer();
    std::vector<CharDetection> recognize(const ImageBuffer& roi) override;

private:
    struct Template {
        GlyphClass glyph;
        std::vector<float> pattern;  // zero-mean, unit-norm
    };
    std::vector<Template> glyph_templates_;
    std::vector<float> bolivia_template_;
    int bolivia_w_ = 0, bolivia_h_ = 0;
};

} // namespace blpr
