#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blpr/image.hpp"

namespace blpr {

// 8-bit PNG I/O. Palette/alpha/16-bit inputs are normalized to gray or RGB.
ImageBuffer read_png(const std::string& path);
void write_png(const std::string& path, const ImageBuffer& img);

// In-memory JPEG encoding, used for the model-fallback request payload.
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality = 90);

} // namespace blpr
