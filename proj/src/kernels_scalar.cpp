#include "blpr/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace blpr::kernels::detail {

void luma_u8_scalar(const std::uint8_t* rgb, std::uint8_t* gray, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t r = rgb[3 * i], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
        gray[i] = static_cast<std::uint8_t>((19595u * r + 38470u * g + 7471u * b + 32768u) >> 16);
    }
}

void diff_sq_u8_scalar(const std::uint8_t* a, const std::uint8_t* b, std::uint16_t* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
        out[i] = static_cast<std::uint16_t>(d * d);
    }
}

std::uint64_t sum_u8_scalar(const std::uint8_t* p, std::size_t n) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
}

std::uint64_t sum_sq_u8_scalar(const std::uint8_t* p, std::size_t n) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<std::uint32_t>(p[i]) * p[i];
    return s;
}

void scale_u8_scalar(const std::uint8_t* p, float scale, std::uint8_t* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float v = std::nearbyintf(static_cast<float>(p[i]) * scale);
        out[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
    }
}

} // namespace blpr::kernels::detail
