#pragma once

#include <cstddef>
#include <cstdint>

// Pixel-loop kernels with scalar reference implementations and AVX2
// variants selected once at startup. Both paths are bit-exact equal;
// the scalar path is the semantic reference the tests check against.
namespace blpr::kernels {

// BT.601 luma in 16-bit fixed point: (19595 R + 38470 G + 7471 B + 32768) >> 16.
// Weights sum to exactly 65536, so (v,v,v) maps to v.
void luma_u8(const std::uint8_t* rgb, std::uint8_t* gray, std::size_t n_pixels);

// out[i] = (a[i] - b[i])^2, widened to u16.
void diff_sq_u8(const std::uint8_t* a, const std::uint8_t* b, std::uint16_t* out, std::size_t n);

std::uint64_t sum_u8(const std::uint8_t* p, std::size_t n);
std::uint64_t sum_sq_u8(const std::uint8_t* p, std::size_t n);

// out[i] = clamp(round(p[i] * scale), 0, 255)
void scale_u8(const std::uint8_t* p, float scale, std::uint8_t* out, std::size_t n);

namespace detail {
void luma_u8_scalar(const std::uint8_t*, std::uint8_t*, std::size_t);
void diff_sq_u8_scalar(const std::uint8_t*, const std::uint8_t*, std::uint16_t*, std::size_t);
std::uint64_t sum_u8_scalar(const std::uint8_t*, std::size_t);
std::uint64_t sum_sq_u8_scalar(const std::uint8_t*, std::size_t);
void scale_u8_scalar(const std::uint8_t*, float, std::uint8_t*, std::size_t);

#if defined(__x86_64__) || defined(_M_X64)
void luma_u8_avx2(const std::uint8_t*, std::uint8_t*, std::size_t);
void diff_sq_u8_avx2(const std::uint8_t*, const std::uint8_t*, std::uint16_t*, std::size_t);
std::uint64_t sum_u8_avx2(const std::uint8_t*, std::size_t);
std::uint64_t sum_sq_u8_avx2(const std::uint8_t*, std::size_t);
void scale_u8_avx2(const std::uint8_t*, float, std::uint8_t*, std::size_t);
#endif
} // namespace detail

// Active dispatch target, for diagnostics ("scalar" or "avx2").
const char* active_backend();

// Force a backend for testing; name in {"scalar", "avx2", "auto"}.
// Returns false if the requested backend is unavailable on this CPU.
bool select_backend(const char* name);

} // namespace blpr::kernels
