#include "blpr/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>

namespace blpr::kernels::detail {

namespace {

// Deinterleave 16 RGB pixels (48 bytes) into three 16-byte planes.
inline void deinterleave_rgb16(const std::uint8_t* p, __m128i& r, __m128i& g, __m128i& b) {
    const __m128i v0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p));
    const __m128i v1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p + 16));
    const __m128i v2 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p + 32));

    const __m128i mr0 = _mm_setr_epi8(0, 3, 6, 9, 12, 15, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1);
    const __m128i mr1 = _mm_setr_epi8(-1, -1, -1, -1, -1, -1, 2, 5, 8, 11, 14, -1, -1, -1, -1, -1);
    const __m128i mr2 = _mm_setr_epi8(-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 1, 4, 7, 10, 13);
    const __m128i mg0 = _mm_setr_epi8(1, 4, 7, 10, 13, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1);
    const __m128i mg1 = _mm_setr_epi8(-1, -1, -1, -1, -1, 0, 3, 6, 9, 12, 15, -1, -1, -1, -1, -1);
    const __m128i mg2 = _mm_setr_epi8(-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 2, 5, 8, 11, 14);
    const __m128i mb0 = _mm_setr_epi8(2, 5, 8, 11, 14, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1);
    const __m128i mb1 = _mm_setr_epi8(-1, -1, -1, -1, -1, 1, 4, 7, 10, 13, -1, -1, -1, -1, -1, -1);
    const __m128i mb2 = _mm_setr_epi8(-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 3, 6, 9, 12, 15);

    r = _mm_or_si128(_mm_or_si128(_mm_shuffle_epi8(v0, mr0), _mm_shuffle_epi8(v1, mr1)),
                     _mm_shuffle_epi8(v2, mr2));
    g = _mm_or_si128(_mm_or_si128(_mm_shuffle_epi8(v0, mg0), _mm_shuffle_epi8(v1, mg1)),
                     _mm_shuffle_epi8(v2, mg2));
    b = _mm_or_si128(_mm_or_si128(_mm_shuffle_epi8(v0, mb0), _mm_shuffle_epi8(v1, mb1)),
                     _mm_shuffle_epi8(v2, mb2));
}

// (wr*r + wg*g + wb*b + 32768) >> 16 for 8 u32 lanes.
inline __m256i luma8(__m256i r, __m256i g, __m256i b) {
    __m256i acc = _mm256_mullo_epi32(r, _mm256_set1_epi32(19595));
    acc = _mm256_add_epi32(acc, _mm256_mullo_epi32(g, _mm256_set1_epi32(38470)));
    acc = _mm256_add_epi32(acc, _mm256_mullo_epi32(b, _mm256_set1_epi32(7471)));
    acc = _mm256_add_epi32(acc, _mm256_set1_epi32(32768));
    return _mm256_srli_epi32(acc, 16);
}

inline __m128i pack_u32x16_to_u8(__m256i lo, __m256i hi) {
    __m256i w = _mm256_packus_epi32(lo, hi);               // lane-interleaved u16
    w = _mm256_permute4x64_epi64(w, 0xD8);                 // restore order
    const __m128i a = _mm256_castsi256_si128(w);
    const __m128i b = _mm256_extracti128_si256(w, 1);
    return _mm_packus_epi16(a, b);
}

} // namespace

void luma_u8_avx2(const std::uint8_t* rgb, std::uint8_t* gray, std::size_t n) {
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        __m128i r8, g8, b8;
        deinterleave_rgb16(rgb + 3 * i, r8, g8, b8);
        const __m256i rlo = _mm256_cvtepu8_epi32(r8);
        const __m256i rhi = _mm256_cvtepu8_epi32(_mm_srli_si128(r8, 8));
        const __m256i glo = _mm256_cvtepu8_epi32(g8);
        const __m256i ghi = _mm256_cvtepu8_epi32(_mm_srli_si128(g8, 8));
        const __m256i blo = _mm256_cvtepu8_epi32(b8);
        const __m256i bhi = _mm256_cvtepu8_epi32(_mm_srli_si128(b8, 8));
        const __m128i out = pack_u32x16_to_u8(luma8(rlo, glo, blo), luma8(rhi, ghi, bhi));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(gray + i), out);
    }
    if (i < n) luma_u8_scalar(rgb + 3 * i, gray + i, n - i);
}

void diff_sq_u8_avx2(const std::uint8_t* a, const std::uint8_t* b, std::uint16_t* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        const __m256i ad = _mm256_or_si256(_mm256_subs_epu8(va, vb), _mm256_subs_epu8(vb, va));
        const __m256i lo = _mm256_cvtepu8_epi16(_mm256_castsi256_si128(ad));
        const __m256i hi = _mm256_cvtepu8_epi16(_mm256_extracti128_si256(ad, 1));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_mullo_epi16(lo, lo));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i + 16), _mm256_mullo_epi16(hi, hi));
    }
    if (i < n) diff_sq_u8_scalar(a + i, b + i, out + i, n - i);
}

std::uint64_t sum_u8_avx2(const std::uint8_t* p, std::size_t n) {
    __m256i acc = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
        acc = _mm256_add_epi64(acc, _mm256_sad_epu8(v, _mm256_setzero_si256()));
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    std::uint64_t s = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i) s += p[i];
    return s;
}

std::uint64_t sum_sq_u8_avx2(const std::uint8_t* p, std::size_t n) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    while (i + 32 <= n) {
        // u32 lanes hold at most 130050 per step; flush well before overflow.
        const std::size_t block_end = i + std::min<std::size_t>((n - i) / 32 * 32, 16384 * 32);
        __m256i acc = _mm256_setzero_si256();
        for (; i < block_end; i += 32) {
            const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
            const __m256i lo = _mm256_cvtepu8_epi16(_mm256_castsi256_si128(v));
            const __m256i hi = _mm256_cvtepu8_epi16(_mm256_extracti128_si256(v, 1));
            acc = _mm256_add_epi32(acc, _mm256_madd_epi16(lo, lo));
            acc = _mm256_add_epi32(acc, _mm256_madd_epi16(hi, hi));
        }
        alignas(32) std::uint32_t lanes[8];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
        for (std::uint32_t l : lanes) total += l;
    }
    for (; i < n; ++i) total += static_cast<std::uint32_t>(p[i]) * p[i];
    return total;
}

void scale_u8_avx2(const std::uint8_t* p, float scale, std::uint8_t* out, std::size_t n) {
    const __m256 vs = _mm256_set1_ps(scale);
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m128i v = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p + i));
        const __m256i ilo = _mm256_cvtepu8_epi32(v);
        const __m256i ihi = _mm256_cvtepu8_epi32(_mm_srli_si128(v, 8));
        const __m256i rlo = _mm256_cvtps_epi32(_mm256_mul_ps(_mm256_cvtepi32_ps(ilo), vs));
        const __m256i rhi = _mm256_cvtps_epi32(_mm256_mul_ps(_mm256_cvtepi32_ps(ihi), vs));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), pack_u32x16_to_u8(rlo, rhi));
    }
    if (i < n) scale_u8_scalar(p + i, scale, out + i, n - i);
}

} // namespace blpr::kernels::detail

#endif // x86_64
