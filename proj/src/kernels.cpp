#include "blpr/kernels.hpp"

#include <cstring>

namespace blpr::kernels {

namespace {

struct Backend {
    void (*luma)(const std::uint8_t*, std::uint8_t*, std::size_t);
    void (*diff_sq)(const std::uint8_t*, const std::uint8_t*, std::uint16_t*, std::size_t);
    std::uint64_t (*sum)(const std::uint8_t*, std::size_t);
    std::uint64_t (*sum_sq)(const std::uint8_t*, std::size_t);
    void (*scale)(const std::uint8_t*, float, std::uint8_t*, std::size_t);
    const char* name;
};

constexpr Backend kScalar = {detail::luma_u8_scalar, detail::diff_sq_u8_scalar,
                             detail::sum_u8_scalar,  detail::sum_sq_u8_scalar,
                             detail::scale_u8_scalar, "scalar"};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Backend kAvx2 = {detail::luma_u8_avx2, detail::diff_sq_u8_avx2,
                           detail::sum_u8_avx2,  detail::sum_sq_u8_avx2,
                           detail::scale_u8_avx2, "avx2"};
bool avx2_available() { return __builtin_cpu_supports("avx2"); }
#else
bool avx2_available() { return false; }
#endif

const Backend* pick_auto() {
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_available()) return &kAvx2;
#endif
    return &kScalar;
}

const Backend* g_backend = pick_auto();

} // namespace

void luma_u8(const std::uint8_t* rgb, std::uint8_t* gray, std::size_t n) {
    g_backend->luma(rgb, gray, n);
}
void diff_sq_u8(const std::uint8_t* a, const std::uint8_t* b, std::uint16_t* out, std::size_t n) {
    g_backend->diff_sq(a, b, out, n);
}
std::uint64_t sum_u8(const std::uint8_t* p, std::size_t n) { return g_backend->sum(p, n); }
std::uint64_t sum_sq_u8(const std::uint8_t* p, std::size_t n) { return g_backend->sum_sq(p, n); }
void scale_u8(const std::uint8_t* p, float scale, std::uint8_t* out, std::size_t n) {
    g_backend->scale(p, scale, out, n);
}

const char* active_backend() { return g_backend->name; }

bool select_backend(const char* name) {
    if (std::strcmp(name, "scalar") == 0) { g_backend = &kScalar; return true; }
    if (std::strcmp(name, "auto") == 0) { g_backend = pick_auto(); return true; }
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(name, "avx2") == 0 && avx2_available()) { g_backend = &kAvx2; return true; }
#endif
    return false;
}

} // namespace blpr::kernels
