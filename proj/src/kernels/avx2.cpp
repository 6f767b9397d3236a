#include "mvd/kernels/kernels.hpp"

#if defined(MVD_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cmath>

namespace mvd::kernels {

namespace {

// One RGBA pixel of doubles is exactly one __m256d, so the bilinear kernels
// vectorize across channels and stay per-point scalar in control flow.

inline __m256d load_tap(const double* image, int x, int y, int w, int h)
{
    if (x < 0 || y < 0 || x >= w || y >= h)
        return _mm256_setzero_pd();
    return _mm256_loadu_pd(image + 4 * (static_cast<long>(y) * w + x));
}

inline bool in_range(double x, double y, int w, int h)
{
    return std::isfinite(x) && std::isfinite(y) && x > -1.0 && y > -1.0 && x < w && y < h;
}

void sample_bilinear_rgba(const double* image, int w, int h, const double* xs, const double* ys, int n, double* out)
{
    for (int i = 0; i < n; ++i) {
        if (!in_range(xs[i], ys[i], w, h)) {
            _mm256_storeu_pd(out + 4 * i, _mm256_setzero_pd());
            continue;
        }
        const double fx0 = std::floor(xs[i]), fy0 = std::floor(ys[i]);
        const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
        const double fx = xs[i] - fx0, fy = ys[i] - fy0;
        __m256d acc = _mm256_mul_pd(_mm256_set1_pd((1 - fx) * (1 - fy)), load_tap(image, x0, y0, w, h));
        acc = _mm256_fmadd_pd(_mm256_set1_pd(fx * (1 - fy)), load_tap(image, x0 + 1, y0, w, h), acc);
        acc = _mm256_fmadd_pd(_mm256_set1_pd((1 - fx) * fy), load_tap(image, x0, y0 + 1, w, h), acc);
        acc = _mm256_fmadd_pd(_mm256_set1_pd(fx * fy), load_tap(image, x0 + 1, y0 + 1, w, h), acc);
        _mm256_storeu_pd(out + 4 * i, acc);
    }
}

inline void scatter_tap(double* grad, int x, int y, int w, int h, __m256d weight, __m256d g)
{
    if (x < 0 || y < 0 || x >= w || y >= h)
        return;
    double* p = grad + 4 * (static_cast<long>(y) * w + x);
    _mm256_storeu_pd(p, _mm256_fmadd_pd(weight, g, _mm256_loadu_pd(p)));
}

void scatter_bilinear_rgba(double* grad, int w, int h, const double* xs, const double* ys, const double* g, int n)
{
    for (int i = 0; i < n; ++i) {
        if (!in_range(xs[i], ys[i], w, h))
            continue;
        const double fx0 = std::floor(xs[i]), fy0 = std::floor(ys[i]);
        const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
        const double fx = xs[i] - fx0, fy = ys[i] - fy0;
        const __m256d gv = _mm256_loadu_pd(g + 4 * i);
        scatter_tap(grad, x0, y0, w, h, _mm256_set1_pd((1 - fx) * (1 - fy)), gv);
        scatter_tap(grad, x0 + 1, y0, w, h, _mm256_set1_pd(fx * (1 - fy)), gv);
        scatter_tap(grad, x0, y0 + 1, w, h, _mm256_set1_pd((1 - fx) * fy), gv);
        scatter_tap(grad, x0 + 1, y0 + 1, w, h, _mm256_set1_pd(fx * fy), gv);
    }
}

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void bilinear_spatial_dot(const double* image, int w, int h, const double* xs, const double* ys, const double* g,
                          int n, double* gx, double* gy)
{
    for (int i = 0; i < n; ++i) {
        if (!in_range(xs[i], ys[i], w, h)) {
            gx[i] = gy[i] = 0.0;
            continue;
        }
        const double fx0 = std::floor(xs[i]), fy0 = std::floor(ys[i]);
        const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
        const double fx = xs[i] - fx0, fy = ys[i] - fy0;
        const __m256d p00 = load_tap(image, x0, y0, w, h);
        const __m256d p10 = load_tap(image, x0 + 1, y0, w, h);
        const __m256d p01 = load_tap(image, x0, y0 + 1, w, h);
        const __m256d p11 = load_tap(image, x0 + 1, y0 + 1, w, h);
        const __m256d dx = _mm256_fmadd_pd(_mm256_set1_pd(1 - fy), _mm256_sub_pd(p10, p00),
                                           _mm256_mul_pd(_mm256_set1_pd(fy), _mm256_sub_pd(p11, p01)));
        const __m256d dy = _mm256_fmadd_pd(_mm256_set1_pd(1 - fx), _mm256_sub_pd(p01, p00),
                                           _mm256_mul_pd(_mm256_set1_pd(fx), _mm256_sub_pd(p11, p10)));
        const __m256d gv = _mm256_loadu_pd(g + 4 * i);
        gx[i] = hsum(_mm256_mul_pd(gv, dx));
        gy[i] = hsum(_mm256_mul_pd(gv, dy));
    }
}

MaskedSse masked_rgb_sse(const double* a, const double* b, int n)
{
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d rgb_lanes = _mm256_castsi256_pd(_mm256_set_epi64x(0, -1, -1, -1));
    const __m256d one_in_alpha = _mm256_set_pd(1.0, 0.0, 0.0, 0.0);
    __m256d acc = _mm256_setzero_pd();
    for (int i = 0; i < n; ++i) {
        const __m256d va = _mm256_loadu_pd(a + 4 * i);
        const __m256d vb = _mm256_loadu_pd(b + 4 * i);
        const __m256d alpha_a = _mm256_permute4x64_pd(va, 0xFF);
        const __m256d alpha_b = _mm256_permute4x64_pd(vb, 0xFF);
        const __m256d keep = _mm256_and_pd(_mm256_cmp_pd(alpha_a, half, _CMP_GT_OQ),
                                           _mm256_cmp_pd(alpha_b, half, _CMP_GT_OQ));
        const __m256d d = _mm256_sub_pd(va, vb);
        // rgb lanes carry squared differences, lane 3 counts accepted pixels
        const __m256d term = _mm256_or_pd(_mm256_and_pd(rgb_lanes, _mm256_mul_pd(d, d)), one_in_alpha);
        acc = _mm256_add_pd(acc, _mm256_and_pd(keep, term));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    return {lanes[0] + lanes[1] + lanes[2], static_cast<long>(lanes[3])};
}

double alpha_sse(const double* a, const double* b, int n)
{
    const __m256d alpha_lane = _mm256_castsi256_pd(_mm256_set_epi64x(-1, 0, 0, 0));
    __m256d acc = _mm256_setzero_pd();
    for (int i = 0; i < n; ++i) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + 4 * i), _mm256_loadu_pd(b + 4 * i));
        acc = _mm256_fmadd_pd(d, _mm256_and_pd(alpha_lane, d), acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    return lanes[3];
}

} // namespace

const KernelTable* avx2_table()
{
    static const KernelTable table{Isa::avx2,           &sample_bilinear_rgba, &scatter_bilinear_rgba,
                                   &bilinear_spatial_dot, &masked_rgb_sse,     &alpha_sse};
    return &table;
}

} // namespace mvd::kernels

#else

namespace mvd::kernels {

const KernelTable* avx2_table()
{
    return nullptr;
}

} // namespace mvd::kernels

#endif
