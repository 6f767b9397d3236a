#include "mvd/kernels/kernels.hpp"

#include <cmath>

namespace mvd::kernels {

namespace {

struct Taps {
    int x0, y0;
    double fx, fy;
};

inline Taps taps_of(double x, double y)
{
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    return {static_cast<int>(fx0), static_cast<int>(fy0), x - fx0, y - fy0};
}

inline bool inside(int x, int y, int w, int h)
{
    return x >= 0 && y >= 0 && x < w && y < h;
}

void sample_bilinear_rgba(const double* image, int w, int h, const double* xs, const double* ys, int n, double* out)
{
    for (int i = 0; i < n; ++i) {
        double* o = out + 4 * i;
        o[0] = o[1] = o[2] = o[3] = 0.0;
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]) || xs[i] <= -1.0 || ys[i] <= -1.0 || xs[i] >= w ||
            ys[i] >= h)
            continue;
        const Taps t = taps_of(xs[i], ys[i]);
        const double wt[4] = {(1 - t.fx) * (1 - t.fy), t.fx * (1 - t.fy), (1 - t.fx) * t.fy, t.fx * t.fy};
        const int tx[4] = {t.x0, t.x0 + 1, t.x0, t.x0 + 1};
        const int ty[4] = {t.y0, t.y0, t.y0 + 1, t.y0 + 1};
        for (int k = 0; k < 4; ++k) {
            if (!inside(tx[k], ty[k], w, h))
                continue;
            const double* p = image + 4 * (static_cast<long>(ty[k]) * w + tx[k]);
            for (int c = 0; c < 4; ++c)
                o[c] += wt[k] * p[c];
        }
    }
}

void scatter_bilinear_rgba(double* grad, int w, int h, const double* xs, const double* ys, const double* g, int n)
{
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]) || xs[i] <= -1.0 || ys[i] <= -1.0 || xs[i] >= w ||
            ys[i] >= h)
            continue;
        const Taps t = taps_of(xs[i], ys[i]);
        const double wt[4] = {(1 - t.fx) * (1 - t.fy), t.fx * (1 - t.fy), (1 - t.fx) * t.fy, t.fx * t.fy};
        const int tx[4] = {t.x0, t.x0 + 1, t.x0, t.x0 + 1};
        const int ty[4] = {t.y0, t.y0, t.y0 + 1, t.y0 + 1};
        for (int k = 0; k < 4; ++k) {
            if (!inside(tx[k], ty[k], w, h))
                continue;
            double* p = grad + 4 * (static_cast<long>(ty[k]) * w + tx[k]);
            for (int c = 0; c < 4; ++c)
                p[c] += wt[k] * g[4 * i + c];
        }
    }
}

void bilinear_spatial_dot(const double* image, int w, int h, const double* xs, const double* ys, const double* g,
                          int n, double* gx, double* gy)
{
    for (int i = 0; i < n; ++i) {
        gx[i] = gy[i] = 0.0;
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]) || xs[i] <= -1.0 || ys[i] <= -1.0 || xs[i] >= w ||
            ys[i] >= h)
            continue;
        const Taps t = taps_of(xs[i], ys[i]);
        double p[4][4] = {};
        const int tx[4] = {t.x0, t.x0 + 1, t.x0, t.x0 + 1};
        const int ty[4] = {t.y0, t.y0, t.y0 + 1, t.y0 + 1};
        for (int k = 0; k < 4; ++k)
            if (inside(tx[k], ty[k], w, h))
                for (int c = 0; c < 4; ++c)
                    p[k][c] = image[4 * (static_cast<long>(ty[k]) * w + tx[k]) + c];
        double sx = 0.0, sy = 0.0;
        for (int c = 0; c < 4; ++c) {
            const double dx = (1 - t.fy) * (p[1][c] - p[0][c]) + t.fy * (p[3][c] - p[2][c]);
            const double dy = (1 - t.fx) * (p[2][c] - p[0][c]) + t.fx * (p[3][c] - p[1][c]);
            sx += g[4 * i + c] * dx;
            sy += g[4 * i + c] * dy;
        }
        gx[i] = sx;
        gy[i] = sy;
    }
}

MaskedSse masked_rgb_sse(const double* a, const double* b, int n)
{
    MaskedSse r;
    for (int i = 0; i < n; ++i) {
        const double* pa = a + 4 * i;
        const double* pb = b + 4 * i;
        if (!(pa[3] > 0.5 && pb[3] > 0.5))
            continue;
        for (int c = 0; c < 3; ++c) {
            const double d = pa[c] - pb[c];
            r.sum += d * d;
        }
        ++r.count;
    }
    return r;
}

double alpha_sse(const double* a, const double* b, int n)
{
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a[4 * i + 3] - b[4 * i + 3];
        s += d * d;
    }
    return s;
}

} // namespace

const KernelTable& scalar_table()
{
    static const KernelTable table{Isa::scalar,      &sample_bilinear_rgba, &scatter_bilinear_rgba,
                                   &bilinear_spatial_dot, &masked_rgb_sse,  &alpha_sse};
    return table;
}

} // namespace mvd::kernels
