#pragma once

// Data-parallel inner loops over interleaved RGBA double buffers. Every kernel
// has a portable scalar reference and an AVX2 variant; the variant is chosen
// once per process from the CPU feature bits (override with MVD_SIMD=scalar).

#include <string_view>

namespace mvd::kernels {

enum class Isa { scalar, avx2 };

struct MaskedSse {
    double sum = 0.0;  // squared RGB differences
    long count = 0;    // pixels where both alphas exceed 0.5
};

struct KernelTable {
    Isa isa;

    // out[4i..4i+3] = bilinear sample of `image` at (xs[i], ys[i]); taps outside read zero.
    void (*sample_bilinear_rgba)(const double* image, int width, int height, const double* xs, const double* ys,
                                 int n, double* out);

    // Adjoint of sample_bilinear_rgba: image_grad taps += weight * grads[4i..4i+3].
    void (*scatter_bilinear_rgba)(double* image_grad, int width, int height, const double* xs, const double* ys,
                                  const double* grads, int n);

    // gx[i] = sum_c grads[4i+c] * d(sample_c)/dx at (xs[i], ys[i]), likewise gy.
    void (*bilinear_spatial_dot)(const double* image, int width, int height, const double* xs, const double* ys,
                                 const double* grads, int n, double* gx, double* gy);

    // Squared RGB difference over `n` pixels where both alpha channels exceed 0.5.
    MaskedSse (*masked_rgb_sse)(const double* a, const double* b, int n);

    // Sum over `n` pixels of squared alpha differences.
    double (*alpha_sse)(const double* a, const double* b, int n);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table(); // null when the translation unit was not built

bool isa_available(Isa isa);
const KernelTable& table(Isa isa);

/// Kernel table selected for this process.
const KernelTable& active();
Isa active_isa();
std::string_view isa_name(Isa isa);

} // namespace mvd::kernels
