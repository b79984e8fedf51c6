#pragma once

// Per-output-element arithmetic shared by the serial and OpenMP kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "xsal/kernels.hpp"

namespace xsal::kernels::detail {

struct Tap {
    int i0;
    int i1;
    double frac;
};

inline Tap bilinear_tap(int dst_index, int src_len, int dst_len) {
    const double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);
    double s = (static_cast<double>(dst_index) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src_len - 1);
    return {i0, i1, s - i0};
}

inline float bilinear_sample(std::span<const float> src, int src_w, const Tap& tx, const Tap& ty) {
    const std::size_t r0 = static_cast<std::size_t>(ty.i0) * src_w;
    const std::size_t r1 = static_cast<std::size_t>(ty.i1) * src_w;
    const double v00 = src[r0 + tx.i0];
    const double v01 = src[r0 + tx.i1];
    const double v10 = src[r1 + tx.i0];
    const double v11 = src[r1 + tx.i1];
    const double top = v00 + (v01 - v00) * tx.frac;
    const double bottom = v10 + (v11 - v10) * tx.frac;
    return static_cast<float>(top + (bottom - top) * ty.frac);
}

inline double blur_row_at(std::span<const float> row, int width, std::span<const double> taps, int x) {
    const int radius = static_cast<int>(taps.size() / 2);
    double acc = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const int xx = std::clamp(x + k, 0, width - 1);
        acc += taps[k + radius] * row[xx];
    }
    return acc;
}

inline double blur_col_at(std::span<const double> tmp, int width, int height, std::span<const double> taps,
                          int x, int y) {
    const int radius = static_cast<int>(taps.size() / 2);
    double acc = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, height - 1);
        acc += taps[k + radius] * tmp[static_cast<std::size_t>(yy) * width + x];
    }
    return acc;
}

inline float conv_at(const ConvShape& s, std::span<const float> input, std::span<const float> weights,
                     std::span<const float> bias, int oc, int oy, int ox) {
    const std::size_t plane = static_cast<std::size_t>(s.in_height) * s.in_width;
    const std::size_t ksq = static_cast<std::size_t>(s.kernel) * s.kernel;
    double acc = bias[oc];
    for (int ic = 0; ic < s.in_channels; ++ic) {
        const float* w = weights.data() + (static_cast<std::size_t>(oc) * s.in_channels + ic) * ksq;
        const float* in = input.data() + ic * plane;
        for (int ky = 0; ky < s.kernel; ++ky) {
            const int iy = std::clamp(oy * s.stride - s.pad + ky, 0, s.in_height - 1);
            const float* row = in + static_cast<std::size_t>(iy) * s.in_width;
            for (int kx = 0; kx < s.kernel; ++kx) {
                const int ix = std::clamp(ox * s.stride - s.pad + kx, 0, s.in_width - 1);
                acc += static_cast<double>(w[ky * s.kernel + kx]) * row[ix];
            }
        }
    }
    return acc > 0.0 ? static_cast<float>(acc) : 0.0f;
}

inline double accumulate_at(std::span<const float* const> masks, std::span<const double> weights, std::size_t p,
                            double acc) {
    for (std::size_t i = 0; i < masks.size(); ++i) acc += weights[i] * masks[i][p];
    return acc;
}

}  // namespace xsal::kernels::detail
