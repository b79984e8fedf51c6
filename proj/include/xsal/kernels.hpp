#pragma once

// Data-parallel inner loops. Each kernel exists twice: an OpenMP version used by
// the library and a single-threaded reference in `serial` used by the tests and
// the benchmark. Both visit the same arithmetic in the same order per output
// element, so their results are bitwise identical for any thread count.

#include <cstddef>
#include <span>

namespace xsal::kernels {

struct ConvShape {
    int in_channels = 0;
    int in_height = 0;
    int in_width = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int pad = 0;  // replicate padding

    int out_height() const { return (in_height + 2 * pad - kernel) / stride + 1; }
    int out_width() const { return (in_width + 2 * pad - kernel) / stride + 1; }
};

void resize_bilinear(std::span<const float> src, int src_w, int src_h, std::span<float> dst, int dst_w,
                     int dst_h);

// One plane, edge-replicated border. `taps` has odd length 2r+1.
void blur_separable(std::span<const float> src, int width, int height, std::span<const double> taps,
                    std::span<float> dst);

// weights laid out [out][in][ky][kx]; output gets bias + ReLU.
void conv2d_relu(const ConvShape& shape, std::span<const float> input, std::span<const float> weights,
                 std::span<const float> bias, std::span<float> output);

// acc[p] += sum_i weights[i] * masks[i][p], masks visited in index order.
void weighted_accumulate(std::span<double> acc, std::span<const float* const> masks,
                         std::span<const double> weights);

namespace serial {

void resize_bilinear(std::span<const float> src, int src_w, int src_h, std::span<float> dst, int dst_w,
                     int dst_h);
void blur_separable(std::span<const float> src, int width, int height, std::span<const double> taps,
                    std::span<float> dst);
void conv2d_relu(const ConvShape& shape, std::span<const float> input, std::span<const float> weights,
                 std::span<const float> bias, std::span<float> output);
void weighted_accumulate(std::span<double> acc, std::span<const float* const> masks,
                         std::span<const double> weights);

}  // namespace serial

}  // namespace xsal::kernels
