#include <vector>

#include "kernel_detail.hpp"

namespace xsal::kernels::serial {

void resize_bilinear(std::span<const float> src, int src_w, int src_h, std::span<float> dst, int dst_w,
                     int dst_h) {
    for (int y = 0; y < dst_h; ++y) {
        const auto ty = detail::bilinear_tap(y, src_h, dst_h);
        for (int x = 0; x < dst_w; ++x) {
            const auto tx = detail::bilinear_tap(x, src_w, dst_w);
            dst[static_cast<std::size_t>(y) * dst_w + x] = detail::bilinear_sample(src, src_w, tx, ty);
        }
    }
}

void blur_separable(std::span<const float> src, int width, int height, std::span<const double> taps,
                    std::span<float> dst) {
    std::vector<double> tmp(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        const auto row = src.subspan(static_cast<std::size_t>(y) * width, width);
        for (int x = 0; x < width; ++x)
            tmp[static_cast<std::size_t>(y) * width + x] = detail::blur_row_at(row, width, taps, x);
    }
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            dst[static_cast<std::size_t>(y) * width + x] =
                static_cast<float>(detail::blur_col_at(tmp, width, height, taps, x, y));
}

void conv2d_relu(const ConvShape& shape, std::span<const float> input, std::span<const float> weights,
                 std::span<const float> bias, std::span<float> output) {
    const int oh = shape.out_height();
    const int ow = shape.out_width();
    for (int oc = 0; oc < shape.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                output[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] =
                    detail::conv_at(shape, input, weights, bias, oc, oy, ox);
}

void weighted_accumulate(std::span<double> acc, std::span<const float* const> masks,
                         std::span<const double> weights) {
    for (std::size_t p = 0; p < acc.size(); ++p) acc[p] = detail::accumulate_at(masks, weights, p, acc[p]);
}

}  // namespace xsal::kernels::serial
