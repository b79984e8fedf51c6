#include "xsal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xsal/error.hpp"
#include "xsal/kernels.hpp"

namespace xsal {

namespace {

void require_dims(int w, int h, const char* what) {
    if (w < 1 || h < 1)
        throw Error(ErrorCode::invalid_dimension,
                    std::string(what) + " must be at least 1x1, got " + std::to_string(w) + "x" + std::to_string(h));
}

}  // namespace

Tensor2D::Tensor2D(int width, int height, float fill) : width_(width), height_(height) {
    require_dims(width, height, "tensor");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Tensor2D::Tensor2D(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
    require_dims(width, height, "tensor");
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorCode::invalid_dimension, "tensor data length does not match width*height");
}

float Tensor2D::min() const { return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end()); }
float Tensor2D::max() const { return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end()); }

Image::Image(int width, int height, int channels, float fill) : width_(width), height_(height), channels_(channels) {
    require_dims(width, height, "image");
    if (channels != 1 && channels != 3) throw Error(ErrorCode::invalid_dimension, "image channels must be 1 or 3");
    data_.assign(static_cast<std::size_t>(channels) * width * height, fill);
}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    require_dims(width, height, "image");
    if (channels != 1 && channels != 3) throw Error(ErrorCode::invalid_dimension, "image channels must be 1 or 3");
    if (data_.size() != static_cast<std::size_t>(channels) * width * height)
        throw Error(ErrorCode::invalid_dimension, "image data length does not match C*H*W");
}

Tensor2D Image::plane_tensor(int c) const {
    auto p = plane(c);
    return Tensor2D(width_, height_, std::vector<float>(p.begin(), p.end()));
}

void Image::set_plane(int c, const Tensor2D& t) {
    if (t.width() != width_ || t.height() != height_)
        throw Error(ErrorCode::invalid_dimension, "plane size does not match image");
    std::copy(t.data().begin(), t.data().end(), plane(c).begin());
}

Tensor2D bilinear_resize(const Tensor2D& src, int out_w, int out_h) {
    if (src.empty()) throw Error(ErrorCode::invalid_dimension, "cannot resize an empty tensor");
    require_dims(out_w, out_h, "resize target");
    Tensor2D out(out_w, out_h);
    if (out_w == src.width() && out_h == src.height()) return src;
    kernels::resize_bilinear(src.data(), src.width(), src.height(), out.data(), out_w, out_h);
    return out;
}

Image bilinear_resize(const Image& src, int out_w, int out_h) {
    if (src.size() == 0) throw Error(ErrorCode::invalid_dimension, "cannot resize an empty image");
    require_dims(out_w, out_h, "resize target");
    if (out_w == src.width() && out_h == src.height()) return src;
    Image out(out_w, out_h, src.channels());
    for (int c = 0; c < src.channels(); ++c)
        kernels::resize_bilinear(src.plane(c), src.width(), src.height(), out.plane(c), out_w, out_h);
    return out;
}

Image hadamard_mask(const Image& image, const Tensor2D& mask) {
    if (mask.width() != image.width() || mask.height() != image.height())
        throw Error(ErrorCode::invalid_dimension, "mask and image dimensions differ");
    Image out = image;
    const auto m = mask.data();
    for (int c = 0; c < out.channels(); ++c) {
        auto p = out.plane(c);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] *= m[i];
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_parameter, "gaussian sigma must be positive");
    if (radius < 1) throw Error(ErrorCode::invalid_parameter, "gaussian radius must be at least 1");
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

Image gaussian_blur(const Image& image, double sigma, int radius) {
    const auto taps = gaussian_kernel(sigma, radius);
    Image out(image.width(), image.height(), image.channels());
    for (int c = 0; c < image.channels(); ++c) {
        kernels::blur_separable(image.plane(c), image.width(), image.height(), taps, out.plane(c));
        for (auto& v : out.plane(c)) v = std::clamp(v, 0.0f, 1.0f);
    }
    return out;
}

Tensor2D minmax_normalize(const Tensor2D& map) {
    Tensor2D out(map.width(), map.height());
    const float lo = map.min();
    const float hi = map.max();
    if (!(hi > lo)) return out;
    const double range = static_cast<double>(hi) - lo;
    for (std::size_t i = 0; i < map.size(); ++i)
        out[i] = static_cast<float>((static_cast<double>(map[i]) - lo) / range);
    return out;
}

}  // namespace xsal
