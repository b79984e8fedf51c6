#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xsal {

// Single-plane row-major raster. Carrier for masks, feature maps and saliency maps.
class Tensor2D {
public:
    Tensor2D() = default;
    Tensor2D(int width, int height, float fill = 0.0f);
    Tensor2D(int width, int height, std::vector<float> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    const std::vector<float>& values() const noexcept { return data_; }

    float min() const;
    float max() const;

    friend bool operator==(const Tensor2D&, const Tensor2D&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

// Planar C x H x W raster with values in [0,1].
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f);
    Image(int width, int height, int channels, std::vector<float> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const noexcept { return data_.size(); }

    float& at(int c, int x, int y) { return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x]; }
    float at(int c, int x, int y) const { return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x]; }

    std::span<float> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const float> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }
    Tensor2D plane_tensor(int c) const;
    void set_plane(int c, const Tensor2D& t);

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

// Half-pixel-centre bilinear resampling:
//   x_s = (x_d + 0.5) * (w_src / w_dst) - 0.5, clamped to [0, w_src - 1].
Tensor2D bilinear_resize(const Tensor2D& src, int out_w, int out_h);
Image bilinear_resize(const Image& src, int out_w, int out_h);

// Multiplies every channel by the mask.
Image hadamard_mask(const Image& image, const Tensor2D& mask);

// Sampled Gaussian taps exp(-i^2 / (2 sigma^2)) for i in [-radius, radius], normalised to sum 1.
std::vector<double> gaussian_kernel(double sigma, int radius);

// Separable Gaussian blur with edge replication; result clamped to [0,1].
Image gaussian_blur(const Image& image, double sigma, int radius);

// Affine rescale to [0,1]; a constant map becomes all zeros.
Tensor2D minmax_normalize(const Tensor2D& map);

}  // namespace xsal
