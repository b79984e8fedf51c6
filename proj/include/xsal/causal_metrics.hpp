#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xsal/adapter.hpp"

namespace xsal {

enum class InsertionBase {
    blur,  // gaussian_blur(image, blur_sigma, blur_radius)
    fill,  // constant image at deletion_fill
};

struct MetricConfig {
    int steps = 100;
    float deletion_fill = 0.0f;
    InsertionBase insertion_base = InsertionBase::blur;
    double blur_sigma = 5.0;
    int blur_radius = 11;

    void validate() const;
};

struct CurvePoint {
    double fraction = 0.0;
    double score = 0.0;
};

using Curve = std::vector<CurvePoint>;

// Pixel indices by descending saliency; ties by ascending row-major index.
std::vector<std::size_t> pixel_order(const Tensor2D& saliency);

// Number of pixels modified at step k of `steps` over n pixels: floor(k * n / steps).
std::size_t pixels_at_step(std::size_t k, std::size_t n, int steps);

Curve deletion_curve(DetectorAdapter& adapter, const Image& image, const Detection& target,
                     const Tensor2D& saliency, const MetricConfig& cfg = {});
Curve insertion_curve(DetectorAdapter& adapter, const Image& image, const Detection& target,
                      const Tensor2D& saliency, const MetricConfig& cfg = {});

// Same curves for an explicit pixel ordering (a permutation of [0, H*W)).
Curve deletion_curve_for_order(DetectorAdapter& adapter, const Image& image, const Detection& target,
                               std::span<const std::size_t> order, const MetricConfig& cfg = {});
Curve insertion_curve_for_order(DetectorAdapter& adapter, const Image& image, const Detection& target,
                                std::span<const std::size_t> order, const MetricConfig& cfg = {});

// Trapezoidal area over the fraction axis.
double auc(const Curve& curve);

struct AucPair {
    double deletion = 0.0;
    double insertion = 0.0;
};

// Mean AUCs over the given orderings.
AucPair mean_auc_over_orders(DetectorAdapter& adapter, const Image& image, const Detection& target,
                             std::span<const std::vector<std::size_t>> orders, const MetricConfig& cfg = {});

// Mean AUCs over `trials` uniformly random orderings; trial t uses make_stream(seed, t).
AucPair random_baseline(DetectorAdapter& adapter, const Image& image, const Detection& target,
                        const MetricConfig& cfg, std::uint64_t seed, int trials);

std::string curve_to_csv(const Curve& curve);
void write_curve_csv(const std::filesystem::path& path, const Curve& curve);

}  // namespace xsal
