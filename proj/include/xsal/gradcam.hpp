#pragma once

#include <vector>

#include "xsal/adapter.hpp"

namespace xsal {

enum class ReluPlacement {
    per_term,        // S = sum_i ReLU(alpha_i * F_i)
    after_sum,       // S = ReLU(sum_i alpha_i * F_i), the original Grad-CAM form
};

struct GradCamConfig {
    bool apply_relu = true;
    ReluPlacement relu_placement = ReluPlacement::per_term;
    bool upsample_to_input = true;
};

// alpha_i: mean of gradient map i.
std::vector<double> gradcam_weights(const GradientStack& grads);

// Weighted feature-map combination at feature resolution.
Tensor2D gradcam_combine(const FeatureStack& features, std::span<const double> alpha, const GradCamConfig& cfg);

// Resolves `target` on `image`, pulls features and the gradient of the matched
// detection, and combines them. Throws capability-missing / no-match.
Tensor2D gradcam_saliency(DetectorAdapter& adapter, const Image& image, const Detection& target,
                          const GradCamConfig& cfg = {});

}  // namespace xsal
