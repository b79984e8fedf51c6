#include "xsal/gradcam.hpp"

#include "xsal/error.hpp"

namespace xsal {

std::vector<double> gradcam_weights(const GradientStack& grads) {
    if (grads.count() == 0) throw Error(ErrorCode::invalid_dimension, "empty gradient stack");
    std::vector<double> alpha(grads.count());
    for (std::size_t i = 0; i < grads.count(); ++i) {
        double sum = 0.0;
        for (float g : grads[i].data()) sum += g;
        alpha[i] = sum / static_cast<double>(grads[i].size());
    }
    return alpha;
}

Tensor2D gradcam_combine(const FeatureStack& features, std::span<const double> alpha, const GradCamConfig& cfg) {
    if (alpha.size() != features.count())
        throw Error(ErrorCode::invalid_dimension, "one weight per feature map required");
    const bool relu_terms = cfg.apply_relu && cfg.relu_placement == ReluPlacement::per_term;
    const std::size_t n = features[0].size();
    std::vector<double> acc(n, 0.0);
    for (std::size_t i = 0; i < features.count(); ++i) {
        const auto f = features[i].data();
        for (std::size_t p = 0; p < n; ++p) {
            const double term = alpha[i] * f[p];
            acc[p] += relu_terms ? std::max(term, 0.0) : term;
        }
    }
    Tensor2D out(features.width(), features.height());
    const bool relu_sum = cfg.apply_relu && cfg.relu_placement == ReluPlacement::after_sum;
    for (std::size_t p = 0; p < n; ++p) out[p] = static_cast<float>(relu_sum ? std::max(acc[p], 0.0) : acc[p]);
    return out;
}

Tensor2D gradcam_saliency(DetectorAdapter& adapter, const Image& image, const Detection& target,
                          const GradCamConfig& cfg) {
    require_capability(adapter, &Capabilities::features, "features");
    require_capability(adapter, &Capabilities::grad_features, "grad_features");
    const Detection matched = resolve_target(adapter, image, target);
    const auto features = adapter.features(image);
    const auto grads = adapter.grad_features(image, matched);
    if (!features.same_shape(grads))
        throw Error(ErrorCode::invalid_dimension, "gradient stack does not match the feature stack");
    auto map = gradcam_combine(features, gradcam_weights(grads), cfg);
    if (cfg.upsample_to_input) map = bilinear_resize(map, image.width(), image.height());
    return map;
}

}  // namespace xsal
