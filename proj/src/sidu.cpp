#include "xsal/sidu.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "xsal/error.hpp"
#include "xsal/kernels.hpp"

namespace xsal {

void SiduConfig::validate() const {
    if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_parameter, "sidu sigma must be positive");
    if (!(bin_threshold > 0.0 && bin_threshold < 1.0))
        throw Error(ErrorCode::invalid_parameter, "sidu bin_threshold must lie in (0,1)");
}

MaskStack build_feature_masks(const FeatureStack& features, const SiduConfig& cfg, int input_w, int input_h) {
    cfg.validate();
    if (features.count() == 0) throw Error(ErrorCode::invalid_dimension, "empty feature stack");
    MaskStack masks;
    masks.reserve(features.count());
    for (const auto& f : features.maps()) {
        auto m = bilinear_resize(minmax_normalize(f), input_w, input_h);
        if (cfg.binarize) {
            const auto t = static_cast<float>(cfg.bin_threshold);
            for (auto& v : m.data()) v = v >= t ? 1.0f : 0.0f;
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

namespace {

double distance(const ScoreVector& a, const ScoreVector& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::invalid_dimension, "score vectors differ in length");
    double sq = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(sq);
}

}  // namespace

std::vector<double> similarity_differences(const ScoreVector& p_o, std::span<const ScoreVector> preds, double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_parameter, "sigma must be positive");
    const double scale = -1.0 / (2.0 * sigma * sigma);
    std::vector<double> sd(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) sd[i] = std::exp(scale * distance(p_o, preds[i]));
    return sd;
}

std::vector<double> uniqueness(std::span<const ScoreVector> preds) {
    std::vector<double> u(preds.size(), 0.0);
    for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < preds.size(); ++j)
            if (j != i) u[i] += distance(preds[i], preds[j]);
    return u;
}

Tensor2D sidu_combine(std::span<const Tensor2D> masks, std::span<const double> sd, std::span<const double> u) {
    if (masks.empty() || sd.size() != masks.size() || u.size() != masks.size())
        throw Error(ErrorCode::invalid_dimension, "one sd and u weight per mask required");
    std::vector<double> weights(masks.size());
    std::vector<const float*> ptrs;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        weights[i] = sd[i] * u[i];
        ptrs.push_back(masks[i].data().data());
    }
    std::vector<double> acc(masks[0].size(), 0.0);
    kernels::weighted_accumulate(acc, ptrs, weights);
    Tensor2D out(masks[0].width(), masks[0].height());
    for (std::size_t p = 0; p < acc.size(); ++p) out[p] = static_cast<float>(acc[p]);
    return out;
}

namespace {

ScoreVector score_vector(DetectorAdapter& adapter, const Image& image, const Detection& target, int num_classes,
                         SiduScoreMode mode) {
    if (mode == SiduScoreMode::matched_score) return {target_score(adapter, image, target)};
    check_input(adapter, image);
    const auto dets = adapter.detect(image);
    ScoreVector p(num_classes, 0.0);
    for (int c = 0; c < num_classes; ++c) {
        Detection probe = target;
        probe.class_id = c;
        if (auto m = match_box(dets, probe)) p[c] = m->score;
    }
    return p;
}

}  // namespace

Tensor2D sidu_saliency(DetectorAdapter& adapter, const Image& image, const Detection& target,
                       const SiduConfig& cfg) {
    cfg.validate();
    require_capability(adapter, &Capabilities::features, "features");
    check_input(adapter, image);

    const auto base_dets = adapter.detect(image);
    const auto matched = match_box(base_dets, target);
    if (!matched) throw Error(ErrorCode::no_match, "target detection not found on the unperturbed image");
    int num_classes = 1;
    for (const auto& d : base_dets) num_classes = std::max(num_classes, d.class_id + 1);

    ScoreVector p_o;
    if (cfg.score_mode == SiduScoreMode::matched_score) {
        p_o = {matched->score};
    } else {
        p_o.assign(num_classes, 0.0);
        for (int c = 0; c < num_classes; ++c) {
            Detection probe = *matched;
            probe.class_id = c;
            if (auto m = match_box(base_dets, probe)) p_o[c] = m->score;
        }
    }

    const auto masks = build_feature_masks(adapter.features(image), cfg, image.width(), image.height());
    std::vector<ScoreVector> preds(masks.size());
    auto eval = [&](std::size_t i) {
        preds[i] = score_vector(adapter, hadamard_mask(image, masks[i]), *matched, num_classes, cfg.score_mode);
    };
    if (adapter.concurrent()) {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto n = static_cast<std::ptrdiff_t>(masks.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            try {
                eval(static_cast<std::size_t>(i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t i = 0; i < masks.size(); ++i) eval(i);
    }

    const auto sd = similarity_differences(p_o, preds, cfg.sigma);
    const auto u = uniqueness(preds);
    return sidu_combine(masks, sd, u);
}

}  // namespace xsal
