#pragma once

#include <vector>

#include "xsal/adapter.hpp"
#include "xsal/rise.hpp"

namespace xsal {

enum class SiduScoreMode {
    matched_score,  // p = [score of the re-identified target box]
    class_vector,   // p = [best matching box score for each class]
};

struct SiduConfig {
    double sigma = 0.25;
    bool binarize = true;
    double bin_threshold = 0.5;  // fraction of the per-map maximum
    SiduScoreMode score_mode = SiduScoreMode::matched_score;

    void validate() const;
};

// Min-max normalise, resize to the input, optionally threshold.
MaskStack build_feature_masks(const FeatureStack& features, const SiduConfig& cfg, int input_w, int input_h);

// sd_i = exp(-||p_o - p_i|| / (2 sigma^2)), Euclidean norm.
std::vector<double> similarity_differences(const ScoreVector& p_o, std::span<const ScoreVector> preds, double sigma);

// u_i = sum_j ||p_i - p_j||.
std::vector<double> uniqueness(std::span<const ScoreVector> preds);

// S = sum_i sd_i * u_i * M_i.
Tensor2D sidu_combine(std::span<const Tensor2D> masks, std::span<const double> sd, std::span<const double> u);

Tensor2D sidu_saliency(DetectorAdapter& adapter, const Image& image, const Detection& target,
                       const SiduConfig& cfg = {});

}  // namespace xsal
