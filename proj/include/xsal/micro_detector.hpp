#pragma once

// Single-scale convolutional detector with a closed-form gradient:
//   conv1: 3 -> K, 5x5, stride 2, replicate pad 2, ReLU
//   conv2: K -> K, 3x3, stride 2, replicate pad 1, ReLU   (the feature stack, W/4 x H/4)
//   head:  1x1 conv K -> C+1; channels 0..C-1 are class logits, channel C is unused
// Every (cell, class) yields one detection with a fixed square anchor of side
// 16 px centred on the cell, scored by sigmoid(logit).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xsal/adapter.hpp"

namespace xsal {

struct MicroDetConfig {
    int width = 64;
    int height = 64;
    int features = 8;  // K
    int classes = 2;   // C

    static constexpr int cell_stride = 4;
    static constexpr int anchor_side = 4 * cell_stride;

    int grid_w() const { return width / cell_stride; }
    int grid_h() const { return height / cell_stride; }
    void validate() const;
};

struct MicroWeights {
    std::vector<float> conv1_w, conv1_b;  // [K][3][5][5], [K]
    std::vector<float> conv2_w, conv2_b;  // [K][K][3][3], [K]
    std::vector<float> head_w, head_b;    // [C+1][K], [C+1]

    friend bool operator==(const MicroWeights&, const MicroWeights&) = default;
};

// Weights uniform in [-0.1, 0.1], drawn in the order conv1_w, conv1_b, conv2_w,
// conv2_b, head_w, head_b from make_stream(seed, 0).
MicroWeights seeded_random_weights(const MicroDetConfig& cfg, std::uint64_t seed);

// Local-averaging preset: conv1 averages all channels and taps uniformly. conv2
// kernel k averages the K input maps at a single 3x3 tap (k = 0 is the uniform
// 3x3 average, k >= 1 cycle through the eight off-centre taps), so every kernel
// still sums to one but maps are shifted copies of one another. Class-0 head
// weights are a/K with bias b; the other class rows are zero with bias -10.
// Hence logit_0(cell) = a * (weighted mean brightness of its receptive field) + b.
MicroWeights brightness_weights(const MicroDetConfig& cfg, double a, double b);

struct MicroOutput {
    std::vector<Detection> detections;  // sorted by score, descending (stable)
    FeatureStack features;
};

class MicroDetector {
public:
    MicroDetector(MicroDetConfig cfg, MicroWeights weights);

    const MicroDetConfig& config() const noexcept { return cfg_; }
    const MicroWeights& weights() const noexcept { return w_; }

    MicroOutput forward(const Image& image) const;
    FeatureStack features(const Image& image) const;
    std::vector<Detection> detections_from_features(const FeatureStack& features) const;

    // Pre-sigmoid head output for one (cell, class).
    double class_logit(const FeatureStack& features, int cell_x, int cell_y, int class_id) const;

    // Gradient of det's logit with respect to every feature element. With the
    // 1x1 head it is w_head[class][i] at det's cell and zero elsewhere.
    GradientStack grad_logit_wrt_features(const Image& image, const Detection& det) const;

    // Cell whose anchor produced `box`.
    std::pair<int, int> cell_of(const BBox& box) const;
    BBox anchor_box(int cell_x, int cell_y) const;

    // Directory with one .f32t per layer plus manifest.json.
    void save(const std::filesystem::path& dir) const;
    static MicroDetector load(const std::filesystem::path& dir);

private:
    MicroDetConfig cfg_;
    MicroWeights w_;
};

class MicroAdapter final : public DetectorAdapter {
public:
    MicroAdapter(MicroDetector detector, std::string description);

    Capabilities capabilities() const override { return {true, true, true}; }
    InputShape input_shape() const override;
    bool concurrent() const override { return true; }
    std::string describe() const override { return description_; }

    std::vector<Detection> detect(const Image& image) override;
    FeatureStack features(const Image& image) override;
    GradientStack grad_features(const Image& image, const Detection& det) override;

    const MicroDetector& detector() const noexcept { return det_; }

private:
    MicroDetector det_;
    std::string description_;
};

MicroAdapter make_micro_adapter(const MicroDetConfig& cfg, const MicroWeights& weights,
                                std::string description = "micro");

}  // namespace xsal
