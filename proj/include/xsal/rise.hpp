#pragma once

#include <cstdint>
#include <vector>

#include "xsal/adapter.hpp"

namespace xsal {

using MaskStack = std::vector<Tensor2D>;

enum class RiseNormalization {
    scalar_p,   // divide by p_on * N
    empirical,  // divide by the per-pixel sum of the masks actually drawn
};

struct RiseConfig {
    int n_masks = 500;
    int grid = 8;
    double p_on = 0.1;
    std::uint64_t seed = 0;
    int batch = 24;
    RiseNormalization normalization = RiseNormalization::scalar_p;

    void validate() const;
};

// Coarse grid of mask `index` plus its crop offset. Mask i draws from its own
// stream make_stream(seed, i): grid*grid Bernoulli cells in row-major order,
// then the x and y crop offsets.
struct MaskDraw {
    Tensor2D cells;
    int offset_x = 0;
    int offset_y = 0;
};

MaskDraw draw_mask(const RiseConfig& cfg, int input_w, int input_h, std::size_t index);

// Upsamples the cells to (W + ceil(W/grid)) x (H + ceil(H/grid)) and crops W x H at the offset.
Tensor2D sample_mask(const RiseConfig& cfg, int input_w, int input_h, std::size_t index);
MaskStack sample_masks(const RiseConfig& cfg, int input_w, int input_h);

// Streaming sum of score-weighted masks in mask-index order. Identical input
// sequences give bitwise-identical maps however they were batched.
class RiseAccumulator {
public:
    RiseAccumulator(int width, int height, double p_on, RiseNormalization norm = RiseNormalization::scalar_p);

    void add(std::span<const Tensor2D> masks, std::span<const double> scores);
    std::size_t count() const noexcept { return count_; }
    Tensor2D saliency() const;

private:
    int width_;
    int height_;
    double p_on_;
    RiseNormalization norm_;
    std::size_t count_ = 0;
    std::vector<double> weighted_;
    std::vector<double> coverage_;
};

Tensor2D rise_saliency(DetectorAdapter& adapter, const Image& image, const Detection& target,
                       const RiseConfig& cfg = {});

}  // namespace xsal
