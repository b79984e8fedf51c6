#include "xsal/rise.hpp"

#include <algorithm>

#include "xsal/error.hpp"
#include "xsal/kernels.hpp"
#include "xsal/random.hpp"

namespace xsal {

void RiseConfig::validate() const {
    if (n_masks < 1) throw Error(ErrorCode::invalid_parameter, "n_masks must be >= 1");
    if (grid < 1) throw Error(ErrorCode::invalid_parameter, "grid must be >= 1");
    if (!(p_on >= 0.0 && p_on <= 1.0)) throw Error(ErrorCode::invalid_parameter, "p_on must lie in [0,1]");
    if (batch < 1) throw Error(ErrorCode::invalid_parameter, "batch must be >= 1");
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

MaskDraw draw_mask(const RiseConfig& cfg, int input_w, int input_h, std::size_t index) {
    cfg.validate();
    if (cfg.grid > input_w || cfg.grid > input_h)
        throw Error(ErrorCode::invalid_parameter, "mask grid is larger than the input");
    auto rng = make_stream(cfg.seed, index);
    MaskDraw d{Tensor2D(cfg.grid, cfg.grid), 0, 0};
    for (auto& v : d.cells.data()) v = uniform01(rng) < cfg.p_on ? 1.0f : 0.0f;
    d.offset_x = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(ceil_div(input_w, cfg.grid)) + 1));
    d.offset_y = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(ceil_div(input_h, cfg.grid)) + 1));
    return d;
}

Tensor2D sample_mask(const RiseConfig& cfg, int input_w, int input_h, std::size_t index) {
    const auto d = draw_mask(cfg, input_w, input_h, index);
    const int up_w = input_w + ceil_div(input_w, cfg.grid);
    const int up_h = input_h + ceil_div(input_h, cfg.grid);
    const auto up = bilinear_resize(d.cells, up_w, up_h);
    Tensor2D mask(input_w, input_h);
    for (int y = 0; y < input_h; ++y)
        for (int x = 0; x < input_w; ++x) mask.at(x, y) = up.at(x + d.offset_x, y + d.offset_y);
    return mask;
}

MaskStack sample_masks(const RiseConfig& cfg, int input_w, int input_h) {
    cfg.validate();
    // Checked here because nothing may throw out of the parallel loop.
    if (cfg.grid > input_w || cfg.grid > input_h)
        throw Error(ErrorCode::invalid_parameter, "mask grid is larger than the input");
    MaskStack masks(cfg.n_masks);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < cfg.n_masks; ++i) masks[i] = sample_mask(cfg, input_w, input_h, i);
    return masks;
}

RiseAccumulator::RiseAccumulator(int width, int height, double p_on, RiseNormalization norm)
    : width_(width), height_(height), p_on_(p_on), norm_(norm),
      weighted_(static_cast<std::size_t>(width) * height, 0.0) {
    if (norm_ == RiseNormalization::scalar_p && !(p_on_ > 0.0))
        throw Error(ErrorCode::invalid_parameter, "p_on = 0 leaves the RISE normalisation undefined");
    if (norm_ == RiseNormalization::empirical) coverage_.assign(weighted_.size(), 0.0);
}

void RiseAccumulator::add(std::span<const Tensor2D> masks, std::span<const double> scores) {
    if (masks.size() != scores.size()) throw Error(ErrorCode::invalid_dimension, "one score per mask required");
    std::vector<const float*> ptrs;
    ptrs.reserve(masks.size());
    for (const auto& m : masks) {
        if (m.width() != width_ || m.height() != height_)
            throw Error(ErrorCode::invalid_dimension, "mask size does not match the accumulator");
        ptrs.push_back(m.data().data());
    }
    kernels::weighted_accumulate(weighted_, ptrs, scores);
    if (norm_ == RiseNormalization::empirical) {
        const std::vector<double> ones(masks.size(), 1.0);
        kernels::weighted_accumulate(coverage_, ptrs, ones);
    }
    count_ += masks.size();
}

Tensor2D RiseAccumulator::saliency() const {
    Tensor2D out(width_, height_);
    if (count_ == 0) return out;
    if (norm_ == RiseNormalization::scalar_p) {
        const double denom = p_on_ * static_cast<double>(count_);
        for (std::size_t p = 0; p < weighted_.size(); ++p) out[p] = static_cast<float>(weighted_[p] / denom);
    } else {
        for (std::size_t p = 0; p < weighted_.size(); ++p)
            out[p] = coverage_[p] > 0.0 ? static_cast<float>(weighted_[p] / coverage_[p]) : 0.0f;
    }
    return out;
}

Tensor2D rise_saliency(DetectorAdapter& adapter, const Image& image, const Detection& target,
                       const RiseConfig& cfg) {
    cfg.validate();
    if (cfg.normalization == RiseNormalization::scalar_p && cfg.p_on == 0.0)
        throw Error(ErrorCode::invalid_parameter, "p_on = 0 leaves the RISE normalisation undefined");
    const int w = image.width();
    const int h = image.height();
    if (cfg.grid > w || cfg.grid > h) throw Error(ErrorCode::invalid_parameter, "mask grid is larger than the input");
    const Detection matched = resolve_target(adapter, image, target);

    RiseAccumulator acc(w, h, cfg.p_on, cfg.normalization);
    for (int start = 0; start < cfg.n_masks; start += cfg.batch) {
        const int count = std::min(cfg.batch, cfg.n_masks - start);
        MaskStack masks(count);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < count; ++i) masks[i] = sample_mask(cfg, w, h, static_cast<std::size_t>(start + i));
        const auto scores = evaluate_scores(
            adapter, masks.size(), [&](std::size_t i) { return hadamard_mask(image, masks[i]); }, matched);
        acc.add(masks, scores);
    }
    return acc.saliency();
}

}  // namespace xsal
