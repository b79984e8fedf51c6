#include "xsal/causal_metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "xsal/error.hpp"
#include "xsal/random.hpp"

namespace xsal {

void MetricConfig::validate() const {
    if (steps < 1) throw Error(ErrorCode::invalid_parameter, "metric steps must be >= 1");
    if (!(deletion_fill >= 0.0f && deletion_fill <= 1.0f))
        throw Error(ErrorCode::invalid_parameter, "deletion fill must lie in [0,1]");
}

std::vector<std::size_t> pixel_order(const Tensor2D& saliency) {
    std::vector<std::size_t> order(saliency.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return saliency[a] > saliency[b]; });
    return order;
}

std::size_t pixels_at_step(std::size_t k, std::size_t n, int steps) {
    return k * n / static_cast<std::size_t>(steps);
}

namespace {

void check_order(std::span<const std::size_t> order, const Image& image) {
    if (order.size() != image.plane_size())
        throw Error(ErrorCode::invalid_dimension, "pixel ordering must cover every pixel exactly once");
}

// Curve from `start` towards `finish`: at step k the first pixels_at_step(k)
// pixels of `order` take their value from `finish`.
Curve morph_curve(DetectorAdapter& adapter, const Image& start, const Image& finish, const Detection& target,
                  std::span<const std::size_t> order, int steps) {
    const std::size_t n = start.plane_size();
    auto make_step = [&](std::size_t k) {
        Image img = start;
        const std::size_t count = pixels_at_step(k, n, steps);
        for (int c = 0; c < img.channels(); ++c) {
            auto dst = img.plane(c);
            const auto src = finish.plane(c);
            for (std::size_t j = 0; j < count; ++j) dst[order[j]] = src[order[j]];
        }
        return img;
    };
    const auto scores = evaluate_scores(adapter, static_cast<std::size_t>(steps) + 1, make_step, target);
    Curve curve(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k)
        curve[k] = {static_cast<double>(k) / static_cast<double>(steps), scores[k]};
    return curve;
}

Image insertion_start(const Image& image, const MetricConfig& cfg) {
    if (cfg.insertion_base == InsertionBase::fill)
        return Image(image.width(), image.height(), image.channels(), cfg.deletion_fill);
    return gaussian_blur(image, cfg.blur_sigma, cfg.blur_radius);
}

}  // namespace

Curve deletion_curve_for_order(DetectorAdapter& adapter, const Image& image, const Detection& target,
                               std::span<const std::size_t> order, const MetricConfig& cfg) {
    cfg.validate();
    check_order(order, image);
    const Image filled(image.width(), image.height(), image.channels(), cfg.deletion_fill);
    return morph_curve(adapter, image, filled, target, order, cfg.steps);
}

Curve insertion_curve_for_order(DetectorAdapter& adapter, const Image& image, const Detection& target,
                                std::span<const std::size_t> order, const MetricConfig& cfg) {
    cfg.validate();
    check_order(order, image);
    return morph_curve(adapter, insertion_start(image, cfg), image, target, order, cfg.steps);
}

Curve deletion_curve(DetectorAdapter& adapter, const Image& image, const Detection& target,
                     const Tensor2D& saliency, const MetricConfig& cfg) {
    if (saliency.width() != image.width() || saliency.height() != image.height())
        throw Error(ErrorCode::invalid_dimension, "saliency map and image differ in size");
    return deletion_curve_for_order(adapter, image, target, pixel_order(saliency), cfg);
}

Curve insertion_curve(DetectorAdapter& adapter, const Image& image, const Detection& target,
                      const Tensor2D& saliency, const MetricConfig& cfg) {
    if (saliency.width() != image.width() || saliency.height() != image.height())
        throw Error(ErrorCode::invalid_dimension, "saliency map and image differ in size");
    return insertion_curve_for_order(adapter, image, target, pixel_order(saliency), cfg);
}

double auc(const Curve& curve) {
    double area = 0.0;
    for (std::size_t k = 1; k < curve.size(); ++k)
        area += 0.5 * (curve[k].score + curve[k - 1].score) * (curve[k].fraction - curve[k - 1].fraction);
    return area;
}

AucPair mean_auc_over_orders(DetectorAdapter& adapter, const Image& image, const Detection& target,
                             std::span<const std::vector<std::size_t>> orders, const MetricConfig& cfg) {
    if (orders.empty()) throw Error(ErrorCode::invalid_parameter, "need at least one ordering");
    AucPair mean;
    for (const auto& order : orders) {
        mean.deletion += auc(deletion_curve_for_order(adapter, image, target, order, cfg));
        mean.insertion += auc(insertion_curve_for_order(adapter, image, target, order, cfg));
    }
    mean.deletion /= static_cast<double>(orders.size());
    mean.insertion /= static_cast<double>(orders.size());
    return mean;
}

AucPair random_baseline(DetectorAdapter& adapter, const Image& image, const Detection& target,
                        const MetricConfig& cfg, std::uint64_t seed, int trials) {
    if (trials < 1) throw Error(ErrorCode::invalid_parameter, "trials must be >= 1");
    std::vector<std::vector<std::size_t>> orders;
    orders.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        auto rng = make_stream(seed, static_cast<std::uint64_t>(t));
        orders.push_back(random_permutation(rng, image.plane_size()));
    }
    return mean_auc_over_orders(adapter, image, target, orders, cfg);
}

std::string curve_to_csv(const Curve& curve) {
    std::string out = "fraction,score\n";
    char line[64];
    for (const auto& p : curve) {
        std::snprintf(line, sizeof line, "%.6f,%.9g\n", p.fraction, p.score);
        out += line;
    }
    return out;
}

void write_curve_csv(const std::filesystem::path& path, const Curve& curve) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out << curve_to_csv(curve);
}

}  // namespace xsal
