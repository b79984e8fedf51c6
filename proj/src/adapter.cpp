#include "xsal/adapter.hpp"

#include <exception>
#include <mutex>

#include "xsal/error.hpp"

namespace xsal {

MapStack::MapStack(std::vector<Tensor2D> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw Error(ErrorCode::invalid_dimension, "map stack needs at least one map");
    for (const auto& m : maps_)
        if (m.width() != maps_[0].width() || m.height() != maps_[0].height())
            throw Error(ErrorCode::invalid_dimension, "maps in a stack must share one size");
}

bool MapStack::same_shape(const MapStack& other) const {
    return count() == other.count() && (count() == 0 || (width() == other.width() && height() == other.height()));
}

FeatureStack DetectorAdapter::features(const Image&) {
    throw Error(ErrorCode::capability_missing, describe() + " does not provide feature maps");
}

GradientStack DetectorAdapter::grad_features(const Image&, const Detection&) {
    throw Error(ErrorCode::capability_missing, describe() + " does not provide feature gradients");
}

void require_capability(const DetectorAdapter& adapter, bool Capabilities::*cap, const char* name) {
    if (!(adapter.capabilities().*cap))
        throw Error(ErrorCode::capability_missing, adapter.describe() + " lacks capability '" + name + "'");
}

void check_input(const DetectorAdapter& adapter, const Image& image) {
    const auto s = adapter.input_shape();
    if (image.width() != s.width || image.height() != s.height || image.channels() != s.channels)
        throw Error(ErrorCode::invalid_dimension, "image does not match the adapter input size");
}

double target_score(DetectorAdapter& adapter, const Image& image, const Detection& target,
                    const MatchOptions& opts) {
    check_input(adapter, image);
    const auto dets = adapter.detect(image);
    if (auto m = match_box(dets, target, opts)) return m->score;
    return 0.0;
}

Detection resolve_target(DetectorAdapter& adapter, const Image& image, const Detection& target,
                         const MatchOptions& opts) {
    check_input(adapter, image);
    const auto dets = adapter.detect(image);
    if (auto m = match_box(dets, target, opts)) return *m;
    throw Error(ErrorCode::no_match, "target detection not found on the unperturbed image");
}

std::vector<double> evaluate_scores(DetectorAdapter& adapter, std::size_t count,
                                    const std::function<Image(std::size_t)>& make_input, const Detection& target,
                                    const MatchOptions& opts) {
    std::vector<double> scores(count, 0.0);
    if (!adapter.concurrent()) {
        for (std::size_t i = 0; i < count; ++i) scores[i] = target_score(adapter, make_input(i), target, opts);
        return scores;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            scores[i] = target_score(adapter, make_input(static_cast<std::size_t>(i)), target, opts);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return scores;
}

ConstantAdapter::ConstantAdapter(InputShape shape, float score, BBox box) : shape_(shape) {
    if (!(score >= 0.0f && score <= 1.0f)) throw Error(ErrorCode::invalid_parameter, "score must lie in [0,1]");
    if (!box.valid()) box = {0.0f, 0.0f, static_cast<float>(shape.width), static_cast<float>(shape.height)};
    det_ = {box, 0, score};
}

std::string ConstantAdapter::describe() const { return "constant:" + std::to_string(det_.score); }

std::vector<Detection> ConstantAdapter::detect(const Image& image) {
    check_input(*this, image);
    return {det_};
}

}  // namespace xsal
