#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "xsal/detection.hpp"
#include "xsal/tensor.hpp"

namespace xsal {

struct Capabilities {
    bool detect = true;
    bool features = false;
    bool grad_features = false;

    friend bool operator==(const Capabilities&, const Capabilities&) = default;
};

struct InputShape {
    int channels = 3;
    int height = 0;
    int width = 0;

    friend bool operator==(const InputShape&, const InputShape&) = default;
};

// N maps of one spatial size: the activations of the last convolution layer,
// or the gradient of a detection logit with respect to them.
class MapStack {
public:
    MapStack() = default;
    explicit MapStack(std::vector<Tensor2D> maps);

    std::size_t count() const noexcept { return maps_.size(); }
    int width() const { return maps_.front().width(); }
    int height() const { return maps_.front().height(); }
    const Tensor2D& operator[](std::size_t i) const { return maps_[i]; }
    const std::vector<Tensor2D>& maps() const noexcept { return maps_; }
    bool same_shape(const MapStack& other) const;

private:
    std::vector<Tensor2D> maps_;
};

using FeatureStack = MapStack;
using GradientStack = MapStack;

// Network output vector p: either the matched box score (length 1) or per-class scores.
using ScoreVector = std::vector<double>;

// Capability contract for anything that can be explained. Adapters that are
// not safe to call from several threads at once must return false from
// concurrent(); the engine then evaluates sequentially.
class DetectorAdapter {
public:
    virtual ~DetectorAdapter() = default;

    virtual Capabilities capabilities() const = 0;
    virtual InputShape input_shape() const = 0;
    virtual bool concurrent() const { return false; }
    virtual std::string describe() const = 0;

    virtual std::vector<Detection> detect(const Image& image) = 0;
    virtual FeatureStack features(const Image& image);
    // Gradient of the pre-sigmoid score of `det` (as produced by detect on this image).
    virtual GradientStack grad_features(const Image& image, const Detection& det);
};

void require_capability(const DetectorAdapter& adapter, bool Capabilities::*cap, const char* name);
void check_input(const DetectorAdapter& adapter, const Image& image);

// Detects and re-identifies the target; 0 when it cannot be found again.
double target_score(DetectorAdapter& adapter, const Image& image, const Detection& target,
                    const MatchOptions& opts = {});

// Detects on the unperturbed image and returns the detection matching `target`;
// throws no-match when it is absent.
Detection resolve_target(DetectorAdapter& adapter, const Image& image, const Detection& target,
                         const MatchOptions& opts = {});

// Evaluates target_score on count generated inputs. Runs in parallel when the
// adapter allows it; result i always belongs to input i.
std::vector<double> evaluate_scores(DetectorAdapter& adapter, std::size_t count,
                                    const std::function<Image(std::size_t)>& make_input, const Detection& target,
                                    const MatchOptions& opts = {});

// Adapter returning one fixed detection with a constant score for any input.
class ConstantAdapter final : public DetectorAdapter {
public:
    ConstantAdapter(InputShape shape, float score, BBox box = {});

    Capabilities capabilities() const override { return {}; }
    InputShape input_shape() const override { return shape_; }
    bool concurrent() const override { return true; }
    std::string describe() const override;
    std::vector<Detection> detect(const Image& image) override;

private:
    InputShape shape_;
    Detection det_;
};

}  // namespace xsal
