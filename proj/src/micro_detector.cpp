#include "xsal/micro_detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "xsal/error.hpp"
#include "xsal/f32t.hpp"
#include "xsal/kernels.hpp"
#include "xsal/random.hpp"

namespace xsal {

namespace {

constexpr int kConv1Kernel = 5;
constexpr int kConv2Kernel = 3;

kernels::ConvShape conv1_shape(const MicroDetConfig& cfg) {
    return {3, cfg.height, cfg.width, cfg.features, kConv1Kernel, 2, 2};
}

kernels::ConvShape conv2_shape(const MicroDetConfig& cfg) {
    return {cfg.features, cfg.height / 2, cfg.width / 2, cfg.features, kConv2Kernel, 2, 1};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_sizes(const MicroDetConfig& cfg, const MicroWeights& w) {
    const std::size_t k = cfg.features;
    const std::size_t c = cfg.classes + 1;
    if (w.conv1_w.size() != k * 3 * 25 || w.conv1_b.size() != k || w.conv2_w.size() != k * k * 9 ||
        w.conv2_b.size() != k || w.head_w.size() != c * k || w.head_b.size() != c)
        throw Error(ErrorCode::invalid_dimension, "micro-detector weights do not match the configuration");
    auto finite = [](const std::vector<float>& v) {
        return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
    };
    if (!finite(w.conv1_w) || !finite(w.conv1_b) || !finite(w.conv2_w) || !finite(w.conv2_b) ||
        !finite(w.head_w) || !finite(w.head_b))
        throw Error(ErrorCode::invalid_parameter, "micro-detector weights must be finite");
}

}  // namespace

void MicroDetConfig::validate() const {
    if (width < 4 || height < 4 || width % 4 != 0 || height % 4 != 0)
        throw Error(ErrorCode::invalid_dimension, "micro-detector input sides must be positive multiples of 4");
    if (features < 1 || classes < 1) throw Error(ErrorCode::invalid_parameter, "need K >= 1 and C >= 1");
}

MicroWeights seeded_random_weights(const MicroDetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    auto rng = make_stream(seed, 0);
    auto fill = [&](std::size_t n) {
        std::vector<float> v(n);
        for (auto& x : v) x = static_cast<float>(-0.1 + 0.2 * uniform01(rng));
        return v;
    };
    const std::size_t k = cfg.features;
    const std::size_t c = cfg.classes + 1;
    MicroWeights w;
    w.conv1_w = fill(k * 3 * 25);
    w.conv1_b = fill(k);
    w.conv2_w = fill(k * k * 9);
    w.conv2_b = fill(k);
    w.head_w = fill(c * k);
    w.head_b = fill(c);
    return w;
}

MicroWeights brightness_weights(const MicroDetConfig& cfg, double a, double b) {
    cfg.validate();
    const int k = cfg.features;
    const int c = cfg.classes + 1;
    MicroWeights w;
    w.conv1_w.assign(static_cast<std::size_t>(k) * 3 * 25, static_cast<float>(1.0 / (3.0 * 25.0)));
    w.conv1_b.assign(k, 0.0f);
    w.conv2_w.assign(static_cast<std::size_t>(k) * k * 9, 0.0f);
    w.conv2_b.assign(k, 0.0f);
    // Off-centre taps of the 3x3 window in row-major order.
    constexpr int kOffCentre[8] = {0, 1, 2, 3, 5, 6, 7, 8};
    for (int oc = 0; oc < k; ++oc) {
        for (int ic = 0; ic < k; ++ic) {
            float* kern = w.conv2_w.data() + (static_cast<std::size_t>(oc) * k + ic) * 9;
            if (oc == 0) {
                std::fill(kern, kern + 9, static_cast<float>(1.0 / (9.0 * k)));
            } else {
                kern[kOffCentre[(oc - 1) % 8]] = static_cast<float>(1.0 / k);
            }
        }
    }
    w.head_w.assign(static_cast<std::size_t>(c) * k, 0.0f);
    std::fill(w.head_w.begin(), w.head_w.begin() + k, static_cast<float>(a / k));
    w.head_b.assign(c, -10.0f);
    w.head_b[0] = static_cast<float>(b);
    return w;
}

MicroDetector::MicroDetector(MicroDetConfig cfg, MicroWeights weights) : cfg_(cfg), w_(std::move(weights)) {
    cfg_.validate();
    check_sizes(cfg_, w_);
}

FeatureStack MicroDetector::features(const Image& image) const {
    if (image.width() != cfg_.width || image.height() != cfg_.height || image.channels() != 3)
        throw Error(ErrorCode::invalid_dimension, "image does not match the micro-detector input");
    const auto s1 = conv1_shape(cfg_);
    std::vector<float> hidden(static_cast<std::size_t>(s1.out_channels) * s1.out_height() * s1.out_width());
    kernels::conv2d_relu(s1, image.data(), w_.conv1_w, w_.conv1_b, hidden);
    const auto s2 = conv2_shape(cfg_);
    const int gw = s2.out_width();
    const int gh = s2.out_height();
    std::vector<float> out(static_cast<std::size_t>(s2.out_channels) * gw * gh);
    kernels::conv2d_relu(s2, hidden, w_.conv2_w, w_.conv2_b, out);
    std::vector<Tensor2D> maps;
    maps.reserve(cfg_.features);
    const std::size_t plane = static_cast<std::size_t>(gw) * gh;
    for (int i = 0; i < cfg_.features; ++i)
        maps.emplace_back(gw, gh, std::vector<float>(out.begin() + i * plane, out.begin() + (i + 1) * plane));
    return FeatureStack(std::move(maps));
}

double MicroDetector::class_logit(const FeatureStack& features, int cell_x, int cell_y, int class_id) const {
    const int k = cfg_.features;
    double acc = w_.head_b[class_id];
    for (int i = 0; i < k; ++i)
        acc += static_cast<double>(w_.head_w[static_cast<std::size_t>(class_id) * k + i]) *
               features[i].at(cell_x, cell_y);
    return acc;
}

BBox MicroDetector::anchor_box(int cell_x, int cell_y) const {
    const float cx = (cell_x + 0.5f) * MicroDetConfig::cell_stride;
    const float cy = (cell_y + 0.5f) * MicroDetConfig::cell_stride;
    const float half = MicroDetConfig::anchor_side / 2.0f;
    return {cx - half, cy - half, cx + half, cy + half};
}

std::pair<int, int> MicroDetector::cell_of(const BBox& box) const {
    const double cx = 0.5 * (static_cast<double>(box.x1) + box.x2) / MicroDetConfig::cell_stride - 0.5;
    const double cy = 0.5 * (static_cast<double>(box.y1) + box.y2) / MicroDetConfig::cell_stride - 0.5;
    const int x = static_cast<int>(std::lround(cx));
    const int y = static_cast<int>(std::lround(cy));
    if (x < 0 || y < 0 || x >= cfg_.grid_w() || y >= cfg_.grid_h())
        throw Error(ErrorCode::invalid_parameter, "box does not correspond to a micro-detector cell");
    return {x, y};
}

std::vector<Detection> MicroDetector::detections_from_features(const FeatureStack& features) const {
    const int gw = cfg_.grid_w();
    const int gh = cfg_.grid_h();
    std::vector<Detection> dets;
    dets.reserve(static_cast<std::size_t>(gw) * gh * cfg_.classes);
    for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x)
            for (int c = 0; c < cfg_.classes; ++c)
                dets.push_back({anchor_box(x, y), c, static_cast<float>(sigmoid(class_logit(features, x, y, c)))});
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
    return dets;
}

MicroOutput MicroDetector::forward(const Image& image) const {
    auto f = features(image);
    auto dets = detections_from_features(f);
    return {std::move(dets), std::move(f)};
}

GradientStack MicroDetector::grad_logit_wrt_features(const Image& image, const Detection& det) const {
    if (det.class_id < 0 || det.class_id >= cfg_.classes)
        throw Error(ErrorCode::invalid_parameter, "class id outside the micro-detector head");
    if (image.width() != cfg_.width || image.height() != cfg_.height)
        throw Error(ErrorCode::invalid_dimension, "image does not match the micro-detector input");
    const auto [cx, cy] = cell_of(det.box);
    std::vector<Tensor2D> grads;
    grads.reserve(cfg_.features);
    for (int i = 0; i < cfg_.features; ++i) {
        Tensor2D g(cfg_.grid_w(), cfg_.grid_h());
        g.at(cx, cy) = w_.head_w[static_cast<std::size_t>(det.class_id) * cfg_.features + i];
        grads.push_back(std::move(g));
    }
    return GradientStack(std::move(grads));
}

namespace {

struct LayerSpec {
    const char* name;
    std::vector<float> MicroWeights::*member;
};

constexpr LayerSpec kLayers[] = {
    {"conv1.weight", &MicroWeights::conv1_w}, {"conv1.bias", &MicroWeights::conv1_b},
    {"conv2.weight", &MicroWeights::conv2_w}, {"conv2.bias", &MicroWeights::conv2_b},
    {"head.weight", &MicroWeights::head_w},   {"head.bias", &MicroWeights::head_b},
};

std::vector<int> logical_shape(const MicroDetConfig& cfg, const std::string& name) {
    const int k = cfg.features;
    const int c = cfg.classes + 1;
    if (name == "conv1.weight") return {k, 3, 5, 5};
    if (name == "conv2.weight") return {k, k, 3, 3};
    if (name == "head.weight") return {c, k, 1, 1};
    if (name == "head.bias") return {c};
    return {k};
}

}  // namespace

void MicroDetector::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["model"] = "micro-detector";
    manifest["config"] = {{"width", cfg_.width}, {"height", cfg_.height}, {"features", cfg_.features},
                          {"classes", cfg_.classes}};
    manifest["layers"] = nlohmann::json::array();
    for (const auto& layer : kLayers) {
        const auto& values = w_.*layer.member;
        const auto shape = logical_shape(cfg_, layer.name);
        // f32t carries three dims: (out, in, taps) for weights, (1, 1, n) for biases.
        F32Tensor t;
        if (shape.size() == 4) {
            t = {static_cast<std::uint32_t>(shape[0]), static_cast<std::uint32_t>(shape[1]),
                 static_cast<std::uint32_t>(shape[2] * shape[3]), values};
        } else {
            t = {1, 1, static_cast<std::uint32_t>(values.size()), values};
        }
        const std::string file = std::string(layer.name) + ".f32t";
        write_f32t(dir / file, t);
        manifest["layers"].push_back({{"name", layer.name}, {"shape", shape}, {"file", file}});
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error(ErrorCode::io_error, "cannot write micro-detector manifest");
    out << manifest.dump(2) << "\n";
}

MicroDetector MicroDetector::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw Error(ErrorCode::io_error, "missing manifest.json in " + dir.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format_error, std::string("bad micro-detector manifest: ") + e.what());
    }
    MicroDetConfig cfg;
    const auto& c = manifest.at("config");
    cfg.width = c.at("width");
    cfg.height = c.at("height");
    cfg.features = c.at("features");
    cfg.classes = c.at("classes");
    MicroWeights w;
    for (const auto& layer : manifest.at("layers")) {
        const std::string name = layer.at("name");
        const auto it = std::find_if(std::begin(kLayers), std::end(kLayers),
                                     [&](const LayerSpec& s) { return name == s.name; });
        if (it == std::end(kLayers)) throw Error(ErrorCode::format_error, "unknown layer " + name);
        w.*(it->member) = read_f32t(dir / layer.at("file").get<std::string>()).data;
    }
    return MicroDetector(cfg, std::move(w));
}

MicroAdapter::MicroAdapter(MicroDetector detector, std::string description)
    : det_(std::move(detector)), description_(std::move(description)) {}

InputShape MicroAdapter::input_shape() const { return {3, det_.config().height, det_.config().width}; }

std::vector<Detection> MicroAdapter::detect(const Image& image) { return det_.forward(image).detections; }

FeatureStack MicroAdapter::features(const Image& image) { return det_.features(image); }

GradientStack MicroAdapter::grad_features(const Image& image, const Detection& det) {
    return det_.grad_logit_wrt_features(image, det);
}

MicroAdapter make_micro_adapter(const MicroDetConfig& cfg, const MicroWeights& weights, std::string description) {
    return MicroAdapter(MicroDetector(cfg, weights), std::move(description));
}

}  // namespace xsal
