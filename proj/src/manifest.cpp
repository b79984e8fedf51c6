#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "xsal/bridge.hpp"
#include "xsal/error.hpp"
#include "xsal/micro_detector.hpp"
#include "xsal/pipeline.hpp"

namespace xsal {

std::string to_string(Method m) {
    switch (m) {
        case Method::gradcam: return "gradcam";
        case Method::gradcam_norelu: return "gradcam-norelu";
        case Method::rise: return "rise";
        case Method::sidu: return "sidu";
    }
    return "gradcam";
}

Method parse_method(const std::string& s) {
    if (s == "gradcam") return Method::gradcam;
    if (s == "gradcam-norelu") return Method::gradcam_norelu;
    if (s == "rise") return Method::rise;
    if (s == "sidu") return Method::sidu;
    throw Error(ErrorCode::invalid_parameter, "unknown method '" + s + "'");
}

std::string display_name(Method m) {
    switch (m) {
        case Method::gradcam: return "Grad-CAM";
        case Method::gradcam_norelu: return "Grad-CAM (no ReLU)";
        case Method::rise: return "RISE";
        case Method::sidu: return "SIDU";
    }
    return "";
}

Tensor2D run_method(Method method, DetectorAdapter& adapter, const Image& image, const Detection& target,
                    const MethodConfigs& cfg) {
    switch (method) {
        case Method::gradcam: return gradcam_saliency(adapter, image, target, cfg.gradcam);
        case Method::gradcam_norelu: {
            auto c = cfg.gradcam;
            c.apply_relu = false;
            return gradcam_saliency(adapter, image, target, c);
        }
        case Method::rise: return rise_saliency(adapter, image, target, cfg.rise);
        case Method::sidu: return sidu_saliency(adapter, image, target, cfg.sidu);
    }
    throw Error(ErrorCode::invalid_parameter, "unknown method");
}

nlohmann::json to_json(const GradCamConfig& c) {
    return {{"apply_relu", c.apply_relu},
            {"relu_placement", c.relu_placement == ReluPlacement::per_term ? "per_term" : "after_sum"},
            {"upsample_to_input", c.upsample_to_input}};
}

nlohmann::json to_json(const RiseConfig& c) {
    return {{"n_masks", c.n_masks},
            {"grid", c.grid},
            {"p_on", c.p_on},
            {"seed", c.seed},
            {"batch", c.batch},
            {"normalization", c.normalization == RiseNormalization::scalar_p ? "scalar_p" : "empirical"}};
}

nlohmann::json to_json(const SiduConfig& c) {
    return {{"sigma", c.sigma},
            {"binarize", c.binarize},
            {"bin_threshold", c.bin_threshold},
            {"norm", "euclidean"},
            {"score_mode", c.score_mode == SiduScoreMode::matched_score ? "matched_score" : "class_vector"}};
}

nlohmann::json to_json(const MetricConfig& c) {
    return {{"steps", c.steps},
            {"deletion_fill", c.deletion_fill},
            {"insertion_base", c.insertion_base == InsertionBase::blur ? "blur" : "fill"},
            {"blur_sigma", c.blur_sigma},
            {"blur_radius", c.blur_radius},
            {"tie_rule", "row_major_index"}};
}

GradCamConfig gradcam_config_from_json(const nlohmann::json& j) {
    GradCamConfig c;
    c.apply_relu = j.value("apply_relu", c.apply_relu);
    c.relu_placement = j.value("relu_placement", std::string("per_term")) == "after_sum" ? ReluPlacement::after_sum
                                                                                         : ReluPlacement::per_term;
    c.upsample_to_input = j.value("upsample_to_input", c.upsample_to_input);
    return c;
}

RiseConfig rise_config_from_json(const nlohmann::json& j) {
    RiseConfig c;
    c.n_masks = j.value("n_masks", c.n_masks);
    c.grid = j.value("grid", c.grid);
    c.p_on = j.value("p_on", c.p_on);
    c.seed = j.value("seed", c.seed);
    c.batch = j.value("batch", c.batch);
    c.normalization = j.value("normalization", std::string("scalar_p")) == "empirical" ? RiseNormalization::empirical
                                                                                      : RiseNormalization::scalar_p;
    return c;
}

SiduConfig sidu_config_from_json(const nlohmann::json& j) {
    SiduConfig c;
    c.sigma = j.value("sigma", c.sigma);
    c.binarize = j.value("binarize", c.binarize);
    c.bin_threshold = j.value("bin_threshold", c.bin_threshold);
    c.score_mode = j.value("score_mode", std::string("matched_score")) == "class_vector" ? SiduScoreMode::class_vector
                                                                                         : SiduScoreMode::matched_score;
    return c;
}

MetricConfig metric_config_from_json(const nlohmann::json& j) {
    MetricConfig c;
    c.steps = j.value("steps", c.steps);
    c.deletion_fill = j.value("deletion_fill", c.deletion_fill);
    c.insertion_base = j.value("insertion_base", std::string("blur")) == "fill" ? InsertionBase::fill : InsertionBase::blur;
    c.blur_sigma = j.value("blur_sigma", c.blur_sigma);
    c.blur_radius = j.value("blur_radius", c.blur_radius);
    return c;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep, std::size_t max_parts) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (parts.size() + 1 < max_parts) {
        const auto pos = s.find(sep, start);
        if (pos == std::string::npos) break;
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    parts.push_back(s.substr(start));
    return parts;
}

double parse_double(const std::string& s, const std::string& spec) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_parameter, "bad number '" + s + "' in adapter spec '" + spec + "'");
}

}  // namespace

std::unique_ptr<DetectorAdapter> make_adapter(const std::string& spec, int width, int height,
                                              int bridge_connections) {
    const auto parts = split(spec, ':', 3);
    const auto& kind = parts[0];
    if (kind == "micro") {
        MicroDetConfig cfg;
        cfg.width = width;
        cfg.height = height;
        const std::string preset = parts.size() > 1 ? parts[1] : "brightness";
        if (preset == "brightness") {
            double a = 8.0;
            double b = -4.0;
            if (parts.size() > 2) {
                const auto ab = split(parts[2], ':', 2);
                if (ab.size() != 2) throw Error(ErrorCode::invalid_parameter, "expected micro:brightness:A:B");
                a = parse_double(ab[0], spec);
                b = parse_double(ab[1], spec);
            }
            return std::make_unique<MicroAdapter>(make_micro_adapter(cfg, brightness_weights(cfg, a, b), spec));
        }
        if (preset == "random") {
            if (parts.size() < 3) throw Error(ErrorCode::invalid_parameter, "expected micro:random:SEED");
            std::uint64_t seed = 0;
            const auto& text = parts[2];
            const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
            if (ec != std::errc{} || end != text.data() + text.size())
                throw Error(ErrorCode::invalid_parameter, "bad seed in '" + spec + "'");
            return std::make_unique<MicroAdapter>(make_micro_adapter(cfg, seeded_random_weights(cfg, seed), spec));
        }
        if (preset == "weights" && parts.size() > 2) {
            auto det = MicroDetector::load(parts[2]);
            if (det.config().width != width || det.config().height != height)
                throw Error(ErrorCode::invalid_dimension, "stored micro-detector expects a different input size");
            return std::make_unique<MicroAdapter>(std::move(det), spec);
        }
        throw Error(ErrorCode::invalid_parameter, "unknown micro preset in '" + spec + "'");
    }
    if (kind == "constant" && parts.size() == 2) {
        return std::make_unique<ConstantAdapter>(InputShape{3, height, width},
                                                 static_cast<float>(parse_double(parts[1], spec)));
    }
    if (kind == "bridge") {
        if (parts.size() == 1) {
            const char* cmd = std::getenv("XSAL_BRIDGE_CMD");
            if (!cmd || !*cmd) throw Error(ErrorCode::invalid_parameter, "XSAL_BRIDGE_CMD is not set");
            return bridge::BridgeAdapter::spawn(cmd, bridge_connections);
        }
        if (parts[1] == "cmd" && parts.size() == 3) return bridge::BridgeAdapter::spawn(parts[2], bridge_connections);
        if (parts[1] == "tcp" && parts.size() == 3) {
            const auto pos = parts[2].rfind(':');
            if (pos == std::string::npos) throw Error(ErrorCode::invalid_parameter, "expected bridge:tcp:HOST:PORT");
            return bridge::BridgeAdapter::tcp(parts[2].substr(0, pos),
                                              static_cast<int>(parse_double(parts[2].substr(pos + 1), spec)),
                                              bridge_connections);
        }
    }
    throw Error(ErrorCode::invalid_parameter, "unrecognised adapter spec '" + spec + "'");
}

std::string digest_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return digest_hex(ss.str());
}

nlohmann::json RunManifest::to_json() const {
    return {{"method", method},
            {"config", config},
            {"seed", seed},
            {"adapter", {{"spec", adapter_spec}, {"description", adapter_description}}},
            {"input", {{"path", input_path.string()}, {"digest", input_digest}, {"size", input_size}}},
            {"target", xsal::to_json(target)},
            {"outputs", outputs},
            {"timings", timings}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.method = j.at("method").get<std::string>();
        m.config = j.at("config");
        m.seed = j.value("seed", std::uint64_t{0});
        m.adapter_spec = j.at("adapter").at("spec").get<std::string>();
        m.adapter_description = j.at("adapter").value("description", std::string());
        m.input_path = j.at("input").at("path").get<std::string>();
        m.input_digest = j.at("input").value("digest", std::string());
        m.input_size = j.at("input").value("size", 512);
        m.target = detection_from_json(j.at("target"));
        m.outputs = j.value("outputs", nlohmann::json::object());
        m.timings = j.value("timings", nlohmann::json::object());
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format_error, std::string("bad manifest: ") + e.what());
    }
}

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out << to_json().dump(2) << "\n";
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format_error, std::string("bad manifest: ") + e.what());
    }
    return from_json(j);
}

}  // namespace xsal
