#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsal/adapter.hpp"
#include "xsal/causal_metrics.hpp"
#include "xsal/gradcam.hpp"
#include "xsal/rise.hpp"
#include "xsal/sidu.hpp"

namespace xsal {

// ---- PNG -------------------------------------------------------------------

// 8/16-bit grayscale or RGB PNG, scaled to [0,1]. Other colour types raise format-error.
Image read_png(const std::filesystem::path& path);
// 8-bit RGB (3 channels) or grayscale (1 channel), no interlace, fixed filter and compression.
std::string encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

// ---- preprocessing -----------------------------------------------------------

Image triplicate(const Image& gray);

// Reads a PNG, replicates single-channel input to three channels and resizes
// bilinearly to target_w x target_h.
Image load_image(const std::filesystem::path& path, int target_w = 512, int target_h = 512);

enum class Spectrum { RGB, NIR, MIR, FIR };
std::string to_string(Spectrum s);
Spectrum parse_spectrum(const std::string& s);

struct Annotation {
    BBox box;
    std::string class_name;
};

struct DatasetEntry {
    std::filesystem::path image_path;
    Spectrum spectrum = Spectrum::RGB;
    std::vector<Annotation> annotations;
};

// Image plus optional sidecar "<stem>.json":
//   {"spectrum":"NIR","objects":[{"box":[x1,y1,x2,y2],"class":"person"}]}
// Boxes must lie inside the raw image.
DatasetEntry load_entry(const std::filesystem::path& image_path, Spectrum fallback = Spectrum::RGB);
std::vector<DatasetEntry> scan_directory(const std::filesystem::path& dir, Spectrum fallback = Spectrum::RGB);

struct DatasetSplit {
    std::vector<DatasetEntry> test;
    std::vector<DatasetEntry> train;
};

// Seeded uniform shuffle; the first round(n * test_fraction) entries form the test set.
DatasetSplit split_dataset(std::vector<DatasetEntry> entries, std::uint64_t seed, double test_fraction = 0.2);

// ---- rendering -------------------------------------------------------------

// 256-entry jet table: r = clamp(1.5 - |4t - 3|), g = clamp(1.5 - |4t - 2|),
// b = clamp(1.5 - |4t - 1|) with t = i / 255.
const std::array<std::array<float, 3>, 256>& color_table();

// Min-max normalised saliency mapped through color_table, blended 50/50 over
// the image, with the target box outlined 2 px wide in green.
Image render_overlay(const Image& image, const Tensor2D& saliency, const BBox& target_box);

// ---- methods and manifests ---------------------------------------------------

enum class Method { gradcam, gradcam_norelu, rise, sidu };
std::string to_string(Method m);
Method parse_method(const std::string& s);
std::string display_name(Method m);

struct MethodConfigs {
    GradCamConfig gradcam;
    RiseConfig rise;
    SiduConfig sidu;
};

Tensor2D run_method(Method method, DetectorAdapter& adapter, const Image& image, const Detection& target,
                    const MethodConfigs& cfg);

nlohmann::json to_json(const GradCamConfig& c);
nlohmann::json to_json(const RiseConfig& c);
nlohmann::json to_json(const SiduConfig& c);
nlohmann::json to_json(const MetricConfig& c);
GradCamConfig gradcam_config_from_json(const nlohmann::json& j);
RiseConfig rise_config_from_json(const nlohmann::json& j);
SiduConfig sidu_config_from_json(const nlohmann::json& j);
MetricConfig metric_config_from_json(const nlohmann::json& j);

// Adapter specs:
//   micro:brightness[:a:b]   micro:random:SEED   micro:weights:DIR
//   constant:K               bridge   (command from $XSAL_BRIDGE_CMD)
//   bridge:cmd:COMMAND       bridge:tcp:HOST:PORT
// In-process adapters are sized to width x height.
std::unique_ptr<DetectorAdapter> make_adapter(const std::string& spec, int width, int height,
                                              int bridge_connections = 1);

// FNV-1a 64-bit digest in hex.
std::string digest_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

struct RunManifest {
    std::string method;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string adapter_spec;
    std::string adapter_description;
    std::filesystem::path input_path;
    std::string input_digest;
    int input_size = 512;
    Detection target;
    nlohmann::json outputs = nlohmann::json::object();
    nlohmann::json timings = nlohmann::json::object();

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void write(const std::filesystem::path& path) const;
    static RunManifest read(const std::filesystem::path& path);
};

// "0.22±0.24"
std::string format_mean_std(std::span<const double> values);
double mean_of(std::span<const double> values);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev_of(std::span<const double> values);

}  // namespace xsal
