#include "xsal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <png.h>

#include "xsal/error.hpp"
#include "xsal/random.hpp"

namespace xsal {

Image triplicate(const Image& gray) {
    if (gray.channels() == 3) return gray;
    Image out(gray.width(), gray.height(), 3);
    for (int c = 0; c < 3; ++c) std::copy(gray.plane(0).begin(), gray.plane(0).end(), out.plane(c).begin());
    return out;
}

Image load_image(const std::filesystem::path& path, int target_w, int target_h) {
    return bilinear_resize(triplicate(read_png(path)), target_w, target_h);
}

std::string to_string(Spectrum s) {
    switch (s) {
        case Spectrum::RGB: return "RGB";
        case Spectrum::NIR: return "NIR";
        case Spectrum::MIR: return "MIR";
        case Spectrum::FIR: return "FIR";
    }
    return "RGB";
}

Spectrum parse_spectrum(const std::string& s) {
    if (s == "RGB") return Spectrum::RGB;
    if (s == "NIR") return Spectrum::NIR;
    if (s == "MIR") return Spectrum::MIR;
    if (s == "FIR") return Spectrum::FIR;
    throw Error(ErrorCode::invalid_parameter, "unknown spectrum '" + s + "' (expected RGB, NIR, MIR or FIR)");
}

namespace {

std::pair<int, int> png_size(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char header[24];
    if (!in.read(header, sizeof header) || png_sig_cmp(reinterpret_cast<png_const_bytep>(header), 0, 8) != 0)
        throw Error(ErrorCode::format_error, path.string() + " is not a PNG file");
    auto be32 = [&](int off) {
        return (static_cast<unsigned>(static_cast<unsigned char>(header[off])) << 24) |
               (static_cast<unsigned>(static_cast<unsigned char>(header[off + 1])) << 16) |
               (static_cast<unsigned>(static_cast<unsigned char>(header[off + 2])) << 8) |
               static_cast<unsigned>(static_cast<unsigned char>(header[off + 3]));
    };
    return {static_cast<int>(be32(16)), static_cast<int>(be32(20))};
}

}  // namespace

DatasetEntry load_entry(const std::filesystem::path& image_path, Spectrum fallback) {
    DatasetEntry entry{image_path, fallback, {}};
    auto sidecar = image_path;
    sidecar.replace_extension(".json");
    if (!std::filesystem::exists(sidecar)) return entry;
    std::ifstream in(sidecar);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format_error, sidecar.string() + ": " + e.what());
    }
    if (j.contains("spectrum")) entry.spectrum = parse_spectrum(j.at("spectrum").get<std::string>());
    const auto [w, h] = png_size(image_path);
    for (const auto& obj : j.value("objects", nlohmann::json::array())) {
        const auto& b = obj.at("box");
        Annotation a{{b.at(0).get<float>(), b.at(1).get<float>(), b.at(2).get<float>(), b.at(3).get<float>()},
                     obj.value("class", std::string("unknown"))};
        if (!a.box.valid() || a.box.x1 < 0 || a.box.y1 < 0 || a.box.x2 > w || a.box.y2 > h)
            throw Error(ErrorCode::format_error, sidecar.string() + ": annotation box outside the image");
        entry.annotations.push_back(std::move(a));
    }
    return entry;
}

std::vector<DatasetEntry> scan_directory(const std::filesystem::path& dir, Spectrum fallback) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::io_error, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    std::vector<DatasetEntry> entries;
    for (const auto& p : paths) entries.push_back(load_entry(p, fallback));
    return entries;
}

DatasetSplit split_dataset(std::vector<DatasetEntry> entries, std::uint64_t seed, double test_fraction) {
    if (entries.size() < 5) throw Error(ErrorCode::invalid_parameter, "splitting needs at least 5 entries");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(ErrorCode::invalid_parameter, "test fraction must lie in (0,1)");
    auto rng = make_stream(seed, 0);
    const auto perm = random_permutation(rng, entries.size());
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(entries.size())));
    DatasetSplit split;
    for (std::size_t i = 0; i < perm.size(); ++i)
        (i < n_test ? split.test : split.train).push_back(std::move(entries[perm[i]]));
    return split;
}

const std::array<std::array<float, 3>, 256>& color_table() {
    static const auto table = [] {
        std::array<std::array<float, 3>, 256> t{};
        auto ramp = [](double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); };
        for (int i = 0; i < 256; ++i) {
            const double x = i / 255.0;
            t[i] = {ramp(1.5 - std::abs(4.0 * x - 3.0)), ramp(1.5 - std::abs(4.0 * x - 2.0)),
                    ramp(1.5 - std::abs(4.0 * x - 1.0))};
        }
        return t;
    }();
    return table;
}

Image render_overlay(const Image& image, const Tensor2D& saliency, const BBox& target_box) {
    if (saliency.width() != image.width() || saliency.height() != image.height())
        throw Error(ErrorCode::invalid_dimension, "saliency map and image differ in size");
    const Image rgb = triplicate(image);
    const auto norm = minmax_normalize(saliency);
    const auto& table = color_table();
    Image out(rgb.width(), rgb.height(), 3);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x) {
            const auto& col = table[static_cast<std::size_t>(std::lround(norm.at(x, y) * 255.0f))];
            for (int c = 0; c < 3; ++c) out.at(c, x, y) = 0.5f * rgb.at(c, x, y) + 0.5f * col[c];
        }

    const int x1 = std::clamp(static_cast<int>(std::floor(target_box.x1)), 0, out.width() - 1);
    const int y1 = std::clamp(static_cast<int>(std::floor(target_box.y1)), 0, out.height() - 1);
    const int x2 = std::clamp(static_cast<int>(std::ceil(target_box.x2)) - 1, 0, out.width() - 1);
    const int y2 = std::clamp(static_cast<int>(std::ceil(target_box.y2)) - 1, 0, out.height() - 1);
    constexpr float kBox[3] = {0.0f, 1.0f, 0.0f};
    constexpr int kThickness = 2;
    for (int y = y1; y <= y2; ++y)
        for (int x = x1; x <= x2; ++x) {
            const bool edge = x - x1 < kThickness || x2 - x < kThickness || y - y1 < kThickness || y2 - y < kThickness;
            if (!edge) continue;
            for (int c = 0; c < 3; ++c) out.at(c, x, y) = kBox[c];
        }
    return out;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double stddev_of(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::string format_mean_std(std::span<const double> values) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean_of(values), stddev_of(values));
    return buf;
}

}  // namespace xsal
