#include <array>

#include "xsal/bridge.hpp"
#include "xsal/error.hpp"
#include "xsal/f32t.hpp"

namespace xsal::bridge {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> make_reverse() {
    std::array<int, 256> r{};
    for (auto& v : r) v = -1;
    for (int i = 0; i < 64; ++i) r[static_cast<unsigned char>(kAlphabet[i])] = i;
    return r;
}

constexpr auto kReverse = make_reverse();

std::vector<std::size_t> read_shape(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("shape") || !j.contains("data") || !j.at("data").is_string())
        throw Error(ErrorCode::protocol_error, "tensor payload needs shape and data");
    const auto& s = j.at("shape");
    if (!s.is_array() || s.size() != 3) throw Error(ErrorCode::protocol_error, "tensor shape must be [C,H,W]");
    std::vector<std::size_t> shape;
    for (const auto& v : s) {
        if (!v.is_number_integer() || v.get<long long>() < 1)
            throw Error(ErrorCode::protocol_error, "tensor shape entries must be positive integers");
        shape.push_back(v.get<std::size_t>());
    }
    return shape;
}

std::vector<float> read_payload(const nlohmann::json& j, std::size_t count) {
    const auto bytes = base64_decode(j.at("data").get<std::string>());
    if (bytes.size() != 4 * count) throw Error(ErrorCode::protocol_error, "tensor data length does not match shape");
    std::vector<float> values(count);
    read_le_floats(bytes.data(), count, values.data());
    return values;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const auto v = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const auto v = static_cast<unsigned char>(bytes[i]) << 16;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const auto v = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw Error(ErrorCode::protocol_error, "base64 length is not a multiple of 4");
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char ch = text[i + k];
            if (ch == '=' && i + 4 == text.size() && k >= 2) {
                vals[k] = 0;
                ++pad;
            } else {
                vals[k] = pad ? -1 : kReverse[static_cast<unsigned char>(ch)];
                if (vals[k] < 0) throw Error(ErrorCode::protocol_error, "invalid base64 character");
            }
        }
        const unsigned v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out += static_cast<char>((v >> 16) & 0xff);
        if (pad < 2) out += static_cast<char>((v >> 8) & 0xff);
        if (pad < 1) out += static_cast<char>(v & 0xff);
    }
    return out;
}

nlohmann::json encode_image(const Image& image) {
    std::string bytes;
    append_le_floats(bytes, image.data().data(), image.size());
    return {{"shape", {image.channels(), image.height(), image.width()}}, {"data", base64_encode(bytes)}};
}

Image decode_image(const nlohmann::json& j) {
    const auto shape = read_shape(j);
    auto values = read_payload(j, shape[0] * shape[1] * shape[2]);
    try {
        return Image(static_cast<int>(shape[2]), static_cast<int>(shape[1]), static_cast<int>(shape[0]),
                     std::move(values));
    } catch (const Error& e) {
        throw Error(ErrorCode::protocol_error, e.what());
    }
}

nlohmann::json encode_stack(const MapStack& stack) {
    std::string bytes;
    for (const auto& m : stack.maps()) append_le_floats(bytes, m.data().data(), m.size());
    return {{"shape", {stack.count(), stack.height(), stack.width()}}, {"data", base64_encode(bytes)}};
}

MapStack decode_stack(const nlohmann::json& j) {
    const auto shape = read_shape(j);
    const auto values = read_payload(j, shape[0] * shape[1] * shape[2]);
    const std::size_t plane = shape[1] * shape[2];
    std::vector<Tensor2D> maps;
    for (std::size_t i = 0; i < shape[0]; ++i)
        maps.emplace_back(static_cast<int>(shape[2]), static_cast<int>(shape[1]),
                          std::vector<float>(values.begin() + i * plane, values.begin() + (i + 1) * plane));
    return MapStack(std::move(maps));
}

std::vector<std::string> capability_names(const Capabilities& caps) {
    std::vector<std::string> names;
    if (caps.detect) names.emplace_back("detect");
    if (caps.features) names.emplace_back("features");
    if (caps.grad_features) names.emplace_back("grad_features");
    return names;
}

Capabilities parse_capabilities(const nlohmann::json& names) {
    if (!names.is_array()) throw Error(ErrorCode::protocol_error, "capabilities must be an array");
    Capabilities caps{false, false, false};
    for (const auto& n : names) {
        if (!n.is_string()) throw Error(ErrorCode::protocol_error, "capability names must be strings");
        const auto s = n.get<std::string>();
        if (s == "detect") caps.detect = true;
        else if (s == "features") caps.features = true;
        else if (s == "grad_features") caps.grad_features = true;
    }
    if (!caps.detect) throw Error(ErrorCode::protocol_error, "server does not offer the required detect capability");
    if (caps.grad_features && !caps.features)
        throw Error(ErrorCode::protocol_error, "grad_features advertised without features");
    return caps;
}

}  // namespace xsal::bridge
