#include "xsal/f32t.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xsal/error.hpp"

namespace xsal {

namespace {

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t load_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

}  // namespace

void append_le_floats(std::string& out, const float* values, std::size_t count) {
    out.reserve(out.size() + 4 * count);
    for (std::size_t i = 0; i < count; ++i) append_u32(out, std::bit_cast<std::uint32_t>(values[i]));
}

void read_le_floats(const char* bytes, std::size_t count, float* out) {
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(load_u32(bytes + 4 * i));
}

std::string encode_f32t(const F32Tensor& t) {
    const std::size_t n = static_cast<std::size_t>(t.channels) * t.height * t.width;
    if (n != t.data.size()) throw Error(ErrorCode::invalid_dimension, "f32t payload does not match C*H*W");
    std::string out = "F32T";
    append_u32(out, t.channels);
    append_u32(out, t.height);
    append_u32(out, t.width);
    append_le_floats(out, t.data.data(), n);
    return out;
}

F32Tensor decode_f32t(const std::string& bytes) {
    if (bytes.size() < 16 || bytes.compare(0, 4, "F32T") != 0)
        throw Error(ErrorCode::format_error, "missing F32T header");
    F32Tensor t;
    t.channels = load_u32(bytes.data() + 4);
    t.height = load_u32(bytes.data() + 8);
    t.width = load_u32(bytes.data() + 12);
    const std::size_t n = static_cast<std::size_t>(t.channels) * t.height * t.width;
    if (bytes.size() != 16 + 4 * n) throw Error(ErrorCode::format_error, "f32t payload length mismatch");
    t.data.resize(n);
    read_le_floats(bytes.data() + 16, n, t.data.data());
    return t;
}

void write_f32t(const std::filesystem::path& path, const F32Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    const auto bytes = encode_f32t(t);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "write failed: " + path.string());
}

F32Tensor read_f32t(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_f32t(ss.str());
}

F32Tensor to_f32t(const Tensor2D& t) {
    return {1, static_cast<std::uint32_t>(t.height()), static_cast<std::uint32_t>(t.width()), t.values()};
}

F32Tensor to_f32t(const std::vector<Tensor2D>& stack) {
    if (stack.empty()) throw Error(ErrorCode::invalid_dimension, "empty tensor stack");
    F32Tensor out{static_cast<std::uint32_t>(stack.size()), static_cast<std::uint32_t>(stack[0].height()),
                  static_cast<std::uint32_t>(stack[0].width()), {}};
    out.data.reserve(stack.size() * stack[0].size());
    for (const auto& t : stack) {
        if (t.width() != stack[0].width() || t.height() != stack[0].height())
            throw Error(ErrorCode::invalid_dimension, "stack members differ in size");
        out.data.insert(out.data.end(), t.values().begin(), t.values().end());
    }
    return out;
}

Tensor2D tensor_from_f32t(const F32Tensor& t) {
    if (t.channels != 1) throw Error(ErrorCode::invalid_dimension, "expected a single-channel f32t");
    return Tensor2D(static_cast<int>(t.width), static_cast<int>(t.height), t.data);
}

std::vector<Tensor2D> stack_from_f32t(const F32Tensor& t) {
    std::vector<Tensor2D> out;
    const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
    for (std::uint32_t c = 0; c < t.channels; ++c)
        out.emplace_back(static_cast<int>(t.width), static_cast<int>(t.height),
                         std::vector<float>(t.data.begin() + c * plane, t.data.begin() + (c + 1) * plane));
    return out;
}

}  // namespace xsal
