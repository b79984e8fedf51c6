#pragma once

// ".f32t" raster files: "F32T", then u32 C, H, W (little endian), then C*H*W
// little-endian IEEE-754 floats in planar channel order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xsal/tensor.hpp"

namespace xsal {

struct F32Tensor {
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> data;

    friend bool operator==(const F32Tensor&, const F32Tensor&) = default;
};

std::string encode_f32t(const F32Tensor& t);
F32Tensor decode_f32t(const std::string& bytes);

void write_f32t(const std::filesystem::path& path, const F32Tensor& t);
F32Tensor read_f32t(const std::filesystem::path& path);

F32Tensor to_f32t(const Tensor2D& t);
F32Tensor to_f32t(const std::vector<Tensor2D>& stack);
Tensor2D tensor_from_f32t(const F32Tensor& t);
std::vector<Tensor2D> stack_from_f32t(const F32Tensor& t);

// Little-endian float (de)serialisation shared with the bridge codec.
void append_le_floats(std::string& out, const float* values, std::size_t count);
void read_le_floats(const char* bytes, std::size_t count, float* out);

}  // namespace xsal
