#pragma once

// Portable tensor files ("RMT1").
//
// Layout: 4 magic bytes "RMT1", 1 byte dtype code (1 = f32, 2 = f64),
// 1 byte rank r, r little-endian u32 dimensions, then the row-major
// little-endian payload.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace radiomap {

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

struct RawTensor {
    DType dtype = DType::f64;
    std::vector<std::uint32_t> dims;
    std::vector<double> data; // always held in double, narrowed on write for f32

    std::size_t element_count() const;
};

std::vector<std::uint8_t> encode_rmt(const RawTensor& t);
RawTensor decode_rmt(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

void write_rmt(const std::filesystem::path& path, const RawTensor& t);
RawTensor read_rmt(const std::filesystem::path& path);

} // namespace radiomap
