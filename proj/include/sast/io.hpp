#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sast::io {

/// All binary payloads are 32-bit IEEE-754 little-endian, row-major.

inline void append_f32(std::vector<std::byte>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    if constexpr (std::endian::native == std::endian::big)
        bits = __builtin_bswap32(bits);
    std::byte b[4];
    std::memcpy(b, &bits, 4);
    out.insert(out.end(), b, b + 4);
}

inline float read_f32(const std::byte* p) {
    uint32_t bits;
    std::memcpy(&bits, p, 4);
    if constexpr (std::endian::native == std::endian::big)
        bits = __builtin_bswap32(bits);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::byte>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<std::byte> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
    auto size = f.tellg();
    f.seekg(0);
    std::vector<std::byte> bytes(static_cast<size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw std::runtime_error("read failed: " + path.string());
    return bytes;
}

inline void append_f32_span(std::vector<std::byte>& out, const float* v, size_t n) {
    for (size_t i = 0; i < n; ++i) append_f32(out, v[i]);
}

inline std::vector<float> read_f32_block(const std::vector<std::byte>& bytes,
                                         size_t byte_offset, size_t count) {
    if (byte_offset + count * 4 > bytes.size())
        throw std::runtime_error("binary payload shorter than declared shape");
    std::vector<float> out(count);
    for (size_t i = 0; i < count; ++i)
        out[i] = read_f32(bytes.data() + byte_offset + i * 4);
    return out;
}

}  // namespace sast::io
