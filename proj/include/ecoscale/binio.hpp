#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ecoscale::binio {

// Explicit little-endian scalar I/O so on-disk formats are pinned regardless
// of host byte order.

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u16(std::ostream& os, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    write_bytes(os, b, 2);
}

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 8);
}

inline void write_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    write_u32(os, u);
}

inline void write_f64(std::ostream& os, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    write_u64(os, u);
}

inline void read_bytes(std::istream& is, void* p, size_t n, const std::string& what) {
    const std::streamoff at = is.tellg();
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is)
        throw std::runtime_error("truncated " + what + " at byte " + std::to_string(at));
}

inline uint16_t read_u16(std::istream& is, const std::string& what) {
    unsigned char b[2];
    read_bytes(is, b, 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    read_bytes(is, b, 4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t read_u64(std::istream& is, const std::string& what) {
    unsigned char b[8];
    read_bytes(is, b, 8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline float read_f32(std::istream& is, const std::string& what) {
    const uint32_t u = read_u32(is, what);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

inline double read_f64(std::istream& is, const std::string& what) {
    const uint64_t u = read_u64(is, what);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace ecoscale::binio
