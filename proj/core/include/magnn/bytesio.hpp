#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "magnn/errors.hpp"

namespace magnn {

// Little-endian primitives for the binary container formats.

inline void write_u32(std::ostream& os, uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double x) {
    uint64_t bits;
    std::memcpy(&bits, &x, 8);
    write_u64(os, bits);
}

inline void write_f32(std::ostream& os, float x) {
    uint32_t bits;
    std::memcpy(&bits, &x, 4);
    write_u32(os, bits);
}

inline void write_str(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline uint32_t read_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw ParseError(std::string("truncated file while reading ") + what);
    uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<uint32_t>(b[i]) << (8 * i);
    return x;
}

inline uint64_t read_u64(std::istream& is, const char* what) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw ParseError(std::string("truncated file while reading ") + what);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(b[i]) << (8 * i);
    return x;
}

inline double read_f64(std::istream& is, const char* what) {
    uint64_t bits = read_u64(is, what);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

inline float read_f32(std::istream& is, const char* what) {
    uint32_t bits = read_u32(is, what);
    float x;
    std::memcpy(&x, &bits, 4);
    return x;
}

inline std::string read_str(std::istream& is, const char* what) {
    uint32_t n = read_u32(is, what);
    std::string s(n, '\0');
    if (n > 0 && !is.read(s.data(), n))
        throw ParseError(std::string("truncated file while reading ") + what);
    return s;
}

}  // namespace magnn
