#pragma once

// Internal little-endian stream primitives shared by the weight and memory
// file writers. Not installed.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "lmas/errors.hpp"

namespace lmas::binio {

inline void put_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), std::streamsize(n));
}

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    put_bytes(os, b, 4);
}

inline void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(os, b, 8);
}

inline void put_f64(std::ostream& os, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline bool get_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), std::streamsize(n));
    return is.gcount() == std::streamsize(n);
}

inline bool get_u32(std::istream& is, uint32_t& v) {
    unsigned char b[4];
    if (!get_bytes(is, b, 4)) return false;
    v = uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
    return true;
}

inline bool get_u64(std::istream& is, uint64_t& v) {
    unsigned char b[8];
    if (!get_bytes(is, b, 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return true;
}

inline bool get_f64(std::istream& is, double& v) {
    uint64_t bits;
    if (!get_u64(is, bits)) return false;
    std::memcpy(&v, &bits, 8);
    return true;
}

template <class T>
void put_tensor(std::ostream& os, const std::vector<T>& data) {
    for (T v : data) {
        if constexpr (sizeof(T) == 4) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(os, bits);
        } else {
            put_f64(os, double(v));
        }
    }
}

template <class T>
void get_tensor(std::istream& is, std::vector<T>& data, const char* what) {
    for (auto& v : data) {
        if constexpr (sizeof(T) == 4) {
            uint32_t bits;
            if (!get_u32(is, bits)) throw ShapeError(std::string("truncated tensor: ") + what);
            std::memcpy(&v, &bits, 4);
        } else {
            double d;
            if (!get_f64(is, d)) throw ShapeError(std::string("truncated tensor: ") + what);
            v = T(d);
        }
    }
}

} // namespace lmas::binio
