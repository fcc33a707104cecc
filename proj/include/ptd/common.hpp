#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ptd {

// Generic runtime failure (shape mismatch, non-finite values, bad state).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (corpus records, checkpoints, configs).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// FNV-1a, used for seeded per-turn selection and for content hashes
// (vocabulary identity, parameter freezing checks).
inline uint64_t fnv1a(std::string_view s, uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a_bytes(const void* data, size_t n, uint64_t h = 14695981039346656037ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace ptd
