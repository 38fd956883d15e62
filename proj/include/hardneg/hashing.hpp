#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace hardneg {

/// 64-bit FNV-1a. Stable across platforms and runs; used for question keys
/// and for content-addressing pipeline artifacts.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Fixed-width lowercase hex rendering of a 64-bit hash.
std::string to_hex(std::uint64_t value);

/// fnv1a64 over a whole file's bytes. Throws IoError if unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace hardneg
