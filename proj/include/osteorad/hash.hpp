#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "osteorad/error.hpp"

namespace osteorad {

/// Streaming 64-bit FNV-1a. Not cryptographic; it identifies artifact content
/// for reproducibility checks.
class ContentHash {
public:
    void update(const void* data, std::size_t n) noexcept {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001B3ULL;
        }
    }
    void update(std::string_view s) noexcept { update(s.data(), s.size()); }

    std::uint64_t value() const noexcept { return h_; }

    std::string hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out(16, '0');
        for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(15 - i)] = digits[(h_ >> (4 * i)) & 0xF];
        return out;
    }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

inline std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string() + " for hashing");
    ContentHash h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

inline std::string hash_text(std::string_view s) {
    ContentHash h;
    h.update(s);
    return h.hex();
}

}  // namespace osteorad
