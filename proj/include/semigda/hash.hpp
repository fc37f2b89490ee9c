#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace semigda {

// FNV-1a 64-bit. Used for parameter-group content hashes and config hashes.
class Fnv1a64 {
public:
    void update(const void* bytes, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    uint64_t digest() const { return state_; }

    std::string hex() const {
        static const char* k = "0123456789abcdef";
        std::string out(16, '0');
        uint64_t v = state_;
        for (int i = 15; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] = k[v & 0xf];
            v >>= 4;
        }
        return out;
    }

private:
    uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string fnv1a64_hex(const void* bytes, std::size_t n) {
    Fnv1a64 h;
    h.update(bytes, n);
    return h.hex();
}

inline std::string fnv1a64_hex(const std::string& s) { return fnv1a64_hex(s.data(), s.size()); }

}  // namespace semigda
