#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace kge {

// FNV-1a, used for content hashes (dictionary, dataset, sweep configs).
// Stability matters: these values end up in file names and sidecars.
class Fnv1a {
public:
    void update(std::string_view s) {
        for (unsigned char c : s) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
    }

    void update(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            state_ ^= (v >> (8 * i)) & 0xff;
            state_ *= 0x100000001b3ULL;
        }
    }

    void update(std::int64_t v) { update(static_cast<std::uint64_t>(v)); }
    void update(int v) { update(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

} // namespace kge
