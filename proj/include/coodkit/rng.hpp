#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace cood {

// Platform-independent deterministic 64-bit generator (splitmix64).
//
// The stream is a pure function of the seed: state advances by the golden
// gamma and each output is the splitmix64 finalizer of the new state.
// Substreams are derived with `derive`, which mixes a salt into the current
// state value, so `SeededRng(seed).derive(salt)` is identical everywhere
// and independent of how many draws other substreams have consumed.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    // splitmix64 finalizer
    static std::uint64_t scramble(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        return scramble(a + kGamma + scramble(b));
    }

    // FNV-1a, used to hash record ids into substream salts.
    static std::uint64_t hash_str(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return scramble(state_);
    }

    // [0, 1) with 53 random bits
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // [0, n) via the 128-bit multiply-shift reduction
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in random order
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(idx);
        idx.resize(k);
        return idx;
    }

    SeededRng derive(std::uint64_t salt) const { return SeededRng(mix(state_, salt)); }
    SeededRng derive(std::string_view tag) const { return derive(hash_str(tag)); }

private:
    std::uint64_t state_;
};

} // namespace cood
