#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace hazekit {

// FNV-1a, used for artifact fingerprints and for deriving named RNG
// substreams from string tags.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// splitmix64 finalizer; mixes seed material into well-spread 64-bit values.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic seed for a named substream: reruns with the same master seed
// and tag chain always see the same values, and distinct consumers (scene 7,
// delta init for image 12, epoch shuffle) never share a stream.
inline uint64_t substream_seed(uint64_t master, std::string_view tag, uint64_t a = 0, uint64_t b = 0,
                               uint64_t c = 0) {
    uint64_t h = splitmix64(master ^ fnv1a64(tag));
    h = splitmix64(h ^ (a + 0x9e3779b97f4a7c15ull));
    h = splitmix64(h ^ (b + 0x7f4a7c159e3779b9ull));
    h = splitmix64(h ^ (c + 0x2545f4914f6cdd1dull));
    return h;
}

// mt19937_64 has a standard-fixed output sequence; the float mappings below
// are hand-rolled because std::uniform_real_distribution is
// implementation-defined and would break cross-toolchain reproducibility.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1) with 53 random bits
    double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    float uniform_f(float lo, float hi) {
        return static_cast<float>(static_cast<double>(lo) +
                                  (static_cast<double>(hi) - static_cast<double>(lo)) * next_double());
    }

    // uniform integer in [0, n) via rejection-free 128-bit multiply (Lemire)
    uint64_t next_below(uint64_t n) {
        // n is small in practice (shuffles, k-set picks); the tiny modulo bias
        // of the multiply-shift method is irrelevant there but we reject to
        // keep the draw exact and still deterministic.
        if (n == 0) return 0;
        uint64_t threshold = (0ull - n) % n;
        for (;;) {
            uint64_t r = eng_();
            __uint128_t m = static_cast<__uint128_t>(r) * n;
            if (static_cast<uint64_t>(m) >= threshold) return static_cast<uint64_t>(m >> 64);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace hazekit
