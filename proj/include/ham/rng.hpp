#pragma once

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace ham {

// splitmix64 state transition + output mix. Used for seeding and as the
// finalizer of the string hash below.
inline uint64_t splitmix64_next(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// xoshiro256** seeded via four splitmix64 draws. The state transition and
// output scramble follow the published reference, so any implementation of
// the same generator reproduces identical streams from the same seed.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) from the top 53 bits of next().
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double on [lo, hi). Degenerate intervals return lo exactly.
    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Uniform integer in [0, bound) via 128-bit multiply-shift.
    uint64_t bounded(uint64_t bound) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
};

// Fisher-Yates permutation of 0..n-1 driven by the generator above, so a
// shuffle is reproducible wherever the seed is.
inline std::vector<size_t> shuffled_indices(size_t n, Rng& rng) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t i = n; i > 1; --i) {
        size_t j = static_cast<size_t>(rng.bounded(i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

// Seeded 64-bit string hash: FNV-1a over the bytes with the seed folded into
// the offset basis, then a splitmix64-style finalizer to spread the bits.
inline uint64_t hash64(std::string_view bytes, uint64_t seed) {
    uint64_t h = 0xcbf29ce484222325ull ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

}  // namespace ham
