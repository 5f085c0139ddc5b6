#pragma once

#include <cmath>
#include <cstdint>

namespace latdiag {

// splitmix64 finalizer. Used both for seeding xoshiro and for deriving
// independent substream seeds from a user seed.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic substream derivation: substream(seed, i) != substream(seed, j)
// for i != j, and streams for distinct seeds do not collide in practice.
// Documented so results can be reproduced by other implementations.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64_mix(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

// xoshiro256++ (Blackman & Vigna). Portable, fully specified 64-bit
// generator; the project-wide PRNG so streams are reproducible across
// implementations. Seeded from splitmix64 per the reference recommendation.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) {
            sm += 0x9E3779B97F4A7C15ULL;
            w = splitmix64_mix(sm);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; never zero, safe for log().
    double uniform_pos() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform in [-1, 1).
    double uniform_sym() { return 2.0 * uniform() - 1.0; }

    // Standard normal via Box-Muller; one spare value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace latdiag
