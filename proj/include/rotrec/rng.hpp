#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

#include "rotrec/common.hpp"

namespace rotrec {

// splitmix64: tiny, portable, deterministic across platforms.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(seed ^ 0xD1B54A32D192ED03ull) {
        // warm up
        splitmix64(s_);
        splitmix64(s_);
    }

    std::uint64_t next_u64() { return splitmix64(s_); }

    double uniform() {  // [0,1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        // Box-Muller; discards the second value for simplicity.
        double u1 = uniform();
        while (u1 <= 0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    Vec3 unit_vector() {
        while (true) {
            Vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            const double n = v.norm();
            if (n > 1e-3 && n <= 1.0) return v / n;
        }
    }

    Vec3 in_ball(double radius) {
        while (true) {
            Vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            if (v.squaredNorm() <= 1.0) return radius * v;
        }
    }

private:
    std::uint64_t s_;
};

// Counter-based generator: every draw is a pure function of (seed, keys...),
// so parallel producers agree on the stream without coordination.
inline std::uint64_t hash_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c = 0) {
    std::uint64_t s = seed;
    s ^= 0x9E3779B97F4A7C15ull + a;
    splitmix64(s);
    s ^= 0xC2B2AE3D27D4EB4Full + b;
    splitmix64(s);
    s ^= 0x165667B19E3779F9ull + c;
    return splitmix64(s);
}

inline std::uint64_t bits_of(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
}

// Standard complex gaussian (unit variance per real component) keyed by the
// given indices.
inline cplx keyed_complex_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c = 0) {
    std::uint64_t s = hash_key(seed, a, b, c);
    double u1 = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
    double u2 = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
    while (u1 <= 0) u1 = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
}

}  // namespace rotrec
