#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace dfrc {

namespace detail {
// splitmix64: the seeding/stream-derivation mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/**
 * Seedable generator with cheap independent substreams. Substream k of a
 * given root seed is always the same stream, which makes Monte Carlo loops
 * reproducible under any parallel schedule: give trial k the substream k
 * and reduce in index order.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : root_(seed) {
        std::uint64_t s = seed;
        eng_.seed(detail::splitmix64(s));
    }

    Rng substream(std::uint64_t id) const {
        std::uint64_t s = root_;
        std::uint64_t mixed = detail::splitmix64(s) ^ (0x9e3779b97f4a7c15ULL * (id + 1));
        return Rng(detail::splitmix64(mixed));
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Standard normal, Box-Muller (no cached spare, so call order is the
    // whole state).
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // CN(0, var): circularly symmetric complex Gaussian.
    std::complex<double> cgaussian(double var) {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-std::log(u1) * var);
        return {r * std::cos(2.0 * std::numbers::pi * u2),
                r * std::sin(2.0 * std::numbers::pi * u2)};
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return eng_() % n; }

private:
    std::uint64_t root_;
    std::mt19937_64 eng_;
};

}  // namespace dfrc
