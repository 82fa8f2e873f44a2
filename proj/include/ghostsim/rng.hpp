#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace ghostsim {

/// splitmix64 finalizer; good avalanche, used to derive independent
/// per-frame seeds from (base seed, stream tag, frame index).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for frame `index` of stream `stream` under `base`. Distinct streams
/// (shots, calibration, detector noise) never collide.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(base ^ mix64(stream)) ^ index);
}

/// Deterministic Gaussian sampler: mt19937_64 + Box-Muller. Self-contained so
/// frames are bit-identical for a given seed regardless of the C++ standard
/// library's distribution implementations.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
    }

    /// Standard normal deviate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circular complex Gaussian with E[|z|^2] = 1.
    std::complex<double> circular() {
        const double s = 0.70710678118654752440;
        return {normal() * s, normal() * s};
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ghostsim
