#pragma once

#include <cmath>
#include <cstdint>

#include "reggraph/linop.hpp"

namespace reggraph {

/// Counter-based 64-bit generator (splitmix-style state update).
///
/// Bit-exact contract, for cross-language reproducibility:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
/// uniform() maps the output to (0,1) as (output >> 11) * 2^-53, with 0 mapped
/// to 2^-53. Gaussians come in pairs from the Box-Muller transform
///   z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2).
class rng {
public:
    explicit rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1).
    double uniform() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    vec gaussian_vector(long n) {
        vec v(n);
        for (long i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    vec uniform_vector(long n) {
        vec v(n);
        for (long i = 0; i < n; ++i) v[i] = uniform();
        return v;
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace reggraph
