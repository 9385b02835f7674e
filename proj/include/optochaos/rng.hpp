#ifndef OPTOCHAOS_RNG_HPP
#define OPTOCHAOS_RNG_HPP

#include <cmath>
#include <cstdint>

#include "optochaos/model.hpp"

namespace optochaos {

/// Deterministic Gaussian stream, independent of the standard library's
/// distribution implementations. The stream is a pure function of
/// (master_seed, stream_index), so ensemble results do not depend on
/// worker count or scheduling.
class GaussianStream {
public:
    GaussianStream(std::uint64_t master_seed, std::uint64_t stream_index) {
        // splitmix64 mixing of seed and stream index.
        state_ = mix(master_seed + 0x9E3779B97F4A7C15ULL * (stream_index + 1));
        state_ = mix(state_ ^ mix(stream_index));
        if (state_ == 0) state_ = 0x106689D45497FDB5ULL;
    }

    /// Standard normal via Box-Muller on 53-bit uniforms.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Complex Wiener increment with E[dxi dxi*] = dt, E[dxi dxi] = 0.
    Complex wiener(double dt) {
        const double s = std::sqrt(0.5 * dt);
        const double re = s * normal();
        const double im = s * normal();
        return Complex(re, im);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        // xorshift64*
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace optochaos

#endif
