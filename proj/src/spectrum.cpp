#include "optochaos/spectrum.hpp"

#include <algorithm>
#include <cmath>

namespace optochaos {

void fft_radix2(std::vector<Complex>& data) {
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw InvalidParams("FFT length must be a power of two");
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const Complex wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex u = data[i + k];
                const Complex v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

PowerSpectrum power_spectrum(const std::vector<Complex>& samples, double dt,
                             const SpectrumSpec& spec) {
    const std::size_t n = samples.size();
    if (n < 2 || (n & (n - 1)) != 0)
        throw InvalidParams("sample count must be a power of two >= 2");
    if (!(dt > 0.0)) throw InvalidParams("dt must be positive");

    std::vector<Complex> data(n);
    if (spec.window == "hann") {
        for (std::size_t i = 0; i < n; ++i) {
            const double w =
                0.5 * (1.0 - std::cos(2.0 * M_PI * i / static_cast<double>(n)));
            data[i] = samples[i] * w;
        }
    } else if (spec.window == "rect") {
        data = samples;
    } else {
        throw InvalidParams("unknown window: " + spec.window);
    }
    fft_radix2(data);

    // One-sided folding; normalization chosen so that
    // sum(power) == sum |windowed samples|^2 (Parseval).
    PowerSpectrum out;
    out.window = spec.window;
    const double dnu = 2.0 * M_PI / (static_cast<double>(n) * dt);
    out.resolution = dnu;
    const std::size_t half = n / 2;
    out.frequencies.resize(half + 1);
    out.power.resize(half + 1);
    const double scale = 1.0 / static_cast<double>(n);
    out.frequencies[0] = 0.0;
    out.power[0] = std::norm(data[0]) * scale;
    for (std::size_t k = 1; k < half; ++k) {
        out.frequencies[k] = k * dnu;
        out.power[k] = (std::norm(data[k]) + std::norm(data[n - k])) * scale;
    }
    out.frequencies[half] = half * dnu;
    out.power[half] = std::norm(data[half]) * scale;
    return out;
}

PowerSpectrum power_spectrum(const SCTrajectory& traj,
                             const SpectrumSpec& spec) {
    if (spec.n_periods < 64)
        throw InvalidParams("need at least 64 periods for spectra");
    const std::size_t want = static_cast<std::size_t>(spec.n_periods) *
                             static_cast<std::size_t>(spec.samples_per_period);
    // Post-transient tail of exactly `want` samples.
    std::size_t first = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        if (traj.times[i] < traj.transient_cutoff) first = i + 1;
    const std::size_t avail = traj.times.size() - first;
    if (avail < want) throw InvalidParams("trajectory record too short");
    first = traj.times.size() - want;

    const double dt = traj.times[first + 1] - traj.times[first];
    for (std::size_t i = first + 1; i < traj.times.size(); ++i) {
        const double d = traj.times[i] - traj.times[i - 1];
        if (std::abs(d - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw InvalidParams("spectral input requires uniform sampling");
    }
    std::vector<Complex> samples(want);
    for (std::size_t i = 0; i < want; ++i)
        samples[i] = traj.states[first + i].alpha;
    return power_spectrum(samples, dt, spec);
}

SubharmonicOrder detect_subharmonic_order(const PowerSpectrum& spec,
                                          double threshold) {
    if (!(spec.resolution < 1.0 / 16.0))
        throw InvalidParams("spectral resolution coarser than 1/16");
    const std::size_t n = spec.power.size();
    const double tol = 3.0;  // window leakage tolerance, in bins

    // Leakage guard around DC.
    const std::size_t guard = 4;
    std::vector<std::size_t> peaks;
    double max_peak = 0.0;
    for (std::size_t k = guard; k + 1 < n; ++k) {
        if (spec.power[k] > spec.power[k - 1] &&
            spec.power[k] >= spec.power[k + 1])
            max_peak = std::max(max_peak, spec.power[k]);
    }
    if (max_peak <= 0.0) return SubharmonicOrder::n1;
    for (std::size_t k = guard; k + 1 < n; ++k) {
        if (spec.power[k] > spec.power[k - 1] &&
            spec.power[k] >= spec.power[k + 1] &&
            spec.power[k] >= threshold * max_peak)
            peaks.push_back(k);
    }
    if (peaks.empty()) return SubharmonicOrder::n1;

    // The comb is anchored to the measured fundamental: the self-induced
    // oscillation frequency is pulled slightly off the bare mechanical
    // frequency, and the harmonics follow the actual fundamental.
    double fundamental_bins = 1.0 / spec.resolution;
    {
        double best_power = 0.0;
        std::size_t best_k = 0;
        for (std::size_t k : peaks) {
            const double nu = spec.frequencies[k];
            if (nu > 0.7 && nu < 1.3 && spec.power[k] > best_power) {
                best_power = spec.power[k];
                best_k = k;
            }
        }
        if (best_k > 0 && best_k + 1 < n) {
            // Sub-bin refinement by parabolic interpolation.
            const double pm = spec.power[best_k - 1];
            const double p0 = spec.power[best_k];
            const double pp = spec.power[best_k + 1];
            const double den = pm - 2.0 * p0 + pp;
            double shift = 0.0;
            if (den < 0.0) shift = 0.5 * (pm - pp) / den;
            fundamental_bins = static_cast<double>(best_k) + shift;
        }
    }

    auto on_grid = [&](std::size_t k, int order_den, int order_num) {
        // Grid of multiples of (order_num/order_den) * fundamental.
        const double step = fundamental_bins * order_num / order_den;
        const double m = std::round(static_cast<double>(k) / step);
        return std::abs(static_cast<double>(k) - m * step) <= tol;
    };

    // Broadband floor criterion: median off-grid power within 20 dB of the
    // median significant-peak power (off-grid = away from the finest grid).
    // Restricted to the band actually carrying peaks; outside it the power
    // drops to the numerical floor and would bias the median down.
    const std::size_t k_hi = peaks.back();
    std::vector<double> offgrid;
    for (std::size_t k = guard; k <= k_hi; ++k)
        if (!on_grid(k, 8, 1)) offgrid.push_back(spec.power[k]);
    std::vector<double> peak_power;
    for (std::size_t k : peaks) peak_power.push_back(spec.power[k]);
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v.empty() ? 0.0 : v[v.size() / 2];
    };
    const double med_off = median(offgrid);
    const double med_peak = median(peak_power);
    if (med_off > 1e-2 * med_peak) return SubharmonicOrder::continuous;

    for (int order : {8, 4, 2, 1}) {
        bool all_on = true;
        for (std::size_t k : peaks)
            if (!on_grid(k, order, 1)) {
                all_on = false;
                break;
            }
        if (!all_on) continue;
        // At least one peak must need the full Omega/n grid: off the
        // Omega/(n/2) grid (for n = 1 that is the 2*Omega grid).
        bool genuine = false;
        for (std::size_t k : peaks) {
            const bool coarser = (order == 1) ? on_grid(k, 1, 2)
                                              : on_grid(k, order / 2, 1);
            if (!coarser) {
                genuine = true;
                break;
            }
        }
        if (genuine) return static_cast<SubharmonicOrder>(order);
    }
    // Significant peaks that fit no comb at all: continuous spectrum.
    for (std::size_t k : peaks)
        if (!on_grid(k, 8, 1)) return SubharmonicOrder::continuous;
    return SubharmonicOrder::n1;
}

}  // namespace optochaos
