#ifndef OPTOCHAOS_SPECTRUM_HPP
#define OPTOCHAOS_SPECTRUM_HPP

#include <string>
#include <vector>

#include "optochaos/sc_dynamics.hpp"

namespace optochaos {

/// One-sided power spectrum on a uniform frequency grid in units of the
/// mechanical frequency.
struct PowerSpectrum {
    std::vector<double> frequencies;
    std::vector<double> power;
    std::string window;
    double resolution;  // frequency bin width
};

struct SpectrumSpec {
    std::string window = "hann";  // "hann" or "rect"
    int n_periods = 512;
    int samples_per_period = 128;
};

enum class SubharmonicOrder : int {
    n1 = 1,
    n2 = 2,
    n4 = 4,
    n8 = 8,
    continuous = 0,
};

/// In-place radix-2 FFT; length must be a power of two.
void fft_radix2(std::vector<Complex>& data);

/// Windowed one-sided power spectrum of a uniformly sampled complex
/// sequence. `dt` is the sample spacing in tau; frequencies are reported
/// in units of the mechanical frequency (1 <-> e^{i tau}).
PowerSpectrum power_spectrum(const std::vector<Complex>& samples, double dt,
                             const SpectrumSpec& spec = {});

/// Spectrum of the cavity amplitude alpha over the post-transient part of
/// a trajectory.
PowerSpectrum power_spectrum(const SCTrajectory& traj,
                             const SpectrumSpec& spec = {});

/// Largest n in {1,2,4,8} whose frequency grid Omega/n carries all
/// significant peaks, with at least one peak off the Omega/(n/2) grid;
/// `continuous` when broadband inter-peak power dominates.
SubharmonicOrder detect_subharmonic_order(const PowerSpectrum& spec,
                                          double threshold = 1e-4);

}  // namespace optochaos

#endif
