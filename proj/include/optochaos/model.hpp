#ifndef OPTOCHAOS_MODEL_HPP
#define OPTOCHAOS_MODEL_HPP

#include <complex>
#include <stdexcept>

namespace optochaos {

using Complex = std::complex<double>;

/// Thrown when parameters violate their range constraints.
struct InvalidParams : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimensionless system parameters, all in units of the mechanical
/// frequency (Omega = 1, time variable tau = Omega*t).
struct ModelParams {
    double detuning = 0.0;  // laser-cavity detuning Delta
    double kappa = 1.0;     // cavity decay rate
    double gamma = 1e-3;    // mechanical damping rate
    double pump = 0.0;      // pump parameter P = 8 alphaL^2 g0^2
    double sigma = 0.0;     // quantum-classical scaling g0/kappa; 0 = classical limit
};

/// Bare couplings recovered from (P, sigma).
struct DerivedCouplings {
    double g0;      // single-photon coupling g0
    double alphaL;  // laser drive amplitude alpha_L
};

/// Rescaled semi-classical amplitudes: alpha for the cavity field,
/// beta for the cantilever.
struct SCState {
    Complex alpha{0.0, 0.0};
    Complex beta{0.0, 0.0};
};

/// Cantilever phase-space coordinates.
struct CanonicalCoords {
    double x;
    double p;
};

/// Validates ranges and returns the params unchanged; defaults are already
/// carried by the struct initializers.
ModelParams validate_params(const ModelParams& params);

/// Recovers (g0, alpha_L) from (P, sigma, kappa). Requires sigma > 0 when
/// pump > 0; the classical limit sigma = 0 has no finite drive amplitude.
DerivedCouplings derive_couplings(const ModelParams& params);

/// x = (beta + beta*)/sqrt(2), p = -i/sqrt(2) (beta* - beta).
CanonicalCoords canonical_coords(Complex beta);

}  // namespace optochaos

#endif
