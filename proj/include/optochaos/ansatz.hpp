#ifndef OPTOCHAOS_ANSATZ_HPP
#define OPTOCHAOS_ANSATZ_HPP

#include <vector>

#include "optochaos/model.hpp"

namespace optochaos {

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fourier coefficients alpha_n, n in [-N, N], of the periodic cavity
/// response; coefficients[N + n] holds alpha_n.
struct FourierResponse {
    std::vector<Complex> coefficients;
    int truncation;

    Complex coeff(int n) const { return coefficients[truncation + n]; }
    /// alpha(tau) reconstructed from the series.
    Complex evaluate(double tau) const;
};

/// One self-consistent oscillation solution x(tau) = xbar + A cos(tau).
struct AnsatzSolution {
    double xbar;
    double amplitude;
    double residual;
    int branch_id;
};

/// Exact periodic solution of the cavity equation with prescribed
/// cantilever motion beta + beta* = sqrt(2)(xbar + A cos tau). Closed form
/// via the Jacobi-Anger expansion. `truncation` <= 0 auto-grows from the
/// Bessel support scale until the coefficient tail decays below 1e-12.
FourierResponse cavity_fourier_response(double xbar, double amplitude,
                                        const ModelParams& params,
                                        int truncation = 0);

/// Same response computed by solving the tridiagonal Fourier-space system
/// directly; cross-check route for the Bessel construction.
FourierResponse cavity_fourier_response_recurrence(double xbar,
                                                   double amplitude,
                                                   const ModelParams& params,
                                                   int truncation = 0);

/// Self-consistency mismatch of a candidate (xbar, A): feeds |alpha|^2
/// into the cantilever equation, computes the exact periodic response and
/// returns (DC mismatch, first-harmonic magnitude mismatch).
std::pair<double, double> ansatz_residuals(double xbar, double amplitude,
                                           const ModelParams& params);

/// All ansatz branches over a detuning grid, found by damped Newton with
/// multistart seeding and continuation along the grid. The A = 0 branch
/// (fixed points) is always included.
std::vector<std::vector<AnsatzSolution>> solve_ansatz_branches(
    const ModelParams& params_template, const std::vector<double>& detunings);

}  // namespace optochaos

#endif
