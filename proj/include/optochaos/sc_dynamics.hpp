#ifndef OPTOCHAOS_SC_DYNAMICS_HPP
#define OPTOCHAOS_SC_DYNAMICS_HPP

#include <array>
#include <vector>

#include "optochaos/integrator.hpp"
#include "optochaos/model.hpp"

namespace optochaos {

/// Perturbation of (Re alpha, Im alpha, Re beta, Im beta).
using TangentState = std::array<double, 4>;

/// Time series of SC states; samples with tau < transient_cutoff are
/// considered transient.
struct SCTrajectory {
    std::vector<double> times;
    std::vector<SCState> states;
    ModelParams params;
    double transient_cutoff = 0.0;
};

struct SamplingSpec {
    double step = 2.0 * 3.14159265358979323846 / 128.0;  // uniform output step
    IntegratorOptions integrator{};
};

struct FixedPoint {
    SCState state;
    bool stable;
    double max_real_eigenvalue;
};

/// Right-hand side of the SC equations of motion:
///   d alpha/d tau = i[Delta*alpha - (beta+beta*)*alpha - 1/2] - (kappa/2)*alpha
///   d beta /d tau = -i[(P/2)|alpha|^2 + beta] - (gamma/2)*beta
SCState sc_rhs(const SCState& state, const ModelParams& params);

/// Packs an SCState into the canonical 4-real layout and back.
std::array<double, 4> pack_state(const SCState& s);
SCState unpack_state(const std::array<double, 4>& y);

/// Analytic Jacobian of sc_rhs at `state`, applied to a tangent vector.
TangentState sc_jacobian_apply(const SCState& state, const TangentState& delta,
                               const ModelParams& params);

/// Dense 4x4 Jacobian matrix (row-major) of sc_rhs at `state`.
std::array<double, 16> sc_jacobian(const SCState& state,
                                   const ModelParams& params);

/// Integrates the SC equations over [tau0, tau1] with uniform output
/// sampling. The first recorded sample is the initial state at tau0.
SCTrajectory integrate_sc(const SCState& initial, const ModelParams& params,
                          double tau0, double tau1,
                          const SamplingSpec& sampling = {});

/// Advances the state to tau1 without recording intermediate samples.
SCState evolve_sc(const SCState& initial, const ModelParams& params,
                  double tau0, double tau1,
                  const IntegratorOptions& opts = {});

/// Stationary solutions of the SC equations with linear stability.
/// The photon number n = |alpha|^2 satisfies the cubic
///   c^2 n^3 + 2 Delta c n^2 + (Delta^2 + kappa^2/4) n = 1/4,
/// with c = P/(1 + gamma^2/4) the static radiation-pressure shift.
std::vector<FixedPoint> fixed_points(const ModelParams& params);

}  // namespace optochaos

#endif
