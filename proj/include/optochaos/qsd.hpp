#ifndef OPTOCHAOS_QSD_HPP
#define OPTOCHAOS_QSD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "optochaos/model.hpp"

namespace optochaos {

struct TruncationViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepFailure : std::runtime_error {
    double tau_at_failure;
    StepFailure(const std::string& what, double tau)
        : std::runtime_error(what + " at tau = " + std::to_string(tau)),
          tau_at_failure(tau) {}
};

/// Fock cutoffs of the two-mode basis; levels 0..n-1 per mode.
struct HilbertTruncation {
    int n_cav;
    int n_mech;
    std::size_t dim() const {
        return static_cast<std::size_t>(n_cav) * n_mech;
    }
};

/// Normalized state vector on the truncated two-mode Fock space,
/// cavity-major layout: amplitudes[i * n_mech + j] = <i_cav, j_mech|psi>.
struct QuantumState {
    std::vector<Complex> amplitudes;
    HilbertTruncation truncation;

    static QuantumState vacuum(HilbertTruncation trunc);
    double norm() const;
    void normalize();
};

/// Sparse actions of the model operators on the truncated space.
/// Dimensionless form (Omega = 1):
///   H = [-Delta + g0 (b + b^dag)] a^dag a + b^dag b + alphaL (a + a^dag)
/// with Lindblad channels L1 = sqrt(kappa) a, L2 = sqrt(gamma) b.
class ModelOperators {
public:
    ModelOperators(double detuning, double kappa, double gamma, double g0,
                   double alphaL, HilbertTruncation trunc);

    void apply_hamiltonian(const std::vector<Complex>& in,
                           std::vector<Complex>& out) const;
    void apply_a(const std::vector<Complex>& in,
                 std::vector<Complex>& out) const;
    void apply_b(const std::vector<Complex>& in,
                 std::vector<Complex>& out) const;

    /// Off-diagonal part of H plus the frozen-expectation measurement
    /// drift: out = -i [g0 (b + b^dag) a^dag a + alphaL (a + a^dag)] in
    ///             + conj(e1) sqrt(kappa) a in + conj(e2) sqrt(gamma) b in
    ///             + c0 in.
    void apply_offdiag_drift(const std::vector<Complex>& in,
                             std::vector<Complex>& out, Complex e1, Complex e2,
                             Complex c0) const;

    Complex expect_a(const std::vector<Complex>& psi) const;
    Complex expect_b(const std::vector<Complex>& psi) const;
    double expect_na(const std::vector<Complex>& psi) const;
    double expect_nb(const std::vector<Complex>& psi) const;

    /// Population of the top 10% of levels in either mode (max of the two).
    double leakage(const std::vector<Complex>& psi) const;

    HilbertTruncation truncation() const { return trunc_; }
    double detuning() const { return detuning_; }
    double kappa() const { return kappa_; }
    double gamma() const { return gamma_; }
    double g0() const { return g0_; }
    double alphaL() const { return alphaL_; }

private:
    double detuning_, kappa_, gamma_, g0_, alphaL_;
    HilbertTruncation trunc_;
    std::vector<double> sqrt_n_;  // sqrt(0..max(n_cav,n_mech))
};

/// Operators from the dimensionless parameter set; requires sigma > 0.
ModelOperators build_operators(const ModelParams& params,
                               HilbertTruncation trunc);

/// One Euler-Maruyama step of the quantum-state-diffusion Ito equation
/// with explicit renormalization. `noise` holds the two complex Wiener
/// increments (cavity, mechanics) with E[dxi dxi*] = dt.
void qsd_step(QuantumState& state, const ModelOperators& ops, double dt,
              Complex noise_cav, Complex noise_mech, double tau = 0.0);

/// Stabilized variant of qsd_step for large cutoffs: the number-diagonal
/// Hamiltonian and damping are propagated exactly, the off-diagonal drift
/// with classical RK4 (frozen expectations), and the noise term explicitly.
/// Same Ito limit and weak order as qsd_step; unlike the plain
/// Euler-Maruyama step it stays contractive when n_mech * dt >> Gamma.
void qsd_step_split(QuantumState& state, const ModelOperators& ops, double dt,
                    Complex noise_cav, Complex noise_mech, double tau = 0.0);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<Complex> exp_a, exp_b;
    std::vector<double> exp_na, exp_nb, leakage;
    std::vector<Complex> alpha, beta;  // rescaled amplitudes
    std::vector<double> x, p;
    std::uint64_t master_seed = 0;
    std::uint64_t trajectory_index = 0;
    double max_leakage = 0.0;
};

struct QsdRunSpec {
    double tau_end = 10.0;
    double dt = 2.0 * M_PI / 4096.0;
    int sample_stride = 32;  // record every sample_stride steps
    double leak_tol = 1e-6;
    bool enforce_leak_tol = true;
    std::string stepper = "euler";  // "euler" or "split"
};

/// Single quantum trajectory from the two-mode vacuum with a
/// deterministic per-trajectory noise stream.
TrajectoryRecord run_trajectory(const ModelParams& params,
                                HilbertTruncation trunc,
                                const QsdRunSpec& spec,
                                std::uint64_t master_seed,
                                std::uint64_t trajectory_index = 0,
                                const QuantumState* initial = nullptr);

/// Stroboscopic (x, p) points at tau = 2*pi*k, k >= discard_periods.
std::vector<std::pair<double, double>> stroboscopic_section(
    const TrajectoryRecord& record, int discard_periods = 20);

struct EnsembleRecord {
    std::vector<double> times;
    std::vector<Complex> mean_a, mean_b;
    std::vector<double> mean_na, mean_nb, mean_x;
    std::vector<double> stderr_re_a, stderr_im_a, stderr_re_b, stderr_im_b;
    std::vector<double> stderr_na, stderr_nb, stderr_x;
    int n_traj = 0;
    double max_leakage = 0.0;
};

/// Ensemble average over independent trajectories; the reduction order is
/// fixed by trajectory index, so the result is independent of worker
/// count and scheduling.
EnsembleRecord run_ensemble(const ModelParams& params, HilbertTruncation trunc,
                            const QsdRunSpec& spec, int n_traj,
                            std::uint64_t master_seed,
                            const QuantumState* initial = nullptr);

/// Observable time series from direct dense integration of the master
/// equation (classical RK4, fixed step); small dimensions only.
struct OracleRecord {
    std::vector<double> times;
    std::vector<Complex> exp_a, exp_b;
    std::vector<double> exp_na, exp_nb;
    std::vector<double> trace_error;     // |tr rho - 1|
    double min_eigenvalue = 0.0;         // over checked times
};

OracleRecord master_equation_oracle(const ModelParams& params,
                                    HilbertTruncation trunc,
                                    const QsdRunSpec& spec,
                                    const QuantumState* initial = nullptr);

/// Oracle from explicit raw couplings (test support for g0 = 0 cases).
OracleRecord master_equation_oracle_raw(const ModelOperators& ops,
                                        const QsdRunSpec& spec,
                                        const QuantumState* initial = nullptr);

/// Trajectory from explicit raw couplings (test support for g0 = 0 cases).
TrajectoryRecord run_trajectory_raw(const ModelOperators& ops,
                                    const QsdRunSpec& spec,
                                    std::uint64_t master_seed,
                                    std::uint64_t trajectory_index,
                                    const QuantumState* initial = nullptr,
                                    double alphaL_rescale = 0.0,
                                    double g0_rescale = 0.0);

}  // namespace optochaos

#endif
