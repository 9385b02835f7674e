#include "optochaos/qsd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "optochaos/parallel.hpp"
#include "optochaos/rng.hpp"

namespace optochaos {

namespace {
constexpr Complex kI{0.0, 1.0};
}

QuantumState QuantumState::vacuum(HilbertTruncation trunc) {
    QuantumState s;
    s.truncation = trunc;
    s.amplitudes.assign(trunc.dim(), Complex{});
    s.amplitudes[0] = 1.0;
    return s;
}

double QuantumState::norm() const {
    double acc = 0.0;
    for (const auto& c : amplitudes) acc += std::norm(c);
    return std::sqrt(acc);
}

void QuantumState::normalize() {
    const double n = norm();
    if (n <= 0.0) throw StepFailure("norm collapse", 0.0);
    const double inv = 1.0 / n;
    for (auto& c : amplitudes) c *= inv;
}

ModelOperators::ModelOperators(double detuning, double kappa, double gamma,
                               double g0, double alphaL,
                               HilbertTruncation trunc)
    : detuning_(detuning),
      kappa_(kappa),
      gamma_(gamma),
      g0_(g0),
      alphaL_(alphaL),
      trunc_(trunc) {
    if (trunc.n_cav < 2 || trunc.n_mech < 2)
        throw InvalidParams("Fock cutoffs must be at least 2");
    const int nmax = std::max(trunc.n_cav, trunc.n_mech);
    sqrt_n_.resize(nmax + 1);
    for (int n = 0; n <= nmax; ++n) sqrt_n_[n] = std::sqrt(double(n));
}

void ModelOperators::apply_hamiltonian(const std::vector<Complex>& in,
                                       std::vector<Complex>& out) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    out.resize(in.size());
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        const double gi = g0_ * i;
        for (int j = 0; j < nm; ++j) {
            Complex acc = (-detuning_ * i + j) * in[row + j];
            if (gi != 0.0) {
                if (j + 1 < nm) acc += gi * sqrt_n_[j + 1] * in[row + j + 1];
                if (j > 0) acc += gi * sqrt_n_[j] * in[row + j - 1];
            }
            if (alphaL_ != 0.0) {
                if (i + 1 < nc)
                    acc += alphaL_ * sqrt_n_[i + 1] * in[row + nm + j];
                if (i > 0) acc += alphaL_ * sqrt_n_[i] * in[row - nm + j];
            }
            out[row + j] = acc;
        }
    }
}

void ModelOperators::apply_a(const std::vector<Complex>& in,
                             std::vector<Complex>& out) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    out.resize(in.size());
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        if (i + 1 < nc) {
            const double s = sqrt_n_[i + 1];
            for (int j = 0; j < nm; ++j) out[row + j] = s * in[row + nm + j];
        } else {
            for (int j = 0; j < nm; ++j) out[row + j] = Complex{};
        }
    }
}

void ModelOperators::apply_b(const std::vector<Complex>& in,
                             std::vector<Complex>& out) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    out.resize(in.size());
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        for (int j = 0; j + 1 < nm; ++j)
            out[row + j] = sqrt_n_[j + 1] * in[row + j + 1];
        out[row + nm - 1] = Complex{};
    }
}

Complex ModelOperators::expect_a(const std::vector<Complex>& psi) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    Complex acc{};
    for (int i = 0; i + 1 < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        const double s = sqrt_n_[i + 1];
        for (int j = 0; j < nm; ++j)
            acc += std::conj(psi[row + j]) * s * psi[row + nm + j];
    }
    return acc;
}

Complex ModelOperators::expect_b(const std::vector<Complex>& psi) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    Complex acc{};
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        for (int j = 0; j + 1 < nm; ++j)
            acc += std::conj(psi[row + j]) * sqrt_n_[j + 1] * psi[row + j + 1];
    }
    return acc;
}

double ModelOperators::expect_na(const std::vector<Complex>& psi) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    double acc = 0.0;
    for (int i = 1; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        double p = 0.0;
        for (int j = 0; j < nm; ++j) p += std::norm(psi[row + j]);
        acc += i * p;
    }
    return acc;
}

double ModelOperators::expect_nb(const std::vector<Complex>& psi) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    double acc = 0.0;
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        for (int j = 1; j < nm; ++j) acc += j * std::norm(psi[row + j]);
    }
    return acc;
}

void ModelOperators::apply_offdiag_drift(const std::vector<Complex>& in,
                                         std::vector<Complex>& out, Complex e1,
                                         Complex e2, Complex c0) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    const Complex wa = std::conj(e1) * std::sqrt(kappa_);
    const Complex wb = std::conj(e2) * std::sqrt(gamma_);
    out.resize(in.size());
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        const Complex gi = -kI * (g0_ * i);
        for (int j = 0; j < nm; ++j) {
            Complex acc = c0 * in[row + j];
            if (j + 1 < nm)
                acc += (gi + wb) * sqrt_n_[j + 1] * in[row + j + 1];
            if (j > 0) acc += gi * sqrt_n_[j] * in[row + j - 1];
            if (alphaL_ != 0.0) {
                if (i + 1 < nc)
                    acc += (-kI * alphaL_) * sqrt_n_[i + 1] * in[row + nm + j];
                if (i > 0)
                    acc += (-kI * alphaL_) * sqrt_n_[i] * in[row - nm + j];
            }
            if (i + 1 < nc) acc += wa * sqrt_n_[i + 1] * in[row + nm + j];
            out[row + j] = acc;
        }
    }
}

double ModelOperators::leakage(const std::vector<Complex>& psi) const {
    const int nc = trunc_.n_cav, nm = trunc_.n_mech;
    const int kc = std::max(1, nc / 10);
    const int km = std::max(1, nm / 10);
    double top_cav = 0.0, top_mech = 0.0;
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        for (int j = 0; j < nm; ++j) {
            const double p = std::norm(psi[row + j]);
            if (i >= nc - kc) top_cav += p;
            if (j >= nm - km) top_mech += p;
        }
    }
    return std::max(top_cav, top_mech);
}

ModelOperators build_operators(const ModelParams& params,
                               HilbertTruncation trunc) {
    validate_params(params);
    if (params.sigma == 0.0)
        throw InvalidParams(
            "sigma = 0 is the classical limit; use the SC dynamics instead");
    const DerivedCouplings dc = derive_couplings(params);
    return ModelOperators(params.detuning, params.kappa, params.gamma, dc.g0,
                          dc.alphaL, trunc);
}

void qsd_step(QuantumState& state, const ModelOperators& ops, double dt,
              Complex noise_cav, Complex noise_mech, double tau) {
    thread_local std::vector<Complex> hpsi, apsi, bpsi;
    const std::vector<Complex>& psi = state.amplitudes;
    const std::size_t dim = psi.size();
    ops.apply_hamiltonian(psi, hpsi);
    ops.apply_a(psi, apsi);
    ops.apply_b(psi, bpsi);

    const double kappa = ops.kappa(), gamma = ops.gamma();
    const double sk = std::sqrt(kappa), sg = std::sqrt(gamma);
    // <L_m> on the pre-step state.
    Complex ea{}, eb{};
    for (std::size_t n = 0; n < dim; ++n) {
        ea += std::conj(psi[n]) * apsi[n];
        eb += std::conj(psi[n]) * bpsi[n];
    }
    const Complex e1 = sk * ea, e2 = sg * eb;
    const double drift_const =
        -0.5 * (std::norm(e1) + std::norm(e2));

    const int nm = ops.truncation().n_mech;
    std::vector<Complex>& out = state.amplitudes;
    for (std::size_t n = 0; n < dim; ++n) {
        const double na = static_cast<double>(n / nm);
        const double nb = static_cast<double>(n % nm);
        Complex d = -kI * hpsi[n];
        d += std::conj(e1) * sk * apsi[n] - 0.5 * kappa * na * psi[n];
        d += std::conj(e2) * sg * bpsi[n] - 0.5 * gamma * nb * psi[n];
        d += drift_const * psi[n];
        Complex stoch = noise_cav * (sk * apsi[n] - e1 * psi[n]);
        stoch += noise_mech * (sg * bpsi[n] - e2 * psi[n]);
        out[n] = psi[n] + dt * d + stoch;
    }
    const double norm = state.norm();
    if (norm < 1e-8) throw StepFailure("norm collapse in qsd step", tau);
    const double inv = 1.0 / norm;
    for (auto& c : out) c *= inv;
}

void qsd_step_split(QuantumState& state, const ModelOperators& ops, double dt,
                    Complex noise_cav, Complex noise_mech, double tau) {
    thread_local std::vector<Complex> apsi, bpsi, k, stage, acc;
    std::vector<Complex>& psi = state.amplitudes;
    const std::size_t dim = psi.size();
    ops.apply_a(psi, apsi);
    ops.apply_b(psi, bpsi);

    const double kappa = ops.kappa(), gamma = ops.gamma();
    const double sk = std::sqrt(kappa), sg = std::sqrt(gamma);
    Complex ea{}, eb{};
    for (std::size_t n = 0; n < dim; ++n) {
        ea += std::conj(psi[n]) * apsi[n];
        eb += std::conj(psi[n]) * bpsi[n];
    }
    const Complex e1 = sk * ea, e2 = sg * eb;
    const Complex c0 = -0.5 * (std::norm(e1) + std::norm(e2));

    // RK4 on the off-diagonal drift with frozen expectations. The RK4
    // stability interval on the imaginary axis is |lambda h| <= 2*sqrt(2);
    // substep so the spectral-norm bound of the drift stays inside it.
    const int nc0 = ops.truncation().n_cav, nm0 = ops.truncation().n_mech;
    const double lam =
        2.0 * ops.g0() * std::sqrt(double(nm0)) * (nc0 - 1) +
        2.0 * ops.alphaL() * std::sqrt(double(nc0)) +
        sk * std::abs(e1) * std::sqrt(double(nc0)) +
        sg * std::abs(e2) * std::sqrt(double(nm0)) + std::abs(c0);
    const int m = std::max(1, static_cast<int>(std::ceil(dt * lam / 2.5)));
    const double h = dt / m;
    acc = psi;
    stage.resize(dim);
    for (int sub = 0; sub < m; ++sub) {
        const std::vector<Complex>& base = acc;
        ops.apply_offdiag_drift(base, k, e1, e2, c0);  // k1
        for (std::size_t n = 0; n < dim; ++n)
            stage[n] = base[n] + 0.5 * h * k[n];
        std::vector<Complex>& sum = k;  // accumulate weighted stages in place
        thread_local std::vector<Complex> k2;
        ops.apply_offdiag_drift(stage, k2, e1, e2, c0);  // k2
        for (std::size_t n = 0; n < dim; ++n) {
            sum[n] += 2.0 * k2[n];
            stage[n] = base[n] + 0.5 * h * k2[n];
        }
        ops.apply_offdiag_drift(stage, k2, e1, e2, c0);  // k3
        for (std::size_t n = 0; n < dim; ++n) {
            sum[n] += 2.0 * k2[n];
            stage[n] = base[n] + h * k2[n];
        }
        ops.apply_offdiag_drift(stage, k2, e1, e2, c0);  // k4
        for (std::size_t n = 0; n < dim; ++n)
            acc[n] = base[n] + (h / 6.0) * (sum[n] + k2[n]);
    }

    // Ito noise term on the pre-step state.
    for (std::size_t n = 0; n < dim; ++n) {
        acc[n] += noise_cav * (sk * apsi[n] - e1 * psi[n]) +
                  noise_mech * (sg * bpsi[n] - e2 * psi[n]);
    }

    // Exact propagation of the number-diagonal Hamiltonian and damping.
    const int nc = ops.truncation().n_cav, nm = ops.truncation().n_mech;
    thread_local std::vector<Complex> fa, fb;
    fa.resize(nc);
    fb.resize(nm);
    const double delta = ops.detuning();
    for (int i = 0; i < nc; ++i)
        fa[i] = std::exp(Complex(-0.5 * kappa * i, delta * i) * dt);
    for (int j = 0; j < nm; ++j)
        fb[j] = std::exp(Complex(-0.5 * gamma * j, -1.0 * j) * dt);
    for (int i = 0; i < nc; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nm;
        for (int j = 0; j < nm; ++j) psi[row + j] = fa[i] * fb[j] * acc[row + j];
    }

    const double norm = state.norm();
    if (norm < 1e-8) throw StepFailure("norm collapse in qsd step", tau);
    const double inv = 1.0 / norm;
    for (auto& c : psi) c *= inv;
}

namespace {

void record_sample(TrajectoryRecord& rec, const ModelOperators& ops,
                   const QuantumState& state, double tau, double alphaL,
                   double g0) {
    const Complex ea = ops.expect_a(state.amplitudes);
    const Complex eb = ops.expect_b(state.amplitudes);
    rec.times.push_back(tau);
    rec.exp_a.push_back(ea);
    rec.exp_b.push_back(eb);
    rec.exp_na.push_back(ops.expect_na(state.amplitudes));
    rec.exp_nb.push_back(ops.expect_nb(state.amplitudes));
    const double leak = ops.leakage(state.amplitudes);
    rec.leakage.push_back(leak);
    rec.max_leakage = std::max(rec.max_leakage, leak);
    const Complex alpha = alphaL > 0.0 ? ea / (2.0 * alphaL) : Complex{};
    const Complex beta = g0 * eb;
    rec.alpha.push_back(alpha);
    rec.beta.push_back(beta);
    const CanonicalCoords c = canonical_coords(beta);
    rec.x.push_back(c.x);
    rec.p.push_back(c.p);
}

}  // namespace

TrajectoryRecord run_trajectory_raw(const ModelOperators& ops,
                                    const QsdRunSpec& spec,
                                    std::uint64_t master_seed,
                                    std::uint64_t trajectory_index,
                                    const QuantumState* initial,
                                    double alphaL_rescale, double g0_rescale) {
    if (!(spec.dt > 0.0) || !(spec.tau_end > 0.0) || spec.sample_stride < 1)
        throw InvalidParams("invalid qsd run spec");
    if (spec.stepper != "euler" && spec.stepper != "split")
        throw InvalidParams("stepper must be \"euler\" or \"split\"");
    const bool split = spec.stepper == "split";
    QuantumState state =
        initial ? *initial : QuantumState::vacuum(ops.truncation());
    if (state.amplitudes.size() != ops.truncation().dim())
        throw InvalidParams("initial state dimension mismatch");

    GaussianStream rng(master_seed, trajectory_index);
    TrajectoryRecord rec;
    rec.master_seed = master_seed;
    rec.trajectory_index = trajectory_index;

    const long n_steps = std::lround(spec.tau_end / spec.dt);
    record_sample(rec, ops, state, 0.0, alphaL_rescale, g0_rescale);
    for (long k = 1; k <= n_steps; ++k) {
        const Complex dxi1 = rng.wiener(spec.dt);
        const Complex dxi2 = rng.wiener(spec.dt);
        const double tau = k * spec.dt;
        if (split)
            qsd_step_split(state, ops, spec.dt, dxi1, dxi2, tau);
        else
            qsd_step(state, ops, spec.dt, dxi1, dxi2, tau);
        if (k % spec.sample_stride == 0 || k == n_steps) {
            record_sample(rec, ops, state, tau, alphaL_rescale, g0_rescale);
            if (spec.enforce_leak_tol && rec.leakage.back() > spec.leak_tol)
                throw TruncationViolation(
                    "Fock-space leakage " +
                    std::to_string(rec.leakage.back()) + " exceeds tolerance "
                    "at tau = " + std::to_string(tau) +
                    "; increase the cutoffs");
        }
    }
    return rec;
}

TrajectoryRecord run_trajectory(const ModelParams& params,
                                HilbertTruncation trunc,
                                const QsdRunSpec& spec,
                                std::uint64_t master_seed,
                                std::uint64_t trajectory_index,
                                const QuantumState* initial) {
    const ModelOperators ops = build_operators(params, trunc);
    return run_trajectory_raw(ops, spec, master_seed, trajectory_index,
                              initial, ops.alphaL(), ops.g0());
}

std::vector<std::pair<double, double>> stroboscopic_section(
    const TrajectoryRecord& record, int discard_periods) {
    if (record.times.size() < 2)
        throw InvalidParams("record too short for a stroboscopic section");
    const double dt = record.times[1] - record.times[0];
    const double per_period = 2.0 * M_PI / dt;
    if (std::abs(per_period - std::round(per_period)) > 1e-6)
        throw InvalidParams(
            "sampling cadence does not divide the mechanical period");
    const long stride = std::lround(per_period);
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        const double k = record.times[i] / (2.0 * M_PI);
        const double kr = std::round(k);
        if (std::abs(k - kr) < 1e-9 * std::max(1.0, k) &&
            kr >= discard_periods)
            points.emplace_back(record.x[i], record.p[i]);
    }
    (void)stride;
    return points;
}

EnsembleRecord run_ensemble(const ModelParams& params, HilbertTruncation trunc,
                            const QsdRunSpec& spec, int n_traj,
                            std::uint64_t master_seed,
                            const QuantumState* initial) {
    if (n_traj < 1) throw InvalidParams("n_traj must be >= 1");
    const ModelOperators ops = build_operators(params, trunc);

    // Fixed-size blocks give a deterministic reduction independent of the
    // worker count: block partials are merged in index order.
    constexpr int kBlock = 16;
    const int n_blocks = (n_traj + kBlock - 1) / kBlock;

    struct Partial {
        // per time: sums of (re a, im a, re b, im b, na, nb, x) and squares
        std::vector<double> sum, sumsq;
        double max_leakage = 0.0;
        std::size_t n_times = 0;
    };
    std::vector<Partial> partials(n_blocks);

    parallel_for(n_blocks, [&](std::size_t bi) {
        Partial& part = partials[bi];
        const int lo = static_cast<int>(bi) * kBlock;
        const int hi = std::min(lo + kBlock, n_traj);
        for (int t = lo; t < hi; ++t) {
            TrajectoryRecord rec =
                run_trajectory_raw(ops, spec, master_seed,
                                   static_cast<std::uint64_t>(t), initial,
                                   ops.alphaL(), ops.g0());
            const std::size_t nt = rec.times.size();
            if (part.sum.empty()) {
                part.n_times = nt;
                part.sum.assign(nt * 7, 0.0);
                part.sumsq.assign(nt * 7, 0.0);
            }
            for (std::size_t i = 0; i < nt; ++i) {
                const double vals[7] = {rec.exp_a[i].real(),
                                        rec.exp_a[i].imag(),
                                        rec.exp_b[i].real(),
                                        rec.exp_b[i].imag(),
                                        rec.exp_na[i],
                                        rec.exp_nb[i],
                                        rec.x[i]};
                for (int q = 0; q < 7; ++q) {
                    part.sum[i * 7 + q] += vals[q];
                    part.sumsq[i * 7 + q] += vals[q] * vals[q];
                }
            }
            part.max_leakage = std::max(part.max_leakage, rec.max_leakage);
        }
    });

    // Reference run for the time grid (redundant but cheap bookkeeping
    // would otherwise thread the times through the partials).
    const std::size_t n_times = partials[0].n_times;
    std::vector<double> sum(n_times * 7, 0.0), sumsq(n_times * 7, 0.0);
    EnsembleRecord out;
    for (const auto& part : partials) {
        for (std::size_t i = 0; i < n_times * 7; ++i) {
            sum[i] += part.sum[i];
            sumsq[i] += part.sumsq[i];
        }
        out.max_leakage = std::max(out.max_leakage, part.max_leakage);
    }

    out.n_traj = n_traj;
    out.times.resize(n_times);
    const long n_steps = std::lround(spec.tau_end / spec.dt);
    std::size_t idx = 0;
    for (long k = 0; k <= n_steps; ++k)
        if (k == 0 || k % spec.sample_stride == 0 || k == n_steps)
            out.times[idx++] = k * spec.dt;

    const double inv_n = 1.0 / n_traj;
    auto stderr_of = [&](double s, double s2) {
        if (n_traj < 2) return 0.0;
        const double mean = s * inv_n;
        double var = (s2 - n_traj * mean * mean) / (n_traj - 1);
        var = std::max(var, 0.0);
        return std::sqrt(var * inv_n);
    };
    out.mean_a.resize(n_times);
    out.mean_b.resize(n_times);
    out.mean_na.resize(n_times);
    out.mean_nb.resize(n_times);
    out.mean_x.resize(n_times);
    out.stderr_re_a.resize(n_times);
    out.stderr_im_a.resize(n_times);
    out.stderr_re_b.resize(n_times);
    out.stderr_im_b.resize(n_times);
    out.stderr_na.resize(n_times);
    out.stderr_nb.resize(n_times);
    out.stderr_x.resize(n_times);
    for (std::size_t i = 0; i < n_times; ++i) {
        const double* s = &sum[i * 7];
        const double* s2 = &sumsq[i * 7];
        out.mean_a[i] = Complex(s[0] * inv_n, s[1] * inv_n);
        out.mean_b[i] = Complex(s[2] * inv_n, s[3] * inv_n);
        out.mean_na[i] = s[4] * inv_n;
        out.mean_nb[i] = s[5] * inv_n;
        out.mean_x[i] = s[6] * inv_n;
        out.stderr_re_a[i] = stderr_of(s[0], s2[0]);
        out.stderr_im_a[i] = stderr_of(s[1], s2[1]);
        out.stderr_re_b[i] = stderr_of(s[2], s2[2]);
        out.stderr_im_b[i] = stderr_of(s[3], s2[3]);
        out.stderr_na[i] = stderr_of(s[4], s2[4]);
        out.stderr_nb[i] = stderr_of(s[5], s2[5]);
        out.stderr_x[i] = stderr_of(s[6], s2[6]);
    }
    return out;
}

namespace {

Eigen::MatrixXcd dense_operator(const ModelOperators& ops,
                                void (ModelOperators::*apply)(
                                    const std::vector<Complex>&,
                                    std::vector<Complex>&) const) {
    const std::size_t dim = ops.truncation().dim();
    Eigen::MatrixXcd M(dim, dim);
    std::vector<Complex> e(dim), col;
    for (std::size_t j = 0; j < dim; ++j) {
        std::fill(e.begin(), e.end(), Complex{});
        e[j] = 1.0;
        (ops.*apply)(e, col);
        for (std::size_t i = 0; i < dim; ++i) M(i, j) = col[i];
    }
    return M;
}

}  // namespace

OracleRecord master_equation_oracle_raw(const ModelOperators& ops,
                                        const QsdRunSpec& spec,
                                        const QuantumState* initial) {
    const std::size_t dim = ops.truncation().dim();
    if (dim > 256)
        throw InvalidParams(
            "master-equation oracle limited to total dimension 256");

    const Eigen::MatrixXcd H =
        dense_operator(ops, &ModelOperators::apply_hamiltonian);
    const Eigen::MatrixXcd A = dense_operator(ops, &ModelOperators::apply_a);
    const Eigen::MatrixXcd B = dense_operator(ops, &ModelOperators::apply_b);
    const Eigen::MatrixXcd Na = A.adjoint() * A;
    const Eigen::MatrixXcd Nb = B.adjoint() * B;
    const double kappa = ops.kappa(), gamma = ops.gamma();

    auto lindblad_rhs = [&](const Eigen::MatrixXcd& rho) -> Eigen::MatrixXcd {
        Eigen::MatrixXcd d = -kI * (H * rho - rho * H);
        d += kappa * (A * rho * A.adjoint() -
                      0.5 * (Na * rho + rho * Na));
        d += gamma * (B * rho * B.adjoint() -
                      0.5 * (Nb * rho + rho * Nb));
        return d;
    };

    Eigen::VectorXcd psi0(dim);
    if (initial) {
        if (initial->amplitudes.size() != dim)
            throw InvalidParams("initial state dimension mismatch");
        for (std::size_t i = 0; i < dim; ++i) psi0(i) = initial->amplitudes[i];
    } else {
        psi0.setZero();
        psi0(0) = 1.0;
    }
    Eigen::MatrixXcd rho = psi0 * psi0.adjoint();

    OracleRecord rec;
    rec.min_eigenvalue = 1e300;
    auto sample = [&](double tau) {
        rec.times.push_back(tau);
        rec.exp_a.push_back((A * rho).trace());
        rec.exp_b.push_back((B * rho).trace());
        rec.exp_na.push_back((Na * rho).trace().real());
        rec.exp_nb.push_back((Nb * rho).trace().real());
        rec.trace_error.push_back(std::abs(rho.trace() - Complex(1.0, 0.0)));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            0.5 * (rho + rho.adjoint()));
        rec.min_eigenvalue =
            std::min(rec.min_eigenvalue, es.eigenvalues().minCoeff());
    };

    const long n_steps = std::lround(spec.tau_end / spec.dt);
    const double dt = spec.dt;
    sample(0.0);
    for (long k = 1; k <= n_steps; ++k) {
        const Eigen::MatrixXcd k1 = lindblad_rhs(rho);
        const Eigen::MatrixXcd k2 = lindblad_rhs(rho + 0.5 * dt * k1);
        const Eigen::MatrixXcd k3 = lindblad_rhs(rho + 0.5 * dt * k2);
        const Eigen::MatrixXcd k4 = lindblad_rhs(rho + dt * k3);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (k % spec.sample_stride == 0 || k == n_steps) sample(k * dt);
    }
    return rec;
}

OracleRecord master_equation_oracle(const ModelParams& params,
                                    HilbertTruncation trunc,
                                    const QsdRunSpec& spec,
                                    const QuantumState* initial) {
    const ModelOperators ops = build_operators(params, trunc);
    return master_equation_oracle_raw(ops, spec, initial);
}

}  // namespace optochaos
