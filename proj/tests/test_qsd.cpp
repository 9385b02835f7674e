#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "optochaos/qsd.hpp"
#include "optochaos/sc_dynamics.hpp"

using namespace optochaos;

namespace {

QuantumState coherent_product(Complex a, Complex b, HilbertTruncation t) {
    std::vector<Complex> ca(t.n_cav), cb(t.n_mech);
    ca[0] = 1.0;
    cb[0] = 1.0;
    for (int n = 1; n < t.n_cav; ++n)
        ca[n] = ca[n - 1] * a / std::sqrt(double(n));
    for (int n = 1; n < t.n_mech; ++n)
        cb[n] = cb[n - 1] * b / std::sqrt(double(n));
    QuantumState s = QuantumState::vacuum(t);
    for (int i = 0; i < t.n_cav; ++i)
        for (int j = 0; j < t.n_mech; ++j)
            s.amplitudes[i * t.n_mech + j] = ca[i] * cb[j];
    s.normalize();
    return s;
}

constexpr double kTau = 2.0 * 3.14159265358979323846;

std::vector<Complex> random_state(const HilbertTruncation& trunc,
                                  std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<Complex> psi(trunc.dim());
    double nrm = 0.0;
    for (auto& c : psi) {
        c = Complex(g(rng), g(rng));
        nrm += std::norm(c);
    }
    nrm = std::sqrt(nrm);
    for (auto& c : psi) c /= nrm;
    return psi;
}

// Dense Hamiltonian assembled from Kronecker structure, independent of the
// sparse apply routines.
Eigen::MatrixXcd dense_hamiltonian(const ModelOperators& ops) {
    const HilbertTruncation t = ops.truncation();
    const int nc = t.n_cav, nm = t.n_mech;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(nc, nc);
    for (int i = 1; i < nc; ++i) a(i - 1, i) = std::sqrt(double(i));
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(nm, nm);
    for (int j = 1; j < nm; ++j) b(j - 1, j) = std::sqrt(double(j));
    const Eigen::MatrixXcd ic = Eigen::MatrixXcd::Identity(nc, nc);
    const Eigen::MatrixXcd im = Eigen::MatrixXcd::Identity(nm, nm);
    auto kron = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
        Eigen::MatrixXcd r(x.rows() * y.rows(), x.cols() * y.cols());
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j)
                r.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) =
                    x(i, j) * y;
        return r;
    };
    const Eigen::MatrixXcd na = kron(a.adjoint() * a, im);
    const Eigen::MatrixXcd xb = kron(ic, b + b.adjoint());
    const Eigen::MatrixXcd nb = kron(ic, b.adjoint() * b);
    const Eigen::MatrixXcd ax = kron(a + a.adjoint(), im);
    return (-ops.detuning()) * na + ops.g0() * xb * na + nb +
           ops.alphaL() * ax;
}

}  // namespace

TEST_CASE("ladder operators act on basis states") {
    const HilbertTruncation t{4, 5};
    ModelOperators ops(-0.5, 1.0, 1e-3, 0.2, 0.7, t);
    std::vector<Complex> in(t.dim(), 0.0), out;
    for (int i = 0; i < t.n_cav; ++i) {
        for (int j = 0; j < t.n_mech; ++j) {
            std::fill(in.begin(), in.end(), Complex(0, 0));
            in[i * t.n_mech + j] = 1.0;
            ops.apply_a(in, out);
            for (int ii = 0; ii < t.n_cav; ++ii)
                for (int jj = 0; jj < t.n_mech; ++jj) {
                    const Complex expect =
                        (i > 0 && ii == i - 1 && jj == j)
                            ? Complex(std::sqrt(double(i)), 0)
                            : Complex(0, 0);
                    CHECK(std::abs(out[ii * t.n_mech + jj] - expect) < 1e-15);
                }
            ops.apply_b(in, out);
            for (int ii = 0; ii < t.n_cav; ++ii)
                for (int jj = 0; jj < t.n_mech; ++jj) {
                    const Complex expect =
                        (j > 0 && ii == i && jj == j - 1)
                            ? Complex(std::sqrt(double(j)), 0)
                            : Complex(0, 0);
                    CHECK(std::abs(out[ii * t.n_mech + jj] - expect) < 1e-15);
                }
        }
    }
}

TEST_CASE("Hamiltonian is Hermitian and matches the dense form") {
    const HilbertTruncation t{5, 6};
    ModelOperators ops(-0.7, 1.0, 1e-3, 0.3, 0.9, t);
    const Eigen::MatrixXcd h = dense_hamiltonian(ops);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937_64 rng(17u);
    std::vector<Complex> hpsi;
    for (int trial = 0; trial < 100; ++trial) {
        const auto psi = random_state(t, rng);
        const auto phi = random_state(t, rng);
        ops.apply_hamiltonian(psi, hpsi);
        Complex lhs = 0.0, rhs = 0.0;
        Eigen::VectorXcd vpsi(t.dim()), vphi(t.dim());
        for (std::size_t k = 0; k < t.dim(); ++k) {
            vpsi(k) = psi[k];
            vphi(k) = phi[k];
            lhs += std::conj(phi[k]) * hpsi[k];
        }
        rhs = (vphi.adjoint() * h * vpsi)(0);
        CHECK(std::abs(lhs - rhs) < 1e-12);
        // <psi|H|psi> is real.
        Complex diag = 0.0;
        for (std::size_t k = 0; k < t.dim(); ++k)
            diag += std::conj(psi[k]) * hpsi[k];
        CHECK(std::abs(diag.imag()) < 1e-12);
    }
}

TEST_CASE("expectation values against direct sums") {
    const HilbertTruncation t{4, 4};
    ModelOperators ops(0.3, 1.0, 1e-3, 0.1, 0.4, t);
    std::mt19937_64 rng(23u);
    const auto psi = random_state(t, rng);
    std::vector<Complex> buf;
    ops.apply_a(psi, buf);
    Complex ea = 0.0;
    for (std::size_t k = 0; k < t.dim(); ++k) ea += std::conj(psi[k]) * buf[k];
    CHECK(std::abs(ops.expect_a(psi) - ea) < 1e-14);
    double na = 0.0;
    for (int i = 0; i < t.n_cav; ++i)
        for (int j = 0; j < t.n_mech; ++j)
            na += i * std::norm(psi[i * t.n_mech + j]);
    CHECK(ops.expect_na(psi) == doctest::Approx(na).epsilon(1e-13));
}

TEST_CASE("undriven vacuum is a fixed point of the unraveling") {
    const HilbertTruncation t{4, 4};
    ModelOperators ops(-0.5, 1.0, 1e-3, 0.0, 0.0, t);
    QsdRunSpec spec;
    spec.tau_end = 2.0;
    spec.dt = 1e-3;
    spec.sample_stride = 100;
    const TrajectoryRecord rec = run_trajectory_raw(ops, spec, 42u, 0u);
    for (double v : rec.exp_na) CHECK(std::abs(v) < 1e-12);
    for (double v : rec.exp_nb) CHECK(std::abs(v) < 1e-12);
    CHECK(rec.max_leakage == 0.0);
}

TEST_CASE("decoupled cavity decays at the analytic rate") {
    // g0 = 0, no drive: <a>(tau) = <a>(0) exp[(i Delta - kappa/2) tau],
    // exact for every trajectory of the unraveling in expectation; the
    // density-matrix oracle must match it to integrator accuracy.
    const HilbertTruncation t{4, 2};
    const double detuning = 0.7;
    ModelOperators ops(detuning, 1.0, 0.0, 0.0, 0.0, t);
    QuantumState init = QuantumState::vacuum(t);
    init.amplitudes[0 * t.n_mech + 0] = 1.0 / std::sqrt(2.0);
    init.amplitudes[1 * t.n_mech + 0] = 1.0 / std::sqrt(2.0);

    QsdRunSpec spec;
    spec.tau_end = 3.0;
    spec.dt = 5e-4;
    spec.sample_stride = 200;
    spec.enforce_leak_tol = false;
    const OracleRecord oracle = master_equation_oracle_raw(ops, spec, &init);
    for (std::size_t k = 0; k < oracle.times.size(); ++k) {
        const Complex expect =
            0.5 * std::exp(Complex(0, detuning) * oracle.times[k] -
                           0.5 * oracle.times[k]);
        CHECK(std::abs(oracle.exp_a[k] - expect) < 1e-6);
    }
}

TEST_CASE("oracle preserves trace and positivity") {
    ModelParams p;
    p.detuning = -0.5;
    p.pump = 0.08;
    p.sigma = 0.5;
    const HilbertTruncation t{6, 6};
    QsdRunSpec spec;
    spec.tau_end = 8.0;
    spec.dt = 1e-3;
    spec.sample_stride = 400;
    const OracleRecord oracle = master_equation_oracle(p, t, spec);
    for (double e : oracle.trace_error) CHECK(e < 1e-8);
    CHECK(oracle.min_eigenvalue > -1e-10);
}

TEST_CASE("trajectory ensemble agrees with the master equation") {
    ModelParams p;
    p.detuning = -0.5;
    p.pump = 0.08;
    p.sigma = 0.5;
    const HilbertTruncation t{10, 16};
    QsdRunSpec spec;
    spec.tau_end = 5.0;
    spec.dt = kTau / 4096.0;
    spec.sample_stride = 256;
    // The deterministic oracle tolerates a much coarser RK4 step; keep the
    // sample instants aligned with the ensemble record.
    QsdRunSpec oracle_spec = spec;
    oracle_spec.dt = kTau / 256.0;
    oracle_spec.sample_stride = 16;
    const HilbertTruncation t_oracle{10, 12};
    const OracleRecord oracle = master_equation_oracle(p, t_oracle, oracle_spec);
    const EnsembleRecord ens = run_ensemble(p, t, spec, 128, 2024u);
    REQUIRE(ens.times.size() == oracle.times.size());
    for (std::size_t k = 1; k < ens.times.size(); ++k) {
        CAPTURE(ens.times[k]);
        // 3 standard errors plus a small time-discretization allowance.
        const double tol_re =
            3.0 * ens.stderr_re_a[k] + 5.0 * spec.dt;
        const double tol_im =
            3.0 * ens.stderr_im_a[k] + 5.0 * spec.dt;
        CHECK(std::abs(ens.mean_a[k].real() - oracle.exp_a[k].real()) <
              tol_re);
        CHECK(std::abs(ens.mean_a[k].imag() - oracle.exp_a[k].imag()) <
              tol_im);
        CHECK(std::abs(ens.mean_na[k] - oracle.exp_na[k]) <
              3.0 * ens.stderr_na[k] + 5.0 * spec.dt);
    }
}

TEST_CASE("split stepper matches the master equation and stays stable") {
    ModelParams p;
    p.detuning = -0.5;
    p.pump = 0.08;
    p.sigma = 0.5;
    const HilbertTruncation t{10, 16};
    QsdRunSpec spec;
    spec.tau_end = 5.0;
    spec.dt = kTau / 1024.0;
    spec.sample_stride = 64;
    spec.stepper = "split";
    QsdRunSpec oracle_spec = spec;
    oracle_spec.dt = kTau / 256.0;
    oracle_spec.sample_stride = 16;
    const HilbertTruncation t_oracle{10, 12};
    const OracleRecord oracle =
        master_equation_oracle(p, t_oracle, oracle_spec);
    const EnsembleRecord ens = run_ensemble(p, t, spec, 128, 2024u);
    REQUIRE(ens.times.size() == oracle.times.size());
    for (std::size_t k = 1; k < ens.times.size(); ++k) {
        CAPTURE(ens.times[k]);
        CHECK(std::abs(ens.mean_a[k].real() - oracle.exp_a[k].real()) <
              3.0 * ens.stderr_re_a[k] + 5.0 * spec.dt);
        CHECK(std::abs(ens.mean_na[k] - oracle.exp_na[k]) <
              3.0 * ens.stderr_na[k] + 5.0 * spec.dt);
    }

    // The plain Euler step amplifies high Fock levels when n * dt is not
    // small against the damping; the split step must stay contractive on a
    // basis where that regime is reached. Start on the SC attractor so the
    // occupations reflect the dynamics instead of a vacuum ring-up.
    ModelParams strong;
    strong.detuning = -0.7;
    strong.pump = 1.5;
    strong.sigma = 0.1;
    SCState seed;
    seed.alpha = {0.1, 0.0};
    seed.beta = {0.1, 0.0};
    const SCState w = evolve_sc(seed, strong, 0.0, 400.0 * kTau);
    const DerivedCouplings dc = derive_couplings(strong);
    const HilbertTruncation ts{96, 288};
    const QuantumState init = coherent_product(
        2.0 * dc.alphaL * w.alpha, w.beta / dc.g0, ts);
    QsdRunSpec sspec;
    sspec.tau_end = 2.0 * kTau;
    sspec.dt = kTau / 1024.0;
    sspec.sample_stride = 64;
    sspec.enforce_leak_tol = false;
    sspec.stepper = "split";
    const TrajectoryRecord rec =
        run_trajectory(strong, ts, sspec, 7u, 0u, &init);
    CHECK(rec.max_leakage < 1e-3);
    QsdRunSpec espec = sspec;
    espec.stepper = "euler";
    const TrajectoryRecord erec =
        run_trajectory(strong, ts, espec, 7u, 0u, &init);
    CHECK(erec.max_leakage > 100.0 * rec.max_leakage);

    // Unknown stepper names are rejected.
    QsdRunSpec bad = sspec;
    bad.stepper = "heun";
    CHECK_THROWS_AS(run_trajectory(strong, HilbertTruncation{4, 4}, bad, 1u),
                    InvalidParams);
}

TEST_CASE("same seeds give bit-identical trajectories") {
    ModelParams p;
    p.detuning = -0.5;
    p.pump = 0.08;
    p.sigma = 0.5;
    const HilbertTruncation t{5, 5};
    QsdRunSpec spec;
    spec.tau_end = 2.0;
    spec.dt = 1e-3;
    spec.sample_stride = 50;
    spec.leak_tol = 1e-3;
    const TrajectoryRecord a = run_trajectory(p, t, spec, 7u, 3u);
    const TrajectoryRecord b = run_trajectory(p, t, spec, 7u, 3u);
    REQUIRE(a.exp_a.size() == b.exp_a.size());
    for (std::size_t k = 0; k < a.exp_a.size(); ++k) {
        CHECK(a.exp_a[k] == b.exp_a[k]);
        CHECK(a.exp_na[k] == b.exp_na[k]);
        CHECK(a.x[k] == b.x[k]);
    }
    const TrajectoryRecord c = run_trajectory(p, t, spec, 7u, 4u);
    bool differs = false;
    for (std::size_t k = 0; k < a.exp_a.size(); ++k)
        if (a.exp_a[k] != c.exp_a[k]) differs = true;
    CHECK(differs);
}

TEST_CASE("ensemble reduction is independent of worker count") {
    ModelParams p;
    p.detuning = -0.5;
    p.pump = 0.08;
    p.sigma = 0.5;
    const HilbertTruncation t{4, 4};
    QsdRunSpec spec;
    spec.tau_end = 1.0;
    spec.dt = 1e-3;
    spec.sample_stride = 100;
    spec.leak_tol = 1e-3;
    setenv("OPTOCHAOS_THREADS", "1", 1);
    const EnsembleRecord serial = run_ensemble(p, t, spec, 48, 99u);
    setenv("OPTOCHAOS_THREADS", "3", 1);
    const EnsembleRecord threaded = run_ensemble(p, t, spec, 48, 99u);
    unsetenv("OPTOCHAOS_THREADS");
    REQUIRE(serial.times.size() == threaded.times.size());
    for (std::size_t k = 0; k < serial.times.size(); ++k) {
        CHECK(serial.mean_a[k] == threaded.mean_a[k]);
        CHECK(serial.mean_x[k] == threaded.mean_x[k]);
        CHECK(serial.stderr_x[k] == threaded.stderr_x[k]);
    }
}

TEST_CASE("stroboscopic section on a synthetic record") {
    TrajectoryRecord rec;
    const int spp = 16;
    for (int k = 0; k <= 40 * spp; ++k) {
        const double tau = kTau * k / spp;
        rec.times.push_back(tau);
        rec.x.push_back(std::cos(tau));
        rec.p.push_back(std::sin(tau));
    }
    const auto pts = stroboscopic_section(rec, 20);
    CHECK(pts.size() == 21);
    for (const auto& [x, p] : pts) {
        CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(p) < 1e-9);
    }
}

TEST_CASE("leakage guard trips on an undersized basis") {
    ModelParams p;
    p.detuning = 0.0;
    p.pump = 2.0;  // strong drive
    p.sigma = 0.1;
    const HilbertTruncation t{2, 2};
    QsdRunSpec spec;
    spec.tau_end = 5.0;
    spec.dt = 1e-3;
    spec.sample_stride = 10;
    spec.leak_tol = 1e-6;
    spec.enforce_leak_tol = true;
    CHECK_THROWS_AS(run_trajectory(p, t, spec, 1u, 0u), TruncationViolation);
}
