#include "optochaos/sc_dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace optochaos {

namespace {
constexpr Complex kI{0.0, 1.0};
}

SCState sc_rhs(const SCState& state, const ModelParams& params) {
    const Complex& a = state.alpha;
    const Complex& b = state.beta;
    const double s = 2.0 * b.real();  // beta + beta*
    SCState d;
    d.alpha = kI * (params.detuning * a - s * a - 0.5) - 0.5 * params.kappa * a;
    d.beta = -kI * (0.5 * params.pump * std::norm(a) + b) -
             0.5 * params.gamma * b;
    return d;
}

std::array<double, 4> pack_state(const SCState& s) {
    return {s.alpha.real(), s.alpha.imag(), s.beta.real(), s.beta.imag()};
}

SCState unpack_state(const std::array<double, 4>& y) {
    return SCState{Complex(y[0], y[1]), Complex(y[2], y[3])};
}

std::array<double, 16> sc_jacobian(const SCState& state,
                                   const ModelParams& params) {
    const double ar = state.alpha.real(), ai = state.alpha.imag();
    const double deff = params.detuning - 2.0 * state.beta.real();
    const double hk = 0.5 * params.kappa, hg = 0.5 * params.gamma;
    const double P = params.pump;
    // rows: d(Re a), d(Im a), d(Re b), d(Im b)
    return {
        -hk,     -deff, 2.0 * ai, 0.0,  //
        deff,    -hk,   -2.0 * ar, 0.0,  //
        0.0,     0.0,   -hg,      1.0,  //
        -P * ar, -P * ai, -1.0,   -hg,
    };
}

TangentState sc_jacobian_apply(const SCState& state, const TangentState& delta,
                               const ModelParams& params) {
    const auto J = sc_jacobian(state, params);
    TangentState out{};
    for (int r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (int c = 0; c < 4; ++c) acc += J[4 * r + c] * delta[c];
        out[r] = acc;
    }
    return out;
}

namespace {

struct SCSystem {
    ModelParams params;
    void operator()(double /*t*/, const std::array<double, 4>& y,
                    std::array<double, 4>& dydt) const {
        const SCState d = sc_rhs(unpack_state(y), params);
        dydt = pack_state(d);
    }
};

}  // namespace

SCTrajectory integrate_sc(const SCState& initial, const ModelParams& params,
                          double tau0, double tau1,
                          const SamplingSpec& sampling) {
    validate_params(params);
    if (!(tau1 > tau0))
        throw InvalidParams("integration span must have tau1 > tau0");
    if (!(sampling.step > 0.0))
        throw InvalidParams("sampling step must be positive");

    DormandPrince<4, SCSystem> stepper(SCSystem{params}, sampling.integrator);
    std::array<double, 4> y = pack_state(initial);

    SCTrajectory traj;
    traj.params = params;
    const std::size_t n = static_cast<std::size_t>(
        std::floor((tau1 - tau0) / sampling.step + 0.5));
    traj.times.reserve(n + 1);
    traj.states.reserve(n + 1);
    traj.times.push_back(tau0);
    traj.states.push_back(initial);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_prev = tau0 + (k - 1) * sampling.step;
        const double t_next = tau0 + k * sampling.step;
        stepper.integrate_to(y, t_prev, t_next);
        traj.times.push_back(t_next);
        traj.states.push_back(unpack_state(y));
    }
    return traj;
}

SCState evolve_sc(const SCState& initial, const ModelParams& params,
                  double tau0, double tau1, const IntegratorOptions& opts) {
    DormandPrince<4, SCSystem> stepper(SCSystem{params}, opts);
    std::array<double, 4> y = pack_state(initial);
    stepper.integrate_to(y, tau0, tau1);
    return unpack_state(y);
}

std::vector<FixedPoint> fixed_points(const ModelParams& params) {
    validate_params(params);
    const double kappa = params.kappa, gamma = params.gamma;
    const double Delta = params.detuning, P = params.pump;
    const double c = P / (1.0 + 0.25 * gamma * gamma);

    // Photon-number roots of the stationarity cubic.
    std::vector<double> roots;
    const double q = Delta * Delta + 0.25 * kappa * kappa;
    if (c == 0.0) {
        roots.push_back(0.25 / q);
    } else {
        // c^2 n^3 + 2 Delta c n^2 + q n - 1/4 = 0
        Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
        const double c2 = c * c;
        companion(0, 2) = 0.25 / c2;
        companion(1, 2) = -q / c2;
        companion(2, 2) = -2.0 * Delta / c;
        companion(1, 0) = 1.0;
        companion(2, 1) = 1.0;
        Eigen::EigenSolver<Eigen::Matrix3d> es(companion);
        for (int i = 0; i < 3; ++i) {
            const auto ev = es.eigenvalues()[i];
            if (std::abs(ev.imag()) < 1e-10 * std::max(1.0, std::abs(ev)) &&
                ev.real() > 0.0)
                roots.push_back(ev.real());
        }
        std::sort(roots.begin(), roots.end());
        // Deduplicate near-degenerate roots (saddle-node points).
        for (std::size_t i = 1; i < roots.size();) {
            if (roots[i] - roots[i - 1] < 1e-9 * std::max(1.0, roots[i]))
                roots.erase(roots.begin() + i);
            else
                ++i;
        }
    }

    std::vector<FixedPoint> result;
    for (double n : roots) {
        const double deff = Delta + c * n;
        const Complex alpha = (0.5 * kI) / (kI * deff - 0.5 * kappa);
        const Complex beta =
            (-kI * 0.5 * P * n) / (kI + Complex(0.5 * gamma, 0.0));
        FixedPoint fp;
        fp.state = SCState{alpha, beta};
        const auto J = sc_jacobian(fp.state, params);
        Eigen::Matrix4d M;
        for (int r = 0; r < 4; ++r)
            for (int col = 0; col < 4; ++col) M(r, col) = J[4 * r + col];
        Eigen::EigenSolver<Eigen::Matrix4d> es(M);
        double max_re = -1e300;
        for (int i = 0; i < 4; ++i)
            max_re = std::max(max_re, es.eigenvalues()[i].real());
        fp.max_real_eigenvalue = max_re;
        fp.stable = max_re < 0.0;
        result.push_back(fp);
    }
    return result;
}

}  // namespace optochaos
