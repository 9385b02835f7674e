#include "optochaos/ansatz.hpp"

#include <algorithm>
#include <cmath>

#include "optochaos/sc_dynamics.hpp"

namespace optochaos {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kTailTol = 1e-12;

double besselJ(int m, double z) {
    if (m < 0) {
        const double v = besselJ(-m, z);
        return (m % 2 == 0) ? v : -v;
    }
    if (z == 0.0) return m == 0 ? 1.0 : 0.0;
    return std::cyl_bessel_j(static_cast<double>(m), z);
}

double tail_ratio(const std::vector<Complex>& c) {
    double peak = 0.0;
    for (const auto& v : c) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return 0.0;
    return std::max(std::abs(c.front()), std::abs(c.back())) / peak;
}

int default_truncation(double amplitude) {
    return static_cast<int>(std::ceil(4.0 + 3.0 * std::sqrt(2.0) * amplitude));
}

FourierResponse bessel_route(double xbar, double amplitude,
                             const ModelParams& params, int N) {
    const double z = std::sqrt(2.0) * amplitude;
    const double delta = params.detuning - std::sqrt(2.0) * xbar;
    const int M = N + 8;
    std::vector<double> J(2 * M + 2 * N + 1);  // J[m + M + N] = J_m(z)
    for (int m = -M - N; m <= M + N; ++m) J[m + M + N] = besselJ(m, z);
    std::vector<Complex> c(2 * M + 1);
    for (int m = -M; m <= M; ++m)
        c[m + M] = (0.5 * kI) * J[m + M + N] /
                   (kI * (delta - m) - 0.5 * params.kappa);
    FourierResponse resp;
    resp.truncation = N;
    resp.coefficients.assign(2 * N + 1, Complex{});
    for (int n = -N; n <= N; ++n) {
        Complex acc{};
        for (int m = -M; m <= M; ++m) acc += c[m + M] * J[m - n + M + N];
        resp.coefficients[n + N] = acc;
    }
    return resp;
}

FourierResponse recurrence_route(double xbar, double amplitude,
                                 const ModelParams& params, int N) {
    const double z = std::sqrt(2.0) * amplitude;
    const double delta = params.detuning - std::sqrt(2.0) * xbar;
    const int dim = 2 * N + 1;
    // Thomas algorithm on the tridiagonal Fourier-space system
    //   [i(delta-n) - kappa/2] a_n - i(z/2)(a_{n-1} + a_{n+1}) = (i/2) d_{n0}
    std::vector<Complex> diag(dim), rhs(dim, Complex{});
    const Complex off = -kI * 0.5 * z;
    for (int n = -N; n <= N; ++n)
        diag[n + N] = kI * (delta - n) - 0.5 * params.kappa;
    rhs[N] = 0.5 * kI;

    std::vector<Complex> cp(dim), dp(dim);
    cp[0] = off / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (int i = 1; i < dim; ++i) {
        const Complex denom = diag[i] - off * cp[i - 1];
        cp[i] = off / denom;
        dp[i] = (rhs[i] - off * dp[i - 1]) / denom;
    }
    FourierResponse resp;
    resp.truncation = N;
    resp.coefficients.assign(dim, Complex{});
    resp.coefficients[dim - 1] = dp[dim - 1];
    for (int i = dim - 2; i >= 0; --i)
        resp.coefficients[i] = dp[i] - cp[i] * resp.coefficients[i + 1];
    return resp;
}

template <typename Route>
FourierResponse with_truncation(Route route, double amplitude,
                                int truncation) {
    if (truncation > 0) {
        FourierResponse resp = route(truncation);
        if (tail_ratio(resp.coefficients) > kTailTol)
            throw TruncationError(
                "Fourier truncation too small: coefficient tail has not "
                "decayed");
        return resp;
    }
    int N = default_truncation(amplitude);
    for (int attempt = 0; attempt < 12; ++attempt) {
        FourierResponse resp = route(N);
        if (tail_ratio(resp.coefficients) <= kTailTol) return resp;
        N = N + N / 2 + 4;
    }
    throw TruncationError("Fourier truncation did not converge");
}

}  // namespace

Complex FourierResponse::evaluate(double tau) const {
    Complex acc{};
    for (int n = -truncation; n <= truncation; ++n)
        acc += coeff(n) * std::exp(kI * (static_cast<double>(n) * tau));
    return acc;
}

FourierResponse cavity_fourier_response(double xbar, double amplitude,
                                        const ModelParams& params,
                                        int truncation) {
    if (amplitude < 0.0) throw InvalidParams("amplitude must be nonnegative");
    return with_truncation(
        [&](int N) { return bessel_route(xbar, amplitude, params, N); },
        amplitude, truncation);
}

FourierResponse cavity_fourier_response_recurrence(double xbar,
                                                   double amplitude,
                                                   const ModelParams& params,
                                                   int truncation) {
    if (amplitude < 0.0) throw InvalidParams("amplitude must be nonnegative");
    return with_truncation(
        [&](int N) { return recurrence_route(xbar, amplitude, params, N); },
        amplitude, truncation);
}

std::pair<double, double> ansatz_residuals(double xbar, double amplitude,
                                           const ModelParams& params) {
    const FourierResponse resp =
        cavity_fourier_response(xbar, amplitude, params);
    const int N = resp.truncation;

    // Harmonics f_k of |alpha(tau)|^2 for k = 0, 1, -1.
    auto intensity_harmonic = [&](int k) {
        Complex acc{};
        for (int n = -N; n <= N; ++n) {
            const int m = n + k;
            if (m < -N || m > N) continue;
            acc += resp.coeff(m) * std::conj(resp.coeff(n));
        }
        return acc;
    };

    // Exact periodic cantilever response to the intensity forcing:
    //   beta_k = -i (P/2) f_k / (i(k+1) + gamma/2)
    auto beta_harmonic = [&](int k) {
        const Complex f = intensity_harmonic(k);
        return -kI * (0.5 * params.pump) * f /
               (kI * static_cast<double>(k + 1) + 0.5 * params.gamma);
    };

    const Complex b0 = beta_harmonic(0);
    const Complex b1 = beta_harmonic(1);
    const Complex bm1 = beta_harmonic(-1);

    const double x_dc = std::sqrt(2.0) * b0.real();
    // x(tau) first harmonic: x_1 e^{i tau} + c.c. with
    // x_1 = (beta_1 + conj(beta_{-1})) / sqrt(2); its magnitude is
    // phase-free, which absorbs the time-translation freedom.
    const Complex x1 = (b1 + std::conj(bm1)) / std::sqrt(2.0);
    const double r_dc = x_dc - xbar;
    const double r_harm = 2.0 * std::abs(x1) - amplitude;
    return {r_dc, r_harm};
}

namespace {

struct Candidate {
    double xbar, amplitude;
};

bool newton_refine(Candidate& c, const ModelParams& params, double tol,
                   double* res_norm_out) {
    auto res = [&](const Candidate& q) {
        auto [rd, rh] = ansatz_residuals(q.xbar, std::max(q.amplitude, 0.0),
                                         params);
        return std::array<double, 2>{rd, rh};
    };
    auto norm2 = [](const std::array<double, 2>& r) {
        return std::hypot(r[0], r[1]);
    };
    auto r = res(c);
    double rn = norm2(r);
    for (int iter = 0; iter < 60; ++iter) {
        if (rn < tol) {
            if (res_norm_out) *res_norm_out = rn;
            return true;
        }
        const double hx = 1e-7 * std::max(1.0, std::abs(c.xbar));
        const double ha = 1e-7 * std::max(1.0, std::abs(c.amplitude));
        auto rxp = res({c.xbar + hx, c.amplitude});
        auto rxm = res({c.xbar - hx, c.amplitude});
        auto rap = res({c.xbar, c.amplitude + ha});
        auto ram = res({c.xbar, c.amplitude - ha});
        const double j00 = (rxp[0] - rxm[0]) / (2 * hx);
        const double j01 = (rap[0] - ram[0]) / (2 * ha);
        const double j10 = (rxp[1] - rxm[1]) / (2 * hx);
        const double j11 = (rap[1] - ram[1]) / (2 * ha);
        const double det = j00 * j11 - j01 * j10;
        if (!std::isfinite(det) || std::abs(det) < 1e-300) return false;
        const double dx = (j11 * r[0] - j01 * r[1]) / det;
        const double da = (-j10 * r[0] + j00 * r[1]) / det;
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 10; ++k) {
            Candidate trial{c.xbar - lambda * dx,
                            std::max(c.amplitude - lambda * da, 0.0)};
            auto rt = res(trial);
            const double rtn = norm2(rt);
            if (rtn < rn) {
                c = trial;
                r = rt;
                rn = rtn;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) return false;
    }
    if (rn < tol) {
        if (res_norm_out) *res_norm_out = rn;
        return true;
    }
    return false;
}

}  // namespace

std::vector<std::vector<AnsatzSolution>> solve_ansatz_branches(
    const ModelParams& params_template, const std::vector<double>& detunings) {
    if (detunings.empty()) throw InvalidParams("empty detuning grid");
    const double tol = 1e-10;

    std::vector<std::vector<AnsatzSolution>> result(detunings.size());
    std::vector<AnsatzSolution> previous;
    int next_branch_id = 1;

    for (std::size_t gi = 0; gi < detunings.size(); ++gi) {
        ModelParams params = params_template;
        params.detuning = detunings[gi];

        std::vector<AnsatzSolution> found;
        // A = 0 branch: exact fixed points of the SC system.
        for (const auto& fp : fixed_points(params)) {
            const double xb = std::sqrt(2.0) * fp.state.beta.real();
            found.push_back(AnsatzSolution{xb, 0.0, 0.0, 0});
        }

        std::vector<Candidate> seeds;
        for (const auto& prev : previous)
            if (prev.amplitude > 0.0)
                seeds.push_back({prev.xbar, prev.amplitude});
        for (const auto& s0 : found)
            for (double a : {0.3, 0.6, 1.0, 1.5, 2.0, 2.5})
                seeds.push_back({s0.xbar, a});

        for (auto seed : seeds) {
            double rn = 0.0;
            if (!newton_refine(seed, params, tol, &rn)) continue;
            if (seed.amplitude < 1e-6) continue;  // collapsed onto A = 0
            bool duplicate = false;
            for (const auto& s : found)
                if (std::abs(s.xbar - seed.xbar) < 1e-6 &&
                    std::abs(s.amplitude - seed.amplitude) < 1e-6)
                    duplicate = true;
            if (duplicate) continue;
            // Branch id by continuation: nearest previous solution.
            int id = -1;
            double best = 0.25 + 10.0 * (gi > 0 ? std::abs(detunings[gi] -
                                                           detunings[gi - 1])
                                                : 0.0);
            for (const auto& prev : previous) {
                if (prev.amplitude == 0.0) continue;
                const double d = std::hypot(prev.xbar - seed.xbar,
                                            prev.amplitude - seed.amplitude);
                if (d < best) {
                    best = d;
                    id = prev.branch_id;
                }
            }
            if (id < 0) id = next_branch_id++;
            found.push_back(AnsatzSolution{seed.xbar, seed.amplitude, rn, id});
        }
        result[gi] = found;
        previous = found;
    }
    return result;
}

}  // namespace optochaos
