#ifndef OPTOCHAOS_INTEGRATOR_HPP
#define OPTOCHAOS_INTEGRATOR_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace optochaos {

/// Thrown when an adaptive step underflows or the state leaves the
/// finite range; carries the time of failure.
struct IntegrationFailure : std::runtime_error {
    double tau_at_failure;
    IntegrationFailure(const std::string& what, double tau)
        : std::runtime_error(what + " at tau = " + std::to_string(tau)),
          tau_at_failure(tau) {}
};

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double initial_step = 1e-3;
    double max_step = 0.5;
};

/// Adaptive Dormand-Prince 5(4) stepper on a fixed-size real state.
/// The right-hand side is any callable rhs(t, y, dydt).
template <std::size_t N, typename RHS>
class DormandPrince {
public:
    using State = std::array<double, N>;

    DormandPrince(RHS rhs, IntegratorOptions opts = {})
        : rhs_(rhs), opts_(opts), h_(opts.initial_step) {}

    /// Advances y from t0 to t1 (t1 > t0), adapting the internal step and
    /// clamping the last step onto t1 exactly.
    void integrate_to(State& y, double t0, double t1) {
        double t = t0;
        while (t < t1) {
            double h = std::min(h_, t1 - t);
            bool last = (h >= t1 - t - 1e-14 * std::abs(t1));
            double err = try_step(y, t, h);
            if (err <= 1.0) {
                t = last ? t1 : t + h;
                y = y_new_;
                if (!finite(y))
                    throw IntegrationFailure("non-finite state", t);
                grow_step(err, h, last);
            } else {
                shrink_step(err, h, t);
            }
        }
    }

    double current_step() const { return h_; }

private:
    static bool finite(const State& y) {
        for (double v : y)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Returns the scaled error estimate of one trial step of size h;
    // the result state is left in y_new_.
    double try_step(const State& y, double t, double h) {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                                c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15,
                                a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                                a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                                b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                                b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                                e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                                e6 = 22.0 / 525, e7 = -1.0 / 40;

        rhs_(t, y, k1_);
        axpy(y, h, {{a21, 0, 0, 0, 0, 0}}, tmp_);
        rhs_(t + c2 * h, tmp_, k2_);
        axpy(y, h, {{a31, a32, 0, 0, 0, 0}}, tmp_);
        rhs_(t + c3 * h, tmp_, k3_);
        axpy(y, h, {{a41, a42, a43, 0, 0, 0}}, tmp_);
        rhs_(t + c4 * h, tmp_, k4_);
        axpy(y, h, {{a51, a52, a53, a54, 0, 0}}, tmp_);
        rhs_(t + c5 * h, tmp_, k5_);
        axpy(y, h, {{a61, a62, a63, a64, a65, 0}}, tmp_);
        rhs_(t + h, tmp_, k6_);
        axpy(y, h, {{b1, 0, b3, b4, b5, b6}}, y_new_);
        rhs_(t + h, y_new_, k7_);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] +
                            e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
            double sc = opts_.abs_tol +
                        opts_.rel_tol *
                            std::max(std::abs(y[i]), std::abs(y_new_[i]));
            err += (e / sc) * (e / sc);
        }
        return std::sqrt(err / N);
    }

    void axpy(const State& y, double h, const std::array<double, 6>& a,
              State& out) const {
        const State* ks[6] = {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_};
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 6; ++j)
                if (a[j] != 0.0) acc += a[j] * (*ks[j])[i];
            out[i] = y[i] + h * acc;
        }
    }

    void grow_step(double err, double h, bool clamped) {
        double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        fac = std::min(fac, 5.0);
        double hn = h * fac;
        // A clamped final step must not shrink the running step size.
        h_ = clamped ? std::max(h_, std::min(hn, opts_.max_step))
                     : std::min(hn, opts_.max_step);
    }

    void shrink_step(double err, double h, double t) {
        double fac = std::max(0.9 * std::pow(err, -0.2), 0.1);
        h_ = h * fac;
        if (h_ < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationFailure("step size underflow", t);
    }

    RHS rhs_;
    IntegratorOptions opts_;
    double h_;
    State k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{}, tmp_{}, y_new_{};
};

}  // namespace optochaos

#endif
