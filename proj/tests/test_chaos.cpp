#include <doctest.h>

#include <cmath>

#include "optochaos/chaos.hpp"

using namespace optochaos;

namespace {

SCState small_seed() {
    SCState s;
    s.alpha = {0.1, 0.0};
    s.beta = {0.1, 0.0};
    return s;
}

}  // namespace

TEST_CASE("undriven cantilever relaxes at -gamma/2") {
    ModelParams p;
    p.pump = 0.0;
    p.detuning = 1.0;
    SCState init;
    init.alpha = {0.4, -0.2};
    init.beta = {0.5, 0.3};
    LyapunovSpec spec;
    spec.n_steps = 4000;
    const LyapunovResult r = max_lyapunov(p, init, spec);
    // With P = 0 the slowest contraction is the cantilever ringdown.
    CHECK(std::abs(r.lambda_max + 0.5 * p.gamma) < 1e-4);
    CHECK(r.n_renorm == spec.n_steps - spec.discard);
}

TEST_CASE("chaotic and regular reference points") {
    ModelParams p;
    p.pump = 1.4;
    LyapunovSpec spec;
    spec.n_steps = 1500;

    p.detuning = -0.95;  // inside the chaotic window
    SCState s = evolve_sc(small_seed(), p, 0.0, 400.0 * kTwoPi);
    const LyapunovResult chaotic = max_lyapunov(p, s, spec);
    CHECK(chaotic.lambda_max > 1e-2);

    p.detuning = -0.5;  // regular limit cycle
    s = evolve_sc(small_seed(), p, 0.0, 400.0 * kTwoPi);
    const LyapunovResult regular = max_lyapunov(p, s, spec);
    CHECK(regular.lambda_max < 1e-3);
}

TEST_CASE("tangent and twin-trajectory estimates agree") {
    ModelParams p;
    p.pump = 1.4;
    p.detuning = -0.95;
    LyapunovSpec spec;
    spec.n_steps = 1200;
    const SCState s = evolve_sc(small_seed(), p, 0.0, 400.0 * kTwoPi);
    const LyapunovResult a = max_lyapunov(p, s, spec);
    const LyapunovResult b = max_lyapunov_twin(p, s, 1e-8, spec);
    const double tol = 2.0 * (a.stderr_ + b.stderr_) + 5e-3;
    CHECK(std::abs(a.lambda_max - b.lambda_max) < tol);
}

TEST_CASE("extrema of a pure cosine") {
    // Synthetic trajectory: beta chosen so that x(tau) = cos tau.
    SCTrajectory traj;
    traj.params = ModelParams{};
    traj.transient_cutoff = 0.0;
    const int samples_per_period = 128;
    const int periods = 50;
    for (int k = 0; k <= periods * samples_per_period; ++k) {
        const double tau = kTwoPi * k / samples_per_period;
        traj.times.push_back(tau);
        SCState s;
        s.beta = {std::cos(tau) / std::sqrt(2.0), 0.0};
        traj.states.push_back(s);
    }
    // Boundary maxima at tau = 0 and tau = 50*2pi are not interior points.
    const std::vector<double> maxima = extract_extrema(traj);
    CHECK(maxima.size() == periods - 1);
    for (double m : maxima) CHECK(std::abs(m - 1.0) < 1e-4);
}

TEST_CASE("period detection on labelled sequences") {
    SUBCASE("constant maxima are period 1") {
        const std::vector<double> m(32, 0.734);
        const PeriodDetection d = detect_period(m);
        CHECK(d.periodic);
        CHECK(d.n == 1);
    }
    SUBCASE("alternating maxima are period 2") {
        std::vector<double> m;
        for (int i = 0; i < 16; ++i) {
            m.push_back(0.1);
            m.push_back(0.9);
        }
        const PeriodDetection d = detect_period(m);
        CHECK(d.periodic);
        CHECK(d.n == 2);
    }
    SUBCASE("four-cycle") {
        std::vector<double> m;
        for (int i = 0; i < 8; ++i) {
            m.push_back(0.1);
            m.push_back(0.9);
            m.push_back(0.15);
            m.push_back(0.7);
        }
        const PeriodDetection d = detect_period(m, 0.01);
        CHECK(d.periodic);
        CHECK(d.n == 4);
    }
    SUBCASE("noise is aperiodic") {
        std::vector<double> m;
        double v = 0.5;
        for (int i = 0; i < 64; ++i) {
            v = 3.9 * v * (1.0 - v);  // well-mixed values
            m.push_back(v);
        }
        const PeriodDetection d = detect_period(m, 0.01);
        CHECK(!d.periodic);
    }
}

TEST_CASE("classification at reference points") {
    ModelParams p;
    SUBCASE("stationary below threshold") {
        p.pump = 0.5;
        p.detuning = -0.5;
        const AttractorClass c = classify_attractor(p, small_seed());
        CHECK(c.kind == AttractorKind::stationary);
    }
    SUBCASE("period-1 limit cycle") {
        p.pump = 1.3;
        p.detuning = -0.4;
        const AttractorClass c = classify_attractor(p, small_seed());
        CHECK(c.kind == AttractorKind::periodic);
        CHECK(c.period_multiplier == 1);
        CHECK(c.lyapunov.lambda_max < 1e-3);
    }
    SUBCASE("period-2 after the first doubling") {
        p.pump = 1.3;
        p.detuning = -0.8;
        const AttractorClass c = classify_attractor(p, small_seed());
        CHECK(c.kind == AttractorKind::periodic);
        CHECK(c.period_multiplier == 2);
    }
    SUBCASE("chaotic window") {
        p.pump = 1.4;
        p.detuning = -0.95;
        const AttractorClass c = classify_attractor(p, small_seed());
        CHECK(c.kind == AttractorKind::chaotic);
        CHECK(c.lyapunov.lambda_max > 1e-3);
    }
}

TEST_CASE("bifurcation sweep structure") {
    ModelParams p;
    p.pump = 1.3;
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(-0.9 + 0.05 * i);
    const BifurcationDiagram d = bifurcation_sweep(p, grid);
    REQUIRE(d.points.size() == grid.size());
    CHECK(d.axis_name == "detuning");
    int doubled = 0;
    int single = 0;
    for (const BifurcationPoint& pt : d.points) {
        REQUIRE(!pt.error.has_value());
        CHECK(!pt.maxima.empty());
        CHECK(!pt.cold_maxima.empty());
        if (pt.cls.kind == AttractorKind::periodic) {
            if (pt.cls.period_multiplier >= 2) ++doubled;
            if (pt.cls.period_multiplier == 1) ++single;
        }
    }
    // The grid straddles the first doubling near Delta = -0.5.
    CHECK(doubled > 0);
    CHECK(single > 0);
}
