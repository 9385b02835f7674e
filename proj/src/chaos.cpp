#include "optochaos/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "optochaos/parallel.hpp"

namespace optochaos {

namespace {

// Fiducial trajectory plus tangent vector as one 8-dimensional system.
struct TangentSystem {
    ModelParams params;
    void operator()(double /*t*/, const std::array<double, 8>& y,
                    std::array<double, 8>& dydt) const {
        std::array<double, 4> ys{y[0], y[1], y[2], y[3]};
        const SCState s = unpack_state(ys);
        const auto ds = pack_state(sc_rhs(s, params));
        const TangentState dd =
            sc_jacobian_apply(s, {y[4], y[5], y[6], y[7]}, params);
        for (int i = 0; i < 4; ++i) {
            dydt[i] = ds[i];
            dydt[4 + i] = dd[i];
        }
    }
};

LyapunovResult finish_lyapunov(const std::vector<double>& log_growth,
                               const LyapunovSpec& spec) {
    const int K = static_cast<int>(log_growth.size());
    const double sum = std::accumulate(log_growth.begin(), log_growth.end(), 0.0);
    LyapunovResult res;
    res.n_renorm = K;
    res.lambda_max = sum / (K * spec.renorm_interval);
    const int half = K / 2;
    const int n2 = K - half;
    double mean2 = 0.0;
    for (int k = half; k < K; ++k) mean2 += log_growth[k];
    mean2 /= n2;
    double var = 0.0;
    for (int k = half; k < K; ++k)
        var += (log_growth[k] - mean2) * (log_growth[k] - mean2);
    var /= std::max(n2 - 1, 1);
    res.stderr_ = std::sqrt(var / n2) / spec.renorm_interval;
    return res;
}

double auto_cluster_eps(const std::vector<double>& maxima) {
    const auto [lo, hi] = std::minmax_element(maxima.begin(), maxima.end());
    const double range = *hi - *lo;
    double scale = 0.0;
    for (double v : maxima) scale = std::max(scale, std::abs(v));
    // Floor keeps integrator-level jitter on a period-1 orbit from
    // splitting into spurious clusters; right at a period-doubling the
    // residual split of the settling orbit sits well below 1e-4 * scale.
    return std::max(1e-3 * range, 1e-9 + 1e-4 * scale);
}

}  // namespace

LyapunovResult max_lyapunov(const ModelParams& params, const SCState& initial,
                            const LyapunovSpec& spec) {
    if (spec.n_steps <= spec.discard || spec.renorm_interval <= 0.0)
        throw InvalidParams("invalid Lyapunov spec");
    DormandPrince<8, TangentSystem> stepper(TangentSystem{params},
                                            spec.integrator);
    std::array<double, 8> y{};
    const auto y0 = pack_state(initial);
    for (int i = 0; i < 4; ++i) y[i] = y0[i];
    // Fixed non-degenerate initial tangent direction.
    const double inv = 0.5;
    y[4] = inv;
    y[5] = inv;
    y[6] = inv;
    y[7] = inv;

    std::vector<double> log_growth;
    log_growth.reserve(spec.n_steps - spec.discard);
    double t = 0.0;
    for (int k = 0; k < spec.n_steps; ++k) {
        stepper.integrate_to(y, t, t + spec.renorm_interval);
        t += spec.renorm_interval;
        double norm = 0.0;
        for (int i = 4; i < 8; ++i) norm += y[i] * y[i];
        norm = std::sqrt(norm);
        if (!(norm > 1e-300))
            throw IntegrationFailure("tangent vector collapsed", t);
        for (int i = 4; i < 8; ++i) y[i] /= norm;
        if (k >= spec.discard) log_growth.push_back(std::log(norm));
    }
    return finish_lyapunov(log_growth, spec);
}

LyapunovResult max_lyapunov_twin(const ModelParams& params,
                                 const SCState& initial, double separation,
                                 const LyapunovSpec& spec) {
    if (!(separation > 0.0)) throw InvalidParams("separation must be > 0");
    IntegratorOptions opts = spec.integrator;
    SCState a = initial;
    SCState b = initial;
    b.alpha += separation / std::sqrt(2.0);
    b.beta += separation / std::sqrt(2.0);

    std::vector<double> log_growth;
    log_growth.reserve(spec.n_steps - spec.discard);
    double t = 0.0;
    for (int k = 0; k < spec.n_steps; ++k) {
        a = evolve_sc(a, params, t, t + spec.renorm_interval, opts);
        b = evolve_sc(b, params, t, t + spec.renorm_interval, opts);
        t += spec.renorm_interval;
        const auto ya = pack_state(a);
        const auto yb = pack_state(b);
        double d = 0.0;
        for (int i = 0; i < 4; ++i) d += (yb[i] - ya[i]) * (yb[i] - ya[i]);
        d = std::sqrt(d);
        if (!(d > 1e-300))
            throw IntegrationFailure("twin separation collapsed", t);
        const double growth = d / separation;
        // Rescale the twin back onto the reference separation.
        SCState nb;
        nb.alpha = a.alpha + (b.alpha - a.alpha) / growth;
        nb.beta = a.beta + (b.beta - a.beta) / growth;
        b = nb;
        if (k >= spec.discard) log_growth.push_back(std::log(growth));
    }
    return finish_lyapunov(log_growth, spec);
}

std::vector<double> extract_extrema(const SCTrajectory& traj) {
    std::vector<double> x;
    x.reserve(traj.states.size());
    std::size_t first = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        if (traj.times[i] < traj.transient_cutoff) first = i + 1;
    for (std::size_t i = first; i < traj.states.size(); ++i)
        x.push_back(canonical_coords(traj.states[i].beta).x);
    if (x.size() < 3)
        throw InvalidParams("fewer than 3 post-transient samples");

    std::vector<double> maxima;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > x[i - 1] && x[i] >= x[i + 1]) {
            const double denom = x[i + 1] - 2.0 * x[i] + x[i - 1];
            double value = x[i];
            if (denom < 0.0) {
                const double d = x[i + 1] - x[i - 1];
                value = x[i] - d * d / (8.0 * denom);
            }
            maxima.push_back(value);
        }
    }
    return maxima;
}

PeriodDetection detect_period(const std::vector<double>& maxima,
                              double cluster_eps) {
    if (maxima.size() < 32)
        return PeriodDetection{false, 0};
    const double eps =
        cluster_eps > 0.0 ? cluster_eps : auto_cluster_eps(maxima);

    // Greedy 1-d clustering: split the sorted values at gaps > eps.
    std::vector<double> sorted = maxima;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> centers;
    std::vector<double> edges;  // cluster upper edges for label lookup
    double start = sorted[0];
    double prev = sorted[0];
    double acc = sorted[0];
    int count = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] - prev <= eps) {
            acc += sorted[i];
            prev = sorted[i];
            ++count;
            continue;
        }
        centers.push_back(acc / count);
        edges.push_back(prev + 0.5 * eps);
        if (i < sorted.size()) {
            start = prev = sorted[i];
            acc = sorted[i];
            count = 1;
        }
    }
    (void)start;
    const int n = static_cast<int>(centers.size());
    if (n == 1) return PeriodDetection{true, 1};
    if (static_cast<std::size_t>(n) > maxima.size() / 4)
        return PeriodDetection{false, 0};  // too fragmented to be a cycle

    std::vector<int> labels;
    labels.reserve(maxima.size());
    for (double v : maxima) {
        const auto it = std::lower_bound(edges.begin(), edges.end(), v);
        labels.push_back(static_cast<int>(
            std::min<std::ptrdiff_t>(it - edges.begin(), n - 1)));
    }
    // Period n: labels repeat with period n and hit every cluster.
    for (std::size_t k = 0; k + n < labels.size(); ++k)
        if (labels[k] != labels[k + n]) return PeriodDetection{false, 0};
    std::vector<bool> seen(n, false);
    for (int k = 0; k < n; ++k) seen[labels[k]] = true;
    for (bool s : seen)
        if (!s) return PeriodDetection{false, 0};
    // Reject sub-periodicity (would mean duplicated cluster labels).
    for (int m = 1; m < n; ++m) {
        if (n % m != 0) continue;
        bool sub = true;
        for (std::size_t k = 0; k + m < labels.size() && sub; ++k)
            if (labels[k] != labels[k + m]) sub = false;
        if (sub) return PeriodDetection{true, m};
    }
    return PeriodDetection{true, n};
}

AttractorClass classify_attractor(const ModelParams& params,
                                  const SCState& initial,
                                  const ClassifySpec& spec) {
    validate_params(params);
    AttractorClass result;

    SCState settled =
        evolve_sc(initial, params, 0.0, spec.transient, spec.lyapunov.integrator);

    SamplingSpec sampling;
    sampling.step = kTwoPi / spec.samples_per_period;
    sampling.integrator = spec.lyapunov.integrator;
    const double t_end = spec.sample_periods * kTwoPi;

    // The mechanical ringdown (rate gamma/2) can be much slower than the
    // base transient; when the sampled maxima neither look chaotic nor
    // settle into a periodic pattern, extend the transient and resample.
    const int max_rounds = 6;
    double prev_range = -1.0;
    int contracting = 0;
    for (int round = 0; round < max_rounds; ++round) {
        const SCTrajectory traj =
            integrate_sc(settled, params, 0.0, t_end, sampling);
        settled = traj.states.back();

        std::vector<double> xs;
        xs.reserve(traj.states.size());
        for (const auto& s : traj.states)
            xs.push_back(canonical_coords(s.beta).x);
        const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
        double range = *hi - *lo;
        const double scale = std::max(std::abs(*lo), std::abs(*hi));

        // A window whose oscillation amplitude keeps shrinking geometrically
        // is a spiral into a fixed point; skip ahead by many ringdown times
        // and re-check instead of waiting out the decay round by round.
        if (prev_range > 0.0 && range < 0.6 * prev_range) {
            ++contracting;
        } else if (prev_range > 0.0) {
            contracting = 0;
        }
        prev_range = range;
        if (contracting >= 2 && params.gamma > 0.0 &&
            range > 1e-9 + 1e-6 * scale) {
            settled = evolve_sc(settled, params, 0.0, 30.0 / params.gamma,
                                spec.lyapunov.integrator);
            const SCTrajectory tail =
                integrate_sc(settled, params, 0.0, t_end, sampling);
            settled = tail.states.back();
            xs.clear();
            for (const auto& s : tail.states)
                xs.push_back(canonical_coords(s.beta).x);
            const auto [lo2, hi2] = std::minmax_element(xs.begin(), xs.end());
            range = *hi2 - *lo2;
            contracting = 0;
            prev_range = -1.0;
        }

        if (range < 1e-9 + 1e-6 * scale) {
            // No oscillation left: stationary if the residual confirms it.
            const SCState d = sc_rhs(settled, params);
            const double res =
                std::sqrt(std::norm(d.alpha) + std::norm(d.beta));
            result.kind = res < 1e-5 ? AttractorKind::stationary
                                     : AttractorKind::undecided;
            result.maxima = {xs.back()};
            return result;
        }

        result.maxima = extract_extrema(traj);
        if (round == 0) {
            result.lyapunov =
                max_lyapunov(params, traj.states.back(), spec.lyapunov);
            if (result.lyapunov.lambda_max > spec.chaos_threshold) {
                result.kind = AttractorKind::chaotic;
                return result;
            }
        }
        const PeriodDetection pd =
            detect_period(result.maxima, spec.cluster_eps);
        if (pd.periodic) {
            result.kind = AttractorKind::periodic;
            result.period_multiplier = pd.n;
            return result;
        }
        if (round + 1 < max_rounds)
            settled = evolve_sc(settled, params, 0.0, spec.transient,
                                spec.lyapunov.integrator);
    }
    result.kind = AttractorKind::undecided;
    return result;
}

BifurcationDiagram bifurcation_sweep(const ModelParams& params_template,
                                     const std::vector<double>& delta_grid,
                                     const ClassifySpec& spec) {
    if (delta_grid.size() < 2) throw InvalidParams("grid too small");
    for (std::size_t i = 1; i < delta_grid.size(); ++i)
        if ((delta_grid[i] - delta_grid[i - 1]) *
                (delta_grid[1] - delta_grid[0]) <=
            0.0)
            throw InvalidParams("grid must be strictly monotone");

    BifurcationDiagram diagram;
    diagram.axis_name = "detuning";
    diagram.grid = delta_grid;
    diagram.points.resize(delta_grid.size());

    // Serial warm-start chain: settle the attractor at each grid point
    // starting from the previous point's end state.
    std::vector<SCState> warm(delta_grid.size());
    SCState carry{};  // cold (0,0) at the first grid point
    for (std::size_t i = 0; i < delta_grid.size(); ++i) {
        ModelParams p = params_template;
        p.detuning = delta_grid[i];
        carry = evolve_sc(carry, p, 0.0, spec.transient,
                          spec.lyapunov.integrator);
        warm[i] = carry;
    }

    parallel_for(delta_grid.size(), [&](std::size_t i) {
        ModelParams p = params_template;
        p.detuning = delta_grid[i];
        BifurcationPoint& point = diagram.points[i];
        point.axis_value = delta_grid[i];
        try {
            ClassifySpec warm_spec = spec;
            warm_spec.transient = 1e-9;  // already settled by the chain
            point.cls = classify_attractor(p, warm[i], warm_spec);
            point.maxima = point.cls.maxima;

            // One cold start to expose coexisting attractors.
            const SCState cold =
                evolve_sc(SCState{}, p, 0.0, spec.transient,
                          spec.lyapunov.integrator);
            SamplingSpec sampling;
            sampling.step = kTwoPi / spec.samples_per_period;
            sampling.integrator = spec.lyapunov.integrator;
            SCTrajectory ct = integrate_sc(
                cold, p, 0.0, spec.sample_periods * kTwoPi, sampling);
            point.cold_maxima = extract_extrema(ct);
        } catch (const std::exception& e) {
            point.error = e.what();
        }
    });
    return diagram;
}

PhaseDiagram phase_diagram_grid(const ModelParams& params_template,
                                const std::vector<double>& delta_grid,
                                const std::vector<double>& pump_grid,
                                const ClassifySpec& spec) {
    PhaseDiagram pd;
    pd.delta_grid = delta_grid;
    pd.pump_grid = pump_grid;
    pd.cells.resize(delta_grid.size() * pump_grid.size());

    parallel_for(pd.cells.size(), [&](std::size_t idx) {
        const std::size_t ip = idx / delta_grid.size();
        const std::size_t id = idx % delta_grid.size();
        ModelParams p = params_template;
        p.detuning = delta_grid[id];
        p.pump = pump_grid[ip];
        PhaseDiagramCell& cell = pd.cells[idx];
        try {
            const AttractorClass cls = classify_attractor(p, SCState{}, spec);
            cell.kind = cls.kind;
            cell.period_multiplier = cls.period_multiplier;
            cell.lambda_max = cls.lyapunov.lambda_max;
        } catch (const std::exception&) {
            cell.kind = AttractorKind::undecided;
            cell.period_multiplier = 0;
            cell.lambda_max = 0.0;
        }
    });

    // Boundary polylines: first transition along each pump row.
    for (std::size_t ip = 0; ip < pump_grid.size(); ++ip) {
        bool pdb_found = false, chaos_found = false;
        for (std::size_t id = 0; id + 1 < delta_grid.size(); ++id) {
            const auto& a = pd.cells[ip * delta_grid.size() + id];
            const auto& b = pd.cells[ip * delta_grid.size() + id + 1];
            const double mid = 0.5 * (delta_grid[id] + delta_grid[id + 1]);
            auto is_p1 = [](const PhaseDiagramCell& c) {
                return (c.kind == AttractorKind::periodic &&
                        c.period_multiplier == 1) ||
                       c.kind == AttractorKind::stationary;
            };
            auto is_pn = [](const PhaseDiagramCell& c) {
                return c.kind == AttractorKind::periodic &&
                       c.period_multiplier >= 2;
            };
            auto is_chaos = [](const PhaseDiagramCell& c) {
                return c.kind == AttractorKind::chaotic;
            };
            if (!pdb_found &&
                ((is_p1(a) && is_pn(b)) || (is_pn(a) && is_p1(b)))) {
                pd.first_pdb_boundary.emplace_back(mid, pump_grid[ip]);
                pdb_found = true;
            }
            if (!chaos_found && (is_chaos(a) != is_chaos(b))) {
                pd.chaos_boundary.emplace_back(mid, pump_grid[ip]);
                chaos_found = true;
            }
        }
    }
    return pd;
}

}  // namespace optochaos
