#ifndef OPTOCHAOS_CHAOS_HPP
#define OPTOCHAOS_CHAOS_HPP

#include <optional>
#include <string>
#include <vector>

#include "optochaos/sc_dynamics.hpp"

namespace optochaos {

inline constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

struct LyapunovSpec {
    double renorm_interval = kTwoPi;
    int n_steps = 2000;
    int discard = 200;
    IntegratorOptions integrator{};
};

struct LyapunovResult {
    double lambda_max;  // per unit tau
    int n_renorm;
    double stderr_;  // over the second half of retained samples
};

enum class AttractorKind { stationary, periodic, chaotic, undecided };

struct AttractorClass {
    AttractorKind kind = AttractorKind::undecided;
    int period_multiplier = 0;  // for periodic(n)
    std::vector<double> maxima;  // distinct local-maximum values of x
    LyapunovResult lyapunov{0.0, 0, 0.0};
};

struct ClassifySpec {
    double transient = 200.0 * kTwoPi;
    int sample_periods = 64;
    int samples_per_period = 128;
    double cluster_eps = 0.0;  // 0 = auto (1e-3 * dynamic range)
    double chaos_threshold = 1e-3;
    LyapunovSpec lyapunov{};
};

struct BifurcationPoint {
    double axis_value;
    std::vector<double> maxima;       // warm-start attractor
    std::vector<double> cold_maxima;  // cold start from (0,0)
    AttractorClass cls;
    std::optional<std::string> error;
};

struct BifurcationDiagram {
    std::string axis_name;
    std::vector<double> grid;
    std::vector<BifurcationPoint> points;
};

struct PhaseDiagramCell {
    AttractorKind kind;
    int period_multiplier;
    double lambda_max;
};

struct PhaseDiagram {
    std::vector<double> delta_grid;
    std::vector<double> pump_grid;
    std::vector<PhaseDiagramCell> cells;  // pump-major: [ip * |delta| + id]
    // Boundary polylines as (delta, pump) points, one entry per pump row
    // that has the transition.
    std::vector<std::pair<double, double>> first_pdb_boundary;
    std::vector<std::pair<double, double>> chaos_boundary;
};

/// Maximal Lyapunov exponent by tangent-vector co-integration with
/// periodic renormalization (Benettin).
LyapunovResult max_lyapunov(const ModelParams& params, const SCState& initial,
                            const LyapunovSpec& spec = {});

/// Reference route: twin trajectory at finite separation, renormalized on
/// the same cadence. Used to cross-check the tangent method.
LyapunovResult max_lyapunov_twin(const ModelParams& params,
                                 const SCState& initial,
                                 double separation = 1e-8,
                                 const LyapunovSpec& spec = {});

/// Local maxima of x(tau) over the post-transient, uniformly sampled part
/// of the trajectory; 3-point detection refined by quadratic interpolation.
std::vector<double> extract_extrema(const SCTrajectory& traj);

struct PeriodDetection {
    bool periodic;
    int n;  // number of clusters when periodic
};

/// Clusters maxima values and tests the label sequence for periodicity.
PeriodDetection detect_period(const std::vector<double>& maxima,
                              double cluster_eps = 0.0);

AttractorClass classify_attractor(const ModelParams& params,
                                  const SCState& initial,
                                  const ClassifySpec& spec = {});

BifurcationDiagram bifurcation_sweep(const ModelParams& params_template,
                                     const std::vector<double>& delta_grid,
                                     const ClassifySpec& spec = {});

PhaseDiagram phase_diagram_grid(const ModelParams& params_template,
                                const std::vector<double>& delta_grid,
                                const std::vector<double>& pump_grid,
                                const ClassifySpec& spec = {});

}  // namespace optochaos

#endif
