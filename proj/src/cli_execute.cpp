#include <chrono>
#include <cstdio>
#include <fstream>

#include "optochaos/ansatz.hpp"
#include "optochaos/chaos.hpp"
#include "optochaos/cli.hpp"
#include "optochaos/qsd.hpp"
#include "optochaos/spectrum.hpp"

namespace optochaos::cli {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(int v) { return std::to_string(v); }

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
};

std::string kind_name(AttractorKind k) {
    switch (k) {
        case AttractorKind::stationary: return "stationary";
        case AttractorKind::periodic: return "periodic";
        case AttractorKind::chaotic: return "chaotic";
        default: return "undecided";
    }
}

void write_table(const RunConfig& config, const Table& table,
                 const std::vector<std::pair<std::string, std::string>>& extra,
                 const std::string& path) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file " + path);

    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(now).count();

    if (config.output_format == "csv") {
        out << "# optochaos " << kVersion << "\n";
        out << "# command: " << config.command << "\n";
        out << "# config: " << serialize_config(config) << "\n";
        out << "# seed: " << config.seed << "\n";
        out << "# wall_time_epoch_s: " << secs << "\n";
        for (const auto& [k, v] : extra) out << "# " << k << ": " << v << "\n";
        out << "# columns: ";
        for (std::size_t i = 0; i < table.columns.size(); ++i)
            out << (i ? "," : "") << table.columns[i];
        out << "\n# end-header\n";
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << row[i];
            out << "\n";
        }
    } else {
        json doc;
        doc["manifest"] = {{"software", std::string("optochaos ") + kVersion},
                           {"command", config.command},
                           {"config", json::parse(serialize_config(config))},
                           {"seed", config.seed},
                           {"wall_time_epoch_s", secs}};
        for (const auto& [k, v] : extra) doc["manifest"][k] = v;
        doc["columns"] = table.columns;
        json data = json::array();
        for (const auto& row : table.rows) data.push_back(row);
        doc["data"] = std::move(data);
        out << doc.dump() << "\n";
    }
}

void emit_plot_script(const RunConfig& config, const std::string& path,
                      bool log_y) {
    if (!config.emit_plots || path.empty()) return;
    std::ofstream out(path + ".plot.py");
    if (!out) throw IoError("cannot open plot script " + path + ".plot.py");
    out << "#!/usr/bin/env python3\n"
        << "import numpy as np\n"
        << "import matplotlib\n"
        << "matplotlib.use('Agg')\n"
        << "import matplotlib.pyplot as plt\n"
        << "cols = []\n"
        << "with open(" << json(path).dump() << ") as fh:\n"
        << "    for line in fh:\n"
        << "        if line.startswith('# columns:'):\n"
        << "            cols = line.split(':', 1)[1].strip().split(',')\n"
        << "data = np.genfromtxt(" << json(path).dump()
        << ", delimiter=',', comments='#')\n"
        << "data = np.atleast_2d(data)\n"
        << "fig, ax = plt.subplots()\n"
        << "for c in range(1, data.shape[1]):\n"
        << "    ax.plot(data[:, 0], data[:, c], '.', ms=2,\n"
        << "            label=cols[c] if c < len(cols) else str(c))\n";
    if (log_y) out << "ax.set_yscale('log')\n";
    out << "ax.set_xlabel(cols[0] if cols else 'x')\n"
        << "ax.legend(fontsize=6)\n"
        << "fig.savefig(" << json(path + ".png").dump() << ", dpi=150)\n";
}

std::vector<double> make_grid(double lo, double hi, double step) {
    std::vector<double> grid;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) grid.push_back(lo + i * step);
    return grid;
}

IntegratorOptions default_integrator() { return IntegratorOptions{}; }

int run_trajectory_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    SamplingSpec sampling;
    sampling.step = kTwoPi / s["samples_per_period"].get<double>();
    SCState init{Complex(s["initial"][0].get<double>(),
                         s["initial"][1].get<double>()),
                 Complex(s["initial"][2].get<double>(),
                         s["initial"][3].get<double>())};
    SCTrajectory traj = integrate_sc(init, cfg.params, 0.0,
                                     s["tau_end"].get<double>(), sampling);
    traj.transient_cutoff = s["transient"].get<double>();
    Table t;
    t.columns = {"tau", "re_alpha", "im_alpha", "x", "p"};
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const auto c = canonical_coords(traj.states[i].beta);
        t.row({fmt(traj.times[i]), fmt(traj.states[i].alpha.real()),
               fmt(traj.states[i].alpha.imag()), fmt(c.x), fmt(c.p)});
    }
    write_table(cfg, t, {}, cfg.output_path);
    emit_plot_script(cfg, cfg.output_path, false);
    return 0;
}

int run_fixed_points_cmd(const RunConfig& cfg) {
    Table t;
    t.columns = {"root",   "re_alpha", "im_alpha", "photon_number",
                 "re_beta", "im_beta",  "stable",   "max_re_eigenvalue"};
    int idx = 0;
    for (const auto& fp : fixed_points(cfg.params)) {
        t.row({fmt(idx++), fmt(fp.state.alpha.real()),
               fmt(fp.state.alpha.imag()), fmt(std::norm(fp.state.alpha)),
               fmt(fp.state.beta.real()), fmt(fp.state.beta.imag()),
               fp.stable ? "1" : "0", fmt(fp.max_real_eigenvalue)});
    }
    write_table(cfg, t, {}, cfg.output_path);
    return 0;
}

int run_ansatz_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    const auto grid = make_grid(s["delta_min"].get<double>(),
                                s["delta_max"].get<double>(),
                                s["delta_step"].get<double>());
    const auto branches = solve_ansatz_branches(cfg.params, grid);
    Table t;
    t.columns = {"detuning", "xbar", "amplitude", "branch_id", "residual"};
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (const auto& sol : branches[i])
            t.row({fmt(grid[i]), fmt(sol.xbar), fmt(sol.amplitude),
                   fmt(sol.branch_id), fmt(sol.residual)});
    write_table(cfg, t, {}, cfg.output_path);
    emit_plot_script(cfg, cfg.output_path, false);
    return 0;
}

int run_lyapunov_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    LyapunovSpec spec;
    spec.renorm_interval = s["renorm_interval"].get<double>();
    spec.n_steps = static_cast<int>(s["n_steps"].get<std::int64_t>());
    spec.discard = static_cast<int>(s["discard"].get<std::int64_t>());
    const SCState settled = evolve_sc(SCState{}, cfg.params, 0.0,
                                      s["transient"].get<double>(),
                                      default_integrator());
    const LyapunovResult res =
        s["method"].get<std::string>() == "twin"
            ? max_lyapunov_twin(cfg.params, settled,
                                s["separation"].get<double>(), spec)
            : max_lyapunov(cfg.params, settled, spec);
    Table t;
    t.columns = {"lambda_max", "n_renorm", "stderr"};
    t.row({fmt(res.lambda_max), fmt(res.n_renorm), fmt(res.stderr_)});
    write_table(cfg, t, {}, cfg.output_path);
    return 0;
}

ClassifySpec classify_spec_from(const json& s) {
    ClassifySpec spec;
    spec.transient = s["transient"].get<double>();
    spec.sample_periods =
        static_cast<int>(s["sample_periods"].get<std::int64_t>());
    spec.cluster_eps = s["cluster_eps"].get<double>();
    spec.chaos_threshold = s["chaos_threshold"].get<double>();
    spec.lyapunov.n_steps = static_cast<int>(s["n_steps"].get<std::int64_t>());
    spec.lyapunov.discard = static_cast<int>(s["discard"].get<std::int64_t>());
    return spec;
}

int run_bifurcation_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    const auto grid = make_grid(s["delta_min"].get<double>(),
                                s["delta_max"].get<double>(),
                                s["delta_step"].get<double>());
    const auto diagram =
        bifurcation_sweep(cfg.params, grid, classify_spec_from(s));
    Table t;
    t.columns = {"detuning",     "maximum", "source", "class",
                 "period",       "lambda_max", "lambda_stderr"};
    bool any_error = false;
    for (const auto& p : diagram.points) {
        if (p.error) {
            any_error = true;
            t.row({fmt(p.axis_value), "nan", "warm", "error", "0", "nan",
                   "nan"});
            continue;
        }
        const std::string cls = kind_name(p.cls.kind);
        for (double m : p.maxima)
            t.row({fmt(p.axis_value), fmt(m), "warm", cls,
                   fmt(p.cls.period_multiplier),
                   fmt(p.cls.lyapunov.lambda_max),
                   fmt(p.cls.lyapunov.stderr_)});
        for (double m : p.cold_maxima)
            t.row({fmt(p.axis_value), fmt(m), "cold", cls,
                   fmt(p.cls.period_multiplier),
                   fmt(p.cls.lyapunov.lambda_max),
                   fmt(p.cls.lyapunov.stderr_)});
    }
    std::vector<std::pair<std::string, std::string>> extra;
    if (any_error) extra.emplace_back("partial", "per-point failures present");
    write_table(cfg, t, extra, cfg.output_path);
    emit_plot_script(cfg, cfg.output_path, false);
    return any_error ? 4 : 0;
}

int run_phase_diagram_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    const auto dgrid = make_grid(s["delta_min"].get<double>(),
                                 s["delta_max"].get<double>(),
                                 s["delta_step"].get<double>());
    const auto pgrid = make_grid(s["pump_min"].get<double>(),
                                 s["pump_max"].get<double>(),
                                 s["pump_step"].get<double>());
    const auto pd =
        phase_diagram_grid(cfg.params, dgrid, pgrid, classify_spec_from(s));
    Table t;
    t.columns = {"detuning", "pump", "class", "period", "lambda_max"};
    bool any_undecided = false;
    for (std::size_t ip = 0; ip < pgrid.size(); ++ip)
        for (std::size_t id = 0; id < dgrid.size(); ++id) {
            const auto& c = pd.cells[ip * dgrid.size() + id];
            if (c.kind == AttractorKind::undecided) any_undecided = true;
            t.row({fmt(dgrid[id]), fmt(pgrid[ip]), kind_name(c.kind),
                   fmt(c.period_multiplier), fmt(c.lambda_max)});
        }
    write_table(cfg, t, {}, cfg.output_path);
    if (!cfg.output_path.empty()) {
        Table b;
        b.columns = {"boundary", "detuning", "pump"};
        for (const auto& [d, p] : pd.first_pdb_boundary)
            b.row({"first_pdb", fmt(d), fmt(p)});
        for (const auto& [d, p] : pd.chaos_boundary)
            b.row({"chaos", fmt(d), fmt(p)});
        write_table(cfg, b, {}, cfg.output_path + ".boundaries");
    }
    emit_plot_script(cfg, cfg.output_path, false);
    (void)any_undecided;
    return 0;
}

int run_spectrum_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    SpectrumSpec spec;
    spec.window = s["window"].get<std::string>();
    spec.n_periods = static_cast<int>(s["n_periods"].get<std::int64_t>());
    spec.samples_per_period =
        static_cast<int>(s["samples_per_period"].get<std::int64_t>());
    const double transient = s["transient"].get<double>();
    SamplingSpec sampling;
    sampling.step = kTwoPi / spec.samples_per_period;
    const double t_end = transient + spec.n_periods * kTwoPi;
    SCTrajectory traj =
        integrate_sc(SCState{}, cfg.params, 0.0, t_end, sampling);
    traj.transient_cutoff = transient;
    const PowerSpectrum ps = power_spectrum(traj, spec);
    const SubharmonicOrder order =
        detect_subharmonic_order(ps, s["threshold"].get<double>());
    Table t;
    t.columns = {"frequency", "power"};
    for (std::size_t i = 0; i < ps.frequencies.size(); ++i)
        t.row({fmt(ps.frequencies[i]), fmt(ps.power[i])});
    const std::string order_str =
        order == SubharmonicOrder::continuous
            ? "continuous"
            : std::to_string(static_cast<int>(order));
    write_table(cfg, t, {{"subharmonic_order", order_str}}, cfg.output_path);
    emit_plot_script(cfg, cfg.output_path, true);
    return 0;
}

QsdRunSpec qsd_spec_from(const json& s) {
    QsdRunSpec spec;
    spec.tau_end = s["tau_end"].get<double>();
    spec.dt = s["dt"].get<double>();
    spec.sample_stride =
        static_cast<int>(s["sample_stride"].get<std::int64_t>());
    spec.leak_tol = s["leak_tol"].get<double>();
    spec.stepper = s["stepper"].get<std::string>();
    return spec;
}

HilbertTruncation trunc_from(const json& s) {
    return HilbertTruncation{
        static_cast<int>(s["n_cav"].get<std::int64_t>()),
        static_cast<int>(s["n_mech"].get<std::int64_t>())};
}

int run_qsd_trajectory_cmd(const RunConfig& cfg) {
    const auto rec = run_trajectory(cfg.params, trunc_from(cfg.spec),
                                    qsd_spec_from(cfg.spec), cfg.seed, 0);
    Table t;
    t.columns = {"tau", "re_exp_a", "im_exp_a", "exp_na", "exp_nb",
                 "leakage", "x",     "p"};
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        t.row({fmt(rec.times[i]), fmt(rec.exp_a[i].real()),
               fmt(rec.exp_a[i].imag()), fmt(rec.exp_na[i]),
               fmt(rec.exp_nb[i]), fmt(rec.leakage[i]), fmt(rec.x[i]),
               fmt(rec.p[i])});
    std::vector<std::pair<std::string, std::string>> extra = {
        {"max_leakage", fmt(rec.max_leakage)}};
    write_table(cfg, t, extra, cfg.output_path);
    if (!cfg.output_path.empty()) {
        // Stroboscopic section of the same record.
        Table sec;
        sec.columns = {"x", "p"};
        const int discard =
            static_cast<int>(cfg.spec["discard_periods"].get<std::int64_t>());
        try {
            for (const auto& [x, p] : stroboscopic_section(rec, discard))
                sec.row({fmt(x), fmt(p)});
            write_table(cfg, sec, {}, cfg.output_path + ".section");
        } catch (const InvalidParams&) {
            // Cadence does not divide the period: skip the section file.
        }
    }
    emit_plot_script(cfg, cfg.output_path, false);
    return 0;
}

int run_qsd_ensemble_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    const QsdRunSpec spec = qsd_spec_from(s);
    const auto ens =
        run_ensemble(cfg.params, trunc_from(s), spec,
                     static_cast<int>(s["n_traj"].get<std::int64_t>()),
                     cfg.seed);
    // SC reference under the same parameters, sampled on the same grid.
    SamplingSpec sc_sampling;
    sc_sampling.step = spec.dt * spec.sample_stride;
    SCTrajectory sc = integrate_sc(SCState{}, cfg.params, 0.0, spec.tau_end,
                                   sc_sampling);
    Table t;
    t.columns = {"tau",      "mean_x",  "stderr_x", "mean_na", "stderr_na",
                 "mean_nb",  "stderr_nb", "x_sc"};
    for (std::size_t i = 0; i < ens.times.size(); ++i) {
        double x_sc = 0.0;
        if (i < sc.states.size())
            x_sc = canonical_coords(sc.states[i].beta).x;
        t.row({fmt(ens.times[i]), fmt(ens.mean_x[i]), fmt(ens.stderr_x[i]),
               fmt(ens.mean_na[i]), fmt(ens.stderr_na[i]), fmt(ens.mean_nb[i]),
               fmt(ens.stderr_nb[i]), fmt(x_sc)});
    }
    std::vector<std::pair<std::string, std::string>> extra = {
        {"n_traj", std::to_string(ens.n_traj)},
        {"max_leakage", fmt(ens.max_leakage)}};
    write_table(cfg, t, extra, cfg.output_path);
    emit_plot_script(cfg, cfg.output_path, false);
    return 0;
}

int run_oracle_check_cmd(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    const QsdRunSpec spec = qsd_spec_from(s);
    const auto oracle =
        master_equation_oracle(cfg.params, trunc_from(s), spec);
    const int n_traj = static_cast<int>(s["n_traj"].get<std::int64_t>());
    Table t;
    if (n_traj > 0) {
        const auto ens =
            run_ensemble(cfg.params, trunc_from(s), spec, n_traj, cfg.seed);
        t.columns = {"tau",        "oracle_na", "oracle_nb", "qsd_na",
                     "stderr_na",  "qsd_nb",    "stderr_nb", "trace_error"};
        for (std::size_t i = 0; i < oracle.times.size(); ++i) {
            // Oracle and ensemble share the sampling cadence.
            t.row({fmt(oracle.times[i]), fmt(oracle.exp_na[i]),
                   fmt(oracle.exp_nb[i]), fmt(ens.mean_na[i]),
                   fmt(ens.stderr_na[i]), fmt(ens.mean_nb[i]),
                   fmt(ens.stderr_nb[i]), fmt(oracle.trace_error[i])});
        }
    } else {
        t.columns = {"tau", "oracle_na", "oracle_nb", "trace_error"};
        for (std::size_t i = 0; i < oracle.times.size(); ++i)
            t.row({fmt(oracle.times[i]), fmt(oracle.exp_na[i]),
                   fmt(oracle.exp_nb[i]), fmt(oracle.trace_error[i])});
    }
    std::vector<std::pair<std::string, std::string>> extra = {
        {"min_eigenvalue", fmt(oracle.min_eigenvalue)}};
    write_table(cfg, t, extra, cfg.output_path);
    return 0;
}

}  // namespace

int execute(const RunConfig& config) {
    if (config.command == "trajectory") return run_trajectory_cmd(config);
    if (config.command == "fixed-points") return run_fixed_points_cmd(config);
    if (config.command == "ansatz") return run_ansatz_cmd(config);
    if (config.command == "lyapunov") return run_lyapunov_cmd(config);
    if (config.command == "bifurcation") return run_bifurcation_cmd(config);
    if (config.command == "phase-diagram")
        return run_phase_diagram_cmd(config);
    if (config.command == "spectrum") return run_spectrum_cmd(config);
    if (config.command == "qsd-trajectory")
        return run_qsd_trajectory_cmd(config);
    if (config.command == "qsd-ensemble") return run_qsd_ensemble_cmd(config);
    if (config.command == "oracle-check") return run_oracle_check_cmd(config);
    throw ConfigError({"unknown command '" + config.command + "'"});
}

}  // namespace optochaos::cli
