/*
 Copyright 2026 The platoon-mss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "pmss/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "pmss/config.hpp"

namespace pmss {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ExperimentConfig load_with_overrides(const std::string& path, const CliOptions& opt) {
    ExperimentConfig cfg = load_config(path);
    if (opt.seed) cfg.simulation.seed = *opt.seed;
    if (opt.runs) {
        if (*opt.runs < 1) throw SchemaError("--runs", "must be at least 1");
        cfg.simulation.runs = *opt.runs;
    }
    if (opt.tol) {
        if (!(*opt.tol > 0)) throw SchemaError("--tol", "must be positive");
        cfg.analysis.zero_tol = *opt.tol;
    }
    if (opt.dump_runs) {
        if (*opt.dump_runs < 0) throw SchemaError("--dump-runs", "must be non-negative");
        cfg.simulation.dump_runs = *opt.dump_runs;
    }
    if (opt.threads) cfg.simulation.threads = *opt.threads;
    if (!opt.out.empty()) cfg.output_dir = opt.out;
    if (cfg.output_dir.empty()) cfg.output_dir = "out";
    return cfg;
}

fs::path scenario_dir(const ExperimentConfig& cfg, const ScenarioConfig& sc) {
    fs::path dir = cfg.output_dir;
    if (cfg.scenarios.size() > 1) dir /= sc.name;
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

json vec_json(const VectorD& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json mat_json(const MatrixD& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
    return a;
}

json per_vehicle_json(const PerVehicleReport& r) {
    json conds = json::array();
    for (const auto& c : r.conditions)
        conds.push_back({{"index", c.index},
                         {"p", c.p},
                         {"rho_alpha", c.rho_alpha},
                         {"Ma_at_one", c.Ma_at_one},
                         {"Ma_multiplicity", c.Ma_multiplicity},
                         {"rho_alpha_kron", c.rho_alpha_kron},
                         {"Mb_at_one", vec_json(c.Mb_at_one)},
                         {"Mb_multiplicity", c.Mb_multiplicity},
                         {"mean_ok", c.mean_ok},
                         {"var_ok", c.var_ok}});
    return {{"conditions", conds},
            {"mean_converges", r.mean_converges},
            {"var_converges", r.var_converges},
            {"mss", r.mss},
            {"marginal", r.marginal}};
}

json report_json(const std::string& scenario, const MssReport& r) {
    const auto& s = r.stationary;
    json st{{"mean_converges", s.mean_converges},
            {"mean_zeta", vec_json(s.mean_zeta)},
            {"cov_converges", s.cov_converges},
            {"cov_zeta", mat_json(s.cov_zeta)},
            {"mu_v_stationary", vec_json(s.mu_v_stationary)},
            {"m11_multiplicity", s.m11_multiplicity},
            {"m21_multiplicity", s.m21_multiplicity},
            {"warnings", s.warnings}};
    return {{"scenario", scenario},
            {"method", r.method},
            {"rho_A", r.rho_A},
            {"m11_at_one", vec_json(r.m11_at_one)},
            {"m11_multiplicity", r.m11_multiplicity},
            {"rho_kron", r.rho_kron},
            {"m21_at_one", vec_json(r.m21_at_one)},
            {"m21_multiplicity", r.m21_multiplicity},
            {"mean_converges", r.mean_converges},
            {"var_converges", r.var_converges},
            {"mss", r.mss},
            {"marginal", r.marginal},
            {"stationary", st},
            {"per_vehicle", r.per_vehicle ? per_vehicle_json(*r.per_vehicle) : json(nullptr)},
            {"reasons", r.reasons}};
}

void write_moments_csv(std::ostream& os, const MomentTrajectory& traj) {
    os << "k,vehicle,mean,var\n";
    for (int k = 0; k <= traj.horizon; ++k) {
        const auto& mu = traj.mu_zeta[static_cast<std::size_t>(k)];
        const auto& P = traj.P_zeta[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            os << k << ',' << i + 1 << ',' << fmt(mu(i)) << ',' << fmt(P(i, i)) << '\n';
    }
}

void write_ensemble_csv(std::ostream& os, const EnsembleStats& s) {
    os << "k,vehicle,mean,var,se_mean\n";
    for (Eigen::Index k = 0; k < s.mean.rows(); ++k)
        for (Eigen::Index i = 0; i < s.mean.cols(); ++i)
            os << k << ',' << i + 1 << ',' << fmt(s.mean(k, i)) << ',' << fmt(s.var(k, i)) << ',' << fmt(s.se_mean(k, i))
               << '\n';
}

void write_run_csv(std::ostream& os, const RunSeries& r) {
    os << "k,vehicle,y,zeta\n";
    for (Eigen::Index k = 0; k < r.y.rows(); ++k)
        for (Eigen::Index i = 0; i < r.y.cols(); ++i)
            os << k << ',' << i + 1 << ',' << fmt(r.y(k, i)) << ',' << fmt(r.zeta(k, i)) << '\n';
}

void write_string_behavior_csv(std::ostream& os, const StringBehavior& b) {
    os << "vehicle,mean_peak,var_peak\n";
    for (std::size_t i = 0; i < b.mean_peak.size(); ++i)
        os << i + 1 << ',' << fmt(b.mean_peak[i]) << ',' << fmt(b.var_peak[i]) << '\n';
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

int cmd_validate(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream&) {
    const ExperimentConfig cfg = load_with_overrides(config, opt);
    bool all = true;
    out << "vehicle  T_stable  strictly_proper  no_unstable_cancel  double_integrator  hinf_T      result\n";
    for (std::size_t i = 0; i < cfg.vehicles.size(); ++i) {
        const auto& v = cfg.vehicles[i];
        const AssumptionReport r = validate_vehicle_assumptions(v.G, v.K, v.h);
        all = all && r.passed();
        char line[160];
        std::snprintf(line, sizeof line, "%-8zu %-9s %-16s %-19s %-18s %-11s %s\n", i + 1, yes_no(r.t_stable).c_str(),
                      yes_no(r.t_strictly_proper).c_str(), yes_no(r.no_unstable_cancellation).c_str(),
                      yes_no(r.double_integrator).c_str(), fmt_short(r.hinf_t).c_str(), r.passed() ? "PASS" : "FAIL");
        out << line;
        for (const auto& m : r.messages) out << "  " << m << '\n';
    }
    return all ? kExitOk : kExitDomain;
}

int cmd_analyze(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream&) {
    const ExperimentConfig cfg = load_with_overrides(config, opt);
    MssOptions mo;
    mo.zero_tol = cfg.analysis.zero_tol;
    mo.marginal_band = cfg.analysis.marginal_band;
    mo.m0 = leader_trajectory(cfg.leader, cfg.analysis.horizon).final_speed();

    json reports = json::array();
    bool all_mss = true;
    for (const auto& sc : cfg.scenarios) {
        const PlatoonRealization platoon = build_platoon(cfg.vehicles, sc.channel, cfg.analysis.realization_tol);
        MssReport r;
        try {
            r = analyze_platoon(platoon, mo);
        } catch (const GuardError& e) {
            throw GuardError(std::string(e.what()) + "; reduce N or use independent channels");
        }
        all_mss = all_mss && r.mss;
        reports.push_back(report_json(sc.name, r));

        out << "scenario " << sc.name << ": " << (r.mss ? "mean square stable" : "not mean square stable");
        if (r.marginal) out << " (marginal)";
        out << '\n';
        out << "  method " << r.method << ", rho(A) = " << fmt_short(r.rho_A)
            << ", rho(A(x)A+Delta) = " << fmt_short(r.rho_kron) << '\n';
        for (const auto& why : r.reasons) out << "  " << why << '\n';
    }
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    auto os = open_out(dir / "report.json");
    os << json{{"schema_version", kSchemaVersion}, {"reports", reports}}.dump(2) << '\n';
    out << "wrote " << (dir / "report.json").string() << '\n';
    return (opt.require_mss && !all_mss) ? kExitDomain : kExitOk;
}

int cmd_simulate(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = load_with_overrides(config, opt);
    const int T = cfg.analysis.horizon;
    const LeaderSeries leader = leader_trajectory(cfg.leader, T);
    const auto& sim = cfg.simulation;

    for (const auto& sc : cfg.scenarios) {
        const PlatoonRealization platoon = build_platoon(cfg.vehicles, sc.channel, cfg.analysis.realization_tol);
        const fs::path dir = scenario_dir(cfg, sc);

        const MomentTrajectory traj = moment_trajectory(platoon, leader.y0, T);
        {
            auto os = open_out(dir / "moments.csv");
            write_moments_csv(os, traj);
        }
        const EnsembleStats stats = ensemble_stats(platoon, leader.y0, T, sim.runs, sim.seed, sim.threads);
        {
            auto os = open_out(dir / "ensemble.csv");
            write_ensemble_csv(os, stats);
        }
        out << "scenario " << sc.name << ": " << sim.runs << " runs, seed " << sim.seed << '\n';
        if (sim.runs >= 2) {
            const double frac = agreement_fraction(stats, traj, 4.0);
            auto os = open_out(dir / "agreement.txt");
            os << "runs " << sim.runs << "\nseed " << sim.seed << "\nz 4\nagreement_fraction " << fmt(frac) << '\n';
            out << "  agreement within 4 SE: " << fmt_short(frac) << '\n';
        } else {
            err << "note: agreement check skipped for scenario " << sc.name << " (needs at least 2 runs)\n";
        }
        for (int r = 0; r < sim.dump_runs; ++r) {
            const RunSeries run = simulate_run(platoon, leader.y0, T, run_seed(sim.seed, static_cast<std::uint64_t>(r)));
            auto os = open_out(dir / ("run_" + std::to_string(r) + ".csv"));
            write_run_csv(os, run);
        }
        const StringBehavior sb = string_behavior_report(traj);
        {
            auto os = open_out(dir / "string_behavior.csv");
            write_string_behavior_csv(os, sb);
        }
        out << "  peaks non-increasing along the string: mean " << yes_no(sb.mean_nonincreasing) << ", variance "
            << yes_no(sb.var_nonincreasing) << '\n';
        out << "  wrote " << dir.string() << '\n';
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = load_with_overrides(config, opt);
    if (cfg.sweep_axes.empty()) throw SchemaError("/sweep", "the sweep command needs sweep axes");
    MssOptions mo;
    mo.zero_tol = cfg.analysis.zero_tol;
    mo.marginal_band = cfg.analysis.marginal_band;
    mo.stationary = false;

    for (const auto& sc : cfg.scenarios) {
        if (!sc.channel.is_independent()) throw UnsupportedModelError("sweeps need independent links");
        PlatoonTemplate tmpl{cfg.vehicles, sc.channel.marginals(), cfg.analysis.realization_tol};
        const auto& first = cfg.sweep_axes.front();
        const std::size_t n1 = first.values.size();
        const std::size_t chunk = std::max<std::size_t>(1, n1 / 20);
        std::size_t total = n1;
        if (cfg.sweep_axes.size() > 1) total *= cfg.sweep_axes[1].values.size();
        err << "sweep " << sc.name << ": " << total << " points\n";

        std::vector<SweepRow> rows;
        for (std::size_t s = 0; s < n1; s += chunk) {
            auto axes = cfg.sweep_axes;
            axes.front().values.assign(first.values.begin() + static_cast<std::ptrdiff_t>(s),
                                       first.values.begin() + static_cast<std::ptrdiff_t>(std::min(n1, s + chunk)));
            auto part = sweep(tmpl, axes, mo, cfg.simulation.threads);
            rows.insert(rows.end(), part.begin(), part.end());
            err << "  " << rows.size() << '/' << total << '\n';
        }
        const fs::path dir = scenario_dir(cfg, sc);
        auto os = open_out(dir / "sweep.csv");
        write_sweep_csv(os, rows);
        const auto stable = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.mss; });
        out << "scenario " << sc.name << ": " << stable << " of " << rows.size() << " grid points mean square stable\n";
        out << "  wrote " << (dir / "sweep.csv").string() << '\n';
    }
    return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean-square stability analysis of platoons over lossy links", "platoon-mss"};
    std::string command, config;
    CliOptions opt;
    std::uint64_t seed = 0;
    int runs = 0, dump = 0;
    double tol = 0;
    unsigned threads = 0;
    app.add_option("command", command, "validate | analyze | simulate | sweep")
        ->required()
        ->check(CLI::IsMember({"validate", "analyze", "simulate", "sweep"}));
    app.add_option("config", config, "experiment config (JSON)")->required();
    app.add_option("--out", opt.out, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "base seed for simulation runs");
    auto* runs_opt = app.add_option("--runs", runs, "number of Monte-Carlo runs");
    auto* tol_opt = app.add_option("--tol", tol, "tolerance for zeros at z = 1");
    auto* dump_opt = app.add_option("--dump-runs", dump, "write the first N runs as CSV");
    auto* thr_opt = app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_flag("--require-mss", opt.require_mss, "analyze exits 1 unless every scenario is stable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (*seed_opt) opt.seed = seed;
    if (*runs_opt) opt.runs = runs;
    if (*tol_opt) opt.tol = tol;
    if (*dump_opt) opt.dump_runs = dump;
    if (*thr_opt) opt.threads = threads;

    try {
        if (command == "validate") return cmd_validate(config, opt, out, err);
        if (command == "analyze") return cmd_analyze(config, opt, out, err);
        if (command == "simulate") return cmd_simulate(config, opt, out, err);
        return cmd_sweep(config, opt, out, err);
    } catch (const SchemaError& e) {
        err << "schema error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const GuardError& e) {
        err << "numeric guard: " << e.what() << '\n';
        return kExitGuard;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
}

}  // namespace pmss
