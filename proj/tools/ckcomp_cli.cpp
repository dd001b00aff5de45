// ckcomp: compactification toolkit for nonautonomous systems with
// autonomous limits. Subcommands wire the pipeline: smoothness checks at
// the added boundaries, field construction, simulation, limit-cycle
// analysis, and the reproducible worked example.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ckcomp/ckcomp.hpp"

namespace fs = std::filesystem;
using namespace ckcomp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNegative = 2;
constexpr int kExitInconclusive = 3;

struct CommonArgs {
    std::string config_path;
    std::string output_dir; // empty: use config's
    std::optional<int> k_override;
    std::optional<double> tol_override;
    bool force = false;
};

RunConfig load(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config_path);
    if (args.k_override) cfg.k = *args.k_override;
    if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
    cfg.validate();
    return cfg;
}

fs::path ensure_outdir(const RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << content;
}

int verdict_exit_code(const SmoothnessVerdict& v) {
    switch (v.overall) {
        case OverallVerdict::Holds: return kExitOk;
        case OverallVerdict::Fails: return kExitNegative;
        case OverallVerdict::Inconclusive: return kExitInconclusive;
    }
    return kExitUsage;
}

int cmd_check(const CommonArgs& args) {
    RunConfig cfg = load(args);
    if (args.tol_override) cfg.probe.tolerance = *args.tol_override;
    const fs::path outdir = ensure_outdir(cfg);

    const SystemSpec sys = cfg.make_system_spec();
    const TransformSpec tf = cfg.make_transform_spec();

    const HypothesisReport hyp = validate_hypotheses(tf, cfg.k, cfg.probe);
    std::ostringstream hyp_text;
    auto hline = [&](const char* name, const HypothesisReport::Verdict& v) {
        hyp_text << name << ": " << (v.pass ? "pass" : "fail") << " (" << v.detail << ")\n";
    };
    hline("smoothness scan", hyp.smooth);
    hline("monotone increasing", hyp.monotone);
    hline("tail limits +-1", hyp.limits);
    hline("time-factor decay", hyp.decay);
    hline("phi'/phi decay", hyp.ratio);

    const SmoothnessVerdict verdict = check_ck(sys, tf, cfg.k, cfg.probe);
    std::string text = "transform hypotheses\n--------------------\n" + hyp_text.str() +
                       "\n" + verdict_report_text(verdict);
    std::string kv = verdict_report_kv(verdict);

    if (cfg.transform_kind == TransformKind::PhiM) {
        const SimpleCriterionResult simple =
            check_simple_criterion(sys, cfg.transform_m, cfg.k, cfg.probe);
        text += "\nslow-family criterion (m = " + std::to_string(cfg.transform_m) +
                ")\n--------------------------\n" + verdict_report_text(simple.verdict);
        kv += "simple_criterion.verdict=" + std::string(to_string(simple.verdict.overall)) +
              "\n";
    }

    write_file(outdir / "report.txt", text);
    write_file(outdir / "report.kv", kv);
    std::cout << text;
    std::cout << "\nreport written to " << (outdir / "report.txt").string() << "\n";
    return verdict_exit_code(verdict);
}

CompactifiedField build_from_config(const RunConfig& cfg, bool force) {
    const SystemSpec sys = cfg.make_system_spec();
    const TransformSpec tf = cfg.make_transform_spec();
    if (cfg.asymptotic_class == AsymptoticClass::Right)
        return build_one_sided(sys, tf, cfg.k, +1, cfg.probe, force);
    if (cfg.asymptotic_class == AsymptoticClass::Left)
        return build_one_sided(sys, tf, cfg.k, -1, cfg.probe, force);
    return build(sys, tf, cfg.k, cfg.probe, force);
}

int cmd_simulate(const CommonArgs& args) {
    RunConfig cfg = load(args);
    if (args.tol_override) cfg.sim_tol = *args.tol_override;
    const fs::path outdir = ensure_outdir(cfg);

    CompactifiedField field = [&] {
        try {
            return build_from_config(cfg, args.force);
        } catch (const NumericsError& e) {
            std::cerr << "build refused: " << e.what() << "\n";
            std::exit(kExitNegative);
        }
    }();

    std::ostringstream manifest;
    manifest << field.describe();
    manifest << "span=" << cfg.span << "\n";
    manifest << "tol=" << cfg.sim_tol << "\n";
    int idx = 0;
    for (const auto& ic : cfg.initials) {
        ++idx;
        std::vector<double> x(ic.begin(), ic.end() - 1);
        const double s0 = ic.back();
        const Trajectory traj =
            integrate(field, x, s0, cfg.span, cfg.sim_tol, cfg.stop_at_boundary);
        const std::string name = "traj_" + std::to_string(idx) + ".csv";
        write_trajectory_csv(traj, field.state_dim(), (outdir / name).string());
        manifest << "trajectory." << idx << ".file=" << name << "\n";
        manifest << "trajectory." << idx << ".termination=" << to_string(traj.termination)
                 << "\n";
        if (traj.boundary_time)
            manifest << "trajectory." << idx << ".s_saturated_at=" << *traj.boundary_time
                     << "\n";
        std::cout << name << ": " << traj.size() << " samples, " << to_string(traj.termination)
                  << "\n";
    }
    write_file(outdir / "manifest.kv", manifest.str());
    return kExitOk;
}

int cmd_find_cycle(const CommonArgs& args, int side) {
    RunConfig cfg = load(args);
    const fs::path outdir = ensure_outdir(cfg);
    CompactifiedField field = [&] {
        try {
            return build_from_config(cfg, args.force);
        } catch (const NumericsError& e) {
            std::cerr << "build refused: " << e.what() << "\n";
            std::exit(kExitNegative);
        }
    }();
    std::vector<double> seed(static_cast<std::size_t>(field.state_dim()), 1.0);
    if (!cfg.initials.empty())
        seed.assign(cfg.initials.front().begin(), cfg.initials.front().end() - 1);
    try {
        const PeriodicOrbit orbit = find_limit_cycle(field, side, seed);
        write_orbit_csv(orbit, (outdir / "orbit.csv").string(),
                        (outdir / "orbit_summary.kv").string());
        std::cout << "period=" << orbit.period << "\n";
        for (std::size_t i = 0; i < orbit.multipliers.size(); ++i)
            std::cout << "multiplier." << (i + 1) << "=" << orbit.multipliers[i]
                      << " (modulus " << std::abs(orbit.multipliers[i]) << ")\n";
        std::cout << "orbit written to " << (outdir / "orbit.csv").string() << "\n";
        return kExitOk;
    } catch (const NumericsError& e) {
        std::cerr << "cycle location failed: " << e.what() << "\n";
        return kExitNegative;
    }
}

bool forcing_is_worked_example(const SystemSpec& sys) {
    if (sys.forcing_dim != 1) return false;
    for (double t : {-25.0, -2.0, 0.0, 1.5, 30.0}) {
        const double expect = (2.0 / M_PI) * std::atan(t);
        if (std::abs(sys.mu_eval(t)[0] - expect) > 1e-12) return false;
    }
    return true;
}

int cmd_verify_example(const CommonArgs& args) {
    RunConfig cfg = load(args);
    if (args.tol_override) cfg.probe.tolerance = *args.tol_override;
    const fs::path outdir = ensure_outdir(cfg);

    std::ostringstream summary;
    int stage = 0;
    bool all_pass = true;
    auto report = [&](const std::string& name, bool pass, const std::string& detail) {
        ++stage;
        summary << "stage " << stage << " [" << (pass ? "PASS" : "FAIL") << "] " << name
                << ": " << detail << "\n";
        std::cout << "stage " << stage << " [" << (pass ? "PASS" : "FAIL") << "] " << name
                  << ": " << detail << "\n";
        if (!pass) all_pass = false;
        return pass;
    };
    auto finish = [&](int code) {
        write_file(outdir / "verify_summary.txt", summary.str());
        return code;
    };

    const SystemSpec sys = cfg.make_system_spec();
    const TransformSpec tf = cfg.make_transform_spec();

    // 1: transformation hypotheses
    const HypothesisReport hyp = validate_hypotheses(tf, cfg.k, cfg.probe);
    if (!report("transform hypotheses", hyp.all_pass(),
                hyp.all_pass() ? "increasing, smooth, correct tail limits"
                               : "first failure: " +
                                     (hyp.smooth.pass
                                          ? (hyp.monotone.pass
                                                 ? (hyp.limits.pass
                                                        ? (hyp.decay.pass ? hyp.ratio.detail
                                                                          : hyp.decay.detail)
                                                        : hyp.limits.detail)
                                                 : hyp.monotone.detail)
                                          : hyp.smooth.detail)))
        return finish(kExitNegative);

    // 2: C^k verdict with the boundary limits
    const SmoothnessVerdict verdict = check_ck(sys, tf, std::max(cfg.k, 2), cfg.probe);
    write_file(outdir / "report.kv", verdict_report_kv(verdict));
    if (!report("C^k extension check", verdict.holds(),
                verdict.holds()
                    ? "all boundary limits converged"
                    : std::string(to_string(verdict.overall)) + " at n=" +
                          std::to_string(verdict.failing_order) + " (" +
                          verdict.failing_limit + ")"))
        return finish(verdict.overall == OverallVerdict::Inconclusive ? kExitInconclusive
                                                                      : kExitNegative);

    if (forcing_is_worked_example(sys)) {
        const double g1 = verdict.order(1).g_plus->value();
        const double m1 = verdict.order(1).mu_plus[0].value();
        const double g2 = verdict.order(2).g_plus->value();
        const double m2 = verdict.order(2).mu_plus[0].value();
        const bool quad = std::abs(g1) < 1e-4 && std::abs(m1 - 1.0) < 1e-4 &&
                          std::abs(g2 - M_PI) < 1e-4 && std::abs(m2) < 1e-4 &&
                          std::abs(verdict.order(1).g_minus->value()) < 1e-4 &&
                          std::abs(verdict.order(1).mu_minus[0].value() - 1.0) < 1e-4 &&
                          std::abs(verdict.order(2).g_minus->value() - M_PI) < 1e-4 &&
                          std::abs(verdict.order(2).mu_minus[0].value()) < 1e-4;
        std::ostringstream d;
        d << "g'->" << g1 << ", mu~'->" << m1 << ", g''->" << g2 << ", mu~''->" << m2;
        if (!report("boundary limit quadruple (0, 1, pi, 0)", quad, d.str()))
            return finish(kExitNegative);
    }

    // 3: field construction
    CompactifiedField field = [&]() -> CompactifiedField {
        try {
            CompactifiedField f = build_from_config(cfg, args.force);
            report("field construction", true, "two-sided field on U x [-1, 1]");
            return f;
        } catch (const Error& e) {
            report("field construction", false, e.what());
            std::exit(finish(kExitNegative));
        }
    }();

    // 4: limit cycle of the future limit system
    PeriodicOrbit orbit;
    try {
        std::vector<double> seed{2.0, 0.0};
        if (!cfg.initials.empty() && field.state_dim() == 2)
            seed.assign(cfg.initials.front().begin(), cfg.initials.front().end() - 1);
        orbit = find_limit_cycle(field, +1, seed);
        const double mod =
            orbit.multipliers.empty() ? 0.0 : std::abs(orbit.multipliers.front());
        std::ostringstream d;
        d << "period " << orbit.period << ", residual " << orbit.residual
          << ", nontrivial multiplier modulus " << mod;
        const bool ok = orbit.residual <= 1e-9 && mod > 0.0 && mod < 1.0;
        if (!report("limit cycle on the future boundary", ok, d.str()))
            return finish(kExitNegative);
        write_orbit_csv(orbit, (outdir / "orbit.csv").string(),
                        (outdir / "orbit_summary.kv").string());
    } catch (const Error& e) {
        report("limit cycle on the future boundary", false, e.what());
        return finish(kExitNegative);
    }

    // 5: batch integration of the configured initial conditions
    std::vector<Trajectory> trajs;
    bool batch_ok = true;
    for (const auto& ic : cfg.initials) {
        std::vector<double> x(ic.begin(), ic.end() - 1);
        Trajectory t = integrate(field, x, ic.back(), cfg.span, cfg.sim_tol);
        if (t.termination == Termination::StepFailure) batch_ok = false;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (t.states[i].back() < t.states[i - 1].back() - 1e-14) batch_ok = false;
        trajs.push_back(std::move(t));
    }
    if (!report("batch integration", batch_ok && !trajs.empty(),
                std::to_string(trajs.size()) + " trajectories, s monotone toward +1"))
        return finish(kExitNegative);
    for (std::size_t i = 0; i < trajs.size(); ++i)
        write_trajectory_csv(trajs[i], field.state_dim(),
                             (outdir / ("traj_" + std::to_string(i + 1) + ".csv")).string());

    // 6: attraction to the cycle (and the origin staying fixed)
    bool dist_ok = true;
    std::ostringstream dd;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const auto& ic = cfg.initials[i];
        const bool is_origin = [&] {
            for (std::size_t c = 0; c + 1 < ic.size(); ++c)
                if (ic[c] != 0.0) return false;
            return true;
        }();
        if (is_origin) {
            for (const auto& y : trajs[i].states)
                for (std::size_t c = 0; c + 1 < y.size(); ++c)
                    if (std::abs(y[c]) > 1e-12) dist_ok = false;
            dd << "ic" << (i + 1) << ": stays at the origin; ";
            continue;
        }
        // "falls below and stays": the last excursion above 1e-3 must end
        // with room to spare before the span runs out
        const auto dist = distance_to_orbit(trajs[i], orbit, 0.0);
        double last_above = 0.0;
        for (const auto& [t, d] : dist)
            if (d >= 1e-3) last_above = t;
        if (last_above > 0.8 * cfg.span) dist_ok = false;
        dd << "ic" << (i + 1) << ": below 1e-3 after t=" << last_above << "; ";
        write_distance_csv(dist, (outdir / ("dist_" + std::to_string(i + 1) + ".csv")).string());
    }
    if (!report("attraction to the limit cycle", dist_ok, dd.str()))
        return finish(kExitNegative);

    report("summary", all_pass, all_pass ? "all stages passed" : "failures above");
    return finish(all_pass ? kExitOk : kExitNegative);
}

int cmd_emit_plots(const CommonArgs& args) {
    RunConfig cfg = load(args);
    const fs::path outdir = ensure_outdir(cfg);
    const int rc = cmd_simulate(args);
    if (rc != kExitOk) return rc;

    std::ostringstream gp;
    gp << "# gnuplot script for the simulated trajectories\n";
    gp << "set xlabel 'x1'\nset ylabel 'x2'\nset key off\n";
    gp << "plot \\\n";
    for (std::size_t i = 1; i <= cfg.initials.size(); ++i) {
        gp << "  'traj_" << i << ".csv' using 2:3 with lines";
        gp << (i == cfg.initials.size() ? "\n" : ", \\\n");
    }
    gp << "pause -1\n";
    write_file(outdir / "plots.gp", gp.str());
    std::cout << "plot script written to " << (outdir / "plots.gp").string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compactification of nonautonomous systems with autonomous limits"};
    app.require_subcommand(1);

    CommonArgs args;
    int side = +1;

    auto add_common = [&](CLI::App* sub, bool with_force = true) {
        sub->add_option("--config", args.config_path, "run configuration file")->required();
        sub->add_option("--output-dir", args.output_dir, "override the output directory");
        sub->add_option("--k", args.k_override, "override the smoothness order k");
        sub->add_option("--tol", args.tol_override, "override the stage tolerance");
        if (with_force)
            sub->add_flag("--force", args.force,
                          "build the field even when the verdict is not positive");
    };

    CLI::App* check = app.add_subcommand("check", "run the C^k-extension criteria");
    add_common(check, false);
    CLI::App* simulate = app.add_subcommand("simulate", "integrate the compactified field");
    add_common(simulate);
    CLI::App* find_cycle =
        app.add_subcommand("find-cycle", "locate a limit cycle of a frozen limit system");
    add_common(find_cycle);
    find_cycle->add_option("--side", side, "boundary side: +1 (future) or -1 (past)");
    CLI::App* verify =
        app.add_subcommand("verify-example", "run the worked-example pipeline end to end");
    add_common(verify);
    CLI::App* plots = app.add_subcommand("emit-plots", "simulate and emit a gnuplot script");
    add_common(plots);

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return cmd_check(args);
        if (simulate->parsed()) return cmd_simulate(args);
        if (find_cycle->parsed()) return cmd_find_cycle(args, side);
        if (verify->parsed()) return cmd_verify_example(args);
        if (plots->parsed()) return cmd_emit_plots(args);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "expression error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNegative;
    }
    return kExitUsage;
}
