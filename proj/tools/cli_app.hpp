// Command-line front end: config loading, subcommand dispatch and artifact emission.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ultimax/ultimax.hpp"

namespace ultimax::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3, kPropertyFailure = 4 };

struct Options {
    std::string subcommand;
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    bool paths_dump = false;
};

/// Collects output files and the manifest for one run.
class Artifacts {
public:
    Artifacts(std::filesystem::path dir, bool plot_scripts) : dir_(std::move(dir)), plot_scripts_(plot_scripts) {}

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        std::filesystem::create_directories(dir_);
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
        body(os);
        files_.push_back(name);
        if (plot_scripts_) write_plot_script(name);
    }

    nlohmann::json& manifest() { return manifest_; }

    void finish() {
        manifest_["files"] = files_;
        std::filesystem::create_directories(dir_);
        std::ofstream os(dir_ / "manifest.json", std::ios::binary);
        os << manifest_.dump(2) << '\n';
    }

private:
    void write_plot_script(const std::string& csv) {
        const std::string stem = csv.substr(0, csv.rfind('.'));
        std::ostringstream gp;
        gp << "set datafile separator ','\nset key autotitle columnhead\n";
        if (stem == "boundary") {
            gp << "set xlabel 't'\nset ylabel 'b(t,j)'\n"
               << "plot for [j=1:9] '" << csv << "' using ($2==j && $5==0 ? $1 : 1/0):4 with lines title sprintf('j=%d', j)\n";
        } else if (stem == "volterra") {
            gp << "set xlabel 't'\nset ylabel 'relative residual'\n"
               << "plot for [j=1:9] '" << csv << "' using ($2==j ? $1 : 1/0):9 with linespoints title sprintf('j=%d', j)\n";
        } else if (stem == "G" || stem == "V" || stem == "F" || stem == "LG") {
            gp << "set xlabel 't'\nset ylabel 'x'\nset zlabel '" << stem << "'\n"
               << "splot '" << csv << "' using ($3==1 ? $1 : 1/0):2:4 with dots title '" << stem << ", j=1'\n";
        } else {
            return;
        }
        gp << "pause mouse close\n";
        std::ofstream os(dir_ / (stem + ".gp"), std::ios::binary);
        os << gp.str();
        files_.push_back(stem + ".gp");
    }

    std::filesystem::path dir_;
    bool plot_scripts_;
    std::vector<std::string> files_;
    nlohmann::json manifest_ = nlohmann::json::object();
};

inline nlohmann::json tolerance_record(const RunConfig& c) {
    return {{"gain_scheme_tolerance", kGainSchemeTolerance},
            {"value_scheme_tolerance", kValueSchemeTolerance},
            {"eps_sign", c.eps_sign},
            {"tol_abs", c.tol_abs},
            {"normal_reflection_constant", kNormalReflectionConstant},
            {"continuity_constant", kContinuityConstant}};
}

inline nlohmann::json model_record(const ValidatedModel& m) {
    nlohmann::json q = nlohmann::json::array();
    for (std::size_t i = 0; i < m.regimes(); ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < m.regimes(); ++j) row.push_back(m.q(i, j));
        q.push_back(row);
    }
    std::vector<double> mu, sigma;
    for (std::size_t j = 0; j < m.regimes(); ++j) {
        mu.push_back(m.mu(j));
        sigma.push_back(m.sigma(j));
    }
    return {{"mu", mu}, {"sigma", sigma}, {"Q", q}, {"T", m.horizon()}};
}

inline nlohmann::json grid_record(const Grid& g) {
    return {{"n_x", g.n_x()}, {"n_t", g.n_t()}, {"z_max", g.z_max()}, {"dz", g.dz()}, {"dt", g.dt()}};
}

inline std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Everything a subcommand needs, built once the config has validated.
struct Context {
    RunConfig config;
    ValidatedModel model;
    Grid grid;
    std::size_t n_steps;
    Artifacts out;
};

inline ValueSurfaces solve_all(const Context& c) { return solve_value(c.model, c.grid, g_pde(c.model, c.grid)); }

inline bool cmd_gcheck(Context& c) {
    const Surface G = g_pde(c.model, c.grid);
    const auto dgdx = dG_dx(G);
    const Surface LG = lg(G, dgdx.values, c.model);
    c.out.write("G.csv", [&](std::ostream& os) { write_surface_csv(G, os); });
    c.out.write("LG.csv", [&](std::ostream& os) { write_surface_csv(LG, os); });

    const auto probes = probe_points(c.model);
    std::size_t failures = 0;
    double worst = 0.0;
    c.out.write("gcheck.csv", [&](std::ostream& os) {
        os.precision(12);
        os << "t,x,j,g_pde,g_mc,mc_se,abs_diff,bound\n";
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const auto& p = probes[i];
            const double pde = G.interpolate(p.t, std::log(p.x), p.j);
            const Estimate mc = g_monte_carlo(c.model, p.t, p.x, p.j, c.config.n_paths, derive_seed(c.config.seed, i));
            const double diff = std::abs(pde - mc.value);
            const double bound = 3.0 * mc.std_error + kGainSchemeTolerance;
            if (diff > bound) ++failures;
            worst = std::max(worst, diff / bound);
            os << p.t << ',' << p.x << ',' << p.j + 1 << ',' << pde << ',' << mc.value << ',' << mc.std_error << ','
               << diff << ',' << bound << '\n';
        }
    });
    std::vector<std::size_t> h_unbounded;
    for (std::size_t j = 0; j < c.model.regimes(); ++j) {
        const auto h = h_level(LG, j, c.config.eps_sign);
        h_unbounded.push_back(static_cast<std::size_t>(std::count_if(h.begin(), h.end(), [](double v) { return std::isinf(v); })));
    }
    c.out.manifest()["checks"] = {{"probe_failures", failures},
                                  {"worst_diff_over_bound", worst},
                                  {"dGdx_clamp_rate", dgdx.clamp_rate()},
                                  {"h_level_unbounded_nodes", h_unbounded}};
    return failures == 0;
}

inline bool cmd_solve(Context& c) {
    const ValueSurfaces s = solve_all(c);
    c.out.write("G.csv", [&](std::ostream& os) { write_surface_csv(s.G, os); });
    c.out.write("V.csv", [&](std::ostream& os) { write_surface_csv(s.V, os); });
    c.out.write("F.csv", [&](std::ostream& os) { write_surface_csv(s.F, os); });
    double max_F = -INFINITY;
    for (double f : s.F.values()) max_F = std::max(max_F, f);
    const bool ok = max_F <= kValueSchemeTolerance;
    c.out.manifest()["checks"] = {{"max_F", max_F}, {"F_nonpositive", ok}};
    return ok;
}

/// Boundary checks shared by `boundary` and `figure`; returns false on a failed check.
inline bool boundary_checks(Context& c, const ValueSurfaces& s, const Boundary& b, nlohmann::json& checks) {
    bool ok = true;
    const Grid& g = c.grid;
    std::vector<double> terminal;
    for (std::size_t j = 0; j < g.regimes(); ++j) {
        terminal.push_back(b.raw(g.n_t(), j));
        if (!(std::abs(b.raw(g.n_t(), j) - 1.0) <= g.dx_near(1.0))) ok = false;
    }
    checks["terminal_level"] = terminal;
    if (c.model.all_drifts_nonnegative()) {
        const auto mono = check_boundary_monotone(b, c.model);
        const double continuity_bound = kContinuityConstant * std::sqrt(g.dt());
        checks["monotone_violations"] = mono.violations;
        checks["max_jump"] = mono.max_jump;
        checks["continuity_constant"] = mono.continuity_constant;
        checks["continuity_bound"] = continuity_bound;
        if (mono.violations > 0 || mono.max_jump > continuity_bound) ok = false;
    } else {
        checks["monotone_violations"] = "not applicable: some mu(j) < 0";
    }
    const Surface G = s.G;
    const Surface LG = lg(G, dG_dx(G).values, c.model);
    const std::size_t contained = count_containment_violations(s, LG, c.config.eps_sign, c.config.tol_abs);
    checks["containment_violations"] = contained;
    if (contained > 0) ok = false;
    return ok;
}

inline bool cmd_boundary(Context& c) {
    const ValueSurfaces s = solve_all(c);
    const Boundary b = extract_boundary(s, c.config.tol_abs);
    c.out.write("boundary.csv", [&](std::ostream& os) { write_boundary_csv(b, os); });
    nlohmann::json checks;
    const bool ok = boundary_checks(c, s, b, checks);
    c.out.manifest()["checks"] = checks;
    return ok;
}

inline bool cmd_volterra(Context& c) {
    const ValueSurfaces s = solve_all(c);
    const Boundary b = extract_boundary(s, c.config.tol_abs);
    const VolterraContext ctx(s, b);
    const VolterraReport r =
        volterra_residual(c.model, ctx, c.config.n_paths, c.config.n_quad, c.config.seed, c.config.volterra_stride);
    c.out.write("boundary.csv", [&](std::ostream& os) { write_boundary_csv(b, os); });
    c.out.write("volterra.csv", [&](std::ostream& os) { write_volterra_csv(r, os); });
    const double median = r.median_abs_relative();
    c.out.manifest()["checks"] = {{"rows", r.rows.size()},
                                  {"median_abs_relative_residual", median},
                                  {"max_abs_relative_residual", r.max_abs_relative()},
                                  {"extrapolated_samples", r.extrapolated},
                                  {"tolerance", kVolterraRelTolerance}};
    return median <= kVolterraRelTolerance;
}

inline bool cmd_eval(Context& c) {
    const ValueSurfaces s = solve_all(c);
    const Boundary b = extract_boundary(s, c.config.tol_abs);
    std::vector<Policy> policies{BoundaryPolicy{&b}, ImmediatePolicy{}, AtMaturityPolicy{}};
    for (const auto& levels : c.config.thresholds) policies.push_back(FixedThresholdPolicy{levels});
    std::vector<std::size_t> starts = c.config.eval_j0;
    if (starts.empty())
        for (std::size_t j = 0; j < c.model.regimes(); ++j) starts.push_back(j);

    std::vector<PolicyComparison> runs;
    for (std::size_t j0 : starts)
        runs.push_back(compare_policies(c.model, policies, j0, c.config.n_paths, c.n_steps, derive_seed(c.config.seed, j0)));
    c.out.write("evaluation.csv", [&](std::ostream& os) { write_evaluation_csv(runs, os); });
    c.out.write("paired.csv", [&](std::ostream& os) { write_paired_csv(runs, os); });

    // The boundary policy (index 0) should not lose to any other beyond 3 paired standard errors.
    std::size_t dominated = 0;
    nlohmann::json value_gap = nlohmann::json::array();
    for (const auto& run : runs) {
        for (const auto& p : run.pairs)
            if (p.a == 0 && p.diff > 3.0 * p.diff_se) ++dominated;
        value_gap.push_back(run.estimates[0].mean - s.V(0, 0, run.j0));
    }
    c.out.manifest()["checks"] = {{"boundary_policy_losses", dominated}, {"boundary_regret_minus_V", value_gap}};
    return dominated == 0;
}

inline bool cmd_figure(Context& c) {
    const ValueSurfaces s = solve_all(c);
    const Boundary b = extract_boundary(s, c.config.tol_abs);
    c.out.write("G.csv", [&](std::ostream& os) { write_surface_csv(s.G, os); });
    c.out.write("V.csv", [&](std::ostream& os) { write_surface_csv(s.V, os); });
    c.out.write("boundary.csv", [&](std::ostream& os) { write_boundary_csv(b, os); });
    nlohmann::json checks;
    const bool ok = boundary_checks(c, s, b, checks);
    // Reported, not enforced: see README ("Regime ordering of the boundary").
    const std::size_t order = count_order_violations(b, 0, 1);
    checks["regime_order_violations"] = order;
    if (order > 0)
        std::cerr << "note: b(t,1) > b(t,2) + dx at " << order << " time nodes; regime 1 stops later here\n";
    c.out.manifest()["checks"] = checks;
    return ok;
}

inline int dispatch(const Options& opt) {
    RunConfig config;
    if (opt.subcommand == "figure") {
        if (!opt.config_path.empty()) config = load_config(opt.config_path);
        config.model = reference::figure_model();
        config.n_t = reference::kFigureTimeSteps;
    } else {
        config = load_config(opt.config_path);
    }
    if (opt.seed) config.seed = *opt.seed;
    if (opt.out_dir) config.out_dir = *opt.out_dir;
    default_threads() = std::max<std::size_t>(1, opt.threads);

    std::optional<ValidatedModel> model;
    try {
        model = validate(config.model);
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, std::string("model: ") + e.what());
    }
    Grid grid = make_grid(*model, config.n_x, config.n_t, config.z_max);
    const std::size_t n_steps = config.n_steps ? config.n_steps : grid.n_t();
    Context c{config, *model, grid, n_steps, Artifacts(config.out_dir, config.plot_scripts)};

    auto& m = c.out.manifest();
    m["version"] = std::string(kVersion);
    m["subcommand"] = opt.subcommand;
    m["config_hash"] = hex(config_hash(config.source));
    m["seed"] = config.seed;
    m["tolerances"] = tolerance_record(config);
    m["model"] = model_record(c.model);
    m["grid"] = grid_record(grid);
    m["exercise_regime"] = std::string(to_string(classify(c.model)));
    m["mc"] = {{"n_paths", config.n_paths}, {"n_steps", n_steps}};

    if (opt.paths_dump) {
        const std::size_t n = std::min<std::size_t>(config.n_paths, 1000);
        const PathBundle bundle = simulate_paths(c.model, 0.0, 0, n, n_steps, config.seed, MaxMonitoring::BrownianBridge);
        c.out.write("paths.csv", [&](std::ostream& os) { write_paths_csv(bundle, os); });
    }

    bool ok = false;
    if (opt.subcommand == "gcheck") ok = cmd_gcheck(c);
    else if (opt.subcommand == "solve") ok = cmd_solve(c);
    else if (opt.subcommand == "boundary") ok = cmd_boundary(c);
    else if (opt.subcommand == "volterra") ok = cmd_volterra(c);
    else if (opt.subcommand == "eval") ok = cmd_eval(c);
    else if (opt.subcommand == "figure") ok = cmd_figure(c);
    m["passed"] = ok;
    c.out.finish();
    return ok ? kOk : kPropertyFailure;
}

inline int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Config:
    case ErrorCode::NonPositiveVolatility:
    case ErrorCode::BadGeneratorRow:
    case ErrorCode::NonPositiveHorizon:
    case ErrorCode::InvalidModel: return kConfigError;
    case ErrorCode::NonMonotoneSlice: return kPropertyFailure;
    default: return kSolverError;
    }
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Optimal prediction of the ultimate maximum under regime-switching GBM"};
    app.require_subcommand(1, 1);
    Options opt;
    std::uint64_t seed = 0;
    std::string out;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"gcheck", "G surface and Monte Carlo cross-check at the probe points"},
        {"solve", "V, G and F = V - G surfaces"},
        {"boundary", "free boundary extraction and monotonicity report"},
        {"volterra", "residual of the boundary integral equation"},
        {"eval", "regret of boundary, immediate, maturity and threshold policies"},
        {"figure", "surfaces and boundaries for the pinned two-regime figure parameters"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        auto* config = sub->add_option("--config", opt.config_path, "JSON run configuration")->check(CLI::ExistingFile);
        if (name != "figure") config->required();
        sub->add_option("--out", out, "output directory (overrides outputs.directory)");
        sub->add_option("--seed", seed, "root seed (overrides mc.seed)");
        sub->add_option("--threads", opt.threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
        sub->add_flag("--paths-dump", opt.paths_dump, "also write up to 1000 simulated paths to paths.csv");
        sub->callback([&opt, name = name] { opt.subcommand = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) opt.seed = seed;
        if (sub->count("--out")) opt.out_dir = out;
    }

    try {
        return dispatch(opt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolverError;
    }
}

}  // namespace ultimax::cli
