#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ellv/errors.hpp"
#include "ellv/harness.hpp"

namespace ellv {

namespace cli_detail {

using nlohmann::json;

inline json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& target) {
    if (j.contains(key)) {
        try {
            target = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

/// Grid entries are either {"min":..,"max":..,"points":..} or an explicit
/// array of values.
inline void get_grid_if(const json& j, const char* key, GridSpec& grid,
                        std::vector<double>* explicit_values = nullptr) {
    if (!j.contains(key)) return;
    const json& g = j.at(key);
    if (g.is_array()) {
        if (!explicit_values)
            throw ConfigError(std::string("config key '") + key +
                              "' must be a {min,max,points} table");
        *explicit_values = g.get<std::vector<double>>();
        return;
    }
    if (!g.is_object())
        throw ConfigError(std::string("config key '") + key + "' must be a grid table");
    get_if(g, "min", grid.min);
    get_if(g, "max", grid.max);
    get_if(g, "points", grid.points);
}

inline json section(const json& j, const char* name) {
    if (j.contains(name)) {
        if (!j.at(name).is_object())
            throw ConfigError(std::string("config section '") + name + "' must be a table");
        return j.at(name);
    }
    return json::object();
}

} // namespace cli_detail

/// Command-line entry point (the `ellv` tool is a thin wrapper around this).
/// Exit codes: 0 success, 2 configuration error, 3 numeric failure.
inline int cli_main(int argc, const char* const* argv) {
    using cli_detail::get_grid_if;
    using cli_detail::get_if;
    using cli_detail::json;
    using cli_detail::section;

    CLI::App app{"Numerical laboratory for large Lotka-Volterra systems with random "
                 "elliptic interactions"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags (--config) may follow the subcommand

    // flags shared by every experiment; only flags the user actually passed
    // override the config file
    std::string config_path, out_path;
    std::uint64_t seed = 1;
    int trials = 0, workers = 0, n = 0;
    app.add_option("--config", config_path, "JSON config file")->configurable(false);

    auto add_common = [&](CLI::App* cmd, bool has_trials = true) {
        cmd->add_option("--out", out_path, "output CSV path");
        cmd->add_option("--seed", seed, "base seed (64-bit)");
        cmd->add_option("--n", n, "system size");
        cmd->add_option("--workers", workers, "worker threads (0 = hardware)");
        if (has_trials) cmd->add_option("--trials", trials, "Monte-Carlo trials");
    };

    // transition
    auto* cmd_transition = app.add_subcommand(
        "transition", "feasibility transition over kappa (alpha = kappa sqrt(log n))");
    add_common(cmd_transition);
    std::vector<double> tr_rhos;
    double tr_mu = 0.0;
    GridSpec tr_kappa{0.5, 2.5, 12};
    bool tr_profile = false;
    cmd_transition->add_option("--rho", tr_rhos, "rho values");
    cmd_transition->add_option("--mu", tr_mu, "mean shift");
    cmd_transition->add_option("--kappa-min", tr_kappa.min, "kappa grid minimum");
    cmd_transition->add_option("--kappa-max", tr_kappa.max, "kappa grid maximum");
    cmd_transition->add_option("--kappa-points", tr_kappa.points, "kappa grid points");
    cmd_transition->add_flag("--covariance-profile", tr_profile,
                             "draw rho_ij ~ U[-1,1] once instead of fixed rho");

    // admissible
    auto* cmd_admissible =
        app.add_subcommand("admissible", "closed-form admissible-set heat map");
    add_common(cmd_admissible, /*has_trials=*/false);
    GridSpec ad_rho{-0.95, 0.95, 39}, ad_alpha{0.1, 4.0, 40};
    cmd_admissible->add_option("--rho-min", ad_rho.min, "rho grid minimum");
    cmd_admissible->add_option("--rho-max", ad_rho.max, "rho grid maximum");
    cmd_admissible->add_option("--rho-points", ad_rho.points, "rho grid points");
    cmd_admissible->add_option("--alpha-min", ad_alpha.min, "alpha grid minimum");
    cmd_admissible->add_option("--alpha-max", ad_alpha.max, "alpha grid maximum");
    cmd_admissible->add_option("--alpha-points", ad_alpha.points, "alpha grid points");

    // spectrum
    auto* cmd_spectrum =
        app.add_subcommand("spectrum", "eigenvalue cloud of one sampled instance");
    add_common(cmd_spectrum, /*has_trials=*/false);
    double sp_rho = 0.5, sp_mu = 0.0, sp_alpha = 1.0;
    std::string sp_verdict, sp_dump;
    cmd_spectrum->add_option("--rho", sp_rho, "pairwise covariance");
    cmd_spectrum->add_option("--mu", sp_mu, "mean shift");
    cmd_spectrum->add_option("--alpha", sp_alpha, "interaction strength");
    cmd_spectrum->add_option("--verdict-out", sp_verdict, "stability verdict CSV path");
    cmd_spectrum->add_option("--dump-matrix", sp_dump, "raw matrix dump CSV path");

    // dynamics
    auto* cmd_dynamics =
        app.add_subcommand("dynamics", "LV trajectories from two initial conditions");
    add_common(cmd_dynamics, /*has_trials=*/false);
    double dy_rho = 0.0, dy_alpha = 2.0, dy_mu = 0.0, dy_tend = 200.0, dy_tol = 1e-8;
    int dy_stride = 1;
    cmd_dynamics->add_option("--rho", dy_rho, "pairwise covariance");
    cmd_dynamics->add_option("--alpha", dy_alpha, "interaction strength");
    cmd_dynamics->add_option("--mu", dy_mu, "mean shift");
    cmd_dynamics->add_option("--t-end", dy_tend, "integration horizon");
    cmd_dynamics->add_option("--tol", dy_tol, "local error tolerance");
    cmd_dynamics->add_option("--stride", dy_stride, "output stride");

    // cavity
    auto* cmd_cavity =
        app.add_subcommand("cavity", "surviving-species fixed point over an alpha grid");
    add_common(cmd_cavity, /*has_trials=*/false);
    double cv_rho = 0.5, cv_mu = 0.2;
    GridSpec cv_alpha{2.1, 10.0, 8};
    cmd_cavity->add_option("--rho", cv_rho, "pairwise covariance");
    cmd_cavity->add_option("--mu", cv_mu, "mean shift");
    cmd_cavity->add_option("--alpha-min", cv_alpha.min, "alpha grid minimum");
    cmd_cavity->add_option("--alpha-max", cv_alpha.max, "alpha grid maximum");
    cmd_cavity->add_option("--alpha-points", cv_alpha.points, "alpha grid points");

    // cavity-vs-mc
    auto* cmd_cvm = app.add_subcommand(
        "cavity-vs-mc", "cavity predictions against Monte-Carlo LCP equilibria");
    add_common(cmd_cvm);
    double cm_rho = 0.5, cm_mu = 0.2;
    GridSpec cm_alpha{2.1, 10.0, 8};
    std::string cm_per_trial;
    cmd_cvm->add_option("--rho", cm_rho, "pairwise covariance");
    cmd_cvm->add_option("--mu", cm_mu, "mean shift");
    cmd_cvm->add_option("--alpha-min", cm_alpha.min, "alpha grid minimum");
    cmd_cvm->add_option("--alpha-max", cm_alpha.max, "alpha grid maximum");
    cmd_cvm->add_option("--alpha-points", cm_alpha.points, "alpha grid points");
    cmd_cvm->add_option("--per-trial-out", cm_per_trial, "per-trial equilibrium CSV path");

    // correlation-impact
    auto* cmd_corr = app.add_subcommand(
        "correlation-impact", "effect of rho and alpha on the surviving fraction");
    add_common(cmd_corr, /*has_trials=*/false);
    double co_mu = 0.0;
    GridSpec co_rho{-0.9, 0.9, 7}, co_alpha{2.3, 6.0, 12};
    cmd_corr->add_option("--mu", co_mu, "mean shift");
    cmd_corr->add_option("--rho-min", co_rho.min, "rho grid minimum");
    cmd_corr->add_option("--rho-max", co_rho.max, "rho grid maximum");
    cmd_corr->add_option("--rho-points", co_rho.points, "rho grid points");
    cmd_corr->add_option("--alpha-min", co_alpha.min, "alpha grid minimum");
    cmd_corr->add_option("--alpha-max", co_alpha.max, "alpha grid maximum");
    cmd_corr->add_option("--alpha-points", co_alpha.points, "alpha grid points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        json cfg = json::object();
        if (!config_path.empty()) cfg = cli_detail::load_config_file(config_path);

        // config-file values first, then explicitly passed flags on top
        auto overlay_common = [&](CLI::App* cmd, const json& sec, auto& c) {
            get_if(cfg, "n", c.n);
            get_if(cfg, "seed", c.base_seed);
            get_if(cfg, "out", c.out);
            get_if(sec, "n", c.n);
            get_if(sec, "seed", c.base_seed);
            get_if(sec, "out", c.out);
            if (cmd->count("--n")) c.n = n;
            if (cmd->count("--seed")) c.base_seed = seed;
            if (cmd->count("--out")) c.out = out_path;
            if constexpr (requires { c.workers; }) {
                get_if(cfg, "workers", c.workers);
                get_if(sec, "workers", c.workers);
                if (cmd->count("--workers")) c.workers = workers;
            }
            if constexpr (requires { c.trials; }) {
                get_if(cfg, "trials", c.trials);
                get_if(sec, "trials", c.trials);
                if (cmd->count("--trials")) c.trials = trials;
            }
        };

        if (*cmd_transition) {
            TransitionConfig c;
            const json sec = section(cfg, "transition");
            overlay_common(cmd_transition, sec, c);
            get_if(sec, "mu", c.mu);
            get_if(sec, "rho", c.rhos);
            get_if(sec, "covariance_profile", c.covariance_profile);
            get_grid_if(sec, "kappa", c.kappa);
            if (cmd_transition->count("--mu")) c.mu = tr_mu;
            if (cmd_transition->count("--rho")) c.rhos = tr_rhos;
            if (cmd_transition->count("--covariance-profile"))
                c.covariance_profile = tr_profile;
            if (cmd_transition->count("--kappa-min")) c.kappa.min = tr_kappa.min;
            if (cmd_transition->count("--kappa-max")) c.kappa.max = tr_kappa.max;
            if (cmd_transition->count("--kappa-points")) c.kappa.points = tr_kappa.points;
            const auto rows = run_transition(c);
            std::cout << "transition: " << rows.size() << " grid points written"
                      << (c.out.empty() ? "" : " to " + c.out) << "\n";
            return 0;
        }
        if (*cmd_admissible) {
            AdmissibleMapConfig c;
            const json sec = section(cfg, "admissible");
            get_if(cfg, "out", c.out);
            get_if(sec, "out", c.out);
            if (cmd_admissible->count("--out")) c.out = out_path;
            get_grid_if(sec, "rho", c.rho);
            get_grid_if(sec, "alpha", c.alpha);
            if (cmd_admissible->count("--rho-min")) c.rho.min = ad_rho.min;
            if (cmd_admissible->count("--rho-max")) c.rho.max = ad_rho.max;
            if (cmd_admissible->count("--rho-points")) c.rho.points = ad_rho.points;
            if (cmd_admissible->count("--alpha-min")) c.alpha.min = ad_alpha.min;
            if (cmd_admissible->count("--alpha-max")) c.alpha.max = ad_alpha.max;
            if (cmd_admissible->count("--alpha-points")) c.alpha.points = ad_alpha.points;
            const auto rows = run_admissible_map(c);
            std::cout << "admissible: " << rows.size() << " cells written"
                      << (c.out.empty() ? "" : " to " + c.out) << "\n";
            return 0;
        }
        if (*cmd_spectrum) {
            SpectrumConfig c;
            const json sec = section(cfg, "spectrum");
            overlay_common(cmd_spectrum, sec, c);
            get_if(sec, "rho", c.rho);
            get_if(sec, "mu", c.mu);
            get_if(sec, "alpha", c.alpha);
            get_if(sec, "verdict_out", c.verdict_out);
            get_if(sec, "dump_matrix", c.dump_matrix);
            if (cmd_spectrum->count("--rho")) c.rho = sp_rho;
            if (cmd_spectrum->count("--mu")) c.mu = sp_mu;
            if (cmd_spectrum->count("--alpha")) c.alpha = sp_alpha;
            if (cmd_spectrum->count("--verdict-out")) c.verdict_out = sp_verdict;
            if (cmd_spectrum->count("--dump-matrix")) c.dump_matrix = sp_dump;
            if (c.n == 0) c.n = 500;
            const auto spectrum = run_spectrum(c);
            std::cout << "spectrum: " << spectrum.size() << " eigenvalues"
                      << (c.out.empty() ? "" : " written to " + c.out) << "\n";
            return 0;
        }
        if (*cmd_dynamics) {
            DynamicsDemoConfig c;
            const json sec = section(cfg, "dynamics");
            overlay_common(cmd_dynamics, sec, c);
            get_if(sec, "rho", c.rho);
            get_if(sec, "alpha", c.alpha);
            get_if(sec, "mu", c.mu);
            get_if(sec, "t_end", c.t_end);
            get_if(sec, "tol", c.tol);
            get_if(sec, "stride", c.stride);
            if (cmd_dynamics->count("--rho")) c.rho = dy_rho;
            if (cmd_dynamics->count("--alpha")) c.alpha = dy_alpha;
            if (cmd_dynamics->count("--mu")) c.mu = dy_mu;
            if (cmd_dynamics->count("--t-end")) c.t_end = dy_tend;
            if (cmd_dynamics->count("--tol")) c.tol = dy_tol;
            if (cmd_dynamics->count("--stride")) c.stride = dy_stride;
            if (c.n == 0) c.n = 10;
            const auto result = run_dynamics_demo(c);
            std::cout << "dynamics: converged " << (result.converged_random_ic ? "yes" : "no")
                      << "/" << (result.converged_ones_ic ? "yes" : "no")
                      << ", extinct species " << result.extinct_count << "\n";
            return 0;
        }
        if (*cmd_cavity) {
            CavityCurveConfig c;
            const json sec = section(cfg, "cavity");
            get_if(cfg, "out", c.out);
            get_if(sec, "out", c.out);
            if (cmd_cavity->count("--out")) c.out = out_path;
            get_if(sec, "rho", c.rho);
            get_if(sec, "mu", c.mu);
            get_grid_if(sec, "alpha", c.alpha, &c.alphas);
            if (cmd_cavity->count("--rho")) c.rho = cv_rho;
            if (cmd_cavity->count("--mu")) c.mu = cv_mu;
            if (cmd_cavity->count("--alpha-min")) c.alpha.min = cv_alpha.min;
            if (cmd_cavity->count("--alpha-max")) c.alpha.max = cv_alpha.max;
            if (cmd_cavity->count("--alpha-points")) c.alpha.points = cv_alpha.points;
            const auto results = run_cavity(c);
            // uniqueness of the fixed point is conjectural: warn on multistart
            // disagreement at the most fragile grid point instead of asserting
            const auto alphas = c.alpha_values();
            const std::size_t fragile = static_cast<std::size_t>(
                std::min_element(alphas.begin(), alphas.end()) - alphas.begin());
            const double spread = cavity_multistart_spread(c.rho, alphas[fragile], c.mu,
                                                           results[fragile]);
            if (spread > 1e-8)
                std::cerr << "warning: multistart fixed points differ by "
                          << fmt_g17(spread) << " at alpha=" << fmt_g17(alphas[fragile])
                          << "\n";
            std::cout << "cavity: " << results.size() << " fixed points"
                      << (c.out.empty() ? "" : " written to " + c.out) << "\n";
            return 0;
        }
        if (*cmd_cvm) {
            CavityVsMcConfig c;
            const json sec = section(cfg, "cavity-vs-mc");
            overlay_common(cmd_cvm, sec, c);
            get_if(sec, "rho", c.rho);
            get_if(sec, "mu", c.mu);
            get_if(sec, "per_trial_out", c.per_trial_out);
            get_grid_if(sec, "alpha", c.alpha, &c.alphas);
            if (cmd_cvm->count("--rho")) c.rho = cm_rho;
            if (cmd_cvm->count("--mu")) c.mu = cm_mu;
            if (cmd_cvm->count("--per-trial-out")) c.per_trial_out = cm_per_trial;
            if (cmd_cvm->count("--alpha-min")) c.alpha.min = cm_alpha.min;
            if (cmd_cvm->count("--alpha-max")) c.alpha.max = cm_alpha.max;
            if (cmd_cvm->count("--alpha-points")) c.alpha.points = cm_alpha.points;
            if (c.n == 0) c.n = 500;
            if (c.trials == 0) c.trials = 200;
            const auto rows = run_cavity_vs_mc(c);
            std::cout << "cavity-vs-mc: " << rows.size() << " grid points"
                      << (c.out.empty() ? "" : " written to " + c.out) << "\n";
            return 0;
        }
        if (*cmd_corr) {
            CorrelationImpactConfig c;
            int co_workers = 0;
            const json sec = section(cfg, "correlation-impact");
            get_if(cfg, "out", c.out);
            get_if(cfg, "workers", co_workers);
            get_if(sec, "out", c.out);
            get_if(sec, "workers", co_workers);
            if (cmd_corr->count("--out")) c.out = out_path;
            if (cmd_corr->count("--workers")) co_workers = workers;
            get_if(sec, "mu", c.mu);
            get_grid_if(sec, "rho", c.rho);
            get_grid_if(sec, "alpha", c.alpha);
            if (cmd_corr->count("--mu")) c.mu = co_mu;
            if (cmd_corr->count("--rho-min")) c.rho.min = co_rho.min;
            if (cmd_corr->count("--rho-max")) c.rho.max = co_rho.max;
            if (cmd_corr->count("--rho-points")) c.rho.points = co_rho.points;
            if (cmd_corr->count("--alpha-min")) c.alpha.min = co_alpha.min;
            if (cmd_corr->count("--alpha-max")) c.alpha.max = co_alpha.max;
            if (cmd_corr->count("--alpha-points")) c.alpha.points = co_alpha.points;
            const auto results = run_correlation_impact(c, co_workers);
            std::cout << "correlation-impact: " << results.size() << " fixed points"
                      << (c.out.empty() ? "" : " written to " + c.out) << "\n";
            return 0;
        }
        return 2;  // unreachable: require_subcommand(1)
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}

} // namespace ellv
