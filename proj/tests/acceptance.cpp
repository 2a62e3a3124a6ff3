// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
// Run with no arguments for every criterion, or pass criterion numbers.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "ellv/cli.hpp"
#include "ellv/harness.hpp"
#include "oracles.hpp"

using namespace ellv;

namespace {

constexpr std::uint64_t kBaseSeed = 20240501;

struct Check {
    bool ok = true;
    std::vector<std::string> failures;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            failures.push_back(what);
        }
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::vector<double> linspace(double lo, double hi, int points) {
    return GridSpec{lo, hi, points}.values();
}

// --------------------------------------------------------------------------
// 1. Feasibility transition at desk scale (n=500, 200 trials, 3 rho values)
// --------------------------------------------------------------------------
bool criterion_1(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    TransitionConfig cfg;
    cfg.n = 500;
    cfg.trials = 200;
    cfg.mu = 0.0;
    cfg.rhos = {-0.5, 0.0, 0.5};
    cfg.kappa = {0.9, 2.0, 12};  // step 0.1: contains kappa = 1.0 and 2.0
    cfg.base_seed = kBaseSeed;
    const auto rows = run_transition(cfg);

    const auto kappas = cfg.kappa.values();
    const std::size_t nk = kappas.size();
    for (std::size_t r = 0; r < cfg.rhos.size(); ++r) {
        for (std::size_t k = 0; k < nk; ++k) {
            const auto& row = rows[r * nk + k];
            if (std::abs(row.kappa - 1.0) < 1e-12)
                c.expect(row.feasible_fraction <= 0.05,
                         "rho=" + fmt_g17(row.rho) + " kappa=1: fraction " +
                             fmt_g17(row.feasible_fraction) + " > 0.05");
            if (std::abs(row.kappa - 2.0) < 1e-12)
                c.expect(row.feasible_fraction >= 0.95,
                         "rho=" + fmt_g17(row.rho) + " kappa=2: fraction " +
                             fmt_g17(row.feasible_fraction) + " < 0.95");
        }
    }
    for (std::size_t k = 0; k < nk; ++k) {
        for (std::size_t a = 0; a < cfg.rhos.size(); ++a)
            for (std::size_t b = a + 1; b < cfg.rhos.size(); ++b) {
                const double diff = std::abs(rows[a * nk + k].feasible_fraction -
                                             rows[b * nk + k].feasible_fraction);
                c.expect(diff <= 0.10, "rho curves differ by " + fmt_g17(diff) +
                                           " at kappa=" + fmt_g17(kappas[k]));
            }
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.expect(elapsed < 600.0, "runtime " + fmt_g17(elapsed) + "s exceeds 10 min");
    return c.ok;
}

// --------------------------------------------------------------------------
// 2. Covariance-profile invariance of the transition
// --------------------------------------------------------------------------
bool criterion_2(Check& c) {
    TransitionConfig cfg;
    cfg.n = 500;
    cfg.trials = 200;
    cfg.mu = 0.0;
    cfg.kappa = {0.9, 2.0, 12};
    cfg.base_seed = kBaseSeed;

    cfg.rhos = {0.0};
    const auto fixed_rho = run_transition(cfg);

    cfg.covariance_profile = true;  // rho_ij ~ U[-1,1], drawn once
    const auto profile = run_transition(cfg);

    for (std::size_t k = 0; k < fixed_rho.size(); ++k) {
        const double diff =
            std::abs(fixed_rho[k].feasible_fraction - profile[k].feasible_fraction);
        c.expect(diff <= 0.10, "profile curve differs by " + fmt_g17(diff) +
                                   " at kappa=" + fmt_g17(fixed_rho[k].kappa));
    }
    return c.ok;
}

// --------------------------------------------------------------------------
// 3. Spectral edge and BBP outlier at n=2000
// --------------------------------------------------------------------------
bool criterion_3(Check& c) {
    const int n = 2000, trials = 20;

    for (double rho : {-0.5, 0.0, 0.5}) {
        std::vector<double> lmax(trials);
        parallel_for_indexed(trials, 0, [&](std::size_t t) {
            Rng rng(experiment_seed("acceptance-edge", kBaseSeed,
                                    t + static_cast<std::uint64_t>(100 * (rho + 1))));
            const Matrix a = sample_elliptic(n, rho, rng);
            const Matrix sym = (a + a.transpose()) / std::sqrt(static_cast<double>(n));
            lmax[t] = lambda_max_symmetric(sym);
        });
        double mean = 0.0;
        for (double v : lmax) mean += v;
        mean /= trials;
        const double edge = 2.0 * std::sqrt(2.0 * (1.0 + rho));
        c.expect(std::abs(mean - edge) <= 0.05 * edge,
                 "rho=" + fmt_g17(rho) + ": mean lambda_max " + fmt_g17(mean) +
                     " vs edge " + fmt_g17(edge));
    }

    // BBP: rho=0, alpha=1, mu=1 puts the outlier at 2 mu + 1/mu = 3
    std::vector<double> outlier(trials);
    parallel_for_indexed(trials, 0, [&](std::size_t t) {
        Rng rng(experiment_seed("acceptance-bbp", kBaseSeed, t));
        const Matrix a = sample_elliptic(n, 0.0, rng);
        Matrix sym = (a + a.transpose()) / std::sqrt(static_cast<double>(n));
        sym.array() += 2.0 / n;  // (2 mu / n) ones with mu = 1
        outlier[t] = lambda_max_symmetric(sym);
    });
    double mean = 0.0;
    for (double v : outlier) mean += v;
    mean /= trials;
    c.expect(std::abs(mean - 3.0) <= 0.05 * 3.0,
             "BBP outlier mean " + fmt_g17(mean) + " vs 3");
    return c.ok;
}

// --------------------------------------------------------------------------
// 4. Stability region: empirical PD vs closed-form admissibility
// --------------------------------------------------------------------------
bool criterion_4(Check& c) {
    const int n = 1000;
    const auto rhos = linspace(-0.85, 0.85, 20);
    const auto alphas = linspace(0.6, 4.0, 20);

    struct Cell {
        double rho, alpha, mu_below, mu_above;
    };
    std::vector<Cell> cells;
    for (double r : rhos)
        for (double a : alphas) {
            const double mu_max = admissible_mu_max(r, a);
            if (std::isfinite(mu_max))
                cells.push_back({r, a, 0.5 * mu_max, mu_max + 0.3});
            else
                cells.push_back({r, a, 0.0, 0.8});
        }

    std::vector<char> agree(cells.size());
    parallel_for_indexed(cells.size(), 0, [&](std::size_t i) {
        const Cell& cell = cells[i];
        Rng rng(experiment_seed("acceptance-stability", kBaseSeed, i));
        const Matrix a = sample_elliptic(n, cell.rho, rng);
        bool cell_ok = true;
        for (double mu : {cell.mu_below, cell.mu_above}) {
            const ModelParams params{n, cell.rho, mu, cell.alpha};
            const auto im = assemble_interaction(a, params);
            const auto verdict = check_stability_pd(im);
            if (verdict.is_pd != verdict.is_admissible) cell_ok = false;
        }
        agree[i] = cell_ok ? 1 : 0;
    });

    int agreed = 0;
    for (char v : agree) agreed += v;
    const double fraction = static_cast<double>(agreed) / static_cast<double>(cells.size());
    c.expect(fraction >= 0.95, "agreement fraction " + fmt_g17(fraction) + " < 0.95 (" +
                                   std::to_string(agreed) + "/" +
                                   std::to_string(cells.size()) + ")");
    return c.ok;
}

// --------------------------------------------------------------------------
// 5. LCP correctness: residuals at n=200, exactness against enumeration
// --------------------------------------------------------------------------
bool criterion_5(Check& c) {
    // residual part: 100 admissible instances at n=200
    const int instances = 100;
    std::vector<double> residuals(instances, 1.0);
    parallel_for_indexed(instances, 0, [&](std::size_t i) {
        Rng rng(experiment_seed("acceptance-lcp", kBaseSeed, i));
        double rho, alpha, mu;
        do {  // deterministic rejection keeps instances comfortably inside
            rho = -0.85 + 1.7 * rng.uniform();
            const double lo = std::sqrt(2.0 * (1.0 + rho));
            alpha = lo * (1.15 + 2.0 * rng.uniform());
            mu = rng.uniform() * 0.8 * admissible_mu_max(rho, alpha);
        } while (predicted_lambda_max_sym(rho, alpha, mu) > 1.9);
        const ModelParams params{200, rho, mu, alpha};
        const auto im = sample_interaction(params, rng.next_u64());
        residuals[i] = solve_lcp(im).lcp_residual;
    });
    for (int i = 0; i < instances; ++i)
        c.expect(residuals[i] <= 1e-10,
                 "instance " + std::to_string(i) + ": residual " + fmt_g17(residuals[i]));

    // exactness part: support enumeration oracle for n <= 12
    int checked = 0;
    for (std::uint64_t seed = 1; checked < 60; ++seed) {
        const int n = 2 + static_cast<int>(seed % 11);  // sizes 2..12
        const ModelParams params{n, 0.4, 0.3, 2.4};
        const auto im = sample_interaction(params, experiment_seed("acceptance-lcp-small",
                                                                   kBaseSeed, seed));
        if (!check_stability_pd(im.b).is_pd) continue;
        ++checked;
        const auto sol = solve_lcp(im);
        const auto oracle = oracles::lcp_enumerate(im.b);
        c.expect(oracle.size() == 1,
                 "n=" + std::to_string(n) + ": oracle found " +
                     std::to_string(oracle.size()) + " solutions");
        if (oracle.size() != 1) continue;
        for (int k = 0; k < n; ++k) {
            c.expect((sol.x(k) > 0) == (oracle[0](k) > 0),
                     "n=" + std::to_string(n) + ": support mismatch at k=" +
                         std::to_string(k));
            c.expect(std::abs(sol.x(k) - oracle[0](k)) <= 1e-8,
                     "n=" + std::to_string(n) + ": value mismatch at k=" +
                         std::to_string(k));
        }
    }
    return c.ok;
}

// --------------------------------------------------------------------------
// 6. Dynamics converge to the LCP equilibrium (ten-species instance)
// --------------------------------------------------------------------------
bool criterion_6(Check& c) {
    const ModelParams params{10, 0.0, 0.0, 2.0};
    const auto im = sample_interaction(params, 17);
    const auto eq = solve_lcp(im);
    c.expect((eq.x.array() == 0.0).any(), "no extinct species in this instance");

    StepControls controls;
    controls.tol = 1e-8;
    Rng rng(experiment_seed("acceptance-dynamics", kBaseSeed, 0));
    for (int trial = 0; trial < 5; ++trial) {
        Vector x0(10);
        for (int i = 0; i < 10; ++i) x0(i) = 2.0 * rng.uniform() + 1e-12;
        const auto traj = integrate(im, x0, 200.0, controls);
        const double dist = traj.distance_to(eq.x, traj.states.size() - 1);
        c.expect(dist <= 1e-6,
                 "start " + std::to_string(trial) + ": distance " + fmt_g17(dist));
        c.expect(converged_to(traj, eq.x, 1e-6),
                 "start " + std::to_string(trial) + ": not converged");
    }
    return c.ok;
}

// --------------------------------------------------------------------------
// 7. Cavity predictions against Monte-Carlo equilibria (n=500, 200 trials)
// --------------------------------------------------------------------------
bool criterion_7(Check& c) {
    CavityVsMcConfig cfg;
    cfg.n = 500;
    cfg.trials = 200;
    cfg.rho = 0.5;
    cfg.mu = 0.2;
    cfg.alphas = linspace(std::sqrt(3.0) + 0.3, 10.0, 8);
    cfg.base_seed = kBaseSeed;
    const auto rows = run_cavity_vs_mc(cfg);

    for (const auto& row : rows) {
        c.expect(row.warning.empty(), "alpha=" + fmt_g17(row.alpha) + ": " + row.warning);
        if (!row.warning.empty()) continue;
        c.expect(std::abs(row.phi_theory - row.phi_mc) <= 0.03,
                 "alpha=" + fmt_g17(row.alpha) + ": |phi diff| " +
                     fmt_g17(std::abs(row.phi_theory - row.phi_mc)));
        c.expect(std::abs(row.mean_theory - row.mean_mc) <= 0.05 * std::abs(row.mean_theory),
                 "alpha=" + fmt_g17(row.alpha) + ": <x> off by " +
                     fmt_g17(std::abs(row.mean_theory - row.mean_mc)));
        c.expect(std::abs(row.q_theory - row.q_mc) <= 0.05 * std::abs(row.q_theory),
                 "alpha=" + fmt_g17(row.alpha) + ": <x^2> off by " +
                     fmt_g17(std::abs(row.q_theory - row.q_mc)));
    }
    return c.ok;
}

// --------------------------------------------------------------------------
// 8. Cavity internal consistency
// --------------------------------------------------------------------------
bool criterion_8(Check& c) {
    const auto result = solve_cavity(0.5, 4.0, 0.2);
    c.expect(result.residual <= 1e-10, "fixed-point residual " + fmt_g17(result.residual));

    const auto reduced = solve_cavity(0.0, 3.0, 0.3);
    c.expect(std::abs(reduced.state.v - reduced.state.phi / 3.0) <= 1e-10,
             "rho=0 reduction violated by " +
                 fmt_g17(std::abs(reduced.state.v - reduced.state.phi / 3.0)));

    for (double delta : {-4.0, -1.0, 0.0, 0.7, 2.0, 5.0}) {
        const auto tm = truncated_moments(delta);
        const auto ref = oracles::truncated_moments_quadrature(delta);
        c.expect(std::abs(tm.p - ref.p) <= 1e-8, "p mismatch at delta=" + fmt_g17(delta));
        c.expect(std::abs(tm.e1 - ref.e1) <= 1e-8, "e1 mismatch at delta=" + fmt_g17(delta));
        c.expect(std::abs(tm.e2 - ref.e2) <= 1e-8, "e2 mismatch at delta=" + fmt_g17(delta));
    }

    for (double alpha : {2.2, 2.6, 3.0, 4.0, 5.0}) {
        double prev = 2.0;
        for (double rho = -0.9; rho <= 0.9 + 1e-9; rho += 0.3) {
            if (!(alpha > std::sqrt(2.0 * (1.0 + rho)))) continue;
            const auto r = solve_cavity(rho, alpha, 0.0);
            c.expect(r.state.phi <= prev + 1e-3,
                     "phi increased in rho at alpha=" + fmt_g17(alpha) +
                         ", rho=" + fmt_g17(rho));
            prev = r.state.phi;
        }
    }
    return c.ok;
}

// --------------------------------------------------------------------------
// 9. Gumbel limits of the normalized row-sum extremes (n=2000, 500 trials)
// --------------------------------------------------------------------------
bool criterion_9(Check& c) {
    const int n = 2000, trials = 500;
    const auto scalings = critical_scalings(n);
    std::vector<double> stat_max(trials), stat_min_neg(trials);
    parallel_for_indexed(trials, 0, [&](std::size_t t) {
        Rng rng(experiment_seed("acceptance-evt", kBaseSeed, t));
        const Vector z = row_sums(sample_elliptic(n, 0.5, rng));
        stat_max[t] = max_statistic(z, scalings);
        stat_min_neg[t] = -min_statistic(z, scalings);
    });

    const double ks_max = ks_distance(stat_max, gumbel_cdf);
    c.expect(ks_max <= 0.10, "KS(max statistic, Gumbel) = " + fmt_g17(ks_max));
    const double ks_sym = ks_distance_two_sample(stat_max, stat_min_neg);
    c.expect(ks_sym <= 0.10, "KS(max, negated min) = " + fmt_g17(ks_sym));
    return c.ok;
}

// --------------------------------------------------------------------------
// 10. Byte-identical CSVs across reruns and worker counts
// --------------------------------------------------------------------------
bool criterion_10(Check& c) {
    TransitionConfig tr;
    tr.n = 120;
    tr.trials = 16;
    tr.rhos = {-0.5, 0.5};
    tr.kappa = {1.0, 2.0, 4};
    tr.base_seed = kBaseSeed;

    tr.workers = 1;
    tr.out = "acc10_tr_a.csv";
    run_transition(tr);
    tr.out = "acc10_tr_b.csv";
    run_transition(tr);
    tr.workers = 2;
    tr.out = "acc10_tr_c.csv";
    run_transition(tr);
    const std::string base = slurp("acc10_tr_a.csv");
    c.expect(!base.empty(), "transition CSV is empty");
    c.expect(base == slurp("acc10_tr_b.csv"), "transition rerun differs");
    c.expect(base == slurp("acc10_tr_c.csv"), "transition differs across worker counts");

    CavityVsMcConfig cvm;
    cvm.n = 60;
    cvm.trials = 8;
    cvm.rho = 0.5;
    cvm.mu = 0.2;
    cvm.alphas = {3.0, 6.0};
    cvm.base_seed = kBaseSeed;
    cvm.workers = 1;
    cvm.out = "acc10_cvm_a.csv";
    run_cavity_vs_mc(cvm);
    cvm.workers = 2;
    cvm.out = "acc10_cvm_b.csv";
    run_cavity_vs_mc(cvm);
    c.expect(slurp("acc10_cvm_a.csv") == slurp("acc10_cvm_b.csv"),
             "cavity-vs-mc differs across worker counts");

    for (const char* f : {"acc10_tr_a.csv", "acc10_tr_b.csv", "acc10_tr_c.csv",
                          "acc10_cvm_a.csv", "acc10_cvm_b.csv"})
        std::remove(f);
    return c.ok;
}

struct Criterion {
    int id;
    const char* name;
    bool (*fn)(Check&);
};

const Criterion kCriteria[] = {
    {1, "feasibility transition at desk scale", criterion_1},
    {2, "covariance-profile invariance of the transition", criterion_2},
    {3, "spectral edge and BBP outlier (n=2000)", criterion_3},
    {4, "stability region vs admissible set (20x20 grid, n=1000)", criterion_4},
    {5, "LCP residuals and enumeration exactness", criterion_5},
    {6, "dynamics converge to the LCP equilibrium", criterion_6},
    {7, "cavity predictions vs Monte Carlo", criterion_7},
    {8, "cavity internal consistency", criterion_8},
    {9, "Gumbel limits of row-sum extremes", criterion_9},
    {10, "deterministic byte-identical CSVs", criterion_10},
};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    bool all_ok = true;
    for (const auto& criterion : kCriteria) {
        if (!wanted.empty() &&
            std::find(wanted.begin(), wanted.end(), criterion.id) == wanted.end())
            continue;
        Check check;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string error;
        try {
            ok = criterion.fn(check);
        } catch (const std::exception& e) {
            ok = false;
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        std::printf("[%s] criterion %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, elapsed);
        if (!error.empty()) std::printf("       exception: %s\n", error.c_str());
        for (const auto& f : check.failures) std::printf("       %s\n", f.c_str());
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
