// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adiabat/continuum.hpp"
#include "adiabat/crossing_sweep.hpp"
#include "adiabat/microstate.hpp"
#include "adiabat/numerics.hpp"
#include "adiabat/scenario.hpp"
#include "adiabat/spectra.hpp"
#include "adiabat/thermo.hpp"

using namespace adiabat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[violated: " << what << "] ";
        }
    }
};

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

// 1. Transport velocity against its closed form.
void velocity_oracle(Outcome& out) {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> log_c(std::log(0.1), std::log(10.0)), kappa(-3.0, 3.0), eta(0.0, 4.0),
        log_eps(std::log(1e-3), std::log(1e3)), log_a(std::log(0.1), std::log(10.0));
    double worst_closed = 0.0, worst_quad = 0.0;
    for (int k = 0; k < 100; ++k) {
        const PowerLaw p{std::exp(log_c(rng)), kappa(rng), eta(rng)};
        const double eps = std::exp(log_eps(rng)), a = std::exp(log_a(rng));
        const auto dos = analytic_dos(p);
        const double oracle = -p.kappa * eps / ((p.eta + 1.0) * a);
        worst_closed = std::max(worst_closed, rel(wave_velocity(*dos, eps, a), oracle));
        worst_quad = std::max(worst_quad, rel(wave_velocity_quadrature(*dos, eps, a), oracle));
    }
    out.detail << "max rel err closed form " << worst_closed << ", quadrature " << worst_quad << " ";
    out.require(worst_closed < 1e-8, "closed form within 1e-8");
    out.require(worst_quad < 1e-8, "quadrature within 1e-8");
}

// 2. Characteristics conserve Phi; ODE and inversion routes agree.
void phi_conservation(Outcome& out) {
    const std::vector<std::pair<std::string, SpectrumFamily>> families{
        {"PowerLaw(1,2,1)", PowerLaw{1.0, 2.0, 1.0}},
        {"PowerLaw(0.5,-1.5,3)", PowerLaw{0.5, -1.5, 3.0}},
        {"TwoTerm(1,0,0;1,3,2)", TwoTerm{1, 0, 0, 1, 3, 2}},
        {"TwoTerm(1,0,0;1,3,2)x64", TwoTerm{1, 0, 0, 1, 3, 2, 64}},
        {"TwoTerm(2,1,0.5;0.3,-2,1.5)", TwoTerm{2, 1, 0.5, 0.3, -2, 1.5}}};
    double worst_drift = 0.0, worst_route = 0.0;
    for (const auto& [name, family] : families) {
        const auto dos = analytic_dos(family);
        const auto q = *dos->canonical_quantiles(1.0, 0.4, 1e-10);
        for (double a1 : {4.0, 0.25}) {
            for (int k = 0; k < 9; ++k) {
                const double eps0 = q.first * std::pow(q.second / q.first, k / 8.0);
                const auto c = trace_characteristic(*dos, eps0, 1.0, a1);
                const double drift = std::abs(c.phi_drift);
                const double route = rel(c.eps1, characteristic_by_inversion(*dos, eps0, 1.0, a1));
                worst_drift = std::max(worst_drift, drift);
                worst_route = std::max(worst_route, route);
            }
        }
    }
    out.detail << "max |Phi drift| " << worst_drift << ", max ODE/inversion rel gap " << worst_route << " ";
    out.require(worst_drift < 1e-8, "Phi conserved within 1e-8");
    out.require(worst_route < 1e-6, "routes agree within 1e-6");
}

// 3. A canonical start stays canonical under a power law only.
void canonical_invariance(Outcome& out) {
    const PowerLaw p{1.0, 2.0, 1.0};
    const double a0 = 1.0, t0 = 1.0;
    const auto dos = analytic_dos(p);
    const auto w0 = canonical_distribution(dos, a0, t0);
    double worst_residual = 0.0, worst_slope = 0.0;
    for (double a : {0.5, 2.0, 4.0}) {
        const auto fit = canonical_fit(advect(w0, a));
        const double ta = t0 * std::pow(a / a0, p.kappa / (p.eta + 1.0));
        worst_residual = std::max(worst_residual, fit.max_abs_residual);
        worst_slope = std::max(worst_slope, rel(fit.slope, -1.0 / ta));
    }
    const auto tt = analytic_dos(TwoTerm{1, 0, 0, 1, 3, 2});
    const double witness = canonical_fit(advect(canonical_distribution(tt, 1.0, 0.4), 0.25)).max_abs_residual;
    out.detail << "PowerLaw max residual " << worst_residual << ", slope rel err " << worst_slope
               << "; TwoTerm residual " << witness << " ";
    out.require(worst_residual < 1e-6, "PowerLaw residual < 1e-6");
    out.require(worst_slope < 1e-6, "slope = -1/T(a) within 1e-6");
    out.require(witness > 1e-3, "TwoTerm residual > 1e-3");
}

std::function<SpectrumFamily(int)> ladder_refinement(double delta, int base) {
    return [delta, base](int m) -> SpectrumFamily {
        const double d = delta * base / m;
        return TwoLadder{d, d, m, m};
    };
}

RefineOptions ladder_refine_options() {
    RefineOptions o;
    o.temperature = 1.0;
    o.sweep = Sweep{0.8, 1.6};
    return o;
}

// 4. Entropy: conserved by continuum transport, produced by equalization.
void entropy_laws(Outcome& out) {
    double worst_drift = 0.0;
    for (const auto& family : {SpectrumFamily(PowerLaw{1.0, 2.0, 1.0}), SpectrumFamily(TwoTerm{1, 0, 0, 1, 3, 2}),
                               SpectrumFamily(TwoLadder{1.875, 1.875, 32, 32})}) {
        const auto w0 = canonical_distribution(analytic_dos(family), 1.0, 0.7);
        const double s0 = continuum_entropy(w0);
        for (double a : {0.5, 2.0}) worst_drift = std::max(worst_drift, rel(continuum_entropy(advect(w0, a)), s0));
    }

    double min_event = INFINITY;
    std::size_t events = 0;
    const auto ladder = discrete_spectrum(TwoLadder{1.875, 1.875, 32, 32}, Sweep{0.8, 1.6});
    const auto r = sweep_adiabatic(ladder, canonical_init(ladder, 0.8, 1.0), find_crossings(ladder));
    for (const auto& e : r.ledger) min_event = std::min(min_event, e.delta_s), ++events;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> w{u(rng), u(rng), u(rng), u(rng)};
        const std::vector<int> g{1, 2, 3, 1};
        double z = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) z += g[j] * w[j];
        for (double& x : w) x /= z;
        const ProbabilityState s({0, 1, 2, 3}, g, w);
        const std::vector<int> ids{k % 3, k % 3 + 1};
        min_event = std::min(min_event, equalize(s, ids, 0.0).second.delta_s), ++events;
    }

    double worst_second_order = 0.0;
    const double delta = 1e-3;
    for (double w : {0.01, 0.1, 0.3, 0.45}) {
        const double rest = 1.0 - 2.0 * w;
        const ProbabilityState s({0, 1, 2}, {1, 1, 1}, {w * (1 + delta / 2), w * (1 - delta / 2), rest});
        const std::vector<int> ids{0, 1};
        const double ds = equalize(s, ids, 0.0).second.delta_s;
        worst_second_order = std::max(worst_second_order, rel(ds / (delta * delta), w / 4));
    }

    const auto rows = refine_study(ladder_refinement(3.75, 16), {16, 32, 64, 128, 256}, ladder_refine_options());
    bool decreasing = true;
    std::vector<double> spacing, ds;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        spacing.push_back(rows[k].spacing);
        ds.push_back(rows[k].total_delta_s);
        if (k > 0) decreasing = decreasing && rows[k].total_delta_s < rows[k - 1].total_delta_s;
    }
    const double slope = numerics::loglog_slope(spacing, ds);

    out.detail << "continuum S rel drift " << worst_drift << "; min dS over " << events << " equalizations "
               << min_event << "; second-order rel err " << worst_second_order << "; refinement dS";
    for (double x : ds) out.detail << ' ' << x;
    out.detail << ", slope " << slope << " ";
    out.require(worst_drift < 1e-6, "continuum S conserved within 1e-6");
    out.require(min_event >= 0.0, "every dS >= 0");
    out.require(worst_second_order < 0.01, "|dS/delta^2 - w/4| < 1%");
    out.require(decreasing, "total dS strictly decreasing");
    out.require(slope >= 0.8, "log-log slope >= 0.8");
}

// 5. Fluctuation identity and the adiabatic energy-spread prediction.
void fluctuations(Outcome& out) {
    const Sweep sweep{0.8, 1.6};
    const std::vector<std::pair<std::string, SpectrumFamily>> families{
        {"PowerLaw", PowerLaw{1.0, 2.0, 1.0}},
        {"TwoTerm", TwoTerm{1, 0, 0, 1, 3, 2, 64}},
        {"TwoLadder", TwoLadder{1.875, 1.875, 32, 32}},
        {"LinearEnsemble", LinearEnsemble{{0.0, 0.5, 1.2, 2.0}, {0.1, -0.2, 0.3, 0.0}, {1, 2, 1, 3}}},
        {"OscillatorLadder", OscillatorLadder{40, 3}}};
    double worst_identity = 0.0;
    for (const auto& [name, family] : families) {
        std::vector<ThermoSystem> systems;
        if (has_continuum_form(family)) systems.emplace_back(std::shared_ptr<const ContinuumDos>(analytic_dos(family)));
        if (has_discrete_form(family))
            systems.emplace_back(std::make_shared<const DiscreteSpectrum>(discrete_spectrum(family, sweep)));
        for (const auto& sys : systems)
            for (double t : {0.3, 1.0, 3.0}) {
                const auto c = heat_capacity({sys, 1.2, t});
                worst_identity = std::max(worst_identity, rel(c.from_variance, c.from_derivative));
            }
    }

    const auto cmp = compare_processes(TwoTerm{1, 0, 0, 1, 3, 2, 64}, 1.0, 0.4, {1.0, 0.5});
    const auto pred = predict_fluctuations(analytic_dos(TwoTerm{1, 0, 0, 1, 3, 2, 64}), 1.0, 0.4, 0.5);
    const auto& last = cmp.rows.back();
    const double c_change = rel(pred.c_final, pred.c_initial);
    const double to_ad = std::abs(last.de_ad_measured - pred.adiabatic);
    const double to_zp = std::abs(last.de_ad_measured - pred.zero_polytropic);
    out.detail << "Var = c_a T^2 max rel err " << worst_identity << "; N = 64: c_a " << pred.c_initial << " -> "
               << pred.c_final << ", measured dE_ad " << last.de_ad_measured << " vs adiabatic "
               << pred.adiabatic << " vs zero-polytropic " << pred.zero_polytropic << " ";
    out.require(worst_identity < 1e-8, "Var = c_a T^2 within 1e-8");
    out.require(c_change >= 0.2, "c_a changes by >= 20%");
    out.require(to_ad < to_zp, "closer to the adiabatic prediction");
    out.require(to_ad < 0.05 * pred.adiabatic, "within 5% of the adiabatic prediction");
}

// 6. Mean-energy gap against system size.
void size_scaling(Outcome& out) {
    const auto study = size_scaling_study([](int n) -> SpectrumFamily { return TwoTerm{1, 0, 0, 1, 3, 2, n}; },
                                          {4, 8, 16, 32, 64, 128}, 1.0, 0.4, 0.5);
    out.detail << "gaps";
    for (const auto& r : study.rows) out.detail << ' ' << r.relative_gap;
    out.require(study.slope.has_value(), "slope fitted");
    if (study.slope) {
        out.detail << ", slope " << *study.slope << " ";
        out.require(*study.slope >= -1.3 && *study.slope <= -0.7, "slope in [-1.3, -0.7]");
    }
}

// 7. Out-and-back: discrete sweep is irreversible, continuum transport is not.
void irreversibility(Outcome& out) {
    const Sweep sweep{0.8, 1.6};
    const auto spec = discrete_spectrum(TwoLadder{1.875, 1.875, 32, 32}, sweep);
    const auto w0 = canonical_init(spec, sweep.a_start, 1.0);
    const auto there = sweep_adiabatic(spec, w0, find_crossings(spec));
    const auto back_spec = spec.reversed();
    const auto back_sched = find_crossings(back_spec);
    const auto back = sweep_adiabatic(back_spec, align_state(there.final_state, back_spec), back_sched);
    const double l1 = l1_distance(back.final_state, w0);
    const double ds = there.total_delta_s + back.total_delta_s;

    const auto c0 = canonical_distribution(analytic_dos(TwoLadder{1.875, 1.875, 32, 32}), sweep.a_start, 1.0);
    const auto c1 = advect(c0, sweep.a_end);
    const auto c2 = advect_onto(c1, sweep.a_start, c0.grid());
    double diff = 0.0, peak = 0.0;
    const auto v0 = c0.w(), v2 = c2.w();
    for (std::size_t i = 0; i < v0.size(); ++i) {
        diff = std::max(diff, std::abs(v2[i] - v0[i]));
        peak = std::max(peak, v0[i]);
    }
    out.detail << "crossings " << there.ledger.size() << " + " << back.ledger.size() << ", L1 " << l1 << ", dS "
               << ds << "; continuum L-inf (relative to max w) " << diff / peak << " ";
    out.require(!there.ledger.empty(), ">= 1 crossing");
    out.require(l1 > 0.0, "discrete L1 > 0");
    out.require(ds > 0.0, "discrete dS > 0");
    out.require(diff / peak < 1e-6, "continuum round trip within 1e-6");
}

// 8. Smoothed discrete output approaches the continuum solution.
void convergence(Outcome& out) {
    const auto rows = refine_study(ladder_refinement(3.75, 16), {16, 32, 64, 128, 256}, ladder_refine_options());
    bool decreasing = true;
    out.detail << "L1";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.detail << ' ' << rows[k].distance_to_continuum;
        if (k > 0) decreasing = decreasing && rows[k].distance_to_continuum < rows[k - 1].distance_to_continuum;
    }
    out.detail << " ";
    out.require(decreasing, "L1 decreasing across 4 refinements");
}

// 9. Full suite twice, with different job counts.
void determinism(Outcome& out) {
    const fs::path configs = ADIABAT_SCENARIO_DIR;
    const auto root = fs::temp_directory_path() /
                      ("adiabat_acceptance_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    const auto first = run_suite(configs, root / "first", 1);
    const auto second = run_suite(configs, root / "second", 4);
    std::size_t compared = 0, differing = 0;
    bool all_ok = first.ok() && second.ok() && first.entries.size() == second.entries.size();
    for (std::size_t k = 0; all_ok && k < first.entries.size(); ++k) {
        const auto& a = first.entries[k].manifest->files;
        const auto& b = second.entries[k].manifest->files;
        if (a.size() != b.size()) ++differing;
        for (std::size_t f = 0; f < std::min(a.size(), b.size()); ++f, ++compared)
            if (a[f].name != b[f].name || a[f].sha256 != b[f].sha256) ++differing;
    }
    for (const auto& e : first.entries)
        if (!e.error.empty()) out.detail << e.config.filename().string() << ": " << e.error << "; ";
    out.detail << first.entries.size() << " scenarios, " << compared << " files compared, " << differing
               << " differ ";
    out.require(all_ok && first.entries.size() == 5, "all 5 scenarios succeed in both runs");
    out.require(differing == 0, "identical digests");
    fs::remove_all(root);
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;  // 0: no bound
        void (*run)(Outcome&);
    };
    const std::vector<Criterion> criteria{
        {1, "transport velocity closed-form oracle", 1.0, velocity_oracle},
        {2, "Phi conservation along characteristics", 10.0, phi_conservation},
        {3, "canonical invariance", 30.0, canonical_invariance},
        {4, "entropy laws", 120.0, entropy_laws},
        {5, "energy fluctuations", 60.0, fluctuations},
        {6, "mean-energy gap scaling", 120.0, size_scaling},
        {7, "irreversibility witness", 30.0, irreversibility},
        {8, "discrete to continuum convergence", 120.0, convergence},
        {9, "determinism", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome out;
        out.detail.precision(4);
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << "[exception: " << e.what() << "] ";
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) out.require(false, "runtime budget");
        std::printf("%s criterion %d (%s): %s(%.2f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.str().c_str(), seconds);
        std::fflush(stdout);
        failed += out.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
