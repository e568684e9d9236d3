#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "adiabat/errors.hpp"
#include "adiabat/thermo.hpp"

using namespace adiabat;

namespace {

// Hides every closed form of the wrapped density, forcing quadrature paths.
class Opaque final : public ContinuumDos {
public:
    explicit Opaque(std::shared_ptr<const ContinuumDos> inner) : inner_(std::move(inner)) {}
    double log_g(double eps, double a) const override { return inner_->log_g(eps, a); }
    double g_da(double eps, double a) const override { return inner_->g_da(eps, a); }
    double phi(double eps, double a) const override { return inner_->phi(eps, a); }
    Support support(double a) const override { return inner_->support(a); }

private:
    std::shared_ptr<const ContinuumDos> inner_;
};

// G = exp(eps^2): no canonical ensemble exists.
class Explosive final : public ContinuumDos {
public:
    double log_g(double eps, double) const override { return eps * eps; }
    double g_da(double, double) const override { return 0.0; }
    double phi(double, double) const override { return std::numeric_limits<double>::infinity(); }
    Support support(double) const override { return {}; }
};

std::shared_ptr<const DiscreteSpectrum> two_level(double gap, int g1, int g2) {
    return std::make_shared<const DiscreteSpectrum>(
        discrete_spectrum(LinearEnsemble{{0.0, gap}, {0.0, 0.0}, {g1, g2}}, Sweep{0.0, 1.0}));
}

}  // namespace

TEST_CASE("power-law partition function: closed form and quadrature") {
    const auto dos = analytic_dos(PowerLaw{2.0, 1.5, 0.5});
    const double a = 0.8, t = 1.3;
    const double z = 2.0 * std::pow(a, -1.5) * std::tgamma(1.5) * std::pow(t, 1.5);
    CHECK(partition_function({dos, a, t}) == doctest::Approx(z).epsilon(1e-13));
    const auto opaque = std::make_shared<const Opaque>(dos);
    CHECK(partition_function({opaque, a, t}) == doctest::Approx(z).epsilon(1e-10));
    const auto s = canonical_summary({opaque, a, t});
    CHECK(s.mean == doctest::Approx(1.5 * t).epsilon(1e-10));
    CHECK(s.variance == doctest::Approx(1.5 * t * t).epsilon(1e-9));
}

TEST_CASE("two-level partition function and ground-state dominance") {
    const auto spec = two_level(1.5, 2, 3);
    CHECK(partition_function({spec, 0.5, 0.7}) == doctest::Approx(2 + 3 * std::exp(-1.5 / 0.7)));
    const auto shifted = std::make_shared<const DiscreteSpectrum>(
        discrete_spectrum(LinearEnsemble{{0.4, 1.0}, {0.0, 0.0}, {2, 1}}, Sweep{0.0, 1.0}));
    const double t = 1e-3;
    CHECK(log_partition_function({shifted, 0.5, t}) + 0.4 / t == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("divergent partition integral") {
    try {
        canonical_summary({std::make_shared<const Explosive>(), 1.0, 1.0});
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
    }
}

TEST_CASE("heat capacity: power law, Schottky, two-term") {
    const auto pl = analytic_dos(PowerLaw{1.0, 2.0, 1.5});
    for (double t : {0.3, 2.0}) {
        const auto c = heat_capacity({pl, 1.7, t});
        CHECK(c.from_variance == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(c.from_derivative == doctest::Approx(2.5).epsilon(1e-6));
    }
    const auto spec = two_level(1.0, 1, 1);
    for (double t : {0.2, 1.0, 50.0}) {
        const double x = 1.0 / t;
        const double schottky = x * x * std::exp(x) / std::pow(1 + std::exp(x), 2);
        const auto c = heat_capacity({spec, 0.5, t});
        CHECK(c.from_variance == doctest::Approx(schottky).epsilon(1e-12));
        CHECK(c.from_derivative == doctest::Approx(schottky).epsilon(1e-6));
    }
    const auto tt = analytic_dos(TwoTerm{1, 0, 0, 1, 3, 2});
    CHECK(heat_capacity({tt, 1.0, 0.2}).from_variance != doctest::Approx(heat_capacity({tt, 1.0, 2.0}).from_variance));
}

TEST_CASE("isentropic temperature") {
    const auto pl = analytic_dos(PowerLaw{1.0, 1.0, 2.0});
    CHECK(isentropic_temperature(pl, 1.0, 0.7, 1.0) == 0.7);
    double previous = 0.0;
    for (double a1 : {0.5, 1.0, 2.0, 4.0}) {
        const double t = isentropic_temperature(pl, 1.0, 0.7, a1);
        CHECK(t == doctest::Approx(0.7 * std::pow(a1, 1.0 / 3.0)).epsilon(1e-10));
        CHECK(t > previous);
        previous = t;
        CHECK(isentropic_temperature(pl, a1, t, 1.0) == doctest::Approx(0.7).epsilon(1e-9));
    }
    const auto osc = analytic_dos(PowerLaw{1.0, 3.0, 2.0});
    CHECK(isentropic_temperature(osc, 1.0, 0.5, 3.0) == doctest::Approx(1.5).epsilon(1e-10));
    try {
        isentropic_temperature(pl, 1.0, 0.7, 1000.0, TemperatureBracket{0.5, 2.0});
        FAIL("expected a range error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Range);
    }
}

TEST_CASE("fluctuation predictions") {
    const auto pl = analytic_dos(PowerLaw{1.0, 1.0, 1.0});
    const auto same = predict_fluctuations(pl, 1.0, 2.0, 1.0);
    CHECK(same.zero_polytropic == same.adiabatic);
    CHECK(same.adiabatic == doctest::Approx(std::sqrt(2.0) * 2.0));
    const auto moved = predict_fluctuations(pl, 1.0, 2.0, 3.0);
    CHECK(moved.zero_polytropic == doctest::Approx(moved.adiabatic).epsilon(1e-12));
    const auto tt = analytic_dos(TwoTerm{1, 0, 0, 1, 3, 2});
    const auto p = predict_fluctuations(tt, 1.0, 0.4, 0.5);
    CHECK(p.zero_polytropic != doctest::Approx(p.adiabatic));
}

TEST_CASE("canonical fluctuation identity for every built-in family") {
    const std::vector<SpectrumFamily> families{PowerLaw{1.0, 1.0, 1.0}, TwoTerm{1, 0, 0, 1, 3, 2, 3},
                                               TwoLadder{0.5, 0.5, 40, 40},
                                               LinearEnsemble{{0.0, 0.5, 1.2}, {0.1, -0.2, 0.3}, {1, 2, 1}},
                                               OscillatorLadder{30, 3}};
    for (const auto& f : families) {
        const Sweep sweep{0.8, 1.6};
        const ThermoSystem sys = has_continuum_form(f)
                                     ? ThermoSystem(std::shared_ptr<const ContinuumDos>(analytic_dos(f)))
                                     : ThermoSystem(std::make_shared<const DiscreteSpectrum>(discrete_spectrum(f, sweep)));
        const auto c = heat_capacity({sys, 1.1, 0.9});
        CHECK(c.from_derivative == doctest::Approx(c.from_variance).epsilon(1e-8));
    }
}

TEST_CASE("compare: power law coincides, initial checkpoint is exact") {
    const auto cmp = compare_processes(PowerLaw{1.0, 2.0, 1.0}, 1.0, 1.0, {1.0, 1.5, 2.0});
    const auto& first = cmp.rows.front();
    CHECK(first.e_ad == first.e_zp);
    CHECK(first.de_ad_measured == first.de_zp_measured);
    CHECK(first.de_ad_predicted == first.de_zp_predicted);
    CHECK(first.s_ad == first.s_zp);
    for (const auto& r : cmp.rows) {
        CHECK(std::abs(r.e_ad - r.e_zp) < 1e-8 * r.e_zp);
        CHECK(r.de_zp_measured == doctest::Approx(r.de_zp_predicted).epsilon(1e-8));
    }
    CHECK(cmp.delta_s_total == 0.0);
}

TEST_CASE("compare on a discrete family runs the sweep") {
    CompareOptions opts;
    opts.representation = Representation::Discrete;
    const auto cmp = compare_processes(TwoLadder{2.0, 2.0, 30, 30}, 0.8, 1.0, {0.8, 1.2, 1.6}, opts);
    REQUIRE(cmp.sweep);
    CHECK(cmp.delta_s_total > 0.0);
    CHECK(cmp.rows.front().e_ad == cmp.rows.front().e_zp);
    for (const auto& r : cmp.rows) CHECK(r.de_zp_measured == doctest::Approx(r.de_zp_predicted).epsilon(1e-8));
}

TEST_CASE("size scaling") {
    CompareOptions exact;
    exact.method = TransportMethod::PhiInversion;
    const auto flat = size_scaling_study([](int n) -> SpectrumFamily { return PowerLaw{1.0, 2.0, 1.0, n}; },
                                         {1, 2, 4}, 1.0, 1.0, 0.5, exact);
    CHECK_FALSE(flat.slope);
    for (const auto& r : flat.rows) CHECK(r.relative_gap < 1e-12);

    const auto tt = size_scaling_study([](int n) -> SpectrumFamily { return TwoTerm{1, 0, 0, 1, 3, 2, n}; },
                                       {2, 4, 8}, 1.0, 0.4, 0.5);
    REQUIRE(tt.slope);
    CHECK(tt.rows[0].relative_gap > tt.rows[1].relative_gap);
    CHECK(tt.rows[1].relative_gap > tt.rows[2].relative_gap);
}
