#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "adiabat/continuum.hpp"
#include "adiabat/errors.hpp"

using namespace adiabat;

namespace {

// G = 1 on [0, 1/a]: the support shrinks while characteristics stand still.
class ShrinkingBox final : public ContinuumDos {
public:
    double log_g(double eps, double a) const override {
        return eps >= 0.0 && eps <= 1.0 / a ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    double g_da(double, double) const override { return 0.0; }
    double phi(double eps, double a) const override { return std::clamp(eps, 0.0, 1.0 / a); }
    Support support(double a) const override { return {0.0, 1.0 / a}; }
};

// G = 1 except for a gap on (1, 2).
class Gapped final : public ContinuumDos {
public:
    double log_g(double eps, double) const override {
        return eps > 1.0 && eps < 2.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    double g_da(double, double) const override { return 0.0; }
    double phi(double eps, double) const override { return eps - std::clamp(eps - 1.0, 0.0, 1.0); }
    Support support(double) const override { return {0.0, 10.0}; }
};

}  // namespace

TEST_CASE("characteristics conserve Phi; ODE and inversion agree") {
    const auto dos = analytic_dos(TwoTerm{1.0, 0.5, 1.0, 0.3, 2.0, 0.0});
    for (double eps0 : {1e-4, 0.3, 2.0, 25.0}) {
        const auto c = trace_characteristic(*dos, eps0, 1.0, 4.0);
        CHECK(std::abs(c.phi_drift) < 1e-8);
        const double inv = characteristic_by_inversion(*dos, eps0, 1.0, 4.0);
        CHECK(c.eps1 == doctest::Approx(inv).epsilon(1e-6));
        CHECK(c.epsilon_at(1.0) == eps0);
        CHECK(c.path.back().first == 4.0);
    }
}

TEST_CASE("power-law characteristics scale as a^(kappa/(eta+1))") {
    const auto dos = analytic_dos(PowerLaw{1.0, 2.0, 1.0});
    const auto c = trace_characteristic(*dos, 1.0, 1.0, 0.25);
    CHECK(c.eps1 == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(c.epsilon_at(0.5) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("canonical start stays canonical under a power law") {
    const auto dos = analytic_dos(PowerLaw{1.5, 1.0, 2.0});
    const auto w0 = canonical_distribution(dos, 1.0, 2.0);
    CHECK(w0.mass() == doctest::Approx(1.0).epsilon(1e-12));
    for (auto method : {TransportMethod::Ode, TransportMethod::PhiInversion}) {
        const auto w1 = advect(w0, 3.0, {}, method);
        const auto fit = canonical_fit(w1);
        const double t1 = 2.0 * std::pow(3.0, 1.0 / 3.0);
        CHECK(fit.max_abs_residual < 1e-6);
        CHECK(-1.0 / fit.slope == doctest::Approx(t1).epsilon(1e-6));
        CHECK(continuum_entropy(w1) == doctest::Approx(continuum_entropy(w0)).epsilon(1e-9));
    }
}

TEST_CASE("two-term transport leaves the canonical family") {
    const auto dos = analytic_dos(TwoTerm{1, 0, 0, 1, 3, 2});
    const auto w1 = advect(canonical_distribution(dos, 1.0, 0.4), 0.25);
    CHECK(canonical_fit(w1).max_abs_residual > 1e-3);
    CHECK(w1.mass() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("advect to the same parameter is the identity") {
    const auto dos = analytic_dos(PowerLaw{1.0, 1.0, 0.0});
    const auto w0 = canonical_distribution(dos, 2.0, 1.0);
    const auto w1 = advect(w0, 2.0);
    CHECK(w1.grid() == w0.grid());
    CHECK(w1.log_w() == w0.log_w());
}

TEST_CASE("feet outside the initial grid are reported") {
    const auto dos = analytic_dos(PowerLaw{1.0, 1.0, 0.0});
    const auto w0 = canonical_distribution(dos, 1.0, 1.0);
    auto grid = numerics::geometric_grid(1e-3, 1e3, 64);
    try {
        advect_onto(w0, 2.0, grid);
        FAIL("expected an extrapolation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Extrapolation);
    }
}

TEST_CASE("a characteristic overtaken by the support edge exits the domain") {
    ShrinkingBox box;
    try {
        trace_characteristic(box, 0.5, 1.0, 4.0);
        FAIL("expected a domain exit");
    } catch (const DomainExitError& e) {
        CHECK(e.a_exit() >= 1.9);
        CHECK(e.a_exit() <= 2.1);
    }
}

TEST_CASE("velocity inside a spectral gap is singular") {
    Gapped dos;
    CHECK(wave_velocity(dos, 0.5, 1.0) == 0.0);
    try {
        wave_velocity(dos, 1.5, 1.0);
        FAIL("expected a singular velocity");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularVelocity);
    }
}

TEST_CASE("generic bounded densities normalize by quadrature") {
    const auto s = discrete_spectrum(OscillatorLadder{12, 2}, Sweep{1.0, 2.0});
    const auto dos = dos_of_discrete(s, 1.0, 0.0);
    const auto w = canonical_distribution(dos, 1.0, 3.0);
    CHECK(w.mass() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(canonical_distribution(dos, 1.0, -1.0), Error);
}

TEST_CASE("uniform start and csv") {
    const auto dos = analytic_dos(PowerLaw{2.0, 0.0, 1.0});
    const auto w = uniform_distribution(dos, 1.0, 3.0);
    CHECK(std::exp(w.log_w()[0]) == doctest::Approx(1.0 / 9.0));
    CHECK(w.grid().front() < 3.0 * 1e-6);
    const auto text = distribution_csv(w);
    CHECK(text.rfind("epsilon,G,w\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(w.size()) + 1);
}
