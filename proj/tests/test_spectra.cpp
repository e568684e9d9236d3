#include <doctest.h>

#include <cmath>
#include <memory>

#include "adiabat/continuum.hpp"
#include "adiabat/errors.hpp"
#include "adiabat/spectra.hpp"

using namespace adiabat;

TEST_CASE("power law closed forms") {
    const auto dos = analytic_dos(PowerLaw{2.0, 1.5, 0.5});
    const double eps = 1.7, a = 0.9;
    const double g = 2.0 * std::pow(a, -1.5) * std::pow(eps, 0.5);
    CHECK(dos->g(eps, a) == doctest::Approx(g).epsilon(1e-14));
    CHECK(dos->phi(eps, a) == doctest::Approx(g * eps / 1.5).epsilon(1e-14));
    CHECK(*dos->velocity(eps, a) == doctest::Approx(-1.5 * eps / (1.5 * a)).epsilon(1e-14));
    CHECK(wave_velocity_quadrature(*dos, eps, a) == doctest::Approx(-1.5 * eps / (1.5 * a)).epsilon(1e-10));
    CHECK(*dos->inverse_log_phi(dos->log_phi(eps, a), a) == doctest::Approx(eps).epsilon(1e-14));
}

TEST_CASE("two-term cumulative count is the integral of G") {
    const auto dos = analytic_dos(TwoTerm{1.0, 0.0, 0.0, 0.5, 3.0, 2.0});
    const double a = 0.7, h = 1e-5;
    for (double eps : {0.1, 1.0, 4.0}) {
        const double dphi = (dos->phi(eps + h, a) - dos->phi(eps - h, a)) / (2 * h);
        CHECK(dphi == doctest::Approx(dos->g(eps, a)).epsilon(1e-8));
        CHECK(wave_velocity(*dos, eps, a) == doctest::Approx(wave_velocity_quadrature(*dos, eps, a)).epsilon(1e-10));
    }
}

TEST_CASE("convolution power of independent copies") {
    // Two copies of G = 1 give G2 = eps; of G = eps give eps^3 / 6.
    const PowerSumDos flat({{0.0, 0.0, 0.0}});
    const auto two = flat.convolution_power(2);
    CHECK(two.g(3.0, 1.0) == doctest::Approx(3.0).epsilon(1e-14));
    const PowerSumDos linear({{0.0, 0.0, 1.0}});
    CHECK(linear.convolution_power(2).g(2.0, 1.0) == doctest::Approx(8.0 / 6.0).epsilon(1e-14));
    const auto n4 = analytic_dos(TwoTerm{1, 0, 0, 1, 3, 2, 4});
    CHECK(n4->terms().size() == 5);
}

TEST_CASE("canonical tail quantiles bound the cut-off mass") {
    const auto dos = analytic_dos(PowerLaw{1.0, 0.0, 2.0});
    const auto q = dos->canonical_quantiles(1.0, 1.0, 1e-13);
    REQUIRE(q);
    // Gamma(3) tails.
    const double upper = std::exp(-q->second) * (1 + q->second + q->second * q->second / 2);
    CHECK(upper <= 1.01e-13);
    CHECK(q->first * q->first * q->first / 6 <= 1.01e-13);
}

TEST_CASE("two-ladder tracks and coarse density") {
    const auto s = discrete_spectrum(TwoLadder{0.5, 0.25, 3, 2}, Sweep{0.5, 2.0});
    CHECK(s.size() == 5);
    const int a2 = s.index_of(1);
    const int b2 = s.index_of(4);
    CHECK(s.tracks()[a2].label == "A2");
    CHECK(s.tracks()[b2].label == "B2");
    CHECK(s.tracks()[a2].energy(1.5) == doctest::Approx(2 * 0.5 * 1.5));
    CHECK(s.tracks()[b2].energy(1.5) == doctest::Approx(2 * 0.25 / 1.5));
    const auto dos = analytic_dos(TwoLadder{0.5, 0.25, 3, 2});
    CHECK(dos->g(1.0, 2.0) == doctest::Approx(1 / (0.5 * 2.0) + 2.0 / 0.25));
}

TEST_CASE("oscillator ladder degeneracies") {
    const auto s = discrete_spectrum(OscillatorLadder{4, 3}, Sweep{1.0, 2.0});
    CHECK(s.degeneracies() == std::vector<int>{1, 3, 6, 10});
    CHECK(s.tracks()[2].energy(2.0) == doctest::Approx(2.0 * (2 + 1.5)));
}

TEST_CASE("spectrum validation") {
    CHECK_THROWS_AS(discrete_spectrum(LinearEnsemble{{0.0}, {-1.0}, {}}, Sweep{0.0, 1.0}), Error);
    std::vector<LevelTrack> dup{{1, "x", AffineForm{1, 0}, 1}, {1, "y", AffineForm{2, 0}, 1}};
    CHECK_THROWS_AS(DiscreteSpectrum(dup, Sweep{0, 1}), Error);
    std::vector<LevelTrack> zero_g{{1, "x", AffineForm{1, 0}, 0}};
    CHECK_THROWS_AS(DiscreteSpectrum(zero_g, Sweep{0, 1}), Error);
    const auto s = discrete_spectrum(LinearEnsemble{{1.0, 2.0}, {0.0, 0.0}, {}}, Sweep{0.0, 1.0});
    CHECK_THROWS_AS(eval_levels(s, 1.5), Error);
    try {
        analytic_dos(LinearEnsemble{{1.0}, {0.0}, {}});
        FAIL("expected an unsupported-family error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedFamily);
    }
}

TEST_CASE("smoothed discrete density keeps the state count") {
    const auto s = discrete_spectrum(OscillatorLadder{6, 2}, Sweep{1.0, 2.0});
    const auto dos = dos_of_discrete(s, 1.0, 0.0);
    CHECK(dos->phi(dos->support(1.0).hi, 1.0) == doctest::Approx(static_cast<double>(s.total_states())).epsilon(1e-12));
    CHECK(dos->g(-0.1, 1.0) == 0.0);
}
