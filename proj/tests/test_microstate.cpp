#include <doctest.h>

#include <cmath>
#include <vector>

#include "adiabat/errors.hpp"
#include "adiabat/microstate.hpp"

using namespace adiabat;

namespace {

DiscreteSpectrum two_levels(int g1 = 1, int g2 = 1) {
    return DiscreteSpectrum({{0, "lo", AffineForm{0.0, 0.0}, g1}, {1, "hi", AffineForm{1.0, 0.0}, g2}},
                            Sweep{0.0, 1.0});
}

}  // namespace

TEST_CASE("equalizing (0.7, 0.3) gives (0.5, 0.5) and ln 2 - S0") {
    const ProbabilityState s({0, 1}, {1, 1}, {0.7, 0.3});
    const std::vector<int> ids{0, 1};
    const auto [after, ev] = equalize(s, ids, 0.5);
    CHECK(after.w()[0] == doctest::Approx(0.5));
    CHECK(after.w()[1] == doctest::Approx(0.5));
    const double s0 = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    CHECK(s0 == doctest::Approx(0.610864).epsilon(1e-6));
    CHECK(ev.delta_s == doctest::Approx(std::log(2.0) - s0).epsilon(1e-14));
    CHECK(ev.delta_s == doctest::Approx(0.082282).epsilon(1e-5));
    CHECK(entropy(after) - entropy(s) == doctest::Approx(ev.delta_s).epsilon(1e-13));
}

TEST_CASE("degeneracy-weighted pooling") {
    const ProbabilityState s({0, 1}, {1, 3}, {0.4, 0.2});
    const std::vector<int> ids{0, 1};
    const auto [after, ev] = equalize(s, ids, 0.0);
    CHECK(ev.w_after == doctest::Approx(0.25));
    CHECK(after.total_probability() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ev.delta_s >= 0.0);
}

TEST_CASE("entropy production is second order in the probability difference") {
    for (double w : {0.05, 0.2, 0.45}) {
        const double delta = 1e-3;  // (w1 - w2) / w
        const double rest = 1.0 - 2 * w;
        const ProbabilityState s({0, 1, 2}, {1, 1, 1}, {w * (1 + delta / 2), w * (1 - delta / 2), rest});
        const std::vector<int> ids{0, 1};
        const auto ev = equalize(s, ids, 0.0).second;
        CHECK(std::abs(ev.delta_s / (delta * delta) - w / 4) < 0.01 * w / 4);
    }
}

TEST_CASE("pooling never lowers entropy") {
    unsigned state = 12345;
    const auto next = [&] {
        state = state * 1103515245u + 12345u;
        return (state >> 8) / double(1 << 24);
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> w(5);
        double total = 0;
        for (auto& x : w) total += (x = next());
        for (auto& x : w) x /= total;
        const ProbabilityState s({0, 1, 2, 3, 4}, {1, 1, 1, 1, 1}, w);
        const std::vector<int> ids{1, 3, 4};
        const auto [after, ev] = equalize(s, ids, 0.0);
        CHECK(ev.delta_s >= 0.0);
        CHECK(entropy(after) >= entropy(s) - 1e-15);
    }
}

TEST_CASE("canonical and uniform starts") {
    const auto spec = two_levels(1, 2);
    const auto c = canonical_init(spec, 0.5, 1.0);
    const double z = 1 + 2 * std::exp(-1.0);
    CHECK(c.w()[0] == doctest::Approx(1 / z));
    CHECK(c.w()[1] == doctest::Approx(std::exp(-1.0) / z));
    const auto u = uniform_init(spec);
    CHECK(u.w()[0] == doctest::Approx(1.0 / 3));
    const auto m = moments(c, spec, 0.5);
    CHECK(m.mean == doctest::Approx(2 * std::exp(-1.0) / z));
    CHECK_THROWS_AS(canonical_init(spec, 0.5, 0.0), Error);
}

TEST_CASE("state validation") {
    CHECK_THROWS_AS(ProbabilityState({0, 1}, {1, 1}, {0.7, 0.4}), Error);
    CHECK_THROWS_AS(ProbabilityState({0, 1}, {1, 1}, {1.1, -0.1}), Error);
    const ProbabilityState s({0, 1}, {1, 1}, {0.5, 0.5});
    const std::vector<int> one{0}, unknown{0, 7};
    CHECK_THROWS_AS(equalize(s, one, 0.0), Error);
    CHECK_THROWS_AS(equalize(s, unknown, 0.0), Error);
}

TEST_CASE("state csv") {
    const auto spec = two_levels();
    const auto csv = state_csv(uniform_init(spec), spec, 0.0);
    CHECK(csv == "level_id,energy,degeneracy,w\n0,0,1,0.5\n1,1,1,0.5\n");
}
