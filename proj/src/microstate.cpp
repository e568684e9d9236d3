#include "adiabat/microstate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "adiabat/csv.hpp"
#include "adiabat/errors.hpp"

namespace adiabat {

namespace {

// Neumaier-compensated sum of g_j w_j.
double weighted_total(std::span<const int> g, std::span<const double> w) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double x = g[j] * w[j];
        const double t = sum + x;
        comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

// (1+x) ln(1+x) - x >= 0, accurate near x = 0.
double pooling_divergence(double x) {
    if (x <= -1.0) return 1.0;
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return x2 * (0.5 - x / 6.0 + x2 / 12.0 - x2 * x / 20.0);
    }
    return std::max(0.0, (1.0 + x) * std::log1p(x) - x);
}

}  // namespace

ProbabilityState::ProbabilityState(std::vector<int> ids, std::vector<int> degeneracies, std::vector<double> w)
    : ids_(std::move(ids)), g_(std::move(degeneracies)), w_(std::move(w)) {
    if (ids_.size() != w_.size() || g_.size() != w_.size())
        throw Error(ErrorKind::Domain, "probability state: ids, degeneracies and w differ in length");
    for (std::size_t j = 0; j < w_.size(); ++j) {
        if (!(w_[j] >= 0.0) || !std::isfinite(w_[j]))
            throw Error(ErrorKind::Domain, "probability state: w must be finite and >= 0");
        if (g_[j] < 1) throw Error(ErrorKind::Domain, "probability state: degeneracy < 1");
    }
    const double total = weighted_total(g_, w_);
    if (std::abs(total - 1.0) > kNormTolerance)
        throw Error(ErrorKind::Domain,
                    "probability state: sum g_j w_j = " + csv::format_number(total) + " is not 1");
}

ProbabilityState ProbabilityState::for_spectrum(const DiscreteSpectrum& spectrum, std::vector<double> w) {
    return ProbabilityState(spectrum.ids(), spectrum.degeneracies(), std::move(w));
}

int ProbabilityState::index_of(int id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    return it == ids_.end() ? -1 : static_cast<int>(it - ids_.begin());
}

double ProbabilityState::total_probability() const { return weighted_total(g_, w_); }

ProbabilityState canonical_init(const DiscreteSpectrum& spectrum, double a, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw Error(ErrorKind::DegenerateTemperature, "canonical_init needs 0 < T < inf");
    const auto levels = eval_levels(spectrum, a);
    if (levels.empty()) throw Error(ErrorKind::Domain, "canonical_init: empty spectrum");
    double e_min = levels.front().energy;
    for (const auto& l : levels) e_min = std::min(e_min, l.energy);

    // Weights relative to the ground level: the ground weight is 1, so Z >= 1.
    std::vector<double> w(levels.size());
    double z = 0.0;
    for (std::size_t j = 0; j < levels.size(); ++j) {
        w[j] = std::exp(-(levels[j].energy - e_min) / temperature);
        z += levels[j].degeneracy * w[j];
    }
    if (!std::isfinite(z) || !(z > 0.0))
        throw Error(ErrorKind::DegenerateTemperature, "Boltzmann weights do not normalize");
    for (auto& x : w) x /= z;
    return ProbabilityState::for_spectrum(spectrum, std::move(w));
}

ProbabilityState uniform_init(const DiscreteSpectrum& spectrum) {
    const double n = static_cast<double>(spectrum.total_states());
    if (!(n > 0.0)) throw Error(ErrorKind::Domain, "uniform_init: empty spectrum");
    return ProbabilityState::for_spectrum(spectrum, std::vector<double>(spectrum.size(), 1.0 / n));
}

namespace detail {

std::pair<double, double> equalize_in_place(std::span<double> w, std::span<const int> g,
                                            std::span<const int> indices) {
    double states = 0.0, mass = 0.0;
    for (int i : indices) {
        states += g[i];
        mass += g[i] * w[i];
    }
    const double pooled = mass / states;
    double delta_s = 0.0;
    if (pooled > 0.0) {
        for (int i : indices) delta_s += g[i] * pooled * pooling_divergence(w[i] / pooled - 1.0);
    }
    for (int i : indices) w[i] = pooled;
    return {pooled, delta_s};
}

}  // namespace detail

std::pair<ProbabilityState, EqualizationEvent> equalize(const ProbabilityState& state,
                                                        std::span<const int> level_ids, double a_star) {
    std::set<int> unique(level_ids.begin(), level_ids.end());
    if (unique.size() < 2 || unique.size() != level_ids.size())
        throw Error(ErrorKind::Domain, "equalize needs at least two distinct level ids");

    EqualizationEvent event;
    event.a_star = a_star;
    std::vector<int> indices;
    for (int id : unique) {
        const int idx = state.index_of(id);
        if (idx < 0) throw Error(ErrorKind::Domain, "equalize: unknown level id " + std::to_string(id));
        indices.push_back(idx);
        event.level_ids.push_back(id);
        event.w_before.push_back(state.w()[idx]);
    }

    std::vector<double> w = state.w();
    const auto [pooled, delta_s] = detail::equalize_in_place(w, state.degeneracies(), indices);
    event.w_after = pooled;
    event.delta_s = delta_s;
    return {ProbabilityState(state.ids(), state.degeneracies(), std::move(w)), std::move(event)};
}

double entropy(const ProbabilityState& state) {
    double s = 0.0;
    const auto& w = state.w();
    const auto& g = state.degeneracies();
    for (std::size_t j = 0; j < w.size(); ++j)
        if (w[j] > 0.0) s -= g[j] * w[j] * std::log(w[j]);
    return std::max(0.0, s);
}

EnergyMoments moments(const ProbabilityState& state, const DiscreteSpectrum& spectrum, double a) {
    if (state.size() != spectrum.size())
        throw Error(ErrorKind::Domain, "moments: state and spectrum track counts differ");
    const auto& tracks = spectrum.tracks();
    for (std::size_t j = 0; j < tracks.size(); ++j)
        if (tracks[j].id != state.ids()[j]) throw Error(ErrorKind::Domain, "moments: state and spectrum ids differ");

    const auto e = spectrum.energies(a);
    const auto& w = state.w();
    const auto& g = state.degeneracies();
    EnergyMoments m;
    for (std::size_t j = 0; j < w.size(); ++j) m.mean += g[j] * w[j] * e[j];
    for (std::size_t j = 0; j < w.size(); ++j) m.variance += g[j] * w[j] * (e[j] - m.mean) * (e[j] - m.mean);
    return m;
}

std::string state_csv(const ProbabilityState& state, const DiscreteSpectrum& spectrum, double a) {
    const auto e = spectrum.energies(a);
    csv::Table table({"level_id", "energy", "degeneracy", "w"});
    for (std::size_t j = 0; j < state.size(); ++j) {
        table.cell(state.ids()[j]).cell(e[j]).cell(state.degeneracies()[j]).cell(state.w()[j]);
        table.end_row();
    }
    return table.str();
}

}  // namespace adiabat
