#pragma once

// Probability over the pure states of a discrete spectrum, the microcanonical
// equalization rule applied at level crossings, and the Gibbs entropy.

#include <span>
#include <string>
#include <vector>

#include "adiabat/spectra.hpp"

namespace adiabat {

/// Per-pure-state probabilities w_j, one per track and shared by its g_j
/// states. Invariants: w_j >= 0 and sum_j g_j w_j = 1 (absolute 1e-12).
class ProbabilityState {
public:
    static constexpr double kNormTolerance = 1e-12;

    /// Validating constructor; domain error on a violated invariant.
    ProbabilityState(std::vector<int> ids, std::vector<int> degeneracies, std::vector<double> w);

    /// Probabilities for the tracks of `spectrum`, in spectrum order.
    static ProbabilityState for_spectrum(const DiscreteSpectrum& spectrum, std::vector<double> w);

    const std::vector<int>& ids() const { return ids_; }
    const std::vector<int>& degeneracies() const { return g_; }
    const std::vector<double>& w() const { return w_; }
    std::size_t size() const { return w_.size(); }

    int index_of(int id) const;
    double total_probability() const;

private:
    std::vector<int> ids_;
    std::vector<int> g_;
    std::vector<double> w_;
};

struct EqualizationEvent {
    double a_star = 0.0;
    std::vector<int> level_ids;
    std::vector<double> w_before;
    double w_after = 0.0;
    double delta_s = 0.0;
};

/// Canonical w_j = exp(-eps_j/T)/Z, Z = sum_k g_k exp(-eps_k/T).
ProbabilityState canonical_init(const DiscreteSpectrum& spectrum, double a, double temperature);

/// Uniform w = 1 / (total state count).
ProbabilityState uniform_init(const DiscreteSpectrum& spectrum);

/// Pools the listed levels to their degeneracy-weighted mean probability.
std::pair<ProbabilityState, EqualizationEvent> equalize(const ProbabilityState& state,
                                                        std::span<const int> level_ids, double a_star);

/// Gibbs entropy S = -sum_j g_j w_j ln w_j (0 ln 0 = 0).
double entropy(const ProbabilityState& state);

struct EnergyMoments {
    double mean = 0.0;
    double variance = 0.0;
};

EnergyMoments moments(const ProbabilityState& state, const DiscreteSpectrum& spectrum, double a);

namespace detail {

/// In-place equalization of the entries at `indices`; returns (pooled w, delta S).
/// delta S is evaluated as sum_i g_i m [(1+x_i) ln(1+x_i) - x_i], x_i = w_i/m - 1,
/// which is termwise non-negative and free of the cancellation in S_after - S_before.
std::pair<double, double> equalize_in_place(std::span<double> w, std::span<const int> g,
                                            std::span<const int> indices);

}  // namespace detail

/// CSV rows (level_id, energy, degeneracy, w) at parameter a.
std::string state_csv(const ProbabilityState& state, const DiscreteSpectrum& spectrum, double a);

}  // namespace adiabat
