#pragma once

// Level crossings along a sweep and the discrete adiabatic process: per-level
// probabilities ride along their tracks and are pooled wherever tracks meet.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adiabat/continuum.hpp"
#include "adiabat/microstate.hpp"
#include "adiabat/spectra.hpp"

namespace adiabat {

struct Crossing {
    double a_star = 0.0;
    std::vector<int> level_ids;  // ascending
    /// True when several pairwise crossings were grouped into this event.
    bool merged = false;
};

/// Events ordered along the sweep direction (ties by smallest level id).
struct CrossingSchedule {
    Sweep sweep;
    std::vector<Crossing> events;
    double detection_tol = 1e-9;

    std::size_t merged_count() const;
};

struct ScanOptions {
    std::size_t initial_samples = 4096;
    std::size_t max_samples = std::size_t{1} << 20;
};

/// Pairwise crossings, grouped. Closed form for affine/reciprocal track pairs,
/// sign-change scan plus bisection otherwise. Resolution error if the scan
/// count does not settle within max_samples.
CrossingSchedule find_crossings(const DiscreteSpectrum& spectrum, double detection_tol = 1e-9,
                                const ScanOptions& scan = {});

namespace reference {

/// Serial pair loop; same per-pair arithmetic as the OpenMP kernel.
CrossingSchedule find_crossings(const DiscreteSpectrum& spectrum, double detection_tol = 1e-9,
                                const ScanOptions& scan = {});

}  // namespace reference

struct TrajectorySample {
    double a = 0.0;
    double entropy = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

struct SweepResult {
    ProbabilityState final_state;
    std::vector<EqualizationEvent> ledger;
    double total_delta_s = 0.0;
    std::vector<TrajectorySample> trajectory;
};

/// Evolves `initial` through the schedule. Checkpoints are sampled just after
/// any event at the same a. Domain error if the schedule is not ordered along
/// the sweep or a checkpoint lies outside it.
SweepResult sweep_adiabatic(const DiscreteSpectrum& spectrum, const ProbabilityState& initial,
                            const CrossingSchedule& schedule, const std::vector<double>& checkpoints = {});

/// The same probabilities re-indexed to the track order of `spectrum` (for
/// instance after reversing the sweep). Domain error if the ids differ.
ProbabilityState align_state(const ProbabilityState& state, const DiscreteSpectrum& spectrum);

/// sum_j g_j |w_j - v_j| over matching ids.
double l1_distance(const ProbabilityState& x, const ProbabilityState& y);

std::string ledger_csv(const std::vector<EqualizationEvent>& ledger);
std::string trajectory_csv(const std::vector<TrajectorySample>& trajectory);

/// Final discrete state smoothed onto `grid` as an energy density
/// sum_j g_j w_j K_h(eps - eps_j).
std::vector<double> smoothed_state_density(const ProbabilityState& state, const DiscreteSpectrum& spectrum, double a,
                                           double bandwidth, const std::vector<double>& grid);

struct RefineRow {
    int levels = 0;
    double spacing = 0.0;
    double total_delta_s = 0.0;
    std::size_t crossings = 0;
    /// L1 distance of the smoothed discrete density to the continuum density
    /// (NaN when the family has no continuum form).
    double distance_to_continuum = 0.0;
};

struct RefineOptions {
    double temperature = 1.0;
    Sweep sweep;
    double detection_tol = 1e-9;
    SolverOptions numerics;
    /// Nodes of the shared uniform comparison grid.
    std::size_t comparison_nodes = 4001;
};

/// Canonical start at each level count, sweep, and comparison against the
/// continuum transport of the same canonical start.
std::vector<RefineRow> refine_study(const std::function<SpectrumFamily(int)>& generator,
                                    const std::vector<int>& levels, const RefineOptions& options);

std::string refine_csv(const std::vector<RefineRow>& rows);

}  // namespace adiabat
