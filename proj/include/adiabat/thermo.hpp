#pragma once

// Canonical ensemble at (a, T): partition function, heat capacity at constant
// a, the isentropic (zero-polytropic) temperature path, and the comparison of
// the zero-polytropic and adiabatic processes.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adiabat/continuum.hpp"
#include "adiabat/crossing_sweep.hpp"
#include "adiabat/spectra.hpp"

namespace adiabat {

using ThermoSystem = std::variant<std::shared_ptr<const ContinuumDos>, std::shared_ptr<const DiscreteSpectrum>>;

struct CanonicalEnsemble {
    ThermoSystem system;
    double a = 1.0;
    double temperature = 1.0;
};

/// ln Z, <E> and Var(E): closed form, finite sum, or quadrature.
/// Divergence error if the partition integral is not finite.
CanonicalSummary canonical_summary(const CanonicalEnsemble& ens);

double partition_function(const CanonicalEnsemble& ens);
double log_partition_function(const CanonicalEnsemble& ens);

struct HeatCapacity {
    double from_variance = 0.0;    // Var(E) / T^2
    double from_derivative = 0.0;  // d<E>/dT, five-point stencil
};

HeatCapacity heat_capacity(const CanonicalEnsemble& ens);

/// S = ln Z + <E>/T.
double canonical_entropy(const CanonicalEnsemble& ens);

/// Root-search range for T, as multiples of the reference temperature.
struct TemperatureBracket {
    double lo_factor = 1e-6;
    double hi_factor = 1e6;
};

/// T with S(a1, T) = S(a0, T0). Range error if the bracket does not enclose it.
double isentropic_temperature(const ThermoSystem& system, double a0, double t0, double a1,
                              const TemperatureBracket& bracket = {});

struct FluctuationPrediction {
    double temperature = 0.0;  // T(a1)
    double c_initial = 0.0;    // c_a(a0, T0)
    double c_final = 0.0;      // c_a(a1, T(a1))
    double zero_polytropic = 0.0;  // sqrt(c_final) T(a1)
    double adiabatic = 0.0;        // sqrt(c_initial) T(a1)
};

FluctuationPrediction predict_fluctuations(const ThermoSystem& system, double a0, double t0, double a1,
                                           const TemperatureBracket& bracket = {});

enum class Representation { Auto, Continuum, Discrete };

struct CompareOptions {
    SolverOptions numerics;
    TemperatureBracket bracket;
    Representation representation = Representation::Auto;
    double detection_tol = 1e-9;
    TransportMethod method = TransportMethod::Ode;
};

struct ComparisonRow {
    double a = 0.0;
    double temperature = 0.0;
    double e_zp = 0.0;
    double e_ad = 0.0;
    double de_zp_measured = 0.0;
    double de_zp_predicted = 0.0;
    double de_ad_measured = 0.0;
    double de_ad_predicted = 0.0;
    double s_ad = 0.0;
    double s_zp = 0.0;
    double c_a = 0.0;
    /// ln Z of the zero-polytropic ensemble at (a, T); its ln w is -eps/T - ln Z.
    double log_z_zp = 0.0;
};

struct ProcessComparison {
    double a0 = 0.0;
    double t0 = 0.0;
    std::vector<ComparisonRow> rows;
    /// Adiabatic entropy production (0 for continuum transport).
    double delta_s_total = 0.0;
    /// Continuum snapshots per checkpoint (adiabatic side); empty when discrete.
    std::vector<ContinuumDistribution> adiabatic;
    /// Discrete sweep from a0 to the last checkpoint, when discrete.
    std::optional<SweepResult> sweep;
    std::shared_ptr<const DiscreteSpectrum> spectrum;
};

/// Checkpoints must lie on one side of a0 (the process runs a0 -> last checkpoint).
ProcessComparison compare_processes(const SpectrumFamily& family, double a0, double t0,
                                    const std::vector<double>& a_path, const CompareOptions& options = {});

std::string comparison_csv(const ProcessComparison& comparison);

struct ScalingRow {
    int size = 0;
    double e_zp = 0.0;
    double e_ad = 0.0;
    double relative_gap = 0.0;  // |E_ad - E_zp| / E_zp
    double de_ratio = 0.0;      // measured dE_ad / dE_zp
    double de_ad_measured = 0.0;
    double de_ad_predicted = 0.0;
    double de_zp_predicted = 0.0;
};

struct ScalingStudy {
    std::vector<ScalingRow> rows;
    /// Least-squares log-log slope of the gap against N; absent when every gap
    /// is below 1e-12 (canonical-invariant family).
    std::optional<double> slope;
};

ScalingStudy size_scaling_study(const std::function<SpectrumFamily(int)>& generator, const std::vector<int>& sizes,
                                double a0, double t0, double a1, const CompareOptions& options = {});

std::string scaling_csv(const ScalingStudy& study);

}  // namespace adiabat
