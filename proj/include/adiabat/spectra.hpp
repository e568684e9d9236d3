#pragma once

// Parametrized spectra: discrete level tracks eps_j(a) with degeneracies, and
// continuum densities of states G(eps, a) with their cumulative counts.
// Units: k_B = 1; energy, temperature and the parameter a are dimensionless.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace adiabat {

// ---------------------------------------------------------------------------
// Discrete tracks

/// eps(a) = intercept + slope * a
struct AffineForm {
    double intercept = 0.0;
    double slope = 0.0;
};

/// eps(a) = coef / a
struct ReciprocalForm {
    double coef = 0.0;
};

/// Arbitrary continuous track; crossings against it are found by scanning.
struct GeneralForm {
    std::function<double(double)> energy;
};

using TrackForm = std::variant<AffineForm, ReciprocalForm, GeneralForm>;

struct LevelTrack {
    int id = 0;
    std::string label;
    TrackForm form;
    int degeneracy = 1;

    double energy(double a) const;
    /// d eps / d a; exact for closed forms, central difference otherwise.
    double slope(double a) const;
};

/// Directed sweep a_start -> a_end (a_start > a_end for a return leg).
struct Sweep {
    double a_start = 0.0;
    double a_end = 1.0;

    double lo() const { return a_start < a_end ? a_start : a_end; }
    double hi() const { return a_start < a_end ? a_end : a_start; }
    double direction() const { return a_end >= a_start ? 1.0 : -1.0; }
    bool contains(double a) const;
    Sweep reversed() const { return {a_end, a_start}; }
};

struct LevelValue {
    int id = 0;
    double energy = 0.0;
    int degeneracy = 1;
};

/// Ordered set of tracks over a sweep. Construction validates ids, degeneracies
/// and non-negativity of every energy on the sweep, and orders tracks by energy
/// at a_start (ties by id).
class DiscreteSpectrum {
public:
    DiscreteSpectrum(std::vector<LevelTrack> tracks, Sweep sweep);

    const std::vector<LevelTrack>& tracks() const { return tracks_; }
    const Sweep& sweep() const { return sweep_; }
    std::size_t size() const { return tracks_.size(); }

    /// Index of a track id in tracks(), or -1.
    int index_of(int id) const;

    /// Same tracks swept in the opposite direction.
    DiscreteSpectrum reversed() const;

    std::vector<int> degeneracies() const;
    std::vector<int> ids() const;
    std::vector<double> energies(double a) const;
    long long total_states() const;

private:
    std::vector<LevelTrack> tracks_;
    Sweep sweep_;
    std::unordered_map<int, int> index_by_id_;
};

/// eval_levels: one entry per track, in spectrum order. Domain error if a is
/// outside the sweep interval.
std::vector<LevelValue> eval_levels(const DiscreteSpectrum& spectrum, double a);

// ---------------------------------------------------------------------------
// Continuum densities of states

struct Support {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    bool unbounded() const { return hi == std::numeric_limits<double>::infinity(); }
};

/// Closed-form canonical ensemble summary (ln Z, mean, variance).
struct CanonicalSummary {
    double log_z = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Density of pure states per unit energy, G(eps, a), with its a-derivative and
/// cumulative count Phi(eps, a) = int_0^eps G. Implementations are immutable.
class ContinuumDos {
public:
    virtual ~ContinuumDos() = default;

    /// ln G; -inf where G = 0.
    virtual double log_g(double eps, double a) const = 0;
    virtual double g_da(double eps, double a) const = 0;
    virtual double phi(double eps, double a) const = 0;
    virtual Support support(double a) const = 0;

    double g(double eps, double a) const;
    virtual double log_phi(double eps, double a) const;

    /// int_0^eps dG/da(eps', a) deps', when known in closed form.
    virtual std::optional<double> cumulative_g_da(double eps, double a) const;
    /// Transport velocity u(eps, a), when known in closed form.
    virtual std::optional<double> velocity(double eps, double a) const;
    /// Solve ln Phi(eps, a) = log_value for eps in closed form, when possible.
    virtual std::optional<double> inverse_log_phi(double log_value, double a) const;
    /// Canonical ln Z, mean and variance, when known in closed form.
    virtual std::optional<CanonicalSummary> canonical(double a, double temperature) const;
    /// Energies below/above which the canonical distribution at (a, T) carries
    /// less than tail mass `tol`, when known.
    virtual std::optional<std::pair<double, double>> canonical_quantiles(double a, double temperature,
                                                                         double tol) const;
};

/// One power-law term c * a^(-kappa) * eps^eta, stored with ln c.
struct PowerTerm {
    double log_coef = 0.0;
    double kappa = 0.0;
    double eta = 0.0;
};

/// Sum of power laws. Every quantity is closed form and evaluated in log space
/// so that large exponent sums (many-copy systems) stay in range.
class PowerSumDos final : public ContinuumDos {
public:
    explicit PowerSumDos(std::vector<PowerTerm> terms);

    const std::vector<PowerTerm>& terms() const { return terms_; }

    double log_g(double eps, double a) const override;
    double g_da(double eps, double a) const override;
    double phi(double eps, double a) const override;
    double log_phi(double eps, double a) const override;
    Support support(double a) const override;

    std::optional<double> cumulative_g_da(double eps, double a) const override;
    std::optional<double> velocity(double eps, double a) const override;
    std::optional<double> inverse_log_phi(double log_value, double a) const override;
    std::optional<CanonicalSummary> canonical(double a, double temperature) const override;
    std::optional<std::pair<double, double>> canonical_quantiles(double a, double temperature,
                                                                 double tol) const override;

    /// Density of `copies` independent systems each with this DOS (N-fold
    /// convolution); stays a power sum.
    PowerSumDos convolution_power(int copies) const;

private:
    void check_parameter(double a) const;
    std::vector<PowerTerm> terms_;
};

/// Kernel-smoothed DOS of a discrete spectrum (reflected triangular kernel, so
/// total mass equals the state count for any bandwidth). Diagnostics only.
class SmoothedDiscreteDos final : public ContinuumDos {
public:
    SmoothedDiscreteDos(std::shared_ptr<const DiscreteSpectrum> spectrum, double bandwidth);

    double bandwidth() const { return bandwidth_; }

    double log_g(double eps, double a) const override;
    double g_da(double eps, double a) const override;
    double phi(double eps, double a) const override;
    Support support(double a) const override;

private:
    std::shared_ptr<const DiscreteSpectrum> spectrum_;
    double bandwidth_;
};

/// Reflected triangular kernel density of weighted points: sum_j m_j K_h(eps - e_j)
/// folded at eps = 0. Returns 0 for eps < 0.
double smoothed_density(std::span<const double> energies, std::span<const double> masses, double bandwidth,
                        double eps);

/// Median gap between consecutive distinct energies at a.
double median_spacing(const DiscreteSpectrum& spectrum, double a);

/// dos_of_discrete: smoothed DOS of the spectrum; bandwidth <= 0 selects the
/// default of three median spacings at a.
std::shared_ptr<const ContinuumDos> dos_of_discrete(const DiscreteSpectrum& spectrum, double a,
                                                    double bandwidth);

// ---------------------------------------------------------------------------
// Built-in families

/// G = C a^-kappa eps^eta, for `copies` independent copies.
struct PowerLaw {
    double C = 1.0;
    double kappa = 0.0;
    double eta = 0.0;
    int copies = 1;
};

/// Sum of two power laws, for `copies` independent copies.
struct TwoTerm {
    double C1 = 1.0, kappa1 = 0.0, eta1 = 0.0;
    double C2 = 1.0, kappa2 = 0.0, eta2 = 0.0;
    int copies = 1;
};

/// Ladders eps = n delta_A a (n = 1..M_A) and eps = m delta_B / a (m = 1..M_B).
struct TwoLadder {
    double delta_A = 1.0;
    double delta_B = 1.0;
    int M_A = 1;
    int M_B = 1;
};

/// eps_j(a) = b_j + m_j a.
struct LinearEnsemble {
    std::vector<double> intercepts;
    std::vector<double> slopes;
    std::vector<int> degeneracies;  // empty means all 1
};

/// eps_n(a) = a (n + N/2), n = 0..M-1, degeneracy C(n+N-1, N-1).
struct OscillatorLadder {
    int M = 1;
    int N = 1;
};

using SpectrumFamily = std::variant<PowerLaw, TwoTerm, TwoLadder, LinearEnsemble, OscillatorLadder>;

std::string family_name(const SpectrumFamily& family);
bool has_discrete_form(const SpectrumFamily& family);
bool has_continuum_form(const SpectrumFamily& family);

/// Level tracks of a discrete family over the sweep.
DiscreteSpectrum discrete_spectrum(const SpectrumFamily& family, Sweep sweep);

/// Exact closed-form DOS for PowerLaw, TwoTerm and TwoLadder (coarse ladder
/// densities 1/(delta_A a) + a/delta_B).
std::shared_ptr<const PowerSumDos> analytic_dos(const SpectrumFamily& family);

}  // namespace adiabat
