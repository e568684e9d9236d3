#pragma once

// Quasicontinuous-spectrum transport. The per-pure-state probability w(eps, a)
// obeys dw/da = u dw/deps with u(eps, a) = (1/G) int_0^eps dG/da deps', so w is
// constant along characteristics d eps/da = -u, which are exactly the curves of
// constant cumulative count Phi(eps, a). Solved semi-Lagrangian: every target
// node is traced back to its foot at the initial parameter.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "adiabat/microstate.hpp"
#include "adiabat/numerics.hpp"
#include "adiabat/spectra.hpp"

namespace adiabat {

struct SolverOptions {
    double ode_rel_tol = 1e-12;
    double ode_abs_tol = 1e-13;
    std::size_t grid_nodes = 2048;
    /// Canonical probability allowed beyond each end of the grid.
    double tail_tol = 1e-13;
};

/// w(eps) sampled on a grid of energies, paired with its DOS at parameter a.
/// Stored as ln w (w = 0 as -inf) so that many-copy systems stay in range.
/// Construction checks w >= 0, a strictly increasing grid and
/// int G w deps = 1 within relative 1e-8.
class ContinuumDistribution {
public:
    static constexpr double kNormTolerance = 1e-8;

    ContinuumDistribution(std::vector<double> grid, std::vector<double> log_w,
                          std::shared_ptr<const ContinuumDos> dos, double a);

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& log_w() const { return log_w_; }
    std::vector<double> w() const;
    const std::shared_ptr<const ContinuumDos>& dos() const { return dos_; }
    double a() const { return a_; }
    std::size_t size() const { return grid_.size(); }

    /// int G w deps by quadrature on the grid.
    double mass() const;
    /// ln w between nodes (monotone cubic on ln w; -inf outside the grid).
    double log_w_at(double eps) const;
    /// Energy density G(eps, a) w(eps).
    double density_at(double eps) const;

private:
    std::vector<double> grid_;
    std::vector<double> log_w_;
    std::shared_ptr<const ContinuumDos> dos_;
    double a_;
    std::shared_ptr<const numerics::MonotoneCubic> interp_;
};

/// Canonical w = exp(-eps/T)/Z on a geometric grid whose ends cut off less than
/// tail_tol of probability each.
ContinuumDistribution canonical_distribution(std::shared_ptr<const ContinuumDos> dos, double a, double temperature,
                                             const SolverOptions& options = {});

/// w = 1/Phi(e_max) on (0, e_max].
ContinuumDistribution uniform_distribution(std::shared_ptr<const ContinuumDos> dos, double a, double e_max,
                                           const SolverOptions& options = {});

/// u(eps, a): closed form when the DOS provides one, adaptive quadrature otherwise.
double wave_velocity(const ContinuumDos& dos, double eps, double a);
/// u(eps, a) always by tanh-sinh quadrature of dG/da.
double wave_velocity_quadrature(const ContinuumDos& dos, double eps, double a);

struct Characteristic {
    double a0 = 0.0;
    double eps0 = 0.0;
    double a1 = 0.0;
    double eps1 = 0.0;
    /// Accepted integrator steps (a, eps), from (a0, eps0) to (a1, eps1).
    std::vector<std::pair<double, double>> path;
    /// Phi(eps1, a1)/Phi(eps0, a0) - 1.
    double phi_drift = 0.0;

    /// eps along the path, interpolated linearly in ln eps between steps.
    double epsilon_at(double a) const;
};

/// Integrates d eps/da = -u(eps, a) from (a0, eps0) to a1 with an adaptive
/// Dormand-Prince 5(4) pair (in ln eps).
Characteristic trace_characteristic(const ContinuumDos& dos, double eps0, double a0, double a1,
                                    const SolverOptions& options = {});

/// Solves ln Phi(eps, a) = log_phi for eps: closed form when available, else
/// safeguarded Newton in ln eps starting from `guess`.
double invert_log_phi(const ContinuumDos& dos, double log_phi, double a, double guess);

/// End point of the characteristic through (eps0, a0) at a1 by Phi-inversion.
double characteristic_by_inversion(const ContinuumDos& dos, double eps0, double a0, double a1);

enum class TransportMethod { Ode, PhiInversion };

/// Transports `initial` to a1. The target grid is geometric between the images
/// of the initial grid ends, with the same node count.
ContinuumDistribution advect(const ContinuumDistribution& initial, double a1, const SolverOptions& options = {},
                             TransportMethod method = TransportMethod::Ode);

/// Transports `initial` to a1 onto a caller-supplied grid. Extrapolation error
/// if a characteristic foot falls outside the initial grid.
ContinuumDistribution advect_onto(const ContinuumDistribution& initial, double a1, std::vector<double> grid,
                                  const SolverOptions& options = {}, TransportMethod method = TransportMethod::Ode);

namespace reference {

/// Serial node loop; same per-node arithmetic as the OpenMP kernel.
ContinuumDistribution advect_onto(const ContinuumDistribution& initial, double a1, std::vector<double> grid,
                                  const SolverOptions& options = {}, TransportMethod method = TransportMethod::Ode);

}  // namespace reference

/// S = -int G w ln w deps.
double continuum_entropy(const ContinuumDistribution& dist);

EnergyMoments continuum_moments(const ContinuumDistribution& dist);

/// Least-squares line of ln w against eps over nodes with w > 0. A canonical
/// distribution has residual ~0 and slope -1/T.
numerics::LineFit canonical_fit(const ContinuumDistribution& dist);

/// CSV rows (epsilon, G, w).
std::string distribution_csv(const ContinuumDistribution& dist);

}  // namespace adiabat
