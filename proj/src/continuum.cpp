#include "adiabat/continuum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>

#include "adiabat/csv.hpp"
#include "adiabat/errors.hpp"

namespace adiabat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFootSlack = 1e-8;

std::vector<double> log_dos_on(const ContinuumDos& dos, std::span<const double> grid, double a) {
    std::vector<double> lg(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) lg[i] = dos.log_g(grid[i], a);
    return lg;
}

// G w at each node, 0 where either factor vanishes.
std::vector<double> energy_density(std::span<const double> log_g, std::span<const double> log_w) {
    std::vector<double> f(log_g.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double s = log_g[i] + log_w[i];
        f[i] = (log_g[i] == -kInf || log_w[i] == -kInf) ? 0.0 : std::exp(s);
    }
    return f;
}

void check_in_support(const ContinuumDos& dos, double eps, double a) {
    const Support s = dos.support(a);
    if (eps < s.lo || eps > s.hi)
        throw Error(ErrorKind::Domain, "energy " + csv::format_number(eps) + " outside the DOS support");
}

// One characteristic in ln eps. Optional path collection.
double integrate_characteristic(const ContinuumDos& dos, double eps0, double a0, double a1,
                                const SolverOptions& options, std::vector<std::pair<double, double>>* path) {
    if (path) path->emplace_back(a0, eps0);
    if (a0 == a1 || eps0 == 0.0) {
        if (path && a0 != a1) path->emplace_back(a1, eps0);
        return eps0;
    }
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 1>;
    using Stepper = odeint::runge_kutta_dopri5<State>;
    auto stepper = odeint::make_controlled(options.ode_abs_tol, options.ode_rel_tol, Stepper());

    const auto rhs = [&dos](const State& y, State& dydt, double a) {
        const double eps = std::exp(y[0]);
        const Support s = dos.support(a);
        if (eps > s.hi)
            throw DomainExitError(a, "characteristic left the DOS support at a = " + csv::format_number(a));
        dydt[0] = -wave_velocity(dos, eps, a) / eps;
    };
    State y{std::log(eps0)};
    const double dt = (a1 - a0) / 64.0;
    if (path) {
        odeint::integrate_adaptive(stepper, rhs, y, a0, a1, dt, [path](const State& s, double a) {
            if (!path->empty() && path->back().first == a) return;
            path->emplace_back(a, std::exp(s[0]));
        });
    } else {
        odeint::integrate_adaptive(stepper, rhs, y, a0, a1, dt);
    }
    return std::exp(y[0]);
}

double foot_of(const ContinuumDos& dos, double eps, double a_from, double a_to, const SolverOptions& options,
               TransportMethod method) {
    return method == TransportMethod::Ode ? integrate_characteristic(dos, eps, a_from, a_to, options, nullptr)
                                          : characteristic_by_inversion(dos, eps, a_from, a_to);
}

// Per-node transport kernel shared by the parallel and serial drivers.
double transported_log_w(const ContinuumDistribution& initial, double eps, double a1, const SolverOptions& options,
                         TransportMethod method) {
    const auto& g0 = initial.grid();
    double foot = foot_of(*initial.dos(), eps, a1, initial.a(), options, method);
    const double lo = g0.front(), hi = g0.back();
    if (foot < lo) {
        if (foot < lo * (1.0 - kFootSlack))
            throw Error(ErrorKind::Extrapolation, "characteristic foot " + csv::format_number(foot) +
                                                      " below the initial grid; widen the grid");
        foot = lo;
    } else if (foot > hi) {
        if (foot > hi * (1.0 + kFootSlack))
            throw Error(ErrorKind::Extrapolation, "characteristic foot " + csv::format_number(foot) +
                                                      " above the initial grid; widen the grid");
        foot = hi;
    }
    return initial.log_w_at(foot);
}

void check_target(const ContinuumDistribution& initial, std::span<const double> grid) {
    if (grid.size() < 3) throw Error(ErrorKind::Domain, "advect: target grid needs >= 3 nodes");
    (void)initial;
}

}  // namespace

// ---------------------------------------------------------------------------

ContinuumDistribution::ContinuumDistribution(std::vector<double> grid, std::vector<double> log_w,
                                             std::shared_ptr<const ContinuumDos> dos, double a)
    : grid_(std::move(grid)), log_w_(std::move(log_w)), dos_(std::move(dos)), a_(a) {
    if (!dos_) throw Error(ErrorKind::Domain, "distribution needs a DOS");
    if (grid_.size() < 3 || grid_.size() != log_w_.size())
        throw Error(ErrorKind::Domain, "distribution needs >= 3 nodes and one w per node");
    if (grid_.front() < 0.0) throw Error(ErrorKind::Domain, "distribution grid must be >= 0");
    bool all_finite = true;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (i > 0 && !(grid_[i] > grid_[i - 1]))
            throw Error(ErrorKind::Domain, "distribution grid must increase strictly");
        if (std::isnan(log_w_[i]) || log_w_[i] == kInf) throw Error(ErrorKind::Domain, "w must be finite and >= 0");
        all_finite = all_finite && log_w_[i] != -kInf;
    }
    const double m = mass();
    if (!(std::abs(m - 1.0) <= kNormTolerance))
        throw Error(ErrorKind::Domain, "distribution normalization int G w = " + csv::format_number(m) + " is not 1");
    if (all_finite) interp_ = std::make_shared<numerics::MonotoneCubic>(grid_, log_w_);
}

std::vector<double> ContinuumDistribution::w() const {
    std::vector<double> out(log_w_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(log_w_[i]);
    return out;
}

double ContinuumDistribution::mass() const {
    const auto f = energy_density(log_dos_on(*dos_, grid_, a_), log_w_);
    return numerics::integrate_on_grid(grid_, f);
}

double ContinuumDistribution::log_w_at(double eps) const {
    if (eps < grid_.front() || eps > grid_.back()) return -kInf;
    if (interp_) return (*interp_)(eps);
    // Some nodes carry w = 0: interpolate w linearly on that grid instead.
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), eps);
    if (it == grid_.end()) return log_w_.back();
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
    const double s = (eps - grid_[i]) / (grid_[i + 1] - grid_[i]);
    const double w = (1.0 - s) * std::exp(log_w_[i]) + s * std::exp(log_w_[i + 1]);
    return w > 0.0 ? std::log(w) : -kInf;
}

double ContinuumDistribution::density_at(double eps) const {
    const double lw = log_w_at(eps);
    if (lw == -kInf) return 0.0;
    const double lg = dos_->log_g(eps, a_);
    return lg == -kInf ? 0.0 : std::exp(lg + lw);
}

// ---------------------------------------------------------------------------

ContinuumDistribution canonical_distribution(std::shared_ptr<const ContinuumDos> dos, double a, double temperature,
                                             const SolverOptions& options) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw Error(ErrorKind::DegenerateTemperature, "canonical distribution needs 0 < T < inf");
    double lo = 0.0, hi = 0.0;
    if (const auto q = dos->canonical_quantiles(a, temperature, options.tail_tol)) {
        lo = q->first;
        hi = q->second;
    } else {
        const Support s = dos->support(a);
        if (s.unbounded()) throw Error(ErrorKind::UnsupportedFamily, "unbounded DOS without canonical quantiles");
        hi = s.hi;
        lo = hi * 1e-12;
    }
    auto grid = numerics::geometric_grid(lo, hi, options.grid_nodes);
    const auto lg = log_dos_on(*dos, grid, a);

    double log_z = 0.0;
    if (const auto c = dos->canonical(a, temperature)) {
        log_z = c->log_z;
    } else {
        std::vector<double> l(grid.size());
        double m = -kInf;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            l[i] = lg[i] - grid[i] / temperature;
            m = std::max(m, l[i]);
        }
        std::vector<double> f(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) f[i] = l[i] == -kInf ? 0.0 : std::exp(l[i] - m);
        log_z = m + std::log(numerics::integrate_on_grid(grid, f));
    }
    std::vector<double> log_w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) log_w[i] = -grid[i] / temperature - log_z;
    return ContinuumDistribution(std::move(grid), std::move(log_w), std::move(dos), a);
}

ContinuumDistribution uniform_distribution(std::shared_ptr<const ContinuumDos> dos, double a, double e_max,
                                           const SolverOptions& options) {
    if (!(e_max > 0.0)) throw Error(ErrorKind::Domain, "uniform distribution needs e_max > 0");
    check_in_support(*dos, e_max, a);
    const double lw = -dos->log_phi(e_max, a);
    // Lower end where the states below carry tail_tol of the probability.
    double lo = e_max * 1e-12;
    try {
        lo = std::clamp(invert_log_phi(*dos, std::log(options.tail_tol) - lw, a, e_max * 1e-3), lo, 0.5 * e_max);
    } catch (const Error&) {
    }
    auto grid = numerics::geometric_grid(lo, e_max, options.grid_nodes);
    std::vector<double> log_w(grid.size(), lw);
    return ContinuumDistribution(std::move(grid), std::move(log_w), std::move(dos), a);
}

// ---------------------------------------------------------------------------

double wave_velocity_quadrature(const ContinuumDos& dos, double eps, double a) {
    check_in_support(dos, eps, a);
    const double lg = dos.log_g(eps, a);
    if (lg == -kInf) throw Error(ErrorKind::SingularVelocity, "G(eps, a) = 0 at eps = " + csv::format_number(eps));
    if (eps == 0.0) return 0.0;
    // tanh-sinh copes with the eps^eta endpoint behaviour at 0.
    boost::math::quadrature::tanh_sinh<double> quad;
    const double numerator = quad.integrate([&dos, a](double e) { return dos.g_da(e, a); }, 0.0, eps, 1e-12);
    return numerator / std::exp(lg);
}

double wave_velocity(const ContinuumDos& dos, double eps, double a) {
    if (const auto u = dos.velocity(eps, a)) {
        if (eps > 0.0 && dos.log_g(eps, a) == -kInf)
            throw Error(ErrorKind::SingularVelocity, "G(eps, a) = 0 at eps = " + csv::format_number(eps));
        return *u;
    }
    return wave_velocity_quadrature(dos, eps, a);
}

double Characteristic::epsilon_at(double a) const {
    if (path.empty()) return eps0;
    const bool forward = a1 >= a0;
    const auto before = [forward](double x, double y) { return forward ? x < y : x > y; };
    if (!before(path.front().first, a)) return path.front().second;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (!before(path[i].first, a)) {
            const auto& [xa, ea] = path[i - 1];
            const auto& [xb, eb] = path[i];
            const double s = (a - xa) / (xb - xa);
            return std::exp((1.0 - s) * std::log(ea) + s * std::log(eb));
        }
    }
    return path.back().second;
}

Characteristic trace_characteristic(const ContinuumDos& dos, double eps0, double a0, double a1,
                                    const SolverOptions& options) {
    if (!(eps0 >= 0.0)) throw Error(ErrorKind::Domain, "characteristic start energy must be >= 0");
    check_in_support(dos, eps0, a0);
    Characteristic c;
    c.a0 = a0;
    c.eps0 = eps0;
    c.a1 = a1;
    c.eps1 = integrate_characteristic(dos, eps0, a0, a1, options, &c.path);
    c.path.back() = {a1, c.eps1};
    if (eps0 > 0.0) c.phi_drift = std::expm1(dos.log_phi(c.eps1, a1) - dos.log_phi(eps0, a0));
    return c;
}

double invert_log_phi(const ContinuumDos& dos, double log_phi, double a, double guess) {
    if (log_phi == -kInf) return 0.0;
    if (const auto e = dos.inverse_log_phi(log_phi, a)) return *e;

    const Support s = dos.support(a);
    const double y_cap = s.unbounded() ? kInf : std::log(s.hi);
    const auto f = [&](double y) { return dos.log_phi(std::exp(y), a) - log_phi; };

    double y = std::log(guess > 0.0 ? std::min(guess, s.hi) : 1.0);
    double lo = y, hi = y;
    double flo = f(lo), fhi = flo;
    double step = 1.0;
    for (int k = 0; flo > 0.0; ++k) {
        if (k > 200) throw Error(ErrorKind::Range, "Phi inversion: no lower bracket");
        hi = lo;
        fhi = flo;
        lo -= step;
        step *= 2.0;
        flo = f(lo);
    }
    step = 1.0;
    for (int k = 0; fhi < 0.0; ++k) {
        if (k > 200) throw Error(ErrorKind::Range, "Phi inversion: no upper bracket");
        if (hi >= y_cap) throw DomainExitError(a, "Phi value beyond the DOS support");
        lo = hi;
        flo = fhi;
        hi = std::min(hi + step, y_cap);
        step *= 2.0;
        fhi = f(hi);
    }
    if (flo == 0.0) return std::exp(lo);
    if (fhi == 0.0) return std::exp(hi);

    y = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fy = f(y);
        if (fy == 0.0) break;
        if (fy < 0.0) lo = y;
        else hi = y;
        const double eps = std::exp(y);
        const double slope = std::exp(y + dos.log_g(eps, a) - dos.log_phi(eps, a));
        double next = y - fy / slope;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        const double dy = std::abs(next - y);
        y = next;
        if (dy <= 4e-16 * std::max(1.0, std::abs(y)) || hi - lo <= 4e-16 * std::max(1.0, std::abs(y))) break;
    }
    return std::exp(y);
}

double characteristic_by_inversion(const ContinuumDos& dos, double eps0, double a0, double a1) {
    if (eps0 == 0.0 || a0 == a1) return eps0;
    check_in_support(dos, eps0, a0);
    return invert_log_phi(dos, dos.log_phi(eps0, a0), a1, eps0);
}

// ---------------------------------------------------------------------------

ContinuumDistribution advect_onto(const ContinuumDistribution& initial, double a1, std::vector<double> grid,
                                  const SolverOptions& options, TransportMethod method) {
    check_target(initial, grid);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(grid.size());
    std::vector<double> log_w(grid.size());
    std::exception_ptr error;
    std::ptrdiff_t error_index = n;

#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            log_w[i] = transported_log_w(initial, grid[i], a1, options, method);
        } catch (...) {
#pragma omp critical(adiabat_advect_error)
            {
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    }
    if (error) std::rethrow_exception(error);
    return ContinuumDistribution(std::move(grid), std::move(log_w), initial.dos(), a1);
}

namespace reference {

ContinuumDistribution advect_onto(const ContinuumDistribution& initial, double a1, std::vector<double> grid,
                                  const SolverOptions& options, TransportMethod method) {
    check_target(initial, grid);
    std::vector<double> log_w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) log_w[i] = transported_log_w(initial, grid[i], a1, options, method);
    return ContinuumDistribution(std::move(grid), std::move(log_w), initial.dos(), a1);
}

}  // namespace reference

ContinuumDistribution advect(const ContinuumDistribution& initial, double a1, const SolverOptions& options,
                             TransportMethod method) {
    if (a1 == initial.a()) return initial;
    const auto& g0 = initial.grid();
    const auto& dos = *initial.dos();
    const double lo = foot_of(dos, g0.front(), initial.a(), a1, options, method);
    const double hi = foot_of(dos, g0.back(), initial.a(), a1, options, method);
    auto grid = g0.front() > 0.0 ? numerics::geometric_grid(lo, hi, g0.size())
                                 : numerics::uniform_grid(lo, hi, g0.size());
    return advect_onto(initial, a1, std::move(grid), options, method);
}

// ---------------------------------------------------------------------------

double continuum_entropy(const ContinuumDistribution& dist) {
    const auto lg = log_dos_on(*dist.dos(), dist.grid(), dist.a());
    auto f = energy_density(lg, dist.log_w());
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != 0.0) f[i] *= -dist.log_w()[i];
    return numerics::integrate_on_grid(dist.grid(), f);
}

EnergyMoments continuum_moments(const ContinuumDistribution& dist) {
    const auto& grid = dist.grid();
    const auto density = energy_density(log_dos_on(*dist.dos(), grid, dist.a()), dist.log_w());
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = density[i] * grid[i];
    EnergyMoments m;
    m.mean = numerics::integrate_on_grid(grid, f);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = density[i] * (grid[i] - m.mean) * (grid[i] - m.mean);
    m.variance = numerics::integrate_on_grid(grid, f);
    return m;
}

numerics::LineFit canonical_fit(const ContinuumDistribution& dist) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist.log_w()[i] == -kInf) continue;
        x.push_back(dist.grid()[i]);
        y.push_back(dist.log_w()[i]);
    }
    return numerics::fit_line(x, y);
}

std::string distribution_csv(const ContinuumDistribution& dist) {
    csv::Table table({"epsilon", "G", "w"});
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double eps = dist.grid()[i];
        table.cell(eps).cell(dist.dos()->g(eps, dist.a())).cell(std::exp(dist.log_w()[i]));
        table.end_row();
    }
    return table.str();
}

}  // namespace adiabat
