#pragma once

// Small numerical helpers shared by the solver modules.

#include <cstddef>
#include <span>
#include <vector>

namespace adiabat::numerics {

/// log(sum(exp(x))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> x);

/// Composite Simpson rule for samples on a strictly increasing, possibly
/// irregular abscissa. Handles an even sample count with a closing
/// three-point panel. Needs at least two samples (falls back to trapezoid).
double simpson(std::span<const double> x, std::span<const double> f);

/// Integral of f over eps for a grid of positive energies, evaluated as
/// Simpson in u = ln eps. On a geometric grid this is uniform Simpson, which
/// is spectrally accurate for integrands decaying at both ends.
double integrate_on_grid(std::span<const double> eps, std::span<const double> f);

/// Trapezoid rule, used for non-smooth integrands (kernel sums, |p - q|).
double trapezoid(std::span<const double> x, std::span<const double> f);

std::vector<double> geometric_grid(double lo, double hi, std::size_t nodes);
std::vector<double> uniform_grid(double lo, double hi, std::size_t nodes);

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Reproduces linear data exactly and never overshoots the data range.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    double operator()(double t) const;
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    std::vector<double> x_, y_, slope_;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_abs_residual = 0.0;
};

/// Ordinary least-squares line through (x, y).
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of ln y against ln x. Requires positive data.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace adiabat::numerics
