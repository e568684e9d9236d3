#include "adiabat/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "adiabat/errors.hpp"

namespace adiabat::numerics {

double log_sum_exp(std::span<const double> x) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : x) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

double simpson(std::span<const double> x, std::span<const double> f) {
    const std::size_t n = x.size();
    if (n != f.size()) throw Error(ErrorKind::Domain, "simpson: size mismatch");
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * (x[1] - x[0]) * (f[0] + f[1]);

    // Irregular composite Simpson over pairs of intervals.
    const std::size_t intervals = n - 1;
    const std::size_t paired = intervals - intervals % 2;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < paired; i += 2) {
        const double h0 = x[i + 1] - x[i];
        const double h1 = x[i + 2] - x[i + 1];
        const double hs = h0 + h1;
        sum += hs / 6.0 *
               ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
    }
    if (intervals % 2 == 1) {
        // Last interval from the quadratic through the final three samples.
        const double h0 = x[n - 2] - x[n - 3];
        const double h1 = x[n - 1] - x[n - 2];
        const double alpha = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        const double beta = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        const double eta = h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        sum += alpha * f[n - 1] + beta * f[n - 2] - eta * f[n - 3];
    }
    return sum;
}

double integrate_on_grid(std::span<const double> eps, std::span<const double> f) {
    if (eps.size() != f.size()) throw Error(ErrorKind::Domain, "integrate_on_grid: size mismatch");
    if (!eps.empty() && eps.front() <= 0.0) return simpson(eps, f);
    std::vector<double> u(eps.size()), g(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        u[i] = std::log(eps[i]);
        g[i] = f[i] * eps[i];
    }
    return simpson(u, g);
}

double trapezoid(std::span<const double> x, std::span<const double> f) {
    if (x.size() != f.size()) throw Error(ErrorKind::Domain, "trapezoid: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
    return sum;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t nodes) {
    if (!(lo > 0.0) || !(hi > lo) || nodes < 3)
        throw Error(ErrorKind::Domain, "geometric_grid needs 0 < lo < hi and >= 3 nodes");
    std::vector<double> g(nodes);
    const double llo = std::log(lo);
    const double step = (std::log(hi) - llo) / static_cast<double>(nodes - 1);
    for (std::size_t i = 0; i < nodes; ++i) g[i] = std::exp(llo + step * static_cast<double>(i));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t nodes) {
    if (!(hi > lo) || nodes < 2) throw Error(ErrorKind::Domain, "uniform_grid needs lo < hi and >= 2 nodes");
    std::vector<double> g(nodes);
    const double step = (hi - lo) / static_cast<double>(nodes - 1);
    for (std::size_t i = 0; i < nodes; ++i) g[i] = lo + step * static_cast<double>(i);
    g.back() = hi;
    return g;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw Error(ErrorKind::Domain, "MonotoneCubic needs >= 2 matching samples");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = x_[i + 1] - x_[i];
        if (!(h > 0.0)) throw Error(ErrorKind::Domain, "MonotoneCubic abscissa must increase strictly");
        delta[i] = (y_[i + 1] - y_[i]) / h;
    }
    slope_.assign(n, 0.0);
    slope_[0] = delta[0];
    slope_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            slope_[i] = 0.0;
        } else {
            // Weighted harmonic mean (Fritsch-Butland), exact for linear data.
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            const double w1 = 2.0 * h1 + h0;
            const double w2 = h1 + 2.0 * h0;
            slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            slope_[i] = slope_[i + 1] = 0.0;
        }
    }
}

double MonotoneCubic::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw Error(ErrorKind::Domain, "fit_line needs >= 2 matching samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorKind::Domain, "fit_line: degenerate abscissa");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i)
        fit.max_abs_residual =
            std::max(fit.max_abs_residual, std::abs(y[i] - (fit.intercept + fit.slope * x[i])));
    return fit;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::Domain, "loglog_slope needs positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly).slope;
}

}  // namespace adiabat::numerics
