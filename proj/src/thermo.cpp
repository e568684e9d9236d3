#include "adiabat/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/policies/error_handling.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "adiabat/csv.hpp"
#include "adiabat/errors.hpp"

namespace adiabat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CanonicalSummary discrete_summary(const DiscreteSpectrum& spectrum, double a, double t) {
    const auto e = spectrum.energies(a);
    const auto g = spectrum.degeneracies();
    std::vector<double> l(e.size());
    for (std::size_t j = 0; j < e.size(); ++j) {
        if (!std::isfinite(e[j])) throw Error(ErrorKind::Domain, "non-finite level energy at a = " + csv::format_number(a));
        l[j] = std::log(static_cast<double>(g[j])) - e[j] / t;
    }
    CanonicalSummary s;
    s.log_z = numerics::log_sum_exp(l);
    for (std::size_t j = 0; j < e.size(); ++j) s.mean += std::exp(l[j] - s.log_z) * e[j];
    for (std::size_t j = 0; j < e.size(); ++j) s.variance += std::exp(l[j] - s.log_z) * (e[j] - s.mean) * (e[j] - s.mean);
    return s;
}

// Moments of G e^{-eps/T} by double-exponential quadrature, shifted by the
// support's lower end to keep the weights in range.
CanonicalSummary quadrature_summary(const ContinuumDos& dos, double a, double t) {
    const Support s = dos.support(a);
    const double shift = s.lo;
    const auto weight = [&](double eps) {
        const double lg = dos.log_g(eps, a);
        return lg == -kInf ? 0.0 : std::exp(lg - (eps - shift) / t);
    };
    const auto integrate = [&](auto f) {
        // The quadrature routines throw their own errors on non-finite samples.
        try {
            if (s.unbounded()) {
                boost::math::quadrature::exp_sinh<double> q;
                return q.integrate([&](double x) { return f(shift + x); }, 0.0, kInf);
            }
            boost::math::quadrature::tanh_sinh<double> q;
            return q.integrate(f, s.lo, s.hi);
        } catch (const std::domain_error& e) {
            throw Error(ErrorKind::Divergence, std::string("canonical integral: ") + e.what());
        } catch (const std::overflow_error& e) {
            throw Error(ErrorKind::Divergence, std::string("canonical integral: ") + e.what());
        } catch (const boost::math::evaluation_error& e) {
            throw Error(ErrorKind::Divergence, std::string("canonical integral: ") + e.what());
        }
    };
    const double z = integrate(weight);
    if (!std::isfinite(z) || !(z > 0.0))
        throw Error(ErrorKind::Divergence, "partition integral does not converge at T = " + csv::format_number(t));
    CanonicalSummary out;
    out.log_z = std::log(z) - shift / t;
    out.mean = integrate([&](double eps) { return weight(eps) * eps; }) / z;
    out.variance = integrate([&](double eps) { return weight(eps) * (eps - out.mean) * (eps - out.mean); }) / z;
    if (!std::isfinite(out.mean) || !std::isfinite(out.variance))
        throw Error(ErrorKind::Divergence, "canonical moments do not converge at T = " + csv::format_number(t));
    return out;
}

CanonicalSummary summary_at(const ThermoSystem& system, double a, double t) {
    return canonical_summary({system, a, t});
}

double measured_spread(double variance) { return std::sqrt(std::max(0.0, variance)); }

}  // namespace

CanonicalSummary canonical_summary(const CanonicalEnsemble& ens) {
    const double t = ens.temperature;
    if (!(t > 0.0) || !std::isfinite(t))
        throw Error(ErrorKind::DegenerateTemperature, "canonical ensemble needs 0 < T < inf");
    if (const auto* dos = std::get_if<std::shared_ptr<const ContinuumDos>>(&ens.system)) {
        if (!*dos) throw Error(ErrorKind::Domain, "canonical ensemble without a DOS");
        if (const auto c = (*dos)->canonical(ens.a, t)) {
            if (!std::isfinite(c->log_z)) throw Error(ErrorKind::Divergence, "partition function is not finite");
            return *c;
        }
        return quadrature_summary(**dos, ens.a, t);
    }
    const auto& spectrum = std::get<std::shared_ptr<const DiscreteSpectrum>>(ens.system);
    if (!spectrum || spectrum->size() == 0) throw Error(ErrorKind::Domain, "canonical ensemble without levels");
    return discrete_summary(*spectrum, ens.a, t);
}

double log_partition_function(const CanonicalEnsemble& ens) { return canonical_summary(ens).log_z; }

double partition_function(const CanonicalEnsemble& ens) {
    const double z = std::exp(log_partition_function(ens));
    if (!std::isfinite(z)) throw Error(ErrorKind::Divergence, "Z overflows double; use log_partition_function");
    return z;
}

HeatCapacity heat_capacity(const CanonicalEnsemble& ens) {
    const double t = ens.temperature;
    const auto s = canonical_summary(ens);
    const double h = 1e-3 * t;
    const auto mean_at = [&](double tt) { return summary_at(ens.system, ens.a, tt).mean; };
    HeatCapacity c;
    c.from_variance = s.variance / (t * t);
    c.from_derivative = (-mean_at(t + 2 * h) + 8 * mean_at(t + h) - 8 * mean_at(t - h) + mean_at(t - 2 * h)) / (12 * h);
    return c;
}

double canonical_entropy(const CanonicalEnsemble& ens) {
    const auto s = canonical_summary(ens);
    return s.log_z + s.mean / ens.temperature;
}

double isentropic_temperature(const ThermoSystem& system, double a0, double t0, double a1,
                              const TemperatureBracket& bracket) {
    if (!(t0 > 0.0) || !std::isfinite(t0))
        throw Error(ErrorKind::DegenerateTemperature, "isentropic path needs 0 < T0 < inf");
    if (a1 == a0) return t0;
    if (!(bracket.lo_factor > 0.0 && bracket.hi_factor > bracket.lo_factor))
        throw Error(ErrorKind::Domain, "temperature bracket must satisfy 0 < lo < hi");
    const double s0 = canonical_entropy({system, a0, t0});
    const auto f = [&](double log_t) { return canonical_entropy({system, a1, std::exp(log_t)}) - s0; };
    double lo = std::log(t0 * bracket.lo_factor), hi = std::log(t0 * bracket.hi_factor);
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return std::exp(lo);
    if (fhi == 0.0) return std::exp(hi);
    if ((flo < 0.0) == (fhi < 0.0))
        throw Error(ErrorKind::Range, "isentropic temperature not bracketed in [" +
                                          csv::format_number(std::exp(lo)) + ", " +
                                          csv::format_number(std::exp(hi)) + "]; widen temperature_bracket");
    std::uintmax_t iterations = 300;
    const auto root = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                        boost::math::tools::eps_tolerance<double>(52), iterations);
    return std::exp(0.5 * (root.first + root.second));
}

FluctuationPrediction predict_fluctuations(const ThermoSystem& system, double a0, double t0, double a1,
                                           const TemperatureBracket& bracket) {
    FluctuationPrediction p;
    p.temperature = isentropic_temperature(system, a0, t0, a1, bracket);
    p.c_initial = heat_capacity({system, a0, t0}).from_variance;
    p.c_final = heat_capacity({system, a1, p.temperature}).from_variance;
    p.zero_polytropic = std::sqrt(p.c_final) * p.temperature;
    p.adiabatic = std::sqrt(p.c_initial) * p.temperature;
    return p;
}

// ---------------------------------------------------------------------------

ProcessComparison compare_processes(const SpectrumFamily& family, double a0, double t0,
                                    const std::vector<double>& a_path, const CompareOptions& options) {
    if (a_path.empty()) throw Error(ErrorKind::Domain, "compare_processes needs at least one checkpoint");
    double a_end = a0;
    for (const double a : a_path)
        if (std::abs(a - a0) > std::abs(a_end - a0)) a_end = a;
    for (std::size_t k = 0; k < a_path.size(); ++k) {
        if ((a_path[k] - a0) * (a_end - a0) < 0.0)
            throw Error(ErrorKind::Domain, "checkpoints must lie on one side of a0");
        if (k > 0 && std::abs(a_path[k] - a0) < std::abs(a_path[k - 1] - a0))
            throw Error(ErrorKind::Domain, "checkpoints must be ordered along the process");
    }

    Representation rep = options.representation;
    if (rep == Representation::Auto) rep = has_continuum_form(family) ? Representation::Continuum
                                                                      : Representation::Discrete;
    if (rep == Representation::Continuum && !has_continuum_form(family))
        throw Error(ErrorKind::UnsupportedFamily, family_name(family) + " has no continuum form");
    if (rep == Representation::Discrete && !has_discrete_form(family))
        throw Error(ErrorKind::UnsupportedFamily, family_name(family) + " has no discrete form");

    ProcessComparison out;
    out.a0 = a0;
    out.t0 = t0;

    ThermoSystem system;
    std::optional<ContinuumDistribution> initial;
    std::shared_ptr<const ContinuumDos> dos;
    if (rep == Representation::Continuum) {
        dos = analytic_dos(family);
        system = dos;
        initial = canonical_distribution(dos, a0, t0, options.numerics);
    } else {
        out.spectrum = std::make_shared<const DiscreteSpectrum>(discrete_spectrum(family, Sweep{a0, a_end}));
        system = out.spectrum;
        const auto start = canonical_init(*out.spectrum, a0, t0);
        const auto schedule = find_crossings(*out.spectrum, options.detection_tol);
        out.sweep = sweep_adiabatic(*out.spectrum, start, schedule, a_path);
        out.delta_s_total = out.sweep->total_delta_s;
    }
    const double c0 = heat_capacity({system, a0, t0}).from_variance;

    for (std::size_t k = 0; k < a_path.size(); ++k) {
        const double a = a_path[k];
        ComparisonRow row;
        row.a = a;
        row.temperature = isentropic_temperature(system, a0, t0, a, options.bracket);
        const auto zp_summary = canonical_summary({system, a, row.temperature});
        row.log_z_zp = zp_summary.log_z;
        row.c_a = zp_summary.variance / (row.temperature * row.temperature);
        row.de_zp_predicted = std::sqrt(row.c_a) * row.temperature;
        row.de_ad_predicted = std::sqrt(c0) * row.temperature;

        if (rep == Representation::Continuum) {
            const auto zp = canonical_distribution(dos, a, row.temperature, options.numerics);
            const auto zp_m = continuum_moments(zp);
            row.e_zp = zp_m.mean;
            row.de_zp_measured = measured_spread(zp_m.variance);
            row.s_zp = continuum_entropy(zp);

            auto ad = advect(*initial, a, options.numerics, options.method);
            const auto ad_m = continuum_moments(ad);
            row.e_ad = ad_m.mean;
            row.de_ad_measured = measured_spread(ad_m.variance);
            row.s_ad = continuum_entropy(ad);
            out.adiabatic.push_back(std::move(ad));
        } else {
            const auto zp = canonical_init(*out.spectrum, a, row.temperature);
            const auto zp_m = moments(zp, *out.spectrum, a);
            row.e_zp = zp_m.mean;
            row.de_zp_measured = measured_spread(zp_m.variance);
            row.s_zp = entropy(zp);

            const auto& sample = out.sweep->trajectory[k];
            row.e_ad = sample.mean;
            row.de_ad_measured = measured_spread(sample.variance);
            row.s_ad = sample.entropy;
        }
        out.rows.push_back(row);
    }
    return out;
}

std::string comparison_csv(const ProcessComparison& comparison) {
    csv::Table table({"a", "T", "E_zp", "E_ad", "dE_zp_measured", "dE_zp_predicted", "dE_ad_measured",
                      "dE_ad_predicted", "S_ad", "S_zp", "c_a"});
    for (const auto& r : comparison.rows) {
        table.cell(r.a).cell(r.temperature).cell(r.e_zp).cell(r.e_ad).cell(r.de_zp_measured)
            .cell(r.de_zp_predicted).cell(r.de_ad_measured).cell(r.de_ad_predicted).cell(r.s_ad).cell(r.s_zp)
            .cell(r.c_a);
        table.end_row();
    }
    return table.str();
}

ScalingStudy size_scaling_study(const std::function<SpectrumFamily(int)>& generator, const std::vector<int>& sizes,
                                double a0, double t0, double a1, const CompareOptions& options) {
    ScalingStudy study;
    for (const int n : sizes) {
        const auto cmp = compare_processes(generator(n), a0, t0, {a1}, options);
        const auto& r = cmp.rows.back();
        ScalingRow row;
        row.size = n;
        row.e_zp = r.e_zp;
        row.e_ad = r.e_ad;
        row.relative_gap = std::abs(r.e_ad - r.e_zp) / std::abs(r.e_zp);
        row.de_ratio = r.de_ad_measured / r.de_zp_measured;
        row.de_ad_measured = r.de_ad_measured;
        row.de_ad_predicted = r.de_ad_predicted;
        row.de_zp_predicted = r.de_zp_predicted;
        study.rows.push_back(row);
    }
    std::vector<double> x, y;
    for (const auto& r : study.rows) {
        if (r.relative_gap < 1e-12) continue;
        x.push_back(r.size);
        y.push_back(r.relative_gap);
    }
    if (x.size() >= 2) study.slope = numerics::loglog_slope(x, y);
    return study;
}

std::string scaling_csv(const ScalingStudy& study) {
    csv::Table table({"N", "E_zp", "E_ad", "relative_gap", "dE_ratio", "dE_ad_measured", "dE_ad_predicted",
                      "dE_zp_predicted"});
    for (const auto& r : study.rows) {
        table.cell(r.size).cell(r.e_zp).cell(r.e_ad).cell(r.relative_gap).cell(r.de_ratio).cell(r.de_ad_measured)
            .cell(r.de_ad_predicted).cell(r.de_zp_predicted);
        table.end_row();
    }
    return table.str();
}

}  // namespace adiabat
