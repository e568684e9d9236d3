#include "adiabat/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/special_functions/gamma.hpp>

#include "adiabat/errors.hpp"
#include "adiabat/numerics.hpp"

namespace adiabat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sweep_tolerance(const Sweep& s) {
    return 1e-12 * std::max({1.0, std::abs(s.a_start), std::abs(s.a_end)});
}

}  // namespace

// ---------------------------------------------------------------------------

double LevelTrack::energy(double a) const {
    return std::visit(overloaded{
                          [a](const AffineForm& f) { return f.intercept + f.slope * a; },
                          [a](const ReciprocalForm& f) { return f.coef / a; },
                          [a](const GeneralForm& f) { return f.energy(a); },
                      },
                      form);
}

double LevelTrack::slope(double a) const {
    return std::visit(overloaded{
                          [](const AffineForm& f) { return f.slope; },
                          [a](const ReciprocalForm& f) { return -f.coef / (a * a); },
                          [a](const GeneralForm& f) {
                              const double h = 1e-6 * std::max(1.0, std::abs(a));
                              return (f.energy(a + h) - f.energy(a - h)) / (2.0 * h);
                          },
                      },
                      form);
}

bool Sweep::contains(double a) const {
    const double tol = sweep_tolerance(*this);
    return a >= lo() - tol && a <= hi() + tol;
}

DiscreteSpectrum::DiscreteSpectrum(std::vector<LevelTrack> tracks, Sweep sweep)
    : tracks_(std::move(tracks)), sweep_(sweep) {
    if (!std::isfinite(sweep_.a_start) || !std::isfinite(sweep_.a_end))
        throw Error(ErrorKind::Domain, "sweep bounds must be finite");

    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        const auto& t = tracks_[i];
        if (t.degeneracy < 1) throw Error(ErrorKind::Domain, "track " + std::to_string(t.id) + ": degeneracy < 1");
        if (!index_by_id_.emplace(t.id, 0).second)
            throw Error(ErrorKind::Domain, "duplicate track id " + std::to_string(t.id));

        if (const auto* r = std::get_if<ReciprocalForm>(&t.form)) {
            if (!(sweep_.lo() > 0.0))
                throw Error(ErrorKind::Domain, "reciprocal track needs a > 0 on the whole sweep");
            if (r->coef < 0.0) throw Error(ErrorKind::Domain, "negative reciprocal coefficient");
        } else if (std::holds_alternative<AffineForm>(t.form)) {
            if (t.energy(sweep_.lo()) < 0.0 || t.energy(sweep_.hi()) < 0.0)
                throw Error(ErrorKind::Domain, "track " + std::to_string(t.id) + " has negative energy on the sweep");
        } else {
            constexpr int probes = 1025;
            for (int k = 0; k < probes; ++k) {
                const double a = sweep_.lo() + (sweep_.hi() - sweep_.lo()) * k / (probes - 1);
                const double e = t.energy(a);
                if (!std::isfinite(e) || e < 0.0)
                    throw Error(ErrorKind::Domain,
                                "track " + std::to_string(t.id) + " is negative or non-finite on the sweep");
            }
        }
    }

    const double a0 = sweep_.a_start;
    std::stable_sort(tracks_.begin(), tracks_.end(), [a0](const LevelTrack& x, const LevelTrack& y) {
        const double ex = x.energy(a0);
        const double ey = y.energy(a0);
        return ex < ey || (ex == ey && x.id < y.id);
    });
    for (std::size_t i = 0; i < tracks_.size(); ++i) index_by_id_[tracks_[i].id] = static_cast<int>(i);
}

int DiscreteSpectrum::index_of(int id) const {
    const auto it = index_by_id_.find(id);
    return it == index_by_id_.end() ? -1 : it->second;
}

DiscreteSpectrum DiscreteSpectrum::reversed() const { return DiscreteSpectrum(tracks_, sweep_.reversed()); }

std::vector<int> DiscreteSpectrum::degeneracies() const {
    std::vector<int> g;
    g.reserve(tracks_.size());
    for (const auto& t : tracks_) g.push_back(t.degeneracy);
    return g;
}

std::vector<int> DiscreteSpectrum::ids() const {
    std::vector<int> ids;
    ids.reserve(tracks_.size());
    for (const auto& t : tracks_) ids.push_back(t.id);
    return ids;
}

std::vector<double> DiscreteSpectrum::energies(double a) const {
    std::vector<double> e;
    e.reserve(tracks_.size());
    for (const auto& t : tracks_) e.push_back(t.energy(a));
    return e;
}

long long DiscreteSpectrum::total_states() const {
    long long n = 0;
    for (const auto& t : tracks_) n += t.degeneracy;
    return n;
}

std::vector<LevelValue> eval_levels(const DiscreteSpectrum& spectrum, double a) {
    if (!spectrum.sweep().contains(a))
        throw Error(ErrorKind::Domain, "a = " + std::to_string(a) + " outside the sweep range");
    std::vector<LevelValue> out;
    out.reserve(spectrum.size());
    for (const auto& t : spectrum.tracks()) {
        const double e = t.energy(a);
        if (!std::isfinite(e)) throw Error(ErrorKind::Domain, "non-finite energy for track " + std::to_string(t.id));
        out.push_back({t.id, e, t.degeneracy});
    }
    return out;
}

// ---------------------------------------------------------------------------
// ContinuumDos defaults

double ContinuumDos::g(double eps, double a) const { return std::exp(log_g(eps, a)); }

double ContinuumDos::log_phi(double eps, double a) const { return std::log(phi(eps, a)); }

std::optional<double> ContinuumDos::cumulative_g_da(double, double) const { return std::nullopt; }
std::optional<double> ContinuumDos::velocity(double, double) const { return std::nullopt; }
std::optional<double> ContinuumDos::inverse_log_phi(double, double) const { return std::nullopt; }
std::optional<CanonicalSummary> ContinuumDos::canonical(double, double) const { return std::nullopt; }
std::optional<std::pair<double, double>> ContinuumDos::canonical_quantiles(double, double, double) const {
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// PowerSumDos

PowerSumDos::PowerSumDos(std::vector<PowerTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw Error(ErrorKind::Domain, "power sum needs at least one term");
    for (const auto& t : terms_) {
        if (!(t.eta > -1.0)) throw Error(ErrorKind::Domain, "power-law exponent eta must exceed -1");
        if (!std::isfinite(t.log_coef) || !std::isfinite(t.kappa) || !std::isfinite(t.eta))
            throw Error(ErrorKind::Domain, "power-law term must be finite");
    }
}

void PowerSumDos::check_parameter(double a) const {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorKind::Domain, "power-law DOS needs a > 0");
}

Support PowerSumDos::support(double a) const {
    check_parameter(a);
    return {0.0, kInf};
}

double PowerSumDos::log_g(double eps, double a) const {
    check_parameter(a);
    if (eps < 0.0) return -kInf;
    const double la = std::log(a);
    if (eps == 0.0) {
        double acc = 0.0;
        for (const auto& t : terms_) {
            if (t.eta < 0.0) return kInf;
            if (t.eta == 0.0) acc += std::exp(t.log_coef - t.kappa * la);
        }
        return std::log(acc);
    }
    const double le = std::log(eps);
    double m = -kInf;
    for (const auto& t : terms_) m = std::max(m, t.log_coef - t.kappa * la + t.eta * le);
    double s = 0.0;
    for (const auto& t : terms_) s += std::exp(t.log_coef - t.kappa * la + t.eta * le - m);
    return m + std::log(s);
}

double PowerSumDos::g_da(double eps, double a) const {
    check_parameter(a);
    if (eps < 0.0) return 0.0;
    const double la = std::log(a);
    if (eps == 0.0) {
        double acc = 0.0;
        for (const auto& t : terms_)
            if (t.eta == 0.0) acc += -t.kappa / a * std::exp(t.log_coef - t.kappa * la);
        return acc;
    }
    const double le = std::log(eps);
    double m = -kInf;
    for (const auto& t : terms_)
        if (t.kappa != 0.0) m = std::max(m, t.log_coef - t.kappa * la + t.eta * le);
    if (!std::isfinite(m)) return 0.0;
    double s = 0.0;
    for (const auto& t : terms_)
        if (t.kappa != 0.0) s += -t.kappa / a * std::exp(t.log_coef - t.kappa * la + t.eta * le - m);
    return s * std::exp(m);
}

double PowerSumDos::log_phi(double eps, double a) const {
    check_parameter(a);
    if (eps <= 0.0) return -kInf;
    const double la = std::log(a);
    const double le = std::log(eps);
    double m = -kInf;
    for (const auto& t : terms_)
        m = std::max(m, t.log_coef - t.kappa * la + (t.eta + 1.0) * le - std::log(t.eta + 1.0));
    double s = 0.0;
    for (const auto& t : terms_)
        s += std::exp(t.log_coef - t.kappa * la + (t.eta + 1.0) * le - std::log(t.eta + 1.0) - m);
    return m + std::log(s);
}

double PowerSumDos::phi(double eps, double a) const { return std::exp(log_phi(eps, a)); }

std::optional<double> PowerSumDos::cumulative_g_da(double eps, double a) const {
    check_parameter(a);
    if (eps <= 0.0) return 0.0;
    const double la = std::log(a);
    const double le = std::log(eps);
    double m = -kInf;
    for (const auto& t : terms_)
        if (t.kappa != 0.0)
            m = std::max(m, t.log_coef - t.kappa * la + (t.eta + 1.0) * le - std::log(t.eta + 1.0));
    if (!std::isfinite(m)) return 0.0;
    double s = 0.0;
    for (const auto& t : terms_)
        if (t.kappa != 0.0)
            s += -t.kappa / a *
                 std::exp(t.log_coef - t.kappa * la + (t.eta + 1.0) * le - std::log(t.eta + 1.0) - m);
    return s * std::exp(m);
}

std::optional<double> PowerSumDos::velocity(double eps, double a) const {
    check_parameter(a);
    if (eps <= 0.0) return 0.0;
    const double la = std::log(a);
    const double le = std::log(eps);
    const double lg = log_g(eps, a);
    double u = 0.0;
    for (const auto& t : terms_) {
        if (t.kappa == 0.0) continue;
        u += -t.kappa / a * std::exp(t.log_coef - t.kappa * la + (t.eta + 1.0) * le - std::log(t.eta + 1.0) - lg);
    }
    return u;
}

std::optional<double> PowerSumDos::inverse_log_phi(double log_value, double a) const {
    check_parameter(a);
    if (terms_.size() != 1) return std::nullopt;
    if (log_value == -kInf) return 0.0;
    const auto& t = terms_.front();
    const double p = t.eta + 1.0;
    return std::exp((log_value - t.log_coef + t.kappa * std::log(a) + std::log(p)) / p);
}

std::optional<CanonicalSummary> PowerSumDos::canonical(double a, double temperature) const {
    check_parameter(a);
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw Error(ErrorKind::DegenerateTemperature, "temperature must be positive and finite");
    const double la = std::log(a);
    const double lt = std::log(temperature);
    std::vector<double> lz(terms_.size());
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& t = terms_[k];
        lz[k] = t.log_coef - t.kappa * la + std::lgamma(t.eta + 1.0) + (t.eta + 1.0) * lt;
    }
    CanonicalSummary out;
    out.log_z = numerics::log_sum_exp(lz);
    double mean = 0.0;
    std::vector<double> p(terms_.size());
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        p[k] = std::exp(lz[k] - out.log_z);
        mean += p[k] * (terms_[k].eta + 1.0) * temperature;
    }
    // Law of total variance over the gamma mixture.
    double var = 0.0;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const double mk = (terms_[k].eta + 1.0) * temperature;
        var += p[k] * ((terms_[k].eta + 1.0) * temperature * temperature + (mk - mean) * (mk - mean));
    }
    out.mean = mean;
    out.variance = var;
    return out;
}

std::optional<std::pair<double, double>> PowerSumDos::canonical_quantiles(double a, double temperature,
                                                                          double tol) const {
    check_parameter(a);
    if (!(tol > 0.0 && tol < 1.0)) throw Error(ErrorKind::Domain, "tail tolerance must lie in (0, 1)");
    const double la = std::log(a);
    const double lt = std::log(temperature);
    std::vector<double> lz(terms_.size());
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& t = terms_[k];
        lz[k] = t.log_coef - t.kappa * la + std::lgamma(t.eta + 1.0) + (t.eta + 1.0) * lt;
    }
    const double log_z = numerics::log_sum_exp(lz);
    // Components lighter than tol/K are dropped; together they weigh < tol.
    const double floor = tol / static_cast<double>(terms_.size());
    double lo = kInf, hi = 0.0;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        if (std::exp(lz[k] - log_z) < floor) continue;
        const double shape = terms_[k].eta + 1.0;
        lo = std::min(lo, boost::math::gamma_p_inv(shape, tol) * temperature);
        hi = std::max(hi, boost::math::gamma_q_inv(shape, tol) * temperature);
    }
    return std::make_pair(lo, hi);
}

PowerSumDos PowerSumDos::convolution_power(int copies) const {
    if (copies < 1) throw Error(ErrorKind::Domain, "copies must be >= 1");
    if (copies == 1) return *this;
    // Laplace transform of the DOS is sum_i c_i Gamma(eta_i+1) beta^-(eta_i+1);
    // its N-th power expands multinomially, and beta^-s maps back to
    // eps^(s-1)/Gamma(s).
    const std::size_t K = terms_.size();
    std::vector<PowerTerm> out;
    std::vector<int> counts(K, 0);
    const auto emit = [&] {
        double log_coef = std::lgamma(copies + 1.0);
        double kappa = 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const int k = counts[i];
            if (k == 0) continue;
            log_coef += -std::lgamma(k + 1.0) + k * (terms_[i].log_coef + std::lgamma(terms_[i].eta + 1.0));
            kappa += k * terms_[i].kappa;
            s += k * (terms_[i].eta + 1.0);
        }
        log_coef -= std::lgamma(s);
        out.push_back({log_coef, kappa, s - 1.0});
    };
    // Enumerate compositions of `copies` into K parts.
    const std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i + 1 == K) {
            counts[i] = left;
            emit();
            return;
        }
        for (int k = left; k >= 0; --k) {
            counts[i] = k;
            rec(i + 1, left - k);
        }
    };
    rec(0, copies);
    return PowerSumDos(std::move(out));
}

// ---------------------------------------------------------------------------
// Kernel-smoothed discrete DOS

namespace {

double tri_kernel(double x, double h) {
    const double ax = std::abs(x);
    return ax >= h ? 0.0 : (1.0 - ax / h) / h;
}

double tri_kernel_derivative(double x, double h) {
    const double ax = std::abs(x);
    if (ax >= h || x == 0.0) return 0.0;
    return (x > 0.0 ? -1.0 : 1.0) / (h * h);
}

double tri_cdf(double x, double h) {
    if (x <= -h) return 0.0;
    if (x >= h) return 1.0;
    if (x <= 0.0) return (x + h) * (x + h) / (2.0 * h * h);
    return 1.0 - (h - x) * (h - x) / (2.0 * h * h);
}

}  // namespace

double smoothed_density(std::span<const double> energies, std::span<const double> masses, double bandwidth,
                        double eps) {
    if (eps < 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < energies.size(); ++j)
        s += masses[j] * (tri_kernel(eps - energies[j], bandwidth) + tri_kernel(eps + energies[j], bandwidth));
    return s;
}

SmoothedDiscreteDos::SmoothedDiscreteDos(std::shared_ptr<const DiscreteSpectrum> spectrum, double bandwidth)
    : spectrum_(std::move(spectrum)), bandwidth_(bandwidth) {
    if (!spectrum_ || spectrum_->size() == 0) throw Error(ErrorKind::Domain, "empty spectrum");
    if (!(bandwidth_ > 0.0)) throw Error(ErrorKind::Domain, "bandwidth must be positive");
}

double SmoothedDiscreteDos::log_g(double eps, double a) const {
    if (eps < 0.0) return -kInf;
    double s = 0.0;
    for (const auto& t : spectrum_->tracks()) {
        const double e = t.energy(a);
        s += t.degeneracy * (tri_kernel(eps - e, bandwidth_) + tri_kernel(eps + e, bandwidth_));
    }
    return std::log(s);
}

double SmoothedDiscreteDos::g_da(double eps, double a) const {
    if (eps < 0.0) return 0.0;
    double s = 0.0;
    for (const auto& t : spectrum_->tracks()) {
        const double e = t.energy(a);
        const double de = t.slope(a);
        s += t.degeneracy * de *
             (-tri_kernel_derivative(eps - e, bandwidth_) + tri_kernel_derivative(eps + e, bandwidth_));
    }
    return s;
}

double SmoothedDiscreteDos::phi(double eps, double a) const {
    if (eps <= 0.0) return 0.0;
    double s = 0.0;
    for (const auto& t : spectrum_->tracks()) {
        const double e = t.energy(a);
        s += t.degeneracy * (tri_cdf(eps - e, bandwidth_) - tri_cdf(-e, bandwidth_) +
                             tri_cdf(eps + e, bandwidth_) - tri_cdf(e, bandwidth_));
    }
    return s;
}

Support SmoothedDiscreteDos::support(double a) const {
    double top = 0.0;
    for (const auto& t : spectrum_->tracks()) top = std::max(top, t.energy(a));
    return {0.0, top + bandwidth_};
}

double median_spacing(const DiscreteSpectrum& spectrum, double a) {
    auto e = spectrum.energies(a);
    std::sort(e.begin(), e.end());
    std::vector<double> gaps;
    const double scale = e.empty() ? 1.0 : std::max(1.0, std::abs(e.back()));
    for (std::size_t i = 1; i < e.size(); ++i)
        if (e[i] - e[i - 1] > 1e-12 * scale) gaps.push_back(e[i] - e[i - 1]);
    if (gaps.empty()) return e.empty() || e.back() <= 0.0 ? 1.0 : e.back();
    const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    return *mid;
}

std::shared_ptr<const ContinuumDos> dos_of_discrete(const DiscreteSpectrum& spectrum, double a, double bandwidth) {
    if (spectrum.size() == 0) throw Error(ErrorKind::Domain, "dos_of_discrete: empty spectrum");
    const double h = bandwidth > 0.0 ? bandwidth : 3.0 * median_spacing(spectrum, a);
    return std::make_shared<SmoothedDiscreteDos>(std::make_shared<DiscreteSpectrum>(spectrum), h);
}

// ---------------------------------------------------------------------------
// Families

std::string family_name(const SpectrumFamily& family) {
    return std::visit(overloaded{
                          [](const PowerLaw&) { return std::string("PowerLaw"); },
                          [](const TwoTerm&) { return std::string("TwoTerm"); },
                          [](const TwoLadder&) { return std::string("TwoLadder"); },
                          [](const LinearEnsemble&) { return std::string("LinearEnsemble"); },
                          [](const OscillatorLadder&) { return std::string("OscillatorLadder"); },
                      },
                      family);
}

bool has_discrete_form(const SpectrumFamily& family) {
    return std::holds_alternative<TwoLadder>(family) || std::holds_alternative<LinearEnsemble>(family) ||
           std::holds_alternative<OscillatorLadder>(family);
}

bool has_continuum_form(const SpectrumFamily& family) {
    return std::holds_alternative<PowerLaw>(family) || std::holds_alternative<TwoTerm>(family) ||
           std::holds_alternative<TwoLadder>(family);
}

DiscreteSpectrum discrete_spectrum(const SpectrumFamily& family, Sweep sweep) {
    std::vector<LevelTrack> tracks;
    if (const auto* f = std::get_if<TwoLadder>(&family)) {
        if (!(f->delta_A > 0.0) || !(f->delta_B > 0.0))
            throw Error(ErrorKind::Domain, "TwoLadder needs delta_A, delta_B > 0");
        if (f->M_A < 0 || f->M_B < 0) throw Error(ErrorKind::Domain, "TwoLadder needs M_A, M_B >= 0");
        if (!(sweep.lo() > 0.0)) throw Error(ErrorKind::Domain, "TwoLadder needs a > 0");
        for (int n = 1; n <= f->M_A; ++n)
            tracks.push_back({n - 1, "A" + std::to_string(n), AffineForm{0.0, n * f->delta_A}, 1});
        for (int m = 1; m <= f->M_B; ++m)
            tracks.push_back({f->M_A + m - 1, "B" + std::to_string(m), ReciprocalForm{m * f->delta_B}, 1});
    } else if (const auto* f = std::get_if<LinearEnsemble>(&family)) {
        if (f->intercepts.size() != f->slopes.size() ||
            (!f->degeneracies.empty() && f->degeneracies.size() != f->slopes.size()))
            throw Error(ErrorKind::Domain, "LinearEnsemble lists must have equal length");
        for (std::size_t j = 0; j < f->slopes.size(); ++j) {
            const int g = f->degeneracies.empty() ? 1 : f->degeneracies[j];
            tracks.push_back({static_cast<int>(j), "L" + std::to_string(j),
                              AffineForm{f->intercepts[j], f->slopes[j]}, g});
        }
    } else if (const auto* f = std::get_if<OscillatorLadder>(&family)) {
        if (f->M < 1 || f->N < 1) throw Error(ErrorKind::Domain, "OscillatorLadder needs M, N >= 1");
        for (int n = 0; n < f->M; ++n) {
            const double g = std::round(
                std::exp(std::lgamma(n + f->N + 0.0) - std::lgamma(n + 1.0) - std::lgamma(f->N + 0.0)));
            if (g > static_cast<double>(std::numeric_limits<int>::max()))
                throw Error(ErrorKind::Domain, "OscillatorLadder degeneracy overflows");
            tracks.push_back({n, "n" + std::to_string(n), AffineForm{0.0, n + 0.5 * f->N}, static_cast<int>(g)});
        }
    } else {
        throw Error(ErrorKind::UnsupportedFamily, family_name(family) + " has no discrete level tracks");
    }
    return DiscreteSpectrum(std::move(tracks), sweep);
}

std::shared_ptr<const PowerSumDos> analytic_dos(const SpectrumFamily& family) {
    if (const auto* f = std::get_if<PowerLaw>(&family)) {
        if (!(f->C > 0.0)) throw Error(ErrorKind::Domain, "PowerLaw needs C > 0");
        PowerSumDos base({{std::log(f->C), f->kappa, f->eta}});
        return std::make_shared<PowerSumDos>(base.convolution_power(f->copies));
    }
    if (const auto* f = std::get_if<TwoTerm>(&family)) {
        if (!(f->C1 > 0.0) || !(f->C2 > 0.0)) throw Error(ErrorKind::Domain, "TwoTerm needs C1, C2 > 0");
        PowerSumDos base({{std::log(f->C1), f->kappa1, f->eta1}, {std::log(f->C2), f->kappa2, f->eta2}});
        return std::make_shared<PowerSumDos>(base.convolution_power(f->copies));
    }
    if (const auto* f = std::get_if<TwoLadder>(&family)) {
        if (!(f->delta_A > 0.0) || !(f->delta_B > 0.0))
            throw Error(ErrorKind::Domain, "TwoLadder needs delta_A, delta_B > 0");
        return std::make_shared<PowerSumDos>(
            std::vector<PowerTerm>{{-std::log(f->delta_A), 1.0, 0.0}, {-std::log(f->delta_B), -1.0, 0.0}});
    }
    throw Error(ErrorKind::UnsupportedFamily, family_name(family) + " has no closed-form density of states");
}

}  // namespace adiabat
