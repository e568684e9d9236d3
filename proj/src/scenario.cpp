#include "adiabat/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "adiabat/csv.hpp"
#include "adiabat/errors.hpp"
#include "adiabat/microstate.hpp"

namespace adiabat {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading

std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

class Reader {
public:
    explicit Reader(const ConfigEcho& echo) : echo_(echo) {}

    std::optional<std::string> text(const std::string& section, const std::string& key) {
        used_.insert(qualified(section, key));
        const auto s = echo_.find(section);
        if (s == echo_.end()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    std::string required_text(const std::string& section, const std::string& key) {
        auto v = text(section, key);
        if (!v || v->empty())
            throw ConfigError(ConfigErrorCode::MissingKey, qualified(section, key), "required key is missing");
        return *v;
    }

    std::optional<double> number(const std::string& section, const std::string& key) {
        const auto v = text(section, key);
        if (!v) return std::nullopt;
        return parse_number(*v, qualified(section, key));
    }

    double number(const std::string& section, const std::string& key, double fallback) {
        return number(section, key).value_or(fallback);
    }

    double required_number(const std::string& section, const std::string& key) {
        const auto v = number(section, key);
        if (!v) throw ConfigError(ConfigErrorCode::MissingKey, qualified(section, key), "required key is missing");
        return *v;
    }

    std::optional<long long> integer(const std::string& section, const std::string& key) {
        const auto v = text(section, key);
        if (!v) return std::nullopt;
        return parse_integer(*v, qualified(section, key));
    }

    long long required_integer(const std::string& section, const std::string& key) {
        const auto v = integer(section, key);
        if (!v) throw ConfigError(ConfigErrorCode::MissingKey, qualified(section, key), "required key is missing");
        return *v;
    }

    std::optional<std::vector<double>> numbers(const std::string& section, const std::string& key) {
        const auto v = text(section, key);
        if (!v) return std::nullopt;
        std::vector<double> out;
        for (const auto& item : split(*v)) out.push_back(parse_number(item, qualified(section, key)));
        return out;
    }

    std::optional<std::vector<long long>> integers(const std::string& section, const std::string& key) {
        const auto v = text(section, key);
        if (!v) return std::nullopt;
        std::vector<long long> out;
        for (const auto& item : split(*v)) out.push_back(parse_integer(item, qualified(section, key)));
        return out;
    }

    bool flag(const std::string& section, const std::string& key, bool fallback) {
        const auto v = text(section, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "yes" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "0") return false;
        throw ConfigError(ConfigErrorCode::BadValue, qualified(section, key), "expected true or false, got '" + *v + "'");
    }

    /// Every key present in the document must have been consulted.
    void reject_unknown() const {
        for (const auto& [section, keys] : echo_)
            for (const auto& [key, value] : keys)
                if (!used_.count(qualified(section, key)))
                    throw ConfigError(ConfigErrorCode::BadValue, qualified(section, key),
                                      "unknown key for this experiment/family");
    }

private:
    static std::vector<std::string> split(const std::string& v) {
        std::vector<std::string> out;
        std::string cur;
        for (const char c : v) {
            if (c == ',' || c == ' ' || c == '\t') {
                if (!cur.empty()) out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    }

    static double parse_number(const std::string& v, const std::string& key) {
        double x = 0.0;
        const char* end = v.data() + v.size();
        const char* begin = v.data();
        if (begin != end && *begin == '+') ++begin;
        const auto [ptr, ec] = std::from_chars(begin, end, x);
        if (ec != std::errc() || ptr != end || !std::isfinite(x))
            throw ConfigError(ConfigErrorCode::BadValue, key, "expected a finite number, got '" + v + "'");
        return x;
    }

    static long long parse_integer(const std::string& v, const std::string& key) {
        long long x = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || ptr != v.data() + v.size())
            throw ConfigError(ConfigErrorCode::BadValue, key, "expected an integer, got '" + v + "'");
        return x;
    }

    const ConfigEcho& echo_;
    std::set<std::string> used_;
};

void require(bool condition, const std::string& key, const std::string& constraint) {
    if (!condition) throw ConfigError(ConfigErrorCode::ConstraintViolation, key, "constraint violated: " + constraint);
}

double positive(Reader& r, const std::string& section, const std::string& key) {
    const double v = r.required_number(section, key);
    require(v > 0.0, qualified(section, key), key + " > 0");
    return v;
}

double exponent(Reader& r, const std::string& section, const std::string& key) {
    const double v = r.required_number(section, key);
    require(v > -1.0, qualified(section, key), key + " > -1");
    return v;
}

int count(Reader& r, const std::string& section, const std::string& key, long long lo, long long hi) {
    const long long v = r.required_integer(section, key);
    require(v >= lo && v <= hi, qualified(section, key),
            std::to_string(lo) + " <= " + key + " <= " + std::to_string(hi));
    return static_cast<int>(v);
}

int copies(Reader& r) {
    const long long v = r.integer("spectrum", "copies").value_or(1);
    require(v >= 1 && v <= 4096, "spectrum.copies", "1 <= copies <= 4096");
    return static_cast<int>(v);
}

std::vector<double> required_numbers(Reader& r, const std::string& section, const std::string& key) {
    auto v = r.numbers(section, key);
    if (!v || v->empty())
        throw ConfigError(ConfigErrorCode::MissingKey, qualified(section, key), "required key is missing");
    return *v;
}

SpectrumFamily read_family(Reader& r) {
    const std::string family = r.required_text("spectrum", "family");
    if (family == "PowerLaw")
        return PowerLaw{positive(r, "spectrum", "C"), r.required_number("spectrum", "kappa"),
                        exponent(r, "spectrum", "eta"), copies(r)};
    if (family == "TwoTerm")
        return TwoTerm{positive(r, "spectrum", "C1"), r.required_number("spectrum", "kappa1"),
                       exponent(r, "spectrum", "eta1"), positive(r, "spectrum", "C2"),
                       r.required_number("spectrum", "kappa2"), exponent(r, "spectrum", "eta2"), copies(r)};
    if (family == "TwoLadder")
        return TwoLadder{positive(r, "spectrum", "delta_A"), positive(r, "spectrum", "delta_B"),
                         count(r, "spectrum", "M_A", 1, 100000), count(r, "spectrum", "M_B", 1, 100000)};
    if (family == "LinearEnsemble") {
        LinearEnsemble f;
        f.intercepts = required_numbers(r, "spectrum", "intercepts");
        return f;
    }
    if (family == "OscillatorLadder")
        return OscillatorLadder{count(r, "spectrum", "M", 1, 100000), count(r, "spectrum", "N", 1, 1000)};
    throw ConfigError(ConfigErrorCode::UnknownFamily, "spectrum.family",
                      "unknown family '" + family +
                          "' (expected PowerLaw, TwoTerm, TwoLadder, LinearEnsemble or OscillatorLadder)");
}

Experiment read_experiment(Reader& r) {
    const std::string e = r.required_text("", "experiment");
    if (e == "discrete_sweep") return Experiment::DiscreteSweep;
    if (e == "continuum_advect") return Experiment::ContinuumAdvect;
    if (e == "compare") return Experiment::Compare;
    if (e == "refine_entropy") return Experiment::RefineEntropy;
    if (e == "size_scaling") return Experiment::SizeScaling;
    throw ConfigError(ConfigErrorCode::UnknownExperiment, "experiment",
                      "unknown experiment '" + e +
                          "' (expected discrete_sweep, continuum_advect, compare, refine_entropy or size_scaling)");
}

bool power_sum_family(const SpectrumFamily& f) {
    return std::holds_alternative<PowerLaw>(f) || std::holds_alternative<TwoTerm>(f);
}

double along(const SweepSpec& s, double a) { return s.a_end >= s.a_start ? a : -a; }

ConfigEcho echo_of(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(ConfigErrorCode::Syntax, "line " + std::to_string(e.line()), e.message());
    }
    ConfigEcho echo;
    for (const auto& [key, node] : tree) {
        if (node.empty()) {
            echo[""][key] = trim(node.data());
        } else {
            auto& section = echo[key];
            for (const auto& [k, v] : node) {
                if (!v.empty())
                    throw ConfigError(ConfigErrorCode::Syntax, qualified(key, k), "nested sections are not supported");
                section[k] = trim(v.data());
            }
        }
    }
    return echo;
}

// ---------------------------------------------------------------------------
// Families used by the studies

std::function<SpectrumFamily(int)> level_generator(const SpectrumFamily& base) {
    if (const auto* t = std::get_if<TwoLadder>(&base)) {
        // Nested refinements: ladder tops fixed, spacing proportional to 1/M.
        const TwoLadder b = *t;
        return [b](int m) -> SpectrumFamily {
            return TwoLadder{b.delta_A * b.M_A / m, b.delta_B * b.M_B / m, m, m};
        };
    }
    if (const auto* o = std::get_if<OscillatorLadder>(&base)) {
        const int n = o->N;
        return [n](int m) -> SpectrumFamily { return OscillatorLadder{m, n}; };
    }
    throw ConfigError(ConfigErrorCode::ConstraintViolation, "spectrum.family",
                      "refine_entropy needs TwoLadder or OscillatorLadder");
}

std::function<SpectrumFamily(int)> size_generator(const SpectrumFamily& base) {
    if (const auto* p = std::get_if<PowerLaw>(&base)) {
        const PowerLaw b = *p;
        return [b](int n) -> SpectrumFamily { return PowerLaw{b.C, b.kappa, b.eta, n}; };
    }
    if (const auto* t = std::get_if<TwoTerm>(&base)) {
        const TwoTerm b = *t;
        return [b](int n) -> SpectrumFamily {
            return TwoTerm{b.C1, b.kappa1, b.eta1, b.C2, b.kappa2, b.eta2, n};
        };
    }
    throw ConfigError(ConfigErrorCode::ConstraintViolation, "spectrum.family",
                      "size_scaling needs PowerLaw or TwoTerm");
}

// ---------------------------------------------------------------------------
// Runners

using Files = std::map<std::string, std::string>;

std::string shortest(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string distribution_name(double a) { return "distribution_" + shortest(a) + ".csv"; }


ScanOptions scan_options(const Scenario& s) {
    return {s.numerics.scan_samples, std::max<std::size_t>(std::size_t{1} << 20, s.numerics.scan_samples)};
}

ProbabilityState discrete_initial(const Scenario& s, const DiscreteSpectrum& spectrum) {
    switch (s.initial.kind) {
    case InitialKind::Canonical:
        return canonical_init(spectrum, s.sweep.a_start, s.initial.temperature);
    case InitialKind::Uniform:
        return uniform_init(spectrum);
    case InitialKind::CustomTable: {
        auto ids = spectrum.ids();
        std::vector<int> sorted = ids;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> w(ids.size());
        for (std::size_t j = 0; j < ids.size(); ++j) {
            const auto rank = std::lower_bound(sorted.begin(), sorted.end(), ids[j]) - sorted.begin();
            w[j] = s.initial.w[static_cast<std::size_t>(rank)];
        }
        return ProbabilityState::for_spectrum(spectrum, std::move(w));
    }
    }
    throw Error(ErrorKind::Domain, "unhandled initial kind");
}

// State just after every event at or before `a` (right-continuous).
ProbabilityState state_at(const DiscreteSpectrum& spectrum, const ProbabilityState& initial,
                          const CrossingSchedule& schedule, double a) {
    CrossingSchedule head = schedule;
    const double d = spectrum.sweep().direction();
    head.events.erase(std::remove_if(head.events.begin(), head.events.end(),
                                     [&](const Crossing& c) { return d * c.a_star > d * a; }),
                      head.events.end());
    return sweep_adiabatic(spectrum, initial, head).final_state;
}

json run_discrete_sweep(const Scenario& s, Files& files) {
    const DiscreteSpectrum spectrum = discrete_spectrum(s.spectrum, Sweep{s.sweep.a_start, s.sweep.a_end});
    const auto initial = discrete_initial(s, spectrum);
    const auto schedule = find_crossings(spectrum, s.numerics.detection_tol, scan_options(s));
    const auto result = sweep_adiabatic(spectrum, initial, schedule, s.sweep.checkpoints);
    for (const double a : s.sweep.checkpoints)
        files[distribution_name(a)] = state_csv(state_at(spectrum, initial, schedule, a), spectrum, a);

    auto ledger = result.ledger;
    auto trajectory = result.trajectory;
    json summary = {
        {"levels", spectrum.size()},
        {"crossings", schedule.events.size()},
        {"merged_events", schedule.merged_count()},
        {"total_delta_s", result.total_delta_s},
        {"entropy_initial", entropy(initial)},
        {"entropy_final", entropy(result.final_state)},
        {"normalization_drift", std::abs(result.final_state.total_probability() - 1.0)},
    };
    if (s.sweep.round_trip) {
        const DiscreteSpectrum back = spectrum.reversed();
        const auto back_schedule = find_crossings(back, s.numerics.detection_tol, scan_options(s));
        std::vector<double> marks(s.sweep.checkpoints.rbegin(), s.sweep.checkpoints.rend());
        const auto back_result = sweep_adiabatic(back, align_state(result.final_state, back), back_schedule, marks);
        ledger.insert(ledger.end(), back_result.ledger.begin(), back_result.ledger.end());
        trajectory.insert(trajectory.end(), back_result.trajectory.begin(), back_result.trajectory.end());
        summary["round_trip"] = {
            {"crossings_return", back_schedule.events.size()},
            {"total_delta_s", result.total_delta_s + back_result.total_delta_s},
            {"l1_distance_to_initial", l1_distance(back_result.final_state, initial)},
            {"entropy_final", entropy(back_result.final_state)},
        };
    }
    files["ledger.csv"] = ledger_csv(ledger);
    files["trajectory.csv"] = trajectory_csv(trajectory);
    return summary;
}

ContinuumDistribution continuum_initial(const Scenario& s, std::shared_ptr<const ContinuumDos> dos) {
    if (s.initial.kind == InitialKind::Uniform)
        return uniform_distribution(std::move(dos), s.sweep.a_start, s.initial.e_max, s.numerics.solver);
    return canonical_distribution(std::move(dos), s.sweep.a_start, s.initial.temperature, s.numerics.solver);
}

json run_continuum_advect(const Scenario& s, Files& files) {
    const auto dos = analytic_dos(s.spectrum);
    const auto initial = continuum_initial(s, dos);
    const double s0 = continuum_entropy(initial);
    std::vector<TrajectorySample> trajectory;
    json checkpoints = json::array();
    double max_entropy_drift = 0.0;
    for (const double a : s.sweep.checkpoints) {
        const auto d = advect(initial, a, s.numerics.solver, s.numerics.method);
        files[distribution_name(a)] = distribution_csv(d);
        const auto m = continuum_moments(d);
        const double sa = continuum_entropy(d);
        trajectory.push_back({a, sa, m.mean, m.variance});
        const auto fit = canonical_fit(d);
        max_entropy_drift = std::max(max_entropy_drift, std::abs(sa - s0) / std::abs(s0));
        checkpoints.push_back({{"a", a},
                               {"mass", d.mass()},
                               {"entropy", sa},
                               {"mean", m.mean},
                               {"variance", m.variance},
                               {"log_w_slope", fit.slope},
                               {"log_w_max_residual", fit.max_abs_residual}});
    }
    files["trajectory.csv"] = trajectory_csv(trajectory);
    json summary = {{"entropy_initial", s0}, {"max_relative_entropy_drift", max_entropy_drift},
                    {"grid_nodes", s.numerics.solver.grid_nodes}, {"checkpoints", checkpoints}};
    if (s.sweep.round_trip) {
        const auto out = advect(initial, s.sweep.a_end, s.numerics.solver, s.numerics.method);
        const auto back = advect_onto(out, s.sweep.a_start, initial.grid(), s.numerics.solver, s.numerics.method);
        const auto w0 = initial.w();
        const auto w1 = back.w();
        double diff = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < w0.size(); ++i) {
            diff = std::max(diff, std::abs(w1[i] - w0[i]));
            peak = std::max(peak, w0[i]);
        }
        summary["round_trip"] = {{"linf_relative", diff / peak}, {"entropy_return", continuum_entropy(back)}};
    }
    return summary;
}

std::string comparison_snapshot(const ContinuumDistribution& d, const ComparisonRow& row) {
    csv::Table table({"epsilon", "G", "w", "w_zp"});
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double eps = d.grid()[i];
        table.cell(eps).cell(d.dos()->g(eps, d.a())).cell(std::exp(d.log_w()[i]))
            .cell(std::exp(-eps / row.temperature - row.log_z_zp));
        table.end_row();
    }
    return table.str();
}

std::string discrete_snapshot(const ProbabilityState& ad, const ProbabilityState& zp, const DiscreteSpectrum& spectrum,
                              double a) {
    const auto e = spectrum.energies(a);
    csv::Table table({"level_id", "energy", "degeneracy", "w", "w_zp"});
    for (std::size_t j = 0; j < ad.size(); ++j) {
        table.cell(ad.ids()[j]).cell(e[j]).cell(ad.degeneracies()[j]).cell(ad.w()[j]).cell(zp.w()[j]);
        table.end_row();
    }
    return table.str();
}

CompareOptions compare_options(const Scenario& s) {
    CompareOptions o;
    o.numerics = s.numerics.solver;
    o.bracket = s.numerics.bracket;
    o.detection_tol = s.numerics.detection_tol;
    o.method = s.numerics.method;
    return o;
}

json run_compare(const Scenario& s, Files& files) {
    const auto cmp = compare_processes(s.spectrum, s.sweep.a_start, s.initial.temperature, s.sweep.checkpoints,
                                       compare_options(s));
    files["comparison.csv"] = comparison_csv(cmp);
    if (!cmp.adiabatic.empty()) {
        for (std::size_t k = 0; k < cmp.rows.size(); ++k)
            files[distribution_name(cmp.rows[k].a)] = comparison_snapshot(cmp.adiabatic[k], cmp.rows[k]);
    } else {
        const auto& spectrum = *cmp.spectrum;
        const auto initial = canonical_init(spectrum, s.sweep.a_start, s.initial.temperature);
        const auto schedule = find_crossings(spectrum, s.numerics.detection_tol, scan_options(s));
        for (const auto& row : cmp.rows)
            files[distribution_name(row.a)] =
                discrete_snapshot(state_at(spectrum, initial, schedule, row.a),
                                  canonical_init(spectrum, row.a, row.temperature), spectrum, row.a);
        files["ledger.csv"] = ledger_csv(cmp.sweep->ledger);
    }

    double max_gap = 0.0;
    for (const auto& r : cmp.rows) max_gap = std::max(max_gap, std::abs(r.e_ad - r.e_zp) / std::abs(r.e_zp));
    const auto& last = cmp.rows.back();
    const double c0 = std::pow(last.de_ad_predicted / last.temperature, 2);
    const double to_ad = std::abs(last.de_ad_measured - last.de_ad_predicted);
    const double to_zp = std::abs(last.de_ad_measured - last.de_zp_predicted);
    return {
        {"representation", cmp.adiabatic.empty() ? "discrete" : "continuum"},
        {"max_relative_mean_gap", max_gap},
        {"delta_s_total", cmp.delta_s_total},
        {"final",
         {{"a", last.a},
          {"T", last.temperature},
          {"c_a_initial", c0},
          {"c_a_final", last.c_a},
          {"dE_ad_measured", last.de_ad_measured},
          {"dE_ad_predicted", last.de_ad_predicted},
          {"dE_zp_predicted", last.de_zp_predicted},
          {"dE_zp_measured", last.de_zp_measured},
          {"relative_error_vs_adiabatic_prediction", to_ad / last.de_ad_predicted},
          {"closer_to", to_ad < to_zp ? "adiabatic_prediction" : "zero_polytropic_prediction"}}},
    };
}

json run_refine(const Scenario& s, Files& files) {
    RefineOptions o;
    o.temperature = s.initial.temperature;
    o.sweep = Sweep{s.sweep.a_start, s.sweep.a_end};
    o.detection_tol = s.numerics.detection_tol;
    o.numerics = s.numerics.solver;
    const auto rows = refine_study(level_generator(s.spectrum), s.study.levels, o);
    files["scaling.csv"] = refine_csv(rows);

    bool ds_decreasing = true, distance_decreasing = true, all_positive = true;
    std::vector<double> x, y;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (k > 0) {
            ds_decreasing = ds_decreasing && rows[k].total_delta_s < rows[k - 1].total_delta_s;
            distance_decreasing = distance_decreasing && rows[k].distance_to_continuum < rows[k - 1].distance_to_continuum;
        }
        all_positive = all_positive && rows[k].total_delta_s > 0.0;
        x.push_back(rows[k].spacing);
        y.push_back(rows[k].total_delta_s);
    }
    json summary = {{"levels", s.study.levels},
                    {"total_delta_s_strictly_decreasing", ds_decreasing},
                    {"distance_strictly_decreasing", distance_decreasing}};
    summary["delta_s_spacing_slope"] = all_positive && rows.size() >= 2 ? json(numerics::loglog_slope(x, y)) : json(nullptr);
    return summary;
}

json run_size_scaling(const Scenario& s, Files& files) {
    std::vector<int> sizes(s.study.sizes.begin(), s.study.sizes.end());
    const auto study = size_scaling_study(size_generator(s.spectrum), sizes, s.sweep.a_start, s.initial.temperature,
                                          s.sweep.a_end, compare_options(s));
    files["scaling.csv"] = scaling_csv(study);
    json gaps = json::array();
    for (const auto& r : study.rows) gaps.push_back(r.relative_gap);
    return {{"sizes", s.study.sizes},
            {"relative_gaps", gaps},
            {"gap_slope", study.slope ? json(*study.slope) : json(nullptr)}};
}

// Error text without the kind prefix the constructor adds.
std::string bare_message(const Error& e) {
    const std::string what = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

json echo_json(const ConfigEcho& echo) {
    json j = json::object();
    for (const auto& [section, keys] : echo) {
        if (section.empty()) {
            for (const auto& [k, v] : keys) j[k] = v;
        } else {
            for (const auto& [k, v] : keys) j[section][k] = v;
        }
    }
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Experiment experiment) {
    switch (experiment) {
    case Experiment::DiscreteSweep: return "discrete_sweep";
    case Experiment::ContinuumAdvect: return "continuum_advect";
    case Experiment::Compare: return "compare";
    case Experiment::RefineEntropy: return "refine_entropy";
    case Experiment::SizeScaling: return "size_scaling";
    }
    return "unknown";
}

Scenario parse_scenario(std::string_view text) {
    Scenario s;
    s.echo = echo_of(text);
    for (const auto& [section, keys] : s.echo) {
        static const std::set<std::string> known{"", "spectrum", "initial", "sweep", "numerics", "study", "output"};
        if (!known.count(section))
            throw ConfigError(ConfigErrorCode::BadValue, section, "unknown section [" + section + "]");
    }
    Reader r(s.echo);
    s.name = r.required_text("", "name");
    require(s.name.find_first_of("/\\") == std::string::npos && s.name != "." && s.name != "..", "name",
            "name must be a plain file name");
    s.experiment = read_experiment(r);
    s.spectrum = read_family(r);
    if (auto* le = std::get_if<LinearEnsemble>(&s.spectrum)) {
        le->slopes = required_numbers(r, "spectrum", "slopes");
        if (const auto g = r.integers("spectrum", "degeneracies"))
            for (const long long x : *g) {
                require(x >= 1 && x <= 1000000000, "spectrum.degeneracies", "degeneracies >= 1");
                le->degeneracies.push_back(static_cast<int>(x));
            }
        require(le->slopes.size() == le->intercepts.size(), "spectrum.slopes", "one slope per intercept");
        require(le->degeneracies.empty() || le->degeneracies.size() == le->intercepts.size(),
                "spectrum.degeneracies", "one degeneracy per intercept");
    }

    // sweep
    s.sweep.a_start = r.required_number("sweep", "a_start");
    s.sweep.a_end = r.required_number("sweep", "a_end");
    require(s.sweep.a_start != s.sweep.a_end, "sweep.a_end", "a_start != a_end");
    if (power_sum_family(s.spectrum) || std::holds_alternative<TwoLadder>(s.spectrum))
        require(s.sweep.a_start > 0.0 && s.sweep.a_end > 0.0, "sweep.a_start", "a > 0 for this family");
    s.sweep.checkpoints = r.numbers("sweep", "checkpoints").value_or(std::vector<double>{s.sweep.a_start, s.sweep.a_end});
    const double lo = std::min(s.sweep.a_start, s.sweep.a_end), hi = std::max(s.sweep.a_start, s.sweep.a_end);
    for (const double a : s.sweep.checkpoints)
        require(a >= lo && a <= hi, "sweep.checkpoints", "checkpoints within [min(a_start, a_end), max(a_start, a_end)]");
    s.sweep.round_trip = r.flag("sweep", "round_trip", false);

    // initial
    const std::string kind = r.text("initial", "kind").value_or("canonical");
    if (kind == "canonical") {
        s.initial.kind = InitialKind::Canonical;
        s.initial.temperature = r.required_number("initial", "T0");
        require(s.initial.temperature > 0.0, "initial.T0", "T0 > 0");
    } else if (kind == "uniform") {
        s.initial.kind = InitialKind::Uniform;
        if (has_continuum_form(s.spectrum) && s.experiment == Experiment::ContinuumAdvect)
            s.initial.e_max = positive(r, "initial", "e_max");
    } else if (kind == "custom_table") {
        s.initial.kind = InitialKind::CustomTable;
        s.initial.w = required_numbers(r, "initial", "w");
    } else {
        throw ConfigError(ConfigErrorCode::BadValue, "initial.kind",
                          "expected canonical, uniform or custom_table, got '" + kind + "'");
    }

    // numerics
    auto& n = s.numerics;
    n.solver.ode_rel_tol = r.number("numerics", "ode_rel_tol", n.solver.ode_rel_tol);
    n.solver.ode_abs_tol = r.number("numerics", "ode_abs_tol", n.solver.ode_abs_tol);
    n.solver.tail_tol = r.number("numerics", "tail_tol", n.solver.tail_tol);
    n.detection_tol = r.number("numerics", "detection_tol", n.detection_tol);
    require(n.solver.ode_rel_tol > 0.0, "numerics.ode_rel_tol", "ode_rel_tol > 0");
    require(n.solver.ode_abs_tol > 0.0, "numerics.ode_abs_tol", "ode_abs_tol > 0");
    require(n.solver.tail_tol > 0.0 && n.solver.tail_tol < 1e-3, "numerics.tail_tol", "0 < tail_tol < 1e-3");
    require(n.detection_tol > 0.0, "numerics.detection_tol", "detection_tol > 0");
    if (const auto g = r.integer("numerics", "grid_nodes")) {
        require(*g >= 16 && *g <= 10000000, "numerics.grid_nodes", "16 <= grid_nodes <= 1e7");
        n.solver.grid_nodes = static_cast<std::size_t>(*g);
    }
    if (const auto k = r.integer("numerics", "scan_samples")) {
        require(*k >= 3 && *k <= (1LL << 24), "numerics.scan_samples", "3 <= scan_samples <= 2^24");
        n.scan_samples = static_cast<std::size_t>(*k);
    }
    if (const auto b = r.numbers("numerics", "temperature_bracket")) {
        require(b->size() == 2 && (*b)[0] > 0.0 && (*b)[1] > (*b)[0], "numerics.temperature_bracket",
                "two factors 0 < lo < hi");
        n.bracket = {(*b)[0], (*b)[1]};
    }
    const std::string method = r.text("numerics", "method").value_or("ode");
    if (method == "ode") n.method = TransportMethod::Ode;
    else if (method == "phi_inversion") n.method = TransportMethod::PhiInversion;
    else throw ConfigError(ConfigErrorCode::BadValue, "numerics.method", "expected ode or phi_inversion");

    s.output_dir = r.text("output", "dir").value_or("");

    // experiment-specific constraints
    const std::string family = family_name(s.spectrum);
    switch (s.experiment) {
    case Experiment::DiscreteSweep:
        require(has_discrete_form(s.spectrum), "spectrum.family", "discrete_sweep needs a discrete family");
        break;
    case Experiment::ContinuumAdvect:
        require(has_continuum_form(s.spectrum), "spectrum.family", "continuum_advect needs a continuum family");
        require(s.initial.kind != InitialKind::CustomTable, "initial.kind", "continuum starts are canonical or uniform");
        break;
    case Experiment::Compare: {
        require(s.initial.kind == InitialKind::Canonical, "initial.kind", "compare starts canonical");
        for (std::size_t k = 1; k < s.sweep.checkpoints.size(); ++k)
            require(along(s.sweep, s.sweep.checkpoints[k]) >= along(s.sweep, s.sweep.checkpoints[k - 1]),
                    "sweep.checkpoints", "checkpoints ordered from a_start towards a_end");
        break;
    }
    case Experiment::RefineEntropy: {
        require(s.initial.kind == InitialKind::Canonical, "initial.kind", "refine_entropy starts canonical");
        const auto levels = r.integers("study", "levels");
        if (!levels || levels->empty())
            throw ConfigError(ConfigErrorCode::MissingKey, "study.levels", "required key is missing");
        for (std::size_t k = 0; k < levels->size(); ++k) {
            require((*levels)[k] >= 1 && (*levels)[k] <= 100000, "study.levels", "1 <= level count <= 1e5");
            require(k == 0 || (*levels)[k] > (*levels)[k - 1], "study.levels", "level counts increasing");
            s.study.levels.push_back(static_cast<int>((*levels)[k]));
        }
        level_generator(s.spectrum);
        break;
    }
    case Experiment::SizeScaling: {
        require(s.initial.kind == InitialKind::Canonical, "initial.kind", "size_scaling starts canonical");
        const auto sizes = r.integers("study", "sizes");
        if (!sizes || sizes->empty())
            throw ConfigError(ConfigErrorCode::MissingKey, "study.sizes", "required key is missing");
        for (std::size_t k = 0; k < sizes->size(); ++k) {
            require((*sizes)[k] >= 1 && (*sizes)[k] <= 4096, "study.sizes", "1 <= N <= 4096");
            require(k == 0 || (*sizes)[k] > (*sizes)[k - 1], "study.sizes", "sizes increasing");
            s.study.sizes.push_back(static_cast<int>((*sizes)[k]));
        }
        size_generator(s.spectrum);
        break;
    }
    }
    r.reject_unknown();

    // Discrete families must build over the sweep (non-negative energies) and
    // custom tables must match and normalize on them.
    if (has_discrete_form(s.spectrum) && s.experiment != Experiment::RefineEntropy) {
        std::optional<DiscreteSpectrum> spectrum;
        try {
            spectrum.emplace(discrete_spectrum(s.spectrum, Sweep{s.sweep.a_start, s.sweep.a_end}));
        } catch (const Error& e) {
            throw ConfigError(ConfigErrorCode::ConstraintViolation, "spectrum", e.what());
        }
        if (s.initial.kind == InitialKind::CustomTable) {
            require(s.initial.w.size() == spectrum->size(), "initial.w",
                    "one w per level (" + std::to_string(spectrum->size()) + " levels)");
            auto ids = spectrum->ids();
            auto g = spectrum->degeneracies();
            std::vector<std::pair<int, int>> by_id;
            for (std::size_t j = 0; j < ids.size(); ++j) by_id.emplace_back(ids[j], g[j]);
            std::sort(by_id.begin(), by_id.end());
            double total = 0.0;
            for (std::size_t k = 0; k < by_id.size(); ++k) {
                require(s.initial.w[k] >= 0.0, "initial.w", "w >= 0");
                total += by_id[k].second * s.initial.w[k];
            }
            require(std::abs(total - 1.0) <= ProbabilityState::kNormTolerance, "initial.w",
                    "normalization sum g_j w_j = 1 (got " + csv::format_number(total) + ")");
        }
    } else if (s.initial.kind == InitialKind::CustomTable) {
        require(false, "initial.kind", "custom_table needs a discrete family");
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(ConfigErrorCode::Syntax, path.string(), "cannot read config file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

std::filesystem::path default_output_root() {
    if (const char* env = std::getenv("ADIABAT_OUT"); env && *env) return env;
    return "adiabat_out";
}

std::filesystem::path resolve_output_dir(const Scenario& scenario, const std::optional<std::filesystem::path>& cli_out) {
    if (cli_out) return *cli_out;
    if (!scenario.output_dir.empty()) return scenario.output_dir;
    return default_output_root() / scenario.name;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

RunManifest run_scenario(const Scenario& s, const std::filesystem::path& directory) {
    const auto started = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.scenario = s.name;
    manifest.directory = directory;
    manifest.version = ADIABAT_VERSION;
    manifest.timestamp = utc_timestamp();

    Files files;
    json summary;
    try {
        switch (s.experiment) {
        case Experiment::DiscreteSweep: summary = run_discrete_sweep(s, files); break;
        case Experiment::ContinuumAdvect: summary = run_continuum_advect(s, files); break;
        case Experiment::Compare: summary = run_compare(s, files); break;
        case Experiment::RefineEntropy: summary = run_refine(s, files); break;
        case Experiment::SizeScaling: summary = run_size_scaling(s, files); break;
        }
    } catch (const DomainExitError& e) {
        throw DomainExitError(e.a_exit(), "scenario '" + s.name + "': " + bare_message(e));
    } catch (const Error& e) {
        throw Error(e.kind(), "scenario '" + s.name + "': " + bare_message(e));
    }
    summary["scenario"] = s.name;
    summary["experiment"] = std::string(to_string(s.experiment));
    summary["family"] = family_name(s.spectrum);
    files["summary.json"] = summary.dump(2) + "\n";

    std::filesystem::create_directories(directory);
    for (const auto& [name, bytes] : files) {
        write_file(directory / name, bytes);
        manifest.files.push_back({name, sha256_hex(bytes), bytes.size()});
    }
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json m = {{"tool", "adiabat"},
              {"version", manifest.version},
              {"scenario", s.name},
              {"experiment", std::string(to_string(s.experiment))},
              {"config", echo_json(s.echo)},
              {"started_at", manifest.timestamp},
              {"duration_seconds", manifest.duration_seconds}};
    json list = json::array();
    for (const auto& f : manifest.files) list.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    m["files"] = list;
    write_file(directory / "manifest.json", m.dump(2) + "\n");
    return manifest;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const Error*>(&e)) return 3;
    return 1;
}

bool SuiteResult::ok() const {
    return std::all_of(entries.begin(), entries.end(), [](const SuiteEntry& e) { return e.exit_code == 0; });
}

int SuiteResult::exit_code() const {
    for (const auto& e : entries)
        if (e.exit_code != 0) return e.exit_code;
    return 0;
}

SuiteResult run_suite(const std::filesystem::path& config_dir, const std::filesystem::path& out_root, int jobs) {
    if (jobs < 1) throw ConfigError(ConfigErrorCode::BadValue, "jobs", "--jobs must be >= 1");
    if (!std::filesystem::is_directory(config_dir))
        throw ConfigError(ConfigErrorCode::Syntax, config_dir.string(), "not a directory");
    std::vector<std::filesystem::path> configs;
    for (const auto& entry : std::filesystem::directory_iterator(config_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ini") configs.push_back(entry.path());
    std::sort(configs.begin(), configs.end());

    SuiteResult result;
    result.entries.resize(configs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t k = next++; k < configs.size(); k = next++) {
            auto& entry = result.entries[k];
            entry.config = configs[k];
            try {
                const auto s = load_scenario(configs[k]);
                entry.manifest = run_scenario(s, out_root / configs[k].stem());
            } catch (const std::exception& e) {
                entry.error = e.what();
                entry.exit_code = exit_code_for(e);
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(configs.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    json index = json::array();
    for (const auto& e : result.entries) {
        json item = {{"config", e.config.filename().string()},
                     {"directory", e.config.stem().string()},
                     {"status", e.exit_code == 0 ? "ok" : "failed"},
                     {"exit_code", e.exit_code}};
        if (e.manifest) {
            json files = json::array();
            for (const auto& f : e.manifest->files) files.push_back({{"name", f.name}, {"sha256", f.sha256}});
            item["scenario"] = e.manifest->scenario;
            item["files"] = files;
        } else {
            item["error"] = e.error;
        }
        index.push_back(item);
    }
    std::filesystem::create_directories(out_root);
    write_file(out_root / "index.json", json{{"scenarios", index}}.dump(2) + "\n");
    return result;
}

}  // namespace adiabat
