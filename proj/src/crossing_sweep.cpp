#include "adiabat/crossing_sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "adiabat/csv.hpp"
#include "adiabat/errors.hpp"

namespace adiabat {

namespace {

struct PairCrossing {
    double a = 0.0;
    int id1 = 0;  // id1 < id2
    int id2 = 0;
};

// Position along the sweep direction; events are ordered by this key.
double along(const Sweep& sweep, double a) { return sweep.direction() * a; }

void add_if_inside(std::vector<double>& roots, const Sweep& sweep, double a) {
    if (!std::isfinite(a) || !sweep.contains(a)) return;
    roots.push_back(std::clamp(a, sweep.lo(), sweep.hi()));
}

// Closed-form roots of b1 + m1 a = b2 + m2 a. nullopt when the tracks coincide.
std::optional<std::vector<double>> affine_affine(const AffineForm& p, const AffineForm& q, const Sweep& sweep) {
    std::vector<double> roots;
    const double dm = p.slope - q.slope;
    const double db = q.intercept - p.intercept;
    if (dm == 0.0) {
        if (db == 0.0) return std::nullopt;
        return roots;
    }
    add_if_inside(roots, sweep, db / dm);
    return roots;
}

// b + m a = c / a  <=>  m a^2 + b a - c = 0, a > 0.
std::optional<std::vector<double>> affine_reciprocal(const AffineForm& p, const ReciprocalForm& r, const Sweep& sweep) {
    std::vector<double> roots;
    const double m = p.slope, b = p.intercept, c = r.coef;
    if (m == 0.0) {
        if (b == 0.0) {
            if (c == 0.0) return std::nullopt;
            return roots;
        }
        if (c / b > 0.0) add_if_inside(roots, sweep, c / b);
        return roots;
    }
    const double disc = b * b + 4.0 * m * c;
    if (disc < 0.0) return roots;
    if (disc == 0.0) {
        const double a = -b / (2.0 * m);
        if (a > 0.0) add_if_inside(roots, sweep, a);
        return roots;
    }
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    for (const double a : {q / m, q != 0.0 ? -c / q : std::numeric_limits<double>::quiet_NaN()})
        if (a > 0.0) add_if_inside(roots, sweep, a);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return roots;
}

std::size_t count_roots(const LevelTrack& p, const LevelTrack& q, const Sweep& sweep, std::size_t samples,
                        double tol, std::vector<double>* roots, bool* identical) {
    const double lo = sweep.lo(), hi = sweep.hi();
    const double step = (hi - lo) / static_cast<double>(samples - 1);
    const auto diff = [&](double a) { return p.energy(a) - q.energy(a); };
    std::size_t count = 0, zeros = 0;
    double a_prev = lo, d_prev = diff(lo);
    if (d_prev == 0.0) {
        ++count;
        ++zeros;
        if (roots) roots->push_back(lo);
    }
    for (std::size_t k = 1; k < samples; ++k) {
        const double a = k + 1 == samples ? hi : lo + static_cast<double>(k) * step;
        const double d = diff(a);
        if (d == 0.0) {
            ++count;
            ++zeros;
            if (roots) roots->push_back(a);
        } else if (d_prev != 0.0 && (d < 0.0) != (d_prev < 0.0)) {
            ++count;
            if (roots) {
                double x0 = a_prev, x1 = a, f0 = d_prev;
                for (int it = 0; it < 200 && x1 - x0 > 0.5 * tol; ++it) {
                    const double mid = 0.5 * (x0 + x1);
                    const double fm = diff(mid);
                    if (fm == 0.0) {
                        x0 = x1 = mid;
                        break;
                    }
                    if ((fm < 0.0) == (f0 < 0.0)) {
                        x0 = mid;
                        f0 = fm;
                    } else {
                        x1 = mid;
                    }
                }
                roots->push_back(0.5 * (x0 + x1));
            }
        }
        a_prev = a;
        d_prev = d;
    }
    if (identical) *identical = zeros == samples;
    return count;
}

// Sign-change scan, doubled until two successive resolutions agree.
std::optional<std::vector<double>> scanned(const LevelTrack& p, const LevelTrack& q, const Sweep& sweep, double tol,
                                           const ScanOptions& scan) {
    std::size_t n = std::max<std::size_t>(scan.initial_samples, 3);
    bool identical = false;
    std::size_t previous = count_roots(p, q, sweep, n, tol, nullptr, &identical);
    if (identical) return std::nullopt;
    while (true) {
        const std::size_t finer = 2 * n - 1;
        if (finer > scan.max_samples)
            throw Error(ErrorKind::Resolution, "crossing scan of tracks " + std::to_string(p.id) + " and " +
                                                   std::to_string(q.id) + " did not settle within " +
                                                   std::to_string(scan.max_samples) +
                                                   " samples; raise scan_samples or simplify the tracks");
        const std::size_t current = count_roots(p, q, sweep, finer, tol, nullptr, &identical);
        n = finer;
        if (current == previous) break;
        previous = current;
    }
    std::vector<double> roots;
    count_roots(p, q, sweep, n, tol, &roots, nullptr);
    return roots;
}

std::optional<std::vector<double>> pair_roots(const LevelTrack& p, const LevelTrack& q, const Sweep& sweep,
                                              double tol, const ScanOptions& scan) {
    const auto* pa = std::get_if<AffineForm>(&p.form);
    const auto* qa = std::get_if<AffineForm>(&q.form);
    const auto* pr = std::get_if<ReciprocalForm>(&p.form);
    const auto* qr = std::get_if<ReciprocalForm>(&q.form);
    if (pa && qa) return affine_affine(*pa, *qa, sweep);
    if (pa && qr) return affine_reciprocal(*pa, *qr, sweep);
    if (pr && qa) return affine_reciprocal(*qa, *pr, sweep);
    if (pr && qr) {
        if (pr->coef == qr->coef) return std::nullopt;
        return std::vector<double>{};
    }
    return scanned(p, q, sweep, tol, scan);
}

void verify_crossing(const LevelTrack& p, const LevelTrack& q, double a, double tol) {
    const double ep = p.energy(a), eq = q.energy(a);
    const double allowed = tol * (std::abs(p.slope(a)) + std::abs(q.slope(a))) +
                           1e-12 * std::max({1.0, std::abs(ep), std::abs(eq)});
    if (!(std::abs(ep - eq) <= allowed))
        throw Error(ErrorKind::Resolution, "crossing of tracks " + std::to_string(p.id) + " and " +
                                               std::to_string(q.id) + " at a = " + csv::format_number(a) +
                                               " misses by " + csv::format_number(std::abs(ep - eq)));
}

void crossings_of_row(const DiscreteSpectrum& spectrum, std::size_t i, double tol, const ScanOptions& scan,
                      std::vector<PairCrossing>& out) {
    const auto& tracks = spectrum.tracks();
    const Sweep& sweep = spectrum.sweep();
    for (std::size_t j = i + 1; j < tracks.size(); ++j) {
        const auto& p = tracks[i];
        const auto& q = tracks[j];
        const auto roots = pair_roots(p, q, sweep, tol, scan);
        const int lo_id = std::min(p.id, q.id), hi_id = std::max(p.id, q.id);
        if (!roots) {
            // Coincident tracks are one degenerate level from the start.
            out.push_back({sweep.a_start, lo_id, hi_id});
            continue;
        }
        for (const double a : *roots) {
            verify_crossing(p, q, a, tol);
            out.push_back({a, lo_id, hi_id});
        }
    }
}

int find_root(std::vector<int>& parent, int x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

CrossingSchedule group(const DiscreteSpectrum& spectrum, std::vector<PairCrossing> pairs, double tol) {
    const Sweep& sweep = spectrum.sweep();
    std::sort(pairs.begin(), pairs.end(), [&](const PairCrossing& x, const PairCrossing& y) {
        const double kx = along(sweep, x.a), ky = along(sweep, y.a);
        if (kx != ky) return kx < ky;
        if (x.id1 != y.id1) return x.id1 < y.id1;
        return x.id2 < y.id2;
    });

    std::vector<int> parent(pairs.size());
    std::iota(parent.begin(), parent.end(), 0);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        for (std::size_t q = p + 1; q < pairs.size(); ++q) {
            if (along(sweep, pairs[q].a) - along(sweep, pairs[p].a) > tol) break;
            const bool share = pairs[p].id1 == pairs[q].id1 || pairs[p].id1 == pairs[q].id2 ||
                               pairs[p].id2 == pairs[q].id1 || pairs[p].id2 == pairs[q].id2;
            if (!share) continue;
            const int rp = find_root(parent, static_cast<int>(p)), rq = find_root(parent, static_cast<int>(q));
            if (rp != rq) parent[std::max(rp, rq)] = std::min(rp, rq);
        }
    }

    // Components keyed by their first (smallest-index) member, so the output
    // order follows the sorted pair order.
    std::vector<int> slot(pairs.size(), -1);
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const int r = find_root(parent, static_cast<int>(p));
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(members.size());
            members.emplace_back();
        }
        members[slot[r]].push_back(p);
    }

    CrossingSchedule schedule;
    schedule.sweep = sweep;
    schedule.detection_tol = tol;
    for (const auto& group_members : members) {
        Crossing c;
        double sum = 0.0;
        for (const std::size_t p : group_members) {
            sum += pairs[p].a;
            c.level_ids.push_back(pairs[p].id1);
            c.level_ids.push_back(pairs[p].id2);
        }
        c.a_star = std::clamp(sum / static_cast<double>(group_members.size()), sweep.lo(), sweep.hi());
        std::sort(c.level_ids.begin(), c.level_ids.end());
        c.level_ids.erase(std::unique(c.level_ids.begin(), c.level_ids.end()), c.level_ids.end());
        c.merged = group_members.size() > 1;
        schedule.events.push_back(std::move(c));
    }
    std::stable_sort(schedule.events.begin(), schedule.events.end(), [&](const Crossing& x, const Crossing& y) {
        const double kx = along(sweep, x.a_star), ky = along(sweep, y.a_star);
        if (kx != ky) return kx < ky;
        return x.level_ids.front() < y.level_ids.front();
    });
    return schedule;
}

void check_tolerance(double tol) {
    if (!(tol > 0.0) || !std::isfinite(tol)) throw Error(ErrorKind::Domain, "detection_tol must be > 0");
}

}  // namespace

std::size_t CrossingSchedule::merged_count() const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const Crossing& c) {
        return c.merged;
    }));
}

CrossingSchedule find_crossings(const DiscreteSpectrum& spectrum, double detection_tol, const ScanOptions& scan) {
    check_tolerance(detection_tol);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(spectrum.size());
    std::vector<std::vector<PairCrossing>> rows(spectrum.size());
    std::exception_ptr error;
    std::ptrdiff_t error_row = n;

#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            crossings_of_row(spectrum, static_cast<std::size_t>(i), detection_tol, scan, rows[i]);
        } catch (...) {
#pragma omp critical(adiabat_crossing_error)
            {
                if (i < error_row) {
                    error_row = i;
                    error = std::current_exception();
                }
            }
        }
    }
    if (error) std::rethrow_exception(error);

    std::vector<PairCrossing> pairs;
    for (auto& row : rows) pairs.insert(pairs.end(), row.begin(), row.end());
    return group(spectrum, std::move(pairs), detection_tol);
}

namespace reference {

CrossingSchedule find_crossings(const DiscreteSpectrum& spectrum, double detection_tol, const ScanOptions& scan) {
    check_tolerance(detection_tol);
    std::vector<PairCrossing> pairs;
    for (std::size_t i = 0; i < spectrum.size(); ++i) crossings_of_row(spectrum, i, detection_tol, scan, pairs);
    return group(spectrum, std::move(pairs), detection_tol);
}

}  // namespace reference

// ---------------------------------------------------------------------------

SweepResult sweep_adiabatic(const DiscreteSpectrum& spectrum, const ProbabilityState& initial,
                            const CrossingSchedule& schedule, const std::vector<double>& checkpoints) {
    if (initial.ids() != spectrum.ids())
        throw Error(ErrorKind::Domain, "sweep: initial state does not match the spectrum tracks");
    const Sweep& sweep = spectrum.sweep();
    for (std::size_t k = 0; k < schedule.events.size(); ++k) {
        const auto& e = schedule.events[k];
        if (!sweep.contains(e.a_star)) throw Error(ErrorKind::Domain, "sweep: crossing outside the sweep");
        if (k > 0 && along(sweep, e.a_star) < along(sweep, schedule.events[k - 1].a_star))
            throw Error(ErrorKind::Domain, "sweep: crossing schedule is not ordered along the sweep");
    }
    std::vector<double> marks = checkpoints;
    for (const double a : marks)
        if (!sweep.contains(a)) throw Error(ErrorKind::Domain, "sweep: checkpoint " + csv::format_number(a) +
                                                                   " outside the sweep");
    std::stable_sort(marks.begin(), marks.end(),
                     [&](double x, double y) { return along(sweep, x) < along(sweep, y); });

    std::vector<double> w = initial.w();
    const auto& g = initial.degeneracies();
    SweepResult result{initial, {}, 0.0, {}};

    std::size_t next = 0;
    const auto apply_until = [&](double limit) {
        for (; next < schedule.events.size() && along(sweep, schedule.events[next].a_star) <= limit; ++next) {
            const auto& c = schedule.events[next];
            EqualizationEvent ev;
            ev.a_star = c.a_star;
            ev.level_ids = c.level_ids;
            std::vector<int> indices;
            for (const int id : c.level_ids) {
                const int idx = spectrum.index_of(id);
                if (idx < 0) throw Error(ErrorKind::Domain, "sweep: unknown level id " + std::to_string(id));
                indices.push_back(idx);
                ev.w_before.push_back(w[idx]);
            }
            const auto [pooled, ds] = detail::equalize_in_place(w, g, indices);
            ev.w_after = pooled;
            ev.delta_s = ds;
            result.total_delta_s += ds;
            result.ledger.push_back(std::move(ev));
        }
    };

    for (const double a : marks) {
        apply_until(along(sweep, a));
        const ProbabilityState state(initial.ids(), g, w);
        const auto m = moments(state, spectrum, a);
        result.trajectory.push_back({a, entropy(state), m.mean, m.variance});
    }
    apply_until(std::numeric_limits<double>::infinity());
    result.final_state = ProbabilityState(initial.ids(), g, std::move(w));
    return result;
}

ProbabilityState align_state(const ProbabilityState& state, const DiscreteSpectrum& spectrum) {
    if (state.size() != spectrum.size()) throw Error(ErrorKind::Domain, "align_state: track counts differ");
    std::vector<double> w(state.size());
    const auto ids = spectrum.ids();
    for (std::size_t j = 0; j < ids.size(); ++j) {
        const int idx = state.index_of(ids[j]);
        if (idx < 0) throw Error(ErrorKind::Domain, "align_state: unknown level id " + std::to_string(ids[j]));
        w[j] = state.w()[idx];
    }
    return ProbabilityState(ids, spectrum.degeneracies(), std::move(w));
}

double l1_distance(const ProbabilityState& x, const ProbabilityState& y) {
    if (x.size() != y.size()) throw Error(ErrorKind::Domain, "l1_distance: track counts differ");
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const int k = y.index_of(x.ids()[j]);
        if (k < 0) throw Error(ErrorKind::Domain, "l1_distance: unknown level id " + std::to_string(x.ids()[j]));
        d += x.degeneracies()[j] * std::abs(x.w()[j] - y.w()[k]);
    }
    return d;
}

std::string ledger_csv(const std::vector<EqualizationEvent>& ledger) {
    csv::Table table({"a_star", "level_ids", "w_before", "w_after", "delta_s"});
    for (const auto& ev : ledger) {
        std::string ids, before;
        for (std::size_t k = 0; k < ev.level_ids.size(); ++k) {
            if (k) {
                ids += ' ';
                before += ' ';
            }
            ids += std::to_string(ev.level_ids[k]);
            before += csv::format_number(ev.w_before[k]);
        }
        table.cell(ev.a_star).cell(ids).cell(before).cell(ev.w_after).cell(ev.delta_s);
        table.end_row();
    }
    return table.str();
}

std::string trajectory_csv(const std::vector<TrajectorySample>& trajectory) {
    csv::Table table({"a", "S", "E_mean", "E_var"});
    for (const auto& s : trajectory) {
        table.cell(s.a).cell(s.entropy).cell(s.mean).cell(s.variance);
        table.end_row();
    }
    return table.str();
}

std::vector<double> smoothed_state_density(const ProbabilityState& state, const DiscreteSpectrum& spectrum, double a,
                                           double bandwidth, const std::vector<double>& grid) {
    const auto e = spectrum.energies(a);
    std::vector<double> masses(state.size());
    for (std::size_t j = 0; j < masses.size(); ++j) masses[j] = state.degeneracies()[j] * state.w()[j];
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = smoothed_density(e, masses, bandwidth, grid[i]);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<RefineRow> refine_study(const std::function<SpectrumFamily(int)>& generator,
                                    const std::vector<int>& levels, const RefineOptions& options) {
    const Sweep& sweep = options.sweep;
    std::vector<RefineRow> rows;
    for (const int m : levels) {
        const SpectrumFamily family = generator(m);
        const DiscreteSpectrum spectrum = discrete_spectrum(family, sweep);
        const auto initial = canonical_init(spectrum, sweep.a_start, options.temperature);
        const auto schedule = find_crossings(spectrum, options.detection_tol);
        const auto result = sweep_adiabatic(spectrum, initial, schedule);

        RefineRow row;
        row.levels = m;
        row.spacing = median_spacing(spectrum, sweep.a_start);
        row.total_delta_s = result.total_delta_s;
        row.crossings = schedule.events.size();
        row.distance_to_continuum = std::numeric_limits<double>::quiet_NaN();
        if (has_continuum_form(family)) {
            const auto dos = analytic_dos(family);
            const auto c0 = canonical_distribution(dos, sweep.a_start, options.temperature, options.numerics);
            const auto c1 = advect(c0, sweep.a_end, options.numerics);
            const double h = 3.0 * median_spacing(spectrum, sweep.a_end);
            const auto e = spectrum.energies(sweep.a_end);
            const double top = std::max(*std::max_element(e.begin(), e.end()) + h, c1.grid().back());
            const auto grid = numerics::uniform_grid(0.0, top, options.comparison_nodes);
            const auto pd = smoothed_state_density(result.final_state, spectrum, sweep.a_end, h, grid);
            std::vector<double> gap(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) gap[i] = std::abs(pd[i] - c1.density_at(grid[i]));
            row.distance_to_continuum = numerics::trapezoid(grid, gap);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string refine_csv(const std::vector<RefineRow>& rows) {
    csv::Table table({"M", "spacing", "total_delta_s", "crossings", "distance_to_continuum"});
    for (const auto& r : rows) {
        table.cell(r.levels).cell(r.spacing).cell(r.total_delta_s).cell(static_cast<long long>(r.crossings))
            .cell(r.distance_to_continuum);
        table.end_row();
    }
    return table.str();
}

}  // namespace adiabat
