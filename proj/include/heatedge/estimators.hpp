// Likelihood-based estimation of (theta_-, theta_+, Lambda_+).
//
// Per tile the modified local log-likelihood contributes the score
// s_alpha(theta) = theta U_alpha - theta^2 I_alpha / 2, with theta chosen
// by tile membership; the full objective for a candidate set is
// sum_{alpha in Lambda_+} s_alpha(theta_+) + sum_{else} s_alpha(theta_-).
//
// The inner set problem at fixed (theta_-, theta_+) separates across
// columns for the ModelA/ModelB product families and is solved exactly per
// column. The outer problem over Theta_- x Theta_+ runs alternating ascent
// (exact inner solve, closed-form clamped theta update) guarded by a theta
// lattice sweep, per the resolved design. All tie-breaks are deterministic
// and documented next to the code that applies them.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatedge/family.hpp"
#include "heatedge/grid.hpp"
#include "heatedge/simulate.hpp"

namespace heatedge {

struct ThetaPrior {
    std::array<double, 2> minus;  // closed interval for theta_-
    std::array<double, 2> plus;   // closed interval for theta_+
    double min_gap = 0.0;         // eta lower bound separating the intervals

    ThetaPrior(std::array<double, 2> minus_iv, std::array<double, 2> plus_iv, double gap)
        : minus(minus_iv), plus(plus_iv), min_gap(gap) {
        if (!(minus[0] > 0.0) || !(plus[0] > 0.0) || minus[1] < minus[0] || plus[1] < plus[0])
            throw std::invalid_argument("ThetaPrior: intervals must be positive and ordered");
        if (!(min_gap > 0.0)) throw std::invalid_argument("ThetaPrior: separation must be positive");
        const double gap_above = plus[0] - minus[1];   // Theta_+ above Theta_-
        const double gap_below = minus[0] - plus[1];   // Theta_+ below Theta_-
        if (std::max(gap_above, gap_below) < min_gap)
            throw std::invalid_argument("ThetaPrior: intervals are not min_gap-separated");
    }

    double clamp_minus(double v) const { return std::clamp(v, minus[0], minus[1]); }
    double clamp_plus(double v) const { return std::clamp(v, plus[0], plus[1]); }
    double mid_minus() const { return 0.5 * (minus[0] + minus[1]); }
    double mid_plus() const { return 0.5 * (plus[0] + plus[1]); }
};

// Per-tile score pair (s_alpha(theta_-), s_alpha(theta_+)).
struct ScorePair {
    std::vector<double> s_minus;
    std::vector<double> s_plus;

    std::vector<double> advantage() const {
        std::vector<double> d(s_plus.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = s_plus[i] - s_minus[i];
        return d;
    }
};

inline double tile_score(double u, double fisher, double theta) {
    return theta * u - 0.5 * theta * theta * fisher;
}

inline ScorePair tile_scores(const LocalStats& stats, double theta_minus, double theta_plus) {
    ScorePair s;
    s.s_minus.resize(stats.u.size());
    s.s_plus.resize(stats.u.size());
    for (std::size_t i = 0; i < stats.u.size(); ++i) {
        s.s_minus[i] = tile_score(stats.u[i], stats.fisher[i], theta_minus);
        s.s_plus[i] = tile_score(stats.u[i], stats.fisher[i], theta_plus);
    }
    return s;
}

// Sum of the local log-likelihoods for an assignment, in flat tile order.
inline double objective_value(const LocalStats& stats, double theta_minus, double theta_plus,
                              const IndicatorSet& lambda_plus) {
    double total = 0.0;
    for (std::size_t i = 0; i < stats.u.size(); ++i) {
        const double theta = lambda_plus.test(static_cast<std::int64_t>(i)) ? theta_plus
                                                                            : theta_minus;
        total += tile_score(stats.u[i], stats.fisher[i], theta);
    }
    return total;
}

namespace detail {

// Best epigraph cut of one column: maximize sum_{j >= c} d[j] over
// c in [0, n]; ties prefer the larger cut (the smaller set).
struct ColumnCut {
    int cut;
    double value;
};

inline ColumnCut best_column_cut(std::span<const double> d) {
    const int n = static_cast<int>(d.size());
    ColumnCut best{n, 0.0};
    double value = 0.0;
    for (int c = n - 1; c >= 0; --c) {
        value += d[static_cast<std::size_t>(c)];
        if (value > best.value) best = {c, value};
    }
    return best;
}

// Best vertical interval [lo, hi) of one column by maximum subarray; the
// empty interval (value 0) is allowed. Ties prefer the shorter interval,
// then the lower start.
struct ColumnInterval {
    int lo, hi;
    double value;
    int length() const { return hi - lo; }
};

inline bool interval_better(const ColumnInterval& a, const ColumnInterval& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.length() != b.length()) return a.length() < b.length();
    return a.lo < b.lo;
}

inline ColumnInterval best_column_interval(std::span<const double> d) {
    const int n = static_cast<int>(d.size());
    ColumnInterval best{0, 0, 0.0};  // empty
    double run = 0.0;
    int run_lo = 0;
    for (int j = 0; j < n; ++j) {
        if (run > 0.0) {
            run += d[static_cast<std::size_t>(j)];
        } else {
            run = d[static_cast<std::size_t>(j)];
            run_lo = j;
        }
        const ColumnInterval cand{run_lo, j + 1, run};
        if (interval_better(cand, best)) best = cand;
    }
    return best;
}

}  // namespace detail

// Exact inner maximizers of the ModelA / ModelB families at fixed scores.
inline IndicatorSet solve_model_a(const ScorePair& scores, const TileGrid& grid) {
    const auto d = scores.advantage();
    IndicatorSet set(grid);
    for (std::int64_t col = 0; col < grid.column_count(); ++col) {
        const auto cut = detail::best_column_cut(
            std::span<const double>(d.data() + col * grid.n, static_cast<std::size_t>(grid.n)));
        for (int j = cut.cut; j < grid.n; ++j) set.set(grid.tile_in_column(col, j));
    }
    return set;
}

inline IndicatorSet solve_model_b(const ScorePair& scores, const TileGrid& grid) {
    const auto d = scores.advantage();
    IndicatorSet set(grid);
    for (std::int64_t col = 0; col < grid.column_count(); ++col) {
        const auto iv = detail::best_column_interval(
            std::span<const double>(d.data() + col * grid.n, static_cast<std::size_t>(grid.n)));
        for (int j = iv.lo; j < iv.hi; ++j) set.set(grid.tile_in_column(col, j));
    }
    return set;
}

namespace detail {

// Inner solve for any family kind; strictly positive advantage wins a tile
// for the power set (zero-advantage tiles stay out, which also picks the
// smallest member id among maximizers).
inline IndicatorSet inner_solve(const CandidateFamily& family, const ScorePair& scores) {
    switch (family.kind) {
        case CandidateFamily::Kind::ModelA:
            return solve_model_a(scores, family.grid);
        case CandidateFamily::Kind::ModelB:
            return solve_model_b(scores, family.grid);
        case CandidateFamily::Kind::FullPowerSet: {
            IndicatorSet set(family.grid);
            for (std::size_t i = 0; i < scores.s_plus.size(); ++i)
                if (scores.s_plus[i] - scores.s_minus[i] > 0.0)
                    set.set(static_cast<std::int64_t>(i));
            return set;
        }
        case CandidateFamily::Kind::Explicit: {
            const IndicatorSet* best = nullptr;
            double best_val = -std::numeric_limits<double>::infinity();
            const auto d = scores.advantage();
            for (const auto& member : family.members) {
                double val = 0.0;
                for (std::size_t i = 0; i < d.size(); ++i)
                    if (member.test(static_cast<std::int64_t>(i))) val += d[i];
                if (best == nullptr || val > best_val) {
                    best = &member;
                    best_val = val;
                }
            }
            if (best == nullptr)
                throw std::invalid_argument("inner_solve: empty explicit family");
            return *best;
        }
    }
    throw std::logic_error("inner_solve: unknown family kind");
}

// Inner solve constrained to exclude the empty and full sets, used by the
// profiled tiling search. For the product families, repair the
// unconstrained solution by the single column change of least loss;
// ties prefer the smallest column index.
inline IndicatorSet inner_solve_proper(const CandidateFamily& family, const ScorePair& scores) {
    const auto& grid = family.grid;
    const auto d = scores.advantage();

    if (family.kind == CandidateFamily::Kind::FullPowerSet ||
        family.kind == CandidateFamily::Kind::Explicit) {
        IndicatorSet set = inner_solve(family, scores);
        if (family.kind == CandidateFamily::Kind::Explicit) {
            // Rescan skipping degenerate members.
            const IndicatorSet* best = nullptr;
            double best_val = -std::numeric_limits<double>::infinity();
            for (const auto& member : family.members) {
                if (member.empty() || member.complement().empty()) continue;
                double val = 0.0;
                for (std::size_t i = 0; i < d.size(); ++i)
                    if (member.test(static_cast<std::int64_t>(i))) val += d[i];
                if (best == nullptr || val > best_val) {
                    best = &member;
                    best_val = val;
                }
            }
            if (best == nullptr)
                throw std::invalid_argument("inner_solve_proper: family exhausted by filtering");
            return *best;
        }
        if (set.empty()) {
            std::int64_t arg = 0;
            for (std::int64_t i = 1; i < grid.tile_count(); ++i)
                if (d[static_cast<std::size_t>(i)] > d[static_cast<std::size_t>(arg)]) arg = i;
            set.set(arg);
        } else if (set.complement().empty()) {
            std::int64_t arg = 0;
            for (std::int64_t i = 1; i < grid.tile_count(); ++i)
                if (d[static_cast<std::size_t>(i)] < d[static_cast<std::size_t>(arg)]) arg = i;
            set.set(arg, false);
        }
        return set;
    }

    const bool model_a = family.kind == CandidateFamily::Kind::ModelA;
    const std::int64_t cols = grid.column_count();
    const int n = grid.n;

    struct Choice {
        int lo, hi;  // [lo, hi) vertical tiles
        double value;
    };
    std::vector<Choice> chosen(static_cast<std::size_t>(cols));
    for (std::int64_t col = 0; col < cols; ++col) {
        const std::span<const double> cd(d.data() + col * n, static_cast<std::size_t>(n));
        if (model_a) {
            const auto c = best_column_cut(cd);
            chosen[static_cast<std::size_t>(col)] = {c.cut, n, c.value};
        } else {
            const auto iv = best_column_interval(cd);
            chosen[static_cast<std::size_t>(col)] = {iv.lo, iv.hi, iv.value};
        }
    }

    auto column_sum = [&](std::int64_t col, int lo, int hi) {
        double s = 0.0;
        for (int j = lo; j < hi; ++j) s += d[static_cast<std::size_t>(col * n + j)];
        return s;
    };

    const bool all_empty = std::all_of(chosen.begin(), chosen.end(),
                                       [](const Choice& c) { return c.lo >= c.hi; });
    const bool all_full = std::all_of(chosen.begin(), chosen.end(),
                                      [n](const Choice& c) { return c.lo == 0 && c.hi == n; });
    if (all_empty) {
        // Best non-empty alternative per column; apply the least-loss one.
        double best_loss = std::numeric_limits<double>::infinity();
        std::int64_t best_col = -1;
        Choice best_choice{0, 0, 0.0};
        for (std::int64_t col = 0; col < cols; ++col) {
            Choice alt{0, 0, -std::numeric_limits<double>::infinity()};
            if (model_a) {
                double value = 0.0;
                for (int c = n - 1; c >= 0; --c) {
                    value += d[static_cast<std::size_t>(col * n + c)];
                    if (value > alt.value) alt = {c, n, value};
                }
            } else {
                for (int lo = 0; lo < n; ++lo)
                    for (int hi = lo + 1; hi <= n; ++hi) {
                        const double v = column_sum(col, lo, hi);
                        const Choice cand{lo, hi, v};
                        if (v > alt.value ||
                            (v == alt.value && (cand.hi - cand.lo < alt.hi - alt.lo ||
                                                (cand.hi - cand.lo == alt.hi - alt.lo &&
                                                 cand.lo < alt.lo))))
                            alt = cand;
                    }
            }
            const double loss = chosen[static_cast<std::size_t>(col)].value - alt.value;
            if (loss < best_loss) {
                best_loss = loss;
                best_col = col;
                best_choice = alt;
            }
        }
        chosen[static_cast<std::size_t>(best_col)] = best_choice;
    } else if (all_full) {
        double best_loss = std::numeric_limits<double>::infinity();
        std::int64_t best_col = -1;
        Choice best_choice{0, 0, 0.0};
        for (std::int64_t col = 0; col < cols; ++col) {
            Choice alt{0, 0, -std::numeric_limits<double>::infinity()};
            if (model_a) {
                // Any cut >= 1; the empty column (cut = n) is allowed.
                double value = 0.0;
                alt = {n, n, 0.0};
                for (int c = n - 1; c >= 1; --c) {
                    value += d[static_cast<std::size_t>(col * n + c)];
                    if (value > alt.value) alt = {c, n, value};
                }
            } else {
                alt = {0, 0, 0.0};  // empty interval
                for (int lo = 0; lo < n; ++lo)
                    for (int hi = lo + 1; hi <= n; ++hi) {
                        if (lo == 0 && hi == n) continue;
                        const double v = column_sum(col, lo, hi);
                        const Choice cand{lo, hi, v};
                        if (v > alt.value ||
                            (v == alt.value && (cand.hi - cand.lo < alt.hi - alt.lo ||
                                                (cand.hi - cand.lo == alt.hi - alt.lo &&
                                                 cand.lo < alt.lo))))
                            alt = cand;
                    }
            }
            const double loss = chosen[static_cast<std::size_t>(col)].value - alt.value;
            if (loss < best_loss) {
                best_loss = loss;
                best_col = col;
                best_choice = alt;
            }
        }
        chosen[static_cast<std::size_t>(best_col)] = best_choice;
    }

    IndicatorSet set(grid);
    for (std::int64_t col = 0; col < cols; ++col)
        for (int j = chosen[static_cast<std::size_t>(col)].lo;
             j < chosen[static_cast<std::size_t>(col)].hi; ++j)
            set.set(grid.tile_in_column(col, j));
    return set;
}

inline void require_finite(const LocalStats& stats) {
    for (std::size_t i = 0; i < stats.u.size(); ++i)
        if (!std::isfinite(stats.u[i]) || !std::isfinite(stats.fisher[i]))
            throw std::invalid_argument("estimator: non-finite local statistics");
}

}  // namespace detail

struct EstimateOptions {
    int theta_lattice = 33;  // lattice points per axis in the guarded sweep
    int max_rounds = 50;     // alternation rounds before giving up
};

struct EstimateResult {
    double theta_minus = 0.0;
    double theta_plus = 0.0;
    IndicatorSet lambda_plus;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string provenance;  // which stage produced the maximizer
};

// Unconstrained per-side maximizers sum U / sum I for a fixed partition;
// empty when a side has no tiles or no Fisher mass.
inline std::optional<std::pair<double, double>> theta_for_partition(
    const LocalStats& stats, const IndicatorSet& lambda_plus) {
    double u_plus = 0.0, i_plus = 0.0, u_minus = 0.0, i_minus = 0.0;
    bool any_plus = false, any_minus = false;
    for (std::size_t i = 0; i < stats.u.size(); ++i) {
        if (lambda_plus.test(static_cast<std::int64_t>(i))) {
            u_plus += stats.u[i];
            i_plus += stats.fisher[i];
            any_plus = true;
        } else {
            u_minus += stats.u[i];
            i_minus += stats.fisher[i];
            any_minus = true;
        }
    }
    if (!any_plus || !any_minus || !(i_plus > 0.0) || !(i_minus > 0.0)) return std::nullopt;
    return std::make_pair(u_minus / i_minus, u_plus / i_plus);
}

namespace detail {

struct AlternationOutcome {
    double theta_minus, theta_plus;
    IndicatorSet set;
    double objective;
    int rounds;
    bool fixed_point;
};

// Alternating ascent at clamped closed-form theta updates. The objective
// never decreases: the inner solve is exact and the clamped vertex is the
// exact box maximizer of the separable concave quadratic.
inline AlternationOutcome alternate_constrained(const LocalStats& stats, const ThetaPrior& prior,
                                                const CandidateFamily& family, double theta_minus,
                                                double theta_plus, int max_rounds) {
    IndicatorSet current(family.grid);
    bool have_set = false;
    int round = 0;
    bool fixed = false;
    for (; round < max_rounds; ++round) {
        const auto scores = tile_scores(stats, theta_minus, theta_plus);
        IndicatorSet next = inner_solve(family, scores);
        if (have_set && next == current) {
            fixed = true;
            break;
        }
        current = std::move(next);
        have_set = true;
        double u_plus = 0.0, i_plus = 0.0, u_minus = 0.0, i_minus = 0.0;
        for (std::size_t i = 0; i < stats.u.size(); ++i) {
            if (current.test(static_cast<std::int64_t>(i))) {
                u_plus += stats.u[i];
                i_plus += stats.fisher[i];
            } else {
                u_minus += stats.u[i];
                i_minus += stats.fisher[i];
            }
        }
        if (i_minus > 0.0) theta_minus = prior.clamp_minus(u_minus / i_minus);
        if (i_plus > 0.0) theta_plus = prior.clamp_plus(u_plus / i_plus);
    }
    return {theta_minus, theta_plus, current,
            objective_value(stats, theta_minus, theta_plus, current), round, fixed};
}

}  // namespace detail

// Global maximizer of the aggregated likelihood over Theta_- x Theta_+ x
// family. Enumerable families (power set, explicit list) are solved
// exactly by enumeration with closed-form clamped thetas; the product
// families run alternating ascent from the prior midpoints guarded by a
// theta-lattice sweep, keeping the better objective. Ties in enumeration
// keep the smallest member id.
inline EstimateResult estimate_constrained(const LocalStats& stats, const ThetaPrior& prior,
                                           const CandidateFamily& family,
                                           const EstimateOptions& options = {}) {
    detail::require_finite(stats);

    if (family.kind == CandidateFamily::Kind::FullPowerSet ||
        family.kind == CandidateFamily::Kind::Explicit) {
        if (family.kind == CandidateFamily::Kind::Explicit && family.members.empty())
            throw std::invalid_argument("estimate_constrained: empty family");
        EstimateResult best;
        bool first = true;
        std::int64_t count = 0;
        family.enumerate([&](std::int64_t, const IndicatorSet& member) {
            ++count;
            double u_plus = 0.0, i_plus = 0.0, u_minus = 0.0, i_minus = 0.0;
            for (std::size_t i = 0; i < stats.u.size(); ++i) {
                if (member.test(static_cast<std::int64_t>(i))) {
                    u_plus += stats.u[i];
                    i_plus += stats.fisher[i];
                } else {
                    u_minus += stats.u[i];
                    i_minus += stats.fisher[i];
                }
            }
            const double tm = i_minus > 0.0 ? prior.clamp_minus(u_minus / i_minus)
                                            : prior.mid_minus();
            const double tp = i_plus > 0.0 ? prior.clamp_plus(u_plus / i_plus)
                                           : prior.mid_plus();
            const double obj = objective_value(stats, tm, tp, member);
            if (first || obj > best.objective) {
                best = {tm, tp, member, obj, 0, true, "enumeration"};
                first = false;
            }
        });
        best.iterations = static_cast<int>(count);
        return best;
    }

    // Alternation from the prior midpoints.
    auto mid = detail::alternate_constrained(stats, prior, family, prior.mid_minus(),
                                             prior.mid_plus(), options.max_rounds);
    EstimateResult result{mid.theta_minus, mid.theta_plus,      mid.set,
                          mid.objective,   mid.rounds,          mid.fixed_point,
                          "alternation"};

    // Guard: theta-lattice sweep with exact inner solves; the best lattice
    // point is polished by another alternation pass.
    const int L = std::max(2, options.theta_lattice);
    double best_lattice_obj = -std::numeric_limits<double>::infinity();
    std::array<double, 2> best_lattice_theta{0.0, 0.0};
    for (int i = 0; i < L; ++i) {
        const double tm = prior.minus[0] + (prior.minus[1] - prior.minus[0]) * i / (L - 1);
        for (int j = 0; j < L; ++j) {
            const double tp = prior.plus[0] + (prior.plus[1] - prior.plus[0]) * j / (L - 1);
            const auto scores = tile_scores(stats, tm, tp);
            const auto set = detail::inner_solve(family, scores);
            const double obj = objective_value(stats, tm, tp, set);
            if (obj > best_lattice_obj) {
                best_lattice_obj = obj;
                best_lattice_theta = {tm, tp};
            }
        }
    }
    auto polished =
        detail::alternate_constrained(stats, prior, family, best_lattice_theta[0],
                                      best_lattice_theta[1], options.max_rounds);
    if (polished.objective > result.objective) {
        result = {polished.theta_minus, polished.theta_plus, polished.set,
                  polished.objective,   polished.rounds,     polished.fixed_point,
                  "lattice+polish"};
    }
    return result;
}

struct TilingEstimate {
    IndicatorSet tilde_lambda_plus;
    double tilde_theta_minus = 0.0;
    double tilde_theta_plus = 0.0;
    IndicatorSet star_lambda_plus;
    double star_theta_minus = 0.0;
    double star_theta_plus = 0.0;
    double profiled_objective = 0.0;
};

// Profiled-likelihood set estimator over the family minus {empty, full},
// with the overlap-based label assignment against the reference estimate.
inline TilingEstimate estimate_tiling(const LocalStats& stats, const CandidateFamily& family,
                                      const EstimateResult& reference,
                                      const EstimateOptions& options = {}) {
    detail::require_finite(stats);
    const TileGrid& grid = family.grid;

    bool found = false;
    double best_obj = -std::numeric_limits<double>::infinity();
    IndicatorSet best_set(grid);
    std::pair<double, double> best_theta{0.0, 0.0};

    auto consider = [&](const IndicatorSet& member) {
        if (member.empty() || member.complement().empty()) return;
        const auto theta = theta_for_partition(stats, member);
        if (!theta) return;
        const double obj = objective_value(stats, theta->first, theta->second, member);
        if (!found || obj > best_obj) {
            found = true;
            best_obj = obj;
            best_set = member;
            best_theta = *theta;
        }
    };

    if (family.kind == CandidateFamily::Kind::FullPowerSet ||
        family.kind == CandidateFamily::Kind::Explicit) {
        family.enumerate([&](std::int64_t, const IndicatorSet& member) { consider(member); });
    } else {
        // Profile search: the inner argmax at fixed (theta_-, theta_+) is
        // exact; every fixed point of [inner solve -> closed-form theta]
        // reached from a lattice of ratio starts (plus the reference set) is
        // a profiled-likelihood candidate.
        double r_lo = std::numeric_limits<double>::infinity();
        double r_hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < stats.u.size(); ++i) {
            if (stats.fisher[i] > 0.0) {
                const double r = stats.u[i] / stats.fisher[i];
                r_lo = std::min(r_lo, r);
                r_hi = std::max(r_hi, r);
            }
        }
        if (!std::isfinite(r_lo))
            throw std::invalid_argument("estimate_tiling: no Fisher mass in statistics");
        if (r_hi - r_lo < 1e-12) {
            r_lo -= 0.5 * std::abs(r_lo) + 1e-6;
            r_hi += 0.5 * std::abs(r_hi) + 1e-6;
        }

        auto run_from = [&](double tm, double tp) {
            IndicatorSet current(grid);
            bool have = false;
            for (int round = 0; round < options.max_rounds; ++round) {
                const auto scores = tile_scores(stats, tm, tp);
                IndicatorSet next = detail::inner_solve_proper(family, scores);
                if (have && next == current) break;
                current = std::move(next);
                have = true;
                const auto theta = theta_for_partition(stats, current);
                if (!theta) return;
                tm = theta->first;
                tp = theta->second;
            }
            consider(current);
        };

        const int L = std::max(2, options.theta_lattice);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j)
                run_from(r_lo + (r_hi - r_lo) * i / (L - 1), r_lo + (r_hi - r_lo) * j / (L - 1));
        if (!reference.lambda_plus.empty() && !reference.lambda_plus.complement().empty()) {
            const auto theta = theta_for_partition(stats, reference.lambda_plus);
            if (theta) run_from(theta->first, theta->second);
        }
    }

    if (!found)
        throw std::invalid_argument("estimate_tiling: family exhausted by filtering");

    TilingEstimate out{best_set, best_theta.first, best_theta.second,
                       best_set, best_theta.first, best_theta.second, best_obj};

    // Overlap rule: keep tilde if it overlaps the reference Lambda_+ at
    // least as much as the reference complement (ties keep tilde).
    const auto& ref = reference.lambda_plus;
    const double overlap_plus = set_intersection(best_set, ref).volume();
    const double overlap_minus = set_intersection(best_set, ref.complement()).volume();
    if (overlap_plus >= overlap_minus) {
        // already oriented
    } else {
        out.star_lambda_plus = best_set.complement();
        out.star_theta_minus = best_theta.second;
        out.star_theta_plus = best_theta.first;
    }
    return out;
}

// Empirical process Z_delta against a tiling truth: exactly the objective
// gap between the truth and the candidate,
// Z(theta_-, theta_+, Lambda_+) = obj(theta0, Lambda0) - obj(theta, Lambda_+).
inline double z_process(const LocalStats& stats, double theta_minus, double theta_plus,
                        const IndicatorSet& lambda_plus, const IndicatorSet& truth_tiles,
                        double theta0_minus, double theta0_plus) {
    double z = 0.0;
    for (std::size_t i = 0; i < stats.u.size(); ++i) {
        const std::int64_t t = static_cast<std::int64_t>(i);
        const double theta = lambda_plus.test(t) ? theta_plus : theta_minus;
        const double theta0 = truth_tiles.test(t) ? theta0_plus : theta0_minus;
        const double diff = theta - theta0;
        const double mart = stats.u[i] - theta0 * stats.fisher[i];
        z += 0.5 * diff * diff * stats.fisher[i] - diff * mart;
    }
    return z;
}

// Convenience overload resolving the truth through its minimal tiling;
// refuses truths that are not grid-anchored (boundary tiles present).
inline double z_process(const LocalStats& stats, double theta_minus, double theta_plus,
                        const IndicatorSet& lambda_plus, const GroundTruthDomain& truth,
                        double theta0_minus, double theta0_plus) {
    const TileGrid& grid = stats.grid;
    if (!boundary_tiles(truth, grid).empty())
        throw std::invalid_argument("z_process: truth is not a tiling set (boundary tiles exist)");
    return z_process(stats, theta_minus, theta_plus, lambda_plus, minimal_tiling(truth, grid),
                     theta0_minus, theta0_plus);
}

struct ZSplitResult {
    double direct = 0.0;
    double split = 0.0;
    double relative_gap = 0.0;
    bool degenerate = false;
};

// Five-term decomposition of Z at the profiled thetas of a candidate set,
// checked against the direct evaluation.
inline ZSplitResult z_split_identity_check(const LocalStats& stats, const IndicatorSet& lambda_plus,
                                           const IndicatorSet& truth_tiles, double theta0_minus,
                                           double theta0_plus) {
    const double eta = theta0_plus - theta0_minus;
    double i_pp = 0.0, i_pm = 0.0, i_mp = 0.0, i_mm = 0.0;
    double m_pp = 0.0, m_pm = 0.0, m_mp = 0.0, m_mm = 0.0;
    for (std::size_t i = 0; i < stats.u.size(); ++i) {
        const std::int64_t t = static_cast<std::int64_t>(i);
        const bool in_cand = lambda_plus.test(t);
        const bool in_truth = truth_tiles.test(t);
        const double theta0 = in_truth ? theta0_plus : theta0_minus;
        const double mart = stats.u[i] - theta0 * stats.fisher[i];
        if (in_cand && in_truth) {
            i_pp += stats.fisher[i];
            m_pp += mart;
        } else if (in_cand) {
            i_pm += stats.fisher[i];
            m_pm += mart;
        } else if (in_truth) {
            i_mp += stats.fisher[i];
            m_mp += mart;
        } else {
            i_mm += stats.fisher[i];
            m_mm += mart;
        }
    }
    const double s_plus = i_pp + i_pm;
    const double s_minus = i_mp + i_mm;
    ZSplitResult out;
    if (!(s_plus > 0.0) || !(s_minus > 0.0)) {
        out.degenerate = true;
        return out;
    }
    const auto theta = theta_for_partition(stats, lambda_plus);
    if (!theta) {
        out.degenerate = true;
        return out;
    }
    out.direct = z_process(stats, theta->first, theta->second, lambda_plus, truth_tiles,
                           theta0_minus, theta0_plus);
    const double m_plus = m_pp + m_pm;
    const double m_minus = m_mp + m_mm;
    out.split = 0.5 * eta * eta * i_pp * i_pm / s_plus + 0.5 * eta * eta * i_mm * i_mp / s_minus -
                0.5 * m_plus * m_plus / s_plus - 0.5 * m_minus * m_minus / s_minus -
                eta / s_plus * (m_pm * i_pp - m_pp * i_pm) -
                eta / s_minus * (i_mp * m_mm - i_mm * m_mp);
    const double scale = std::max({1e-300, std::abs(out.direct), std::abs(out.split)});
    out.relative_gap = std::abs(out.direct - out.split) / scale;
    return out;
}

}  // namespace heatedge
