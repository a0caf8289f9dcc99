#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "heatedge/estimators.hpp"
#include "heatedge/rng.hpp"

using namespace heatedge;

namespace {

// Brute-force oracle for the ModelA product family: per column the best cut
// (ties toward the larger cut), enumerated exhaustively.
IndicatorSet oracle_model_a(const std::vector<double>& d, const TileGrid& grid) {
    IndicatorSet set(grid);
    for (std::int64_t col = 0; col < grid.column_count(); ++col) {
        int best_cut = grid.n;
        double best_val = 0.0;
        for (int cut = grid.n; cut >= 0; --cut) {
            double val = 0.0;
            for (int j = cut; j < grid.n; ++j) val += d[static_cast<std::size_t>(col * grid.n + j)];
            if (val > best_val) {
                best_val = val;
                best_cut = cut;
            }
        }
        for (int j = best_cut; j < grid.n; ++j) set.set(grid.tile_in_column(col, j));
    }
    return set;
}

// Brute-force oracle for ModelB: all intervals per column plus the empty
// one; ties toward (shorter, lower).
IndicatorSet oracle_model_b(const std::vector<double>& d, const TileGrid& grid) {
    IndicatorSet set(grid);
    for (std::int64_t col = 0; col < grid.column_count(); ++col) {
        int best_lo = 0, best_hi = 0;
        double best_val = 0.0;
        for (int lo = 0; lo < grid.n; ++lo)
            for (int hi = lo + 1; hi <= grid.n; ++hi) {
                double val = 0.0;
                for (int j = lo; j < hi; ++j) val += d[static_cast<std::size_t>(col * grid.n + j)];
                const int len = hi - lo, best_len = best_hi - best_lo;
                if (val > best_val || (val == best_val &&
                                       (len < best_len || (len == best_len && lo < best_lo)))) {
                    best_val = val;
                    best_lo = lo;
                    best_hi = hi;
                }
            }
        for (int j = best_lo; j < best_hi; ++j) set.set(grid.tile_in_column(col, j));
    }
    return set;
}

LocalStats synthetic_stats(const TileGrid& grid, std::uint32_t trial, bool integer_scores) {
    LocalStats stats{grid, 0,
                     std::vector<double>(static_cast<std::size_t>(grid.tile_count())),
                     std::vector<double>(static_cast<std::size_t>(grid.tile_count()))};
    for (std::int64_t i = 0; i < grid.tile_count(); ++i) {
        const double a = uniform_draw(41, trial, static_cast<std::uint32_t>(i), 0);
        const double b = uniform_draw(41, trial, static_cast<std::uint32_t>(i), 1);
        if (integer_scores) {
            stats.u[static_cast<std::size_t>(i)] = std::floor(a * 9.0) - 4.0;
            stats.fisher[static_cast<std::size_t>(i)] = 1.0 + std::floor(b * 3.0);
        } else {
            stats.u[static_cast<std::size_t>(i)] = 8.0 * (a - 0.5);
            stats.fisher[static_cast<std::size_t>(i)] = 0.5 + 3.0 * b;
        }
    }
    return stats;
}

LocalStats noiseless_stats(const TileGrid& grid, const IndicatorSet& truth, double theta_minus,
                           double theta_plus) {
    LocalStats stats{grid, 0,
                     std::vector<double>(static_cast<std::size_t>(grid.tile_count())),
                     std::vector<double>(static_cast<std::size_t>(grid.tile_count()))};
    for (std::int64_t i = 0; i < grid.tile_count(); ++i) {
        const double fisher = (i % 2 == 0) ? 1.0 : 2.0;  // dyadic, exact arithmetic
        const double theta0 = truth.test(i) ? theta_plus : theta_minus;
        stats.fisher[static_cast<std::size_t>(i)] = fisher;
        stats.u[static_cast<std::size_t>(i)] = theta0 * fisher;
    }
    return stats;
}

IndicatorSet top_half(const TileGrid& grid) {
    IndicatorSet s(grid);
    for (std::int64_t col = 0; col < grid.column_count(); ++col)
        for (int j = grid.n / 2; j < grid.n; ++j) s.set(grid.tile_in_column(col, j));
    return s;
}

}  // namespace

TEST_CASE("tile scores are the quadratic likelihood contributions", "[estimators]") {
    TileGrid grid(2, 1);
    LocalStats stats{grid, 0, {2.0}, {1.0}};
    const auto zero = tile_scores(stats, 0.0, 0.0);
    REQUIRE(zero.s_minus[0] == 0.0);
    REQUIRE(zero.s_plus[0] == 0.0);
    REQUIRE(tile_score(2.0, 1.0, 1.0) == Catch::Approx(1.5));
    // The free maximizer sits at U/I with value U^2 / (2 I).
    const double vertex = stats.u[0] / stats.fisher[0];
    const double peak = tile_score(stats.u[0], stats.fisher[0], vertex);
    REQUIRE(peak == Catch::Approx(stats.u[0] * stats.u[0] / (2.0 * stats.fisher[0])));
    for (double eps : {-0.3, 0.2})
        REQUIRE(tile_score(stats.u[0], stats.fisher[0], vertex + eps) < peak);
}

TEST_CASE("column solvers match exhaustive enumeration", "[estimators]") {
    TileGrid grid(2, 4);
    for (std::uint32_t trial = 0; trial < 150; ++trial) {
        const bool ties = trial % 3 == 0;  // integer scores force exact ties
        const auto stats = synthetic_stats(grid, trial, ties);
        const auto scores = tile_scores(stats, 1.0, 3.0);
        const auto d = scores.advantage();
        REQUIRE(solve_model_a(scores, grid) == oracle_model_a(d, grid));
        REQUIRE(solve_model_b(scores, grid) == oracle_model_b(d, grid));
    }
}

TEST_CASE("model solver degenerate directions", "[estimators]") {
    TileGrid grid(2, 4);
    LocalStats stats{grid, 0, std::vector<double>(16), std::vector<double>(16, 1.0)};
    // All tiles favor theta_+: full set (cut 0 in every column).
    for (auto& u : stats.u) u = 10.0;
    auto scores = tile_scores(stats, 1.0, 3.0);
    REQUIRE(solve_model_a(scores, grid) == IndicatorSet::full_set(grid));
    REQUIRE(solve_model_b(scores, grid) == IndicatorSet::full_set(grid));
    // All tiles favor theta_-: empty set.
    for (auto& u : stats.u) u = -10.0;
    scores = tile_scores(stats, 1.0, 3.0);
    REQUIRE(solve_model_a(scores, grid).empty());
    REQUIRE(solve_model_b(scores, grid).empty());
    // A single favorable tile: exactly that tile for ModelB.
    for (auto& u : stats.u) u = -10.0;
    stats.u[5] = 10.0;
    scores = tile_scores(stats, 1.0, 3.0);
    const auto set = solve_model_b(scores, grid);
    REQUIRE(set.count() == 1);
    REQUIRE(set.test(5));
}

TEST_CASE("label-swap maps ModelB solutions to complement structure", "[estimators]") {
    TileGrid grid(2, 4);
    for (std::uint32_t trial = 0; trial < 50; ++trial) {
        const auto stats = synthetic_stats(grid, 1000 + trial, trial % 2 == 0);
        const auto scores = tile_scores(stats, 1.0, 3.0);
        const auto d = scores.advantage();
        // Negating the advantage turns the per-column max-subarray into the
        // min-subarray problem.
        ScorePair neg{scores.s_plus, scores.s_minus};
        const auto neg_set = solve_model_b(neg, grid);
        for (std::int64_t col = 0; col < grid.column_count(); ++col) {
            double got = 0.0;
            for (int j = 0; j < grid.n; ++j)
                if (neg_set.test(grid.tile_in_column(col, j)))
                    got -= d[static_cast<std::size_t>(col * grid.n + j)];
            double best = 0.0;
            for (int lo = 0; lo < grid.n; ++lo)
                for (int hi = lo + 1; hi <= grid.n; ++hi) {
                    double val = 0.0;
                    for (int j = lo; j < hi; ++j)
                        val -= d[static_cast<std::size_t>(col * grid.n + j)];
                    best = std::max(best, val);
                }
            REQUIRE(got == Catch::Approx(best).margin(1e-12));
        }
    }
}

TEST_CASE("theta_for_partition closed forms and degeneracies", "[estimators]") {
    TileGrid g(2, 2);
    const auto truth = top_half(g);
    const auto stats = noiseless_stats(g, truth, 1.0, 3.0);
    const auto theta = theta_for_partition(stats, truth);
    REQUIRE(theta.has_value());
    REQUIRE(theta->first == 1.0);
    REQUIRE(theta->second == 3.0);
    // Complement swaps the labels exactly.
    const auto swapped = theta_for_partition(stats, truth.complement());
    REQUIRE(swapped->first == 3.0);
    REQUIRE(swapped->second == 1.0);
    // One tile per side with U/I = (1, 3).
    TileGrid pair_grid(2, 1);
    (void)pair_grid;
    LocalStats two{g, 0, {1.0, 0.0, 3.0, 0.0}, {1.0, 0.0, 1.0, 0.0}};
    IndicatorSet hi(g);
    hi.set(2);
    // side sums: minus = tiles {0,1,3}: U=1, I=1; plus = {2}: U=3, I=1
    const auto ratio = theta_for_partition(two, hi);
    REQUIRE(ratio->first == 1.0);
    REQUIRE(ratio->second == 3.0);
    // Empty side or zero Fisher mass is reported as undefined.
    REQUIRE(!theta_for_partition(two, IndicatorSet::full_set(g)).has_value());
    REQUIRE(!theta_for_partition(two, IndicatorSet::empty_set(g)).has_value());
    LocalStats zero{g, 0, {1.0, 1.0, 3.0, 3.0}, {1.0, 1.0, 0.0, 0.0}};
    IndicatorSet low(g);
    low.set(0);
    low.set(1);
    REQUIRE(!theta_for_partition(zero, low).has_value());
}

TEST_CASE("noiseless stats are recovered exactly", "[estimators]") {
    TileGrid grid(2, 2);
    const auto truth = top_half(grid);
    const auto stats = noiseless_stats(grid, truth, 1.0, 3.0);
    const ThetaPrior prior({0.5, 1.5}, {2.5, 3.5}, 1.0);
    for (const auto& family :
         {CandidateFamily::full_power_set(grid), CandidateFamily::model_a(grid),
          CandidateFamily::model_b(grid)}) {
        const auto result = estimate_constrained(stats, prior, family);
        REQUIRE(result.theta_minus == 1.0);
        REQUIRE(result.theta_plus == 3.0);
        REQUIRE(result.lambda_plus == truth);
        REQUIRE(result.objective ==
                objective_value(stats, result.theta_minus, result.theta_plus, result.lambda_plus));
    }
}

TEST_CASE("constrained estimator matches the power-set oracle", "[estimators]") {
    TileGrid grid(2, 2);
    const ThetaPrior prior({0.5, 1.5}, {2.5, 3.5}, 1.0);
    const auto family = CandidateFamily::full_power_set(grid);
    for (std::uint32_t trial = 0; trial < 40; ++trial) {
        auto stats = synthetic_stats(grid, 77 + trial, false);
        for (auto& f : stats.fisher) f += 0.5;
        // Oracle: enumerate all 16 sets with closed-form clamped thetas.
        double best_obj = -1e300;
        IndicatorSet best(grid);
        double best_tm = 0.0, best_tp = 0.0;
        for (int mask = 0; mask < 16; ++mask) {
            IndicatorSet s(grid);
            for (int t = 0; t < 4; ++t)
                if ((mask >> t) & 1) s.set(t);
            double up = 0, ip = 0, um = 0, im = 0;
            for (int t = 0; t < 4; ++t) {
                if (s.test(t)) {
                    up += stats.u[static_cast<std::size_t>(t)];
                    ip += stats.fisher[static_cast<std::size_t>(t)];
                } else {
                    um += stats.u[static_cast<std::size_t>(t)];
                    im += stats.fisher[static_cast<std::size_t>(t)];
                }
            }
            const double tm = im > 0 ? prior.clamp_minus(um / im) : prior.mid_minus();
            const double tp = ip > 0 ? prior.clamp_plus(up / ip) : prior.mid_plus();
            const double obj = objective_value(stats, tm, tp, s);
            if (obj > best_obj) {
                best_obj = obj;
                best = s;
                best_tm = tm;
                best_tp = tp;
            }
        }
        const auto result = estimate_constrained(stats, prior, family);
        REQUIRE(result.lambda_plus == best);
        REQUIRE(result.theta_minus == best_tm);
        REQUIRE(result.theta_plus == best_tp);
        REQUIRE(result.objective == best_obj);
    }
}

TEST_CASE("prior relabeling swaps the recovered labels", "[estimators]") {
    TileGrid grid(2, 2);
    const auto truth = top_half(grid);
    const auto stats = noiseless_stats(grid, truth, 3.0, 1.0);  // jump down: eta < 0
    const auto family = CandidateFamily::full_power_set(grid);
    const ThetaPrior up({0.5, 1.5}, {2.5, 3.5}, 1.0);
    const auto result = estimate_constrained(stats, up, family);
    // theta on the truth tiles is 1, off-truth 3; with Theta_+ above
    // Theta_-, the estimator labels the complement as Lambda_+.
    REQUIRE(result.lambda_plus == truth.complement());
    REQUIRE(result.theta_minus == 1.0);
    REQUIRE(result.theta_plus == 3.0);
}

TEST_CASE("wider priors never lose objective", "[estimators]") {
    TileGrid grid(2, 2);
    const auto family = CandidateFamily::full_power_set(grid);
    for (std::uint32_t trial = 0; trial < 30; ++trial) {
        auto stats = synthetic_stats(grid, 500 + trial, false);
        for (auto& f : stats.fisher) f += 0.5;
        for (auto& u : stats.u) u = std::abs(u) + 0.2;  // keep ratios positive
        const ThetaPrior narrow({0.8, 1.2}, {2.8, 3.2}, 1.0);
        const ThetaPrior wide({0.5, 1.5}, {2.5, 3.5}, 1.0);
        const auto a = estimate_constrained(stats, narrow, family);
        const auto b = estimate_constrained(stats, wide, family);
        REQUIRE(b.objective >= a.objective - 1e-12 * std::abs(a.objective));
    }
}

TEST_CASE("prior validation", "[estimators]") {
    REQUIRE_THROWS_AS(ThetaPrior({1.0, 2.0}, {2.5, 3.0}, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ThetaPrior({1.0, 2.0}, {3.0, 4.0}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ThetaPrior({2.0, 1.0}, {3.0, 4.0}, 0.5), std::invalid_argument);
    // Reversed order (Theta_+ below Theta_-) is a valid separated prior.
    REQUIRE_NOTHROW(ThetaPrior({3.0, 4.0}, {1.0, 2.0}, 1.0));
}

TEST_CASE("profiled tiling estimator matches exhaustive enumeration", "[estimators]") {
    TileGrid grid(2, 2);
    const ThetaPrior prior({0.5, 1.5}, {2.5, 3.5}, 1.0);
    const auto family = CandidateFamily::full_power_set(grid);
    for (std::uint32_t trial = 0; trial < 30; ++trial) {
        auto stats = synthetic_stats(grid, 900 + trial, false);
        for (auto& f : stats.fisher) f += 0.5;
        const auto reference = estimate_constrained(stats, prior, family);
        const auto tiling = estimate_tiling(stats, family, reference);

        double best_obj = -1e300;
        IndicatorSet best(grid);
        for (int mask = 1; mask < 15; ++mask) {  // skip empty and full
            IndicatorSet s(grid);
            for (int t = 0; t < 4; ++t)
                if ((mask >> t) & 1) s.set(t);
            const auto theta = theta_for_partition(stats, s);
            if (!theta) continue;
            const double obj = objective_value(stats, theta->first, theta->second, s);
            if (obj > best_obj) {
                best_obj = obj;
                best = s;
            }
        }
        REQUIRE(tiling.tilde_lambda_plus == best);
        REQUIRE(tiling.profiled_objective == best_obj);
    }
}

TEST_CASE("profiled objective cannot tell a set from its complement", "[estimators]") {
    TileGrid grid(2, 2);
    auto stats = synthetic_stats(grid, 4321, false);
    for (auto& f : stats.fisher) f += 0.5;
    IndicatorSet s(grid);
    s.set(0);
    s.set(3);
    const auto ta = theta_for_partition(stats, s);
    const auto tb = theta_for_partition(stats, s.complement());
    REQUIRE(tb->first == ta->second);
    REQUIRE(tb->second == ta->first);
    REQUIRE(objective_value(stats, ta->first, ta->second, s) ==
            objective_value(stats, tb->first, tb->second, s.complement()));
}

TEST_CASE("noiseless tiling estimate identifies grid-anchored truths", "[estimators]") {
    TileGrid grid(2, 4);
    // Rectangle (columns 1-2, rows 1-2): in ModelB but not a half space, so
    // its complement is outside the family.
    IndicatorSet truth(grid);
    for (std::int64_t col = 1; col <= 2; ++col)
        for (int j = 1; j <= 2; ++j) truth.set(grid.tile_in_column(col, j));
    const auto stats = noiseless_stats(grid, truth, 1.0, 3.0);
    const ThetaPrior prior({0.5, 1.5}, {2.5, 3.5}, 1.0);
    const auto family = CandidateFamily::model_b(grid);
    const auto reference = estimate_constrained(stats, prior, family);
    REQUIRE(reference.lambda_plus == truth);
    const auto tiling = estimate_tiling(stats, family, reference);
    REQUIRE(tiling.tilde_lambda_plus == truth);
    REQUIRE(tiling.star_lambda_plus == truth);
    REQUIRE(tiling.star_theta_minus == 1.0);
    REQUIRE(tiling.star_theta_plus == 3.0);
}

TEST_CASE("Z process is the exact objective gap to the truth", "[estimators]") {
    TileGrid grid(2, 4);
    const auto truth = top_half(grid);
    const double t0m = 1.0, t0p = 3.0;
    for (std::uint32_t trial = 0; trial < 50; ++trial) {
        auto stats = synthetic_stats(grid, 2500 + trial, false);
        for (auto& f : stats.fisher) f += 0.5;
        // Z at the truth vanishes identically.
        REQUIRE(z_process(stats, t0m, t0p, truth, truth, t0m, t0p) == 0.0);
        // Z equals obj(truth) - obj(candidate) exactly.
        IndicatorSet cand(grid);
        for (std::int64_t i = 0; i < grid.tile_count(); ++i)
            if (uniform_draw(7, trial, static_cast<std::uint32_t>(i), 2) < 0.5) cand.set(i);
        const double tm = 0.8 + 0.4 * uniform_draw(7, trial, 0, 3);
        const double tp = 2.6 + 0.8 * uniform_draw(7, trial, 1, 3);
        const double z = z_process(stats, tm, tp, cand, truth, t0m, t0p);
        const double gap =
            objective_value(stats, t0m, t0p, truth) - objective_value(stats, tm, tp, cand);
        REQUIRE(z == Catch::Approx(gap).epsilon(1e-10));
    }
    // Non-tiling truths are refused by the domain overload.
    const auto disk = GroundTruthDomain::ball(2, {0.5, 0.5}, 0.3);
    auto stats = synthetic_stats(grid, 1, false);
    REQUIRE_THROWS_AS(z_process(stats, 1.0, 3.0, truth, disk, 1.0, 3.0), std::invalid_argument);
}

TEST_CASE("Z-split identity holds to near machine precision", "[estimators]") {
    TileGrid grid(2, 4);
    const auto truth = top_half(grid);
    double worst = 0.0;
    for (std::uint32_t trial = 0; trial < 100; ++trial) {
        auto stats = synthetic_stats(grid, 3000 + trial, false);
        for (auto& f : stats.fisher) f += 0.5;
        IndicatorSet cand(grid);
        for (std::int64_t i = 0; i < grid.tile_count(); ++i)
            if (uniform_draw(9, trial, static_cast<std::uint32_t>(i), 0) < 0.5) cand.set(i);
        if (cand.empty() || cand.complement().empty()) cand.set(trial % 16, !cand.test(trial % 16));
        const auto res = z_split_identity_check(stats, cand, truth, 1.0, 3.0);
        REQUIRE(!res.degenerate);
        worst = std::max(worst, res.relative_gap);
    }
    REQUIRE(worst <= 1e-9);
}

TEST_CASE("Z-split reduces to martingale terms in degenerate cases", "[estimators]") {
    TileGrid grid(2, 4);
    const auto truth = top_half(grid);
    auto stats = synthetic_stats(grid, 555, false);
    for (auto& f : stats.fisher) f += 0.5;
    // Candidate = truth: the eta cross terms vanish.
    const auto at_truth = z_split_identity_check(stats, truth, truth, 1.0, 3.0);
    double i_p = 0, i_m = 0, m_p = 0, m_m = 0;
    for (std::int64_t t = 0; t < grid.tile_count(); ++t) {
        const double theta0 = truth.test(t) ? 3.0 : 1.0;
        const double mart = stats.u[static_cast<std::size_t>(t)] -
                            theta0 * stats.fisher[static_cast<std::size_t>(t)];
        if (truth.test(t)) {
            i_p += stats.fisher[static_cast<std::size_t>(t)];
            m_p += mart;
        } else {
            i_m += stats.fisher[static_cast<std::size_t>(t)];
            m_m += mart;
        }
    }
    REQUIRE(at_truth.split ==
            Catch::Approx(-0.5 * m_p * m_p / i_p - 0.5 * m_m * m_m / i_m).epsilon(1e-12));
    // eta = 0: only the martingale squares survive.
    IndicatorSet cand(grid);
    cand.set(1);
    cand.set(6);
    cand.set(9);
    const auto flat = z_split_identity_check(stats, cand, truth, 2.0, 2.0);
    REQUIRE(!flat.degenerate);
    REQUIRE(flat.relative_gap <= 1e-9);
}
