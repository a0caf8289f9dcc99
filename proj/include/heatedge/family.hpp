// Candidate-set families for the change-domain search.
//
// ModelA spans epigraph sets: per column (the first d-1 tile coordinates) a
// cut height c in {0..n} selects the vertical tiles j >= c. ModelB spans
// per-column contiguous vertical intervals (possibly empty). Both are
// product families over columns; the exact inner solvers in estimators.hpp
// optimize over that product structure column by column.
//
// enumerate() yields the paper-counted generating members: one single-column
// set per (column, choice) pair, n^{d-1}*(n+1) for ModelA and
// n^{d-1}*((n+n^2)/2+1) for ModelB. FullPowerSet and Explicit enumerate
// their members outright. contains() tests membership in the full product
// family.
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "heatedge/grid.hpp"

namespace heatedge {

struct CandidateFamily {
    enum class Kind { FullPowerSet, ModelA, ModelB, Explicit };

    Kind kind = Kind::FullPowerSet;
    TileGrid grid;
    std::vector<IndicatorSet> members;  // Explicit only

    static CandidateFamily full_power_set(const TileGrid& g) { return {Kind::FullPowerSet, g, {}}; }
    static CandidateFamily model_a(const TileGrid& g) { return {Kind::ModelA, g, {}}; }
    static CandidateFamily model_b(const TileGrid& g) { return {Kind::ModelB, g, {}}; }
    static CandidateFamily explicit_list(const TileGrid& g, std::vector<IndicatorSet> m) {
        for (const auto& s : m)
            if (!(s.grid() == g))
                throw std::invalid_argument("CandidateFamily: member grid mismatch");
        return {Kind::Explicit, g, std::move(m)};
    }

    // Number of ModelB choices per column: the non-empty intervals plus the
    // empty one, (n + n^2)/2 + 1.
    static std::int64_t model_b_choices(int n) {
        return static_cast<std::int64_t>(n) * (n + 1) / 2 + 1;
    }

    std::int64_t enumerated_size() const {
        switch (kind) {
            case Kind::FullPowerSet: {
                if (grid.tile_count() > 20)
                    throw std::invalid_argument("CandidateFamily: power set restricted to N <= 20");
                return std::int64_t{1} << grid.tile_count();
            }
            case Kind::ModelA:
                return grid.column_count() * (grid.n + 1);
            case Kind::ModelB:
                return grid.column_count() * model_b_choices(grid.n);
            case Kind::Explicit:
                return static_cast<std::int64_t>(members.size());
        }
        return 0;
    }

    // Single-column epigraph strip: vertical tiles j >= cut in column `col`.
    IndicatorSet column_suffix(std::int64_t col, int cut) const {
        IndicatorSet s(grid);
        for (int j = cut; j < grid.n; ++j) s.set(grid.tile_in_column(col, j));
        return s;
    }

    // Single-column interval [lo, hi) of vertical tiles.
    IndicatorSet column_interval(std::int64_t col, int lo, int hi) const {
        IndicatorSet s(grid);
        for (int j = lo; j < hi; ++j) s.set(grid.tile_in_column(col, j));
        return s;
    }

    // ModelB per-column choice decoding: choice 0 is the empty interval,
    // then (lo, hi) pairs ordered by lo, then hi.
    std::pair<int, int> decode_interval(std::int64_t choice) const {
        if (choice == 0) return {0, 0};
        std::int64_t c = choice - 1;
        for (int lo = 0; lo < grid.n; ++lo) {
            const std::int64_t span = grid.n - lo;
            if (c < span) return {lo, lo + static_cast<int>(c) + 1};
            c -= span;
        }
        throw std::out_of_range("CandidateFamily: interval choice out of range");
    }

    void enumerate(const std::function<void(std::int64_t, const IndicatorSet&)>& fn) const {
        switch (kind) {
            case Kind::FullPowerSet: {
                const std::int64_t total = enumerated_size();  // validates N <= 20
                const std::int64_t n_tiles = grid.tile_count();
                for (std::int64_t id = 0; id < total; ++id) {
                    IndicatorSet s(grid);
                    for (std::int64_t t = 0; t < n_tiles; ++t)
                        if ((id >> t) & 1) s.set(t);
                    fn(id, s);
                }
                return;
            }
            case Kind::ModelA: {
                std::int64_t id = 0;
                for (std::int64_t col = 0; col < grid.column_count(); ++col)
                    for (int cut = 0; cut <= grid.n; ++cut)
                        fn(id++, column_suffix(col, cut));
                return;
            }
            case Kind::ModelB: {
                const std::int64_t per_col = model_b_choices(grid.n);
                std::int64_t id = 0;
                for (std::int64_t col = 0; col < grid.column_count(); ++col)
                    for (std::int64_t c = 0; c < per_col; ++c) {
                        const auto [lo, hi] = decode_interval(c);
                        fn(id++, column_interval(col, lo, hi));
                    }
                return;
            }
            case Kind::Explicit: {
                for (std::size_t i = 0; i < members.size(); ++i)
                    fn(static_cast<std::int64_t>(i), members[i]);
                return;
            }
        }
    }

    // Membership of a set in the family this kind spans.
    bool contains(const IndicatorSet& s) const {
        if (!(s.grid() == grid)) return false;
        switch (kind) {
            case Kind::FullPowerSet:
                return true;
            case Kind::ModelA: {
                for (std::int64_t col = 0; col < grid.column_count(); ++col) {
                    bool seen = false;
                    for (int j = 0; j < grid.n; ++j) {
                        const bool b = s.test(grid.tile_in_column(col, j));
                        if (seen && !b) return false;  // not a suffix
                        seen = seen || b;
                    }
                }
                return true;
            }
            case Kind::ModelB: {
                for (std::int64_t col = 0; col < grid.column_count(); ++col) {
                    int transitions = 0;
                    bool prev = false;
                    for (int j = 0; j < grid.n; ++j) {
                        const bool b = s.test(grid.tile_in_column(col, j));
                        if (b != prev) ++transitions;
                        prev = b;
                    }
                    if (transitions > 2) return false;  // not one contiguous run
                }
                return true;
            }
            case Kind::Explicit: {
                for (const auto& m : members)
                    if (m == s) return true;
                return false;
            }
        }
        return false;
    }
};

}  // namespace heatedge
