// Tile-level geometry: minimal tilings, boundary tile detection, set
// pseudometrics and the convex-hull tiling proxy.
//
// Interior intersection tests use a deterministic sub-lattice of m^d
// strictly interior points per tile (m = 9 per axis by default). The
// sample coordinates are delta*(i + (k+0.5)/m), so for odd m the tile
// center is one of the samples, bit-exactly.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "heatedge/domain.hpp"
#include "heatedge/grid.hpp"
#include "heatedge/mathutil.hpp"

namespace heatedge {

namespace detail {

inline void require_dim_match(const GroundTruthDomain& domain, const TileGrid& grid) {
    if (domain.dim() != grid.d)
        throw std::invalid_argument("geometry: domain/grid dimension mismatch");
}

// Classifies every tile by whether its interior sub-lattice contains
// members and/or non-members of the domain.
struct TileClassification {
    IndicatorSet touching;            // some sample inside the domain
    std::vector<std::int64_t> mixed;  // samples on both sides
};

inline TileClassification classify_tiles(const GroundTruthDomain& domain,
                                         const TileGrid& grid, int samples_per_axis) {
    require_dim_match(domain, grid);
    if (samples_per_axis < 1)
        throw std::invalid_argument("geometry: samples_per_axis must be >= 1");

    TileClassification out{IndicatorSet(grid), {}};
    const int d = grid.d, m = samples_per_axis;
    const double del = grid.delta();
    std::vector<int> tile_idx(static_cast<std::size_t>(d));
    std::vector<int> sub(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    const std::int64_t total = grid.tile_count();
    double sub_total = 1.0;
    for (int a = 0; a < d; ++a) sub_total *= m;

    for (std::int64_t t = 0; t < total; ++t) {
        grid.multi_index(t, tile_idx);
        bool any_in = false, any_out = false;
        std::fill(sub.begin(), sub.end(), 0);
        for (std::int64_t s = 0; s < static_cast<std::int64_t>(sub_total); ++s) {
            for (int a = 0; a < d; ++a)
                x[static_cast<std::size_t>(a)] =
                    del * (tile_idx[static_cast<std::size_t>(a)] +
                           (sub[static_cast<std::size_t>(a)] + 0.5) / m);
            (domain.contains(x) ? any_in : any_out) = true;
            if (any_in && any_out) break;
            for (int a = d - 1; a >= 0; --a) {
                if (++sub[static_cast<std::size_t>(a)] < m) break;
                sub[static_cast<std::size_t>(a)] = 0;
            }
        }
        if (any_in) out.touching.set(t);
        if (any_in && any_out) out.mixed.push_back(t);
    }
    return out;
}

}  // namespace detail

// Union of all tiles whose open interior intersects the domain; the best
// grid-representable approximation of Lambda_+^0. Tiling-set inputs on the
// same grid are returned unchanged.
inline IndicatorSet minimal_tiling(const GroundTruthDomain& domain, const TileGrid& grid,
                                   int samples_per_axis = 9) {
    detail::require_dim_match(domain, grid);
    if (domain.kind() == GroundTruthDomain::Kind::TilingSet &&
        domain.tiles().grid() == grid)
        return domain.tiles();
    return detail::classify_tiles(domain, grid, samples_per_axis).touching;
}

// Indices of tiles whose interior meets the boundary of the domain,
// detected through the equivalent mixed-sample characterization: a tile is
// a boundary tile iff its interior samples contain both members and
// non-members.
inline std::vector<std::int64_t> boundary_tiles(const GroundTruthDomain& domain,
                                                const TileGrid& grid,
                                                int samples_per_axis = 9) {
    detail::require_dim_match(domain, grid);
    if (domain.kind() == GroundTruthDomain::Kind::TilingSet &&
        domain.tiles().grid() == grid)
        return {};
    return detail::classify_tiles(domain, grid, samples_per_axis).mixed;
}

// Quasi-Monte Carlo estimate of lambda(a TRIANGLE domain) against a
// continuum truth, using a Halton point set. Requires samples >= 10^4.
struct ContinuumSymDiff {
    double volume = 0.0;
    std::int64_t samples = 0;
};

inline ContinuumSymDiff symmetric_difference_vs_continuum(const IndicatorSet& a,
                                                          const GroundTruthDomain& domain,
                                                          std::int64_t samples) {
    detail::require_dim_match(domain, a.grid());
    if (samples < 10000)
        throw std::invalid_argument("symmetric_difference_vs_continuum: need >= 1e4 samples");
    const TileGrid& grid = a.grid();
    std::vector<double> x(static_cast<std::size_t>(grid.d));
    std::int64_t hits = 0;
    for (std::int64_t i = 1; i <= samples; ++i) {
        halton_point(i, x);
        const bool in_a = a.test(grid.tile_containing(x));
        if (in_a != domain.contains(x)) ++hits;
    }
    return {static_cast<double>(hits) / static_cast<double>(samples), samples};
}

// Hausdorff distance between the two tile unions, evaluated on tile-center
// representatives. The polytope distance differs from this by at most
// delta*sqrt(d)/2 in each direction.
inline double hausdorff_distance(const IndicatorSet& a, const IndicatorSet& b) {
    if (!(a.grid() == b.grid()))
        throw std::invalid_argument("hausdorff_distance: grid mismatch");
    if (a.empty() || b.empty())
        throw std::invalid_argument("hausdorff_distance: sets must be non-empty");
    const TileGrid& grid = a.grid();
    std::vector<std::vector<double>> ca, cb;
    for (std::int64_t i = 0; i < grid.tile_count(); ++i) {
        if (a.test(i)) ca.push_back(grid.center(i));
        if (b.test(i)) cb.push_back(grid.center(i));
    }
    auto directed = [&](const auto& from, const auto& to) {
        double worst = 0.0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) {
                double s = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
                best = std::min(best, s);
            }
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(directed(ca, cb), directed(cb, ca));
}

namespace detail {

// Convex hull of 2-d points by monotone chain, counterclockwise, no
// strictly collinear interior vertices.
inline std::vector<std::array<double, 2>> convex_hull_2d(std::vector<std::array<double, 2>> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;
    auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& p,
                    const std::array<double, 2>& q) {
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
    };
    std::vector<std::array<double, 2>> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Membership in the closed hull (point / segment / polygon cases), with a
// small absolute slack so samples lying exactly on edges are kept.
inline bool in_hull_2d(const std::vector<std::array<double, 2>>& hull, double x, double y,
                       double tol = 1e-12) {
    if (hull.empty()) return false;
    if (hull.size() == 1)
        return std::abs(x - hull[0][0]) <= tol && std::abs(y - hull[0][1]) <= tol;
    if (hull.size() == 2) {
        const double ux = hull[1][0] - hull[0][0], uy = hull[1][1] - hull[0][1];
        const double vx = x - hull[0][0], vy = y - hull[0][1];
        const double len2 = ux * ux + uy * uy;
        const double t = (vx * ux + vy * uy) / len2;
        if (t < -tol || t > 1.0 + tol) return false;
        const double dx = vx - t * ux, dy = vy - t * uy;
        return dx * dx + dy * dy <= tol * tol;
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& p = hull[i];
        const auto& q = hull[(i + 1) % hull.size()];
        const double c = (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0]);
        if (c < -tol) return false;
    }
    return true;
}

}  // namespace detail

struct ConvexifyResult {
    IndicatorSet set;
    double sym_diff_to_input = 0.0;  // lambda(set TRIANGLE input), reported as a diagnostic
    int iterations = 0;
};

// Minimal tiling of the convex hull of the member tile centers, iterated to
// a fixed point so the operation is exactly idempotent. This is a computable
// proxy for the minimum-distance convex fit, not that infimum itself; the
// gap to the input is surfaced through the diagnostic. Two-dimensional
// grids only.
inline ConvexifyResult convexify_with_diagnostics(const IndicatorSet& a,
                                                  int samples_per_axis = 9) {
    if (a.empty()) throw std::invalid_argument("convexify: empty input set");
    if (a.grid().d != 2)
        throw std::invalid_argument("convexify: implemented for d = 2 grids");
    const TileGrid& grid = a.grid();

    IndicatorSet current = a;
    int iterations = 0;
    for (;;) {
        ++iterations;
        std::vector<std::array<double, 2>> centers;
        for (std::int64_t i = 0; i < grid.tile_count(); ++i) {
            if (!current.test(i)) continue;
            const auto c = grid.center(i);
            centers.push_back({c[0], c[1]});
        }
        const auto hull = detail::convex_hull_2d(std::move(centers));
        const auto hull_domain = GroundTruthDomain::convex(
            2, [&hull](std::span<const double> x) {
                return detail::in_hull_2d(hull, x[0], x[1]);
            });
        IndicatorSet next = detail::classify_tiles(hull_domain, grid, samples_per_axis).touching;
        if (next == current) break;
        current = std::move(next);
        if (iterations > static_cast<int>(grid.tile_count()))
            throw std::logic_error("convexify: fixed point iteration failed to settle");
    }
    return {current, symmetric_difference_volume(current, a), iterations};
}

inline IndicatorSet convexify(const IndicatorSet& a, int samples_per_axis = 9) {
    return convexify_with_diagnostics(a, samples_per_axis).set;
}

}  // namespace heatedge
