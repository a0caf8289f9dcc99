// Ground-truth change domains: the set Lambda_+ where the diffusivity takes
// its upper value. Three representations cover the models the estimators
// are analyzed under: a tile-anchored set, the open epigraph of an
// interface function over the first d-1 coordinates, and a general (convex)
// set given by a point membership test.
#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "heatedge/grid.hpp"

namespace heatedge {

class GroundTruthDomain {
  public:
    enum class Kind { TilingSet, GraphFragment, Convex };

    using MembershipFn = std::function<bool(std::span<const double>)>;
    using InterfaceFn = std::function<double(std::span<const double>)>;

    static GroundTruthDomain tiling(IndicatorSet tiles) {
        GroundTruthDomain g;
        g.kind_ = Kind::TilingSet;
        g.d_ = tiles.grid().d;
        g.tiles_ = std::move(tiles);
        return g;
    }

    // Open epigraph {(x, y) : y > tau(x)} of an interface tau on [0,1]^{d-1}.
    static GroundTruthDomain graph(int d, InterfaceFn tau) {
        GroundTruthDomain g;
        g.kind_ = Kind::GraphFragment;
        g.d_ = d;
        g.tau_ = std::move(tau);
        return g;
    }

    // Convexity is asserted by the caller, not checked.
    static GroundTruthDomain convex(int d, MembershipFn member) {
        GroundTruthDomain g;
        g.kind_ = Kind::Convex;
        g.d_ = d;
        g.member_ = std::move(member);
        return g;
    }

    static GroundTruthDomain ball(int d, std::vector<double> center, double radius) {
        return convex(d, [c = std::move(center), r2 = radius * radius](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - c[a]) * (x[a] - c[a]);
            return s < r2;
        });
    }

    // Open axis-aligned box (lo, hi).
    static GroundTruthDomain box(std::vector<double> lo, std::vector<double> hi) {
        const int d = static_cast<int>(lo.size());
        return convex(d, [lo = std::move(lo), hi = std::move(hi)](std::span<const double> x) {
            for (std::size_t a = 0; a < x.size(); ++a)
                if (!(x[a] > lo[a] && x[a] < hi[a])) return false;
            return true;
        });
    }

    int dim() const { return d_; }
    Kind kind() const { return kind_; }

    const IndicatorSet& tiles() const {
        if (kind_ != Kind::TilingSet)
            throw std::logic_error("GroundTruthDomain::tiles: not a tiling set");
        return tiles_;
    }

    const InterfaceFn& interface_fn() const {
        if (kind_ != Kind::GraphFragment)
            throw std::logic_error("GroundTruthDomain::interface_fn: not a graph fragment");
        return tau_;
    }

    // Point membership x in Lambda_+^0 for x in [0,1]^d.
    bool contains(std::span<const double> x) const {
        switch (kind_) {
            case Kind::TilingSet:
                return tiles_.test(tiles_.grid().tile_containing(x));
            case Kind::GraphFragment:
                return x[static_cast<std::size_t>(d_ - 1)] > tau_(x.first(static_cast<std::size_t>(d_ - 1)));
            case Kind::Convex:
                return member_(x);
        }
        return false;
    }

  private:
    Kind kind_ = Kind::Convex;
    int d_ = 2;
    IndicatorSet tiles_;
    InterfaceFn tau_;
    MembershipFn member_;
};

}  // namespace heatedge
