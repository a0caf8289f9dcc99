// Regular delta-grid of [0,1]^d and tile subsets stored as bitmasks.
//
// Tiles are indexed 0..n-1 per axis; tile (i_0,...,i_{d-1}) is the closed
// hypercube prod_a [i_a*delta, (i_a+1)*delta] with center delta*(i_a+0.5).
// Flat indices are row-major with the LAST axis fastest, so the n tiles of
// a "column" (fixed first d-1 coordinates) are contiguous. The last axis is
// the vertical direction used by the epigraph and interval candidate
// families.
#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatedge {

struct TileGrid {
    int d = 2;  // dimension, >= 2
    int n = 1;  // tiles per axis, delta = 1/n

    TileGrid() = default;
    TileGrid(int dim, int tiles_per_axis) : d(dim), n(tiles_per_axis) {
        if (d < 2) throw std::invalid_argument("TileGrid: dimension must be >= 2");
        if (n < 1) throw std::invalid_argument("TileGrid: tiles per axis must be >= 1");
        double count = 1.0;
        for (int a = 0; a < d; ++a) count *= n;
        if (count > 9.0e15) throw std::invalid_argument("TileGrid: too many tiles");
    }

    double delta() const { return 1.0 / n; }

    std::int64_t tile_count() const {
        std::int64_t c = 1;
        for (int a = 0; a < d; ++a) c *= n;
        return c;
    }

    std::int64_t column_count() const {
        std::int64_t c = 1;
        for (int a = 0; a < d - 1; ++a) c *= n;
        return c;
    }

    std::int64_t flat_index(std::span<const int> idx) const {
        std::int64_t f = 0;
        for (int a = 0; a < d; ++a) {
            if (idx[static_cast<std::size_t>(a)] < 0 || idx[static_cast<std::size_t>(a)] >= n)
                throw std::out_of_range("TileGrid::flat_index: index out of range");
            f = f * n + idx[static_cast<std::size_t>(a)];
        }
        return f;
    }

    void multi_index(std::int64_t flat, std::span<int> out) const {
        for (int a = d - 1; a >= 0; --a) {
            out[static_cast<std::size_t>(a)] = static_cast<int>(flat % n);
            flat /= n;
        }
    }

    // Tile flat index for column `col` (flat over the first d-1 axes) and
    // vertical index j in [0, n).
    std::int64_t tile_in_column(std::int64_t col, int j) const { return col * n + j; }

    void center(std::int64_t flat, std::span<double> out) const {
        const double del = delta();
        for (int a = d - 1; a >= 0; --a) {
            out[static_cast<std::size_t>(a)] = del * (static_cast<double>(flat % n) + 0.5);
            flat /= n;
        }
    }

    std::vector<double> center(std::int64_t flat) const {
        std::vector<double> x(static_cast<std::size_t>(d));
        center(flat, x);
        return x;
    }

    // Flat index of the tile whose half-open box [lo, hi) contains x; points
    // on the upper boundary of [0,1]^d are clamped into the last tile.
    std::int64_t tile_containing(std::span<const double> x) const {
        std::int64_t f = 0;
        for (int a = 0; a < d; ++a) {
            auto i = static_cast<std::int64_t>(x[static_cast<std::size_t>(a)] * n);
            if (i < 0) i = 0;
            if (i >= n) i = n - 1;
            f = f * n + i;
        }
        return f;
    }

    bool operator==(const TileGrid& o) const { return d == o.d && n == o.n; }
};

// A subset of tiles (a member of the family P of hypercube unions),
// immutable in spirit: mutate only while building, then share freely.
class IndicatorSet {
  public:
    IndicatorSet() = default;
    explicit IndicatorSet(const TileGrid& grid)
        : grid_(grid), bits_(static_cast<std::size_t>((grid.tile_count() + 63) / 64), 0) {}

    static IndicatorSet empty_set(const TileGrid& grid) { return IndicatorSet(grid); }

    static IndicatorSet full_set(const TileGrid& grid) {
        IndicatorSet s(grid);
        for (std::int64_t i = 0; i < grid.tile_count(); ++i) s.set(i);
        return s;
    }

    const TileGrid& grid() const { return grid_; }

    bool test(std::int64_t i) const {
        return (bits_[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1u;
    }

    void set(std::int64_t i, bool value = true) {
        const std::uint64_t mask = 1ull << (i & 63);
        if (value)
            bits_[static_cast<std::size_t>(i >> 6)] |= mask;
        else
            bits_[static_cast<std::size_t>(i >> 6)] &= ~mask;
    }

    std::int64_t count() const {
        std::int64_t c = 0;
        for (std::uint64_t w : bits_) c += std::popcount(w);
        return c;
    }

    // Lebesgue volume of the union: count / n^d, always in [0,1].
    double volume() const {
        return static_cast<double>(count()) / static_cast<double>(grid_.tile_count());
    }

    IndicatorSet complement() const {
        IndicatorSet r(grid_);
        for (std::size_t w = 0; w < bits_.size(); ++w) r.bits_[w] = ~bits_[w];
        r.clear_tail();
        return r;
    }

    bool empty() const {
        for (std::uint64_t w : bits_)
            if (w) return false;
        return true;
    }

    bool operator==(const IndicatorSet& o) const {
        return grid_ == o.grid_ && bits_ == o.bits_;
    }

    // Row-major bit string, one '0'/'1' character per tile in flat order.
    std::string to_bit_string() const {
        std::string s(static_cast<std::size_t>(grid_.tile_count()), '0');
        for (std::int64_t i = 0; i < grid_.tile_count(); ++i)
            if (test(i)) s[static_cast<std::size_t>(i)] = '1';
        return s;
    }

    static IndicatorSet from_bit_string(const TileGrid& grid, const std::string& s) {
        if (static_cast<std::int64_t>(s.size()) != grid.tile_count())
            throw std::invalid_argument("IndicatorSet: bit string length mismatch");
        IndicatorSet r(grid);
        for (std::int64_t i = 0; i < grid.tile_count(); ++i) {
            const char c = s[static_cast<std::size_t>(i)];
            if (c == '1')
                r.set(i);
            else if (c != '0')
                throw std::invalid_argument("IndicatorSet: bit string must be 0/1");
        }
        return r;
    }

    friend std::int64_t xor_count(const IndicatorSet& a, const IndicatorSet& b) {
        require_same_grid(a, b);
        std::int64_t c = 0;
        for (std::size_t w = 0; w < a.bits_.size(); ++w)
            c += std::popcount(a.bits_[w] ^ b.bits_[w]);
        return c;
    }

    friend IndicatorSet set_union(const IndicatorSet& a, const IndicatorSet& b) {
        require_same_grid(a, b);
        IndicatorSet r(a.grid_);
        for (std::size_t w = 0; w < a.bits_.size(); ++w) r.bits_[w] = a.bits_[w] | b.bits_[w];
        return r;
    }

    friend IndicatorSet set_intersection(const IndicatorSet& a, const IndicatorSet& b) {
        require_same_grid(a, b);
        IndicatorSet r(a.grid_);
        for (std::size_t w = 0; w < a.bits_.size(); ++w) r.bits_[w] = a.bits_[w] & b.bits_[w];
        return r;
    }

    friend IndicatorSet set_difference(const IndicatorSet& a, const IndicatorSet& b) {
        require_same_grid(a, b);
        IndicatorSet r(a.grid_);
        for (std::size_t w = 0; w < a.bits_.size(); ++w) r.bits_[w] = a.bits_[w] & ~b.bits_[w];
        return r;
    }

    // Lexicographic order on the flat bit string; used for deterministic
    // tie-breaking between equal-objective candidate sets.
    friend bool bit_string_less(const IndicatorSet& a, const IndicatorSet& b) {
        require_same_grid(a, b);
        for (std::int64_t i = 0; i < a.grid_.tile_count(); ++i) {
            const bool x = a.test(i), y = b.test(i);
            if (x != y) return !x;  // '0' < '1'
        }
        return false;
    }

  private:
    static void require_same_grid(const IndicatorSet& a, const IndicatorSet& b) {
        if (!(a.grid_ == b.grid_))
            throw std::invalid_argument("IndicatorSet: grid mismatch");
    }

    void clear_tail() {
        const std::int64_t total = grid_.tile_count();
        const int used = static_cast<int>(total & 63);
        if (used != 0 && !bits_.empty())
            bits_.back() &= (1ull << used) - 1ull;
    }

    TileGrid grid_;
    std::vector<std::uint64_t> bits_;
};

// delta^d * |a XOR b|; the pseudometric the estimation risk is measured in.
inline double symmetric_difference_volume(const IndicatorSet& a, const IndicatorSet& b) {
    return static_cast<double>(xor_count(a, b)) /
           static_cast<double>(a.grid().tile_count());
}

}  // namespace heatedge
