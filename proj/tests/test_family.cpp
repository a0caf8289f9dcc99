#include <catch2/catch_amalgamated.hpp>

#include "heatedge/family.hpp"

using namespace heatedge;

namespace {

std::int64_t enumerate_count(const CandidateFamily& fam) {
    std::int64_t count = 0;
    std::int64_t last_id = -1;
    fam.enumerate([&](std::int64_t id, const IndicatorSet& s) {
        REQUIRE(id == last_id + 1);  // ids are dense and ordered
        REQUIRE(s.grid() == fam.grid);
        REQUIRE(fam.contains(s));
        last_id = id;
        ++count;
    });
    return count;
}

}  // namespace

TEST_CASE("family sizes match the closed forms", "[family]") {
    // ModelA: n^{d-1} (n+1); ModelB: n^{d-1} ((n+n^2)/2 + 1).
    for (int d : {2, 3}) {
        for (int n = 1; n <= 8; ++n) {
            TileGrid grid(d, n);
            std::int64_t cols = 1;
            for (int a = 0; a < d - 1; ++a) cols *= n;

            const auto a = CandidateFamily::model_a(grid);
            REQUIRE(a.enumerated_size() == cols * (n + 1));
            REQUIRE(enumerate_count(a) == a.enumerated_size());

            const auto b = CandidateFamily::model_b(grid);
            REQUIRE(b.enumerated_size() == cols * ((n + n * n) / 2 + 1));
            REQUIRE(enumerate_count(b) == b.enumerated_size());
        }
    }
    // Worked instances from the size formulas.
    REQUIRE(CandidateFamily::model_a(TileGrid(2, 2)).enumerated_size() == 6);
    REQUIRE(CandidateFamily::model_b(TileGrid(2, 2)).enumerated_size() == 8);
}

TEST_CASE("full power set enumeration and guard", "[family]") {
    TileGrid tiny(2, 2);
    const auto fam = CandidateFamily::full_power_set(tiny);
    REQUIRE(fam.enumerated_size() == 16);
    REQUIRE(enumerate_count(fam) == 16);

    TileGrid big(2, 5);  // N = 25 > 20
    REQUIRE_THROWS_AS(CandidateFamily::full_power_set(big).enumerated_size(),
                      std::invalid_argument);
}

TEST_CASE("structural membership of the product families", "[family]") {
    TileGrid grid(2, 4);
    const auto ma = CandidateFamily::model_a(grid);
    const auto mb = CandidateFamily::model_b(grid);

    // A mixed-cut epigraph is in ModelA (and in ModelB, suffixes are intervals).
    IndicatorSet epi(grid);
    const int cuts[4] = {1, 0, 3, 4};
    for (std::int64_t col = 0; col < 4; ++col)
        for (int j = cuts[col]; j < 4; ++j) epi.set(grid.tile_in_column(col, j));
    REQUIRE(ma.contains(epi));
    REQUIRE(mb.contains(epi));

    // A middle rectangle is ModelB but not ModelA; its complement is neither.
    IndicatorSet rect(grid);
    for (std::int64_t col = 1; col <= 2; ++col)
        for (int j = 1; j <= 2; ++j) rect.set(grid.tile_in_column(col, j));
    REQUIRE(!ma.contains(rect));
    REQUIRE(mb.contains(rect));
    REQUIRE(!ma.contains(rect.complement()));
    REQUIRE(!mb.contains(rect.complement()));

    // A column with two separated runs is not ModelB.
    IndicatorSet split(grid);
    split.set(grid.tile_in_column(0, 0));
    split.set(grid.tile_in_column(0, 2));
    REQUIRE(!mb.contains(split));
}

TEST_CASE("explicit families keep their member list", "[family]") {
    TileGrid grid(2, 2);
    IndicatorSet a(grid), b(grid);
    a.set(0);
    b.set(1);
    const auto fam = CandidateFamily::explicit_list(grid, {a, b});
    REQUIRE(fam.enumerated_size() == 2);
    REQUIRE(fam.contains(a));
    IndicatorSet c(grid);
    c.set(2);
    REQUIRE(!fam.contains(c));
}
