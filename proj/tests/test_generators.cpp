#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <furstlab/furstlab.hpp>

#include <set>

using namespace furstlab;

TEST_CASE("cantor axis tracks the target dimension") {
    CantorAxis ax = cantor_axis(4, 0.5);
    CHECK(ax.T == 1);
    CHECK(ax.indices == std::vector<long long>{0, 1, 4, 5});
    CHECK(ax.achieved_dim == doctest::Approx(0.5));

    CantorAxis full = cantor_axis(4, 1.0);
    CHECK(full.indices.size() == 16);
    CHECK(full.achieved_dim == doctest::Approx(1.0));

    CantorAxis point = cantor_axis(4, 0.0);
    CHECK(point.indices == std::vector<long long>{0});

    CantorAxis thirds = cantor_axis(3, 2.0 / 3.0);
    CHECK(thirds.indices.size() == 4);
    CHECK(thirds.achieved_dim == doctest::Approx(2.0 / 3.0));

    // forced block size
    CantorAxis blocked = cantor_axis(4, 0.5, 2);
    CHECK(blocked.T == 2);
    CHECK(blocked.indices.size() == 4);

    CHECK_THROWS(cantor_axis(0, 0.5));
    CHECK_THROWS(cantor_axis(4, 1.5));
    CHECK_THROWS(cantor_axis(4, 0.5, 3));  // 3 does not divide 4
}

TEST_CASE("axis indices stay sorted and in range") {
    for (int n : {4, 6, 8}) {
        for (double s : {0.25, 0.5, 0.75, 1.0}) {
            CantorAxis ax = cantor_axis(n, s);
            REQUIRE(!ax.indices.empty());
            for (size_t i = 0; i < ax.indices.size(); ++i) {
                CHECK(ax.indices[i] >= 0);
                CHECK(ax.indices[i] < (1LL << n));
                if (i > 0) CHECK(ax.indices[i - 1] < ax.indices[i]);
            }
        }
    }
}

TEST_CASE("1d cantor set lands in [1, 2]") {
    CubeSet1D A = cantor_1d(Scale(4), 0.5);
    CHECK(A.count() == 4);
    CHECK(A.indices() == std::vector<long long>{16, 17, 20, 21});
}

TEST_CASE("cantor products and interval products") {
    CubeSet C = cantor_product(Scale(4), 0.5, 0.5);
    CHECK(C.distinct_count() == 16);
    CHECK(C.contains(0, 0));
    CHECK(C.contains(5, 5));
    CHECK_FALSE(C.contains(2, 0));

    CubeSet IC = interval_cross_cantor(Scale(3), 2.0 / 3.0);
    CHECK(IC.distinct_count() == 8 * 4);
}

TEST_CASE("well spaced sets satisfy the separation precondition") {
    CubeSet W = well_spaced(Scale(4), Scale(2), 2);
    CHECK(W.distinct_count() == 8);
    CHECK(delta_cells_separated(W, Scale(2)));
    CHECK(covering_number(W, Scale(2)) == 4);

    CubeSet W1 = well_spaced(Scale(4), Scale(2), 1);
    CHECK(W1.distinct_count() == 4);

    CHECK_THROWS(well_spaced(Scale(4), Scale(2), 5));  // per_cell > Delta/delta
}

TEST_CASE("block products realize a prescribed branching function") {
    CubeSet B = block_product(Scale(4), 2, {2, 4}, {1, 2});
    CHECK(B.distinct_count() == 16);
    BranchingFunction f = branching_function(B, 2);
    CHECK(f.values == std::vector<Rat>{Rat(0), Rat(1, 2), Rat(2)});

    CHECK_THROWS(block_product(Scale(4), 2, {2}, {1, 2}));     // schedule too short
    CHECK_THROWS(block_product(Scale(4), 2, {5, 1}, {1, 1}));  // branch > 2^T
    CHECK_THROWS(block_product(Scale(5), 2, {1, 1}, {1, 1}));  // T does not divide n
}

namespace {

// every per-cube family member must contain its cube in the 4-fattening,
// ids must be sorted, distinct and in range
void check_family_structure(const NiceConfiguration& cfg) {
    REQUIRE(cfg.per_cube.size() == cfg.P.entries().size());
    std::set<std::uint32_t> seen;
    for (size_t i = 0; i < cfg.per_cube.size(); ++i) {
        const auto& fam = cfg.per_cube[i];
        REQUIRE(!fam.empty());
        DyadicCube p(cfg.P.scale(), cfg.P.entries()[i].ix, cfg.P.entries()[i].iy);
        for (size_t j = 0; j < fam.size(); ++j) {
            REQUIRE(fam[j] < cfg.tubes.entries().size());
            if (j > 0) CHECK(fam[j - 1] < fam[j]);
            const auto& te = cfg.tubes.entries()[fam[j]];
            CHECK(cube_in_fat_tube(p, DyadicTube(cfg.tubes.scale(), te.ia, te.ib), Rat(4)));
            seen.insert(fam[j]);
        }
    }
    // the tube family is exactly the union of the per-cube families
    CHECK((long long)seen.size() == cfg.tubes.distinct_count());
}

} // namespace

TEST_CASE("grid configuration with full parameters is a single sheared column") {
    NiceConfiguration cfg = grid_example(Scale(4), 1.0, 1.0);
    CHECK(cfg.P.distinct_count() == 16);
    CHECK(cfg.M == 16);
    CHECK(cfg.tubes.distinct_count() == 256);  // ratio 2^n, the sharp t = 1 count
    CHECK(cfg.predicted_ratio_exponent == doctest::Approx(1.0));
    check_family_structure(cfg);
    ConfigurationCheck rep = validate_nice_configuration(cfg);
    CHECK(rep.ok);
    CHECK(rep.min_family == 16);
    CHECK(rep.max_family == 16);
}

TEST_CASE("grid configuration at s = t = 1/2 reuses tubes maximally") {
    NiceConfiguration cfg = grid_example(Scale(4), 0.5, 0.5);
    CHECK(cfg.M == 4);
    CHECK(cfg.tubes.distinct_count() == 16);  // ratio 2^{n/2}
    CHECK(cfg.predicted_ratio_exponent == doctest::Approx(0.5));
    check_family_structure(cfg);
    CHECK(validate_nice_configuration(cfg).ok);
}

TEST_CASE("grid configuration mid-range counts") {
    NiceConfiguration cfg = grid_example(Scale(6), 0.5, 1.0);
    CHECK(cfg.P.distinct_count() == 32);
    CHECK(cfg.M == 8);
    CHECK(cfg.tubes.distinct_count() == 156);
    CHECK(cfg.predicted_ratio_exponent == doctest::Approx(0.75));
    check_family_structure(cfg);
    CHECK(validate_nice_configuration(cfg).ok);

    CHECK_THROWS(grid_example(Scale(6), 0.5, 1.8));  // t > 2 - s
    CHECK_THROWS(grid_example(Scale(6), 0.0, 1.0));
}

TEST_CASE("cantor configuration attaches a slope pattern to every cube") {
    NiceConfiguration cfg = cantor_configuration(Scale(4), 0.5, 1.0);
    CHECK(cfg.P.distinct_count() == 16);
    CHECK(cfg.M == 4);
    check_family_structure(cfg);
    ConfigurationCheck rep = validate_nice_configuration(cfg);
    CHECK(rep.ok);
    CHECK(rep.min_family == 4);
}

TEST_CASE("random configuration is seed-deterministic") {
    NiceConfiguration a = random_nice_configuration(Scale(5), 0.6, 1.0, 99);
    NiceConfiguration b = random_nice_configuration(Scale(5), 0.6, 1.0, 99);
    REQUIRE(a.P.distinct_count() == b.P.distinct_count());
    for (size_t i = 0; i < a.P.entries().size(); ++i) {
        CHECK(a.P.entries()[i].ix == b.P.entries()[i].ix);
        CHECK(a.P.entries()[i].iy == b.P.entries()[i].iy);
    }
    CHECK(a.tubes.distinct_count() == b.tubes.distinct_count());
    CHECK(a.per_cube == b.per_cube);

    NiceConfiguration c = random_nice_configuration(Scale(5), 0.6, 1.0, 100);
    bool same = a.P.distinct_count() == c.P.distinct_count() &&
                a.tubes.distinct_count() == c.tubes.distinct_count();
    if (same) {
        bool identical = true;
        for (size_t i = 0; i < a.P.entries().size() && identical; ++i)
            identical = a.P.entries()[i].ix == c.P.entries()[i].ix &&
                        a.P.entries()[i].iy == c.P.entries()[i].iy;
        CHECK_FALSE(identical);
    }

    CHECK(a.P.distinct_count() == 32);  // t = 1 keeps 2^j cells per level
    CHECK(a.M == 8);
    check_family_structure(a);
    CHECK(validate_nice_configuration(a).ok);
}

TEST_CASE("validation rejects broken configurations") {
    // tube with intercept cell 8 sits at height >= 1, far from the corner cube
    NiceConfiguration bad;
    bad.name = "manual";
    bad.P = CubeSet(Scale(3), {{0, 0, 1, 1.0}});
    bad.tubes = TubeSet(Scale(3), TubeMode::distinct, {{0, 8, 1}});
    bad.per_cube = {{0}};
    bad.M = 1;
    bad.s = 0.5;
    ConfigurationCheck rep = validate_nice_configuration(bad);
    CHECK_FALSE(rep.ok);
    CHECK(rep.issue.find("tube misses its cube") != std::string::npos);

    // family far smaller than the target M
    NiceConfiguration tiny;
    tiny.P = CubeSet(Scale(3), {{0, 0, 1, 1.0}});
    tiny.tubes = TubeSet(Scale(3), TubeMode::distinct, {{0, 0, 1}});
    tiny.per_cube = {{0}};
    tiny.M = 10;
    tiny.s = 0.5;
    ConfigurationCheck rep2 = validate_nice_configuration(tiny);
    CHECK_FALSE(rep2.ok);
    CHECK(rep2.issue.find("family size") != std::string::npos);

    // per-cube list length mismatch
    NiceConfiguration mism;
    mism.P = CubeSet(Scale(3), {{0, 0, 1, 1.0}, {1, 1, 1, 1.0}});
    mism.tubes = TubeSet(Scale(3), TubeMode::distinct, {{0, 0, 1}});
    mism.per_cube = {{0}};
    mism.M = 1;
    ConfigurationCheck rep3 = validate_nice_configuration(mism);
    CHECK_FALSE(rep3.ok);
}
