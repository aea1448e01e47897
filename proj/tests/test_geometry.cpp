#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ngfreg/geometry.hpp"
#include "oracles.hpp"

using namespace ngfreg;

TEST_CASE("make_identity places cell centers") {
    SUBCASE("single cell") {
        const auto y = make_identity<double>(Grid3({1, 1, 1}, {1, 1, 1}, {0, 0, 0}));
        REQUIRE(y.size() == 1);
        CHECK(y[0][0] == 0.0);
        CHECK(y[1][0] == 0.0);
        CHECK(y[2][0] == 0.0);
    }
    SUBCASE("two cells along x with spacing 2") {
        const auto y = make_identity<double>(Grid3({2, 1, 1}, {2, 1, 1}, {0, 0, 0}));
        REQUIRE(y.size() == 2);
        CHECK(y[0][0] == 0.0);
        CHECK(y[0][1] == 2.0);
        CHECK(y[1][1] == 0.0);
        CHECK(y[2][1] == 0.0);
    }
    SUBCASE("displacement of the identity is zero bit-exactly") {
        std::mt19937_64 rng(1);
        for(int t = 0; t < 20; ++t) {
            const Grid3 g = oracle::random_grid(rng, 1, 7);
            const auto u = displacement(make_identity<double>(g));
            for(int d = 0; d < 3; ++d)
                for(double v : u[d]) CHECK(v == 0.0);
            const auto uf = displacement(make_identity<float>(g));
            for(int d = 0; d < 3; ++d)
                for(float v : uf[d]) CHECK(v == 0.0f);
        }
    }
}

TEST_CASE("world_of_index") {
    CHECK(world_of_index(Grid3({4, 4, 4}, {1, 1, 1}), {0, 0, 0}) == Vec3{0, 0, 0});
    CHECK(world_of_index(Grid3({4, 4, 4}, {2, 3, 4}, {1, 1, 1}), {1, 1, 1}) == Vec3{3, 4, 5});
    CHECK_THROWS_AS(world_of_index(Grid3({4, 4, 4}, {1, 1, 1}), {4, 0, 0}), std::out_of_range);
    CHECK_THROWS_AS(world_of_index(Grid3({4, 4, 4}, {1, 1, 1}), {0, -1, 0}), std::out_of_range);

    SUBCASE("round-trip through index_of_world") {
        const Grid3 g({5, 6, 7}, {0.97, 0.97, 2.5}, {-120.3, 14.0, 7.25});
        for(std::size_t n = 0; n < g.size(); ++n) {
            const Index3 idx = g.delinearize(n);
            CHECK(index_of_world(g, world_of_index(g, idx)) == idx);
        }
    }
}

TEST_CASE("linearization is x-fastest and bijective") {
    const Grid3 g({3, 4, 5}, {1, 1, 1});
    CHECK(g.linearize(1, 0, 0) == 1);
    CHECK(g.linearize(0, 1, 0) == 3);
    CHECK(g.linearize(0, 0, 1) == 12);
    for(std::int64_t k = 0; k < 5; ++k)
        for(std::int64_t j = 0; j < 4; ++j)
            for(std::int64_t i = 0; i < 3; ++i) CHECK(g.delinearize(g.linearize(i, j, k)) == Index3{i, j, k});
}

TEST_CASE("Grid3 rejects invalid geometry") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Grid3({0, 1, 1}, {1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Grid3({1, 1, 1}, {1, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Grid3({1, 1, 1}, {1, 1, -2}), std::invalid_argument);
    CHECK_THROWS_AS(Grid3({1, 1, 1}, {1, 1, 1}, {nan, 0, 0}), std::invalid_argument);
    CHECK(Grid3({1, 1, 1}, {1, 1, 1}).cell_volume() == 1.0);
}

TEST_CASE("equal grids give identical world coordinates") {
    const Grid3 a({3, 3, 3}, {0.5, 1.5, 2.0}, {1, 2, 3});
    const Grid3 b({3, 3, 3}, {0.5, 1.5, 2.0}, {1, 2, 3});
    REQUIRE(a == b);
    for(std::size_t n = 0; n < a.size(); ++n) CHECK(world_of_index(a, a.delinearize(n)) == world_of_index(b, b.delinearize(n)));
}

TEST_CASE("same_domain compares world boxes") {
    const Grid3 fine = oracle::box_grid({8, 6, 4}, {-3, 0, 2}, {16, 12, 9});
    const Grid3 coarse = oracle::box_grid({2, 3, 1}, {-3, 0, 2}, {16, 12, 9});
    CHECK(same_domain(fine, coarse));
    CHECK_FALSE(same_domain(fine, oracle::box_grid({2, 3, 1}, {-3, 0, 2}, {16, 12, 9.5})));
    CHECK_FALSE(same_domain(fine, oracle::box_grid({2, 3, 1}, {-2, 0, 2}, {16, 12, 9})));
}

TEST_CASE("fields validate finiteness") {
    Image3<double> img(Grid3({2, 2, 2}, {1, 1, 1}));
    CHECK_NOTHROW(validate(img));
    img.values[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate(img), std::invalid_argument);

    auto y = make_identity<double>(Grid3({2, 2, 2}, {1, 1, 1}));
    CHECK_NOTHROW(validate(y));
    y[1].pop_back();
    CHECK_THROWS_AS(validate(y), std::invalid_argument);
}

TEST_CASE("precision names") {
    CHECK(parse_precision("f32") == Precision::F32);
    CHECK(parse_precision("f64") == Precision::F64);
    CHECK(to_string(Precision::F32) == "f32");
    CHECK_THROWS_AS(parse_precision("f16"), std::invalid_argument);
}
