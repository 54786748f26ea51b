#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "abcil/rng.hpp"

using abcil::Rng;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    REQUIRE(same == 0);
}

TEST_CASE("uniform stays in the unit interval") {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("bounded uniform respects its bounds and fills them") {
    Rng r(19);
    double lo_seen = 1e9, hi_seen = -1e9;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform(-2.0, 2.0);
        REQUIRE(u >= -2.0);
        REQUIRE(u <= 2.0);
        lo_seen = std::min(lo_seen, u);
        hi_seen = std::max(hi_seen, u);
    }
    REQUIRE(lo_seen < -1.99);
    REQUIRE(hi_seen > 1.99);
}

TEST_CASE("uniform_index covers the whole range") {
    Rng r(3);
    std::set<size_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const size_t k = r.uniform_index(10);
        REQUIRE(k < 10);
        seen.insert(k);
    }
    REQUIRE(seen.size() == 10);
}

TEST_CASE("normal draws have the requested moments") {
    Rng r(11);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal(1.5, 0.5);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    REQUIRE(std::abs(mean - 1.5) < 0.01);
    REQUIRE(std::abs(std::sqrt(var) - 0.5) < 0.01);
}
