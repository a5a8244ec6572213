#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "pglab/rng.hpp"

using namespace pglab;

TEST_CASE("streams are deterministic given seed and name") {
    Rng a(42), b(42);
    auto s1 = a.stream("init");
    auto s2 = b.stream("init");
    for (int i = 0; i < 100; ++i) REQUIRE(s1.next_u64() == s2.next_u64());
}

TEST_CASE("different names give different sequences") {
    Rng rng(42);
    auto s1 = rng.stream("a");
    auto s2 = rng.stream("b");
    int differing = 0;
    for (int i = 0; i < 16; ++i)
        if (s1.next_u64() != s2.next_u64()) ++differing;
    REQUIRE(differing > 0);
}

TEST_CASE("indexed streams differ") {
    Rng rng(7);
    auto s0 = rng.stream("shard", 0);
    auto s1 = rng.stream("shard", 1);
    REQUIRE(s0.next_u64() != s1.next_u64());
}

TEST_CASE("uniform01 stays inside [0,1)") {
    Rng rng(1);
    auto s = rng.stream("u");
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
        double v = s.uniform01();
        if (!(v >= 0.0 && v < 1.0)) ++bad;
    }
    REQUIRE(bad == 0);
}

TEST_CASE("uniform respects bounds and index covers range") {
    Rng rng(3);
    auto s = rng.stream("bounds");
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        double v = s.uniform(-2.5, 4.0);
        if (!(v >= -2.5 && v < 4.0)) ++bad;
    }
    REQUIRE(bad == 0);
    std::set<std::size_t> seen;
    for (int i = 0; i < 2000; ++i) seen.insert(s.index(7));
    REQUIRE(seen.size() == 7);
    REQUIRE(*seen.begin() == 0);
    REQUIRE(*seen.rbegin() == 6);
}

TEST_CASE("normal draws are finite and roughly centered") {
    Rng rng(11);
    auto s = rng.stream("n");
    double sum = 0.0, sq = 0.0;
    int bad = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = s.normal();
        if (!std::isfinite(v)) ++bad;
        sum += v;
        sq += v * v;
    }
    REQUIRE(bad == 0);
    double mean = sum / n;
    double var = sq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.05);
    REQUIRE(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("shuffle is a permutation and is reproducible") {
    Rng a(5), b(5);
    auto sa = a.stream("perm");
    auto sb = b.stream("perm");
    std::vector<int> va(50), vb(50);
    std::iota(va.begin(), va.end(), 0);
    std::iota(vb.begin(), vb.end(), 0);
    sa.shuffle(va.begin(), va.end());
    sb.shuffle(vb.begin(), vb.end());
    REQUIRE(va == vb);
    std::vector<int> sorted = va;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) REQUIRE(sorted[i] == i);
}
