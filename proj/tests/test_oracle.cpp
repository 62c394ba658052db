#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "padform/io.hpp"
#include "padform/oracle.hpp"
#include "test_util.hpp"

using namespace padform;
using testutil::VarSpec;

TEST_CASE("dp and exhaustive searches agree on small instances") {
    auto P = derive_params(5, 1);
    std::uint64_t st = 3;
    int found_cases = 0, notfound_cases = 0;
    for (int t = 0; t < 60; ++t) {
        long s = 6 + static_cast<long>(testutil::rnd(st) % 13);  // 6..18
        FormPair fp;
        fp.P = P;
        for (long i = 0; i < s; ++i) {
            long a = static_cast<long>(testutil::rnd(st) % 51) - 25;
            long b = static_cast<long>(testutil::rnd(st) % 51) - 25;
            if (a == 0 && b == 0) a = 1;
            fp.coeffs.push_back({Int(a), Int(b)});
        }
        auto ex = exhaustive_small_search(fp);
        auto dp = dp_nonsingular_search(fp);
        CHECK(ex.found == dp.found);
        (ex.found ? found_cases : notfound_cases)++;
        if (dp.found) {
            std::vector<Int> values(fp.coeffs.size(), Int(0));
            for (int i : dp.witness) values[i] = Int(1);
            CHECK(verify_nonsingular(fp, values, P.gamma).ok);
        }
    }
    CHECK(found_cases > 0);
    CHECK(notfound_cases > 0);
}

TEST_CASE("monochrome support cannot be non-singular") {
    auto P = derive_params(5, 1);
    FormPair fp;
    fp.P = P;
    // all columns proportional mod 5 to (1,1): congruences solvable, rank never 2
    fp.coeffs = {{Int(1), Int(1)}, {Int(6), Int(6)}, {Int(11), Int(11)}, {Int(16), Int(16)},
                 {Int(21), Int(21)}, {Int(26), Int(26)}, {Int(31), Int(31)}};
    CHECK(!exhaustive_small_search(fp).found);
    CHECK(!dp_nonsingular_search(fp).found);
}

TEST_CASE("planted witnesses are found") {
    auto P = derive_params(5, 1);
    FormPair fp;
    fp.P = P;
    // five colour-0 columns and five colour-1 columns, each block summing to
    // a multiple of 25
    for (int i = 0; i < 5; ++i) fp.coeffs.push_back({Int(5 + 25 * i), Int(25 * i)});
    for (int i = 0; i < 5; ++i) fp.coeffs.push_back({Int(5 + 25 * i + 1), Int(5 + 25 * i + 1)});
    // fix the sums: recompute so each block is exactly zero mod 25
    fp.coeffs.clear();
    fp.coeffs = {{Int(1), Int(0)},  {Int(2), Int(0)},  {Int(3), Int(0)},  {Int(4), Int(0)},
                 {Int(15), Int(0)}, {Int(1), Int(1)},  {Int(2), Int(2)},  {Int(3), Int(3)},
                 {Int(4), Int(4)},  {Int(15), Int(15)}};
    auto ex = exhaustive_small_search(fp);
    auto dp = dp_nonsingular_search(fp);
    CHECK(ex.found);
    CHECK(dp.found);
}

TEST_CASE("oracle capacity cap") {
    auto P = derive_params(5, 2);
    FormPair fp;
    fp.P = P;
    for (int i = 0; i < 10; ++i) fp.coeffs.push_back({Int(i + 1), Int(2 * i + 1)});
    auto res = dp_nonsingular_search(fp, 7);  // 5^14 states > 1e8
    CHECK(res.capacity_exceeded);
}

TEST_CASE("lemma_bound_probe confirms thresholds") {
    SUBCASE("Olson sharpness at p = 3, n = 2") {
        auto rep = lemma_bound_probe("L9-sharp-p3n2", 3, 0);
        CHECK(rep.ok);
        CHECK(rep.trials == 1287);
        CHECK(rep.failures == 0);
    }
    SUBCASE("Lemma 10 randomized") {
        auto rep = lemma_bound_probe("L10", 5, 500, 7);
        CHECK(rep.ok);
        CHECK(rep.failures == 0);
    }
    SUBCASE("Lemma 11 randomized at p = 5 and p = 7") {
        CHECK(lemma_bound_probe("L11", 5, 300, 9).ok);
        CHECK(lemma_bound_probe("L11", 7, 150, 11).ok);
    }
    SUBCASE("Lemma 12 randomized") {
        auto rep = lemma_bound_probe("L12", 5, 500, 13);
        CHECK(rep.ok);
    }
}

TEST_CASE("oracle agrees with the solver on generated instances") {
    for (std::uint64_t seed : {21ULL, 22ULL}) {
        auto fp = generate_instance(5, 1, seed, 1);
        auto sol = solve(fp, 6);
        auto orc = dp_nonsingular_search(fp);
        REQUIRE(orc.found);
        // both certificates verify independently
        std::vector<Int> sv, ov(fp.coeffs.size(), Int(0));
        for (const auto& r : sol.assignment) sv.push_back(r.value);
        for (int i : orc.witness) ov[i] = Int(1);
        CHECK(verify_nonsingular(fp, sv, fp.P.gamma).ok);
        CHECK(verify_nonsingular(fp, ov, fp.P.gamma).ok);
    }
}
