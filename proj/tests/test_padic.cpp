#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "padform/padic.hpp"
#include "test_util.hpp"

using namespace padform;

TEST_CASE("derive_params fills the arithmetic frame") {
    auto P = derive_params(5, 1);
    CHECK(P.k == 20);
    CHECK(P.gamma == 2);
    CHECK(P.delta == 4);
    CHECK(P.k0 == 1);
    auto Q = derive_params(7, 2);
    CHECK(Q.k == 294);
    CHECK(Q.gamma == 3);
    CHECK(Q.delta == 6);
    CHECK_THROWS_AS(derive_params(3, 1), OutsideHypotheses);
    CHECK_THROWS_AS(derive_params(6, 1), OutsideHypotheses);
    CHECK_THROWS_AS(derive_params(5, 0), OutsideHypotheses);
}

TEST_CASE("valuation with the infinite sentinel") {
    CHECK(*valuation(Int(50), 5) == 2);
    CHECK(*valuation(Int(7), 5) == 0);
    CHECK(!valuation(Int(0), 5).has_value());
    CHECK(*valuation(Int(-125), 5) == 3);
}

TEST_CASE("valuation is additive on products") {
    std::uint64_t st = 42;
    for (int t = 0; t < 200; ++t) {
        long a = static_cast<long>(testutil::rnd(st) % 100000) + 1;
        long b = static_cast<long>(testutil::rnd(st) % 100000) + 1;
        CHECK(*valuation(Int(a) * Int(b), 5) == *valuation(Int(a), 5) + *valuation(Int(b), 5));
    }
}

TEST_CASE("pow_mod matches an independent multiply loop") {
    // 2^20 mod 25 = 1 (the unit group mod 25 has order 20)
    CHECK(pow_mod(Int(2), 20, 5, 2).value == Int(1));
    // 2^20 mod 125 computed by repeated multiplication
    Int ref(1);
    for (int i = 0; i < 20; ++i) ref = mod_floor(ref * Int(2), Int(125));
    CHECK(pow_mod(Int(2), 20, 5, 3).value == ref);
    CHECK(ref == Int(76));
    CHECK(pow_mod(Int(0), 20, 5, 2).value == Int(0));
}

TEST_CASE("unit k-th power law at the theorem parameters") {
    for (auto [p, tau] : {std::pair<unsigned long, long>{5, 1}, {5, 2}, {7, 1}}) {
        auto P = derive_params(p, tau);
        Int m = P.p_pow(P.gamma);
        long units = 0, nonunits = 0;
        for (Int u(1); u < m; u += Int(1)) {
            if (u.mod_ui(p) != 0) {
                CHECK(pow_mod(u, P.k, p, P.gamma).value == Int(1));
                ++units;
            } else {
                CHECK(pow_mod(u, P.k, p, P.gamma).value == Int(0));
                ++nonunits;
            }
        }
        CHECK(units == P.k);  // the unit group mod p^{tau+1} has order k
        // some unit has u^k != 1 mod p^{tau+2}
        bool strict = false;
        for (Int u(2); u < m && !strict; u += Int(1))
            if (u.mod_ui(p) != 0 && pow_mod(u, P.k, p, P.gamma + 1).value != Int(1)) strict = true;
        CHECK(strict);
    }
}

TEST_CASE("kth_root_of inverts pow_mod on its image") {
    auto P = derive_params(5, 1);
    CHECK(kth_root_of(Residue(Int(1), 5, 6), P, 6).value == Int(1));
    std::uint64_t st = 7;
    for (int t = 0; t < 40; ++t) {
        long n = 3 + static_cast<long>(t % 10);
        Int m = P.p_pow(n);
        Int target = mod_floor(Int(1) + Int(25) * Int(static_cast<long>(testutil::rnd(st) % 100000)), m);
        auto u = kth_root_of(Residue(target, 5, n), P, n);
        CHECK(pow_mod(u.value, P.k, 5, n).value == mod_floor(target, m));
        CHECK(u.value.mod_ui(5) != 0);
    }
    CHECK_THROWS_AS(kth_root_of(Residue(Int(2), 5, 3), P, 3), NoKthRoot);
}

TEST_CASE("kth_root_of at tau = 2") {
    auto P = derive_params(5, 2);
    std::uint64_t st = 11;
    for (int t = 0; t < 20; ++t) {
        long n = 4 + static_cast<long>(t % 6);
        Int m = P.p_pow(n);
        Int target = mod_floor(Int(1) + Int(125) * Int(static_cast<long>(testutil::rnd(st) % 100000)), m);
        auto u = kth_root_of(Residue(target, 5, n), P, n);
        CHECK(pow_mod(u.value, P.k, 5, n).value == mod_floor(target, m));
    }
}
