#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "padform/forms.hpp"
#include "padform/io.hpp"
#include "test_util.hpp"

using namespace padform;

namespace {
FormPair two_var_pair(const Params& P, long a1, long b1, long a2, long b2) {
    FormPair fp;
    fp.P = P;
    fp.coeffs = {{Int(a1), Int(b1)}, {Int(a2), Int(b2)}};
    return fp;
}
}  // namespace

TEST_CASE("theta_valuation on the worked examples") {
    auto P = derive_params(5, 1);
    CHECK(*theta_valuation(two_var_pair(P, 1, 0, 0, 1)) == 0);
    CHECK(!theta_valuation(two_var_pair(P, 1, 1, 1, 1)).has_value());
    // columns (1,0) and (5,5): factors 5 and -5
    CHECK(*theta_valuation(two_var_pair(P, 1, 0, 5, 5)) == 2);
}

TEST_CASE("classify_variable on the worked examples") {
    auto P = derive_params(5, 1);
    SUBCASE("(3,0) is colour 0, nuance 0") {
        auto v = classify_column(Int(3), Int(0), P);
        CHECK(v.level == 0);
        CHECK(v.colour == 0);
        CHECK(v.nuance == 0);
        CHECK(v.corr == 3);
    }
    SUBCASE("(5,25) sits at level 1 with vector (1,5)") {
        auto v = classify_column(Int(5), Int(25), P);
        CHECK(v.level == 1);
        CHECK(v.la == Int(1));
        CHECK(v.lb == Int(5));
        CHECK(v.colour == 0);
        CHECK(v.nuance == 1);
        CHECK(v.corr == 1);
    }
    SUBCASE("(0,1) is colour p") {
        auto v = classify_column(Int(0), Int(1), P);
        CHECK(v.level == 0);
        CHECK(v.colour == 5);
        CHECK(v.corr == 1);
        // with e_p = (p,1) and e^p = (p,0) the representation of (0,1) needs
        // mu = p-1; the defining congruence is re-checked below
        CHECK(v.nuance == 4);
    }
    SUBCASE("degenerate column") {
        CHECK_THROWS_AS(classify_column(Int(0), Int(0), P), DegeneratePair);
    }
}

TEST_CASE("colour nuance classes partition the level vectors (p = 5)") {
    auto P = derive_params(5, 1);
    long count = 0;
    for (long a = 0; a < 25; ++a) {
        for (long b = 0; b < 25; ++b) {
            if (a % 5 == 0 && b % 5 == 0) continue;
            auto v = classify_column(Int(a), Int(b), P);
            ++count;
            // the defining congruence (la, lb) = c (e_nu + mu e^nu) mod p^2
            auto ev = colour_vector(v.colour, 5);
            auto en = nuance_vector(v.colour, 5);
            Int ea = Int(static_cast<long>(v.corr)) * (Int(ev.first) + Int(v.nuance) * Int(en.first));
            Int eb = Int(static_cast<long>(v.corr)) * (Int(ev.second) + Int(v.nuance) * Int(en.second));
            CHECK(mod_floor(ea - Int(a), Int(25)) == 0);
            CHECK(mod_floor(eb - Int(b), Int(25)) == 0);
            CHECK(v.corr % 5 != 0);
            CHECK(v.corr < 25);
        }
    }
    CHECK(count == 600);
}

TEST_CASE("set_stats from Def. 4") {
    auto P = derive_params(5, 1);
    std::vector<testutil::VarSpec> specs;
    for (int i = 0; i < 3; ++i) specs.push_back({0, 0, 0, 1, i, 0});
    for (int i = 0; i < 2; ++i) specs.push_back({0, 1, 0, 1, i, 0});
    auto fp = testutil::make_pair(P, specs);
    auto vars = classify_all(fp);
    SUBCASE("three colour-0 variables alone") {
        auto st = set_stats(vars, {0, 1, 2});
        CHECK(st.I_max == 3);
        CHECK(st.q == 0);
    }
    SUBCASE("three colour-0 plus two colour-1") {
        auto st = set_stats(vars, {0, 1, 2, 3, 4});
        CHECK(st.I_max == 3);
        CHECK(st.q == 2);
    }
    SUBCASE("empty set") {
        auto st = set_stats(vars, {});
        CHECK(st.I_max == 0);
        CHECK(st.q == 0);
    }
}

TEST_CASE("compute_profile and the r window") {
    auto P = derive_params(5, 1);
    SUBCASE("two-variable pair") {
        auto fp = two_var_pair(P, 1, 0, 0, 1);
        auto pr = compute_profile(fp);
        CHECK(pr.m[0] == 2);
        CHECK(pr.I[0][0] == 1);
        CHECK(pr.I[0][5] == 1);
        CHECK(pr.q[0] == 1);
    }
    SUBCASE("r from q_0") {
        // q_0 = 21 gives r = -1; q_0 = 49 gives r = 4 = p-1
        std::vector<testutil::VarSpec> specs;
        for (int i = 0; i < 30; ++i) specs.push_back({0, 0, static_cast<int>(i % 5), 1, i, 0});
        for (int i = 0; i < 21; ++i) specs.push_back({0, 1 + i % 5, 0, 1, i, 0});
        auto pr = compute_profile(testutil::make_pair(P, specs));
        CHECK(pr.q[0] == 21);
        CHECK(pr.r == -1);
        std::vector<testutil::VarSpec> specs2;
        for (int i = 0; i < 60; ++i) specs2.push_back({0, 0, static_cast<int>(i % 5), 1, i, 0});
        for (int i = 0; i < 49; ++i) specs2.push_back({0, 1 + i % 5, 0, 1, i, 0});
        auto pr2 = compute_profile(testutil::make_pair(P, specs2));
        CHECK(pr2.q[0] == 49);
        CHECK(pr2.r == 4);
    }
}

TEST_CASE("apply_transform identities and the swap mix") {
    auto P = derive_params(5, 1);
    auto fp = two_var_pair(P, 1, 2, 3, 4);
    SUBCASE("scale by zero exponents") {
        auto out = apply_transform(fp, ScaleStep{{0, 0}});
        CHECK(out.coeffs == fp.coeffs);
    }
    SUBCASE("identity mix") {
        auto out = apply_transform(fp, MixStep{1, 0, 0, 1});
        CHECK(out.coeffs == fp.coeffs);
    }
    SUBCASE("swap mix") {
        auto out = apply_transform(fp, MixStep{0, 1, 1, 0});
        CHECK(out.coeffs[0].first == Int(2));
        CHECK(out.coeffs[0].second == Int(1));
    }
    SUBCASE("zero determinant rejected") {
        CHECK_THROWS(apply_transform(fp, MixStep{1, 1, 2, 2}));
    }
}

TEST_CASE("p_normalise is idempotent and never raises v_p(theta)") {
    auto P = derive_params(5, 1);
    std::uint64_t st = 5;
    for (int t = 0; t < 30; ++t) {
        // structured random small pair with levels: s = 60
        std::vector<testutil::VarSpec> specs;
        for (int i = 0; i < 60; ++i) {
            testutil::VarSpec v;
            v.level = static_cast<long>(testutil::rnd(st) % 3);
            v.colour = static_cast<int>(testutil::rnd(st) % 7) % 6;
            v.nuance = static_cast<int>(testutil::rnd(st) % 5);
            v.corr = testutil::rnd_unit(st, 5);
            v.noise_a = static_cast<long>(testutil::rnd(st) % 200);
            v.noise_b = static_cast<long>(testutil::rnd(st) % 200);
            specs.push_back(v);
        }
        auto fp = testutil::make_pair(P, specs);
        if (is_degenerate(fp)) continue;
        auto before = theta_valuation(fp);
        REQUIRE(before.has_value());
        auto norm = p_normalise(fp);
        auto after = theta_valuation(norm.pair);
        REQUIRE(after.has_value());
        CHECK(*after <= *before);
        // each recorded descent delta is negative and they sum to the change
        long delta_sum = 0;
        for (long d : norm.record.descent_deltas) {
            CHECK(d < 0);
            delta_sum += d;
        }
        CHECK(*after - *before == delta_sum);
        // replaying the record reproduces the normalised pair
        auto replayed = replay(fp, norm.record);
        CHECK(replayed.coeffs == norm.pair.coeffs);
        // idempotence
        auto again = p_normalise(norm.pair);
        CHECK(again.record.empty());
        CHECK(again.pair.coeffs == norm.pair.coeffs);
        // Lemma 2 / Lemma 4 shape on the output (size constraints excluded)
        auto rep = check_proper(norm.pair);
        for (const auto& f : rep.failures) {
            CHECK(f.find("(2.4)") == std::string::npos);
            CHECK(f.find("q-inequality") == std::string::npos);
            CHECK(f.find("Lemma 4") == std::string::npos);
            CHECK(f.find("(3.2)") == std::string::npos);
            CHECK(f.find("level k-1") == std::string::npos);
        }
    }
}

TEST_CASE("p_normalise divides out a common p^k") {
    auto P = derive_params(5, 1);
    FormPair fp;
    fp.P = P;
    std::uint64_t st = 9;
    Int pk = p_power(5, 20);
    for (int i = 0; i < 8; ++i) {
        long a = static_cast<long>(testutil::rnd(st) % 1000) + 1;
        long b = static_cast<long>(testutil::rnd(st) % 1000);
        fp.coeffs.push_back({Int(a) * pk, Int(b) * pk});
    }
    if (!is_degenerate(fp)) {
        auto norm = p_normalise(fp);
        for (int i = 0; i < 8; ++i) {
            CHECK(norm.pair.coeffs[i].first == div_exact(fp.coeffs[i].first, pk));
            CHECK(norm.pair.coeffs[i].second == div_exact(fp.coeffs[i].second, pk));
        }
    }
}

TEST_CASE("p_normalise rejects degenerate pairs") {
    auto P = derive_params(5, 1);
    CHECK_THROWS_AS(p_normalise(two_var_pair(P, 1, 1, 1, 1)), DegeneratePair);
    CHECK(is_degenerate(two_var_pair(P, 2, 4, 1, 2)));  // proportional columns
    CHECK(is_degenerate(two_var_pair(P, 0, 0, 1, 2)));
}

TEST_CASE("normalised levels stay below k") {
    auto P = derive_params(5, 1);
    std::uint64_t st = 31;
    for (int t = 0; t < 10; ++t) {
        std::vector<testutil::VarSpec> specs;
        for (int i = 0; i < 30; ++i) {
            testutil::VarSpec v;
            v.level = static_cast<long>(testutil::rnd(st) % 25);  // may exceed k-1 = 19
            v.colour = static_cast<int>(testutil::rnd(st) % 6);
            v.corr = testutil::rnd_unit(st, 5);
            v.noise_a = static_cast<long>(testutil::rnd(st) % 100);
            v.noise_b = static_cast<long>(testutil::rnd(st) % 100);
            specs.push_back(v);
        }
        auto fp = testutil::make_pair(P, specs);
        if (is_degenerate(fp)) continue;
        auto norm = p_normalise(fp);
        for (const auto& v : classify_all(norm.pair)) CHECK(v.level <= P.k - 1);
    }
}

TEST_CASE("check_proper on the worked examples") {
    auto P = derive_params(5, 1);
    // s = 800 misses the bound even with a perfect profile
    auto fp = generate_instance(5, 1, 3, 1);
    auto trimmed = fp;
    trimmed.coeffs.pop_back();
    auto rep = check_proper(trimmed);
    bool sfail = false;
    for (auto& f : rep.failures) sfail |= f.find("2k^2+1") != std::string::npos;
    CHECK(sfail);
    // q_0 = 49 > 48 = 2p^2 - 2 is rejected and routed to the Lemma 7 path
    std::vector<testutil::VarSpec> specs;
    for (int i = 0; i < 60; ++i) specs.push_back({0, 0, static_cast<int>(i % 5), 1, i, 0});
    for (int i = 0; i < 49; ++i) specs.push_back({0, 1 + i % 5, 0, 1, i, 0});
    auto small = testutil::make_pair(P, specs);
    auto rep2 = check_proper(small);
    bool qfail = false;
    for (auto& f : rep2.failures) qfail |= f.find("q_0") != std::string::npos;
    CHECK(qfail);
}
