#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "padform/io.hpp"
#include "padform/solver.hpp"
#include "test_util.hpp"

using namespace padform;

TEST_CASE("instance parse/serialize round-trip") {
    std::string text =
        "# pair of forms\n"
        "5 1\n"
        "\n"
        "12 -7\n"
        "0 88888888888888888888888888  # big coefficient\n"
        "-3 4\n";
    std::istringstream in(text);
    auto fp = parse_instance(in);
    CHECK(fp.P.p == 5);
    CHECK(fp.P.tau == 1);
    CHECK(fp.s() == 3);
    CHECK(fp.coeffs[1].second == Int(std::string("88888888888888888888888888")));
    std::ostringstream out;
    serialize_instance(fp, out);
    std::istringstream in2(out.str());
    auto fp2 = parse_instance(in2);
    CHECK(fp2.coeffs == fp.coeffs);
}

TEST_CASE("malformed instances raise ParseError") {
    SUBCASE("missing header") {
        std::istringstream in("");
        CHECK_THROWS_AS(parse_instance(in), ParseError);
    }
    SUBCASE("junk header") {
        std::istringstream in("five one\n1 2\n");
        CHECK_THROWS_AS(parse_instance(in), ParseError);
    }
    SUBCASE("trailing token") {
        std::istringstream in("5 1\n1 2 3\n");
        CHECK_THROWS_AS(parse_instance(in), ParseError);
    }
    SUBCASE("out-of-scope parameters") {
        std::istringstream in("4 1\n1 2\n");
        CHECK_THROWS_AS(parse_instance(in), OutsideHypotheses);
    }
}

TEST_CASE("solution files round-trip") {
    Solution sol;
    sol.precision = 6;
    sol.ns_i = 2;
    sol.ns_j = 7;
    for (int i = 0; i < 9; ++i) sol.assignment.push_back(Residue(Int(i * i), 5, 6));
    std::ostringstream out;
    serialize_solution(sol, 5, 1, out);
    std::istringstream in(out.str());
    auto sf = parse_solution(in);
    CHECK(sf.p == 5);
    CHECK(sf.tau == 1);
    CHECK(sf.N == 6);
    CHECK(sf.ns_i == 2);
    CHECK(sf.ns_j == 7);
    REQUIRE(sf.values.size() == 9);
    for (int i = 0; i < 9; ++i) CHECK(sf.values[i] == Int(i * i));
}

TEST_CASE("generator determinism is byte-exact") {
    auto a = generate_instance(5, 1, 42, 1);
    auto b = generate_instance(5, 1, 42, 1);
    std::ostringstream sa, sb;
    serialize_instance(a, sa);
    serialize_instance(b, sb);
    CHECK(sa.str() == sb.str());
    auto c = generate_instance(5, 1, 43, 1);
    std::ostringstream sc;
    serialize_instance(c, sc);
    CHECK(sa.str() != sc.str());
    CHECK(a.s() == 801);
}

TEST_CASE("hints land in the requested profile windows") {
    SUBCASE("r = -1") {
        auto fp = generate_instance(5, 1, 9, 1, "r=-1");
        auto norm = p_normalise(fp);
        CHECK(norm.record.empty());
        auto pr = compute_profile(norm.pair);
        CHECK(pr.r == -1);
    }
    SUBCASE("r = p-1") {
        auto fp = generate_instance(5, 1, 9, 1, "r=p-1");
        auto pr = compute_profile(fp);
        CHECK(pr.r == 4);
    }
    SUBCASE("tau = 2 windows") {
        auto fp40 = generate_instance(5, 2, 9, 1, "L40");
        CHECK(dispatch_name(fp40) == "Lemma 40 path");
        auto fp44 = generate_instance(5, 2, 9, 1, "L44");
        CHECK(dispatch_name(fp44) == "Lemma 44 path");
    }
    SUBCASE("unknown hint is rejected") {
        CHECK_THROWS(generate_instance(5, 1, 9, 1, "bogus"));
    }
}

TEST_CASE("dispatch_name matches the profile command examples") {
    // q_0 = 49 at (5,1) sits on the Lemma 7 path
    auto P = derive_params(5, 1);
    std::uint64_t st = 3;
    std::vector<testutil::VarSpec> specs;
    for (int i = 0; i < 60; ++i)
        specs.push_back({0, 0, i % 5, testutil::rnd_unit(st, 5), i, i});
    for (int i = 0; i < 49; ++i)
        specs.push_back({0, 1 + i % 5, i % 5, testutil::rnd_unit(st, 5), i, 2 * i});
    auto fp = testutil::make_pair(P, specs);
    CHECK(dispatch_name(fp) == "Lemma 7 path");
}

TEST_CASE("default instances stay in the Lemma 7 regime") {
    auto fp = generate_instance(7, 1, 3, 1);
    CHECK(fp.s() == 2 * 42 * 42 + 1);
    CHECK(dispatch_name(p_normalise(fp).pair) == "Lemma 7 path");
}
