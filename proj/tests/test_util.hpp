#pragma once

#include <cstdint>
#include <vector>

#include "padform/contraction.hpp"
#include "padform/forms.hpp"

namespace testutil {

inline std::uint64_t rnd(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// A planned variable: exact level, colour, nuance, corresponding integer
/// and a noise term landing above p^2.
struct VarSpec {
    long level = 0;
    int colour = 0;
    int nuance = 0;
    unsigned long corr = 1;
    long noise_a = 0;
    long noise_b = 0;
};

inline std::pair<padform::Int, padform::Int> make_column(const padform::Params& P,
                                                         const VarSpec& v) {
    using padform::Int;
    auto ev = padform::colour_vector(v.colour, P.p);
    auto en = padform::nuance_vector(v.colour, P.p);
    Int la = Int(static_cast<long>(v.corr)) * (Int(ev.first) + Int(v.nuance) * Int(en.first));
    Int lb = Int(static_cast<long>(v.corr)) * (Int(ev.second) + Int(v.nuance) * Int(en.second));
    Int p2(static_cast<long>(P.p * P.p));
    Int pl = padform::p_power(P.p, v.level);
    return {pl * (la + p2 * Int(v.noise_a)), pl * (lb + p2 * Int(v.noise_b))};
}

inline padform::FormPair make_pair(const padform::Params& P, const std::vector<VarSpec>& specs) {
    padform::FormPair fp;
    fp.P = P;
    for (const auto& v : specs) fp.coeffs.push_back(make_column(P, v));
    return fp;
}

/// Random unit mod p^2 (nonzero mod p).
inline unsigned long rnd_unit(std::uint64_t& state, unsigned long p) {
    unsigned long c;
    do {
        c = 1 + rnd(state) % (p * p - 1);
    } while (c % p == 0);
    return c;
}

/// Append the leaves of a colourful level-1 atom with a prescribed target
/// level vector (colour nu, nuance mu, corresponding integer c at level 1):
/// two same-colour level-0 leaves whose columns sum to the target.
inline void plan_colourful1(const padform::Params& P, std::vector<VarSpec>&,
                            padform::FormPair& fp, int nu, int mu, unsigned long c,
                            std::uint64_t& state, std::vector<std::pair<int, int>>& groups) {
    using padform::Int;
    VarSpec tgt{1, nu, mu, c, static_cast<long>(rnd(state) % 50), static_cast<long>(rnd(state) % 50)};
    auto [ta, tb] = make_column(P, tgt);
    // leaf 1: colour-1 unit column
    VarSpec l1{0, 1, static_cast<int>(rnd(state) % P.p), rnd_unit(state, P.p),
               static_cast<long>(rnd(state) % 50), static_cast<long>(rnd(state) % 50)};
    auto [xa, xb] = make_column(P, l1);
    int base = static_cast<int>(fp.coeffs.size());
    fp.coeffs.push_back({xa, xb});
    fp.coeffs.push_back({ta - xa, tb - xb});
    groups.push_back({base, base + 1});
}

}  // namespace testutil
