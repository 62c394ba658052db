#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "padform/padic.hpp"

namespace padform {

/// Exact subset search over a small finite state space (a product of cyclic
/// groups, usually with a cardinality coordinate).  Witnesses are
/// reconstructed as the lexicographically smallest index set, so every
/// caller is deterministic.
struct SubsetSearch {
    int n = 0;
    std::size_t num_states = 0;
    std::size_t start = 0;
    std::function<std::size_t(std::size_t, int)> step;
    std::function<bool(std::size_t)> accept;
    int forced = -1;          // index that must belong to the subset, or -1
    bool allow_empty = false; // whether the empty selection may be returned
};

inline std::optional<std::vector<int>> lex_smallest_subset(const SubsetSearch& S) {
    std::vector<int> order;
    order.reserve(S.n);
    for (int i = 0; i < S.n; ++i)
        if (i != S.forced) order.push_back(i);
    const int m = static_cast<int>(order.size());

    // reach[i][s]: an accepting state is reachable from scan position i in
    // state s using a (possibly empty) subset of the remaining items.
    std::vector<std::vector<char>> reach(m + 1, std::vector<char>(S.num_states, 0));
    for (std::size_t s = 0; s < S.num_states; ++s) reach[m][s] = S.accept(s) ? 1 : 0;
    for (int i = m - 1; i >= 0; --i) {
        for (std::size_t s = 0; s < S.num_states; ++s) {
            char r = reach[i + 1][s];
            if (!r) r = reach[i + 1][S.step(s, order[i])];
            reach[i][s] = r;
        }
    }

    std::size_t state = S.start;
    std::vector<int> chosen;
    if (S.forced >= 0) {
        state = S.step(state, S.forced);
        chosen.push_back(S.forced);
    }
    if ((S.forced >= 0 || S.allow_empty) && S.accept(state)) {
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }
    for (int i = 0; i < m; ++i) {
        std::size_t taken = S.step(state, order[i]);
        if (reach[i + 1][taken]) {
            state = taken;
            chosen.push_back(order[i]);
            if (S.accept(state)) {
                std::sort(chosen.begin(), chosen.end());
                return chosen;
            }
        }
    }
    return std::nullopt;
}

/// A nonempty index set together with the sums it achieves; the sums are
/// recomputed from the inputs before the witness is returned.
struct SubsetWitness {
    std::vector<int> indices;
    std::vector<Int> sums;
};

namespace detail {

inline unsigned long umod(const Int& v, unsigned long m) { return v.mod_ui(m); }

}  // namespace detail

/// Zero-sum subset in (Z/pZ)^n (Olson's theorem guarantees one when
/// s >= np - n + 1).  vectors[i] has n coordinates.
inline std::optional<SubsetWitness> olson_subset(const std::vector<std::vector<Int>>& vectors,
                                                 unsigned long p) {
    if (vectors.empty()) return std::nullopt;
    const std::size_t n = vectors[0].size();
    std::size_t states = 1;
    for (std::size_t i = 0; i < n; ++i) states *= p;
    std::vector<std::vector<unsigned long>> red(vectors.size(), std::vector<unsigned long>(n));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].size() != n) throw std::invalid_argument("olson_subset: ragged input");
        for (std::size_t j = 0; j < n; ++j) red[i][j] = detail::umod(vectors[i][j], p);
    }
    SubsetSearch S;
    S.n = static_cast<int>(vectors.size());
    S.num_states = states;
    S.start = 0;
    S.step = [&, p, n](std::size_t s, int item) {
        std::size_t out = 0, mul = 1;
        for (std::size_t j = 0; j < n; ++j) {
            unsigned long coord = (s / mul) % p;
            coord = (coord + red[item][j]) % p;
            out += coord * mul;
            mul *= p;
        }
        return out;
    };
    S.accept = [](std::size_t s) { return s == 0; };
    auto idx = lex_smallest_subset(S);
    if (!idx) return std::nullopt;
    SubsetWitness w;
    w.indices = *idx;
    w.sums.assign(n, Int(0));
    for (int i : w.indices)
        for (std::size_t j = 0; j < n; ++j) w.sums[j] += vectors[i][j];
    for (std::size_t j = 0; j < n; ++j)
        if (w.sums[j].mod_ui(p) != 0) throw InternalContradiction("olson_subset: witness failed re-check");
    return w;
}

/// Nonempty J with |J| <= p and sum_J a = sum_J b = 0 (mod p); guaranteed to
/// exist when the sequence has length >= 3p - 2.
inline std::optional<SubsetWitness> bounded_pair_subset(const std::vector<Int>& a,
                                                        const std::vector<Int>& b,
                                                        unsigned long p) {
    if (a.size() != b.size()) throw std::invalid_argument("bounded_pair_subset: length mismatch");
    const std::size_t cap = p + 1;  // cardinality saturates at p+1 (= rejected)
    std::vector<unsigned long> ra(a.size()), rb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ra[i] = detail::umod(a[i], p);
        rb[i] = detail::umod(b[i], p);
    }
    SubsetSearch S;
    S.n = static_cast<int>(a.size());
    S.num_states = p * p * (cap + 1);
    S.start = 0;
    S.step = [&, p, cap](std::size_t s, int item) {
        unsigned long sa = s % p, sb = (s / p) % p, cnt = s / (p * p);
        sa = (sa + ra[item]) % p;
        sb = (sb + rb[item]) % p;
        if (cnt < cap) ++cnt;
        return sa + p * sb + p * p * cnt;
    };
    S.accept = [&, p](std::size_t s) {
        unsigned long cnt = s / (p * p);
        return s % p == 0 && (s / p) % p == 0 && cnt >= 1 && cnt <= p;
    };
    auto idx = lex_smallest_subset(S);
    if (!idx) return std::nullopt;
    SubsetWitness w;
    w.indices = *idx;
    w.sums = {Int(0), Int(0)};
    for (int i : w.indices) {
        w.sums[0] += a[i];
        w.sums[1] += b[i];
    }
    if (w.sums[0].mod_ui(p) != 0 || w.sums[1].mod_ui(p) != 0 || w.indices.size() > p)
        throw InternalContradiction("bounded_pair_subset: witness failed re-check");
    return w;
}

/// Nonempty J with |J| <= p, sum_J d = 0 (mod p) and != 0 (mod p^2), for
/// d_j coprime to p.  Exists for length >= 3p-2 (any p >= 5) and already for
/// length >= 2p-1 when p = 5.
inline std::optional<SubsetWitness> subset_zero_p_not_p2(const std::vector<Int>& d,
                                                         unsigned long p) {
    const unsigned long p2 = p * p;
    const std::size_t cap = p + 1;
    std::vector<unsigned long> rd(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        rd[i] = detail::umod(d[i], p2);
        if (rd[i] % p == 0) throw std::invalid_argument("subset_zero_p_not_p2: entries must be units");
    }
    SubsetSearch S;
    S.n = static_cast<int>(d.size());
    S.num_states = p2 * (cap + 1);
    S.start = 0;
    S.step = [&, p2, cap](std::size_t s, int item) {
        unsigned long sum = (s % p2 + rd[item]) % p2;
        unsigned long cnt = s / p2;
        if (cnt < cap) ++cnt;
        return sum + p2 * cnt;
    };
    S.accept = [&, p, p2](std::size_t s) {
        unsigned long sum = s % p2, cnt = s / p2;
        return sum % p == 0 && sum != 0 && cnt >= 1 && cnt <= p;
    };
    auto idx = lex_smallest_subset(S);
    if (!idx) return std::nullopt;
    SubsetWitness w;
    w.indices = *idx;
    Int sum(0);
    for (int i : w.indices) sum += d[i];
    if (sum.mod_ui(p) != 0 || sum.mod_ui(p2) == 0 || w.indices.size() > p)
        throw InternalContradiction("subset_zero_p_not_p2: witness failed re-check");
    w.sums = {sum};
    return w;
}

/// Lemma-8-style solve for the theorem's degree shape: since x^k mod p^e is
/// 1 on units and 0 otherwise, the congruence c_1 x_1^k + ... + c_n x_n^k = 0
/// (mod p^e) with x_1 a unit is a subset-sum with index 0 forced.  Guaranteed
/// for e = 1 once n > p - 1.
inline std::vector<int> forced_element_solution(const std::vector<Int>& c, const Params& P,
                                                int modulus_exp = 1) {
    if (modulus_exp < 1 || modulus_exp > 2)
        throw std::invalid_argument("forced_element_solution: modulus_exp must be 1 or 2");
    if (c.size() < P.p)
        throw std::invalid_argument("forced_element_solution: insufficient-variables (need n > p-1)");
    unsigned long mod = P.p;
    for (int i = 1; i < modulus_exp; ++i) mod *= P.p;
    std::vector<unsigned long> rc(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        rc[i] = detail::umod(c[i], mod);
        if (rc[i] % P.p == 0)
            throw std::invalid_argument("forced_element_solution: coefficients must be coprime to p");
    }
    SubsetSearch S;
    S.n = static_cast<int>(c.size());
    S.num_states = mod;
    S.start = 0;
    S.step = [&, mod](std::size_t s, int item) { return (s + rc[item]) % mod; };
    S.accept = [](std::size_t s) { return s == 0; };
    S.forced = 0;
    auto idx = lex_smallest_subset(S);
    if (!idx) {
        if (modulus_exp == 1)
            throw InternalContradiction("forced_element_solution: no witness despite n >= p");
        throw std::runtime_error("forced_element_solution: no witness at modulus p^2");
    }
    // 0/1 assignment
    std::vector<int> x(c.size(), 0);
    for (int i : *idx) x[i] = 1;
    Int sum(0);
    for (std::size_t i = 0; i < c.size(); ++i)
        if (x[i]) sum += c[i];
    if (x[0] != 1 || sum.mod_ui(mod) != 0)
        throw InternalContradiction("forced_element_solution: witness failed re-check");
    return x;
}

/// General-k fallback for the statement of Lemma 8 (n > gcd(k, p-1)); each
/// variable may take any k-th power residue value or 0.  Backtracking over
/// the residue set, viability-pruned with a reachability table; only tests
/// probing degrees outside the theorem's shape use it.
inline std::optional<std::vector<long>> forced_element_general(const std::vector<long>& c, long k,
                                                               unsigned long p) {
    const int n = static_cast<int>(c.size());
    if (n == 0) return std::nullopt;
    std::vector<long> root_of(p, -1);  // residue -> smallest root
    for (unsigned long y = 1; y < p; ++y) {
        unsigned long h = Int::powm(Int(static_cast<long>(y)), Int(k), Int(static_cast<long>(p)))
                              .mod_ui(p);
        if (root_of[h] < 0) root_of[h] = static_cast<long>(y);
    }
    std::vector<unsigned long> cu(n);
    for (int i = 0; i < n; ++i)
        cu[i] = ((c[i] % static_cast<long>(p)) + static_cast<long>(p)) % p;

    // reach[i][s]: state s at item i can still end in 0 after items i..n-1.
    std::vector<std::vector<char>> reach(n + 1, std::vector<char>(p, 0));
    reach[n][0] = 1;
    for (int i = n - 1; i >= 0; --i) {
        for (unsigned long s = 0; s < p; ++s) {
            char ok = (i > 0) ? reach[i + 1][s] : 0;  // item 0 may not be skipped
            for (unsigned long h = 1; !ok && h < p; ++h) {
                if (root_of[h] < 0) continue;
                ok = reach[i + 1][(s + cu[i] * h) % p];
            }
            reach[i][s] = ok;
        }
    }
    if (!reach[0][0]) return std::nullopt;
    std::vector<long> x(n, 0);
    unsigned long s = 0;
    for (int i = 0; i < n; ++i) {
        if (i > 0 && reach[i + 1][s]) continue;  // skip (x_i = 0)
        bool placed = false;
        for (unsigned long h = 1; h < p && !placed; ++h) {
            if (root_of[h] < 0) continue;
            unsigned long ns = (s + cu[i] * h) % p;
            if (reach[i + 1][ns]) {
                x[i] = root_of[h];
                s = ns;
                placed = true;
            }
        }
        if (!placed) return std::nullopt;
    }
    return s == 0 && x[0] != 0 ? std::optional<std::vector<long>>(x) : std::nullopt;
}

/// Zero-sum subset of values in Z/p^eZ (Davenport bound p^e elements).
inline std::optional<std::vector<int>> davenport_subset(const std::vector<Int>& vals,
                                                        unsigned long p, long e) {
    unsigned long mod = 1;
    for (long i = 0; i < e; ++i) mod *= p;
    std::vector<unsigned long> rv(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) rv[i] = detail::umod(vals[i], mod);
    SubsetSearch S;
    S.n = static_cast<int>(vals.size());
    S.num_states = mod;
    S.start = 0;
    S.step = [&, mod](std::size_t s, int item) { return (s + rv[item]) % mod; };
    S.accept = [](std::size_t s) { return s == 0; };
    return lex_smallest_subset(S);
}

}  // namespace padform
