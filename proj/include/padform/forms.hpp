#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "padform/padic.hpp"

namespace padform {

/// A pair of additive forms f = sum a_i x_i^k, g = sum b_i x_i^k.
struct FormPair {
    Params P;
    std::vector<std::pair<Int, Int>> coeffs;  // (a_i, b_i), 0-based

    long s() const { return static_cast<long>(coeffs.size()); }
};

/// Per-variable classification data: level, level coefficient vector,
/// colour nu in {0..p}, colour nuance (nu, mu) and the corresponding
/// integer c in {1..p^2-1} \ pZ with (la, lb) = c (e_nu + mu e^nu) mod p^2.
struct VariableInfo {
    int index = 0;
    long level = 0;
    Int la, lb;
    int colour = 0;
    int nuance = 0;
    unsigned long corr = 1;
};

/// Colour direction vectors mod p^2: e_0 = (1,0), e_nu = (nu,1) for
/// 1 <= nu <= p; nuance offsets e^0 = (0,p), e^nu = (p,0) for 1 <= nu <= p.
inline std::pair<long, long> colour_vector(int nu, unsigned long p) {
    if (nu == 0) return {1, 0};
    return {nu, 1};
}
inline std::pair<long, long> nuance_vector(int nu, unsigned long p) {
    if (nu == 0) return {0, static_cast<long>(p)};
    return {static_cast<long>(p), 0};
}

/// Classify a coefficient column (a, b) != (0, 0).
inline VariableInfo classify_column(const Int& a, const Int& b, const Params& P, int index = 0) {
    if (a.is_zero() && b.is_zero())
        throw DegeneratePair("classify: variable with both coefficients zero");
    auto va = valuation(a, P.p), vb = valuation(b, P.p);
    long l = std::min(va.value_or(std::numeric_limits<long>::max()),
                      vb.value_or(std::numeric_limits<long>::max()));
    VariableInfo v;
    v.index = index;
    v.level = l;
    v.la = a.shifted_down(P.p, l);
    v.lb = b.shifted_down(P.p, l);
    const unsigned long p = P.p, p2 = p * p;
    unsigned long x = v.la.mod_ui(p), y = v.lb.mod_ui(p);
    unsigned long x2 = v.la.mod_ui(p2), y2 = v.lb.mod_ui(p2);
    if (y == 0) {
        v.colour = 0;
        // (la, lb) = c (1, mu p) mod p^2
        v.corr = x2;
        unsigned long c_inv = Int::invert(Int(static_cast<long>(x2)), Int(static_cast<long>(p2)))
                                  ->mod_ui(p2);
        v.nuance = static_cast<int>(((y2 / p) * c_inv) % p);
    } else {
        unsigned long y_inv = Int::invert(Int(static_cast<long>(y)), Int(static_cast<long>(p)))->mod_ui(p);
        unsigned long nu = (x * y_inv) % p;
        v.colour = (nu == 0) ? static_cast<int>(p) : static_cast<int>(nu);
        // (la, lb) = c (nu + mu p, 1) mod p^2 with nu read in {1..p}
        v.corr = y2;
        unsigned long c_inv = Int::invert(Int(static_cast<long>(y2)), Int(static_cast<long>(p2)))
                                  ->mod_ui(p2);
        unsigned long xr = (x2 * c_inv) % p2;  // = nu + mu p mod p^2
        unsigned long nu_lit = static_cast<unsigned long>(v.colour);
        v.nuance = static_cast<int>(((xr + p2 - nu_lit) / p) % p);
    }
    return v;
}

inline VariableInfo classify_variable(const FormPair& pair, int i) {
    return classify_column(pair.coeffs[i].first, pair.coeffs[i].second, pair.P, i);
}

inline std::vector<VariableInfo> classify_all(const FormPair& pair) {
    std::vector<VariableInfo> out;
    out.reserve(pair.coeffs.size());
    for (int i = 0; i < pair.s(); ++i) out.push_back(classify_variable(pair, i));
    return out;
}

/// Counts for one index set at a single level (Def. 4).
struct SetStats {
    std::vector<long> I;  // per colour 0..p
    long I_max = 0;
    long q = 0;
    long size = 0;
};

inline SetStats set_stats(const std::vector<VariableInfo>& pool, const std::vector<int>& K) {
    SetStats st;
    if (K.empty()) return st;
    long level = pool[K[0]].level;
    unsigned long p = 0;
    // colour range inferred from entries
    int maxc = 0;
    for (int i : K) maxc = std::max(maxc, pool[i].colour);
    (void)p;
    st.I.assign(maxc + 1, 0);
    for (int i : K) {
        if (pool[i].level != level) throw std::invalid_argument("set_stats: mixed levels");
        st.I[pool[i].colour]++;
    }
    st.size = static_cast<long>(K.size());
    st.I_max = *std::max_element(st.I.begin(), st.I.end());
    st.q = st.size - st.I_max;
    return st;
}

/// The counting statistics of a pair: per-level m_l, q_l, colour counts
/// I_nu^l, level-0 colour-0 nuance counts I_{0 mu}^0, and the window index r
/// from p^{tau+1} + r p^tau <= q_0 <= p^{tau+1} + (r+1) p^tau - 1.
struct LevelProfile {
    long max_level = 0;
    std::vector<long> m;                 // size max_level+1
    std::vector<long> q;                 // size max_level+1
    std::vector<std::vector<long>> I;    // [level][colour 0..p]
    std::vector<long> I00;               // nuance counts at level 0, colour 0
    std::vector<long> Imax;              // per level
    long r = -1;
    bool r_below_range = false;          // q_0 < p^{tau+1} - p^tau
    bool r_above_range = false;          // q_0 > 2 p^{tau+1} - 2
};

inline LevelProfile compute_profile(const FormPair& pair, const std::vector<VariableInfo>& vars) {
    LevelProfile pr;
    const unsigned long p = pair.P.p;
    long maxl = 0;
    for (const auto& v : vars) maxl = std::max(maxl, v.level);
    pr.max_level = maxl;
    pr.m.assign(maxl + 1, 0);
    pr.q.assign(maxl + 1, 0);
    pr.Imax.assign(maxl + 1, 0);
    pr.I.assign(maxl + 1, std::vector<long>(p + 2, 0));
    pr.I00.assign(p, 0);
    for (const auto& v : vars) {
        pr.m[v.level]++;
        pr.I[v.level][v.colour]++;
        if (v.level == 0 && v.colour == 0) pr.I00[v.nuance]++;
    }
    for (long l = 0; l <= maxl; ++l) {
        pr.Imax[l] = *std::max_element(pr.I[l].begin(), pr.I[l].end());
        pr.q[l] = pr.m[l] - pr.Imax[l];
    }
    // r from (5.2), clamped to {-1, ..., p-1} with range flags
    Int q0(pr.q.empty() ? 0 : pr.q[0]);
    Int lo = pair.P.p_pow(pair.P.tau + 1) - pair.P.p_pow(pair.P.tau);
    Int hi = Int(2) * pair.P.p_pow(pair.P.tau + 1) - Int(2);
    if (q0 < lo) {
        pr.r = -1;
        pr.r_below_range = true;
    } else if (q0 > hi) {
        pr.r = static_cast<long>(p) - 1;
        pr.r_above_range = true;
    } else {
        // floor((q0 - p^{tau+1}) / p^tau), at least -1
        long r = -1;
        for (long cand = static_cast<long>(p) - 1; cand >= 0; --cand) {
            if (q0 >= pair.P.p_pow(pair.P.tau + 1) + Int(cand) * pair.P.p_pow(pair.P.tau)) {
                r = cand;
                break;
            }
        }
        pr.r = r;
    }
    return pr;
}

inline LevelProfile compute_profile(const FormPair& pair) {
    auto vars = classify_all(pair);
    return compute_profile(pair, vars);
}

// ---------------------------------------------------------------------------
// p-equivalence transforms
// ---------------------------------------------------------------------------

/// x_i -> p^{nu_i} x_i, i.e. column_i *= p^{k nu_i}.
struct ScaleStep {
    std::vector<long> nu;
};
/// (a, b) -> (l1 a + l2 b, m1 a + m2 b), determinant nonzero.
struct MixStep {
    long l1 = 1, l2 = 0, m1 = 0, m2 = 1;
};
/// Divide f by p^fa and g by p^fb (exact).
struct DivideStep {
    long fa = 0, fb = 0;
};

using TransformStep = std::variant<ScaleStep, MixStep, DivideStep>;

/// Ordered record of the p-equivalence operations applied to a pair.
/// Replaying the record maps the original pair to the current one; pulling a
/// solution back runs it in reverse (only Scale steps touch values).
struct TransformRecord {
    std::vector<TransformStep> steps;
    std::vector<long> descent_deltas;  // v_p(theta) change of each descent step

    bool empty() const { return steps.empty(); }
};

inline FormPair apply_transform(const FormPair& pair, const TransformStep& step) {
    FormPair out = pair;
    const unsigned long p = pair.P.p;
    if (std::holds_alternative<ScaleStep>(step)) {
        const auto& sc = std::get<ScaleStep>(step);
        if (sc.nu.size() != pair.coeffs.size())
            throw std::invalid_argument("apply_transform: scale vector size mismatch");
        for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
            long e = sc.nu[i] * pair.P.k;
            if (e >= 0) {
                Int f = p_power(p, e);
                out.coeffs[i].first *= f;
                out.coeffs[i].second *= f;
            } else {
                out.coeffs[i].first = out.coeffs[i].first.shifted_down(p, -e);
                out.coeffs[i].second = out.coeffs[i].second.shifted_down(p, -e);
            }
        }
    } else if (std::holds_alternative<MixStep>(step)) {
        const auto& mx = std::get<MixStep>(step);
        if (mx.l1 * mx.m2 - mx.l2 * mx.m1 == 0)
            throw std::invalid_argument("apply_transform: mix with zero determinant");
        for (auto& [a, b] : out.coeffs) {
            Int na = a * mx.l1 + b * mx.l2;
            Int nb = a * mx.m1 + b * mx.m2;
            a = std::move(na);
            b = std::move(nb);
        }
    } else {
        const auto& dv = std::get<DivideStep>(step);
        for (auto& [a, b] : out.coeffs) {
            a = a.shifted_down(p, dv.fa);
            b = b.shifted_down(p, dv.fb);
        }
    }
    return out;
}

inline FormPair replay(const FormPair& original, const TransformRecord& rec) {
    FormPair cur = original;
    for (const auto& st : rec.steps) cur = apply_transform(cur, st);
    return cur;
}

// ---------------------------------------------------------------------------
// theta and degeneracy
// ---------------------------------------------------------------------------

/// theta(f,g) = prod_{i != j} (a_i b_j - a_j b_i) vanishes iff two columns
/// are proportional (or one is zero); detected via canonical projective
/// representatives without forming the product.
inline bool is_degenerate(const FormPair& pair) {
    std::map<std::pair<std::string, std::string>, int> seen;
    for (const auto& [a, b] : pair.coeffs) {
        if (a.is_zero() && b.is_zero()) return true;
        Int g = gcd(a, b);  // gcd(|a|, |b|) > 0
        Int ca = div_exact(a, g), cb = div_exact(b, g);
        if (ca.sign() < 0 || (ca.is_zero() && cb.sign() < 0)) {
            ca = -ca;
            cb = -cb;
        }
        if (!seen.emplace(std::make_pair(ca.str(), cb.str()), 1).second) return true;
    }
    return false;
}

/// v_p(theta) as a sum of valuations over ordered pairs; nullopt encodes
/// theta = 0.  Quadratic in s, intended for moderate instances and tests.
inline std::optional<long> theta_valuation(const FormPair& pair) {
    if (is_degenerate(pair)) return std::nullopt;
    long total = 0;
    const long s = pair.s();
    for (long i = 0; i < s; ++i)
        for (long j = i + 1; j < s; ++j) {
            Int d = pair.coeffs[i].first * pair.coeffs[j].second -
                    pair.coeffs[j].first * pair.coeffs[i].second;
            auto v = valuation(d, pair.P.p);
            if (!v) return std::nullopt;
            total += 2 * (*v);  // ordered pairs (i,j) and (j,i)
        }
    return total;
}

// ---------------------------------------------------------------------------
// p-normalisation
// ---------------------------------------------------------------------------

namespace detail {

/// Mix matrix with unit determinant mod p sending colour class nu* to the
/// colour-0 direction e_0 = (1,0).
inline MixStep mix_to_colour0(int nu_star, unsigned long p) {
    MixStep m;
    if (nu_star == static_cast<int>(p)) {  // e_p = (0,1): swap forms
        m = {0, 1, 1, 0};
    } else {  // e_nu = (nu,1): rows (0,1) and (1,-nu)
        m = {0, 1, 1, -nu_star};
    }
    return m;
}

/// Mix matrix fixing colour 0 and sending colour nu* (1..p-1) to colour p.
inline MixStep mix_to_colourp_fix0(int nu_star) {
    return {1, -nu_star, 0, 1};
}

/// Mix matrix sending colour class nu* to colour p (used before the
/// half-integer descent step; no constraint on the other colours).
inline MixStep mix_to_colourp(int nu_star, unsigned long p) {
    if (nu_star == static_cast<int>(p)) return {1, 0, 0, 1};
    if (nu_star == 0) return {0, 1, 1, 0};  // e_0 -> (0,1) = e_p
    return mix_to_colourp_fix0(nu_star);
}

/// Nuance shift: g -> g - mu* p f fixes all colours mod p and moves the
/// colour-0 nuance classes by -mu*.
inline MixStep mix_nuance_shift(int mu_star, unsigned long p) {
    return {1, 0, -static_cast<long>(mu_star) * static_cast<long>(p), 1};
}

inline int argmax_colour(const std::vector<long>& I) {
    int best = 0;
    for (std::size_t nu = 1; nu < I.size(); ++nu)
        if (I[nu] > I[best]) best = static_cast<int>(nu);
    return best;
}

}  // namespace detail

struct NormaliseResult {
    FormPair pair;
    TransformRecord record;
};

/// Iterative descent to a p-normalised representative: while a checkable
/// consequence of Lemma 2 / Lemma 4 fails, apply the transform whose
/// existence the failing property asserts; each such step strictly decreases
/// v_p(theta), so the loop reaches a fixpoint.  Colour/nuance relabelling
/// (Lemma 4 (i)-(iii)) is done with unit-determinant mixes that leave
/// v_p(theta) unchanged.
inline NormaliseResult p_normalise(const FormPair& input) {
    if (is_degenerate(input))
        throw DegeneratePair("p_normalise: theta(f,g) = 0 (degenerate pair is out of scope)");
    FormPair cur = input;
    const Params& P = input.P;
    const unsigned long p = P.p;
    const long k = P.k;
    const long s = cur.s();
    TransformRecord rec;

    auto push = [&](TransformStep st, std::optional<long> delta) {
        cur = apply_transform(cur, st);
        rec.steps.push_back(std::move(st));
        if (delta) {
            if (*delta >= 0) throw InternalContradiction("p_normalise: non-decreasing descent step");
            rec.descent_deltas.push_back(*delta);
        }
    };

    // descent steps are bounded by v_p(theta); guard against runaway loops
    for (long guard = 0;; ++guard) {
        if (guard > 1000000) throw InternalContradiction("p_normalise: descent did not terminate");
        auto vars = classify_all(cur);

        // levels >= k reduce by x -> x/p per variable
        {
            ScaleStep sc;
            sc.nu.assign(s, 0);
            long cnt = 0;
            for (const auto& v : vars)
                if (v.level >= k) {
                    sc.nu[v.index] = -1;
                    ++cnt;
                }
            if (cnt > 0) {
                push(sc, -2 * k * (s - 1) * cnt);
                continue;
            }
        }

        auto pr = compute_profile(cur, vars);
        std::vector<long> m(k, 0);
        for (long l = 0; l < k && l <= pr.max_level; ++l) m[l] = pr.m[l];

        // (2.4): m_0 + ... + m_j >= (j+1) s / k
        {
            bool fired = false;
            long prefix = 0;
            for (long j = 0; j < k && !fired; ++j) {
                prefix += m[j];
                if (k * prefix < (j + 1) * s) {
                    ScaleStep sc;
                    sc.nu.assign(s, 0);
                    for (const auto& v : vars)
                        if (v.level <= j) sc.nu[v.index] = 1;
                    long delta = 2 * k * (s - 1) * prefix - 2 * (j + 1) * s * (s - 1);
                    push(sc, std::nullopt);
                    push(DivideStep{j + 1, j + 1}, delta);
                    fired = true;
                }
            }
            if (fired) continue;
        }

        // half-integer inequality: m_0 + ... + m_{j-1} + q_j >= (j + 1/2) s / k
        {
            bool fired = false;
            long prefix = 0;
            for (long j = 0; j < k && !fired; ++j) {
                long qj = (j <= pr.max_level) ? pr.q[j] : 0;
                if (2 * k * (prefix + qj) < (2 * j + 1) * s) {
                    int nu_star = (j <= pr.max_level) ? detail::argmax_colour(pr.I[j]) : 0;
                    push(detail::mix_to_colourp(nu_star, p), std::nullopt);
                    auto vars2 = classify_all(cur);
                    ScaleStep sc;
                    sc.nu.assign(s, 0);
                    long scaled = 0;
                    for (const auto& v : vars2) {
                        if (v.level < j || (v.level == j && v.colour != static_cast<int>(p))) {
                            sc.nu[v.index] = 1;
                            ++scaled;
                        }
                    }
                    if (scaled != prefix + qj)
                        throw InternalContradiction("p_normalise: descent census mismatch");
                    long delta = 2 * k * (s - 1) * scaled - (2 * j + 1) * s * (s - 1);
                    push(sc, std::nullopt);
                    push(DivideStep{j + 1, j}, delta);
                    fired = true;
                }
                prefix += (j < k) ? m[j] : 0;
            }
            if (fired) continue;
        }

        // Lemma 4 (i): colour 0 carries I_max at level 0
        if (pr.max_level >= 0 && pr.m[0] > 0) {
            int nu0 = detail::argmax_colour(pr.I[0]);
            if (nu0 != 0) {
                push(detail::mix_to_colour0(nu0, p), std::nullopt);
                continue;
            }
        }
        // Lemma 4 (ii): the level-1 maximum must be attained on colour 0 or p
        if (pr.max_level >= 1 && pr.m[1] > 0 && pr.I[1][0] != pr.Imax[1] &&
            pr.I[1][p] != pr.Imax[1]) {
            int nu1 = detail::argmax_colour(pr.I[1]);
            push(detail::mix_to_colourp_fix0(nu1), std::nullopt);
            continue;
        }
        // Lemma 4 (iii) relabel: nuance (0,0) carries the level-0 colour-0 max
        if (pr.max_level >= 0 && pr.m[0] > 0 && pr.I[0][0] > 0) {
            int mu0 = 0;
            for (unsigned long mu = 1; mu < p; ++mu)
                if (pr.I00[mu] > pr.I00[mu0]) mu0 = static_cast<int>(mu);
            if (mu0 != 0) {
                push(detail::mix_nuance_shift(mu0, p), std::nullopt);
                continue;
            }
        }
        // Lemma 4 (iii) inequality: I_00^0 <= m_0 + m_1 - I_0^1 - s/k
        {
            long m0 = (pr.max_level >= 0) ? pr.m[0] : 0;
            long m1 = (pr.max_level >= 1) ? pr.m[1] : 0;
            long I01 = (pr.max_level >= 1) ? pr.I[1][0] : 0;
            long I000 = (pr.max_level >= 0 && !pr.I00.empty()) ? pr.I00[0] : 0;
            if (k * (m0 + m1 - I01 - I000) < s) {
                ScaleStep sc;
                sc.nu.assign(s, 0);
                long scaled = 0;
                for (const auto& v : vars) {
                    bool keep = (v.level == 0 && v.colour == 0 && v.nuance == 0) ||
                                (v.level == 1 && v.colour == 0);
                    if (!keep && v.level <= 1) {
                        sc.nu[v.index] = 1;
                        ++scaled;
                    } else if (!keep && v.level >= 2) {
                        // levels >= 2 stay: g already divisible by p^2 there
                    }
                }
                if (scaled != (m0 - I000) + (m1 - I01))
                    throw InternalContradiction("p_normalise: (iii) census mismatch");
                long delta = 2 * k * (s - 1) * scaled - 2 * s * (s - 1);
                push(sc, std::nullopt);
                push(DivideStep{0, 2}, delta);
                continue;
            }
        }
        break;  // fixpoint
    }
    return {cur, rec};
}

/// Checkable part of Def. 8 plus the Lemma 4 shape; returns the verdict and
/// the list of violated properties.
struct ProperReport {
    bool proper = false;
    std::vector<std::string> failures;
};

inline ProperReport check_proper(const FormPair& pair) {
    ProperReport rep;
    const Params& P = pair.P;
    const long s = pair.s();
    auto vars = classify_all(pair);
    auto pr = compute_profile(pair, vars);
    Int smin = Int(2) * Int(P.k) * Int(P.k) + Int(1);
    if (Int(s) < smin)
        rep.failures.push_back("s >= 2k^2+1 fails (s = " + std::to_string(s) + ")");
    Int q0(pr.m.empty() ? 0 : pr.q[0]);
    Int q0_max = Int(2) * P.p_pow(P.tau + 1) - Int(2);
    if (q0 > q0_max)
        rep.failures.push_back("q_0 <= 2p^{tau+1}-2 fails (q_0 = " + q0.str() + ")");
    // Lemma 2 inequalities
    {
        long prefix = 0;
        for (long j = 0; j < P.k; ++j) {
            long mj = (j <= pr.max_level) ? pr.m[j] : 0;
            long qj = (j <= pr.max_level) ? pr.q[j] : 0;
            if (2 * P.k * (prefix + qj) < (2 * j + 1) * s)
                rep.failures.push_back("Lemma 2 q-inequality fails at j = " + std::to_string(j));
            prefix += mj;
            if (P.k * prefix < (j + 1) * s)
                rep.failures.push_back("(2.4) fails at j = " + std::to_string(j));
        }
    }
    for (const auto& v : vars)
        if (v.level >= P.k) {
            rep.failures.push_back("variable above level k-1");
            break;
        }
    // Lemma 4 shape
    long m0 = pr.max_level >= 0 ? pr.m[0] : 0;
    long m1 = pr.max_level >= 1 ? pr.m[1] : 0;
    long I01 = pr.max_level >= 1 ? pr.I[1][0] : 0;
    long I000 = pr.I00.empty() ? 0 : pr.I00[0];
    if (m0 > 0 && pr.I[0][0] != pr.Imax[0])
        rep.failures.push_back("Lemma 4 (i): colour 0 is not maximal at level 0");
    if (m1 > 0 && pr.I[1][0] != pr.Imax[1] &&
        pr.I[1][static_cast<int>(P.p)] != pr.Imax[1])
        rep.failures.push_back("Lemma 4 (ii): level-1 maximum not on colour 0 or p");
    for (unsigned long mu = 0; mu < P.p; ++mu)
        if (pr.I00[mu] > I000) {
            rep.failures.push_back("Lemma 4 (iii): I_00^0 not maximal among nuances");
            break;
        }
    if (m0 > 0 && static_cast<long>(P.p) * I000 < pr.I[0][0])
        rep.failures.push_back("Lemma 4 (iii): I_00^0 >= I_0^0 / p fails");
    if (P.k * (m0 + m1 - I01 - I000) < s)
        rep.failures.push_back("Lemma 4 (iii): upper bound on I_00^0 fails");
    // (3.2)
    if (P.k * (pr.I[0][0] - I000) < s - P.k * (pr.q.empty() ? 0 : pr.q[0]) - P.k * (m1 - I01))
        rep.failures.push_back("(3.2) fails");
    rep.proper = rep.failures.empty();
    return rep;
}

}  // namespace padform
