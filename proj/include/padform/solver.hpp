#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "padform/strategy.hpp"

namespace padform {

/// A certified solution: an assignment mod p^N whose congruences hold at
/// precision N, together with the rank-2 witness pair (0-based indices).
struct Solution {
    std::vector<Residue> assignment;
    long precision = 0;
    int ns_i = -1, ns_j = -1;
    std::vector<std::string> strategy_log;
};

struct CertificateUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// verification (kept deliberately plain; shares only Int/pow_mod with the
// construction path)
// ---------------------------------------------------------------------------

struct VerifyResult {
    bool ok = false;
    std::string reason;
    int i = -1, j = -1;
};

inline VerifyResult verify_nonsingular(const FormPair& pair, const std::vector<Int>& values,
                                       long modulus_exp) {
    VerifyResult res;
    const Params& P = pair.P;
    Int mod = p_power(P.p, modulus_exp);
    Int ra(0), rb(0);
    bool nontrivial = false;
    for (int i = 0; i < pair.s(); ++i) {
        if (values[i].is_zero()) continue;
        Int xv = mod_floor(values[i], mod);
        if (xv.mod_ui(P.p) != 0) nontrivial = true;
        Int xk = Int::powm(values[i], Int(P.k), mod);
        ra += pair.coeffs[i].first * xk;
        rb += pair.coeffs[i].second * xk;
    }
    if (mod_floor(ra, mod) != 0) {
        res.reason = "congruence for f fails mod p^" + std::to_string(modulus_exp);
        return res;
    }
    if (mod_floor(rb, mod) != 0) {
        res.reason = "congruence for g fails mod p^" + std::to_string(modulus_exp);
        return res;
    }
    if (!nontrivial) {
        res.reason = "assignment is trivial mod p";
        return res;
    }
    // rank 2 mod p: two unit-valued variables with independent columns
    int first = -1;
    std::pair<unsigned long, unsigned long> first_dir{0, 0};
    for (int i = 0; i < pair.s(); ++i) {
        if (values[i].is_zero() || values[i].mod_ui(P.p) == 0) continue;
        unsigned long ca = pair.coeffs[i].first.mod_ui(P.p);
        unsigned long cb = pair.coeffs[i].second.mod_ui(P.p);
        if (ca == 0 && cb == 0) continue;
        if (first < 0) {
            first = i;
            first_dir = {ca, cb};
            continue;
        }
        unsigned long det =
            (ca * first_dir.second % P.p + P.p - cb * first_dir.first % P.p) % P.p;
        if (det != 0) {
            res.ok = true;
            res.i = first;
            res.j = i;
            return res;
        }
    }
    res.reason = "no rank-2 pair modulo p on the support";
    return res;
}

// ---------------------------------------------------------------------------
// zero-representing colours and the large-q0 shortcut
// ---------------------------------------------------------------------------

struct ZeroRepReport {
    std::vector<char> zero_representing;            // per colour 0..p
    std::vector<std::vector<int>> witness;          // per colour, may be empty
};

inline ZeroRepReport zero_representing(const FormPair& pair) {
    ZeroRepReport rep;
    const unsigned long p = pair.P.p;
    rep.zero_representing.assign(p + 1, 0);
    rep.witness.assign(p + 1, {});
    for (int nu = 0; nu <= static_cast<int>(p); ++nu) {
        auto w = colour_zero_rep_witness(pair, nu);
        if (w) {
            rep.zero_representing[nu] = 1;
            rep.witness[nu] = *w;
        }
    }
    return rep;
}

/// Nonempty zero-sum subset mod p^gamma of the given level-0 columns
/// (Davenport bound 2p^gamma - 1 in (Z/p^gamma Z)^2).
inline std::optional<std::vector<int>> level0_zero_sum_mod_pgamma(const FormPair& pair,
                                                                 const std::vector<int>& idxs) {
    const Params& P = pair.P;
    unsigned long pg = 1;
    for (long i = 0; i < P.gamma; ++i) pg *= P.p;
    std::vector<int> window = idxs;
    long dav = 2 * static_cast<long>(pg) - 1;
    if (static_cast<long>(window.size()) > dav) window.resize(dav);
    std::vector<unsigned long> ra(window.size()), rb(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        ra[i] = pair.coeffs[window[i]].first.mod_ui(pg);
        rb[i] = pair.coeffs[window[i]].second.mod_ui(pg);
    }
    SubsetSearch S;
    S.n = static_cast<int>(window.size());
    S.num_states = static_cast<std::size_t>(pg) * pg;
    S.start = 0;
    S.step = [&, pg](std::size_t s, int item) {
        unsigned long a = (s % pg + ra[item]) % pg;
        unsigned long b = (s / pg + rb[item]) % pg;
        return a + pg * b;
    };
    S.accept = [](std::size_t s) { return s == 0; };
    auto sub = lex_smallest_subset(S);
    if (!sub) return std::nullopt;
    std::vector<int> out;
    for (int i : *sub) out.push_back(window[i]);
    return out;
}

/// Lemma 7 path: q_0 >= 2p^gamma - 1 yields a non-singular solution using
/// level-0 variables only.  When `prefer` is given, variables marked there
/// are drawn first (the solver passes the ones that still certify the
/// untransformed pair after a descent).
inline std::vector<Int> large_q0_solve(const FormPair& pair,
                                       std::vector<std::string>* log = nullptr,
                                       const std::vector<char>* prefer = nullptr) {
    const Params& P = pair.P;
    auto vars = classify_all(pair);
    auto pr = compute_profile(pair, vars);
    Int q0(pr.q.empty() ? 0 : pr.q[0]);
    if (q0 < Int(2) * P.p_pow(P.gamma) - Int(1))
        throw std::invalid_argument("large_q0_solve: q_0 < 2p^gamma - 1");
    int nu_star = 0;
    {
        long best = -1;
        for (int nu = 0; nu <= static_cast<int>(P.p); ++nu)
            if (pr.I[0][nu] > best) {
                best = pr.I[0][nu];
                nu_star = nu;
            }
    }
    auto colour_of = [&](int idx) { return vars[idx].colour; };
    auto ordered_pool = [&](int excluded_colour) {
        std::vector<int> out;
        if (prefer) {
            for (const auto& v : vars)
                if (v.level == 0 && v.colour != excluded_colour && (*prefer)[v.index])
                    out.push_back(v.index);
        }
        for (const auto& v : vars)
            if (v.level == 0 && v.colour != excluded_colour &&
                (!prefer || !(*prefer)[v.index]))
                out.push_back(v.index);
        return out;
    };
    auto pool1 = ordered_pool(nu_star);
    auto j1 = level0_zero_sum_mod_pgamma(pair, pool1);
    if (!j1) throw InternalContradiction("large_q0_solve: first Davenport witness missing");
    std::set<int> colours;
    for (int i : *j1) colours.insert(colour_of(i));
    std::vector<int> support = *j1;
    if (colours.size() < 2) {
        int nu1 = *colours.begin();
        auto pool2 = ordered_pool(nu1);
        auto j2 = level0_zero_sum_mod_pgamma(pair, pool2);
        if (!j2) throw InternalContradiction("large_q0_solve: second Davenport witness missing");
        std::set<int> colours2;
        for (int i : *j2) colours2.insert(colour_of(i));
        if (colours2.size() >= 2) {
            support = *j2;
        } else {
            support.insert(support.end(), j2->begin(), j2->end());
        }
    }
    if (log) {
        std::string s = "L7 support:";
        for (int i : support) s += ' ' + std::to_string(i);
        log->push_back(s);
    }
    std::vector<Int> values(pair.s(), Int(0));
    for (int i : support) values[i] = Int(1);
    auto chk = verify_nonsingular(pair, values, P.gamma);
    if (!chk.ok) throw InternalContradiction("large_q0_solve: output failed verification: " + chk.reason);
    return values;
}

// ---------------------------------------------------------------------------
// trace expansion and lifting
// ---------------------------------------------------------------------------

/// Turn the engine terminals into a 0/unit assignment on the pair the pool
/// works over.  Multipliers along each trace multiply out (they are all 1 in
/// the solver's own runs).
inline std::vector<Int> expand_trace(const Pool& pool, const EngineResult& res) {
    const FormPair& pair = pool.pair();
    std::vector<Int> values(pair.s(), Int(0));
    // walk the terminal atom's tree accumulating multipliers
    struct Walk {
        const Pool& pool;
        std::vector<Int>& values;
        void go(int id, const Int& mult) {
            const Atom& a = pool.atom(id);
            if (a.is_original) {
                if (!values[a.orig_index].is_zero())
                    throw InternalContradiction("expand_trace: overlapping terminals");
                values[a.orig_index] = mult;
                return;
            }
            for (std::size_t c = 0; c < a.children.size(); ++c)
                go(a.children[c], mult * Int(a.child_mult[c]));
        }
    } walk{pool, values};
    walk.go(res.atom, Int(1));
    for (int lf : res.backing_leaves) {
        if (!values[lf].is_zero())
            throw InternalContradiction("expand_trace: backing overlaps the terminal");
        values[lf] = Int(1);
    }
    return values;
}

/// Hensel-style digit lift: starting from a non-singular solution mod
/// p^gamma, adjust only the two witness variables by unit twists
/// 1 + t p^{m - tau} until the congruences hold mod p^N.  The residual
/// valuation rises by at least one per step.
inline std::vector<Int> lift_solution(const FormPair& pair, std::vector<Int> values, int wi,
                                      int wj, long target_N,
                                      std::vector<long>* residual_valuations = nullptr) {
    const Params& P = pair.P;
    if (target_N < P.gamma) throw std::invalid_argument("lift_solution: N below gamma");
    Int pN = p_power(P.p, target_N);
    std::vector<int> support;
    for (int i = 0; i < pair.s(); ++i)
        if (!values[i].is_zero()) support.push_back(i);
    auto residuals = [&](long exp) {
        Int m = p_power(P.p, exp);
        Int ra(0), rb(0);
        for (int i : support) {
            Int xk = Int::powm(values[i], Int(P.k), m);
            ra += pair.coeffs[i].first * xk;
            rb += pair.coeffs[i].second * xk;
        }
        return std::make_pair(mod_floor(ra, m), mod_floor(rb, m));
    };
    for (long m = P.gamma; m < target_N; ++m) {
        auto [ra, rb] = residuals(m + 1);
        if (mod_floor(ra, p_power(P.p, m)) != 0 || mod_floor(rb, p_power(P.p, m)) != 0)
            throw InternalContradiction("lift_solution: residual below expected valuation");
        unsigned long ea = div_exact(ra, p_power(P.p, m)).mod_ui(P.p);
        unsigned long eb = div_exact(rb, p_power(P.p, m)).mod_ui(P.p);
        if (residual_valuations && (ea != 0 || eb != 0)) residual_valuations->push_back(m);
        if (ea == 0 && eb == 0) continue;
        // solve (p-1) [a_i x_i^k t_i + a_j x_j^k t_j] = -e_a (mod p), same for b
        const unsigned long p = P.p;
        auto coef = [&](const Int& c, const Int& x) {
            Int xk = Int::powm(x, Int(P.k), Int(static_cast<long>(p)));
            return (c.mod_ui(p) * xk.mod_ui(p)) % p * (p - 1) % p;
        };
        unsigned long Ai = coef(pair.coeffs[wi].first, values[wi]);
        unsigned long Aj = coef(pair.coeffs[wj].first, values[wj]);
        unsigned long Bi = coef(pair.coeffs[wi].second, values[wi]);
        unsigned long Bj = coef(pair.coeffs[wj].second, values[wj]);
        unsigned long det = (Ai * Bj % p + p - Aj * Bi % p) % p;
        if (det == 0) throw InternalContradiction("lift_solution: witness pair lost rank");
        unsigned long det_inv =
            Int::invert(Int(static_cast<long>(det)), Int(static_cast<long>(p)))->mod_ui(p);
        unsigned long na = (p - ea) % p, nb = (p - eb) % p;
        unsigned long ti = (Bj * na % p + p - Aj * nb % p) % p * det_inv % p;
        unsigned long tj = (Ai * nb % p + p - Bi * na % p) % p * det_inv % p;
        Int twist_i = Int(1) + Int(static_cast<long>(ti)) * p_power(p, m - P.tau);
        Int twist_j = Int(1) + Int(static_cast<long>(tj)) * p_power(p, m - P.tau);
        values[wi] = mod_floor(values[wi] * twist_i, pN);
        values[wj] = mod_floor(values[wj] * twist_j, pN);
    }
    auto [ra, rb] = residuals(target_N);
    if (ra != 0 || rb != 0) throw InternalContradiction("lift_solution: lift did not converge");
    for (auto& v : values) v = mod_floor(v, pN);
    return values;
}

// ---------------------------------------------------------------------------
// pull-back through a transform record
// ---------------------------------------------------------------------------

/// Map a solution of the transformed pair back to the original variables.
/// Returns the pulled-back values and a lower bound on the precision they
/// certify, given `precision` on the transformed pair.
inline std::pair<std::vector<Int>, long> pull_back(const TransformRecord& rec,
                                                   std::vector<Int> values, long precision,
                                                   const Params& P) {
    long vf = precision, vg = precision;
    for (auto it = rec.steps.rbegin(); it != rec.steps.rend(); ++it) {
        if (std::holds_alternative<ScaleStep>(*it)) {
            const auto& sc = std::get<ScaleStep>(*it);
            // solutions are projective: a negative exponent on the support is
            // absorbed by rescaling the whole vector, which raises residual
            // valuations by k per power of p
            long delta = 0;
            for (std::size_t i = 0; i < values.size(); ++i)
                if (!values[i].is_zero()) delta = std::min(delta, sc.nu[i]);
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (values[i].is_zero()) continue;
                long e = sc.nu[i] - delta;
                if (e > 0) values[i] *= p_power(P.p, e);
            }
            vf += P.k * (-delta);
            vg += P.k * (-delta);
        } else if (std::holds_alternative<MixStep>(*it)) {
            const auto& mx = std::get<MixStep>(*it);
            long det = mx.l1 * mx.m2 - mx.l2 * mx.m1;
            if (det % static_cast<long>(P.p) == 0)
                throw InternalContradiction("pull_back: non-unit mix determinant");
            long m = std::min(vf, vg);
            vf = vg = m;
        } else {
            const auto& dv = std::get<DivideStep>(*it);
            vf += dv.fa;
            vg += dv.fb;
        }
    }
    return {std::move(values), std::min(vf, vg)};
}

// ---------------------------------------------------------------------------
// end-to-end solve
// ---------------------------------------------------------------------------

inline Solution solve(const FormPair& input, long target_N) {
    const Params& P = input.P;
    const long s = input.s();
    if (Int(s) <= Int(2) * Int(P.k) * Int(P.k))
        throw OutsideHypotheses("solve: need s > 2k^2 (s = " + std::to_string(s) + ", k = " +
                                std::to_string(P.k) + ")");
    if (target_N < P.gamma) target_N = P.gamma;
    if (is_degenerate(input)) throw DegeneratePair("solve: theta(f,g) = 0");

    auto norm = p_normalise(input);
    const FormPair& N = norm.pair;
    std::vector<std::string> log;
    log.push_back("normalisation: " + std::to_string(norm.record.steps.size()) + " steps");

    auto pr = compute_profile(N);
    Int q0(pr.q.empty() ? 0 : pr.q[0]);

    std::vector<Int> values;
    if (q0 >= Int(2) * P.p_pow(P.gamma) - Int(1)) {
        log.push_back("dispatch: Lemma 7 (q_0 = " + q0.str() + ")");
        // variables whose untransformed columns are units still certify the
        // input pair after the pull-back; draw them first
        std::vector<char> prefer(s, 0);
        for (int i = 0; i < s; ++i)
            prefer[i] = (input.coeffs[i].first.mod_ui(P.p) != 0 ||
                         input.coeffs[i].second.mod_ui(P.p) != 0)
                            ? 1
                            : 0;
        values = large_q0_solve(N, &log, &prefer);
    } else {
        auto proper = check_proper(N);
        if (!proper.proper) {
            std::string why = "solve: normalised pair not proper:";
            for (const auto& f : proper.failures) why += " [" + f + "]";
            throw InternalContradiction(why);
        }
        StrategyEngine engine(N);
        auto res = engine.run();
        for (const auto& l : res.log) log.push_back(l);
        values = expand_trace(engine.pool(), res);
    }

    auto chk = verify_nonsingular(N, values, P.gamma);
    if (!chk.ok) {
        // transform-only terminals certify congruences but admit no rank-2 pair
        throw CertificateUnavailable("solve: no rank-2 witness on the normalised pair: " +
                                     chk.reason);
    }

    // precision needed on the normalised pair so the pull-back still
    // certifies target_N on the original
    long lift_N = target_N;
    for (int pass = 0; pass < 4; ++pass) {
        auto lifted = lift_solution(N, values, chk.i, chk.j, lift_N);
        auto [orig_vals, prec] = pull_back(norm.record, lifted, lift_N, P);
        // clear the common p-power so the assignment is primitive
        long c = -1;
        for (int i = 0; i < s; ++i) {
            if (orig_vals[i].is_zero()) continue;
            auto v = valuation(orig_vals[i], P.p);
            c = (c < 0) ? *v : std::min(c, *v);
        }
        if (c > 0) {
            for (auto& v : orig_vals)
                if (!v.is_zero()) v = v.shifted_down(P.p, c);
            prec -= c * P.k;
        }
        if (prec < target_N) {
            lift_N += target_N - prec;
            continue;
        }
        auto final_chk = verify_nonsingular(input, orig_vals, target_N);
        if (!final_chk.ok)
            throw CertificateUnavailable("solve: pulled-back solution not certifiable: " +
                                         final_chk.reason);
        Solution sol;
        Int pN = p_power(P.p, target_N);
        for (int i = 0; i < s; ++i)
            sol.assignment.push_back(Residue(mod_floor(orig_vals[i], pN), P.p, target_N));
        sol.precision = target_N;
        sol.ns_i = final_chk.i;
        sol.ns_j = final_chk.j;
        sol.strategy_log = std::move(log);
        return sol;
    }
    throw InternalContradiction("solve: pull-back precision did not stabilise");
}

}  // namespace padform
