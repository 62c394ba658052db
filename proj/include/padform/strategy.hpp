#pragma once

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "padform/contraction.hpp"

namespace padform {

/// What a strategy run hands back to the solver.
enum class TerminalKind {
    Primary,           // one atom at level >= gamma tracing to two level-0 colours
    ColourfulBacked,   // colourful atom plus a disjoint colour-0 backing subset
    TransformOnly,     // congruence-valid terminal without a level-0 trace
};

struct EngineResult {
    TerminalKind kind = TerminalKind::Primary;
    int atom = -1;
    std::vector<int> backing_leaves;  // original indices, values 1
    std::vector<std::string> log;
};

/// Zero-sum witness mod p^gamma among colour-nu level-0 columns, searched in
/// the split group Z/p^gamma x Z/p^{gamma-1} the colour structure induces.
/// Returns original indices.  `exclude` are indices that must not be used.
inline std::optional<std::vector<int>> colour_zero_rep_witness(
    const FormPair& pair, int nu, const std::set<int>& exclude = {}) {
    const Params& P = pair.P;
    const unsigned long p = P.p;
    unsigned long pg = 1, pg1 = 1;
    for (long i = 0; i < P.gamma; ++i) pg *= p;
    for (long i = 0; i + 1 < P.gamma; ++i) pg1 *= p;
    // functionals: phi vanishes on e_nu mod p, psi complements it
    long phi_x, phi_y, psi_x, psi_y;
    if (nu == 0) {
        phi_x = 0; phi_y = 1; psi_x = 1; psi_y = 0;
    } else if (nu == static_cast<int>(p)) {
        phi_x = 1; phi_y = 0; psi_x = 0; psi_y = 1;
    } else {
        phi_x = 1; phi_y = -nu; psi_x = 0; psi_y = 1;
    }
    std::vector<int> idxs;
    auto vars = classify_all(pair);
    for (const auto& v : vars)
        if (v.level == 0 && v.colour == nu && !exclude.count(v.index)) idxs.push_back(v.index);
    long window = static_cast<long>(pg + pg1 - 1) + 8;
    if (static_cast<long>(idxs.size()) > window) idxs.resize(window);
    std::vector<unsigned long> su(idxs.size()), sv(idxs.size());
    for (std::size_t i = 0; i < idxs.size(); ++i) {
        const auto& [a, b] = pair.coeffs[idxs[i]];
        Int phi = a * phi_x + b * phi_y;
        Int psi = a * psi_x + b * psi_y;
        if (phi.mod_ui(p) != 0)
            throw InternalContradiction("zero_rep: phi does not vanish on a colour member");
        su[i] = psi.mod_ui(pg);
        sv[i] = div_exact(phi - Int(static_cast<long>(phi.mod_ui(p))), Int(static_cast<long>(p)))
                    .mod_ui(pg1);
        // phi = p * w exactly modulo sign handling: recompute exactly
        Int w = mod_floor(phi, Int(static_cast<long>(p)) * Int(static_cast<long>(pg1)));
        sv[i] = div_exact(w, Int(static_cast<long>(p))).mod_ui(pg1);
    }
    SubsetSearch S;
    S.n = static_cast<int>(idxs.size());
    S.num_states = static_cast<std::size_t>(pg) * pg1;
    S.start = 0;
    S.step = [&, pg, pg1](std::size_t s, int item) {
        unsigned long a = (s % pg + su[item]) % pg;
        unsigned long b = (s / pg + sv[item]) % pg1;
        return a + pg * b;
    };
    S.accept = [](std::size_t s) { return s == 0; };
    auto sub = lex_smallest_subset(S);
    if (!sub) return std::nullopt;
    std::vector<int> out;
    for (int i : *sub) out.push_back(idxs[i]);
    // re-verify on the raw columns
    Int sa(0), sb(0);
    for (int i : out) {
        sa += pair.coeffs[i].first;
        sb += pair.coeffs[i].second;
    }
    Int m = p_power(p, P.gamma);
    if (mod_floor(sa, m) != 0 || mod_floor(sb, m) != 0)
        throw InternalContradiction("zero_rep: witness failed re-check");
    return out;
}

/// Orchestrates the constructive case analysis of the proof: given a proper
/// p-normalised pair, produces a primary (or colourful-with-backing) variable
/// at level >= tau+1.  Sections 7 and 8 of the argument are followed branch
/// by branch; "cannot occur" branches raise InternalContradiction.
class StrategyEngine {
public:
    explicit StrategyEngine(const FormPair& normalised) : pool_(normalised) {}

    Pool& pool() { return pool_; }

    EngineResult run() {
        const Params& P = pool_.params();
        EngineResult r = (P.tau == 1) ? run_tau1() : run_tau_ge2();
        r.log = log_;
        return r;
    }

private:
    Pool pool_;
    std::vector<std::string> log_;

    // -- small helpers -------------------------------------------------------

    const Params& P() const { return pool_.params(); }
    long pw(long e) const { return p_power(P().p, e).to_long(); }
    long lp() const { return static_cast<long>(P().p); }
    long geo(long a, long b) const {  // sum_{i=a}^{b} p^i (empty = 0)
        long s = 0, x = 1;
        for (long i = 0; i <= b; ++i) {
            if (i >= a) s += x;
            x *= lp();
        }
        return s;
    }

    void note(const std::string& what, const std::vector<int>& produced) {
        std::ostringstream os;
        os << what << " ->";
        for (int id : produced) {
            os << ' ' << id;
            const Atom& a = pool_.atom(id);
            os << "(L" << (a.level >= LEVEL_INF ? -1 : a.level) << ")";
        }
        log_.push_back(os.str());
    }

    int held(int id) {
        pool_.hold(id);
        return id;
    }

    std::vector<int> draw_level_colour(long l, int nu, long n, const char* who) {
        auto v = pool_.exact_level_colour(l, nu, static_cast<int>(n));
        if (static_cast<long>(v.size()) < n)
            throw InternalContradiction(std::string(who) + ": pool shortage at level " +
                                        std::to_string(l) + " colour " + std::to_string(nu));
        return v;
    }
    std::vector<int> draw_level(long l, long n, const char* who) {
        auto v = pool_.exact_level(l, static_cast<int>(n));
        if (static_cast<long>(v.size()) < n)
            throw InternalContradiction(std::string(who) + ": pool shortage at level " +
                                        std::to_string(l));
        return v;
    }
    std::vector<int> draw_colourful0(long n, const char* who) {
        auto v = pool_.flagged_at_least(0, 'C', static_cast<int>(n));
        if (static_cast<long>(v.size()) < n)
            throw InternalContradiction(std::string(who) + ": colourful pool shortage");
        return v;
    }

    LevelProfile profile() const { return compute_profile(pool_.pair()); }

    /// Profile counters of the unconsumed, unheld original population; the
    /// strategies consult them before each step.
    long count_level(long l) const {
        return static_cast<long>(pool_.exact_level(l).size());
    }
    long count_level_colour(long l, int nu) const {
        return static_cast<long>(pool_.exact_level_colour(l, nu).size());
    }
    std::pair<int, long> max_colour_at(long l) const {
        long best = -1;
        int bc = 0;
        for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
            long n = count_level_colour(l, nu);
            if (n > best) {
                best = n;
                bc = nu;
            }
        }
        return {bc, best};
    }
    long q_at(long l) const {
        long m = count_level(l);
        return m - max_colour_at(l).second;
    }

    EngineResult make_terminal(int atom_id) {
        const Atom& a = pool_.atom(atom_id);
        if (a.level < P().gamma)
            throw InternalContradiction("terminal below level gamma");
        EngineResult r;
        r.atom = atom_id;
        if (a.primary) {
            r.kind = TerminalKind::Primary;
        } else if (a.colourful) {
            r.kind = TerminalKind::ColourfulBacked;
            std::set<int> excl(a.leaves.begin(), a.leaves.end());
            auto backing = colour_zero_rep_witness(pool_.pair(), 0, excl);
            if (!backing)
                throw InternalContradiction("colourful terminal without a colour-0 backing");
            r.backing_leaves = *backing;
        } else {
            r.kind = TerminalKind::TransformOnly;
        }
        note("terminal", {atom_id});
        return r;
    }

    /// Lemma 23 with a cap: extract exactly `cap` disjoint primaries from the
    /// level-0 population.
    std::vector<int> primaries_from_level0(long cap, const char* who) {
        auto H = pool_.exact_level(0);
        auto out = batch_level0_primaries_capped(H, cap, who);
        note(std::string(who) + " L23", out);
        return out;
    }

    std::vector<int> batch_level0_primaries_capped(const std::vector<int>& H, long cap,
                                                   const char* who) {
        auto cls = contract_detail::by_colour(pool_, H);
        long total = static_cast<long>(H.size());
        long imax = 0;
        for (auto& [c, v] : cls) imax = std::max<long>(imax, v.size());
        long target = std::min(total / (2 * lp() - 1), (total - imax) / lp());
        if (target < cap)
            throw InternalContradiction(std::string(who) +
                                        ": Lemma 23 budget below the requested count");
        return extract_primaries(pool_, H, cap, 0);
    }

    /// Lemma 36 with j = 0 (no transform): Lemma 23 gives m primaries, then
    /// Lemma 22 with the level-1 population finishes a P^2 variable.
    EngineResult lemma36_j0(long m) {
        auto P1 = primaries_from_level0(m, "L36(j=0)");
        auto [nu1, imax1] = max_colour_at(1);
        if (imax1 < lp() - 1) throw InternalContradiction("L36(j=0): I_max^1 < p-1");
        auto same = draw_level_colour(1, nu1, lp() - 1, "L36(j=0)");
        std::vector<int> other;
        for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
            if (nu == nu1) continue;
            for (int id : pool_.exact_level_colour(1, nu)) {
                if (static_cast<long>(other.size()) == lp() - m) break;
                other.push_back(id);
            }
            if (static_cast<long>(other.size()) == lp() - m) break;
        }
        if (static_cast<long>(other.size()) < lp() - m)
            throw InternalContradiction("L36(j=0): q_1 below p-m");
        int t = contract_fill(pool_, FillMode::L22, same, other, P1, 1);
        note("L36(j=0) L22", {t});
        return make_terminal(held(t));
    }

    /// Lemma 36 with j = 1 (conceptual transform; the terminal never touches
    /// the variables the transform would scale away, so its sums certify the
    /// untransformed pair directly).  `window` is the level-1 population to
    /// contract two-colouredly; pass extra flagged atoms to prefer.
    EngineResult lemma36_j1(std::vector<int> window, const std::vector<int>& prefer) {
        // Z: contraction of level-1 variables to level >= 2 spanning two colours
        int Z = -1;
        for (int id : prefer)
            if (pool_.atom(id).level >= 2) Z = id;
        if (Z < 0) {
            std::vector<int> W = window;
            for (int id : prefer)
                if (pool_.atom(id).level == 1) W.push_back(id);
            std::sort(W.begin(), W.end());
            W.erase(std::unique(W.begin(), W.end()), W.end());
            if (!prefer.empty()) {
                std::set<int> must(prefer.begin(), prefer.end());
                try {
                    Z = find_two_colour_contraction(pool_, W, &must);
                } catch (const InternalContradiction&) {
                    Z = -1;  // no witness through the preferred atoms
                }
            }
            if (Z < 0) Z = find_two_colour_contraction(pool_, W);
        }
        note("L36(j=1) two-colour", {Z});
        if (pool_.atom(Z).level >= P().gamma + 1) return make_terminal(held(Z));
        // Lemma 22 at level 2 finishes one level higher
        auto [nu2, imax2] = max_colour_at(2);
        if (imax2 < lp() - 1) throw InternalContradiction("L36(j=1): I_max^2 < p-1");
        auto same = draw_level_colour(2, nu2, lp() - 1, "L36(j=1)");
        std::vector<int> other;
        for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
            if (nu == nu2) continue;
            for (int id : pool_.exact_level_colour(2, nu)) {
                if (static_cast<long>(other.size()) == lp() - 1) break;
                other.push_back(id);
            }
            if (static_cast<long>(other.size()) == lp() - 1) break;
        }
        if (static_cast<long>(other.size()) < lp() - 1)
            throw InternalContradiction("L36(j=1): q_2 below p-1");
        int t = contract_fill(pool_, FillMode::L22, same, other, {held(Z)}, 2);
        note("L36(j=1) L22", {t});
        return make_terminal(held(t));
    }

    // -- tau = 1 (Section 7) -------------------------------------------------

    EngineResult run_tau1();
    EngineResult tau1_lemma37(const LevelProfile& pr);
    EngineResult tau1_lemma38(const LevelProfile& pr);

    // -- tau >= 2 (Section 8) ------------------------------------------------

    EngineResult run_tau_ge2();
    EngineResult tau2_lemma40();
    EngineResult tau2_lemma41(long r);
    EngineResult tau2_lemma42(long r);
    EngineResult tau2_lemma43(long r);
    EngineResult tau2_lemma44();
    EngineResult tau2_lemma45();
    EngineResult tau2_lemma46();
};

// ---------------------------------------------------------------------------
// Section 7
// ---------------------------------------------------------------------------

inline EngineResult StrategyEngine::run_tau1() {
    auto pr = profile();
    long imax1 = (pr.max_level >= 1) ? pr.Imax[1] : 0;
    if (imax1 >= lp() - 1) return tau1_lemma37(pr);
    return tau1_lemma38(pr);
}

inline EngineResult StrategyEngine::tau1_lemma37(const LevelProfile& pr) {
    const long p = lp();
    long q1 = (pr.max_level >= 1) ? pr.q[1] : 0;
    if (q1 >= 1) {
        // Lemma 36 with j = 0, m = p-1 (hypotheses hold for every proper pair)
        log_.push_back("L37: q_1 >= 1, dispatch L36(j=0, m=p-1)");
        return lemma36_j0(p - 1);
    }
    log_.push_back("L37: q_1 = 0");
    if (pr.r >= 0) {
        auto P1 = primaries_from_level0(p, "L37");
        auto [nu1, imax1] = max_colour_at(1);
        auto same = draw_level_colour(1, nu1, p - 1, "L37");
        int t = contract_fill(pool_, FillMode::L21, same, {}, P1, 1);
        note("L37 L21", {t});
        return make_terminal(held(t));
    }
    // r = -1: colour 0 is zero-representing; build a C^2 variable
    int nu1 = max_colour_at(1).first;
    if (nu1 != 0 && nu1 != static_cast<int>(P().p))
        throw InternalContradiction("L37: level-1 maximum not on colour 0 or p");
    int extra = -1;  // one level-1 variable of colour != nu* for the final Lemma 22
    if (nu1 == static_cast<int>(P().p)) {
        // Lemma 20 once on the colour-0 level-0 variables
        auto e00 = pool_.exact_level_colour(0, 0);
        std::vector<int> lowh, highh;
        for (int id : e00) {
            unsigned long d = pool_.atom(id).corr % P().p;
            (d <= (P().p - 1) / 2 ? lowh : highh).push_back(id);
        }
        std::vector<int>& half = (static_cast<long>(lowh.size()) >= 4 * p - 3) ? lowh : highh;
        if (static_cast<long>(half.size()) < 4 * p - 3)
            throw InternalContradiction("L37: no Lemma 20 half-range window");
        half.resize(4 * p - 3);
        extra = held(contract_halfrange(pool_, half, 0));
        note("L37 L20", {extra});
    } else {
        // Lemma 18: p-1 nuance-(0,0) variables and one other colour-0 nuance
        std::vector<int> nn, other;
        for (int id : pool_.exact_level_colour(0, 0))
            (pool_.atom(id).nuance == 0 ? nn : other).push_back(id);
        if (static_cast<long>(nn.size()) < p - 1 || other.empty())
            throw InternalContradiction("L37: Lemma 18 inputs missing");
        nn.resize(p - 1);
        extra = held(contract_nuance_shift(pool_, nn, other[0], 0));
        note("L37 L18", {extra});
    }
    // p-1 colourful variables climb to level 1 via Lemma 32 (m = -1)
    auto helpers = draw_level_colour(0, 0, 2 * p - 2, "L37");
    auto c0 = draw_colourful0(pw(2) - pw(1), "L37");
    auto C1 = l32_tower(pool_, c0, {{0, helpers}}, 0, 1, -1);
    for (int id : C1) held(id);
    note("L37 L32", C1);
    for (int id : C1)
        if (pool_.atom(id).level >= 2) return make_terminal(id);
    auto same = draw_level_colour(1, nu1, p - 1, "L37");
    int t = contract_fill(pool_, FillMode::L22, same, {extra}, C1, 1);
    note("L37 L22", {t});
    return make_terminal(held(t));
}

inline EngineResult StrategyEngine::tau1_lemma38(const LevelProfile& pr) {
    const long p = lp();
    long m1 = (pr.max_level >= 1) ? pr.m[1] : 0;
    long q1 = (pr.max_level >= 1) ? pr.q[1] : 0;
    long q2 = (pr.max_level >= 2) ? pr.q[2] : 0;
    long imax2 = (pr.max_level >= 2) ? pr.Imax[2] : 0;
    long r = pr.r;
    if (q1 >= p && m1 >= 2 * p - 1 && q2 >= p - 1 && imax2 >= p - 1) {
        log_.push_back("L38: preliminary L36(j=1, m=1)");
        // prefer routing the contraction through a fresh primary variable
        auto P1 = primaries_from_level0(1, "L38pre");
        std::vector<int> W;
        {
            // level-1 window with per-colour multiplicity <= p-1
            auto cls = contract_detail::by_colour(pool_, pool_.exact_level(1));
            std::vector<std::pair<long, int>> sizes;
            for (auto& [c, v] : cls) sizes.push_back({-(long)v.size(), c});
            std::sort(sizes.begin(), sizes.end());
            for (auto& sz : sizes) {
                long cap = p - 1;
                for (int id : cls[sz.second]) {
                    if (cap == 0 || static_cast<long>(W.size()) == 2 * p - 1) break;
                    W.push_back(id);
                    --cap;
                }
            }
            if (static_cast<long>(W.size()) < 2 * p - 1)
                throw InternalContradiction("L38pre: level-1 window ran dry");
        }
        return lemma36_j1(W, P1);
    }
    if (r == static_cast<long>(P().p) - 1) {
        long m0 = pr.m[0];
        if (m0 >= (2 * p - 1) * (2 * p - 1)) {
            auto P1 = primaries_from_level0(2 * p - 1, "L38 r=p-1");
            int t = contract_special(pool_, P1, 1, SpecialMode::AnyCount);
            note("L38 L14", {t});
            return make_terminal(held(t));
        }
        auto P1 = primaries_from_level0(2 * p - 2, "L38 r=p-1");
        for (int id : P1)
            if (pool_.atom(id).level >= 2) return make_terminal(id);
        auto e1 = draw_level(1, 1, "L38 r=p-1");
        std::vector<int> ids = P1;
        ids.push_back(e1[0]);
        std::sort(ids.begin(), ids.end());
        auto sub = contract_detail::level_vector_zero_subset(pool_, ids, false);
        if (!sub) throw InternalContradiction("L38 r=p-1: Olson n=2 witness missing");
        int t = pool_.contract(*sub, 2);
        note("L38 r=p-1 olson", {t});
        if (!pool_.atom(t).primary)
            throw InternalContradiction("L38 r=p-1: contraction missed every primary");
        return make_terminal(held(t));
    }
    if (r >= 0) {
        // 0 <= r <= p-2; the colour 0 is zero-representing in every sub-branch
        auto [nu1, imax1] = max_colour_at(1);
        if (imax1 >= p - r - 1) {
            auto helpers = draw_level_colour(0, 0, 2 * p - 2, "L38 r>=0");
            auto c0 = draw_colourful0(pw(2) + r * pw(1), "L38 r>=0");
            auto C1 = l32_tower(pool_, c0, {{0, helpers}}, 0, 1, r);
            for (int id : C1) held(id);
            note("L38 L32", C1);
            for (int id : C1)
                if (pool_.atom(id).level >= 2) return make_terminal(id);
            auto same = draw_level_colour(1, nu1, p - r - 1, "L38 r>=0");
            int t = contract_fill(pool_, FillMode::L21, same, {}, C1, 1);
            note("L38 L21", {t});
            return make_terminal(held(t));
        }
        if (q2 >= p - 1 && imax2 >= p - 1) {
            // Lemma 16 makes p-r-1 level-1 variables, Lemma 32 p+r colourful ones
            std::vector<int> e1s;
            for (long i = 0; i < p - r - 1; ++i) {
                long need = (P().p == 5) ? 2 * p - 1 : 3 * p - 2;
                auto win = draw_level_colour(0, 0, need, "L38 L16");
                e1s.push_back(held(contract_uniform(pool_, win, 0, UniformMode::Colour)));
            }
            note("L38 L16", e1s);
            auto helpers = draw_level_colour(0, 0, 2 * p - 2, "L38 r>=0");
            auto c0 = draw_colourful0(pw(2) + r * pw(1), "L38 r>=0");
            auto C1 = l32_tower(pool_, c0, {{0, helpers}}, 0, 1, r);
            for (int id : C1) held(id);
            note("L38 L32", C1);
            for (int id : C1)
                if (pool_.atom(id).level >= 2) return make_terminal(id);
            std::vector<int> K = e1s;
            K.insert(K.end(), C1.begin(), C1.end());
            std::sort(K.begin(), K.end());
            // fat colour class -> Lemma 19; else the q(K) >= p restart
            auto cls = contract_detail::by_colour(pool_, K);
            std::set<int> cset(C1.begin(), C1.end());
            for (auto& [mu, members] : cls) {
                if (static_cast<long>(members.size()) < p) continue;
                std::vector<int> flagged, plain;
                for (int id : members) (cset.count(id) ? flagged : plain).push_back(id);
                if (flagged.empty())
                    throw InternalContradiction("L38: fat class without a colourful member");
                std::vector<int> plainp = plain;
                std::vector<int> extraS(flagged.begin() + 1, flagged.end());
                while (static_cast<long>(plainp.size()) < p - 1 && !extraS.empty()) {
                    plainp.push_back(extraS.back());
                    extraS.pop_back();
                }
                plainp.resize(p - 1);
                int t = contract_fill(pool_, FillMode::L19, plainp, {}, {flagged[0]}, 1);
                note("L38 L19", {t});
                return make_terminal(held(t));
            }
            log_.push_back("L38: q(K) >= p restart via L36(j=1)");
            return lemma36_j1(K, C1);
        }
        if (m1 >= 1) {
            auto e00 = pool_.exact_level_colour(0, 0);
            auto b25 = l25_contract(pool_, e00, 0);
            if (static_cast<long>(b25.outputs.size()) < p - r - 2)
                throw InternalContradiction("L38: Lemma 25 under-produced");
            std::vector<int> e01s(b25.outputs.begin(), b25.outputs.begin() + (p - r - 2));
            note("L38 L25", e01s);
            auto helpers = draw_level_colour(0, 0, 2 * p - 2, "L38 m1>=1");
            auto c0 = draw_colourful0(pw(2) + r * pw(1), "L38 m1>=1");
            auto C1 = l32_tower(pool_, c0, {{0, helpers}}, 0, 1, r);
            for (int id : C1) held(id);
            note("L38 L32", C1);
            for (int id : C1)
                if (pool_.atom(id).level >= 2) return make_terminal(id);
            auto e1 = draw_level(1, 1, "L38 m1>=1");
            std::vector<int> H = e01s;
            H.insert(H.end(), C1.begin(), C1.end());
            H.push_back(e1[0]);
            std::sort(H.begin(), H.end());
            auto cls = contract_detail::by_colour(pool_, H);
            std::set<int> cset(C1.begin(), C1.end());
            for (auto& [mu, members] : cls) {
                if (static_cast<long>(members.size()) < p) continue;
                std::vector<int> flagged, plain;
                for (int id : members) (cset.count(id) ? flagged : plain).push_back(id);
                if (flagged.empty())
                    throw InternalContradiction("L38: fat class without a colourful member");
                std::vector<int> plainp = plain;
                std::vector<int> extraS(flagged.begin() + 1, flagged.end());
                while (static_cast<long>(plainp.size()) < p - 1 && !extraS.empty()) {
                    plainp.push_back(extraS.back());
                    extraS.pop_back();
                }
                plainp.resize(p - 1);
                int t = contract_fill(pool_, FillMode::L19, plainp, {}, {flagged[0]}, 1);
                note("L38 L19", {t});
                return make_terminal(held(t));
            }
            std::set<int> must(C1.begin(), C1.end());
            int t = find_two_colour_contraction(pool_, H, &must);
            note("L38 L13", {t});
            return make_terminal(held(t));
        }
        // m1 = 0: Lemma 33/34 route
        auto e00 = pool_.exact_level_colour(0, 0);
        auto tw = l33_l34_tower(pool_, e00, 0, r);
        note("L38 L33/34", tw.outputs);
        auto c0 = draw_colourful0(pw(2) + r * pw(1), "L38 m1=0");
        auto C1 = l32_tower(pool_, c0, {{0, tw.spares[0]}}, 0, 1, r);
        for (int id : C1) held(id);
        note("L38 L32", C1);
        for (int id : C1)
            if (pool_.atom(id).level >= 2) return make_terminal(id);
        int t = contract_fill(pool_, FillMode::L21, tw.outputs, {}, C1, 1);
        note("L38 L21", {t});
        return make_terminal(held(t));
    }
    // r = -1
    long m0 = pr.m[0];
    auto nuance_shift_extra = [&]() {
        std::vector<int> nn, other;
        for (int id : pool_.exact_level_colour(0, 0))
            (pool_.atom(id).nuance == 0 ? nn : other).push_back(id);
        if (static_cast<long>(nn.size()) < p - 1 || other.empty())
            throw InternalContradiction("L38 r=-1: Lemma 18 inputs missing");
        nn.resize(p - 1);
        int id = held(contract_nuance_shift(pool_, nn, other[0], 0));
        note("L38 L18", {id});
        return id;
    };
    if (m0 >= 4 * p * p - 4 * p) {
        int extra = nuance_shift_extra();
        auto e00 = pool_.exact_level_colour(0, 0);
        std::vector<int> e01s;
        if (P().p == 5) {
            auto b = l26_contract(pool_, e00, 0);
            if (static_cast<long>(b.outputs.size()) < p - 1)
                throw InternalContradiction("L38 r=-1: Lemma 26 under-produced");
            e01s.assign(b.outputs.begin(), b.outputs.begin() + (p - 1));
        } else {
            auto b = l25_contract(pool_, e00, 0);
            if (static_cast<long>(b.outputs.size()) < p - 1)
                throw InternalContradiction("L38 r=-1: Lemma 25 under-produced");
            e01s.assign(b.outputs.begin(), b.outputs.begin() + (p - 1));
        }
        note("L38 L25/26", e01s);
        auto helpers = draw_level_colour(0, 0, 2 * p - 2, "L38 r=-1");
        auto c0 = draw_colourful0(pw(2) - pw(1), "L38 r=-1");
        auto C1 = l32_tower(pool_, c0, {{0, helpers}}, 0, 1, -1);
        for (int id : C1) held(id);
        note("L38 L32", C1);
        for (int id : C1)
            if (pool_.atom(id).level >= 2) return make_terminal(id);
        int t = contract_fill(pool_, FillMode::L22, e01s, {extra}, C1, 1);
        note("L38 L22", {t});
        return make_terminal(held(t));
    }
    long I01 = count_level_colour(1, 0);
    if (m1 - I01 == 0) {
        int extra = nuance_shift_extra();
        auto e00 = pool_.exact_level_colour(0, 0);
        auto b25 = l25_contract(pool_, e00, 0);
        if (static_cast<long>(b25.outputs.size()) < p - 3)
            throw InternalContradiction("L38 r=-1: Lemma 25 under-produced");
        std::vector<int> e01s(b25.outputs.begin(), b25.outputs.begin() + (p - 3));
        auto orig01 = draw_level_colour(1, 0, 2, "L38 r=-1");
        e01s.insert(e01s.end(), orig01.begin(), orig01.end());
        note("L38 L25+orig", e01s);
        auto helpers = draw_level_colour(0, 0, 2 * p - 2, "L38 r=-1");
        auto c0 = draw_colourful0(pw(2) - pw(1), "L38 r=-1");
        auto C1 = l32_tower(pool_, c0, {{0, helpers}}, 0, 1, -1);
        for (int id : C1) held(id);
        note("L38 L32", C1);
        for (int id : C1)
            if (pool_.atom(id).level >= 2) return make_terminal(id);
        int t = contract_fill(pool_, FillMode::L22, e01s, {extra}, C1, 1);
        note("L38 L22", {t});
        return make_terminal(held(t));
    }
    // m1 - I_0^1 >= 1
    {
        auto e00 = pool_.exact_level_colour(0, 0);
        auto b25 = l25_contract(pool_, e00, 0);
        if (static_cast<long>(b25.outputs.size()) < p - 2)
            throw InternalContradiction("L38 r=-1: Lemma 25 under-produced");
        std::vector<int> e01s(b25.outputs.begin(), b25.outputs.begin() + (p - 2));
        note("L38 L25", e01s);
        auto helpers = draw_level_colour(0, 0, 2 * p - 2, "L38 r=-1b");
        auto c0 = draw_colourful0(pw(2) - pw(1), "L38 r=-1b");
        auto C1 = l32_tower(pool_, c0, {{0, helpers}}, 0, 1, -1);
        for (int id : C1) held(id);
        note("L38 L32", C1);
        for (int id : C1)
            if (pool_.atom(id).level >= 2) return make_terminal(id);
        if (I01 >= 1) {
            auto one01 = draw_level_colour(1, 0, 1, "L38 r=-1b");
            std::vector<int> same = e01s;
            same.push_back(one01[0]);
            std::vector<int> nonzero1;
            for (int nu = 1; nu <= static_cast<int>(P().p); ++nu) {
                for (int id : pool_.exact_level_colour(1, nu)) {
                    nonzero1.push_back(id);
                    break;
                }
                if (!nonzero1.empty()) break;
            }
            if (nonzero1.empty()) throw InternalContradiction("L38 r=-1b: no E^1 of colour != 0");
            int t = contract_fill(pool_, FillMode::L22, same, {nonzero1[0]}, C1, 1);
            note("L38 L22", {t});
            return make_terminal(held(t));
        }
        // I_0^1 = 0, m_1 >= 2 of nonzero colours
        std::vector<int> K = C1;
        std::vector<int> e0b;
        for (int nu = 1; nu <= static_cast<int>(P().p) && static_cast<long>(e0b.size()) < 2; ++nu)
            for (int id : pool_.exact_level_colour(1, nu)) {
                e0b.push_back(id);
                if (e0b.size() == 2) break;
            }
        if (e0b.size() < 2) throw InternalContradiction("L38 r=-1b: m_1 - I_0^1 >= 2 missing");
        K.insert(K.end(), e0b.begin(), e0b.end());
        K.insert(K.end(), e01s.begin(), e01s.end());
        std::sort(K.begin(), K.end());
        auto cls = contract_detail::by_colour(pool_, K);
        std::set<int> cset(C1.begin(), C1.end());
        for (auto& [mu, members] : cls) {
            if (static_cast<long>(members.size()) < p) continue;
            std::vector<int> flagged, plain;
            for (int id : members) (cset.count(id) ? flagged : plain).push_back(id);
            if (flagged.empty())
                throw InternalContradiction("L38 r=-1b: fat class without a colourful member");
            std::vector<int> plainp = plain;
            std::vector<int> extraS(flagged.begin() + 1, flagged.end());
            while (static_cast<long>(plainp.size()) < p - 1 && !extraS.empty()) {
                plainp.push_back(extraS.back());
                extraS.pop_back();
            }
            plainp.resize(p - 1);
            int t = contract_fill(pool_, FillMode::L19, plainp, {}, {flagged[0]}, 1);
            note("L38 r=-1b L19", {t});
            return make_terminal(held(t));
        }
        auto pr2 = profile();
        long q2n = (pr2.max_level >= 2) ? pr2.q[2] : 0;
        long imax2n = (pr2.max_level >= 2) ? pr2.Imax[2] : 0;
        if (q2n >= p - 1 && imax2n >= p - 1) {
            log_.push_back("L38 r=-1: restart via L36(j=1)");
            return lemma36_j1(K, C1);
        }
        throw InternalContradiction(
            "L38 r=-1: q(K) >= p with q_2 <= p-2 or I_max^2 <= p-2 contradicts p-normalisation");
    }
}

// ---------------------------------------------------------------------------
// Section 8
// ---------------------------------------------------------------------------

inline EngineResult StrategyEngine::run_tau_ge2() {
    auto pr = profile();
    const long p = lp();
    long m0 = pr.m[0];
    long r = pr.r;
    long i00 = pr.I[0][0];
    long t = P().tau;
    // r = -1 splits on I_0^0 (Lemmas 44-46 carry no m_0 hypothesis); r >= 0
    // splits on m_0 with Lemma 40 covering the small-m_0 regime
    if (r >= 0) {
        if (m0 <= 3 * pw(t + 1) - 4 * pw(t) - 2 * pw(t - 1) + p + 3) return tau2_lemma40();
        long l41 = 3 * pw(t + 1) + ((P().p == 5) ? 3 : 8) * pw(t);
        if (m0 >= l41) return tau2_lemma41(r);
        if (m0 >= 3 * pw(t + 1) + pw(t) - 3) return tau2_lemma42(r);
        return tau2_lemma43(r);
    }
    long l44 = (P().p == 5)
                   ? 3 * pw(t + 1) - geo(0, t) + 2 * p * p - 6 * p + 2
                   : 2 * pw(t + 1) + (11 * pw(t)) / 2 - pw(t - 1) + 3 * geo(0, t - 2) +
                         2 * p * p - (11 * p) / 2 - 2;
    if (i00 >= l44) return tau2_lemma44();
    if (i00 >= pw(t + 1) + pw(t) - 1) return tau2_lemma45();
    return tau2_lemma46();
}

inline EngineResult StrategyEngine::tau2_lemma40() {
    const long p = lp();
    const long t = P().tau;
    log_.push_back("dispatch L40");
    auto P1 = primaries_from_level0(pw(t) - pw(t - 1), "L40");
    long x = pw(t - 1) - 2 * pw(t - 2) - 3 * geo(0, t - 3) - 1;
    long y = pw(t - 1) + 3 * geo(0, t - 2) - 1;
    long z = p - 2;
    auto E1 = pool_.exact_level(1);
    auto b29 = l29_contract(pool_, E1, P1, x, y, z, 0, 1);
    note("L40 L29", b29.outputs);
    if (static_cast<long>(b29.outputs.size()) < 2 * pw(t - 1) + pw(t - 2) - 2)
        throw InternalContradiction("L40: Lemma 29 under-produced");
    std::vector<int> P2(b29.outputs.begin(),
                        b29.outputs.begin() + (2 * pw(t - 1) + pw(t - 2) - 2));
    auto tower = l31_tower(pool_, P2, 2, t, p + 1);
    note("L40 L31", tower.outputs);
    if (static_cast<long>(tower.outputs.size()) < 2 * p - 1)
        throw InternalContradiction("L40: Lemma 31 under-produced");
    int term = contract_special(pool_, tower.outputs, t, SpecialMode::AnyCount);
    note("L40 L14", {term});
    return make_terminal(held(term));
}

inline EngineResult StrategyEngine::tau2_lemma41(long r) {
    const long p = lp();
    const long t = P().tau;
    log_.push_back("dispatch L41");
    auto e00 = pool_.exact_level_colour(0, 0);
    auto tw = l33_l34_tower(pool_, e00, 0, r);
    note("L41 L33/34", tw.outputs);
    auto c0 = draw_colourful0(pw(t + 1) + r * pw(t), "L41");
    int term = l39_terminal(pool_, c0, tw.outputs, tw.spares, 0, r);
    note("L41 L39", {term});
    return make_terminal(held(term));
}

inline EngineResult StrategyEngine::tau2_lemma42(long r) {
    const long p = lp();
    const long t = P().tau;
    log_.push_back("dispatch L42");
    auto e00 = pool_.exact_level_colour(0, 0);
    auto tw35 = l35_tower(pool_, e00, 0);
    log_.push_back("L42 L35 spares ready");
    // (a) some colour already supplies p-r-1 level-tau variables
    for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
        if (count_level_colour(t, nu) >= p - r - 1) {
            auto etau = draw_level_colour(t, nu, p - r - 1, "L42a");
            auto c0 = draw_colourful0(pw(t + 1) + r * pw(t), "L42a");
            int term = l39_terminal(pool_, c0, etau, tw35.spares, 0, r);
            note("L42a L39", {term});
            return make_terminal(held(term));
        }
    }
    // (b) a fat colour class at some middle level climbs with Lemma 33/34
    for (long j = 1; j <= t - 1; ++j) {
        long need = (P().p == 5) ? l34_count(P(), j, r) : l33_count(P(), j, r);
        for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
            if (count_level_colour(j, nu) < need) continue;
            auto ej = pool_.exact_level_colour(j, nu);
            auto tw = l33_l34_tower(pool_, ej, j, r);
            note("L42b L33/34", tw.outputs);
            auto c0 = draw_colourful0(pw(t + 1) + r * pw(t), "L42b");
            int term = l39_terminal(pool_, c0, tw.outputs, tw35.spares, 0, r);
            note("L42b L39", {term});
            return make_terminal(held(term));
        }
    }
    // (c) a middle level with large m_j and q_j
    for (long j = 1; j <= t - 1; ++j) {
        long mj = count_level(j);
        long qj = q_at(j);
        if (mj < 2 * pw(t - j + 1) - (2 * r + 2) * pw(t - j) + p * p - 3 * p + 2 * r + 1 ||
            qj < pw(t - j + 1) - (r + 1) * pw(t - j) + r)
            continue;
        std::map<long, std::vector<int>> helpers;
        for (long l = 0; l < j; ++l) helpers[l] = tw35.spares.at(l);
        auto c0 = draw_colourful0(pw(t + 1) + r * pw(t), "L42c");
        auto Cj = l32_tower(pool_, c0, helpers, 0, j, r);
        for (int id : Cj) held(id);
        note("L42c L32", Cj);
        long x = pw(t - j) - pw(t - j - 1) + r * geo(0, t - j - 1);
        long y = pw(t - j) - r * geo(0, t - j - 1);
        auto Ej = pool_.exact_level(j);
        auto b29 = l29_contract(pool_, Ej, Cj, x, y, r, 1, j);
        note("L42c L29", b29.outputs);
        if (static_cast<long>(b29.outputs.size()) < 2 * pw(t - j) - pw(t - j - 1) - 1)
            throw InternalContradiction("L42: Lemma 29 under-produced");
        std::vector<int> Cj1(b29.outputs.begin(),
                             b29.outputs.begin() + (2 * pw(t - j) - pw(t - j - 1) - 1));
        // Lemma 21 with p spared C^j and p-1 of the level-j colour-0 spares
        std::vector<int> sparedC;
        for (int id : Cj)
            if (!pool_.atom(id).consumed &&
                std::find(Cj1.begin(), Cj1.end(), id) == Cj1.end())
                sparedC.push_back(id);
        if (static_cast<long>(sparedC.size()) < p)
            throw InternalContradiction("L42: spared C^j shortage");
        sparedC.resize(p);
        std::vector<int> ehelp(tw35.spares.at(j).begin(), tw35.spares.at(j).begin() + (p - 1));
        int extraC = contract_fill(pool_, FillMode::L21, ehelp, {}, sparedC, j);
        note("L42c L21", {extraC});
        Cj1.push_back(held(extraC));
        std::map<long, std::vector<int>> helpers2;
        for (long l = j + 1; l <= t - 1; ++l) helpers2[l] = tw35.spares.at(l);
        int term = l39_terminal(pool_, Cj1, {}, helpers2, j + 1, p - 1);
        note("L42c L39", {term});
        return make_terminal(held(term));
    }
    throw InternalContradiction("L42: every branch exhausted (contradicts p-normalisation)");
}

inline EngineResult StrategyEngine::tau2_lemma43(long r) {
    const long p = lp();
    const long t = P().tau;
    log_.push_back("dispatch L43");
    auto P1 = primaries_from_level0(pw(t), "L43");
    // (a) one colour at level 1 feeds Lemma 33/34 directly
    {
        long need = (P().p == 5) ? l34_count(P(), 1, 0) : l33_count(P(), 1, 0);
        for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
            if (count_level_colour(1, nu) < need) continue;
            auto e1 = pool_.exact_level_colour(1, nu);
            auto tw = l33_l34_tower(pool_, e1, 1, 0);
            note("L43a L33/34", tw.outputs);
            int term = l39_terminal(pool_, P1, tw.outputs, tw.spares, 1, 0);
            note("L43a L39", {term});
            return make_terminal(held(term));
        }
    }
    long m1 = count_level(1);
    long thresh = 3 * pw(t) + 5 * pw(t - 1) - ((p - 1) / 2) * geo(1, t - 2) - pw(t - 2) +
                  3 * geo(0, t - 3) - 3 * p - 4;
    if (m1 >= thresh) {
        long x = pw(t - 1) - pw(t - 2) - 2 * geo(0, t - 3) - 1;
        long y = pw(t - 1) + 2 * geo(0, t - 2) - 1;
        auto E1 = pool_.exact_level(1);
        auto b29 = l29_contract(pool_, E1, P1, x, y, p - 1, 0, 1);
        note("L43b L29", b29.outputs);
        if (static_cast<long>(b29.outputs.size()) < 2 * pw(t - 1) + pw(t - 2) - 2)
            throw InternalContradiction("L43: Lemma 29 under-produced");
        std::vector<int> P2(b29.outputs.begin(),
                            b29.outputs.begin() + (2 * pw(t - 1) + pw(t - 2) - 2));
        auto tower = l31_tower(pool_, P2, 2, t, p + 1);
        int term = contract_special(pool_, tower.outputs, t, SpecialMode::AnyCount);
        note("L43b L14", {term});
        return make_terminal(held(term));
    }
    if (m1 <= 2 * p * p - p - 3) {
        std::vector<int> P1trim(P1.begin(), P1.begin() + (pw(t) - 2));
        auto tower = l31_tower(pool_, P1trim, 1, 2, 0);
        note("L43c L31", tower.outputs);
        std::vector<int> P2 = tower.outputs;  // p^{tau-1} - 2 of them
        if (t == 2) {
            auto K = pool_.exact_level(2);
            auto b28 = l28_contract(pool_, K, {P2[0]}, 1, 2);
            note("L43c L28", b28.outputs);
            return make_terminal(held(b28.outputs[0]));
        }
        long x = pw(t - 2) - pw(t - 3) - 2 * geo(0, t - 4) - 1;
        long y = pw(t - 2) + 2 * geo(0, t - 3);
        auto E2 = pool_.exact_level(2);
        auto b29 = l29_contract(pool_, E2, P2, x, y, p - 4, 0, 2);
        note("L43c L29", b29.outputs);
        if (static_cast<long>(b29.outputs.size()) < 2 * pw(t - 2) + pw(t - 3) - 1)
            throw InternalContradiction("L43: second Lemma 29 under-produced");
        std::vector<int> P3(b29.outputs.begin(),
                            b29.outputs.begin() + (2 * pw(t - 2) + pw(t - 3) - 2));
        auto tower2 = l31_tower(pool_, P3, 3, t, p + 1);
        int term = contract_special(pool_, tower2.outputs, t, SpecialMode::AnyCount);
        note("L43c L14", {term});
        return make_terminal(held(term));
    }
    // m1 >= 2p^2-p-2: some colour at level 1 holds 2p-2 variables
    {
        int nu = -1;
        for (int c = 0; c <= static_cast<int>(P().p); ++c)
            if (count_level_colour(1, c) >= 2 * p - 2) {
                nu = c;
                break;
            }
        if (nu < 0) throw InternalContradiction("L43: no colour with 2p-2 level-1 variables");
        auto helpers = draw_level_colour(1, nu, 2 * p - 2, "L43d");
        auto P2 = l32_tower(pool_, P1, {{1, helpers}}, 1, 2, 0);
        for (int id : P2) held(id);
        note("L43d L32", P2);
        if (t == 2) {
            int mu = -1;
            for (int c = 0; c <= static_cast<int>(P().p); ++c)
                if (count_level_colour(2, c) >= p - 1) {
                    mu = c;
                    break;
                }
            if (mu < 0) throw InternalContradiction("L43: no colour with p-1 level-2 variables");
            auto same = draw_level_colour(2, mu, p - 1, "L43d");
            int term = contract_fill(pool_, FillMode::L21, same, {}, P2, 2);
            note("L43d L21", {term});
            return make_terminal(held(term));
        }
        long need = (P().p == 5) ? l34_count(P(), 2, 0) : l33_count(P(), 2, 0);
        int mu = -1;
        for (int c = 0; c <= static_cast<int>(P().p); ++c)
            if (count_level_colour(2, c) >= need) {
                mu = c;
                break;
            }
        if (mu < 0) throw InternalContradiction("L43: no level-2 colour fat enough for Lemma 33");
        auto e2 = pool_.exact_level_colour(2, mu);
        auto tw = l33_l34_tower(pool_, e2, 2, 0);
        int term = l39_terminal(pool_, P2, tw.outputs, tw.spares, 2, 0);
        note("L43d L39", {term});
        return make_terminal(held(term));
    }
}

inline EngineResult StrategyEngine::tau2_lemma44() {
    const long p = lp();
    const long t = P().tau;
    log_.push_back("dispatch L44");
    long I01 = count_level_colour(1, 0);
    long m1 = count_level(1);
    long m1I01 = m1 - I01;
    long d = pw(t - 1) + p - 2;
    // top up the level-1 off-colour pool with Lemma 18 contractions
    std::vector<int> nubar1;
    for (int nu = 1; nu <= static_cast<int>(P().p); ++nu)
        for (int id : pool_.exact_level_colour(1, nu)) nubar1.push_back(id);
    long shortfall = d - m1I01;
    for (long i = 0; i < shortfall; ++i) {
        std::vector<int> nn, other;
        for (int id : pool_.exact_level_colour(0, 0))
            (pool_.atom(id).nuance == 0 ? nn : other).push_back(id);
        if (static_cast<long>(nn.size()) < p - 1 || other.empty())
            throw InternalContradiction("L44: Lemma 18 inputs missing");
        nn.resize(p - 1);
        nubar1.push_back(held(contract_nuance_shift(pool_, nn, other[0], 0)));
    }
    std::sort(nubar1.begin(), nubar1.end());
    if (static_cast<long>(nubar1.size()) < d) throw InternalContradiction("L44: off-colour pool short");
    nubar1.resize(d);
    // d colour-0 level-1 variables via Lemma 17 rounds
    std::vector<int> e01s;
    for (long i = 0; i < d; ++i) {
        std::map<int, std::vector<int>> by_nu;
        for (int id : pool_.exact_level_colour(0, 0)) by_nu[pool_.atom(id).nuance].push_back(id);
        long need = (P().p == 5) ? 2 * p - 1 : 3 * p - 2;
        int best = -1;
        for (auto& [mu, v] : by_nu)
            if (static_cast<long>(v.size()) >= need && best < 0) best = mu;
        if (best < 0) throw InternalContradiction("L44: Lemma 17 window missing");
        auto win = by_nu[best];
        win.resize(need);
        e01s.push_back(held(contract_uniform(pool_, win, 0, UniformMode::Nuance)));
    }
    note("L44 L17", e01s);
    auto e00 = pool_.exact_level_colour(0, 0);
    auto tw = l33_l34_tower(pool_, e00, 0, 0);
    note("L44 L33/34", tw.outputs);
    auto c0 = draw_colourful0(pw(t + 1) - pw(t), "L44");
    auto C1 = l32_tower(pool_, c0, {{0, tw.spares.at(0)}}, 0, 1, -1);
    for (int id : C1) held(id);
    note("L44 L32", C1);
    long x = pw(t - 1) - geo(0, t - 2) - 1;
    long y = geo(0, t - 2) + 1;
    auto b27 = l27_contract(pool_, e01s, nubar1, C1, x, y, p - 2, 1, 1);
    note("L44 L27", b27.outputs);
    if (static_cast<long>(b27.outputs.size()) < pw(t - 1) - 1)
        throw InternalContradiction("L44: Lemma 27 under-produced");
    std::vector<int> C2(b27.outputs.begin(), b27.outputs.begin() + (pw(t - 1) - 1));
    // one more C^2 via Lemma 21 from spared C^1 and the level-1 spares
    std::vector<int> sparedC;
    std::set<int> used(C2.begin(), C2.end());
    for (int id : C1)
        if (!pool_.atom(id).consumed && !used.count(id)) sparedC.push_back(id);
    if (static_cast<long>(sparedC.size()) < p) throw InternalContradiction("L44: spared C^1 shortage");
    sparedC.resize(p);
    std::vector<int> ehelp(tw.spares.at(1).begin(), tw.spares.at(1).begin() + (p - 1));
    int extraC = contract_fill(pool_, FillMode::L21, ehelp, {}, sparedC, 1);
    C2.push_back(held(extraC));
    note("L44 L21", {extraC});
    std::map<long, std::vector<int>> helpers2;
    for (long l = 2; l <= t - 1; ++l) helpers2[l] = tw.spares.at(l);
    int term = l39_terminal(pool_, C2, tw.outputs, helpers2, 2, 0);
    note("L44 L39", {term});
    return make_terminal(held(term));
}

inline EngineResult StrategyEngine::tau2_lemma45() {
    const long p = lp();
    const long t = P().tau;
    log_.push_back("dispatch L45");
    auto [nu1, imax1] = max_colour_at(1);
    long bound85 = pw(t) + 4 * pw(t - 1) - ((p - 1) / 2) * geo(1, t - 2) + 3 * geo(0, t - 3) -
                   p - 5;
    long q1 = q_at(1);
    long m1 = count_level(1);
    if (imax1 >= bound85 + 1) {
        // sub-branch A
        long shortfall = pw(t) + p - 2 - q1;
        std::vector<int> nubar;  // level-1, colour != nu1
        for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
            if (nu == nu1) continue;
            for (int id : pool_.exact_level_colour(1, nu)) nubar.push_back(id);
        }
        if (shortfall > 0) {
            if (nu1 != 0) {
                auto e00 = pool_.exact_level_colour(0, 0);
                auto b26 = l26_contract(pool_, e00, 0);
                if (static_cast<long>(b26.outputs.size()) < shortfall)
                    throw InternalContradiction("L45A: Lemma 26 under-produced");
                for (long i = 0; i < shortfall; ++i) nubar.push_back(b26.outputs[i]);
            } else {
                auto e00 = pool_.exact_level_colour(0, 0);
                auto b30 = l30_contract(pool_, e00, shortfall, 0);
                for (int id : b30.outputs) nubar.push_back(id);
            }
        }
        std::sort(nubar.begin(), nubar.end());
        if (static_cast<long>(nubar.size()) < pw(t) + p - 2)
            throw InternalContradiction("L45A: off-colour pool short");
        nubar.resize(pw(t) + p - 2);
        auto helpers0 = draw_level_colour(0, 0, 2 * p - 2, "L45A");
        auto c0 = draw_colourful0(pw(t + 1) - pw(t), "L45A");
        auto C1 = l32_tower(pool_, c0, {{0, helpers0}}, 0, 1, -1);
        for (int id : C1) held(id);
        auto e_nu1 = pool_.exact_level_colour(1, nu1);
        auto tw35 = l35_tower(pool_, e_nu1, 1);
        auto remaining_nu1 = pool_.exact_level_colour(1, nu1);
        if (static_cast<long>(remaining_nu1.size()) < pw(t) + p - 2)
            throw InternalContradiction("L45A: colour-nu1 pool short after Lemma 35");
        remaining_nu1.resize(pw(t) + p - 2);
        long x = pw(t - 1) - 2 * pw(t - 2) - geo(0, t - 3) - 1;
        long y = geo(0, t - 1) + 1;
        auto b27 = l27_contract(pool_, remaining_nu1, nubar, C1, x, y, p - 2, 0, 1);
        note("L45A L27", b27.outputs);
        if (static_cast<long>(b27.outputs.size()) < 2 * pw(t - 1) - pw(t - 2))
            throw InternalContradiction("L45A: Lemma 27 under-produced");
        std::vector<int> C2(b27.outputs.begin(),
                            b27.outputs.begin() + (2 * pw(t - 1) - pw(t - 2)));
        std::map<long, std::vector<int>> helpers2;
        for (long l = 2; l <= t - 1; ++l) helpers2[l] = tw35.spares.at(l);
        int term = l39_terminal(pool_, C2, {}, helpers2, 2, p - 1);
        note("L45A L39", {term});
        return make_terminal(held(term));
    }
    if (q1 >= pw(t) + p - 2 && m1 >= 2 * pw(t) + p * p - p - 3) {
        // sub-branch B2
        auto e00 = pool_.exact_level_colour(0, 0);
        auto tw35 = l35_tower(pool_, e00, 0);
        auto c0 = draw_colourful0(pw(t + 1) - pw(t), "L45B");
        auto C1 = l32_tower(pool_, c0, {{0, tw35.spares.at(0)}}, 0, 1, -1);
        for (int id : C1) held(id);
        long x = pw(t - 1) - 2 * pw(t - 2) - geo(0, t - 3) - 1;
        long y = geo(0, t - 1) + 1;
        auto E1 = pool_.exact_level(1);
        auto b29 = l29_contract(pool_, E1, C1, x, y, p - 2, 0, 1);
        note("L45B L29", b29.outputs);
        if (static_cast<long>(b29.outputs.size()) < 2 * pw(t - 1) - pw(t - 2))
            throw InternalContradiction("L45B: Lemma 29 under-produced");
        std::vector<int> C2(b29.outputs.begin(),
                            b29.outputs.begin() + (2 * pw(t - 1) - pw(t - 2)));
        std::map<long, std::vector<int>> helpers2;
        for (long l = 2; l <= t - 1; ++l) helpers2[l] = tw35.spares.at(l);
        int term = l39_terminal(pool_, C2, {}, helpers2, 2, p - 1);
        note("L45B L39", {term});
        return make_terminal(held(term));
    }
    // sub-branch B3
    long I01 = count_level_colour(1, 0);
    long m1I01 = m1 - I01;
    long d = pw(t - 1) + 2 * p - 3;
    std::vector<int> e0b1;  // level-1, colour != 0
    for (int nu = 1; nu <= static_cast<int>(P().p); ++nu)
        for (int id : pool_.exact_level_colour(1, nu)) e0b1.push_back(id);
    long shortfall = d - m1I01;
    if (shortfall > 0) {
        auto e00 = pool_.exact_level_colour(0, 0);
        auto b30 = l30_contract(pool_, e00, shortfall, 0);
        for (int id : b30.outputs) e0b1.push_back(id);
        note("L45B3 L30", b30.outputs);
    }
    std::sort(e0b1.begin(), e0b1.end());
    if (static_cast<long>(e0b1.size()) < d) throw InternalContradiction("L45B3: off-colour pool short");
    e0b1.resize(d);
    std::vector<int> e01s;
    {
        auto e00 = pool_.exact_level_colour(0, 0);
        auto b26 = l26_contract(pool_, e00, 0);
        if (static_cast<long>(b26.outputs.size()) < d)
            throw InternalContradiction("L45B3: Lemma 26 under-produced");
        e01s.assign(b26.outputs.begin(), b26.outputs.begin() + d);
    }
    auto helpers0 = draw_level_colour(0, 0, 2 * p - 2, "L45B3");
    auto c0 = draw_colourful0(pw(t + 1) - pw(t), "L45B3");
    auto C1 = l32_tower(pool_, c0, {{0, helpers0}}, 0, 1, -1);
    for (int id : C1) held(id);
    long x = pw(t - 1) - geo(0, t - 2) - 1;
    long y = geo(0, t - 2) + 2;
    auto b27 = l27_contract(pool_, e01s, e0b1, C1, x, y, p - 3, 1, 1);
    note("L45B3 L27", b27.outputs);
    if (static_cast<long>(b27.outputs.size()) < pw(t - 1))
        throw InternalContradiction("L45B3: Lemma 27 under-produced");
    std::vector<int> C2(b27.outputs.begin(), b27.outputs.begin() + pw(t - 1));
    if (t == 2) {
        int mu = -1;
        for (int c = 0; c <= static_cast<int>(P().p); ++c)
            if (count_level_colour(2, c) >= p - 1) {
                mu = c;
                break;
            }
        if (mu < 0) throw InternalContradiction("L45B3: no colour with p-1 level-2 variables");
        auto same = draw_level_colour(2, mu, p - 1, "L45B3");
        int term = contract_fill(pool_, FillMode::L21, same, {}, C2, 2);
        note("L45B3 L21", {term});
        return make_terminal(held(term));
    }
    // tau >= 3
    long need33 = (P().p == 5) ? l34_count(P(), 2, 0) : l33_count(P(), 2, 0);
    for (int mu = 0; mu <= static_cast<int>(P().p); ++mu) {
        if (count_level_colour(2, mu) < need33) continue;
        auto e2 = pool_.exact_level_colour(2, mu);
        auto tw = l33_l34_tower(pool_, e2, 2, 0);
        int term = l39_terminal(pool_, C2, tw.outputs, tw.spares, 2, 0);
        note("L45B3 L39", {term});
        return make_terminal(held(term));
    }
    {
        std::vector<int> C2trim(C2.begin(), C2.begin() + (pw(t - 1) - 2));
        auto tower = l31_tower(pool_, C2trim, 2, 3, 0);
        std::vector<int> C3 = tower.outputs;  // p^{tau-2} - 2
        if (t == 3) {
            auto K = pool_.exact_level(3);
            auto b28 = l28_contract(pool_, K, {C3[0]}, 1, 3);
            note("L45B3 L28", b28.outputs);
            return make_terminal(held(b28.outputs[0]));
        }
        long x2 = pw(t - 3) - pw(t - 4) - 2 * geo(0, t - 5) - 1;
        long y2 = pw(t - 3) + 2 * geo(0, t - 4);
        auto E3 = pool_.exact_level(3);
        auto b29 = l29_contract(pool_, E3, C3, x2, y2, p - 4, 0, 3);
        if (static_cast<long>(b29.outputs.size()) < 2 * pw(t - 3) + pw(t - 4) - 1)
            throw InternalContradiction("L45B3: Lemma 29 under-produced");
        std::vector<int> C4(b29.outputs.begin(),
                            b29.outputs.begin() + (2 * pw(t - 3) + pw(t - 4) - 2));
        auto tower2 = l31_tower(pool_, C4, 4, t, p + 1);
        int term = contract_special(pool_, tower2.outputs, t, SpecialMode::AnyCount);
        note("L45B3 L14", {term});
        return make_terminal(held(term));
    }
}

inline EngineResult StrategyEngine::tau2_lemma46() {
    const long p = lp();
    const long t = P().tau;
    log_.push_back("dispatch L46");
    auto P1 = primaries_from_level0(pw(t) - pw(t - 1), "L46");
    auto [nu1, imax1] = max_colour_at(1);
    long bound = pw(t) + 4 * pw(t - 1) - ((p - 1) / 2) * geo(1, t - 2) + 3 * geo(0, t - 3) -
                 p - 4;
    long x = pw(t - 1) - 2 * pw(t - 2) - geo(0, t - 3) - 1;
    long y = geo(0, t - 1) + 1;
    if (imax1 >= bound) {
        auto e_nu1 = pool_.exact_level_colour(1, nu1);
        auto tw35 = l35_tower(pool_, e_nu1, 1);
        auto remaining_nu1 = pool_.exact_level_colour(1, nu1);
        if (static_cast<long>(remaining_nu1.size()) < pw(t) + p - 2)
            throw InternalContradiction("L46: colour-nu1 pool short after Lemma 35");
        remaining_nu1.resize(pw(t) + p - 2);
        std::vector<int> nubar;
        for (int nu = 0; nu <= static_cast<int>(P().p); ++nu) {
            if (nu == nu1) continue;
            for (int id : pool_.exact_level_colour(1, nu)) nubar.push_back(id);
        }
        if (static_cast<long>(nubar.size()) < pw(t) + p - 2)
            throw InternalContradiction("L46: q_1 below p^tau + p - 2");
        nubar.resize(pw(t) + p - 2);
        auto b27 = l27_contract(pool_, remaining_nu1, nubar, P1, x, y, p - 2, 0, 1);
        note("L46 L27", b27.outputs);
        if (static_cast<long>(b27.outputs.size()) < 2 * pw(t - 1) - pw(t - 2))
            throw InternalContradiction("L46: Lemma 27 under-produced");
        std::vector<int> P2(b27.outputs.begin(),
                            b27.outputs.begin() + (2 * pw(t - 1) - pw(t - 2)));
        std::map<long, std::vector<int>> helpers2;
        for (long l = 2; l <= t - 1; ++l) helpers2[l] = tw35.spares.at(l);
        int term = l39_terminal(pool_, P2, {}, helpers2, 2, p - 1);
        note("L46 L39", {term});
        return make_terminal(held(term));
    }
    auto E1 = pool_.exact_level(1);
    auto b29 = l29_contract(pool_, E1, P1, x, y, p - 2, 0, 1);
    note("L46 L29", b29.outputs);
    if (static_cast<long>(b29.outputs.size()) < 2 * pw(t - 1) - pw(t - 2))
        throw InternalContradiction("L46: Lemma 29 under-produced");
    std::vector<int> P2(b29.outputs.begin(), b29.outputs.begin() + (2 * pw(t - 1) - pw(t - 2)));
    if (t == 2) {
        int term = contract_special(pool_, P2, 2, SpecialMode::AnyCount);
        note("L46 L14", {term});
        return make_terminal(held(term));
    }
    long need = l35_count(P(), 2);
    for (int mu = 0; mu <= static_cast<int>(P().p); ++mu) {
        if (count_level_colour(2, mu) < need) continue;
        auto e2 = pool_.exact_level_colour(2, mu);
        auto tw = l35_tower(pool_, e2, 2);
        std::map<long, std::vector<int>> helpers2;
        for (long l = 2; l <= t - 1; ++l) helpers2[l] = tw.spares.at(l);
        int term = l39_terminal(pool_, P2, {}, helpers2, 2, p - 1);
        note("L46 L39", {term});
        return make_terminal(held(term));
    }
    throw InternalContradiction("L46: no level-2 colour fat enough for Lemma 35");
}

}  // namespace padform
