#pragma once

#include <algorithm>
#include <cassert>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "padform/forms.hpp"
#include "padform/zerosum.hpp"

namespace padform {

constexpr long LEVEL_INF = std::numeric_limits<long>::max() / 4;

/// One pool entry: an original variable or a derived variable (a contraction),
/// with its exact column sums, classification at its exact level, trace data
/// and the colourful/primary flags recomputed from the level-0 leaves.
struct Atom {
    int id = -1;
    bool is_original = false;
    int orig_index = -1;               // originals only
    std::vector<int> children;         // derived only: child atom ids
    std::vector<long> child_mult;      // unit multiplier per child (usually 1)
    std::vector<int> leaves;           // sorted original indices under this atom
    Int A, B;                          // exact column sums
    long level = 0;                    // LEVEL_INF when A = B = 0
    Int la, lb;                        // level coefficient vector
    int colour = 0;
    int nuance = 0;
    unsigned long corr = 1;
    bool colourful = false;
    bool primary = false;
    bool consumed = false;
    bool held = false;  // reserved as a recipe output; pool filters skip it
};

/// Owns all atoms of one solver run.  Consumption is a journal so recipes can
/// roll back partial work; draws are lowest-id first for determinism.
class Pool {
public:
    explicit Pool(const FormPair& pair) : pair_(pair) { rebuild_originals(); }

    const FormPair& pair() const { return pair_; }
    const Params& params() const { return pair_.P; }

    const Atom& atom(int id) const { return atoms_[id]; }
    int size() const { return static_cast<int>(atoms_.size()); }

    struct Checkpoint {
        std::size_t atoms;
        std::size_t journal;
        std::size_t holds;
    };
    Checkpoint save() const { return {atoms_.size(), journal_.size(), hold_journal_.size()}; }
    void rollback(const Checkpoint& cp) {
        while (journal_.size() > cp.journal) {
            atoms_[journal_.back()].consumed = false;
            journal_.pop_back();
        }
        while (hold_journal_.size() > cp.holds) {
            if (hold_journal_.back() < static_cast<int>(cp.atoms))
                atoms_[hold_journal_.back()].held = false;
            hold_journal_.pop_back();
        }
        while (atoms_.size() > cp.atoms) atoms_.pop_back();
    }

    void consume(int id) {
        if (atoms_[id].consumed) throw InternalContradiction("pool: double consumption");
        atoms_[id].consumed = true;
        journal_.push_back(id);
    }

    /// Reserve an atom as a recipe output so blind pool filters skip it; the
    /// holder uses it by explicit id.
    void hold(int id) {
        if (!atoms_[id].held) {
            atoms_[id].held = true;
            hold_journal_.push_back(id);
        }
    }
    void release(int id) { atoms_[id].held = false; }

    /// Contract the given atoms (with unit multipliers) into a new derived
    /// atom; inputs are consumed.  min_level is the level the caller's lemma
    /// guarantees; the exact level is computed from the sums.
    int contract(const std::vector<int>& ids, long min_level,
                 const std::vector<long>& mults = {}) {
        if (ids.empty()) throw std::invalid_argument("pool: empty contraction");
        Atom na;
        na.id = static_cast<int>(atoms_.size());
        na.is_original = false;
        na.children = ids;
        na.child_mult = mults.empty() ? std::vector<long>(ids.size(), 1) : mults;
        if (na.child_mult.size() != ids.size())
            throw std::invalid_argument("pool: multiplier count mismatch");
        std::set<int> leafset;
        na.A = Int(0);
        na.B = Int(0);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const Atom& c = atoms_[ids[i]];
            long y = na.child_mult[i];
            if (y % static_cast<long>(pair_.P.p) == 0)
                throw std::invalid_argument("pool: multiplier must be a unit");
            Int yk = (y == 1) ? Int(1) : Int::pow_ui(Int(y), static_cast<unsigned long>(pair_.P.k));
            na.A += yk * c.A;
            na.B += yk * c.B;
            for (int lf : c.leaves)
                if (!leafset.insert(lf).second)
                    throw InternalContradiction("pool: overlapping contraction leaves");
        }
        na.leaves.assign(leafset.begin(), leafset.end());
        classify_atom(na);
        if (na.level < min_level)
            throw InternalContradiction("pool: contraction fell short of level " +
                                        std::to_string(min_level));
        for (int id : ids) consume(id);
        atoms_.push_back(na);
        return na.id;
    }

    /// Unconsumed, unheld atoms matching a predicate, lowest id first.
    template <typename Pred>
    std::vector<int> select(Pred&& pred, int limit = -1) const {
        std::vector<int> out;
        for (const auto& a : atoms_) {
            if (a.consumed || a.held) continue;
            if (!pred(a)) continue;
            out.push_back(a.id);
            if (limit >= 0 && static_cast<int>(out.size()) == limit) break;
        }
        return out;
    }

    std::vector<int> exact_level(long l, int limit = -1) const {
        return select([l](const Atom& a) { return a.level == l; }, limit);
    }
    std::vector<int> exact_level_colour(long l, int nu, int limit = -1) const {
        return select([l, nu](const Atom& a) { return a.level == l && a.colour == nu; }, limit);
    }
    /// Flagged atoms usable as S^l (level at least l).  kind: 'C' or 'P'.
    std::vector<int> flagged_at_least(long l, char kind, int limit = -1) const {
        return select(
            [l, kind](const Atom& a) {
                bool f = (kind == 'P') ? a.primary : a.colourful;
                return f && a.level >= l;
            },
            limit);
    }

    /// Re-base every atom on a transformed pair (same variable count); sums,
    /// levels, classifications and flags are recomputed bottom-up.
    void rebase(const FormPair& transformed) {
        pair_ = transformed;
        orig_info_ = classify_all(pair_);
        for (auto& a : atoms_) {
            if (a.is_original) {
                a.A = pair_.coeffs[a.orig_index].first;
                a.B = pair_.coeffs[a.orig_index].second;
            } else {
                a.A = Int(0);
                a.B = Int(0);
                for (std::size_t i = 0; i < a.children.size(); ++i) {
                    const Atom& c = atoms_[a.children[i]];
                    long y = a.child_mult[i];
                    Int yk = (y == 1) ? Int(1)
                                      : Int::pow_ui(Int(y), static_cast<unsigned long>(pair_.P.k));
                    a.A += yk * c.A;
                    a.B += yk * c.B;
                }
            }
            classify_atom(a);
        }
    }

    const VariableInfo& original_info(int index) const { return orig_info_[index]; }

private:
    void rebuild_originals() {
        atoms_.clear();
        journal_.clear();
        hold_journal_.clear();
        orig_info_ = classify_all(pair_);
        atoms_.reserve(pair_.coeffs.size());
        for (int i = 0; i < pair_.s(); ++i) {
            Atom a;
            a.id = i;
            a.is_original = true;
            a.orig_index = i;
            a.leaves = {i};
            a.A = pair_.coeffs[i].first;
            a.B = pair_.coeffs[i].second;
            classify_atom(a);
            atoms_.push_back(std::move(a));
        }
    }

    void classify_atom(Atom& a) {
        if (a.A.is_zero() && a.B.is_zero()) {
            a.level = LEVEL_INF;
            a.la = Int(0);
            a.lb = Int(0);
            a.colour = 0;
            a.nuance = 0;
            a.corr = 1;
        } else {
            VariableInfo v = classify_column(a.A, a.B, pair_.P);
            a.level = v.level;
            a.la = v.la;
            a.lb = v.lb;
            a.colour = v.colour;
            a.nuance = v.nuance;
            a.corr = v.corr;
        }
        // flags from the level-0 leaves of the current pair
        int first_col = -1;
        a.colourful = false;
        a.primary = false;
        for (int lf : a.leaves) {
            const VariableInfo& v = orig_info_[lf];
            if (v.level != 0) continue;
            if (v.colour != 0) a.colourful = true;
            if (first_col < 0)
                first_col = v.colour;
            else if (v.colour != first_col)
                a.primary = true;
        }
    }

    FormPair pair_;
    std::vector<Atom> atoms_;
    std::vector<VariableInfo> orig_info_;
    std::vector<int> journal_;
    std::vector<int> hold_journal_;
};

// ---------------------------------------------------------------------------
// selection DPs on atoms
// ---------------------------------------------------------------------------

namespace contract_detail {

inline unsigned long lv_a(const Pool& pool, int id, unsigned long mod) {
    return pool.atom(id).la.mod_ui(mod);
}
inline unsigned long lv_b(const Pool& pool, int id, unsigned long mod) {
    return pool.atom(id).lb.mod_ui(mod);
}

/// Zero-sum subset of the atoms' level vectors mod p, optionally required to
/// span two colours and/or to contain a member of `must_hit`.
inline std::optional<std::vector<int>> level_vector_zero_subset(
    const Pool& pool, const std::vector<int>& ids, bool need_two_colours,
    const std::set<int>* must_hit = nullptr) {
    const unsigned long p = pool.params().p;
    const std::size_t ncol = p + 2;
    // colour state: 0 = none, 1+nu = only colour nu seen, ncol = diverse
    const std::size_t cstates = need_two_colours ? (ncol + 1) : 1;
    const std::size_t fstates = must_hit ? 2 : 1;
    std::vector<unsigned long> ra(ids.size()), rb(ids.size());
    std::vector<int> col(ids.size());
    std::vector<char> flg(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ra[i] = lv_a(pool, ids[i], p);
        rb[i] = lv_b(pool, ids[i], p);
        col[i] = pool.atom(ids[i]).colour;
        flg[i] = must_hit && must_hit->count(ids[i]) ? 1 : 0;
    }
    SubsetSearch S;
    S.n = static_cast<int>(ids.size());
    S.num_states = p * p * cstates * fstates;
    S.start = 0;
    S.step = [&, p, cstates, fstates](std::size_t s, int item) {
        unsigned long sa = s % p;
        unsigned long sb = (s / p) % p;
        std::size_t cs = (s / (p * p)) % cstates;
        std::size_t fs = s / (p * p * cstates);
        sa = (sa + ra[item]) % p;
        sb = (sb + rb[item]) % p;
        if (cstates > 1) {
            std::size_t mycol = 1 + static_cast<std::size_t>(col[item]);
            if (cs == 0)
                cs = mycol;
            else if (cs != mycol)
                cs = ncol;
        }
        if (fstates > 1 && flg[item]) fs = 1;
        return sa + p * sb + p * p * (cs + cstates * fs);
    };
    S.accept = [&, p, cstates, fstates, ncol](std::size_t s) {
        if (s % p != 0 || (s / p) % p != 0) return false;
        std::size_t cs = (s / (p * p)) % cstates;
        std::size_t fs = s / (p * p * cstates);
        if (cstates > 1 && cs != ncol) return false;
        if (fstates > 1 && fs != 1) return false;
        return true;
    };
    auto sub = lex_smallest_subset(S);
    if (!sub) return std::nullopt;
    std::vector<int> out;
    out.reserve(sub->size());
    for (int i : *sub) out.push_back(ids[i]);
    return out;
}

/// Subset with sum of corresponding integers = 0 mod p, forced to contain
/// `forced_pos` (position within ids); cap on cardinality optional.
inline std::optional<std::vector<int>> corr_zero_subset(const Pool& pool,
                                                        const std::vector<int>& ids,
                                                        int forced_pos, long card_cap = -1) {
    const unsigned long p = pool.params().p;
    std::vector<unsigned long> rc(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) rc[i] = pool.atom(ids[i]).corr % p;
    const std::size_t cap = (card_cap > 0) ? static_cast<std::size_t>(card_cap) + 1 : 0;
    SubsetSearch S;
    S.n = static_cast<int>(ids.size());
    S.num_states = cap ? p * (cap + 1) : p;
    S.start = 0;
    S.step = [&, p, cap](std::size_t s, int item) {
        unsigned long sum = (s % p + rc[item]) % p;
        if (!cap) return static_cast<std::size_t>(sum);
        std::size_t cnt = s / p;
        if (cnt < cap) ++cnt;
        return sum + p * cnt;
    };
    S.accept = [&, p, cap, card_cap](std::size_t s) {
        if (s % p != 0) return false;
        if (cap && (s / p == 0 || s / p > static_cast<std::size_t>(card_cap))) return false;
        return true;
    };
    S.forced = forced_pos;
    auto sub = lex_smallest_subset(S);
    if (!sub) return std::nullopt;
    std::vector<int> out;
    for (int i : *sub) out.push_back(ids[i]);
    return out;
}

}  // namespace contract_detail

// ---------------------------------------------------------------------------
// spec-level operations (Lemmas 13 - 22)
// ---------------------------------------------------------------------------

/// Def. 5 directly: contract explicit members with explicit unit multipliers
/// after checking congruence (3.1) at the requested level gap.
inline int contract_set(Pool& pool, const std::vector<int>& ids, const std::vector<long>& mults,
                        long target_level) {
    if (ids.empty()) throw std::invalid_argument("contract_set: empty member set");
    long l = pool.atom(ids[0]).level;
    for (int id : ids)
        if (pool.atom(id).level != l)
            throw std::invalid_argument("contract_set: members must share one level");
    if (target_level <= l) throw std::invalid_argument("contract_set: target must exceed level");
    const unsigned long p = pool.params().p;
    long gap = target_level - l;
    Int mod = p_power(p, gap);
    Int sa(0), sb(0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        long y = mults.empty() ? 1 : mults[i];
        Int yk = Int::powm(Int(y), Int(pool.params().k), mod);
        sa += yk * pool.atom(ids[i]).la;
        sb += yk * pool.atom(ids[i]).lb;
    }
    if (mod_floor(sa, mod) != 0 || mod_floor(sb, mod) != 0)
        throw std::invalid_argument("contract_set: congruence (3.1) fails at the stated modulus");
    return pool.contract(ids, target_level, mults);
}

/// Lemma 13: a level-l set with |K| >= 2p-1 and q(K) >= p contains a
/// contraction to level >= l+1 spanning two colours.
inline int find_two_colour_contraction(Pool& pool, const std::vector<int>& K,
                                       const std::set<int>* must_hit = nullptr) {
    if (K.empty()) throw std::invalid_argument("two_colour: empty set");
    const unsigned long p = pool.params().p;
    long l = pool.atom(K[0]).level;
    std::map<int, long> hist;
    for (int id : K) {
        if (pool.atom(id).level != l)
            throw std::invalid_argument("two_colour: members must share one level");
        hist[pool.atom(id).colour]++;
    }
    long imax = 0;
    for (auto& [c, n] : hist) imax = std::max(imax, n);
    if (static_cast<long>(K.size()) < 2 * static_cast<long>(p) - 1 ||
        static_cast<long>(K.size()) - imax < static_cast<long>(p))
        throw std::invalid_argument("two_colour: need |K| >= 2p-1 and q(K) >= p");
    auto sub = contract_detail::level_vector_zero_subset(pool, K, true, must_hit);
    if (!sub) throw InternalContradiction("two_colour: no witness despite Lemma 13 hypotheses");
    return pool.contract(*sub, l + 1);
}

/// Lemmas 14/15: 2p-1 (or, consuming at most p of 3p-2) flagged variables at
/// level >= l contract to a flagged variable at level >= l+1.
enum class SpecialMode { AnyCount, BoundedP };

inline int contract_special(Pool& pool, const std::vector<int>& S_ids, long l, SpecialMode mode) {
    const unsigned long p = pool.params().p;
    long need = (mode == SpecialMode::AnyCount) ? 2 * static_cast<long>(p) - 1
                                                : 3 * static_cast<long>(p) - 2;
    if (static_cast<long>(S_ids.size()) < need)
        throw std::invalid_argument("contract_special: not enough S variables");
    for (int id : S_ids)
        if (pool.atom(id).level > l) return id;  // already one level up
    std::vector<int> window(S_ids.begin(), S_ids.begin() + need);
    std::optional<std::vector<int>> sub;
    if (mode == SpecialMode::AnyCount) {
        sub = contract_detail::level_vector_zero_subset(pool, window, false);
    } else {
        std::vector<Int> a, b;
        for (int id : window) {
            a.push_back(pool.atom(id).la);
            b.push_back(pool.atom(id).lb);
        }
        auto w = bounded_pair_subset(a, b, p);
        if (w) {
            sub = std::vector<int>{};
            for (int i : w->indices) sub->push_back(window[i]);
        }
    }
    if (!sub) throw InternalContradiction("contract_special: no witness at the stated threshold");
    return pool.contract(*sub, l + 1);
}

/// Lemmas 16/17: same-colour (mode Colour) or same-nuance (mode Nuance)
/// variables contract, at most p of them, to an exact level-(l+1) variable;
/// in mode Nuance the result keeps the colour.
enum class UniformMode { Colour, Nuance };

inline int contract_uniform(Pool& pool, const std::vector<int>& ids, long l, UniformMode mode) {
    const unsigned long p = pool.params().p;
    long need = (p == 5) ? 2 * static_cast<long>(p) - 1 : 3 * static_cast<long>(p) - 2;
    if (static_cast<long>(ids.size()) < need)
        throw std::invalid_argument("contract_uniform: not enough variables");
    int nu = pool.atom(ids[0]).colour;
    for (int id : ids) {
        if (pool.atom(id).level != l || pool.atom(id).colour != nu)
            throw std::invalid_argument("contract_uniform: members must share level and colour");
        if (mode == UniformMode::Nuance && pool.atom(id).nuance != pool.atom(ids[0]).nuance)
            throw std::invalid_argument("contract_uniform: members must share the nuance");
    }
    std::vector<int> window(ids.begin(), ids.begin() + need);
    if (mode == UniformMode::Nuance) {
        std::vector<Int> d;
        for (int id : window) d.push_back(Int(static_cast<long>(pool.atom(id).corr)));
        auto w = subset_zero_p_not_p2(d, p);
        if (!w) throw InternalContradiction("contract_uniform: Lemma 11/12 witness missing");
        std::vector<int> sub;
        for (int i : w->indices) sub.push_back(window[i]);
        int id = pool.contract(sub, l + 1);
        if (pool.atom(id).level != l + 1 || pool.atom(id).colour != nu)
            throw InternalContradiction("contract_uniform: nuance-mode output type broken");
        return id;
    }
    // mode Colour: subset with sum(c) = 0 mod p and not (sum(c) = 0 mod p^2
    // and sum(c mu) = 0 mod p); at most p members.
    const unsigned long p2 = p * p;
    std::vector<unsigned long> rc(window.size()), rcm(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        rc[i] = pool.atom(window[i]).corr % p2;
        rcm[i] = (pool.atom(window[i]).corr % p) * static_cast<unsigned long>(pool.atom(window[i]).nuance) % p;
    }
    const std::size_t cap = p + 1;
    SubsetSearch S;
    S.n = static_cast<int>(window.size());
    S.num_states = p2 * p * (cap + 1);
    S.start = 0;
    S.step = [&, p, p2, cap](std::size_t s, int item) {
        unsigned long sc = (s % p2 + rc[item]) % p2;
        unsigned long sm = ((s / p2) % p + rcm[item]) % p;
        std::size_t cnt = s / (p2 * p);
        if (cnt < cap) ++cnt;
        return sc + p2 * sm + p2 * p * cnt;
    };
    S.accept = [&, p, p2, cap](std::size_t s) {
        unsigned long sc = s % p2, sm = (s / p2) % p;
        std::size_t cnt = s / (p2 * p);
        if (cnt < 1 || cnt > p) return false;
        if (sc % p != 0) return false;
        return !(sc == 0 && sm == 0);
    };
    auto sub = lex_smallest_subset(S);
    if (!sub) throw InternalContradiction("contract_uniform: Lemma 16 witness missing");
    std::vector<int> chosen;
    for (int i : *sub) chosen.push_back(window[i]);
    int id = pool.contract(chosen, l + 1);
    if (pool.atom(id).level != l + 1)
        throw InternalContradiction("contract_uniform: colour-mode output level broken");
    return id;
}

/// Lemma 18: p-1 variables of nuance (nu, mu1) plus one of nuance (nu, mu2),
/// mu1 != mu2, contract to an exact level-(l+1) variable of colour != nu.
inline int contract_nuance_shift(Pool& pool, const std::vector<int>& group, int odd_one, long l) {
    const unsigned long p = pool.params().p;
    if (group.size() != p - 1) throw std::invalid_argument("nuance_shift: need p-1 same-nuance variables");
    int nu = pool.atom(odd_one).colour;
    int mu1 = pool.atom(group[0]).nuance, mu2 = pool.atom(odd_one).nuance;
    if (mu1 == mu2) throw std::invalid_argument("nuance_shift: nuances must differ");
    for (int id : group)
        if (pool.atom(id).level != l || pool.atom(id).colour != nu || pool.atom(id).nuance != mu1)
            throw std::invalid_argument("nuance_shift: group must share level, colour and nuance");
    if (pool.atom(odd_one).level != l) throw std::invalid_argument("nuance_shift: odd variable level");
    std::vector<int> items = group;
    items.push_back(odd_one);
    auto sub = contract_detail::corr_zero_subset(pool, items, static_cast<int>(items.size()) - 1);
    if (!sub) throw InternalContradiction("nuance_shift: Lemma 8 witness missing");
    int id = pool.contract(*sub, l + 1);
    if (pool.atom(id).level != l + 1 || pool.atom(id).colour == nu)
        throw InternalContradiction("nuance_shift: output type broken");
    return id;
}

/// Lemmas 19, 21, 22 - filling a flagged variable up to a contraction.
enum class FillMode { L19, L21, L22 };

inline int contract_fill(Pool& pool, FillMode mode, const std::vector<int>& same_colour_E,
                         const std::vector<int>& other_E, const std::vector<int>& S_ids, long l) {
    const unsigned long p = pool.params().p;
    for (int id : S_ids)
        if (pool.atom(id).level > l) return id;
    auto is_colour = [&](int id, int nu) {
        return pool.atom(id).level == l && pool.atom(id).colour == nu;
    };
    switch (mode) {
        case FillMode::L19: {
            // p-m-1 colour-nu variables plus m+1 flagged colour-nu variables
            if (same_colour_E.empty() && S_ids.empty())
                throw std::invalid_argument("L19: empty input");
            int nu = pool.atom(same_colour_E.empty() ? S_ids[0] : same_colour_E[0]).colour;
            std::vector<int> items;
            for (int id : same_colour_E) items.push_back(id);
            for (int id : S_ids) items.push_back(id);
            if (items.size() != p) throw std::invalid_argument("L19: need p variables in total");
            for (int id : items)
                if (!is_colour(id, nu)) throw std::invalid_argument("L19: members must share colour");
            int forced_pos = static_cast<int>(same_colour_E.size());  // first S
            auto sub = contract_detail::corr_zero_subset(pool, items, forced_pos);
            if (!sub) throw InternalContradiction("L19: Lemma 8 witness missing");
            return pool.contract(*sub, l + 1);
        }
        case FillMode::L21: {
            // p+m flagged + p-m-1 colour-nu variables; 2p-1 in total
            std::vector<int> all = S_ids;
            all.insert(all.end(), same_colour_E.begin(), same_colour_E.end());
            if (all.size() != 2 * p - 1) throw std::invalid_argument("L21: need 2p-1 variables");
            std::map<int, std::vector<int>> by_colour;
            for (int id : all) by_colour[pool.atom(id).colour].push_back(id);
            for (auto& [mu, members] : by_colour) {
                if (members.size() < p) continue;
                // at least one flagged member in this class; Lemma 19 on p of them
                std::vector<int> flagged, plain;
                for (int id : members)
                    (std::find(S_ids.begin(), S_ids.end(), id) != S_ids.end() ? flagged : plain)
                        .push_back(id);
                if (flagged.empty()) throw InternalContradiction("L21: fat class without S variable");
                std::vector<int> pick = {flagged[0]};
                for (int id : plain) {
                    if (pick.size() == p) break;
                    pick.push_back(id);
                }
                for (std::size_t i = 1; i < flagged.size() && pick.size() < p; ++i)
                    pick.push_back(flagged[i]);
                std::sort(pick.begin(), pick.end());
                auto sub = contract_detail::corr_zero_subset(pool, pick, static_cast<int>(
                    std::find(pick.begin(), pick.end(), flagged[0]) - pick.begin()));
                if (!sub) throw InternalContradiction("L21: Lemma 8 witness missing");
                return pool.contract(*sub, l + 1);
            }
            std::set<int> must(S_ids.begin(), S_ids.end());
            return find_two_colour_contraction(pool, all, &must);
        }
        case FillMode::L22: {
            // p-1 colour-nu + p-m-1 other colours + m+1 flagged
            if (same_colour_E.size() != p - 1) throw std::invalid_argument("L22: need p-1 colour-nu");
            int nu = pool.atom(same_colour_E[0]).colour;
            if (other_E.size() + S_ids.size() != p)
                throw std::invalid_argument("L22: need p variables of other colours (incl. S)");
            for (int id : same_colour_E)
                if (!is_colour(id, nu)) throw std::invalid_argument("L22: colour-nu set broken");
            for (int id : S_ids)
                if (is_colour(id, nu))
                    return contract_fill(pool, FillMode::L19, same_colour_E, {}, {id}, l);
            for (int id : other_E)
                if (is_colour(id, nu)) throw std::invalid_argument("L22: other-colour set broken");
            // two-stage Lemma 8 solve of system (6.2)
            long phi_x = 0, phi_y = 0, psi_x = 0, psi_y = 0;
            if (nu == 0) {
                phi_x = 0; phi_y = 1; psi_x = 1; psi_y = 0;
            } else if (nu == static_cast<int>(p)) {
                phi_x = 1; phi_y = 0; psi_x = 0; psi_y = 1;
            } else {
                phi_x = 1; phi_y = -nu; psi_x = 0; psi_y = 1;
            }
            auto phi = [&](int id) {
                return mod_floor(pool.atom(id).la * phi_x + pool.atom(id).lb * phi_y,
                                 Int(static_cast<long>(p)))
                    .mod_ui(p);
            };
            auto psi = [&](int id) {
                return mod_floor(pool.atom(id).la * psi_x + pool.atom(id).lb * psi_y,
                                 Int(static_cast<long>(p)))
                    .mod_ui(p);
            };
            std::vector<int> nonnu = other_E;
            nonnu.insert(nonnu.end(), S_ids.begin(), S_ids.end());
            std::sort(nonnu.begin(), nonnu.end());
            int s0 = S_ids[0];
            int s0_pos = static_cast<int>(std::find(nonnu.begin(), nonnu.end(), s0) - nonnu.begin());
            // stage 1: subset of the non-nu atoms, containing s0, phi-sum 0
            std::vector<unsigned long> gam(nonnu.size());
            for (std::size_t i = 0; i < nonnu.size(); ++i) {
                gam[i] = phi(nonnu[i]);
                if (gam[i] == 0) throw InternalContradiction("L22: phi vanished on a non-nu atom");
            }
            SubsetSearch S1;
            S1.n = static_cast<int>(nonnu.size());
            S1.num_states = p;
            S1.start = 0;
            S1.step = [&, p](std::size_t s, int item) { return (s + gam[item]) % p; };
            S1.accept = [](std::size_t s) { return s == 0; };
            S1.forced = s0_pos;
            auto j1 = lex_smallest_subset(S1);
            if (!j1) throw InternalContradiction("L22: stage-1 Lemma 8 witness missing");
            unsigned long C = 0;
            std::vector<int> J;
            for (int i : *j1) {
                C = (C + psi(nonnu[i])) % p;
                J.push_back(nonnu[i]);
            }
            // stage 2: subset of the colour-nu atoms with psi-sum = -C (may be empty)
            std::vector<unsigned long> alp(same_colour_E.size());
            for (std::size_t i = 0; i < same_colour_E.size(); ++i) alp[i] = psi(same_colour_E[i]);
            SubsetSearch S2;
            S2.n = static_cast<int>(same_colour_E.size());
            S2.num_states = p;
            S2.start = 0;
            S2.step = [&, p](std::size_t s, int item) { return (s + alp[item]) % p; };
            S2.accept = [&, p](std::size_t s) { return (s + C) % p == 0; };
            S2.allow_empty = true;
            auto j2 = lex_smallest_subset(S2);
            if (!j2) throw InternalContradiction("L22: stage-2 Lemma 8 witness missing");
            for (int i : *j2) J.push_back(same_colour_E[i]);
            std::sort(J.begin(), J.end());
            return pool.contract(J, l + 1);
        }
    }
    throw std::logic_error("contract_fill: unreachable");
}

/// Lemma 20: >= 4p-3 colour-nu variables whose corresponding integers all lie
/// in one half-range mod p contract, at most 2p-2 of them, to an exact
/// level-(l+1) variable of colour nu.
inline int contract_halfrange(Pool& pool, const std::vector<int>& H, long l) {
    const unsigned long p = pool.params().p;
    if (H.size() < 4 * p - 3) throw std::invalid_argument("halfrange: need at least 4p-3 variables");
    int nu = pool.atom(H[0]).colour;
    bool low = true, high = true;
    for (int id : H) {
        if (pool.atom(id).level != l || pool.atom(id).colour != nu)
            throw std::invalid_argument("halfrange: members must share level and colour");
        unsigned long d = pool.atom(id).corr % p;
        if (d == 0) throw InternalContradiction("halfrange: corresponding integer not a unit");
        if (d > (p - 1) / 2) low = false;
        if (d <= (p - 1) / 2) high = false;
    }
    if (!low && !high) throw std::invalid_argument("halfrange: mixed half-ranges");
    std::vector<int> W(H.begin(), H.begin() + (4 * p - 3));
    auto dval = [&](int id) {
        unsigned long d = pool.atom(id).corr % p;
        return low ? d : p - d;
    };
    auto fval = [&](int id) {
        unsigned long f = (pool.atom(id).corr - pool.atom(id).corr % p) / p % p;
        return low ? f : (p - 1 - f) % p;
    };
    auto muval = [&](int id) { return static_cast<unsigned long>(pool.atom(id).nuance); };
    // phase 1: Olson with n = 4 on (d, d mu, f, 1)
    std::vector<std::vector<Int>> vecs;
    for (int id : W)
        vecs.push_back({Int(static_cast<long>(dval(id))),
                        Int(static_cast<long>(dval(id) * muval(id) % p)),
                        Int(static_cast<long>(fval(id))), Int(1)});
    auto w4 = olson_subset(vecs, p);
    if (!w4) throw InternalContradiction("halfrange: Olson n=4 witness missing");
    std::vector<int> J;
    for (int i : w4->indices) J.push_back(W[i]);
    if (J.size() % p != 0 || J.size() > 3 * p)
        throw InternalContradiction("halfrange: phase-1 size bound broken");
    std::vector<int> K;
    if (J.size() == 3 * p) {
        std::vector<int> Jt(J.begin(), J.begin() + (3 * p - 2));
        std::vector<std::vector<Int>> v3;
        for (int id : Jt)
            v3.push_back({Int(static_cast<long>(dval(id))),
                          Int(static_cast<long>(dval(id) * muval(id) % p)),
                          Int(static_cast<long>(fval(id)))});
        auto w3 = olson_subset(v3, p);
        if (!w3) throw InternalContradiction("halfrange: Olson n=3 witness missing");
        std::set<int> inJhat;
        for (int i : w3->indices) inJhat.insert(Jt[i]);
        std::vector<int> rest;
        for (int id : J)
            if (!inJhat.count(id)) rest.push_back(id);
        std::vector<int> jhat(inJhat.begin(), inJhat.end());
        K = (jhat.size() <= rest.size()) ? jhat : rest;
    } else {
        K = J;
    }
    // refinement: |K| = 2p splits once into pieces of size <= 2p-2
    auto vsum_nonzero_mod_p2 = [&](const std::vector<int>& set) {
        Int sa(0), sb(0);
        for (int id : set) {
            sa += pool.atom(id).la;
            sb += pool.atom(id).lb;
        }
        Int m = p_power(p, 2);
        return !(mod_floor(sa, m) == 0 && mod_floor(sb, m) == 0);
    };
    if (K.size() >= 2 * p - 1) {
        std::vector<int> win(K.begin(), K.begin() + (2 * p - 1));
        std::vector<std::vector<Int>> v2;
        for (int id : win)
            v2.push_back({Int(static_cast<long>(dval(id))),
                          Int(static_cast<long>(dval(id) * muval(id) % p))});
        auto w2 = olson_subset(v2, p);
        if (!w2) throw InternalContradiction("halfrange: Olson n=2 witness missing");
        std::set<int> inKt;
        for (int i : w2->indices) inKt.insert(win[i]);
        std::vector<int> kt(inKt.begin(), inKt.end()), rest;
        for (int id : K)
            if (!inKt.count(id)) rest.push_back(id);
        if (kt.empty() || rest.empty())
            throw InternalContradiction("halfrange: degenerate refinement split");
        if (vsum_nonzero_mod_p2(kt) && (kt.size() <= rest.size() || !vsum_nonzero_mod_p2(rest)))
            K = kt;
        else if (vsum_nonzero_mod_p2(rest))
            K = rest;
        else
            throw InternalContradiction("halfrange: both refinement pieces vanish mod p^2");
    }
    if (K.size() > 2 * p - 2) throw InternalContradiction("halfrange: |K| bound broken");
    if (!vsum_nonzero_mod_p2(K)) throw InternalContradiction("halfrange: output not exact level l+1");
    int id = pool.contract(K, l + 1);
    if (pool.atom(id).level != l + 1 || pool.atom(id).colour != nu)
        throw InternalContradiction("halfrange: output type broken");
    return id;
}

// ---------------------------------------------------------------------------
// batch contractions (Lemmas 23 - 30)
// ---------------------------------------------------------------------------

namespace contract_detail {

/// Zero-sum subset (mod p) of the corresponding integers of same-colour
/// level-l atoms; guaranteed for >= p items (Davenport constant of Z/pZ).
inline std::vector<int> corr_davenport(Pool& pool, const std::vector<int>& ids) {
    const unsigned long p = pool.params().p;
    std::vector<Int> vals;
    for (int id : ids) vals.push_back(Int(static_cast<long>(pool.atom(id).corr % p)));
    auto sub = davenport_subset(vals, p, 1);
    if (!sub) throw InternalContradiction("corr_davenport: no zero-sum among p unit values");
    std::vector<int> out;
    for (int i : *sub) out.push_back(ids[i]);
    return out;
}

inline std::map<int, std::vector<int>> by_colour(const Pool& pool, const std::vector<int>& ids) {
    std::map<int, std::vector<int>> out;
    for (int id : ids) out[pool.atom(id).colour].push_back(id);
    return out;
}

/// After a recipe step returned `nid` from `inputs`, drop what it used from
/// `from`: the atom itself when it was promoted, its children otherwise.
inline void erase_used(const Pool& pool, int nid, const std::vector<int>& inputs,
                       std::set<int>& from) {
    if (std::find(inputs.begin(), inputs.end(), nid) != inputs.end()) {
        from.erase(nid);
    } else {
        for (int c : pool.atom(nid).children) from.erase(c);
    }
}

}  // namespace contract_detail

/// Lemma 23 workhorse: extract `target` pairwise disjoint contractions to
/// primary variables from a set of same-level variables.  Each round builds a
/// window with per-colour multiplicity <= p-1 (the maximal class first, so
/// the lexicographic witness prefers the cheap resource) and runs the
/// two-coloured subset DP on it; when only two fat classes remain the window
/// cannot reach 2p-1 and two Davenport subsets pair them up instead.
inline std::vector<int> extract_primaries(Pool& pool, const std::vector<int>& H, long target,
                                          long base_level = 0) {
    const unsigned long p = pool.params().p;
    for (int id : H)
        if (pool.atom(id).level != base_level)
            throw std::invalid_argument("extract_primaries: members must share the base level");
    auto cls = contract_detail::by_colour(pool, H);
    std::vector<int> out;
    std::set<int> used;
    auto remaining_of = [&](int colour) {
        std::vector<int> r;
        if (cls.count(colour))
            for (int id : cls[colour])
                if (!used.count(id)) r.push_back(id);
        return r;
    };
    while (static_cast<long>(out.size()) < target) {
        std::vector<std::pair<long, int>> sizes;  // (-count, colour)
        for (auto& [c, v] : cls) {
            long n = 0;
            for (int id : v)
                if (!used.count(id)) ++n;
            if (n > 0) sizes.push_back({-n, c});
        }
        std::sort(sizes.begin(), sizes.end());
        if (sizes.size() < 2)
            throw InternalContradiction("extract_primaries: pool went monochrome");
        long capped_total = 0;
        for (auto& [negn, c] : sizes) capped_total += std::min(-negn, static_cast<long>(p) - 1);
        int new_atom = -1;
        if (capped_total >= 2 * static_cast<long>(p) - 1) {
            std::vector<int> W;
            long need = 2 * static_cast<long>(p) - 1;
            for (auto& [negn, c] : sizes) {
                long cap = std::min(-negn, static_cast<long>(p) - 1);
                for (int id : remaining_of(c)) {
                    if (cap == 0 || static_cast<long>(W.size()) == need) break;
                    W.push_back(id);
                    --cap;
                }
                if (static_cast<long>(W.size()) == need) break;
            }
            new_atom = find_two_colour_contraction(pool, W);
        } else {
            long n2 = -sizes[1].first;
            if (n2 < static_cast<long>(p))
                throw InternalContradiction("extract_primaries: budget ran dry");
            auto A = remaining_of(sizes[0].second), B = remaining_of(sizes[1].second);
            A.resize(p);
            B.resize(p);
            auto JA = contract_detail::corr_davenport(pool, A);
            auto JB = contract_detail::corr_davenport(pool, B);
            std::vector<int> J = JA;
            J.insert(J.end(), JB.begin(), JB.end());
            std::sort(J.begin(), J.end());
            new_atom = pool.contract(J, base_level + 1);
        }
        if (base_level == 0 && !pool.atom(new_atom).primary)
            throw InternalContradiction("extract_primaries: output not primary");
        for (int lf : pool.atom(new_atom).children) used.insert(lf);
        pool.hold(new_atom);
        out.push_back(new_atom);
    }
    return out;
}

/// Lemma 23: a set H of level-0 variables contains at least
/// min(floor(|H| / (2p-1)), floor(q(H) / p)) pairwise disjoint contractions to
/// primary variables at level >= 1.
inline std::vector<int> batch_level0_primaries(Pool& pool, const std::vector<int>& H) {
    const unsigned long p = pool.params().p;
    auto cls = contract_detail::by_colour(pool, H);
    long total = static_cast<long>(H.size());
    long imax = 0;
    for (auto& [c, v] : cls) imax = std::max<long>(imax, v.size());
    long target = std::min(total / (2 * static_cast<long>(p) - 1),
                           (total - imax) / static_cast<long>(p));
    return extract_primaries(pool, H, target, 0);
}

/// Output bundle of a batch recipe.
struct BatchResult {
    std::vector<int> outputs;
    long untouched = 0;  // inputs neither consumed nor promoted
};

/// Lemma 24: x flagged variables at level >= l contract to
/// ceil((x+3)/p) - 3 flagged variables at level >= l+1, at most p inputs per
/// contraction, leaving at least min(2p-2, x) inputs unused.
inline BatchResult l24_contract(Pool& pool, const std::vector<int>& S_ids, long l) {
    const unsigned long p = pool.params().p;
    long x = static_cast<long>(S_ids.size());
    long n = (x + 3 + static_cast<long>(p) - 1) / static_cast<long>(p) - 3;  // ceil((x+3)/p) - 3
    BatchResult res;
    if (n <= 0) {
        res.untouched = x;
        return res;
    }
    std::set<int> available(S_ids.begin(), S_ids.end());
    while (static_cast<long>(res.outputs.size()) < n) {
        // promote an input already one level up, lowest id first
        int promoted = -1;
        for (int id : available)
            if (pool.atom(id).level > l) {
                promoted = id;
                break;
            }
        if (promoted >= 0) {
            available.erase(promoted);
            pool.hold(promoted);
            res.outputs.push_back(promoted);
            continue;
        }
        std::vector<int> window;
        for (int id : available) {
            window.push_back(id);
            if (window.size() == 3 * p - 2) break;
        }
        if (window.size() < 3 * p - 2)
            throw InternalContradiction("L24: ran out of inputs before the guaranteed count");
        int nid = contract_special(pool, window, l, SpecialMode::BoundedP);
        for (int c : pool.atom(nid).children) available.erase(c);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    res.untouched = static_cast<long>(available.size());
    if (res.untouched < std::min<long>(2 * static_cast<long>(p) - 2, x))
        throw InternalContradiction("L24: unused-count guarantee broken");
    return res;
}

/// Lemma 25: x colour-nu variables at level l contract to
/// ceil(x / (2p-2)) - 4 exact level-(l+1) colour-nu variables, leaving at
/// least min(6p-9, x) unused.
inline BatchResult l25_contract(Pool& pool, const std::vector<int>& E_ids, long l) {
    const unsigned long p = pool.params().p;
    long x = static_cast<long>(E_ids.size());
    long n = (x + 2 * static_cast<long>(p) - 3) / (2 * static_cast<long>(p) - 2) - 4;
    BatchResult res;
    if (n <= 0) {
        res.untouched = x;
        return res;
    }
    std::set<int> available(E_ids.begin(), E_ids.end());
    while (static_cast<long>(res.outputs.size()) < n) {
        std::vector<int> lowh, highh;
        for (int id : available) {
            unsigned long d = pool.atom(id).corr % p;
            (d <= (p - 1) / 2 ? lowh : highh).push_back(id);
        }
        std::vector<int>& half = (lowh.size() >= 4 * p - 3) ? lowh : highh;
        if (half.size() < 4 * p - 3)
            throw InternalContradiction("L25: no half-range window despite the count bound");
        half.resize(4 * p - 3);
        int nid = contract_halfrange(pool, half, l);
        for (int c : pool.atom(nid).children) available.erase(c);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    res.untouched = static_cast<long>(available.size());
    if (res.untouched < std::min<long>(6 * static_cast<long>(p) - 9, x))
        throw InternalContradiction("L25: unused-count guarantee broken");
    return res;
}

/// Lemma 26: x colour-nu variables at level l (x >= 3p^2-3p+1, for p = 5
/// already x >= 2p^2-2p+1) contract to ceil(x/p) - 2p + (p-3)/2 (p >= 7) or
/// ceil(x/p) - 2p + 3 (p = 5) exact level-(l+1) colour-nu variables, leaving
/// at least 6p-9 unused.
inline BatchResult l26_contract(Pool& pool, const std::vector<int>& E_ids, long l) {
    const unsigned long p = pool.params().p;
    const long lp = static_cast<long>(p);
    long x = static_cast<long>(E_ids.size());
    long phase1_floor = (p == 5) ? (2 * lp - 2) * lp + 1 : (3 * lp - 3) * lp + 1;
    long nuance_need = (p == 5) ? 2 * lp - 1 : 3 * lp - 2;
    if (x < phase1_floor)
        throw std::invalid_argument("L26: below the x >= " + std::to_string(phase1_floor) + " bound");
    long n1 = (x + lp - 1) / lp - ((p == 5) ? (2 * lp - 2) : (3 * lp - 3));
    long n2 = (p == 5) ? 1 : lp + (lp - 1) / 2 - 4;
    BatchResult res;
    std::set<int> available(E_ids.begin(), E_ids.end());
    for (long i = 0; i < n1; ++i) {
        // some nuance class still holds a full Lemma 17 window
        std::map<int, std::vector<int>> by_nu;
        for (int id : available) by_nu[pool.atom(id).nuance].push_back(id);
        int best = -1;
        for (auto& [mu, v] : by_nu)
            if (static_cast<long>(v.size()) >= nuance_need && best < 0) best = mu;
        if (best < 0) throw InternalContradiction("L26: phase-1 nuance window missing");
        auto win = by_nu[best];
        win.resize(nuance_need);
        int nid = contract_uniform(pool, win, l, UniformMode::Nuance);
        for (int c : pool.atom(nid).children) available.erase(c);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    // phase 2: Lemma 25 machinery on the leftovers
    for (long i = 0; i < n2; ++i) {
        std::vector<int> lowh, highh;
        for (int id : available) {
            unsigned long d = pool.atom(id).corr % p;
            (d <= (p - 1) / 2 ? lowh : highh).push_back(id);
        }
        std::vector<int>& half = (lowh.size() >= 4 * p - 3) ? lowh : highh;
        if (half.size() < 4 * p - 3) throw InternalContradiction("L26: phase-2 window missing");
        half.resize(4 * p - 3);
        int nid = contract_halfrange(pool, half, l);
        for (int c : pool.atom(nid).children) available.erase(c);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    res.untouched = static_cast<long>(available.size());
    if (res.untouched < 6 * lp - 9) throw InternalContradiction("L26: unused-count guarantee broken");
    return res;
}

/// Lemma 27: (p-1)y colour-nu + (p-1)y other-colour variables at level l and
/// px+y+z flagged variables contract to x+y-m flagged level-(l+1) variables,
/// sparing z+mp flagged inputs.
inline BatchResult l27_contract(Pool& pool, const std::vector<int>& nuE,
                                const std::vector<int>& otherE, const std::vector<int>& S_ids,
                                long x, long y, long z, long m, long l) {
    const unsigned long p = pool.params().p;
    const long lp = static_cast<long>(p);
    if (m < 0 || m > 2 || y + z < (2 - m) * lp - 2 || x < m)
        throw std::invalid_argument("L27: parameter constraints violated");
    if (static_cast<long>(nuE.size()) < (lp - 1) * y ||
        static_cast<long>(otherE.size()) < (lp - 1) * y ||
        static_cast<long>(S_ids.size()) < lp * x + y + z)
        throw std::invalid_argument("L27: input cardinalities below the hypothesis");
    BatchResult res;
    std::set<int> s_avail(S_ids.begin(), S_ids.end());
    auto take_s = [&](long want) {
        std::vector<int> got;
        for (int id : s_avail) {
            got.push_back(id);
            if (static_cast<long>(got.size()) == want) break;
        }
        return got;
    };
    for (long i = 0; i < x - m; ++i) {
        auto window = take_s(3 * lp - 2);
        if (static_cast<long>(window.size()) < 3 * lp - 2)
            throw InternalContradiction("L27: S window ran dry");
        int nid = contract_special(pool, window, l, SpecialMode::BoundedP);
        contract_detail::erase_used(pool, nid, window, s_avail);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    std::size_t nu_at = 0, ot_at = 0;
    for (long i = 0; i < y; ++i) {
        std::vector<int> nus(nuE.begin() + nu_at, nuE.begin() + nu_at + (p - 1));
        std::vector<int> ots(otherE.begin() + ot_at, otherE.begin() + ot_at + (p - 1));
        nu_at += p - 1;
        ot_at += p - 1;
        auto s1 = take_s(1);
        if (s1.empty()) throw InternalContradiction("L27: no S variable left for Lemma 22");
        int nid = contract_fill(pool, FillMode::L22, nus, ots, s1, l);
        contract_detail::erase_used(pool, nid, s1, s_avail);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    res.untouched = static_cast<long>(s_avail.size());
    if (res.untouched < z + m * lp) throw InternalContradiction("L27: spared-S guarantee broken");
    return res;
}

/// Lemma 28: an E-pool K with |K| >= (2p-2)x + p^2-3p+1 and q(K) >= (p-1)x
/// upgrades x flagged variables one level.
inline BatchResult l28_contract(Pool& pool, const std::vector<int>& K,
                                const std::vector<int>& S_ids, long x, long l) {
    const unsigned long p = pool.params().p;
    const long lp = static_cast<long>(p);
    if (static_cast<long>(S_ids.size()) < x) throw std::invalid_argument("L28: not enough S variables");
    {
        auto cls = contract_detail::by_colour(pool, K);
        long imax = 0;
        for (auto& [c, v] : cls) imax = std::max<long>(imax, v.size());
        if (static_cast<long>(K.size()) < (2 * lp - 2) * x + lp * lp - 3 * lp + 1 ||
            static_cast<long>(K.size()) - imax < (lp - 1) * x)
            throw std::invalid_argument("L28: E-pool hypotheses violated");
    }
    BatchResult res;
    std::set<int> avail(K.begin(), K.end());
    for (long i = 0; i < x; ++i) {
        auto cls = contract_detail::by_colour(pool, std::vector<int>(avail.begin(), avail.end()));
        int nu = -1;
        long best = -1;
        for (auto& [c, v] : cls)
            if (static_cast<long>(v.size()) > best) {
                best = static_cast<long>(v.size());
                nu = c;
            }
        if (best < lp - 1) throw InternalContradiction("L28: max colour class shrank below p-1");
        std::vector<int> nus(cls[nu].begin(), cls[nu].begin() + (p - 1));
        std::vector<int> ots;
        for (auto& [c, v] : cls) {
            if (c == nu) continue;
            for (int id : v) {
                if (static_cast<long>(ots.size()) == lp - 1) break;
                ots.push_back(id);
            }
            if (static_cast<long>(ots.size()) == lp - 1) break;
        }
        if (static_cast<long>(ots.size()) < lp - 1)
            throw InternalContradiction("L28: q budget ran dry");
        int nid = contract_fill(pool, FillMode::L22, nus, ots, {S_ids[static_cast<std::size_t>(i)]}, l);
        for (int c : pool.atom(nid).children) avail.erase(c);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    res.untouched = static_cast<long>(avail.size());
    return res;
}

/// Lemma 29: like Lemma 27 but with a single mixed E-pool governed by a
/// q-condition; (x-m) Lemma-15 rounds plus Lemma 28 with x := y.
inline BatchResult l29_contract(Pool& pool, const std::vector<int>& E_pool,
                                const std::vector<int>& S_ids, long x, long y, long z, long m,
                                long l) {
    const unsigned long p = pool.params().p;
    const long lp = static_cast<long>(p);
    if (m < 0 || m > 2 || y + z < (2 - m) * lp - 2 || x < m)
        throw std::invalid_argument("L29: parameter constraints violated");
    if (static_cast<long>(S_ids.size()) < lp * x + y + z)
        throw std::invalid_argument("L29: not enough S variables");
    BatchResult res;
    std::set<int> s_avail(S_ids.begin(), S_ids.end());
    for (long i = 0; i < x - m; ++i) {
        std::vector<int> window;
        for (int id : s_avail) {
            window.push_back(id);
            if (static_cast<long>(window.size()) == 3 * lp - 2) break;
        }
        if (static_cast<long>(window.size()) < 3 * lp - 2)
            throw InternalContradiction("L29: S window ran dry");
        int nid = contract_special(pool, window, l, SpecialMode::BoundedP);
        contract_detail::erase_used(pool, nid, window, s_avail);
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    std::vector<int> s_rest;
    for (int id : s_avail) {
        s_rest.push_back(id);
        if (static_cast<long>(s_rest.size()) == y) break;
    }
    auto sub = l28_contract(pool, E_pool, s_rest, y, l);
    for (int id : sub.outputs) {
        res.outputs.push_back(id);
        contract_detail::erase_used(pool, id, s_rest, s_avail);
    }
    res.untouched = static_cast<long>(s_avail.size());
    if (res.untouched < z + m * lp) throw InternalContradiction("L29: spared-S guarantee broken");
    return res;
}

/// Lemma 30: >= px + p^2-3p+3 colour-nu variables with at least x of one
/// nuance and x outside it contract, px of them, to x exact level-(l+1)
/// variables of colours != nu.
inline BatchResult l30_contract(Pool& pool, const std::vector<int>& E_ids, long x, long l) {
    const unsigned long p = pool.params().p;
    const long lp = static_cast<long>(p);
    BatchResult res;
    if (x == 0) return res;
    if (static_cast<long>(E_ids.size()) < lp * x + lp * lp - 3 * lp + 3)
        throw std::invalid_argument("L30: below the px + p^2-3p+3 bound");
    std::map<int, std::vector<int>> by_nu;
    for (int id : E_ids) by_nu[pool.atom(id).nuance].push_back(id);
    int mu_star = -1;
    long best = -1;
    for (auto& [mu, v] : by_nu)
        if (static_cast<long>(v.size()) > best) {
            best = static_cast<long>(v.size());
            mu_star = mu;
        }
    std::vector<int> G1, G2, G3;
    for (int id : E_ids) {
        if (pool.atom(id).nuance == mu_star && static_cast<long>(G1.size()) < x)
            G1.push_back(id);
        else if (pool.atom(id).nuance != mu_star && static_cast<long>(G2.size()) < x)
            G2.push_back(id);
        else
            G3.push_back(id);
    }
    if (static_cast<long>(G1.size()) < x || static_cast<long>(G2.size()) < x)
        throw std::invalid_argument("L30: nuance split below x on one side");
    for (long i = 0; i < x; ++i) {
        std::map<int, std::vector<int>> h3;
        for (int id : G3) h3[pool.atom(id).nuance].push_back(id);
        int eta = -1;
        for (auto& [mu, v] : h3)
            if (static_cast<long>(v.size()) >= lp - 1 && eta < 0) eta = mu;
        if (eta < 0) throw InternalContradiction("L30: G3 lost its fat nuance class");
        std::vector<int> group(h3[eta].begin(), h3[eta].begin() + (p - 1));
        std::vector<int>* odd_src = (eta == mu_star) ? &G2 : &G1;
        std::vector<int>* other_src = (eta == mu_star) ? &G1 : &G2;
        if (odd_src->empty()) throw InternalContradiction("L30: odd-one pool ran dry");
        int odd = odd_src->front();
        odd_src->erase(odd_src->begin());
        int nid = contract_nuance_shift(pool, group, odd, l);
        std::set<int> consumed(pool.atom(nid).children.begin(), pool.atom(nid).children.end());
        std::vector<int> g3n;
        for (int id : G3)
            if (!consumed.count(id)) g3n.push_back(id);
        G3 = std::move(g3n);
        if (consumed.count(odd) == 0) {
            // odd one not used by the witness; it returns to the pool
            G3.push_back(odd);
        }
        if (!other_src->empty()) {
            G3.push_back(other_src->back());
            other_src->pop_back();
        }
        pool.hold(nid);
        res.outputs.push_back(nid);
    }
    return res;
}

// ---------------------------------------------------------------------------
// tower contractions (Lemmas 31 - 35, 39)
// ---------------------------------------------------------------------------

/// Closed-form input count of Lemma 33 at offset t = tau - j (t >= 1):
/// 2p^{t+1} + (4-2m)p^t - ((p-1)/2) sum_{i=1}^{t-1} p^i + (2m-1)p^{t-1}
/// + 3 sum_{i=0}^{t-2} p^i - 2p - 2.
inline long l33_count(const Params& P, long j, long m) {
    const long p = static_cast<long>(P.p);
    long t = P.tau - j;
    auto geo = [&](long a, long b) {  // sum_{i=a}^{b} p^i
        long s = 0, pw = 1;
        for (long i = 0; i <= b; ++i) {
            if (i >= a) s += pw;
            pw *= p;
        }
        return s;
    };
    auto pw = [&](long e) { return p_power(P.p, e).to_long(); };
    return 2 * pw(t + 1) + (4 - 2 * m) * pw(t) - ((p - 1) / 2) * geo(1, t - 1) +
           (2 * m - 1) * pw(t - 1) + 3 * geo(0, t - 2) - 2 * p - 2;
}

/// Closed-form input count of Lemma 34 (p = 5).
inline long l34_count(const Params& P, long j, long m) {
    const long p = static_cast<long>(P.p);
    long t = P.tau - j;
    long geo = 0, pw1 = 1;
    for (long i = 0; i <= t - 1; ++i) {
        geo += pw1;
        pw1 *= p;
    }
    auto pw = [&](long e) { return p_power(P.p, e).to_long(); };
    return 3 * pw(t + 1) - m * pw(t) - 3 * pw(t) - geo - 2 * p + 2;
}

/// Closed-form input count of Lemma 35.
inline long l35_count(const Params& P, long j) {
    const long p = static_cast<long>(P.p);
    long t = P.tau - j;
    auto geo = [&](long a, long b) {
        long s = 0, pw1 = 1;
        for (long i = 0; i <= b; ++i) {
            if (i >= a) s += pw1;
            pw1 *= p;
        }
        return s;
    };
    auto pw = [&](long e) { return p_power(P.p, e).to_long(); };
    return 4 * pw(t) - ((p - 1) / 2) * geo(1, t - 1) + 3 * geo(0, t - 2) - 2 * p - 2;
}

struct TowerResult {
    std::vector<int> outputs;                    // at the target level
    std::map<long, std::vector<int>> spares;     // 2p-2 per intermediate level
};

/// Lemma 31: p^{tau-i+1} + m p^{tau-i} - 2 flagged variables at level >= i
/// climb to p^{tau-j+1} + m p^{tau-j} - 2 at level >= j, leaving 2p-2 flagged
/// spares at every level i..j-1.
inline TowerResult l31_tower(Pool& pool, const std::vector<int>& S_ids, long i, long j, long m) {
    const Params& P = pool.params();
    const long p = static_cast<long>(P.p);
    if (m < -1 || i > j || j > P.tau) throw std::invalid_argument("L31: parameter range");
    auto pw = [&](long e) { return p_power(P.p, e).to_long(); };
    if (static_cast<long>(S_ids.size()) < pw(P.tau - i + 1) + m * pw(P.tau - i) - 2)
        throw std::invalid_argument("L31: input count below p^{tau-i+1} + m p^{tau-i} - 2");
    TowerResult tr;
    std::vector<int> cur(S_ids.begin(),
                         S_ids.begin() + (pw(P.tau - i + 1) + m * pw(P.tau - i) - 2));
    for (long l = i; l < j; ++l) {
        auto batch = l24_contract(pool, cur, l);
        long want = pw(P.tau - l) + m * pw(P.tau - l - 1) - 2;
        if (static_cast<long>(batch.outputs.size()) < want)
            throw InternalContradiction("L31: level step under-produced");
        // spares: inputs that were left untouched
        std::set<int> outset(batch.outputs.begin(), batch.outputs.end());
        std::vector<int> spare;
        for (int id : cur)
            if (!pool.atom(id).consumed && !outset.count(id)) spare.push_back(id);
        if (static_cast<long>(spare.size()) < 2 * p - 2)
            throw InternalContradiction("L31: spare guarantee broken");
        spare.resize(2 * p - 2);
        tr.spares[l] = spare;
        cur.assign(batch.outputs.begin(), batch.outputs.begin() + want);
    }
    tr.outputs = cur;
    return tr;
}

/// Lemma 32: p^{tau-i+1} + m p^{tau-i} flagged variables plus 2p-2 colour-nu_l
/// variables at every level l in i..j-1 climb to p^{tau-j+1} + m p^{tau-j}
/// flagged variables at level >= j.
inline std::vector<int> l32_tower(Pool& pool, const std::vector<int>& S_ids,
                                  const std::map<long, std::vector<int>>& perlevel_E, long i,
                                  long j, long m) {
    const Params& P = pool.params();
    const long p = static_cast<long>(P.p);
    if (m < -1 || i > j || j > P.tau) throw std::invalid_argument("L32: parameter range");
    auto pw = [&](long e) { return p_power(P.p, e).to_long(); };
    if (static_cast<long>(S_ids.size()) < pw(P.tau - i + 1) + m * pw(P.tau - i))
        throw std::invalid_argument("L32: input count below p^{tau-i+1} + m p^{tau-i}");
    std::vector<int> cur(S_ids.begin(), S_ids.begin() + (pw(P.tau - i + 1) + m * pw(P.tau - i)));
    for (long l = i; l < j; ++l) {
        auto it = perlevel_E.find(l);
        if (it == perlevel_E.end() || static_cast<long>(it->second.size()) < 2 * p - 2)
            throw std::invalid_argument("L32: missing 2p-2 helper variables at level " +
                                        std::to_string(l));
        auto batch = l24_contract(pool, cur, l);
        long want = pw(P.tau - l) + m * pw(P.tau - l - 1) - 2;
        if (static_cast<long>(batch.outputs.size()) < want)
            throw InternalContradiction("L32: level step under-produced");
        std::vector<int> next(batch.outputs.begin(), batch.outputs.begin() + want);
        // remaining inputs: at least 2p untouched; two Lemma 21 rounds add two
        std::set<int> outset(batch.outputs.begin(), batch.outputs.end());
        std::vector<int> spare;
        for (int id : cur)
            if (!pool.atom(id).consumed && !outset.count(id)) spare.push_back(id);
        if (static_cast<long>(spare.size()) < 2 * p)
            throw InternalContradiction("L32: fewer than 2p spare S variables");
        const std::vector<int>& helpers = it->second;
        for (int round = 0; round < 2; ++round) {
            std::vector<int> sset(spare.begin(), spare.begin() + p);
            spare.erase(spare.begin(), spare.begin() + p);
            std::vector<int> eset(helpers.begin() + round * (p - 1),
                                  helpers.begin() + (round + 1) * (p - 1));
            int nid = contract_fill(pool, FillMode::L21, eset, {}, sset, l);
            // inputs not in the witness stay available as spares
            std::set<int> used(pool.atom(nid).children.begin(), pool.atom(nid).children.end());
            used.insert(nid);
            for (int id : sset)
                if (!used.count(id)) spare.push_back(id);
            pool.hold(nid);
            next.push_back(nid);
        }
        cur = std::move(next);
    }
    return cur;
}

/// Lemmas 33/34: a colour-nu pool at level j climbs to p-m-1 colour-nu
/// variables at level tau, shedding 2p-2 colour-nu spares at every level
/// j..tau-1.  Lemma 34 is the sharper p = 5 variant.
inline TowerResult l33_l34_tower(Pool& pool, const std::vector<int>& E_ids, long j, long m) {
    const Params& P = pool.params();
    const long p = static_cast<long>(P.p);
    const bool p5 = (P.p == 5);
    long need = p5 ? l34_count(P, j, m) : l33_count(P, j, m);
    if (static_cast<long>(E_ids.size()) < need)
        throw std::invalid_argument("L33/34: input count below the closed form (" +
                                    std::to_string(need) + ")");
    TowerResult tr;
    std::vector<int> cur(E_ids.begin(), E_ids.begin() + need);
    for (long l = j; l < P.tau - 1; ++l) {
        auto batch = l26_contract(pool, cur, l);
        long want = p5 ? l34_count(P, l + 1, m) : l33_count(P, l + 1, m);
        if (static_cast<long>(batch.outputs.size()) < want)
            throw InternalContradiction("L33/34: level step under-produced");
        std::set<int> outset(batch.outputs.begin(), batch.outputs.end());
        std::vector<int> spare;
        for (int id : cur)
            if (!pool.atom(id).consumed && !outset.count(id)) spare.push_back(id);
        if (static_cast<long>(spare.size()) < 2 * p - 2)
            throw InternalContradiction("L33/34: spare guarantee broken");
        spare.resize(2 * p - 2);
        tr.spares[l] = spare;
        cur.assign(batch.outputs.begin(), batch.outputs.begin() + want);
    }
    // final step tau-1 -> tau
    long l = P.tau - 1;
    long want = p - m - 1;
    std::vector<int> final_out;
    if (want > 0) {
        if (!p5) {
            auto batch = l25_contract(pool, cur, l);
            if (static_cast<long>(batch.outputs.size()) < want)
                throw InternalContradiction("L33: final Lemma 25 under-produced");
            final_out.assign(batch.outputs.begin(), batch.outputs.begin() + want);
        } else if (m <= 2) {
            auto batch = l26_contract(pool, cur, l);
            if (static_cast<long>(batch.outputs.size()) < want)
                throw InternalContradiction("L34: final Lemma 26 under-produced");
            final_out.assign(batch.outputs.begin(), batch.outputs.begin() + want);
        } else {  // m == 3 for p = 5
            auto batch = l25_contract(pool, cur, l);
            if (static_cast<long>(batch.outputs.size()) < want)
                throw InternalContradiction("L34: final Lemma 25 under-produced");
            final_out.assign(batch.outputs.begin(), batch.outputs.begin() + want);
        }
    }
    std::set<int> outset(final_out.begin(), final_out.end());
    std::vector<int> spare;
    for (int id : cur)
        if (!pool.atom(id).consumed && !outset.count(id)) spare.push_back(id);
    if (static_cast<long>(spare.size()) < 2 * p - 2)
        throw InternalContradiction("L33/34: final spare guarantee broken");
    spare.resize(2 * p - 2);
    tr.spares[l] = spare;
    tr.outputs = final_out;
    return tr;
}

/// Lemma 35: a colour-nu pool at level j sheds 2p-2 colour-nu variables at
/// every level j..tau-1 simultaneously.
inline TowerResult l35_tower(Pool& pool, const std::vector<int>& E_ids, long j) {
    const Params& P = pool.params();
    const long p = static_cast<long>(P.p);
    long need = l35_count(P, j);
    if (static_cast<long>(E_ids.size()) < need)
        throw std::invalid_argument("L35: input count below the closed form (" +
                                    std::to_string(need) + ")");
    TowerResult tr;
    std::vector<int> cur(E_ids.begin(), E_ids.begin() + need);
    for (long l = j; l < P.tau - 1; ++l) {
        auto batch = l26_contract(pool, cur, l);
        long want = l35_count(P, l + 1);
        if (static_cast<long>(batch.outputs.size()) < want)
            throw InternalContradiction("L35: level step under-produced");
        std::set<int> outset(batch.outputs.begin(), batch.outputs.end());
        std::vector<int> spare;
        for (int id : cur)
            if (!pool.atom(id).consumed && !outset.count(id)) spare.push_back(id);
        if (static_cast<long>(spare.size()) < 2 * p - 2)
            throw InternalContradiction("L35: spare guarantee broken");
        spare.resize(2 * p - 2);
        tr.spares[l] = spare;
        cur.assign(batch.outputs.begin(), batch.outputs.begin() + want);
    }
    if (static_cast<long>(cur.size()) < 2 * p - 2)
        throw InternalContradiction("L35: top level below 2p-2");
    cur.resize(2 * p - 2);
    tr.spares[P.tau - 1] = cur;
    return tr;
}

/// Lemma 39: p^{tau-j+1} + m p^{tau-j} flagged variables at level >= j, with
/// p-m-1 colour-nu level-tau variables and 2p-2 helpers at each level
/// j..tau-1, contract to one flagged variable at level >= tau+1: the solver's
/// terminal object.
inline int l39_terminal(Pool& pool, const std::vector<int>& S_ids,
                        const std::vector<int>& Etau_ids,
                        const std::map<long, std::vector<int>>& perlevel_E, long j, long m) {
    const Params& P = pool.params();
    const long p = static_cast<long>(P.p);
    if (m < 0 || m > p - 1) throw std::invalid_argument("L39: m out of range");
    if (static_cast<long>(Etau_ids.size()) < p - m - 1)
        throw std::invalid_argument("L39: need p-m-1 level-tau variables");
    auto stau = l32_tower(pool, S_ids, perlevel_E, j, P.tau, m);
    if (static_cast<long>(stau.size()) != p + m)
        throw InternalContradiction("L39: Lemma 32 did not yield p+m S^tau variables");
    std::vector<int> e(Etau_ids.begin(), Etau_ids.begin() + (p - m - 1));
    return contract_fill(pool, FillMode::L21, e, {}, stau, P.tau);
}

}  // namespace padform
