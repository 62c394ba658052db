#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "padform/integer.hpp"

namespace padform {

/// Raised when an input violates the hypotheses p >= 5 prime, tau >= 1,
/// k = p^tau (p-1), s > 2k^2.
struct OutsideHypotheses : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a pair is degenerate (theta = 0); such inputs are reported,
/// not solved.
struct DegeneratePair : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Internal impossibility: a case the theory excludes was reached.
struct InternalContradiction : std::logic_error {
    using std::logic_error::logic_error;
};

inline bool is_prime_u64(unsigned long n) {
    if (n < 2) return false;
    for (unsigned long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

/// The arithmetic frame: p, tau and the constants derived from
/// k = p^tau (p - 1).  gamma = tau + 1 is the congruence modulus exponent,
/// delta = gcd(k, p-1) = p - 1 and k0 = 1.
struct Params {
    unsigned long p = 0;
    long tau = 0;
    long k = 0;
    long gamma = 0;
    long delta = 0;
    long k0 = 1;

    Int p_pow(long e) const { return p_power(p, e); }
};

inline Params derive_params(unsigned long p, long tau) {
    if (p < 5 || !is_prime_u64(p))
        throw OutsideHypotheses("p must be a prime >= 5 (got " + std::to_string(p) + ")");
    if (tau < 1)
        throw OutsideHypotheses("tau must be >= 1 (got " + std::to_string(tau) + ")");
    Params P;
    P.p = p;
    P.tau = tau;
    Int k = p_power(p, tau) * Int(static_cast<long>(p - 1));
    if (!k.fits_slong())
        throw OutsideHypotheses("k = p^tau (p-1) too large for this build");
    P.k = k.to_long();
    P.gamma = tau + 1;
    P.delta = static_cast<long>(p - 1);
    P.k0 = 1;
    return P;
}

/// v_p(n); nullopt is the INFINITE sentinel for n = 0.
inline std::optional<long> valuation(const Int& n, unsigned long p) {
    return n.valuation(p);
}

/// An exact residue modulo p^exp (0 <= value < p^exp).
struct Residue {
    Int value;
    unsigned long p = 0;
    long exp = 0;

    Residue() = default;
    Residue(Int v, unsigned long p_, long exp_) : p(p_), exp(exp_) {
        value = mod_floor(v, p_power(p_, exp_));
    }

    Int modulus() const { return p_power(p, exp); }
    bool is_unit() const { return value.mod_ui(p) != 0; }

    friend bool operator==(const Residue& a, const Residue& b) {
        return a.p == b.p && a.exp == b.exp && a.value == b.value;
    }
};

/// base^e mod p^exp, exact.
inline Residue pow_mod(const Int& base, long e, unsigned long p, long exp) {
    if (exp < 1) throw std::invalid_argument("pow_mod: modulus exponent must be >= 1");
    if (e < 0) throw std::invalid_argument("pow_mod: negative exponent");
    Int m = p_power(p, exp);
    return Residue(Int::powm(base, Int(e), m), p, exp);
}

/// k-th roots of units modulo p^N.  For k = p^tau (p-1) the k-th powers of
/// units mod p^N are exactly the residues congruent to 1 mod p^{tau+1}, so a
/// root exists iff target = 1 (mod p^{tau+1}).  Newton iteration is useless
/// here (the derivative k x^{k-1} has valuation tau), so the root is built
/// digit by digit with unit twists 1 + t p^{m-tau}:
///   (1 + t p^{m-tau})^k = 1 + delta k0 t p^m  (mod p^{m+1})   for m >= tau+1.
struct NoKthRoot : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Residue kth_root_of(const Residue& target, const Params& P, long N) {
    if (N < P.gamma) throw std::invalid_argument("kth_root_of: N must be >= tau+1");
    if (target.p != P.p || target.exp < N)
        throw std::invalid_argument("kth_root_of: target must be given mod p^N at least");
    Int t_val = mod_floor(target.value, p_power(P.p, N));
    if (mod_floor(t_val - Int(1), p_power(P.p, P.gamma)) != 0)
        throw NoKthRoot("kth_root_of: target is not 1 mod p^{tau+1}, no unit k-th root exists");

    Int pN = p_power(P.p, N);
    Int u(1);
    // delta * k0 is a unit mod p; its inverse corrects each digit.
    unsigned long dk = static_cast<unsigned long>((P.delta * P.k0) % static_cast<long>(P.p));
    Int dk_inv = *Int::invert(Int(static_cast<long>(dk)), Int(P.p));
    for (long m = P.gamma; m < N; ++m) {
        Int uk = Int::powm(u, Int(P.k), pN);
        Int u_inv = *Int::invert(uk, pN);
        Int ratio = mod_floor(t_val * u_inv, pN);  // = 1 mod p^m
        Int diff = ratio - Int(1);
        if (mod_floor(diff, p_power(P.p, m)) != 0)
            throw InternalContradiction("kth_root_of: digit invariant broken");
        Int e = div_exact(mod_floor(diff, pN), p_power(P.p, m));
        unsigned long e0 = e.mod_ui(P.p);
        unsigned long t = (e0 * dk_inv.mod_ui(P.p)) % P.p;
        // u *= 1 + t p^{m - tau}
        u = mod_floor(u * (Int(1) + Int(static_cast<long>(t)) * p_power(P.p, m - P.tau)), pN);
    }
    // final check
    if (mod_floor(Int::powm(u, Int(P.k), pN) - t_val, pN) != 0)
        throw InternalContradiction("kth_root_of: iteration did not converge");
    return Residue(u, P.p, N);
}

}  // namespace padform
