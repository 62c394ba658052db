#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <gmp.h>

namespace padform {

/// Arbitrary-precision signed integer with value semantics, backed by GMP.
/// Only the operations the solver needs are exposed; everything is exact.
class Int {
public:
    Int() { mpz_init(z_); }
    Int(long v) { mpz_init_set_si(z_, v); }
    Int(int v) : Int(static_cast<long>(v)) {}
    Int(unsigned long v) { mpz_init_set_ui(z_, v); }

    explicit Int(const std::string& decimal) {
        if (mpz_init_set_str(z_, decimal.c_str(), 10) != 0) {
            mpz_clear(z_);
            throw std::invalid_argument("Int: malformed decimal literal: " + decimal);
        }
    }

    Int(const Int& o) { mpz_init_set(z_, o.z_); }
    Int(Int&& o) noexcept {
        mpz_init(z_);
        mpz_swap(z_, o.z_);
    }
    Int& operator=(const Int& o) {
        if (this != &o) mpz_set(z_, o.z_);
        return *this;
    }
    Int& operator=(Int&& o) noexcept {
        mpz_swap(z_, o.z_);
        return *this;
    }
    ~Int() { mpz_clear(z_); }

    friend Int operator+(const Int& a, const Int& b) { Int r; mpz_add(r.z_, a.z_, b.z_); return r; }
    friend Int operator-(const Int& a, const Int& b) { Int r; mpz_sub(r.z_, a.z_, b.z_); return r; }
    friend Int operator*(const Int& a, const Int& b) { Int r; mpz_mul(r.z_, a.z_, b.z_); return r; }
    friend Int operator*(const Int& a, long b) { Int r; mpz_mul_si(r.z_, a.z_, b); return r; }
    Int operator-() const { Int r; mpz_neg(r.z_, z_); return r; }

    Int& operator+=(const Int& o) { mpz_add(z_, z_, o.z_); return *this; }
    Int& operator-=(const Int& o) { mpz_sub(z_, z_, o.z_); return *this; }
    Int& operator*=(const Int& o) { mpz_mul(z_, z_, o.z_); return *this; }

    friend bool operator==(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) == 0; }
    friend bool operator!=(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) != 0; }
    friend bool operator<(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) < 0; }
    friend bool operator<=(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) <= 0; }
    friend bool operator>(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) > 0; }
    friend bool operator>=(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) >= 0; }

    bool operator==(long v) const { return mpz_cmp_si(z_, v) == 0; }
    bool operator!=(long v) const { return mpz_cmp_si(z_, v) != 0; }

    bool is_zero() const { return mpz_sgn(z_) == 0; }
    int sign() const { return mpz_sgn(z_); }

    /// Non-negative remainder in [0, m); m must be positive.
    friend Int mod_floor(const Int& a, const Int& m) {
        Int r;
        mpz_fdiv_r(r.z_, a.z_, m.z_);
        return r;
    }

    unsigned long mod_ui(unsigned long m) const { return mpz_fdiv_ui(z_, m); }

    /// Exact division; caller guarantees divisibility.
    friend Int div_exact(const Int& a, const Int& d) {
        Int r;
        mpz_divexact(r.z_, a.z_, d.z_);
        return r;
    }

    friend Int gcd(const Int& a, const Int& b) { Int r; mpz_gcd(r.z_, a.z_, b.z_); return r; }

    bool divisible_by(const Int& d) const { return mpz_divisible_p(z_, d.z_) != 0; }

    /// Largest e with p^e | *this, for nonzero values; nullopt encodes v_p(0) = infinity.
    std::optional<long> valuation(unsigned long p) const {
        if (is_zero()) return std::nullopt;
        Int rem;
        mpz_t q;
        mpz_init(q);
        long e = static_cast<long>(mpz_remove(q, z_, Int(static_cast<unsigned long>(p)).z_));
        mpz_clear(q);
        return e;
    }

    /// *this / p^e, asserting exact divisibility.
    Int shifted_down(unsigned long p, long e) const {
        Int pe = pow_ui(Int(p), static_cast<unsigned long>(e));
        if (!divisible_by(pe)) throw std::logic_error("Int: shifted_down without divisibility");
        return div_exact(*this, pe);
    }

    static Int pow_ui(const Int& base, unsigned long e) {
        Int r;
        mpz_pow_ui(r.z_, base.z_, e);
        return r;
    }

    /// base^e mod m (m > 0, e >= 0).
    static Int powm(const Int& base, const Int& e, const Int& m) {
        Int r;
        mpz_powm(r.z_, base.z_, e.z_, m.z_);
        return r;
    }

    /// Inverse mod m when gcd(base, m) = 1.
    static std::optional<Int> invert(const Int& base, const Int& m) {
        Int r;
        if (mpz_invert(r.z_, base.z_, m.z_) == 0) return std::nullopt;
        return r;
    }

    bool fits_slong() const { return mpz_fits_slong_p(z_) != 0; }
    long to_long() const {
        if (!fits_slong()) throw std::overflow_error("Int: value does not fit in long");
        return mpz_get_si(z_);
    }

    std::string str() const {
        char* s = mpz_get_str(nullptr, 10, z_);
        std::string out(s);
        void (*freefn)(void*, size_t);
        mp_get_memory_functions(nullptr, nullptr, &freefn);
        freefn(s, out.size() + 1);
        return out;
    }

    friend void swap(Int& a, Int& b) noexcept { mpz_swap(a.z_, b.z_); }

private:
    mpz_t z_;
};

inline Int operator*(long a, const Int& b) { return b * a; }

/// p^e as an Int, e >= 0.
inline Int p_power(unsigned long p, long e) {
    return Int::pow_ui(Int(p), static_cast<unsigned long>(e));
}

}  // namespace padform
