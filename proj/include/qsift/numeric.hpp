#pragma once

// Exact and compensated numeric primitives shared by all modules:
// 128/256-bit integers, exact rationals, Kahan complex accumulation,
// unit phases e(a/r), and a deterministic chunked parallel map.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "qsift/errors.hpp"

namespace qsift {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;
using cplx = std::complex<double>;

template <typename T>
constexpr T int_gcd(T a, T b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        T t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline std::string to_string_u128(u128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
        s += char('0' + int(v % 10));
        v /= 10;
    }
    return std::string(s.rbegin(), s.rend());
}

inline std::string to_string_i128(i128 v) {
    if (v < 0) return "-" + to_string_u128(u128(-v));
    return to_string_u128(u128(v));
}

// ---------------------------------------------------------------------------
// Exact rational on i128. Always stored reduced with positive denominator.
// Intermediate cross products stay within i128 as long as both operands keep
// |num|, den < 2^63, which holds for every density and mean this library forms.
// ---------------------------------------------------------------------------
struct Rational {
    i128 num = 0;
    i128 den = 1;

    Rational() = default;
    Rational(i128 n, i128 d) : num(n), den(d) {
        if (den == 0) fail(errc::bad_argument, "rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        reduce();
    }
    Rational(i64 n) : num(n), den(1) {}

    void reduce() {
        i128 g = int_gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    Rational operator*(const Rational& o) const {
        // cross-reduce before multiplying to keep magnitudes small
        i128 g1 = int_gcd(num < 0 ? -num : num, o.den);
        i128 g2 = int_gcd(o.num < 0 ? -o.num : o.num, den);
        return Rational((num / g1) * (o.num / g2), (den / g2) * (o.den / g1));
    }
    Rational operator+(const Rational& o) const {
        return Rational(num * o.den + o.num * den, den * o.den);
    }
    Rational operator-(const Rational& o) const {
        return Rational(num * o.den - o.num * den, den * o.den);
    }
    Rational operator/(const Rational& o) const {
        if (o.num == 0) fail(errc::zero_divisor, "rational division by zero");
        return *this * Rational(o.den, o.num);
    }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator<(const Rational& o) const { return num * o.den < o.num * den; }

    double to_double() const {
        return double(static_cast<long double>(num) / static_cast<long double>(den));
    }
    std::string str() const {
        return to_string_i128(num) + "/" + to_string_i128(den);
    }
};

// ---------------------------------------------------------------------------
// Compensated (Kahan) accumulation for complex sums. Every O(p)-term
// exponential sum in the library routes through this.
// ---------------------------------------------------------------------------
class KahanSum {
public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class KahanComplexSum {
public:
    void add(cplx z) {
        re_.add(z.real());
        im_.add(z.imag());
    }
    cplx value() const { return {re_.value(), im_.value()}; }

private:
    KahanSum re_, im_;
};

// ---------------------------------------------------------------------------
// Unit phases e(x) = exp(2*pi*i*x) for rational x = a/r.
// ---------------------------------------------------------------------------

// e(a/r) with the exact reduction a mod r done in integer arithmetic.
// Reducing a mod r (or cancelling gcd(a, r)) never changes the value.
inline cplx unit_phase(i64 a, i64 r) {
    if (r <= 0) fail(errc::bad_argument, "phase denominator must be positive");
    i64 m = a % r;
    if (m < 0) m += r;
    double x = 2.0 * std::numbers::pi * (double(m) / double(r));
    return {std::cos(x), std::sin(x)};
}

// Value type for a rational unit phase: carries the reduced fraction
// alongside the evaluated point on the circle.
struct UnitPhase {
    i64 num = 0;   // reduced: 0 <= num < den
    i64 den = 1;
    double re = 1.0;
    double im = 0.0;

    UnitPhase(i64 a, i64 r) {
        if (r <= 0) fail(errc::bad_argument, "phase denominator must be positive");
        i64 m = a % r;
        if (m < 0) m += r;
        i64 g = int_gcd(m, r);
        if (g == 0) g = 1;
        num = m / g;
        den = r / g;
        cplx z = unit_phase(num, den);
        re = z.real();
        im = z.imag();
        double drift = std::abs(re * re + im * im - 1.0);
        if (drift > 1e-12) fail(errc::numerical_instability, "unit phase off the circle");
    }

    cplx value() const { return {re, im}; }
};

// Table of e(k/r) for k in [0, r). Shared by the sum kernels so that inner
// loops never call sin/cos.
class PhaseTable {
public:
    explicit PhaseTable(i64 r) : r_(r), tbl_(size_t(r)) {
        if (r <= 0) fail(errc::bad_argument, "phase table modulus must be positive");
        for (i64 k = 0; k < r; ++k) {
            double x = 2.0 * std::numbers::pi * (double(k) / double(r));
            tbl_[size_t(k)] = {std::cos(x), std::sin(x)};
        }
    }

    i64 modulus() const { return r_; }

    // e(k/r), k already in [0, r)
    const cplx& at(i64 k) const { return tbl_[size_t(k)]; }

    // e(k/r) for any integer k
    cplx reduced(i64 k) const {
        i64 m = k % r_;
        if (m < 0) m += r_;
        return tbl_[size_t(m)];
    }

private:
    i64 r_;
    std::vector<cplx> tbl_;
};

// ---------------------------------------------------------------------------
// Signed 256-bit integer (sign + 4x64 magnitude). Just enough surface for
// exact central-moment recombination: add/sub, multiply by small factors,
// and a final conversion to long double.
// ---------------------------------------------------------------------------
struct Int256 {
    bool neg = false;
    u64 w[4] = {0, 0, 0, 0};   // little-endian limbs

    Int256() = default;

    static Int256 from_u128(u128 v) {
        Int256 r;
        r.w[0] = u64(v);
        r.w[1] = u64(v >> 64);
        return r;
    }
    static Int256 from_i128(i128 v) {
        Int256 r = from_u128(v < 0 ? u128(-v) : u128(v));
        r.neg = v < 0;
        return r;
    }

    bool is_zero() const { return w[0] == 0 && w[1] == 0 && w[2] == 0 && w[3] == 0; }

    void mul_u64(u64 m) {
        u128 carry = 0;
        for (int i = 0; i < 4; ++i) {
            u128 cur = u128(w[i]) * m + carry;
            w[i] = u64(cur);
            carry = cur >> 64;
        }
        if (carry != 0) fail(errc::overflow, "256-bit overflow in moment accumulation");
    }

    void mul_u128(u128 m) {
        mul_by_parts(u64(m), u64(m >> 64));
    }

    static int cmp_mag(const Int256& a, const Int256& b) {
        for (int i = 3; i >= 0; --i) {
            if (a.w[i] != b.w[i]) return a.w[i] < b.w[i] ? -1 : 1;
        }
        return 0;
    }

    void accumulate(const Int256& o) {
        if (o.is_zero()) return;
        if (is_zero()) { *this = o; return; }
        if (neg == o.neg) {
            add_mag(o);
        } else if (cmp_mag(*this, o) >= 0) {
            sub_mag(o);
            if (is_zero()) neg = false;
        } else {
            Int256 t = o;
            t.sub_mag(*this);
            *this = t;
        }
    }

    long double to_long_double() const {
        long double v = 0.0L;
        for (int i = 3; i >= 0; --i) v = v * 18446744073709551616.0L + (long double)w[i];
        return neg ? -v : v;
    }

private:
    void mul_by_parts(u64 lo, u64 hi) {
        Int256 low = *this, high = *this;
        low.neg = high.neg = false;
        low.mul_u64(lo);
        if (hi != 0) {
            high.mul_u64(hi);
            if (high.w[3] != 0) fail(errc::overflow, "256-bit overflow in moment accumulation");
            Int256 shifted;
            shifted.w[1] = high.w[0];
            shifted.w[2] = high.w[1];
            shifted.w[3] = high.w[2];
            low.add_mag(shifted);
        }
        low.neg = neg;
        *this = low;
    }

    void add_mag(const Int256& o) {
        u128 carry = 0;
        for (int i = 0; i < 4; ++i) {
            u128 cur = u128(w[i]) + o.w[i] + carry;
            w[i] = u64(cur);
            carry = cur >> 64;
        }
        if (carry != 0) fail(errc::overflow, "256-bit overflow in moment accumulation");
    }

    void sub_mag(const Int256& o) {
        i128 borrow = 0;
        for (int i = 0; i < 4; ++i) {
            i128 cur = i128(u128(w[i])) - i128(u128(o.w[i])) - borrow;
            if (cur < 0) { cur += (i128(1) << 64); borrow = 1; } else borrow = 0;
            w[i] = u64(u128(cur));
        }
    }
};

// ---------------------------------------------------------------------------
// Deterministic chunked parallelism. Work on [0, n) is cut into fixed-size
// chunks independent of the thread count; per-chunk results merge in chunk
// order, so the output is bit-identical for any --threads value.
// ---------------------------------------------------------------------------
inline unsigned& worker_threads() {
    static unsigned n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

template <typename Result>
std::vector<Result> chunked_map(i64 n, i64 chunk,
                                const std::function<Result(i64, i64)>& fn) {
    if (chunk <= 0) chunk = 1;
    i64 nchunks = (n + chunk - 1) / chunk;
    std::vector<Result> results(size_t(std::max<i64>(nchunks, 0)));
    unsigned nthreads = std::min<unsigned>(worker_threads(), unsigned(std::max<i64>(nchunks, 1)));
    if (nthreads <= 1 || nchunks <= 1) {
        for (i64 c = 0; c < nchunks; ++c) {
            i64 lo = c * chunk, hi = std::min(n, lo + chunk);
            results[size_t(c)] = fn(lo, hi);
        }
        return results;
    }
    std::vector<std::thread> pool;
    std::atomic<i64> next{0};
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                i64 c = next.fetch_add(1);
                if (c >= nchunks) break;
                i64 lo = c * chunk, hi = std::min(n, lo + chunk);
                results[size_t(c)] = fn(lo, hi);
            }
        });
    }
    for (auto& th : pool) th.join();
    return results;
}

} // namespace qsift
