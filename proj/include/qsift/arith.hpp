#pragma once

// Exact modular arithmetic over odd square-free moduli, plus the
// character-free exponential-sum primitives (Gauss-type class sums and
// Kloosterman sums) everything downstream is built on.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "qsift/errors.hpp"
#include "qsift/numeric.hpp"

namespace qsift {

inline u64 mulmod_u64(u64 a, u64 b, u64 m) {
    return u64((u128(a) * b) % m);
}

inline u64 powmod_u64(u64 base, u64 exp, u64 m) {
    if (m == 1) return 0;
    u64 r = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1) r = mulmod_u64(r, base, m);
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    return r;
}

// Deterministic Miller-Rabin, valid for all n < 2^64.
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod_u64(x, x, n);
            if (x == n - 1) { witness = false; break; }
        }
        if (witness) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// SquareFreeModulus: a square-free odd q as its sorted prime list plus the
// derived quantities omega(q), phi(q) and P = phi(q)/q held exactly.
// ---------------------------------------------------------------------------
class SquareFreeModulus {
public:
    explicit SquareFreeModulus(std::vector<i64> primes) : primes_(std::move(primes)) {
        std::sort(primes_.begin(), primes_.end());
        if (primes_.empty()) fail(errc::bad_argument, "modulus needs at least one prime");
        u128 q = 1, phi = 1;
        i64 prev = 0;
        for (i64 p : primes_) {
            if (p < 3) fail(p == 2 ? errc::even_modulus : errc::bad_argument,
                            "prime factors must be odd primes >= 3, got " + std::to_string(p));
            if (p == prev) fail(errc::not_square_free, "repeated prime " + std::to_string(p));
            if (!is_prime_u64(u64(p))) fail(errc::bad_argument, std::to_string(p) + " is not prime");
            prev = p;
            q *= u128(p);
            phi *= u128(p - 1);
            if (q > u128(INT64_MAX)) fail(errc::overflow, "modulus exceeds 2^63-1");
        }
        q_ = i64(q);
        phi_ = i64(phi);
    }

    const std::vector<i64>& primes() const { return primes_; }
    i64 q() const { return q_; }
    i64 phi() const { return phi_; }
    int omega() const { return int(primes_.size()); }
    Rational density_coprime() const { return Rational(phi_, q_); }   // P = phi(q)/q

    bool all_primes_3_mod_4() const {
        for (i64 p : primes_) if (p % 4 != 3) return false;
        return true;
    }

private:
    std::vector<i64> primes_;
    i64 q_ = 1;
    i64 phi_ = 1;
};

// ---------------------------------------------------------------------------
// Factorization of odd square-free inputs: trial division backed by
// Brent-Pollard rho for the leftover cofactors.
// ---------------------------------------------------------------------------
namespace detail {

inline u64 pollard_brent(u64 n, u64& budget) {
    // n odd composite, not a prime power guard done by caller loop
    u64 x0 = 2, c = 1;
    for (;;) {
        u64 x = x0, y = x0, d = 1;
        u64 q = 1;
        int m = 128;
        while (d == 1) {
            x = y;
            for (int i = 0; i < m; ++i) y = (mulmod_u64(y, y, n) + c) % n;
            for (int k = 0; k < m && d == 1; k += 32) {
                u64 ys = y;
                for (int i = 0; i < 32; ++i) {
                    y = (mulmod_u64(y, y, n) + c) % n;
                    q = mulmod_u64(q, x > y ? x - y : y - x, n);
                    if (budget-- == 0) fail(errc::factorization_timeout, "rho budget exhausted");
                }
                d = int_gcd<u64>(q, n);
                if (d == n) {
                    // backtrack one step at a time
                    d = 1;
                    y = ys;
                    while (d == 1) {
                        y = (mulmod_u64(y, y, n) + c) % n;
                        d = int_gcd<u64>(x > y ? x - y : y - x, n);
                        if (budget-- == 0) fail(errc::factorization_timeout, "rho budget exhausted");
                    }
                    break;
                }
            }
        }
        if (d != n) return d;
        ++c;   // unlucky cycle; retry with another polynomial
        if (c > 20) fail(errc::factorization_timeout, "rho failed to split " + std::to_string(n));
    }
}

inline void factor_into(u64 n, std::vector<i64>& out, u64& budget) {
    if (n == 1) return;
    if (is_prime_u64(n)) { out.push_back(i64(n)); return; }
    u64 d = pollard_brent(n, budget);
    factor_into(d, out, budget);
    factor_into(n / d, out, budget);
}

} // namespace detail

inline SquareFreeModulus factor_squarefree(i64 n, u64 rho_budget = 50'000'000) {
    if (n < 3) fail(errc::bad_argument, "modulus must be >= 3");
    if (n % 2 == 0) fail(errc::even_modulus, std::to_string(n) + " is even");
    std::vector<i64> primes;
    u64 m = u64(n);
    for (u64 p = 3; p * p <= m && p < 20000; p += 2) {
        if (m % p == 0) {
            m /= p;
            if (m % p == 0) fail(errc::not_square_free, std::to_string(p) + "^2 divides " + std::to_string(n));
            primes.push_back(i64(p));
        }
    }
    if (m > 1) detail::factor_into(m, primes, rho_budget);
    std::sort(primes.begin(), primes.end());
    for (size_t i = 1; i < primes.size(); ++i)
        if (primes[i] == primes[i - 1])
            fail(errc::not_square_free, std::to_string(primes[i]) + "^2 divides " + std::to_string(n));
    return SquareFreeModulus(primes);
}

// ---------------------------------------------------------------------------
// Scalar modular operations
// ---------------------------------------------------------------------------

// Inverse of a modulo prime p, result in [1, p-1].
inline i64 mod_inverse(i64 a, i64 p) {
    i64 r = a % p;
    if (r < 0) r += p;
    if (r == 0) fail(errc::zero_divisor, std::to_string(a) + " has no inverse mod " + std::to_string(p));
    return i64(powmod_u64(u64(r), u64(p - 2), u64(p)));
}

// Legendre symbol by Euler's criterion.
inline int legendre(i64 a, i64 p) {
    i64 r = a % p;
    if (r < 0) r += p;
    if (r == 0) return 0;
    u64 e = powmod_u64(u64(r), u64((p - 1) / 2), u64(p));
    return e == 1 ? 1 : -1;
}

// Table of inverses mod p for x in [1, p-1], O(p).
inline std::vector<i64> inverse_table(i64 p) {
    std::vector<i64> inv(static_cast<size_t>(p));
    inv[1] = 1;
    for (i64 x = 2; x < p; ++x)
        inv[size_t(x)] = (p - (p / x) * inv[size_t(p % x)] % p) % p;
    return inv;
}

// Unique x in [0, prod p) with x = a_p (mod p) for each pair.
inline i64 crt_combine(const std::vector<std::pair<i64, i64>>& residues) {
    if (residues.empty()) fail(errc::bad_argument, "crt of nothing");
    i128 x = 0, m = 1;
    for (auto [a, p] : residues) {
        if (p <= 0) fail(errc::bad_argument, "nonpositive modulus in crt");
        i64 g = int_gcd<i64>(i64(m % p), p);
        if (m > 1 && g != 1)
            fail(errc::non_coprime_moduli, "moduli share factor " + std::to_string(g));
        if (m * p > i128(INT64_MAX)) fail(errc::overflow, "crt modulus exceeds 2^63-1");
        i64 ar = a % p;
        if (ar < 0) ar += p;
        // x' = x + m * ((ar - x) * m^{-1} mod p)
        i64 diff = (ar - i64(x % p)) % p;
        if (diff < 0) diff += p;
        i64 minv = i64(powmod_u64(u64(((m % p) + p) % p), u64(p - 2), u64(p)));
        i64 t = i64(mulmod_u64(u64(diff), u64(minv), u64(p)));
        x += m * t;
        m *= p;
    }
    return i64(x);
}

// ---------------------------------------------------------------------------
// Exponential sums over one prime
// ---------------------------------------------------------------------------

// Kloosterman sums over a fixed prime: builds the inverse and phase tables
// once so that bulk (a, b) sweeps stay O(p) per sum.
class KloostermanEvaluator {
public:
    explicit KloostermanEvaluator(i64 p) : p_(p), inv_(inverse_table(p)), tbl_(p) {
        if (p < 3 || !is_prime_u64(u64(p))) fail(errc::bad_argument, "p must be an odd prime");
    }

    i64 p() const { return p_; }

    // S(a,b;p) = sum_{x=1}^{p-1} e((a x + b x^{-1})/p).  The sum is real;
    // the accumulated imaginary part must stay below 1e-9 * p.
    double sum(i64 a, i64 b) const {
        i64 ar = ((a % p_) + p_) % p_;
        i64 br = ((b % p_) + p_) % p_;
        KahanComplexSum acc;
        if (p_ < (i64(1) << 31)) {
            for (i64 x = 1; x < p_; ++x) {
                u64 k = (u64(ar) * u64(x) + u64(br) * u64(inv_[size_t(x)])) % u64(p_);
                acc.add(tbl_.at(i64(k)));
            }
        } else {
            for (i64 x = 1; x < p_; ++x) {
                i64 k = i64((u128(ar) * u128(x) + u128(br) * u128(inv_[size_t(x)])) % u128(p_));
                acc.add(tbl_.at(k));
            }
        }
        cplx s = acc.value();
        if (std::abs(s.imag()) > 1e-9 * double(p_))
            fail(errc::numerical_instability, "kloosterman imaginary part " + std::to_string(s.imag()));
        return s.real();
    }

private:
    i64 p_;
    std::vector<i64> inv_;
    PhaseTable tbl_;
};

inline double kloosterman_sum(i64 a, i64 b, i64 p) {
    return KloostermanEvaluator(p).sum(a, b);
}

enum class ResidueClass { residues, nonresidues };

// sum over the chosen class C of e(a x / p), where residues means the
// (p-1)/2 nonzero squares mod p.
inline cplx gauss_class_sum(i64 p, i64 a, ResidueClass cls) {
    if (p < 3 || !is_prime_u64(u64(p))) fail(errc::bad_argument, "p must be an odd prime");
    i64 ar = ((a % p) + p) % p;
    if (ar == 0) fail(errc::zero_frequency, "a must be nonzero mod p");
    PhaseTable tbl(p);
    int want = cls == ResidueClass::residues ? 1 : -1;
    KahanComplexSum acc;
    for (i64 x = 1; x < p; ++x) {
        if (legendre(x, p) == want)
            acc.add(tbl.at(i64(mulmod_u64(u64(ar), u64(x), u64(p)))));
    }
    return acc.value();
}

// |gauss_class_sum| has a closed form: (sqrt(p)+s)/2 with s = +-1 chosen by
// the class and the character of a when p = 1 mod 4, and sqrt(p+1)/2 when
// p = 3 mod 4.
inline double gauss_class_magnitude(i64 p, i64 a, ResidueClass cls) {
    if (p % 4 == 3) return std::sqrt(double(p + 1)) / 2.0;
    int chi = legendre(a, p);
    int sign = (cls == ResidueClass::nonresidues) ? chi : -chi;
    return (std::sqrt(double(p)) + double(sign)) / 2.0;
}

} // namespace qsift
