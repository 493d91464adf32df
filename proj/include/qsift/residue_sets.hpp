#pragma once

// Construction of the sieved families: forbidden-class systems Omega_p, the
// sifted sets they produce, admissible tuples realizing a system through the
// CRT, and the Kloosterman-derived sets with the M_p scan.

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "qsift/arith.hpp"

namespace qsift {

constexpr i64 kDefaultEnumerationCap = 100'000'000;

// ---------------------------------------------------------------------------
// Per-prime set constructors. Sets are sorted vectors of residues in [0, p).
// ---------------------------------------------------------------------------

namespace detail {
inline void require_odd_prime(i64 p, const char* who) {
    if (p < 3 || !is_prime_u64(u64(p)))
        fail(errc::bad_argument, std::string(who) + " needs an odd prime, got " + std::to_string(p));
}
} // namespace detail

inline std::vector<i64> omega_nonresidues(i64 p) {
    detail::require_odd_prime(p, "omega_nonresidues");
    std::vector<char> square(size_t(p), 0);
    for (i64 x = 1; x <= (p - 1) / 2; ++x)
        square[size_t(mulmod_u64(u64(x), u64(x), u64(p)))] = 1;
    std::vector<i64> out;
    out.reserve(size_t((p - 1) / 2));
    for (i64 x = 1; x < p; ++x)
        if (!square[size_t(x)]) out.push_back(x);
    return out;
}

inline std::vector<i64> omega_evens(i64 p) {
    detail::require_odd_prime(p, "omega_evens");
    std::vector<i64> out;
    out.reserve(size_t((p + 1) / 2));
    for (i64 x = 0; x < p; x += 2) out.push_back(x);
    return out;
}

// {x + x^{-1} mod p : 1 <= x <= p-1}
inline std::vector<i64> omega_kloosterman(i64 p) {
    detail::require_odd_prime(p, "omega_kloosterman");
    auto inv = inverse_table(p);
    std::vector<i64> out;
    out.reserve(size_t(p));
    for (i64 x = 1; x < p; ++x) out.push_back((x + inv[size_t(x)]) % p);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// {x + x^{-1} with the integer sum, kept only when it stays below p}
inline std::vector<i64> omega_prime_kloosterman(i64 p) {
    detail::require_odd_prime(p, "omega_prime_kloosterman");
    auto inv = inverse_table(p);
    std::vector<i64> out;
    for (i64 x = 1; x < p; ++x) {
        i64 s = x + inv[size_t(x)];
        if (s < p) out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<i64> complement_in_zp(i64 p, const std::vector<i64>& sorted_set) {
    std::vector<i64> out;
    out.reserve(size_t(p) - sorted_set.size());
    size_t j = 0;
    for (i64 x = 0; x < p; ++x) {
        if (j < sorted_set.size() && sorted_set[j] == x) { ++j; continue; }
        out.push_back(x);
    }
    return out;
}

// min over x (self-inverse classes 1 and p-1 excluded by default) of
// max(x, x^{-1}), both representatives taken in [1, p-1].
inline i64 m_p(i64 p, bool exclude_self_inverse = true) {
    if (p < 5) fail(errc::bad_argument, "m_p needs p >= 5");
    detail::require_odd_prime(p, "m_p");
    auto inv = inverse_table(p);
    i64 lo = exclude_self_inverse ? 2 : 1;
    i64 hi = exclude_self_inverse ? p - 2 : p - 1;
    i64 best = p;
    for (i64 x = lo; x <= hi; ++x) {
        if (x >= best) break;   // max(x, inv) >= x, so nothing better remains
        best = std::min(best, std::max(x, inv[size_t(x)]));
    }
    return best;
}

// ---------------------------------------------------------------------------
// SieveSystem: for each p | q the forbidden classes Omega_p. Empty sets are
// allowed (the prime imposes no constraint); |Omega_p| = p is not.
// ---------------------------------------------------------------------------
class SieveSystem {
public:
    SieveSystem(SquareFreeModulus modulus, std::map<i64, std::vector<i64>> forbidden)
        : modulus_(std::move(modulus)) {
        forbidden_.resize(modulus_.primes().size());
        for (auto& [p, classes] : forbidden) {
            auto it = std::find(modulus_.primes().begin(), modulus_.primes().end(), p);
            if (it == modulus_.primes().end())
                fail(errc::bad_argument, std::to_string(p) + " does not divide the modulus");
            size_t idx = size_t(it - modulus_.primes().begin());
            std::vector<i64> norm;
            norm.reserve(classes.size());
            for (i64 c : classes) {
                i64 r = c % p;
                if (r < 0) r += p;
                norm.push_back(r);
            }
            std::sort(norm.begin(), norm.end());
            norm.erase(std::unique(norm.begin(), norm.end()), norm.end());
            if (i64(norm.size()) >= p)
                fail(errc::bad_argument, "forbidden classes cover all of Z/" + std::to_string(p));
            forbidden_[idx] = std::move(norm);
        }
    }

    const SquareFreeModulus& modulus() const { return modulus_; }
    const std::vector<i64>& forbidden(size_t prime_index) const { return forbidden_[prime_index]; }

    // prod_p (p - |Omega_p|) / p, exactly
    Rational sifted_density() const {
        Rational d(1);
        for (size_t i = 0; i < forbidden_.size(); ++i) {
            i64 p = modulus_.primes()[i];
            d = d * Rational(p - i64(forbidden_[i].size()), p);
        }
        return d;
    }

    // prod_p (p - |Omega_p|), exactly
    u128 sifted_size() const {
        u128 n = 1;
        for (size_t i = 0; i < forbidden_.size(); ++i)
            n *= u128(modulus_.primes()[i] - i64(forbidden_[i].size()));
        return n;
    }

    bool keeps(i64 n) const {
        for (size_t i = 0; i < forbidden_.size(); ++i) {
            i64 r = n % modulus_.primes()[i];
            if (std::binary_search(forbidden_[i].begin(), forbidden_[i].end(), r)) return false;
        }
        return true;
    }

private:
    SquareFreeModulus modulus_;
    std::vector<std::vector<i64>> forbidden_;
};

inline SieveSystem sieve_empty(SquareFreeModulus m) {
    return SieveSystem(std::move(m), {});
}

inline SieveSystem sieve_squares(SquareFreeModulus m) {
    std::map<i64, std::vector<i64>> f;
    for (i64 p : m.primes()) f[p] = omega_nonresidues(p);
    return SieveSystem(std::move(m), std::move(f));
}

inline SieveSystem sieve_evens(SquareFreeModulus m) {
    std::map<i64, std::vector<i64>> f;
    for (i64 p : m.primes()) f[p] = omega_evens(p);
    return SieveSystem(std::move(m), std::move(f));
}

// survivors lie in Omega_{K,p} mod every p: forbid its complement
inline SieveSystem sieve_kloosterman(SquareFreeModulus m) {
    std::map<i64, std::vector<i64>> f;
    for (i64 p : m.primes()) f[p] = complement_in_zp(p, omega_kloosterman(p));
    return SieveSystem(std::move(m), std::move(f));
}

// survivors lie in the wraparound-free set Omega'_{K,p} mod every p
inline SieveSystem sieve_kloosterman_prime(SquareFreeModulus m) {
    std::map<i64, std::vector<i64>> f;
    for (i64 p : m.primes()) f[p] = complement_in_zp(p, omega_prime_kloosterman(p));
    return SieveSystem(std::move(m), std::move(f));
}

// ---------------------------------------------------------------------------
// AdmissibleTuple: D = {h_1, ..., h_s} with its reductions D_p and
// multiplicities nu_p(D) per prime of the modulus.
// ---------------------------------------------------------------------------
class AdmissibleTuple {
public:
    AdmissibleTuple(SquareFreeModulus modulus, std::vector<i64> elements)
        : modulus_(std::move(modulus)), elements_(std::move(elements)) {
        if (elements_.empty()) fail(errc::bad_argument, "tuple needs at least one element");
        for (i64 h : elements_)
            if (h < 0) fail(errc::bad_argument, "tuple elements must be non-negative");
        std::sort(elements_.begin(), elements_.end());
        if (std::adjacent_find(elements_.begin(), elements_.end()) != elements_.end())
            fail(errc::bad_argument, "tuple elements must be distinct");
        per_prime_.resize(modulus_.primes().size());
        for (size_t i = 0; i < per_prime_.size(); ++i) {
            i64 p = modulus_.primes()[i];
            std::vector<i64> red;
            red.reserve(elements_.size());
            for (i64 h : elements_) red.push_back(h % p);
            std::sort(red.begin(), red.end());
            red.erase(std::unique(red.begin(), red.end()), red.end());
            if (i64(red.size()) >= p)
                fail(errc::bad_argument,
                     "tuple occupies every class mod " + std::to_string(p) + "; not admissible");
            per_prime_[i] = std::move(red);
        }
    }

    const SquareFreeModulus& modulus() const { return modulus_; }
    const std::vector<i64>& elements() const { return elements_; }
    i64 s() const { return i64(elements_.size()); }
    const std::vector<i64>& reduction(size_t prime_index) const { return per_prime_[prime_index]; }
    i64 nu(size_t prime_index) const { return i64(per_prime_[prime_index].size()); }

    // P_D = prod_p (p - nu_p(D)) / q
    Rational density() const {
        Rational d(1);
        for (size_t i = 0; i < per_prime_.size(); ++i) {
            i64 p = modulus_.primes()[i];
            d = d * Rational(p - nu(i), p);
        }
        return d;
    }

private:
    SquareFreeModulus modulus_;
    std::vector<i64> elements_;
    std::vector<std::vector<i64>> per_prime_;
};

// The CRT tuple realizing a sieve system: D_p = {-w mod p : w in Omega_p},
// with positions beyond |Omega_p| padded by repeating the last class.
// Satisfies: prod_i k_q(m + h_i) = 1  <=>  m avoids every Omega_p.
inline AdmissibleTuple admissible_from_sieve(const SieveSystem& sys) {
    const auto& primes = sys.modulus().primes();
    size_t s = 0;
    for (size_t i = 0; i < primes.size(); ++i) {
        if (sys.forbidden(i).empty())
            fail(errc::empty_omega, "padding rule needs a non-empty class set at every prime");
        s = std::max(s, sys.forbidden(i).size());
    }
    std::vector<i64> elements;
    elements.reserve(s);
    for (size_t i = 0; i < s; ++i) {
        std::vector<std::pair<i64, i64>> residues;
        for (size_t j = 0; j < primes.size(); ++j) {
            const auto& omega = sys.forbidden(j);
            i64 w = omega[std::min(i, omega.size() - 1)];
            residues.emplace_back((primes[j] - w) % primes[j], primes[j]);
        }
        elements.push_back(crt_combine(residues));
    }
    return AdmissibleTuple(sys.modulus(), std::move(elements));
}

// The sieve system realized by a tuple: Omega_p = {-h mod p : h in D}.
inline SieveSystem sieve_from_tuple(const AdmissibleTuple& tuple) {
    std::map<i64, std::vector<i64>> f;
    const auto& primes = tuple.modulus().primes();
    for (size_t i = 0; i < primes.size(); ++i) {
        i64 p = primes[i];
        std::vector<i64> omega;
        for (i64 d : tuple.reduction(i)) omega.push_back((p - d) % p);
        f[p] = std::move(omega);
    }
    return SieveSystem(tuple.modulus(), std::move(f));
}

// ---------------------------------------------------------------------------
// SiftedSet: the members of [0, q) avoiding every forbidden class, sorted.
// ---------------------------------------------------------------------------
struct SiftedSet {
    SquareFreeModulus modulus;
    std::vector<i64> members;
    std::optional<SieveSystem> source;

    i64 q() const { return modulus.q(); }
    i64 size() const { return i64(members.size()); }
    Rational mean_spacing() const { return Rational(modulus.q(), size()); }
};

enum class SiftStrategy { automatic, scan, product };

namespace detail {

inline std::vector<i64> sift_scan(const SieveSystem& sys) {
    const auto& primes = sys.modulus().primes();
    i64 q = sys.modulus().q();
    // per-prime forbidden masks, walked with wrapping counters: no division
    // in the hot loop
    std::vector<std::vector<char>> mask(primes.size());
    for (size_t i = 0; i < primes.size(); ++i) {
        mask[i].assign(size_t(primes[i]), 0);
        for (i64 w : sys.forbidden(i)) mask[i][size_t(w)] = 1;
    }
    std::vector<i64> out;
    out.reserve(size_t(sys.sifted_size()));
    std::vector<i64> r(primes.size(), 0);
    for (i64 n = 0; n < q; ++n) {
        bool keep = true;
        for (size_t i = 0; i < primes.size(); ++i)
            if (mask[i][size_t(r[i])]) { keep = false; break; }
        if (keep) out.push_back(n);
        for (size_t i = 0; i < primes.size(); ++i)
            if (++r[i] == primes[i]) r[i] = 0;
    }
    return out;
}

inline std::vector<i64> sift_product(const SieveSystem& sys) {
    const auto& primes = sys.modulus().primes();
    i64 q = sys.modulus().q();
    std::vector<std::vector<i64>> allowed(primes.size());
    std::vector<i64> basis(primes.size());
    for (size_t i = 0; i < primes.size(); ++i) {
        allowed[i] = complement_in_zp(primes[i], sys.forbidden(i));
        i64 qp = q / primes[i];
        basis[i] = i64(mulmod_u64(u64(qp % q), u64(mod_inverse(qp, primes[i])), u64(q)));
    }
    std::vector<i64> out;
    out.reserve(size_t(sys.sifted_size()));
    // odometer over allowed residues, carrying partial CRT sums per level
    std::vector<size_t> pos(primes.size(), 0);
    std::vector<i64> partial(primes.size() + 1, 0);
    auto value_at = [&](size_t lvl) {
        i64 v = partial[lvl] + i64(mulmod_u64(u64(allowed[lvl][pos[lvl]]), u64(basis[lvl]), u64(q)));
        if (v >= q) v -= q;
        return v;
    };
    for (size_t lvl = 0; lvl < primes.size(); ++lvl) partial[lvl + 1] = value_at(lvl);
    for (;;) {
        out.push_back(partial[primes.size()]);
        size_t lvl = primes.size();
        while (lvl > 0) {
            --lvl;
            if (++pos[lvl] < allowed[lvl].size()) {
                for (size_t k = lvl; k < primes.size(); ++k) partial[k + 1] = value_at(k);
                break;
            }
            pos[lvl] = 0;
            if (lvl == 0) {
                std::sort(out.begin(), out.end());
                return out;
            }
        }
    }
}

} // namespace detail

inline SiftedSet sift(const SieveSystem& sys, SiftStrategy strategy = SiftStrategy::automatic,
                      i64 cap = kDefaultEnumerationCap) {
    i64 q = sys.modulus().q();
    u128 size = sys.sifted_size();
    if (strategy == SiftStrategy::automatic)
        strategy = (size * 16 < u128(q)) ? SiftStrategy::product : SiftStrategy::scan;
    if (strategy == SiftStrategy::scan && q > cap)
        fail(errc::cap_exceeded, "scan over q=" + std::to_string(q) + " exceeds cap " + std::to_string(cap));
    if (size > u128(cap))
        fail(errc::cap_exceeded, "sifted set of size " + to_string_u128(size) + " exceeds cap");

    std::vector<i64> members = strategy == SiftStrategy::scan ? detail::sift_scan(sys)
                                                              : detail::sift_product(sys);
    if (u128(members.size()) != size)
        fail(errc::bad_argument, "sifted size mismatch: got " + std::to_string(members.size()) +
                                     ", CRT predicts " + to_string_u128(size));
#ifndef NDEBUG
    for (size_t i = 0; i < members.size(); i += std::max<size_t>(1, members.size() / 64))
        if (!sys.keeps(members[i]))
            fail(errc::bad_argument, "member hits a forbidden class");
#endif
    return SiftedSet{sys.modulus(), std::move(members), sys};
}

inline SiftedSet squares_mod(const SquareFreeModulus& m,
                             SiftStrategy strategy = SiftStrategy::automatic,
                             i64 cap = kDefaultEnumerationCap) {
    return sift(sieve_squares(m), strategy, cap);
}

} // namespace qsift
