#pragma once

// Spectral kernel: window exponential sums E(a/r) with their Fejer majorant,
// the product weights mu_D(a, r), the exact divisor-sum identity for the
// indicator of s-tuples of reduced residues, Fourier coefficients of
// forbidden-class sets with the additive-structure classifier, and the
// wraparound Kloosterman Fourier sum with its closed-form companions.

#include <algorithm>
#include <memory>
#include <optional>
#include <vector>

#include "qsift/residue_sets.hpp"

namespace qsift {

// ---------------------------------------------------------------------------
// Window sums E(x) = sum_{m=1}^{h} e(mx) at rational x = a/r.
// ---------------------------------------------------------------------------

// Geometric closed form; all argument reductions happen in exact integers so
// the result keeps full double accuracy for any h.
inline cplx window_sum(i64 a, i64 r, i64 h) {
    if (r <= 0 || h < 0) fail(errc::bad_argument, "window_sum needs r > 0, h >= 0");
    i64 ar = ((a % r) + r) % r;
    if (ar == 0) return {double(h), 0.0};
    // E = e(a(h+1)/(2r)) * sin(pi h a / r) / sin(pi a / r)
    i64 s = i64((u128(ar) * u128(h)) % u128(r));                 // h*a mod r
    i64 k = i64(((u128(ar) * u128(h)) / u128(r)) % 2);           // parity of the wraps
    double num = std::sin(std::numbers::pi * double(s) / double(r));
    if (k == 1) num = -num;
    double den = std::sin(std::numbers::pi * double(ar) / double(r));
    i64 t = i64((u128(ar) * u128(h + 1)) % u128(2 * r));         // a(h+1) mod 2r
    double ang = std::numbers::pi * double(t) / double(r);
    return cplx{std::cos(ang), std::sin(ang)} * (num / den);
}

// |E(a/r)|^2 = sin^2(pi h a / r) / sin^2(pi a / r)
inline double window_sum_abs2(i64 a, i64 r, i64 h) {
    if (r <= 0 || h < 0) fail(errc::bad_argument, "window_sum needs r > 0, h >= 0");
    i64 ar = ((a % r) + r) % r;
    if (ar == 0) return double(h) * double(h);
    i64 s = i64((u128(ar) * u128(h)) % u128(r));
    double num = std::sin(std::numbers::pi * double(s) / double(r));
    double den = std::sin(std::numbers::pi * double(ar) / double(r));
    return (num * num) / (den * den);
}

// F(x) = min(h, 1 / ||a/r||), with F = h on integers.
inline double fejer_majorant(i64 a, i64 r, i64 h) {
    if (r <= 0 || h < 0) fail(errc::bad_argument, "fejer_majorant needs r > 0, h >= 0");
    i64 ar = ((a % r) + r) % r;
    if (ar == 0) return double(h);
    i64 m = std::min(ar, r - ar);     // ||a/r|| = m / r
    if (i128(h) * m <= i128(r)) return double(h);
    return double(r) / double(m);
}

// ---------------------------------------------------------------------------
// mu_D(a, r) = prod_{p|r} sum_{s in D_p} e(s a (r/p)^{-1}_p / p)
// ---------------------------------------------------------------------------
struct SpectralWeight {
    i64 a = 0;
    i64 r = 1;
    cplx value{1.0, 0.0};
};

inline SpectralWeight mu_weight(const AdmissibleTuple& d, i64 a, i64 r) {
    i64 q = d.modulus().q();
    if (r <= 1) fail(errc::not_divisor, "r must exceed 1");
    if (q % r != 0) fail(errc::not_divisor, std::to_string(r) + " does not divide the modulus");
    if (int_gcd<i64>(((a % r) + r) % r, r) != 1) fail(errc::non_coprime, "a and r share a factor");
    cplx value{1.0, 0.0};
    double trivial_bound = 1.0;
    const auto& primes = d.modulus().primes();
    for (size_t i = 0; i < primes.size(); ++i) {
        i64 p = primes[i];
        if (r % p != 0) continue;
        i64 binv = mod_inverse((r / p) % p, p);
        i64 mult = i64(mulmod_u64(u64(((a % p) + p) % p), u64(binv), u64(p)));
        PhaseTable tbl(p);
        KahanComplexSum local;
        for (i64 s : d.reduction(i))
            local.add(tbl.at(i64(mulmod_u64(u64(s), u64(mult), u64(p)))));
        value *= local.value();
        trivial_bound *= double(d.nu(i));
    }
    if (std::abs(value) > trivial_bound * (1.0 + 1e-12) + 1e-9)
        fail(errc::numerical_instability, "mu weight exceeds its term-count bound");
    return SpectralWeight{a, r, value};
}

// ---------------------------------------------------------------------------
// The exact identity for prod_i k_q(m + h_i): a Moebius divisor sum over
// r | q with weights mu_D(a, r). Table construction is O(q * omega), each
// evaluation one pass over the q coprime pairs (a, r).
// ---------------------------------------------------------------------------
class TupleIndicatorEvaluator {
public:
    explicit TupleIndicatorEvaluator(const AdmissibleTuple& d)
        : q_(d.modulus().q()), density_(d.density()) {
        const auto& primes = d.modulus().primes();
        size_t np = primes.size();

        // local sums S_p[b] = sum_{s in D_p} e(s b / p)
        std::vector<std::vector<cplx>> local(np);
        for (size_t i = 0; i < np; ++i) {
            i64 p = primes[i];
            PhaseTable tbl(p);
            local[i].resize(size_t(p));
            for (i64 b = 0; b < p; ++b) {
                KahanComplexSum acc;
                for (i64 s : d.reduction(i))
                    acc.add(tbl.at(i64(mulmod_u64(u64(s), u64(b), u64(p)))));
                local[i][size_t(b)] = acc.value();
            }
        }

        // one block per divisor r > 1 of q
        for (u64 bits = 1; bits < (u64(1) << np); ++bits) {
            Block blk;
            i64 r = 1;
            int mu = 1;
            std::vector<size_t> idx;
            for (size_t i = 0; i < np; ++i)
                if (bits >> i & 1) { r *= primes[i]; mu = -mu; idx.push_back(i); }
            blk.r = r;
            i64 phi_d = 1;
            for (size_t i : idx) phi_d *= primes[i] - d.nu(i);
            if (phi_d == 0)
                fail(errc::bad_argument, "tuple occupies every class at some prime of r");
            double scale = double(mu) / double(phi_d);

            std::vector<i64> binv_mult(idx.size());
            for (size_t k = 0; k < idx.size(); ++k) {
                i64 p = primes[idx[k]];
                binv_mult[k] = mod_inverse((r / p) % p, p);
            }
            for (i64 a = 1; a <= r; ++a) {
                bool coprime = true;
                for (size_t k = 0; k < idx.size() && coprime; ++k)
                    coprime = a % primes[idx[k]] != 0;
                if (!coprime) continue;
                cplx w{scale, 0.0};
                for (size_t k = 0; k < idx.size(); ++k) {
                    i64 p = primes[idx[k]];
                    i64 b = i64(mulmod_u64(u64(a % p), u64(binv_mult[k]), u64(p)));
                    w *= local[idx[k]][size_t(b)];
                }
                blk.terms.emplace_back(a % r, w);   // a = r stands for 0 mod r
            }
            blk.phases = std::make_shared<PhaseTable>(r);
            blocks_.push_back(std::move(blk));
        }
    }

    i64 q() const { return q_; }
    const Rational& density() const { return density_; }

    // full divisor-sum value at m, before the {0,1} contract is enforced
    cplx evaluate_raw(i64 m) const {
        i64 mr = ((m % q_) + q_) % q_;
        cplx total{1.0, 0.0};   // r = 1 term
        for (const auto& blk : blocks_) {
            cplx s{0.0, 0.0};
            for (const auto& [a, w] : blk.terms)
                s += w * blk.phases->at(i64(mulmod_u64(u64(mr % blk.r), u64(a), u64(blk.r))));
            total += s;
        }
        return total * density_.to_double();
    }

    // the identity value, checked to be real and within tol of {0, 1}
    double evaluate(i64 m, double tol = 1e-8) const {
        cplx v = evaluate_raw(m);
        if (std::abs(v.imag()) > tol)
            fail(errc::numerical_instability, "indicator has imaginary part " + std::to_string(v.imag()));
        double re = v.real();
        if (std::abs(re) > tol && std::abs(re - 1.0) > tol)
            fail(errc::numerical_instability, "indicator value " + std::to_string(re) + " is not near {0,1}");
        return re;
    }

private:
    struct Block {
        i64 r = 1;
        std::vector<std::pair<i64, cplx>> terms;
        std::shared_ptr<PhaseTable> phases;
    };

    i64 q_;
    Rational density_;
    std::vector<Block> blocks_;
};

inline double tuple_indicator_divisor_sum(i64 m, const AdmissibleTuple& d, double tol = 1e-8) {
    return TupleIndicatorEvaluator(d).evaluate(m, tol);
}

// left-hand side of the identity: gcd test against every shifted element
inline int tuple_indicator_gcd(i64 m, const AdmissibleTuple& d) {
    for (i64 h : d.elements())
        if (int_gcd<i64>(((m + h) % d.modulus().q() + d.modulus().q()) % d.modulus().q(),
                         d.modulus().q()) != 1)
            return 0;
    return 1;
}

// ---------------------------------------------------------------------------
// Fourier coefficients of subsets of Z/pZ and the additive-structure verdict
// ---------------------------------------------------------------------------

inline cplx fourier_coefficient(const std::vector<i64>& omega, i64 a, i64 p) {
    i64 ar = ((a % p) + p) % p;
    PhaseTable tbl(p);
    KahanComplexSum acc;
    for (i64 x : omega) acc.add(tbl.at(i64(mulmod_u64(u64(ar), u64(((x % p) + p) % p), u64(p)))));
    return acc.value();
}

enum class StructureKind { not_additively_structured, additively_structured, indeterminate };

inline const char* structure_kind_name(StructureKind k) {
    switch (k) {
        case StructureKind::not_additively_structured: return "NotAdditivelyStructured";
        case StructureKind::additively_structured:     return "AdditivelyStructured";
        case StructureKind::indeterminate:             return "Indeterminate";
    }
    return "?";
}

struct StructureVerdict {
    StructureKind kind = StructureKind::indeterminate;
    i64 p = 0;
    i64 witness_a = 0;        // frequency attaining the max magnitude
    double max_magnitude = 0.0;
    double c_threshold = 0.0; // NotAdditivelyStructured iff max < c * sqrt(p)
    double C_threshold = 0.0; // AdditivelyStructured iff max >= C * p
};

// Scans all nontrivial frequencies. Default thresholds c = log p and
// C = 1/log p leave an explicit indeterminate band between the two regimes.
inline StructureVerdict classify_structure(const std::vector<i64>& omega, i64 p,
                                           std::optional<double> c_threshold = std::nullopt,
                                           std::optional<double> C_threshold = std::nullopt) {
    if (omega.empty() || i64(omega.size()) >= p)
        fail(errc::bad_argument, "set must be a proper non-empty subset of Z/pZ");
    PhaseTable tbl(p);
    double best = -1.0;
    i64 witness = 0;
    for (i64 a = 1; a < p; ++a) {
        KahanComplexSum acc;
        for (i64 x : omega) acc.add(tbl.at(i64(mulmod_u64(u64(a), u64(((x % p) + p) % p), u64(p)))));
        double mag2 = std::norm(acc.value());
        if (mag2 > best) { best = mag2; witness = a; }
    }
    StructureVerdict v;
    v.p = p;
    v.witness_a = witness;
    v.max_magnitude = std::sqrt(best);
    v.c_threshold = c_threshold.value_or(std::log(double(p)));
    v.C_threshold = C_threshold.value_or(1.0 / std::log(double(p)));
    // at desk scale the two regimes overlap (c sqrt(p) can exceed C p); a
    // coefficient of size C p is the stronger signal, so test it first
    if (v.max_magnitude >= v.C_threshold * double(p))
        v.kind = StructureKind::additively_structured;
    else if (v.max_magnitude < v.c_threshold * std::sqrt(double(p)))
        v.kind = StructureKind::not_additively_structured;
    else
        v.kind = StructureKind::indeterminate;
    return v;
}

// ---------------------------------------------------------------------------
// Wraparound Kloosterman Fourier sum and the B-hat closed forms
// ---------------------------------------------------------------------------

// sum over x in [1, p-1] with x + x^{-1} >= p (integer sum) of
// e(-(x + x^{-1})/p). Summed over x by default, matching the double-sum
// normalization whose main term is i p / (2 pi); over_set sums each distinct
// value once instead.
inline cplx wraparound_fourier(i64 p, bool over_set = false) {
    detail::require_odd_prime(p, "wraparound_fourier");
    auto inv = inverse_table(p);
    PhaseTable tbl(p);
    KahanComplexSum acc;
    if (over_set) {
        std::vector<i64> seen;
        for (i64 x = 1; x < p; ++x) {
            i64 s = x + inv[size_t(x)];
            if (s >= p) seen.push_back(s % p);
        }
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (i64 s : seen) acc.add(tbl.at((p - s) % p));
    } else {
        for (i64 x = 1; x < p; ++x) {
            i64 s = x + inv[size_t(x)];
            if (s >= p) acc.add(tbl.at((p - s % p) % p));
        }
    }
    return acc.value();
}

// B-hat(a, b) = sum over 0 <= x, y < p with x + y > p of e(((a-1)x + (b-1)y)/p),
// by the closed forms. Symmetric in (a, b).
inline cplx b_hat(i64 a, i64 b, i64 p) {
    i64 an = ((a % p) + p) % p;
    i64 bn = ((b % p) + p) % p;
    if (an == 1 && bn == 1) return {double(p - 1) * double(p - 2) / 2.0, 0.0};
    if (bn == 1) std::swap(an, bn);
    cplx zeta = unit_phase(bn - 1, p);
    cplx t1 = an == 1 ? cplx{double(p - 1), 0.0} : cplx{-1.0, 0.0};
    cplx t2 = an == bn ? double(p - 1) * zeta : -zeta;
    return (t1 - t2) / (zeta - cplx{1.0, 0.0});
}

// direct double-sum oracle, O(p^2)
inline cplx b_hat_direct(i64 a, i64 b, i64 p) {
    if (p > 300) fail(errc::cap_exceeded, "direct B-hat oracle is capped at p <= 300");
    i64 an = ((a % p) + p) % p;
    i64 bn = ((b % p) + p) % p;
    PhaseTable tbl(p);
    KahanComplexSum acc;
    for (i64 x = 0; x < p; ++x)
        for (i64 y = p + 1 - x; y < p; ++y) {
            i64 k = i64((u128(an + p - 1) * u128(x) + u128(bn + p - 1) * u128(y)) % u128(p));
            acc.add(tbl.at(k));
        }
    return acc.value();
}

} // namespace qsift
