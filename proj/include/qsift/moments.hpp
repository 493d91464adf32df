#pragma once

// Window-count statistics of sifted sets: exact sliding-window power sums,
// central moments recombined exactly around rational centers, the spectral
// route to the variance, the closed-form bound evaluators, and the gap and
// spacing statistics.

#include <map>
#include <optional>

#include "qsift/spectral.hpp"

namespace qsift {

inline std::atomic<u64>& window_counts_invocations() {
    static std::atomic<u64> n{0};
    return n;
}

// ---------------------------------------------------------------------------
// WindowStatistics: exact integer power sums S_j = sum_n count(n)^j over all
// q circular windows (n, n+h], with central moments formed by exact binomial
// expansion around a rational center. Floating point enters only at the end.
// ---------------------------------------------------------------------------
class WindowStatistics {
public:
    WindowStatistics(i64 q, i64 h, i64 set_size, int kmax, std::vector<u128> power_sums)
        : q_(q), h_(h), set_size_(set_size), kmax_(kmax), s_(std::move(power_sums)) {}

    i64 q() const { return q_; }
    i64 h() const { return h_; }
    i64 set_size() const { return set_size_; }
    int kmax() const { return kmax_; }
    u128 power_sum(int j) const {
        if (j < 0 || j > kmax_) fail(errc::bad_argument, "power sum order out of range");
        return s_[size_t(j)];
    }
    u128 sum_counts() const { return s_[1]; }

    // exact mean h |A| / q
    Rational mean() const { return Rational(i128(h_) * set_size_, q_); }

    // M_k around an arbitrary rational center:
    //   M_k = cd^{-k} * sum_j binom(k,j) S_j cd^j (-cn)^{k-j}
    double central_moment_total(int k, const Rational& center) const {
        if (k < 1 || k > kmax_) fail(errc::bad_argument, "moment order exceeds accumulator width");
        if (center.num < 0) fail(errc::bad_argument, "negative center");
        u64 cn = u64(center.num), cd = u64(center.den);
        Int256 acc;
        u64 binom = 1;
        for (int j = 0; j <= k; ++j) {
            Int256 term = Int256::from_u128(s_[size_t(j)]);
            term.mul_u64(binom);
            for (int t = 0; t < k - j; ++t) term.mul_u64(cn);
            for (int t = 0; t < j; ++t) term.mul_u64(cd);
            term.neg = ((k - j) % 2 == 1) && cn != 0 && !term.is_zero();
            acc.accumulate(term);
            binom = binom * u64(k - j) / u64(j + 1);
        }
        long double denom = 1.0L;
        for (int t = 0; t < k; ++t) denom *= (long double)cd;
        return double(acc.to_long_double() / denom);
    }

    double central_moment_total(int k) const { return central_moment_total(k, mean()); }
    double central_moment_normalized(int k) const { return central_moment_total(k) / double(q_); }
    double variance() const { return central_moment_normalized(2); }

private:
    i64 q_, h_, set_size_;
    int kmax_;
    std::vector<u128> s_;
};

// Exact counts over all q circular windows by a sliding sweep over the
// sorted member list. [0, q) is cut into fixed-size chunks; each chunk seeds
// its own window by binary search and the integer accumulators merge by
// addition, so the result is bit-exact under any schedule.
inline WindowStatistics window_counts(const SiftedSet& a, i64 h, int kmax = 2,
                                      i64 cap = kDefaultEnumerationCap) {
    i64 q = a.q();
    if (h <= 0 || h >= q) fail(errc::bad_argument, "window length must satisfy 0 < h < q");
    if (q > cap) fail(errc::cap_exceeded, "window sweep over q=" + std::to_string(q) + " exceeds cap");
    if (kmax < 1 || kmax > 8) fail(errc::bad_argument, "moment accumulators support k in [1,8]");
    long double bits = (std::log2l((long double)q) + kmax * std::log2l((long double)std::max<i64>(h, 2)));
    if (bits > 126.0L) fail(errc::cap_exceeded, "q*h^k overflows the 128-bit accumulators");

    const auto& mem = a.members;
    i64 n_mem = a.size();
    if (n_mem == 0) fail(errc::degenerate_set, "empty set");

    auto upper = [&](i64 v) { return i64(std::upper_bound(mem.begin(), mem.end(), v) - mem.begin()); };
    // enter positions live in doubled value space [0, 2q): index i >= n_mem
    // stands for member mem[i - n_mem] + q
    auto enter_value = [&](i64 i) { return i < n_mem ? mem[size_t(i)] : mem[size_t(i - n_mem)] + q; };

    auto sweep_chunk = [&](i64 lo, i64 hi) {
        std::vector<u128> s(size_t(kmax) + 1, 0);
        s[0] = u128(u64(hi - lo));
        // count for the window (lo, lo + h], which may wrap
        i64 c;
        if (lo + h < q) {
            c = upper(lo + h) - upper(lo);
        } else {
            c = (n_mem - upper(lo)) + upper(lo + h - q);
        }
        i64 leave = i64(std::lower_bound(mem.begin(), mem.end(), lo + 1) - mem.begin());
        i64 w0 = lo + h + 1;   // first entering value, in doubled space
        i64 enter = w0 <= mem.back()
                        ? i64(std::lower_bound(mem.begin(), mem.end(), w0) - mem.begin())
                        : n_mem + i64(std::lower_bound(mem.begin(), mem.end(), w0 - q) - mem.begin());
        for (i64 n = lo; n < hi; ++n) {
            u128 pw = 1;
            for (int j = 1; j <= kmax; ++j) {
                pw *= u128(u64(c));
                s[size_t(j)] += pw;
            }
            if (n + 1 == hi) break;   // the next window belongs to the next chunk
            if (leave < n_mem && mem[size_t(leave)] == n + 1) { --c; ++leave; }
            if (enter < 2 * n_mem && enter_value(enter) == n + 1 + h) { ++c; ++enter; }
        }
        return s;
    };

    i64 chunk = 1 << 16;
    auto partials = chunked_map<std::vector<u128>>(q, chunk, sweep_chunk);
    std::vector<u128> s(size_t(kmax) + 1, 0);
    for (const auto& part : partials)
        for (int j = 0; j <= kmax; ++j) s[size_t(j)] += part[size_t(j)];

    if (s[1] != u128(u64(h)) * u128(u64(n_mem)))
        fail(errc::bad_argument, "window mean identity violated (internal)");
    window_counts_invocations().fetch_add(1, std::memory_order_relaxed);
    return WindowStatistics(q, h, n_mem, kmax, std::move(s));
}

inline double central_moment(const WindowStatistics& stats, int k) {
    return stats.central_moment_total(k);
}

// ---------------------------------------------------------------------------
// Spectral route to the variance: the exact divisor-sum identity
//   M_2 = q P_D^2 sum_{r|q', r>1} phi_D(r)^{-2} sum_a |E(a/r) mu_D(a,r)|^2
// with q' the product of the primes whose class sets are non-empty.
// ---------------------------------------------------------------------------
inline double variance_spectral(const SieveSystem& sys, i64 h,
                                i64 cap = kDefaultEnumerationCap) {
    const auto& primes = sys.modulus().primes();
    i64 q = sys.modulus().q();
    if (h <= 0) fail(errc::bad_argument, "h must be positive");

    std::vector<size_t> active;
    i64 q_active = 1;
    for (size_t i = 0; i < primes.size(); ++i)
        if (!sys.forbidden(i).empty()) { active.push_back(i); q_active *= primes[i]; }
    if (active.empty()) return 0.0;
    if (q_active > cap)
        fail(errc::cap_exceeded, "divisor sum has " + std::to_string(q_active) + " terms");

    // local tables W_p[b] = sum_{w in Omega_p} e(-w b / p) = sum_{s in D_p} e(s b / p)
    std::vector<std::vector<cplx>> local(active.size());
    for (size_t k = 0; k < active.size(); ++k) {
        i64 p = primes[active[k]];
        PhaseTable tbl(p);
        local[k].resize(size_t(p));
        for (i64 b = 0; b < p; ++b) {
            KahanComplexSum acc;
            for (i64 w : sys.forbidden(active[k]))
                acc.add(tbl.at(i64(mulmod_u64(u64((p - w) % p), u64(b), u64(p)))));
            local[k][size_t(b)] = acc.value();
        }
    }

    // one term per divisor r > 1 of the active product; blocks evaluate
    // independently and merge in divisor order (deterministic reduction)
    size_t np = active.size();
    auto block_value = [&](i64 lo, i64 hi) {
        KahanSum chunk_total;
        for (i64 blk = lo; blk < hi; ++blk) {
            u64 bits = u64(blk) + 1;
            i64 r = 1;
            i64 phi_d = 1;
            std::vector<size_t> idx;
            for (size_t k = 0; k < np; ++k)
                if (bits >> k & 1) {
                    i64 p = primes[active[k]];
                    r *= p;
                    phi_d *= p - i64(sys.forbidden(active[k]).size());
                    idx.push_back(k);
                }
            std::vector<i64> mult(idx.size());
            std::vector<i64> pr(idx.size());
            for (size_t k = 0; k < idx.size(); ++k) {
                pr[k] = primes[active[idx[k]]];
                mult[k] = mod_inverse((r / pr[k]) % pr[k], pr[k]);
            }
            KahanSum inner;
            for (i64 a = 1; a < r; ++a) {
                bool coprime = true;
                for (size_t k = 0; k < idx.size() && coprime; ++k) coprime = a % pr[k] != 0;
                if (!coprime) continue;
                double w2 = 1.0;
                for (size_t k = 0; k < idx.size(); ++k) {
                    i64 b = i64(mulmod_u64(u64(a % pr[k]), u64(mult[k]), u64(pr[k])));
                    w2 *= std::norm(local[idx[k]][size_t(b)]);
                }
                inner.add(window_sum_abs2(a, r, h) * w2);
            }
            chunk_total.add(inner.value() / (double(phi_d) * double(phi_d)));
        }
        return chunk_total.value();
    };
    i64 nblocks = i64((u64(1) << np) - 1);
    auto partials = chunked_map<double>(nblocks, 1, block_value);
    KahanSum total;
    for (double v : partials) total.add(v);
    double pd = sys.sifted_density().to_double();
    return double(q) * pd * pd * total.value();
}

// ---------------------------------------------------------------------------
// Closed-form bound evaluators
// ---------------------------------------------------------------------------

struct SquaresVarianceBounds {
    double upper = 0.0;                     // (h / (2^w P)) prod (1 + 1/sqrt p)
    double lower = 0.0;                     // (h / (4^w P)) sum_{r|q, r>h^2} prod_{p|r} (1 - 3/sqrt p)
    std::optional<double> upper_3mod4;      // h / (2^w P^2), only when every p = 3 mod 4
};

inline SquaresVarianceBounds squares_variance_bounds(const SquareFreeModulus& m, i64 h) {
    const auto& primes = m.primes();
    int w = m.omega();
    Rational p_rat = m.density_coprime();

    SquaresVarianceBounds out;
    double root_prod = 1.0;
    for (i64 p : primes) root_prod *= 1.0 + 1.0 / std::sqrt(double(p));
    double pow2 = std::ldexp(1.0, w);
    out.upper = double(h) / (pow2 * p_rat.to_double()) * root_prod;

    double divisor_sum = 0.0;
    size_t np = primes.size();
    for (u64 bits = 1; bits < (u64(1) << np); ++bits) {
        i128 r = 1;
        double prod = 1.0;
        for (size_t i = 0; i < np; ++i)
            if (bits >> i & 1) {
                r *= primes[i];
                prod *= 1.0 - 3.0 / std::sqrt(double(primes[i]));
            }
        if (r > i128(h) * h) divisor_sum += prod;
    }
    out.lower = double(h) / (pow2 * pow2 * p_rat.to_double()) * divisor_sum;

    if (m.all_primes_3_mod_4()) {
        Rational p2 = p_rat * p_rat;
        out.upper_3mod4 = double(h) / (pow2 * p2.to_double());
    }
    return out;
}

// q h prod_p ((1 - c'_p)^2 + c_p^2) with c'_p = |Omega_p| / p and caller-
// certified Fourier constants c_p.
inline double general_variance_upper(const SieveSystem& sys, i64 h,
                                     const std::map<i64, double>& c_p) {
    const auto& primes = sys.modulus().primes();
    double prod = 1.0;
    for (size_t i = 0; i < primes.size(); ++i) {
        i64 p = primes[i];
        auto it = c_p.find(p);
        if (it == c_p.end()) fail(errc::bad_argument, "missing c_p for prime " + std::to_string(p));
        double cprime = double(sys.forbidden(i).size()) / double(p);
        prod *= (1.0 - cprime) * (1.0 - cprime) + it->second * it->second;
    }
    return double(sys.modulus().q()) * double(h) * prod;
}

// max_a |sum_{w in Omega_p} e(w a / p)| / sqrt(p) for each prime: the
// certified constants to feed general_variance_upper.
inline std::map<i64, double> certified_c_p(const SieveSystem& sys) {
    std::map<i64, double> out;
    const auto& primes = sys.modulus().primes();
    for (size_t i = 0; i < primes.size(); ++i) {
        i64 p = primes[i];
        if (sys.forbidden(i).empty()) { out[p] = 0.0; continue; }
        PhaseTable tbl(p);
        double best = 0.0;
        for (i64 a = 1; a < p; ++a) {
            KahanComplexSum acc;
            for (i64 w : sys.forbidden(i))
                acc.add(tbl.at(i64(mulmod_u64(u64(a), u64(w), u64(p)))));
            best = std::max(best, std::norm(acc.value()));
        }
        out[p] = std::sqrt(best) / std::sqrt(double(p));
    }
    return out;
}

struct TupleMomentBounds {
    double poissonian = 0.0;   // q (h P^s)^{k/2}, valid below the threshold
    double general = 0.0;      // q h^{k/2} P^{sk - s^2 k/2}
    double h_threshold = 0.0;  // exp(1 / (k P^{1/s}))
};

inline TupleMomentBounds tuple_moment_bounds(const SquareFreeModulus& m, i64 h, i64 s, i64 k) {
    if (s < 1 || k < 1) fail(errc::bad_argument, "s and k must be positive");
    double p = m.density_coprime().to_double();
    TupleMomentBounds out;
    out.poissonian = double(m.q()) * std::pow(double(h) * std::pow(p, double(s)), double(k) / 2.0);
    double expo = double(s) * double(k) - double(s) * double(s) * double(k) / 2.0;
    out.general = double(m.q()) * std::pow(double(h), double(k) / 2.0) * std::pow(p, expo);
    out.h_threshold = std::exp(1.0 / (double(k) * std::pow(p, 1.0 / double(s))));
    return out;
}

// ---------------------------------------------------------------------------
// Gap profile and spacing statistics
// ---------------------------------------------------------------------------

// Circular gaps in member order (wraparound gap last); sum of gaps is q.
struct GapProfile {
    i64 q = 0;
    std::vector<i64> gaps;          // in member order
    std::vector<i64> sorted_gaps;

    // V_lambda = sum gaps^lambda, exact
    u128 power_sum(int lambda) const {
        if (lambda < 1 || lambda > 8) fail(errc::bad_argument, "lambda in [1,8]");
        i64 widest = sorted_gaps.empty() ? 0 : sorted_gaps.back();
        long double bits = std::log2l((long double)std::max<i64>(gaps.size(), 1)) +
                           lambda * std::log2l((long double)std::max<i64>(widest, 2));
        if (bits > 126.0L) fail(errc::cap_exceeded, "gap power sum overflows 128 bits");
        u128 total = 0;
        for (i64 g : gaps) {
            u128 pw = 1;
            for (int t = 0; t < lambda; ++t) pw *= u128(u64(g));
            total += pw;
        }
        return total;
    }

    // L(x) = #{gaps > x}
    i64 tail_count(i64 x) const {
        return i64(sorted_gaps.end() -
                   std::upper_bound(sorted_gaps.begin(), sorted_gaps.end(), x));
    }
};

inline GapProfile gap_profile(const SiftedSet& a) {
    if (a.size() < 2) fail(errc::degenerate_set, "need at least two members for gaps");
    GapProfile g;
    g.q = a.q();
    g.gaps.reserve(size_t(a.size()));
    for (i64 i = 0; i + 1 < a.size(); ++i)
        g.gaps.push_back(a.members[size_t(i + 1)] - a.members[size_t(i)]);
    g.gaps.push_back(a.q() - a.members.back() + a.members.front());
    i64 sum = 0;
    for (i64 gp : g.gaps) sum += gp;
    if (sum != a.q()) fail(errc::bad_argument, "gap closure violated (internal)");
    g.sorted_gaps = g.gaps;
    std::sort(g.sorted_gaps.begin(), g.sorted_gaps.end());
    return g;
}

// closed-form cap for the normalized gap second moment: 2^w P log(q) prod (1 + 1/sqrt p)
inline double gap_moment_bound(const SquareFreeModulus& m) {
    double prod = 1.0;
    for (i64 p : m.primes()) prod *= 1.0 + 1.0 / std::sqrt(double(p));
    return std::ldexp(1.0, m.omega()) * m.density_coprime().to_double() *
           std::log(double(m.q())) * prod;
}

// ordered pairs of distinct members with (x1 - x2 mod q) in (s*alpha, s*beta],
// s the mean spacing, divided by |A|.
inline double spacing_statistic(const SiftedSet& a, double alpha, double beta) {
    if (alpha <= 0.0) fail(errc::interval_contains_zero, "interval must satisfy 0 < alpha");
    if (beta <= alpha) fail(errc::bad_argument, "interval needs alpha < beta");
    if (a.size() < 2) fail(errc::degenerate_set, "need at least two members");
    double sbar = double(a.q()) / double(a.size());
    if (sbar * beta >= double(a.q()) / 2.0)
        fail(errc::cap_exceeded, "interval end s*beta must stay below q/2");
    double lo = sbar * alpha, hi = sbar * beta;

    const auto& mem = a.members;
    size_t n = mem.size();
    u64 pairs = 0;
    size_t jlo = 0, jhi = 0;   // positions in the doubled array
    auto value = [&](size_t j) { return j < n ? mem[j] : mem[j - n] + a.q(); };
    for (size_t i = 0; i < n; ++i) {
        if (jlo < i + 1) jlo = i + 1;
        if (jhi < jlo) jhi = jlo;
        while (jlo < 2 * n && double(value(jlo) - mem[i]) <= lo) ++jlo;
        while (jhi < 2 * n && double(value(jhi) - mem[i]) <= hi) ++jhi;
        pairs += u64(jhi - jlo);
    }
    return double(pairs) / double(n);
}

// empirical distribution of consecutive gaps up to max_gap, normalized by the
// number of gaps
inline std::map<i64, double> consecutive_spacing_histogram(const SiftedSet& a, i64 max_gap) {
    auto g = gap_profile(a);
    std::map<i64, i64> counts;
    for (i64 gp : g.gaps)
        if (gp <= max_gap) ++counts[gp];
    std::map<i64, double> freq;
    for (auto [gp, c] : counts) freq[gp] = double(c) / double(g.gaps.size());
    return freq;
}

} // namespace qsift
