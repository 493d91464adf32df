#pragma once

// Tiered verification suite: every acceptance criterion as a pass/fail check
// with a witness string. The quick tier runs the cheap closed-form checks,
// standard adds the identity sweeps and medium grids, deep adds the full
// modulus grid, the Poisson-spacing experiment, and the moment-ratio table.

#include <random>
#include <sstream>

#include "qsift/io.hpp"

namespace qsift {

enum class Tier { quick, standard, deep };

inline Tier tier_from_string(const std::string& s) {
    if (s == "quick") return Tier::quick;
    if (s == "standard") return Tier::standard;
    if (s == "deep") return Tier::deep;
    fail(errc::bad_argument, "unknown tier '" + s + "'");
}

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace verify_detail {

// Calibration constants, frozen from a reference sweep of this suite; the
// observed maxima (minima for the floors) are recorded next to each value.
constexpr double kWraparoundResidualC = 6.0;      // criterion 8; observed max 2.725 at p=4967
constexpr double kKloostermanVarianceFloor = 0.001;      // criterion 9; observed min 0.0177 at p=4001
constexpr double kEvensVarianceFloor = 0.01;          // criterion 10; observed 0.3522
constexpr double kGapRatioCap = 0.3;            // criterion 13; observed max 0.2477 at q=15
constexpr double kMomentGrowthCap = 5.0;            // criterion 14 drift cap along the h grid
inline double moment_ratio_cap(i64 s, i64 k) {      // criterion 14; observed maxima in comments
    if (s == 2 && k == 2) return 0.2;             // 0.1032
    if (s == 2 && k == 4) return 0.15;            // 0.0713
    if (s == 3 && k == 2) return 0.01;            // 0.00376
    if (s == 3 && k == 4) return 0.001;           // 0.000227
    fail(errc::bad_argument, "no calibrated cap for this (s, k)");
}

struct MeanLedger {
    u64 calls = 0;
    u64 failures = 0;
};

inline WindowStatistics checked_window_counts(MeanLedger& led, const SiftedSet& a, i64 h,
                                              int kmax = 2) {
    auto st = window_counts(a, h, kmax);
    ++led.calls;
    if (st.sum_counts() != u128(u64(h)) * u128(u64(st.set_size()))) ++led.failures;
    return st;
}

inline std::vector<i64> primes_in(i64 lo, i64 hi) {
    std::vector<i64> out;
    for (i64 p = lo | 1; p <= hi; p += 2)
        if (is_prime_u64(u64(p))) out.push_back(p);
    return out;
}

// deterministic random admissible tuples for the identity sweeps
inline std::vector<AdmissibleTuple> criterion_tuple_family(const SquareFreeModulus& m) {
    std::vector<AdmissibleTuple> fam;
    fam.emplace_back(m, std::vector<i64>{0});
    fam.push_back(admissible_from_sieve(sieve_squares(m)));
    std::mt19937_64 rng(0xA11CEull ^ u64(m.q()));
    int produced = 0;
    while (produced < 2) {
        size_t s = 2 + size_t(rng() % 3);
        std::vector<i64> elems;
        while (elems.size() < s) {
            i64 h = i64(rng() % u64(m.q()));
            if (std::find(elems.begin(), elems.end(), h) == elems.end()) elems.push_back(h);
        }
        try {
            fam.emplace_back(m, elems);
            ++produced;
        } catch (const error&) {
            // tuple occupied a full residue class set; redraw
        }
    }
    return fam;
}

inline std::string fmt_ratio(double v) { return fmt_g12(v); }

// --------------------------------------------------------------------------
// criterion 1: divisor-sum identity vs the gcd product, full sweeps
// --------------------------------------------------------------------------
inline CheckResult criterion1() {
    CheckResult res{1, "indicator-identity-sweep", true, ""};
    double worst = 0.0;
    std::string witness = "-";
    for (i64 q : {15, 105, 1155, 15015}) {
        auto m = factor_squarefree(q);
        for (const auto& d : criterion_tuple_family(m)) {
            TupleIndicatorEvaluator eval(d);
            for (i64 n = 0; n < q; ++n) {
                double rhs;
                try {
                    rhs = eval.evaluate(n);
                } catch (const error& e) {
                    return {1, res.name, false, std::string(e.what()) + " at q=" + std::to_string(q) +
                                                    " m=" + std::to_string(n)};
                }
                double dev = std::abs(rhs - double(tuple_indicator_gcd(n, d)));
                if (dev > worst) {
                    worst = dev;
                    witness = "q=" + std::to_string(q) + " s=" + std::to_string(d.s()) +
                              " m=" + std::to_string(n);
                }
            }
        }
    }
    res.pass = worst <= 1e-8;
    res.detail = "max |rhs-lhs| = " + fmt_g12(worst) + " at " + witness;
    return res;
}

// --------------------------------------------------------------------------
// criterion 2: spectral variance equals the brute-force second moment
// --------------------------------------------------------------------------
inline CheckResult criterion2(MeanLedger& led) {
    CheckResult res{2, "spectral-vs-brute-variance", true, ""};
    double worst = 0.0;
    std::string witness = "-";
    for (i64 q : {15, 105, 1155, 15015}) {
        auto m = factor_squarefree(q);
        std::vector<SieveSystem> systems;
        for (const auto& d : criterion_tuple_family(m)) systems.push_back(sieve_from_tuple(d));
        systems.push_back(sieve_evens(m));
        systems.push_back(sieve_kloosterman(m));
        for (const auto& sys : systems) {
            auto a = sift(sys);
            for (i64 h : {1, 2, 5, 20, 100}) {
                if (h >= q) continue;
                double brute = checked_window_counts(led, a, h).central_moment_total(2);
                double spectral = variance_spectral(sys, h);
                double rel = std::abs(spectral - brute) / std::max(1.0, std::abs(brute));
                if (rel > worst) {
                    worst = rel;
                    witness = "q=" + std::to_string(q) + " h=" + std::to_string(h);
                }
            }
        }
    }
    res.pass = worst <= 1e-8;
    res.detail = "max relative deviation = " + fmt_g12(worst) + " at " + witness;
    return res;
}

// --------------------------------------------------------------------------
// criteria 3 and 4: the variance upper bounds over the full modulus grid,
// via cyclic autocorrelations of the squares bitmap
// --------------------------------------------------------------------------
struct GridOutcome {
    u64 moduli = 0;
    u64 checks = 0;
    u64 violations = 0;
    double max_ratio = 0.0;
    std::string witness = "-";
};

inline GridOutcome variance_bound_grid(i64 qmax, i64 hmax, bool only_3mod4) {
    GridOutcome out;

    std::vector<int> spf(size_t(qmax) + 1, 0);
    for (i64 i = 2; i <= qmax; ++i)
        if (spf[size_t(i)] == 0)
            for (i64 j = i; j <= qmax; j += i)
                if (spf[size_t(j)] == 0) spf[size_t(j)] = int(i);

    // cached quadratic-residue masks for the small primes
    std::map<i64, std::vector<char>> qr_cache;
    auto qr_mask = [&](i64 p) -> std::vector<char> {
        auto it = qr_cache.find(p);
        if (it != qr_cache.end()) return it->second;
        std::vector<char> mask(size_t(p), 0);
        mask[0] = 1;
        for (i64 x = 1; x <= (p - 1) / 2; ++x)
            mask[size_t(mulmod_u64(u64(x), u64(x), u64(p)))] = 1;
        if (p <= 4096) qr_cache.emplace(p, mask);
        return mask;
    };

    std::vector<u64> bits;
    std::vector<u64> corr(size_t(hmax), 0);

    for (i64 q = 3; q <= qmax; q += 2) {
        // factor and filter: square-free, omega <= 4
        std::vector<i64> primes;
        i64 n = q;
        bool ok = true;
        while (n > 1) {
            i64 p = spf[size_t(n)];
            n /= p;
            if (n % p == 0) { ok = false; break; }
            primes.push_back(p);
        }
        if (!ok || primes.size() > 4) continue;
        if (only_3mod4) {
            for (i64 p : primes)
                if (p % 4 != 3) { ok = false; break; }
            if (!ok) continue;
        }

        // doubled bitmap of squares mod q on [0, 2q)
        i64 nbits = 2 * q;
        size_t nwords = size_t((nbits + 63) / 64);
        bits.assign(nwords, ~0ull);
        if (nbits % 64) bits[nwords - 1] = (1ull << (nbits % 64)) - 1;
        for (i64 p : primes) {
            auto mask = qr_mask(p);
            for (i64 c = 1; c < p; ++c) {
                if (mask[size_t(c)]) continue;
                for (i64 x = c; x < nbits; x += p) bits[size_t(x >> 6)] &= ~(1ull << (x & 63));
            }
        }

        i64 hq = std::min(hmax, q - 1);
        size_t wq = size_t(q / 64);            // full words in [0, q)
        u64 tail_mask = (q % 64) ? ((1ull << (q % 64)) - 1) : 0;

        for (i64 delta = 0; delta < hq; ++delta) {
            size_t off = size_t(delta >> 6);
            int sh = int(delta & 63);
            u64 acc = 0;
            if (sh == 0) {
                for (size_t w = 0; w < wq; ++w) acc += u64(__builtin_popcountll(bits[w] & bits[w + off]));
                if (tail_mask)
                    acc += u64(__builtin_popcountll(bits[wq] & tail_mask & bits[wq + off]));
            } else {
                for (size_t w = 0; w < wq; ++w) {
                    u64 b = (bits[w + off] >> sh) | (bits[w + off + 1] << (64 - sh));
                    acc += u64(__builtin_popcountll(bits[w] & b));
                }
                if (tail_mask) {
                    u64 b = (bits[wq + off] >> sh);
                    if (wq + off + 1 < nwords) b |= bits[wq + off + 1] << (64 - sh);
                    acc += u64(__builtin_popcountll(bits[wq] & tail_mask & b));
                }
            }
            corr[size_t(delta)] = acc;
        }

        u64 count = corr[0];
        u128 expect = 1;
        for (i64 p : primes) expect *= u128((p + 1) / 2);
        if (u128(count) != expect)
            fail(errc::bad_argument, "grid bitmap miscounted the squares at q=" + std::to_string(q));

        // per-h second moments around the h/(2^w P) center
        int omega = int(primes.size());
        i64 phi = 1;
        for (i64 p : primes) phi *= p - 1;
        long double denom = (long double)(i64(1) << omega) * (long double)phi;
        long double rootprod = 1.0L;
        for (i64 p : primes) rootprod *= 1.0L + 1.0L / sqrtl((long double)p);

        u64 sum2 = 0;       // sum over h of counts^2 pieces, built incrementally
        u64 prefix = 0;     // sum_{delta=1}^{h-1} C(delta)
        u64 tri = 0;        // sum_{delta=1}^{h-1} (h - delta) C(delta)
        for (i64 h = 1; h <= hq; ++h) {
            if (h > 1) {
                prefix += corr[size_t(h - 1)];
                tri += prefix;
            }
            sum2 = u64(h) * count + 2 * tri;
            long double c = (long double)h * (long double)q / denom;   // paper center
            long double m2 =
                ((long double)sum2 - 2.0L * c * (long double)(u64(h) * count) + (long double)q * c * c) /
                (long double)q;
            long double bound = only_3mod4
                                    ? (long double)h * (long double)q * (long double)q /
                                          (denom * (long double)phi)
                                    : (long double)h * (long double)q / denom * rootprod;
            ++out.checks;
            double ratio = double(m2 / bound);
            if (ratio > out.max_ratio) {
                out.max_ratio = ratio;
                out.witness = "q=" + std::to_string(q) + " h=" + std::to_string(h);
            }
            if (m2 > bound) ++out.violations;
        }
        ++out.moduli;
    }
    return out;
}

inline CheckResult criterion3() {
    auto g = variance_bound_grid(100000, 200, false);
    CheckResult res{3, "variance-upper-bound-grid", g.violations == 0, ""};
    res.detail = std::to_string(g.moduli) + " moduli, " + std::to_string(g.checks) + " (q,h) pairs, " +
                 std::to_string(g.violations) + " violations, max ratio " + fmt_g12(g.max_ratio) +
                 " at " + g.witness;
    return res;
}

inline CheckResult criterion4() {
    auto g = variance_bound_grid(100000, 200, true);
    CheckResult res{4, "variance-upper-bound-3mod4", g.violations == 0, ""};
    res.detail = std::to_string(g.moduli) + " moduli, " + std::to_string(g.checks) + " (q,h) pairs, " +
                 std::to_string(g.violations) + " violations, max ratio " + fmt_g12(g.max_ratio) +
                 " at " + g.witness;
    return res;
}

// --------------------------------------------------------------------------
// criterion 5: Gauss class-sum magnitudes
// --------------------------------------------------------------------------
inline CheckResult criterion5() {
    CheckResult res{5, "gauss-class-magnitudes", true, ""};
    double worst = 0.0;
    std::string witness = "-";
    u64 checks = 0;
    for (i64 p : primes_in(3, 500)) {
        PhaseTable tbl(p);
        std::vector<char> qr(size_t(p), 0);
        for (i64 x = 1; x <= (p - 1) / 2; ++x) qr[size_t(mulmod_u64(u64(x), u64(x), u64(p)))] = 1;
        std::vector<i64> residues, nonres;
        for (i64 x = 1; x < p; ++x) (qr[size_t(x)] ? residues : nonres).push_back(x);
        for (i64 a = 1; a < p; ++a) {
            for (int cls = 0; cls < 2; ++cls) {
                const auto& set = cls == 0 ? residues : nonres;
                KahanComplexSum acc;
                for (i64 x : set) acc.add(tbl.at(i64((u64(a) * u64(x)) % u64(p))));
                double mag = std::abs(acc.value());
                double expect;
                if (p % 4 == 3) {
                    expect = std::sqrt(double(p + 1)) / 2.0;
                } else {
                    int chi = qr[size_t(a)] ? 1 : -1;
                    int sign = cls == 1 ? chi : -chi;
                    expect = (std::sqrt(double(p)) + double(sign)) / 2.0;
                }
                double dev = std::abs(mag - expect);
                ++checks;
                if (dev > worst) {
                    worst = dev;
                    witness = "p=" + std::to_string(p) + " a=" + std::to_string(a) +
                              (cls ? " nonresidues" : " residues");
                }
            }
        }
    }
    res.pass = worst <= 1e-9;
    res.detail = std::to_string(checks) + " sums, max |mag-closed_form| = " + fmt_g12(worst) +
                 " at " + witness;
    return res;
}

// --------------------------------------------------------------------------
// criterion 6: Weil bound and realness over all Kloosterman pairs
// --------------------------------------------------------------------------
inline CheckResult criterion6() {
    CheckResult res{6, "kloosterman-weil-bound", true, ""};
    double worst = 0.0;
    std::string witness = "-";
    u64 checks = 0;
    for (i64 p : primes_in(3, 499)) {
        KloostermanEvaluator kl(p);
        double bound = 2.0 * std::sqrt(double(p));
        for (i64 a = 1; a < p; ++a) {
            for (i64 b = 1; b < p; ++b) {
                double s;
                try {
                    s = kl.sum(a, b);
                } catch (const error& e) {
                    return {6, res.name, false, std::string(e.what())};
                }
                ++checks;
                double ratio = std::abs(s) / bound;
                if (ratio > worst) {
                    worst = ratio;
                    witness = "p=" + std::to_string(p) + " a=" + std::to_string(a) +
                              " b=" + std::to_string(b);
                }
            }
        }
    }
    res.pass = worst <= 1.0 + 1e-12;
    res.detail = std::to_string(checks) + " sums, max |S|/(2 sqrt p) = " + fmt_g12(worst) + " at " +
                 witness;
    return res;
}

// --------------------------------------------------------------------------
// criterion 7: wraparound Kloosterman set sizes
// --------------------------------------------------------------------------
inline CheckResult criterion7() {
    CheckResult res{7, "kloosterman-prime-size", true, ""};
    for (i64 p : primes_in(3, 2000)) {
        i64 got = i64(omega_prime_kloosterman(p).size());
        i64 expect = p % 4 == 3 ? (p + 1) / 4 : (p - 1) / 4;
        if (got != expect) {
            return {7, res.name, false,
                    "p=" + std::to_string(p) + " size " + std::to_string(got) + " != " +
                        std::to_string(expect)};
        }
    }
    res.detail = "sizes match (p+-1)/4 for all odd p <= 2000";
    return res;
}

// --------------------------------------------------------------------------
// criterion 8: wraparound Fourier residual against the i p / (2 pi) main term
// --------------------------------------------------------------------------
inline CheckResult criterion8() {
    CheckResult res{8, "wraparound-fourier-residual", true, ""};
    double worst = 0.0;
    std::string witness = "-";
    for (i64 p : primes_in(97, 5000)) {
        cplx main{0.0, double(p) / (2.0 * std::numbers::pi)};
        double norm = std::abs(wraparound_fourier(p) - main) /
                      (std::sqrt(double(p)) * std::log(double(p)));
        if (norm > worst) {
            worst = norm;
            witness = "p=" + std::to_string(p);
        }
    }
    res.pass = worst <= kWraparoundResidualC;
    res.detail = "max residual / (sqrt(p) log p) = " + fmt_g12(worst) + " at " + witness +
                 ", cap " + fmt_g12(kWraparoundResidualC);
    return res;
}

// --------------------------------------------------------------------------
// criterion 9: wraparound sets are badly distributed (variance >> h^2)
// --------------------------------------------------------------------------
inline CheckResult criterion9(MeanLedger& led) {
    CheckResult res{9, "kloosterman-prime-variance", true, ""};
    double worst = 1e300;
    std::string detail;
    for (i64 p : {1009, 2003, 4001}) {
        auto m = SquareFreeModulus({p});
        auto a = sift(sieve_kloosterman_prime(m));
        i64 h = p / 10;
        double var = checked_window_counts(led, a, h).variance();
        double ratio = var / (double(h) * double(h));
        worst = std::min(worst, ratio);
        detail += "p=" + std::to_string(p) + " Var/h^2=" + fmt_g12(ratio) + "  ";
    }
    res.pass = worst >= kKloostermanVarianceFloor;
    res.detail = detail + "(floor " + fmt_g12(kKloostermanVarianceFloor) + ")";
    return res;
}

// --------------------------------------------------------------------------
// criterion 10: evens sieve is badly distributed (variance >> mean^2)
// --------------------------------------------------------------------------
inline CheckResult criterion10(MeanLedger& led) {
    CheckResult res{10, "evens-variance-blowup", true, ""};
    auto m = SquareFreeModulus({11, 13});
    auto a = sift(sieve_evens(m));
    i64 h = 43;
    auto st = checked_window_counts(led, a, h);
    double mean = st.mean().to_double();
    double ratio = st.variance() / (mean * mean);
    res.pass = ratio >= kEvensVarianceFloor;
    res.detail = "q=143 h=43 Var/E^2 = " + fmt_g12(ratio) + " (floor " + fmt_g12(kEvensVarianceFloor) + ")";
    return res;
}

// --------------------------------------------------------------------------
// criterion 11: Davenport's 2^{-h} law for consecutive squares, prime modulus
// --------------------------------------------------------------------------
inline CheckResult criterion11() {
    CheckResult res{11, "davenport-consecutive-spacings", true, ""};
    auto m = SquareFreeModulus({1000003});
    auto a = squares_mod(m);
    auto freq = consecutive_spacing_histogram(a, 8);
    double tol[3] = {0.05, 0.03, 0.02};
    std::string detail;
    bool ok = true;
    for (i64 g = 1; g <= 3; ++g) {
        double expect = std::ldexp(1.0, -int(g));
        double got = freq.count(g) ? freq[g] : 0.0;
        if (std::abs(got - expect) > tol[g - 1]) ok = false;
        detail += "f(" + std::to_string(g) + ")=" + fmt_g12(got) + " ";
    }
    res.pass = ok;
    res.detail = detail + "vs 1/2, 1/4, 1/8";
    return res;
}

// --------------------------------------------------------------------------
// criterion 12: Poisson pair-correlation statistic for squares, omega = 8
// --------------------------------------------------------------------------
inline CheckResult criterion12() {
    CheckResult res{12, "pair-spacing-statistic", true, ""};
    auto m = SquareFreeModulus({3, 5, 7, 11, 13, 17, 19, 23});
    auto a = squares_mod(m);
    if (a.size() != 1088640)
        return {12, res.name, false, "|A| = " + std::to_string(a.size()) + " != 1088640"};
    double stat = spacing_statistic(a, 0.5, 1.5);
    res.pass = std::abs(stat - 1.0) <= 0.1;
    res.detail = "|A| = 1088640, statistic over (0.5, 1.5] = " + fmt_g12(stat) + " vs 1.0 +- 0.1";
    return res;
}

// --------------------------------------------------------------------------
// criterion 13: gap second-moment ratio against the closed-form gap bound
// --------------------------------------------------------------------------
inline CheckResult criterion13() {
    CheckResult res{13, "gap-moment-ratio", true, ""};
    double worst = 0.0;
    std::string detail;
    for (i64 q : {15ll, 105ll, 1155ll, 15015ll, 255255ll}) {
        auto m = factor_squarefree(q);
        auto a = squares_mod(m);
        auto g = gap_profile(a);
        double v2 = double((long double)g.power_sum(2));
        double ratio = (v2 / double(q)) / gap_moment_bound(m);
        worst = std::max(worst, ratio);
        detail += "q=" + std::to_string(q) + ":" + fmt_g12(ratio) + " ";
    }
    res.pass = worst <= kGapRatioCap;
    res.detail = detail + "(cap " + fmt_g12(kGapRatioCap) + ")";
    return res;
}

// --------------------------------------------------------------------------
// criterion 14: higher central moments against the general bound
// --------------------------------------------------------------------------
inline CheckResult criterion14(MeanLedger& led) {
    CheckResult res{14, "moment-ratio-table", true, ""};
    std::string detail;
    bool ok = true;
    for (i64 q : {1155, 15015}) {
        auto m = factor_squarefree(q);
        for (const auto& elems : std::vector<std::vector<i64>>{{0, 2}, {0, 2, 6}}) {
            AdmissibleTuple d(m, elems);
            auto sys = sieve_from_tuple(d);
            auto a = sift(sys);
            for (i64 k : {2, 4}) {
                double first_ratio = -1.0;
                double max_ratio = 0.0;
                for (i64 h : {1, 5, 10, 50}) {
                    auto st = checked_window_counts(led, a, h, int(k));
                    double mk = st.central_moment_total(int(k));
                    double bound = tuple_moment_bounds(m, h, d.s(), k).general;
                    double ratio = mk / bound;
                    if (first_ratio < 0) first_ratio = ratio;
                    max_ratio = std::max(max_ratio, ratio);
                    if (ratio > moment_ratio_cap(d.s(), k)) ok = false;
                }
                if (max_ratio > kMomentGrowthCap * std::max(first_ratio, 1e-300)) ok = false;
                detail += "q=" + std::to_string(q) + ",s=" + std::to_string(d.s()) +
                          ",k=" + std::to_string(k) + ":" + fmt_g12(max_ratio) + " ";
            }
        }
    }
    res.pass = ok;
    res.detail = detail;
    return res;
}

inline CheckResult criterion15(const MeanLedger& led) {
    CheckResult res{15, "window-mean-identity", led.failures == 0 && led.calls > 0, ""};
    res.detail = std::to_string(led.calls) + " window_counts calls, " +
                 std::to_string(led.failures) + " mean-identity violations";
    return res;
}

} // namespace verify_detail

inline std::vector<CheckResult> run_verification(Tier tier, std::ostream* log = nullptr) {
    using namespace verify_detail;
    bool standard = tier != Tier::quick;
    bool deep = tier == Tier::deep;

    MeanLedger led;
    std::vector<CheckResult> results;
    auto emit = [&](CheckResult r) {
        if (log)
            (*log) << "criterion " << (r.id < 10 ? " " : "") << r.id << " ["
                   << (r.pass ? "PASS" : "FAIL") << "] " << r.name << ": " << r.detail << std::endl;
        results.push_back(std::move(r));
    };

    if (standard) emit(criterion1());
    if (standard) emit(criterion2(led));
    if (deep) emit(criterion3());
    if (standard) emit(criterion4());
    emit(criterion5());
    if (standard) emit(criterion6());
    emit(criterion7());
    if (standard) emit(criterion8());
    if (standard) emit(criterion9(led));
    emit(criterion10(led));
    if (standard) emit(criterion11());
    if (deep) emit(criterion12());
    if (standard) emit(criterion13());
    if (deep) emit(criterion14(led));
    emit(criterion15(led));
    return results;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

} // namespace qsift
