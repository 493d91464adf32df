#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qsift/moments.hpp"

using namespace qsift;

namespace {

// brute-force oracle: count members in every circular window directly
std::vector<i64> oracle_counts(const SiftedSet& a, i64 h) {
    std::vector<char> in(size_t(a.q()), 0);
    for (i64 m : a.members) in[size_t(m)] = 1;
    std::vector<i64> counts(size_t(a.q()), 0);
    for (i64 n = 0; n < a.q(); ++n) {
        i64 c = 0;
        for (i64 m = 1; m <= h; ++m) c += in[size_t((n + m) % a.q())];
        counts[size_t(n)] = c;
    }
    return counts;
}

double oracle_moment(const std::vector<i64>& counts, double center, int k) {
    double total = 0.0;
    for (i64 c : counts) total += std::pow(double(c) - center, double(k));
    return total;
}

SieveSystem random_system(const SquareFreeModulus& m, std::mt19937_64& rng,
                          const std::vector<i64>& sizes) {
    std::map<i64, std::vector<i64>> f;
    size_t i = 0;
    for (i64 p : m.primes()) {
        i64 count = std::min(sizes[i % sizes.size()], p - 1);
        std::vector<i64> classes(static_cast<size_t>(p));
        for (i64 x = 0; x < p; ++x) classes[size_t(x)] = x;
        std::shuffle(classes.begin(), classes.end(), rng);
        classes.resize(size_t(count));
        f[p] = classes;
        ++i;
    }
    return SieveSystem(m, f);
}

} // namespace

TEST_CASE("window counts on the q=15 squares", "[moments]") {
    SquareFreeModulus m({3, 5});
    auto a = squares_mod(m);

    auto s1 = window_counts(a, 1);
    CHECK(s1.mean() == Rational(2, 5));
    CHECK(s1.sum_counts() == u128(6));
    CHECK(s1.central_moment_total(2) == Catch::Approx(3.6).margin(1e-12));

    auto s15 = window_counts(a, 14);
    CHECK(s15.sum_counts() == u128(14) * 6);

    // full-period window: every count equals |A|, variance 0 (h = q rejected,
    // so check h = q via the unsieved set instead)
    auto full = sift(sieve_empty(m));
    auto sf = window_counts(full, 7);
    CHECK(sf.variance() == 0.0);
    CHECK(sf.central_moment_total(2) == 0.0);
}

TEST_CASE("window counts match the brute-force oracle", "[moments]") {
    std::mt19937_64 rng(31);
    SquareFreeModulus m({3, 5, 7});
    for (int t = 0; t < 4; ++t) {
        auto sys = random_system(m, rng, {1, 2, 3});
        auto a = sift(sys);
        for (i64 h : {1, 2, 5, 20}) {
            auto stats = window_counts(a, h, 4);
            auto counts = oracle_counts(a, h);
            double center = stats.mean().to_double();
            for (int k = 1; k <= 4; ++k) {
                double expect = oracle_moment(counts, center, k);
                double got = stats.central_moment_total(k);
                CHECK(got == Catch::Approx(expect).margin(1e-6));
            }
        }
    }
}

TEST_CASE("chunked sweep is exact across chunk boundaries and thread counts", "[moments]") {
    // q = 255255 spans four sweep chunks; the spectral identity is an
    // independent route to the same number
    SquareFreeModulus m({3, 5, 7, 11, 13, 17});
    auto sys = sieve_squares(m);
    auto a = sift(sys);
    unsigned saved = worker_threads();
    worker_threads() = 1;
    auto st1 = window_counts(a, 20, 4);
    worker_threads() = 3;
    auto st3 = window_counts(a, 20, 4);
    worker_threads() = saved;
    for (int j = 0; j <= 4; ++j) CHECK(st1.power_sum(j) == st3.power_sum(j));
    CHECK(st1.sum_counts() == u128(20) * u128(u64(a.size())));
    double spectral = variance_spectral(sys, 20);
    CHECK(st1.central_moment_total(2) == Catch::Approx(spectral).epsilon(1e-8));
}

TEST_CASE("first central moment vanishes exactly", "[moments]") {
    SquareFreeModulus m({3, 5, 7, 11});
    auto a = squares_mod(m);
    for (i64 h : {1, 7, 100})
        CHECK(window_counts(a, h).central_moment_total(1) == 0.0);
}

TEST_CASE("window length preconditions", "[moments]") {
    auto a = squares_mod(SquareFreeModulus({3, 5}));
    CHECK_THROWS_AS(window_counts(a, 0), error);
    CHECK_THROWS_AS(window_counts(a, 15), error);
    CHECK_THROWS_AS(window_counts(a, 3, 9), error);
}

TEST_CASE("variance_spectral equals the brute-force variance", "[moments]") {
    SquareFreeModulus m15({3, 5});
    auto sq15 = sieve_squares(m15);
    double brute = window_counts(squares_mod(m15), 3).central_moment_total(2);
    double spectral = variance_spectral(sq15, 3);
    CHECK(spectral == Catch::Approx(brute).epsilon(1e-10));

    SquareFreeModulus m105({3, 5, 7});
    auto sq105 = sieve_squares(m105);
    auto a105 = squares_mod(m105);
    for (i64 h : {1, 5, 20}) {
        double b = window_counts(a105, h).central_moment_total(2);
        double s = variance_spectral(sq105, h);
        CHECK(s == Catch::Approx(b).epsilon(1e-8));
    }

    // full periods: E(a/r) vanishes, so the variance is 0
    CHECK(variance_spectral(sq105, 105) == Catch::Approx(0.0).margin(1e-8));
    CHECK(variance_spectral(sq105, 210) == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("variance_spectral across the sieve families", "[moments]") {
    std::mt19937_64 rng(55);
    for (auto primes : std::vector<std::vector<i64>>{{3, 5}, {3, 5, 7}, {5, 7, 11}}) {
        SquareFreeModulus m(primes);
        std::vector<SieveSystem> systems;
        systems.push_back(sieve_squares(m));
        systems.push_back(sieve_evens(m));
        systems.push_back(sieve_kloosterman(m));
        systems.push_back(random_system(m, rng, {1}));
        for (i64 p : primes) (void)p;
        systems.push_back(random_system(m, rng, {2, 4, 1}));
        for (const auto& sys : systems) {
            auto a = sift(sys);
            for (i64 h : {1, 2, 5, 20}) {
                if (h >= m.q()) continue;
                double brute = window_counts(a, h).central_moment_total(2);
                double spectral = variance_spectral(sys, h);
                CHECK(spectral == Catch::Approx(brute).margin(1e-8 * std::max(1.0, brute)));
            }
        }
    }
}

TEST_CASE("variance_spectral ignores empty class sets", "[moments]") {
    SquareFreeModulus m({3, 5, 7});
    SieveSystem sys(m, {{5, {2, 3}}});   // only p = 5 constrains
    auto a = sift(sys);
    for (i64 h : {2, 10}) {
        double brute = window_counts(a, h).central_moment_total(2);
        CHECK(variance_spectral(sys, h) == Catch::Approx(brute).epsilon(1e-9));
    }
    CHECK(variance_spectral(sieve_empty(m), 5) == 0.0);
}

TEST_CASE("variance bound evaluators", "[moments]") {
    SquareFreeModulus m15({3, 5});
    auto b = squares_variance_bounds(m15, 2);
    // (2 / (4 * 8/15)) * (1 + 1/sqrt3)(1 + 1/sqrt5), frozen from direct evaluation
    CHECK(b.upper == Catch::Approx(2.140090082).margin(1e-8));
    CHECK_FALSE(b.upper_3mod4.has_value());
    // divisors 5 and 15 exceed h^2 = 4; their (1 - 3/sqrt p) products go negative
    CHECK(b.lower == Catch::Approx(-0.021455244).margin(1e-8));

    SquareFreeModulus m21({3, 7});
    auto b21 = squares_variance_bounds(m21, 5);
    REQUIRE(b21.upper_3mod4.has_value());
    CHECK(*b21.upper_3mod4 == Catch::Approx(5.0 * 441.0 / (4.0 * 144.0)).margin(1e-9));

    // lower bound sum is empty once h^2 clears q
    CHECK(squares_variance_bounds(m15, 4).lower == 0.0);
}

TEST_CASE("shifted-center moment stays below the closed-form upper bound", "[moments]") {
    for (auto primes : std::vector<std::vector<i64>>{{3, 5}, {3, 7}, {3, 5, 7}, {11, 13}}) {
        SquareFreeModulus m(primes);
        auto a = squares_mod(m);
        auto bounds_geo = [&](i64 h) { return squares_variance_bounds(m, h); };
        Rational paper_center_unit(i128(m.q()), i128(m.phi()) << m.omega());
        for (i64 h = 1; h < std::min<i64>(m.q(), 60); ++h) {
            auto stats = window_counts(a, h);
            Rational center(paper_center_unit.num * h, paper_center_unit.den);
            double paper_m2 = stats.central_moment_total(2, center) / double(m.q());
            auto bd = bounds_geo(h);
            CHECK(paper_m2 <= bd.upper);
            if (bd.upper_3mod4) CHECK(paper_m2 <= *bd.upper_3mod4);
        }
    }
}

TEST_CASE("certified variance upper bound", "[moments]") {
    std::mt19937_64 rng(4100);
    for (auto primes : std::vector<std::vector<i64>>{{3, 5}, {5, 7, 11}}) {
        SquareFreeModulus m(primes);
        std::vector<SieveSystem> systems{sieve_squares(m), sieve_evens(m),
                                         random_system(m, rng, {1, 3})};
        for (const auto& sys : systems) {
            auto c = certified_c_p(sys);
            auto a = sift(sys);
            for (i64 h : {1, 5, 12}) {
                double m2 = window_counts(a, h).central_moment_total(2);
                CHECK(m2 <= general_variance_upper(sys, h, c) * (1 + 1e-12));
            }
        }
    }
    // degenerate product: no sieve, c_p all zero -> bound q*h
    SquareFreeModulus m({3, 5});
    auto empty = sieve_empty(m);
    std::map<i64, double> zero{{3, 0.0}, {5, 0.0}};
    CHECK(general_variance_upper(empty, 7, zero) == Catch::Approx(15.0 * 7.0));
    // monotone in each c_p
    std::map<i64, double> bigger{{3, 0.5}, {5, 0.0}};
    CHECK(general_variance_upper(empty, 7, bigger) > general_variance_upper(empty, 7, zero));
}

TEST_CASE("tuple moment bound arithmetic", "[moments]") {
    SquareFreeModulus m({3, 5, 7, 11});
    REQUIRE(m.q() == 1155);
    auto b = tuple_moment_bounds(m, 10, 2, 4);
    CHECK(b.general == Catch::Approx(1155.0 * 100.0).margin(1e-6));   // P^0
    double p = m.density_coprime().to_double();
    CHECK(b.h_threshold == Catch::Approx(std::exp(1.0 / (4.0 * std::sqrt(p)))).margin(1e-12));

    auto b12 = tuple_moment_bounds(m, 10, 1, 2);
    CHECK(b12.poissonian == Catch::Approx(b12.general).margin(1e-9));
    CHECK(b12.general == Catch::Approx(1155.0 * 10.0 * p).margin(1e-9));
}

TEST_CASE("gap profile of the q=15 squares", "[moments]") {
    SquareFreeModulus m({3, 5});
    auto g = gap_profile(squares_mod(m));
    CHECK(g.gaps == std::vector<i64>{1, 3, 2, 3, 1, 5});
    CHECK(g.power_sum(1) == u128(15));
    CHECK(g.power_sum(2) == u128(49));
    CHECK(g.tail_count(2) == 3);

    auto full = sift(sieve_empty(m));
    auto gf = gap_profile(full);
    CHECK(gf.power_sum(2) == u128(15));
}

TEST_CASE("gap closure on random systems", "[moments]") {
    std::mt19937_64 rng(8);
    SquareFreeModulus m({3, 5, 7, 11});
    for (int t = 0; t < 5; ++t) {
        auto sys = random_system(m, rng, {1, 2, 5});
        auto a = sift(sys);
        if (a.size() < 2) continue;
        auto g = gap_profile(a);
        CHECK(g.power_sum(1) == u128(u64(m.q())));
        CHECK(i64(g.gaps.size()) == a.size());
    }
}

TEST_CASE("empty-gap windows force the tail inequality", "[moments]") {
    // windows strictly inside a gap contribute mean^2 each:
    // sum_{gap > h} (gap - h) * mean^2 <= M_2
    std::mt19937_64 rng(13);
    SquareFreeModulus m({3, 5, 7});
    for (int t = 0; t < 5; ++t) {
        auto sys = random_system(m, rng, {2, 3, 4});
        auto a = sift(sys);
        if (a.size() < 2) continue;
        auto g = gap_profile(a);
        for (i64 h : {2, 5, 11}) {
            auto stats = window_counts(a, h);
            double mean = stats.mean().to_double();
            double lhs = 0.0;
            for (i64 gp : g.gaps)
                if (gp > h) lhs += double(gp - h) * mean * mean;
            CHECK(lhs <= stats.central_moment_total(2) * (1 + 1e-12) + 1e-12);
        }
    }
}

TEST_CASE("spacing statistic on the lattice case", "[moments]") {
    SquareFreeModulus m({3, 5, 7});
    auto full = sift(sieve_empty(m));   // A = all of Z/q, mean spacing 1
    CHECK(spacing_statistic(full, 0.5, 1.5) == Catch::Approx(1.0));
    CHECK(spacing_statistic(full, 0.5, 2.5) == Catch::Approx(2.0));

    CHECK_THROWS_MATCHES(spacing_statistic(full, 0.0, 1.0), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.kind() == errc::interval_contains_zero;
                         }));
    CHECK_THROWS_AS(spacing_statistic(full, 0.5, 60.0), error);
}

TEST_CASE("spacing statistic matches a quadratic oracle", "[moments]") {
    std::mt19937_64 rng(21);
    SquareFreeModulus m({3, 5, 7, 11});
    auto sys = random_system(m, rng, {1, 2, 4, 5});
    auto a = sift(sys);
    REQUIRE(a.size() >= 2);
    double sbar = double(a.q()) / double(a.size());
    double alpha = 0.4, beta = 1.7;
    u64 pairs = 0;
    for (i64 x : a.members)
        for (i64 y : a.members) {
            if (x == y) continue;
            i64 d = ((x - y) % a.q() + a.q()) % a.q();
            if (double(d) > sbar * alpha && double(d) <= sbar * beta) ++pairs;
        }
    CHECK(spacing_statistic(a, alpha, beta)
          == Catch::Approx(double(pairs) / double(a.size())).margin(1e-12));
}

TEST_CASE("consecutive spacing histogram", "[moments]") {
    SquareFreeModulus m({3, 5});
    auto freq = consecutive_spacing_histogram(squares_mod(m), 10);
    CHECK(freq[1] == Catch::Approx(2.0 / 6.0));
    CHECK(freq[2] == Catch::Approx(1.0 / 6.0));
    CHECK(freq[3] == Catch::Approx(2.0 / 6.0));
    CHECK(freq[5] == Catch::Approx(1.0 / 6.0));

    auto full = sift(sieve_empty(m));
    auto f1 = consecutive_spacing_histogram(full, 3);
    CHECK(f1[1] == Catch::Approx(1.0));
}
