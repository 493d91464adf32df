#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "qsift/arith.hpp"

using namespace qsift;

TEST_CASE("factor_squarefree decomposes odd square-free moduli", "[arith]") {
    auto m = factor_squarefree(15);
    CHECK(m.primes() == std::vector<i64>{3, 5});
    CHECK(m.omega() == 2);
    CHECK(m.phi() == 8);
    CHECK(m.density_coprime() == Rational(8, 15));

    CHECK(factor_squarefree(1155).primes() == std::vector<i64>{3, 5, 7, 11});

    CHECK_THROWS_MATCHES(factor_squarefree(45), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.kind() == errc::not_square_free;
                         }));
    CHECK_THROWS_MATCHES(factor_squarefree(30), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.kind() == errc::even_modulus;
                         }));
    // a 2^63-scale semiprime still factors via rho
    CHECK(factor_squarefree(i64(1000003) * 1000033).primes()
          == std::vector<i64>{1000003, 1000033});
}

TEST_CASE("mod_inverse", "[arith]") {
    CHECK(mod_inverse(3, 7) == 5);
    CHECK(mod_inverse(1, 101) == 1);

    // independent oracle: exhaustive scan of 4x mod 13
    i64 expect = 0;
    for (i64 x = 1; x < 13; ++x)
        if (4 * x % 13 == 1) expect = x;
    CHECK(expect == 10);
    CHECK(mod_inverse(4, 13) == expect);

    CHECK_THROWS_AS(mod_inverse(14, 7), error);
}

TEST_CASE("mod_inverse is an involution on its image", "[arith]") {
    for (i64 p : {3, 7, 13, 101, 499}) {
        for (i64 a = 1; a < p; ++a)
            CHECK(mod_inverse(mod_inverse(a, p), p) == a);
    }
}

TEST_CASE("legendre symbol", "[arith]") {
    CHECK(legendre(2, 7) == 1);
    CHECK(legendre(14, 7) == 0);

    // oracle: brute-force squares mod 7 = {1, 2, 4}
    std::set<i64> squares;
    for (i64 x = 1; x < 7; ++x) squares.insert(x * x % 7);
    CHECK(squares == std::set<i64>{1, 2, 4});
    CHECK(legendre(3, 7) == -1);

    // cross-check Euler's criterion against the brute-force set on a grid
    for (i64 p : {11, 13, 97, 499}) {
        std::set<i64> sq;
        for (i64 x = 1; x < p; ++x) sq.insert(x * x % p);
        for (i64 a = 1; a < p; ++a)
            CHECK(legendre(a, p) == (sq.count(a) ? 1 : -1));
    }
}

TEST_CASE("crt_combine", "[arith]") {
    // oracles: scan the full range
    auto scan = [](const std::vector<std::pair<i64, i64>>& rs, i64 q) {
        for (i64 x = 0; x < q; ++x) {
            bool ok = true;
            for (auto [a, p] : rs)
                if (x % p != ((a % p) + p) % p) { ok = false; break; }
            if (ok) return x;
        }
        return i64(-1);
    };
    std::vector<std::pair<i64, i64>> r1{{1, 3}, {3, 5}};
    CHECK(scan(r1, 15) == 13);
    CHECK(crt_combine(r1) == 13);

    CHECK(crt_combine({{0, 3}, {0, 5}}) == 0);

    std::vector<std::pair<i64, i64>> r3{{1, 3}, {2, 5}, {3, 7}};
    CHECK(scan(r3, 105) == 52);
    CHECK(crt_combine(r3) == 52);

    CHECK_THROWS_MATCHES(crt_combine({{1, 6}, {2, 15}}), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.kind() == errc::non_coprime_moduli;
                         }));
}

TEST_CASE("crt round-trips decompositions", "[arith]") {
    std::mt19937_64 rng(42);
    for (auto primes : std::vector<std::vector<i64>>{{3, 5}, {3, 5, 7}, {11, 13, 17}, {3, 5, 7, 11, 13}}) {
        SquareFreeModulus m(primes);
        for (int t = 0; t < 200; ++t) {
            i64 x = i64(rng() % u64(m.q()));
            std::vector<std::pair<i64, i64>> rs;
            for (i64 p : m.primes()) rs.emplace_back(x % p, p);
            CHECK(crt_combine(rs) == x);
        }
    }
}

TEST_CASE("kloosterman sums", "[arith]") {
    // two-term direct oracle for p = 3: e(2/3) + e(4/3)
    cplx direct = unit_phase(2, 3) + unit_phase(4, 3);
    CHECK(std::abs(direct.real() - (-1.0)) < 1e-12);
    CHECK(kloosterman_sum(1, 1, 3) == Catch::Approx(-1.0).margin(1e-9));

    CHECK(kloosterman_sum(0, 0, 5) == Catch::Approx(4.0).margin(1e-12));

    // four-term sum equals (3 - sqrt(5)) / 2
    CHECK(kloosterman_sum(1, 1, 5)
          == Catch::Approx((3.0 - std::sqrt(5.0)) / 2.0).margin(1e-9));
}

TEST_CASE("weil bound on kloosterman sums, small sweep", "[arith]") {
    for (i64 p : {3, 5, 7, 11, 13, 31, 97}) {
        KloostermanEvaluator kl(p);
        double bound = 2.0 * std::sqrt(double(p)) + 1e-9;
        for (i64 a = 1; a < p; ++a)
            for (i64 b = 1; b < p; ++b)
                CHECK(std::abs(kl.sum(a, b)) <= bound);
    }
}

TEST_CASE("gauss class sums match the closed-form magnitudes", "[arith]") {
    CHECK(std::abs(gauss_class_sum(5, 1, ResidueClass::nonresidues))
          == Catch::Approx((std::sqrt(5.0) + 1) / 2).margin(1e-9));
    CHECK(std::abs(gauss_class_sum(5, 2, ResidueClass::nonresidues))
          == Catch::Approx((std::sqrt(5.0) - 1) / 2).margin(1e-9));
    CHECK(std::abs(gauss_class_sum(7, 1, ResidueClass::nonresidues))
          == Catch::Approx(std::sqrt(2.0)).margin(1e-9));

    CHECK_THROWS_MATCHES(gauss_class_sum(7, 14, ResidueClass::residues), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.kind() == errc::zero_frequency;
                         }));

    for (i64 p : {5, 13, 17, 97, 101, 3, 7, 11, 19, 103}) {
        for (i64 a = 1; a < std::min<i64>(p, 40); ++a) {
            for (auto cls : {ResidueClass::residues, ResidueClass::nonresidues}) {
                double got = std::abs(gauss_class_sum(p, a, cls));
                CHECK(got == Catch::Approx(gauss_class_magnitude(p, a, cls)).margin(1e-9));
            }
        }
    }
}

TEST_CASE("parseval over arbitrary subsets of Z/pZ", "[arith]") {
    std::mt19937_64 rng(7);
    for (i64 p : {11, 101, 499, 1999}) {
        std::vector<i64> omega;
        for (i64 x = 0; x < p; ++x)
            if (rng() % 3 == 0) omega.push_back(x);
        PhaseTable tbl(p);
        double total = 0.0;
        for (i64 a = 0; a < p; ++a) {
            KahanComplexSum acc;
            for (i64 x : omega) acc.add(tbl.at(i64(mulmod_u64(u64(a), u64(x), u64(p)))));
            total += std::norm(acc.value());
        }
        double expect = double(p) * double(omega.size());
        CHECK(total == Catch::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("unit phase reduction and circle invariant", "[arith]") {
    UnitPhase ph(7, 5);   // reduces to 2/5
    CHECK(ph.num == 2);
    CHECK(ph.den == 5);
    CHECK(std::abs(ph.value() - unit_phase(2, 5)) < 1e-15);

    UnitPhase neg(-1, 4); // reduces to 3/4
    CHECK(neg.num == 3);
    CHECK(neg.den == 4);

    UnitPhase whole(10, 5);
    CHECK(whole.num == 0);
    CHECK(whole.den == 1);
    CHECK(whole.re == 1.0);
}

TEST_CASE("rational arithmetic stays exact", "[arith]") {
    Rational a(8, 15), b(2, 5);
    CHECK((a * b) == Rational(16, 75));
    CHECK((a + b) == Rational(14, 15));
    CHECK((a - b) == Rational(2, 15));
    CHECK((a / b) == Rational(4, 3));
    CHECK(Rational(-4, -6) == Rational(2, 3));
    CHECK(Rational(4, -6) == Rational(-2, 3));
    CHECK(Rational(2, 3).to_double() == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("int256 accumulates exactly", "[arith]") {
    // (2^100)^2 + (-2^100)^2 - 2^201 == 0
    Int256 a = Int256::from_u128(u128(1) << 100);
    a.mul_u128(u128(1) << 100);
    Int256 b = a;
    Int256 c = a;
    c.neg = true;
    c.accumulate(c);   // -2^201
    b.accumulate(a);   // 2^201
    b.accumulate(c);
    CHECK(b.is_zero());

    Int256 d = Int256::from_i128(-12345);
    d.mul_u64(1000000007ull);
    CHECK(d.to_long_double() == Catch::Approx(-12345.0L * 1000000007.0L));
}
