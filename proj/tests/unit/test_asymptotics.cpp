#include "support.hpp"

#include <gtest/gtest.h>

using namespace vdc;
using namespace vdc_test;

namespace
{

bool trial_prime(std::uint64_t n)
{
    if (n < 2) {
        return false;
    }
    for (std::uint64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
            return false;
        }
    }
    return true;
}

// Largest monomial exponent recomputed with plain doubles from the printed bound.
double e4_max_double(long n)
{
    const double N = double(n), D = N * N + 8 * N - 4;
    const double al = (N * N - N - 2) / D, be = (N * N - 2 * N + 8) / D, ga = 2 * (N * N - N - 2) / D;
    const double t[10][4] = {
        {(3 * N + 1) / 4, -0.5, -0.5, (N - 4) / 8}, {(3 * N + 1) / 4, (N - 5) / 4, -0.5, -0.125},
        {(3 * N + 1) / 4, -0.5, (N - 5) / 4, -0.125}, {3 * N / 4, (N - 3) / 4, -0.25, -0.5},
        {(N + 1) / 2, (N - 3) / 4, -0.25, (N - 4) / 8}, {3 * N / 4, (N - 4) / 4, 0, -0.5},
        {(2 * N + 3) / 4, (N - 4) / 4, 0, (N - 5) / 8}, {(2 * N + 3) / 4, (N - 4) / 4, (N - 4) / 4, -0.125},
        {3 * N / 4, -0.5, (N - 2) / 4, -0.25}, {(2 * N + 1) / 4, -0.5, (N - 2) / 4, (N - 2) / 8},
    };
    double m = -1e300;
    for (const auto &r : t) {
        m = std::max(m, r[0] + al * r[1] + be * r[2] + ga * r[3]);
    }
    return m;
}

} // namespace

TEST(ThmExponent, Examples)
{
    EXPECT_EQ(thm_exponent(17), mpq_class(13) + mpq_class(611, 421));
    EXPECT_EQ(thm_exponent_display(17), "13 + 611/421");
    EXPECT_EQ(thm_exponent_display(29), "25 + 1055/1069");
    EXPECT_EQ(salberger_exponent(17), mpq_class(14) + mpq_class(9, 19));
    EXPECT_THROW(thm_exponent(4), precondition_error);
}

TEST(ThmExponent, Crossovers)
{
    long beat = 0, below = 0;
    for (long n = 5; n <= 200; ++n) {
        if (beat == 0 && thm_exponent(n) < salberger_exponent(n)) {
            beat = n;
        }
        if (below == 0 && thm_exponent(n) < n - 3) {
            below = n;
        }
        if (beat) {
            EXPECT_LT(thm_exponent(n), salberger_exponent(n)) << n;
        }
        if (below) {
            EXPECT_LT(thm_exponent(n), mpq_class(n - 3)) << n;
        }
    }
    EXPECT_EQ(beat, 17);
    EXPECT_EQ(below, 29);
    EXPECT_GE(thm_exponent(16), salberger_exponent(16));
    EXPECT_GE(thm_exponent(28), mpq_class(25));
}

TEST(ParamExponents, MainTermIdentity)
{
    for (long n = 5; n <= 200; ++n) {
        const auto pe = param_exponents(n);
        EXPECT_EQ(pe.main, thm_exponent(n)) << n;
        EXPECT_EQ(pe.gamma, 2 * pe.alpha);
        EXPECT_EQ(pe.q_exceeds_B, n >= 10) << n;
    }
}

TEST(E4, DominanceFromElevenOn)
{
    for (long n = 11; n <= 200; ++n) {
        const auto r = e4_term_exponents(n);
        EXPECT_TRUE(r.max_equals_main) << n;
        EXPECT_EQ(r.argmax, (std::vector<int>{1, 2, 9})) << n;
        EXPECT_NEAR(r.max_exponent.get_d(), e4_max_double(n), 1e-12) << n;
    }
}

TEST(E4, TieAtTen)
{
    const auto r = e4_term_exponents(10);
    EXPECT_TRUE(r.max_equals_main);
    EXPECT_FALSE(r.expected_dominance);
    EXPECT_GT(r.argmax.size(), 3u);
    for (int i : {1, 2, 9}) {
        EXPECT_NE(std::find(r.argmax.begin(), r.argmax.end(), i), r.argmax.end());
    }
}

TEST(Lemma41, TableShape)
{
    const auto t = lemma41_error_exponents(20);
    EXPECT_EQ(t.terms.size(), 11u);
    EXPECT_EQ(t.main, thm_exponent(20));
    for (const auto &e : t.terms) {
        if (e.param == "C") {
            EXPECT_EQ(e.param_value, 19);
        }
        if (e.param == "s") {
            EXPECT_EQ(e.param_value, -1);
        }
        EXPECT_EQ(e.exceeds_main, e.propagated > t.main);
    }
    const auto u = lemma41_error_exponents(20, 3, 5);
    for (const auto &e : u.terms) {
        if (e.param == "C") {
            EXPECT_EQ(e.param_value, 3);
        }
    }
    EXPECT_THROW(lemma41_error_exponents(3), precondition_error);
}

TEST(Primes, ScanMatchesTrialDivision)
{
    std::vector<std::uint64_t> got;
    scan_primes(1, 3000, [&](std::uint64_t p) {
        got.push_back(p);
        return false;
    });
    std::vector<std::uint64_t> want;
    for (std::uint64_t n = 1; n <= 3000; ++n) {
        if (trial_prime(n)) {
            want.push_back(n);
        }
    }
    EXPECT_EQ(got, want);

    std::vector<std::uint64_t> window;
    scan_primes(1000000000000ULL, 1000000000200ULL, [&](std::uint64_t p) {
        window.push_back(p);
        return false;
    });
    for (std::uint64_t n = 1000000000000ULL; n <= 1000000000200ULL; ++n) {
        EXPECT_EQ(std::find(window.begin(), window.end(), n) != window.end(), is_prime(n)) << n;
    }
    EXPECT_EQ(scan_primes(90, 100, [](std::uint64_t p) { return p > 95; }), std::optional<std::uint64_t>(97));
    EXPECT_FALSE(scan_primes(24, 28, [](std::uint64_t) { return true; }).has_value());
}

TEST(ScaledRoot, Examples)
{
    EXPECT_EQ(ceil_scaled_root(1, 1024, mpq_class(3, 10)), 8);
    EXPECT_EQ(floor_scaled_root(1, 1024, mpq_class(3, 10)), 8);
    EXPECT_EQ(floor_scaled_root(2, 1024, mpq_class(3, 10)), 16);
    EXPECT_EQ(ceil_scaled_root(1, 1000, mpq_class(1, 2)), 32);
    EXPECT_EQ(floor_scaled_root(1, 1000, mpq_class(1, 2)), 31);
    std::mt19937_64 rng(71);
    for (int t = 0; t < 200; ++t) {
        const std::uint64_t B = 2 + rng() % 100000;
        const mpq_class e(1 + static_cast<long>(rng() % 9), 10);
        const mpq_class c(1 + static_cast<long>(rng() % 5), 1 + static_cast<long>(rng() % 3));
        const double x = c.get_d() * std::pow(double(B), e.get_d());
        const auto lo = ceil_scaled_root(c, B, e), hi = floor_scaled_root(c, B, e);
        EXPECT_LE(std::fabs(lo.get_d() - std::ceil(x)), 1.0);
        EXPECT_LE(hi, lo);
        EXPECT_LE(lo - hi, 1);
    }
}

TEST(SelectPrime, PiRoleNeedsOnlySmoothness)
{
    const auto F = parse_poly("x1^4+x2^4+x3^4+x4^4+x5^4", 5);
    const auto a = select_prime(F, 2, 10, prime_role::pi, {});
    EXPECT_EQ(a.prime, 3u);
    ASSERT_EQ(a.rejected.size(), 1u);
    EXPECT_EQ(a.rejected[0].prime, 2u);
    EXPECT_EQ(a.filters, std::vector<std::string>{"R0"});
    const auto b = select_prime(F, 2, 10, prime_role::pi, {3});
    EXPECT_EQ(b.prime, 5u);
    EXPECT_EQ(b.rejected.size(), 2u);
}

TEST(SelectPrime, RefusalCarriesReasons)
{
    const auto F = parse_poly("x1^4+x2^4+x3^4+x4^4+x5^4", 5);
    try {
        select_prime(F, 2, 2, prime_role::pi, {});
        FAIL();
    } catch (const refusal_error &e) {
        EXPECT_NE(std::string(e.what()).find("2: R0 fails"), std::string::npos) << e.what();
    }
    try {
        select_prime(F, 24, 28, prime_role::q, {});
        FAIL();
    } catch (const refusal_error &e) {
        EXPECT_NE(std::string(e.what()).find("no primes in range"), std::string::npos);
    }
}

TEST(PrimeSelect, Preconditions)
{
    const auto F = parse_poly("x1^4+x2^4+x3^4+x4^4+x5^4", 5);
    EXPECT_THROW(prime_select(1, 5, 1, F), precondition_error);
    EXPECT_THROW(prime_select(100, 5, 0, F), precondition_error);
    EXPECT_THROW(prime_select(100, 4, 1, F), precondition_error);
    EXPECT_THROW(prime_select(100, 5, 1, parse_poly("x1^4+x2", 5)), precondition_error);
}
