#include "support.hpp"

#include <gtest/gtest.h>

using namespace vdc;
using namespace vdc_test;

namespace
{

int_poly P(const char *s, std::size_t n) { return parse_poly(s, n); }

std::vector<std::int64_t> V(std::initializer_list<std::int64_t> v) { return v; }

} // namespace

TEST(Eval, Examples)
{
    EXPECT_EQ(eval(P("x1^3", 1), V({2})), 8);
    EXPECT_EQ(eval(int_poly(3), V({4, 5, 6})), 0);
    EXPECT_EQ(eval(P("x1^4+x2^4-2*x3^4", 3), V({1, 1, 1})), 0);
    EXPECT_THROW(eval(P("x1", 2), V({1})), precondition_error);
}

TEST(Eval, MatchesTermwiseOracle)
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 4;
        const auto f = random_poly(rng, n, 7, 9, 8);
        const auto x = random_vec(rng, n, 40);
        EXPECT_EQ(eval(f, std::span<const std::int64_t>(x)), eval_mpz(f, x));
        const auto xm = to_mpz_vector(x);
        EXPECT_EQ(eval(f, std::span<const mpz_class>(xm)), eval_mpz(f, x));
    }
}

TEST(Parse, GrammarAndCanonicalPrinting)
{
    const auto f = P("-3*x1^2*x2 + x5^4 - 7", 5);
    EXPECT_EQ(to_string(f), "x5^4 - 3*x1^2*x2 - 7");
    EXPECT_EQ(f.degree(), 4);
    EXPECT_EQ(to_string(P("  2 x1 x2  +x1^2 ", 2)), "x1^2 + 2*x1*x2");
    EXPECT_EQ(to_string(P("x1 - x1", 1)), "0");
    EXPECT_EQ(int_poly(2).degree(), -1);
    EXPECT_THROW(P("x3", 2), poly_parse_error);
    EXPECT_THROW(P("x1^", 1), poly_parse_error);
    EXPECT_THROW(P("y1", 1), poly_parse_error);
    EXPECT_THROW(P("", 1), poly_parse_error);
}

TEST(Parse, RoundTrip)
{
    std::mt19937_64 rng(12);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng() % 5;
        const auto f = random_poly(rng, n, 6, 20, 10);
        EXPECT_EQ(parse_poly(to_string(f), n), f) << to_string(f);
    }
}

TEST(Parse, Limits)
{
    EXPECT_THROW(check_limits(P("x1^13", 1)), precondition_error);
    EXPECT_NO_THROW(check_limits(P("x1^12", 1)));
    EXPECT_THROW(check_limits(int_poly(13)), precondition_error);
}

TEST(LeadingForm, Examples)
{
    EXPECT_EQ(leading_form(P("x1^4 + 3*x1*x2 + 7", 2)), P("x1^4", 2));
    const auto h = P("x1^2*x2 - 5*x2^3", 2);
    EXPECT_EQ(leading_form(h), h);
    EXPECT_EQ(leading_form(P("x1^3*x2 - x2^4 + x1^2", 2)), P("x1^3*x2 - x2^4", 2));
    EXPECT_THROW(leading_form(int_poly(2)), precondition_error);
}

TEST(Diff, Examples)
{
    EXPECT_EQ(to_string(diff_y(P("x1^3", 1), V({1}))), "3*x1^2 + 3*x1 + 1");
    EXPECT_TRUE(diff_y(P("x1^3 + x1*x2", 2), V({0, 0})).is_zero());
    EXPECT_EQ(diff_y(P("x1^4+x2^4", 2), V({1, 0})), P("4*x1^3+6*x1^2+4*x1+1", 2));
    EXPECT_EQ(diff_yz(P("x1^3", 1), V({1}), V({1})), P("6*x1+6", 1));
    EXPECT_TRUE(diff_yz(P("x1^3*x2", 2), V({1, 2}), V({0, 0})).is_zero());
    // f = x^3: f^{y,z} = 6xyz + 3y^2 z + 3y z^2.
    for (std::int64_t y = -3; y <= 3; ++y) {
        for (std::int64_t z = -3; z <= 3; ++z) {
            int_poly want = int_poly::variable(1, 0);
            want *= mpz_class(6 * y * z);
            monomial one;
            one.exps.assign(1, 0);
            want.add_term(one, 3 * y * y * z + 3 * y * z * z);
            EXPECT_EQ(diff_yz(P("x1^3", 1), V({y}), V({z})), want);
        }
    }
}

TEST(Diff, PointwiseOracle)
{
    std::mt19937_64 rng(13);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 4;
        const auto f = random_poly(rng, n, 6, 7, 8);
        const auto y = random_vec(rng, n, 6), z = random_vec(rng, n, 6), x = random_vec(rng, n, 10);
        std::vector<std::int64_t> xy(n), xz(n), xyz(n);
        for (std::size_t i = 0; i < n; ++i) {
            xy[i] = x[i] + y[i];
            xz[i] = x[i] + z[i];
            xyz[i] = x[i] + y[i] + z[i];
        }
        EXPECT_EQ(eval(diff_y(f, std::span<const std::int64_t>(y)), std::span<const std::int64_t>(x)), eval_mpz(f, xy) - eval_mpz(f, x));
        EXPECT_EQ(eval(diff_yz(f, std::span<const std::int64_t>(y), std::span<const std::int64_t>(z)), std::span<const std::int64_t>(x)),
                  eval_mpz(f, xyz) - eval_mpz(f, xy) - eval_mpz(f, xz) + eval_mpz(f, x));
    }
}

TEST(Forms, Examples)
{
    const auto F = P("x1^3+x2^3+x3^3+x4^3+x5^3", 5);
    EXPECT_EQ(directional_form(F, V({1, 0, 0, 0, 0})), P("3*x1^2", 5));
    EXPECT_TRUE(directional_form(F, V({0, 0, 0, 0, 0})).is_zero());
    EXPECT_EQ(directional_form(P("x1^2*x2^2", 2), V({1, 1})), P("2*x1*x2^2 + 2*x1^2*x2", 2));
    EXPECT_EQ(hessian_form(F, V({1, 0, 0, 0, 0}), V({1, 0, 0, 0, 0})), P("6*x1", 5));
    EXPECT_EQ(hessian_form(F, V({1, 1, 1, 1, 1}), V({1, 1, 1, 1, 1})), P("6*x1+6*x2+6*x3+6*x4+6*x5", 5));
    EXPECT_TRUE(hessian_form(F, V({0, 0, 0, 0, 0}), V({3, 1, 0, 0, 2})).is_zero());
    EXPECT_THROW(directional_form(P("x1^2+x1", 1), V({1})), precondition_error);
    EXPECT_THROW(hessian_form(P("x1+x2", 2), V({1, 0}), V({0, 1})), precondition_error);
}

TEST(Forms, PartialMatchesFiniteDifferenceOfMonomials)
{
    EXPECT_EQ(partial(P("x1^3*x2 - 4*x2^2 + 7", 2), 0), P("3*x1^2*x2", 2));
    EXPECT_EQ(partial(P("x1^3*x2 - 4*x2^2 + 7", 2), 1), P("x1^3 - 8*x2", 2));
}

TEST(Diagonal, Detection)
{
    EXPECT_TRUE(is_diagonal(P("x1^4+2*x2^4-x3^4", 3)));
    EXPECT_FALSE(is_diagonal(P("x1^4+x2^4", 3)));
    EXPECT_FALSE(is_diagonal(P("x1^4+x1*x2^3", 2)));
}

TEST(ReduceMod, Examples)
{
    EXPECT_EQ(to_string(reduce_mod(P("7*x1^2+3", 1), field(7, 1))), "3");
    EXPECT_EQ(to_string(reduce_mod(P("x1^4", 1), field(2, 1))), "x1^4");
    EXPECT_TRUE(reduce_mod(P("6*x1+10*x2", 2), field(2, 1)).is_zero());
    EXPECT_TRUE(reduce_mod(P("-9*x1^2", 1), field(3, 2)).is_zero());
}

// Randomized algebraic properties with exact canonical-form equality.
class DiffProperties : public ::testing::Test
{
protected:
    std::mt19937_64 rng{2024};
};

TEST_F(DiffProperties, SymmetryCompatibilityEulerLeadingCocycle)
{
    for (int t = 0; t < 400; ++t) {
        const std::size_t n = 1 + rng() % 4;
        const unsigned d = 1 + rng() % 6;
        const auto f = random_poly_of_degree(rng, n, d, 6, 8);
        const auto F = leading_form(f);
        const auto y = random_vec(rng, n, 4), z = random_vec(rng, n, 4), x = random_vec(rng, n, 6);
        const std::span<const std::int64_t> ys(y), zs(z), xs(x);

        EXPECT_EQ(diff_yz(f, ys, zs), diff_yz(f, zs, ys));

        if (d >= 2) {
            EXPECT_EQ(hessian_form(F, ys, zs), directional_form(directional_form(F, ys), zs));
        }

        int_poly euler(n);
        for (std::size_t i = 0; i < n; ++i) {
            euler += int_poly::variable(n, i) * partial(F, i);
        }
        int_poly dF = F;
        dF *= mpz_class(d);
        EXPECT_EQ(euler, dF);

        const std::int64_t a = 1 + static_cast<std::int64_t>(rng() % 5);
        std::vector<std::int64_t> ay(n);
        for (std::size_t i = 0; i < n; ++i) {
            ay[i] = a * y[i];
        }
        const auto Fy = directional_form(F, ys);
        if (!Fy.is_zero()) {
            int_poly want = Fy;
            want *= mpz_class(a);
            const auto dy = diff_y(f, std::span<const std::int64_t>(ay));
            EXPECT_EQ(leading_form(dy), want);
            EXPECT_EQ(diff_y(f, ys).degree(), static_cast<int>(d) - 1);
        }

        std::vector<std::int64_t> xz(n);
        for (std::size_t i = 0; i < n; ++i) {
            xz[i] = x[i] + z[i];
        }
        const auto fy = diff_y(f, ys);
        EXPECT_EQ(eval(diff_yz(f, ys, zs), xs), eval(fy, std::span<const std::int64_t>(xz)) - eval(fy, xs));
    }
}
