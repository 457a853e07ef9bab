#include "support.hpp"

#include <gtest/gtest.h>

using namespace vdc;
using namespace vdc_test;

namespace
{

const char *fermat5 = "x1^4+x2^4+x3^4+x4^4+x5^4";

fq_poly R(const char *s, std::size_t n, const field &K) { return reduce_mod(parse_poly(s, n), K); }

// Oracle over a prime field: walk the affine cone F_p^n \ 0 and divide by p-1.
std::uint64_t cone_count(const std::vector<int_poly> &fs, std::uint32_t p, std::size_t n)
{
    std::uint64_t c = 0;
    std::vector<std::int64_t> x(n, 0);
    while (true) {
        std::size_t i = 0;
        while (i < n && x[i] == static_cast<std::int64_t>(p) - 1) {
            x[i] = 0;
            ++i;
        }
        if (i == n) {
            break;
        }
        ++x[i];
        bool ok = true;
        for (const auto &f : fs) {
            ok = ok && divides(p, eval_mpz(f, x));
        }
        c += ok;
    }
    return c / (p - 1);
}

// Rank of an integer matrix mod a prime, by elimination on int64.
unsigned rank_mod(std::vector<std::vector<std::int64_t>> m, std::int64_t p)
{
    unsigned rank = 0;
    const std::size_t rows = m.size(), cols = rows ? m[0].size() : 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        while (piv < rows && mod_floor(m[piv][c], p) == 0) {
            ++piv;
        }
        if (piv == rows) {
            continue;
        }
        std::swap(m[piv], m[rank]);
        std::int64_t inv = 1;
        const std::int64_t a = mod_floor(m[rank][c], p);
        for (std::int64_t t = 1; t < p; ++t) {
            if (a * t % p == 1) {
                inv = t;
            }
        }
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank) {
                continue;
            }
            const std::int64_t f = mod_floor(m[r][c] * inv, p);
            for (std::size_t j = 0; j < cols; ++j) {
                m[r][j] = mod_floor(m[r][j] - f * m[rank][j], p);
            }
        }
        ++rank;
    }
    return rank;
}

// Singular-point oracle: projective points of V(fs) whose r x n Jacobian has rank < r.
std::uint64_t sing_oracle(const std::vector<int_poly> &fs, std::uint32_t p, std::size_t n)
{
    std::uint64_t c = 0;
    const field K(p, 1);
    for (const auto &pt : proj_space(K, n)) {
        std::vector<std::int64_t> x(pt.begin(), pt.end());
        bool on = true;
        for (const auto &f : fs) {
            on = on && divides(p, eval_mpz(f, x));
        }
        if (!on) {
            continue;
        }
        std::vector<std::vector<std::int64_t>> J;
        for (const auto &f : fs) {
            std::vector<std::int64_t> row;
            for (std::size_t i = 0; i < n; ++i) {
                row.push_back(mod_floor(eval_mpz(partial(f, i), x), p));
            }
            J.push_back(row);
        }
        c += rank_mod(J, p) < fs.size();
    }
    return c;
}

} // namespace

TEST(DimEst, Examples)
{
    EXPECT_EQ(dim_est(13, 3), 2);
    EXPECT_EQ(dim_est(0, 3), -1);
    EXPECT_EQ(dim_est(8, 7), 1);
    EXPECT_EQ(dim_est(1, 7), 0);
    EXPECT_EQ(dim_est(2801, 7), 4);
    // Threshold is the geometric mean of neighbouring projective sizes.
    EXPECT_EQ(dim_est(2, 7), 0);  // sqrt(1 * 8) = 2.83
    EXPECT_EQ(dim_est(3, 7), 1);
}

TEST(ProjPoints, Examples)
{
    const field F3(3, 1);
    EXPECT_EQ(proj_points(variety_spec(F3, 3, {R("x1", 3, F3)})).size(), 4u);
    const field F5(5, 1);
    EXPECT_EQ(proj_points(variety_spec(F5, 3, {R("x1", 3, F5), R("x2", 3, F5)})).size(), 1u);
    const field F7(7, 1);
    const auto cubic = parse_poly("x1^3+x2^3+x3^3", 3);
    EXPECT_EQ(proj_points(variety_spec(F7, 3, {reduce_mod(cubic, F7)})).size(), cone_count({cubic}, 7, 3));
}

TEST(AffineCount, Examples)
{
    const field F5(5, 1);
    EXPECT_EQ(affine_count({R("x1", 2, F5)}, F5), 5u);
    EXPECT_EQ(affine_count({fq_poly(F5, 2)}, F5), 25u);
    const field F7(7, 1);
    const auto cubic = parse_poly("x1^3+x2^3+x3^3", 3);
    std::uint64_t want = 0;
    for (int a = 0; a < 7; ++a) {
        for (int b = 0; b < 7; ++b) {
            for (int c = 0; c < 7; ++c) {
                want += (a * a * a + b * b * b + c * c * c) % 7 == 0;
            }
        }
    }
    EXPECT_EQ(affine_count({reduce_mod(cubic, F7)}, F7), want);
}

TEST(SingPoints, Examples)
{
    const field F7(7, 1);
    const auto r = sing_points(variety_spec(F7, 5, {R(fermat5, 5, F7)}), 1);
    EXPECT_EQ(r.sing_points, 0u);
    EXPECT_EQ(r.dim_est_sing, -1);
    EXPECT_EQ(r.dim_est_variety, 3);

    const field F5(5, 1);
    const auto node = sing_points(variety_spec(F5, 3, {R("x1*x2", 3, F5)}), 1);
    EXPECT_EQ(node.sing_points, 1u);
    ASSERT_EQ(node.witnesses.size(), 1u);
    EXPECT_EQ(node.witnesses[0], (fq_point{0, 0, 1}));

    const auto F = R(fermat5, 5, F7);
    const std::vector<field::elem> e1{1, 0, 0, 0, 0};
    const auto vy = sing_points(variety_spec(F7, 5, {F, directional_form(F, e1)}), 2);
    EXPECT_EQ(vy.dim_est_sing, 2);
}

TEST(SingPoints, JacobianOracle)
{
    std::mt19937_64 rng(41);
    for (int t = 0; t < 25; ++t) {
        const std::uint32_t p = std::vector<std::uint32_t>{3, 5, 7}[rng() % 3];
        const std::size_t n = 3 + rng() % 2;
        const field K(p, 1);
        std::vector<int_poly> fs;
        const std::size_t r = 1 + rng() % 2;
        for (std::size_t i = 0; i < r; ++i) {
            fs.push_back(leading_form(random_poly_of_degree(rng, n, 2 + rng() % 3, 3, 5)));
        }
        std::vector<fq_poly> qs;
        for (const auto &f : fs) {
            qs.push_back(reduce_mod(f, K));
        }
        if (std::any_of(qs.begin(), qs.end(), [](const fq_poly &q) { return q.is_zero(); })) {
            continue;
        }
        const auto rep = sing_points(variety_spec(K, n, qs), static_cast<unsigned>(r));
        EXPECT_EQ(rep.total_points, cone_count(fs, p, n));
        EXPECT_EQ(rep.sing_points, sing_oracle(fs, p, n));
        EXPECT_LE(rep.sing_points, rep.total_points);
        EXPECT_LE(rep.dim_est_sing, rep.dim_est_variety);
        EXPECT_EQ(rep.dim_est_sing == -1, rep.sing_points == 0);
        EXPECT_LE(rep.witnesses.size(), sing_report::max_witnesses);
        for (const auto &w : rep.witnesses) {
            for (const auto &q : qs) {
                EXPECT_EQ(q.eval(w), 0u);
            }
        }
    }
}

TEST(Sigma, Examples)
{
    const field F7(7, 1);
    const auto F = R(fermat5, 5, F7);
    const auto ones = sigma_y(F, std::vector<field::elem>{1, 1, 1, 1, 1});
    EXPECT_EQ(ones.sigma, -1);
    const auto e1 = sigma_y(F, std::vector<field::elem>{1, 0, 0, 0, 0});
    EXPECT_EQ(e1.s_tilde, 3);
    EXPECT_EQ(e1.s, 2);
    EXPECT_EQ(e1.sigma, 3);
    EXPECT_FALSE(e1.degenerate);

    const auto cubic = R("x1^3+x2^3+x3^3+x4^3+x5^3", 5, F7);
    EXPECT_EQ(sigma_y(cubic, std::vector<field::elem>{1, 0, 0, 0, 0}).dim_est_vy, 2);
}

TEST(Sigma, DegenerateDirectionalForm)
{
    // In characteristic 2, F = x1^4 + ... has F^y = 4(...) = 0.
    const field F2(2, 1);
    const auto F = R("x1^4+x2^4+x3^4", 3, F2);
    EXPECT_TRUE(sigma_y(F, std::vector<field::elem>{1, 0, 0}).degenerate);
}

TEST(Sigma, GaussMapNonvanishing)
{
    for (std::uint32_t p : {5u, 7u, 11u}) {
        const field K(p, 1);
        const auto F = R("x1^3+2*x2^3+x3^3+x4^3", 4, K);
        for (const auto &y : proj_space(K, 4)) {
            EXPECT_FALSE(directional_form(F, y).is_zero());
        }
    }
}

TEST(Syz, EmptyAndScan)
{
    const field F11(11, 1);
    const auto F = R(fermat5, 5, F11);
    const std::vector<field::elem> ones{1, 1, 1, 1, 1};
    const auto r = s_yz(F, ones, ones);
    EXPECT_FALSE(r.degenerate);
    EXPECT_LE(r.sing, r.points);
    EXPECT_GE(r.s, -1);

    const field F7(7, 1);
    const auto cubic = R("x1^3+x2^3+x3^3+x4^3+x5^3", 5, F7);
    const auto c = s_yz(cubic, std::vector<field::elem>{1, 0, 0, 0, 0}, std::vector<field::elem>{0, 1, 0, 0, 0});
    // F^y = 3x1^2, F^{y,z} = 0: flagged.
    EXPECT_TRUE(c.degenerate);
}

TEST(TSet, Extremes)
{
    const field F7(7, 1);
    const auto F = R(fermat5, 5, F7);
    EXPECT_EQ(t_set(F, 4).members.size(), 0u);
    EXPECT_EQ(t_set(F, -1).members.size(), 2801u);
    const auto t3 = t_set(F, 3);
    // sigma_y = 3 exactly for the coordinate vectors.
    EXPECT_EQ(t3.members.size(), 5u);
}

TEST(RCheck, Examples)
{
    const auto F = parse_poly(fermat5, 5);
    r_policy pol;
    pol.run_r2 = false;
    const auto r7 = r_check(F, 7, pol);
    EXPECT_EQ(r7.r0.verdict, r0_verdict::holds_certified);

    const auto bad = r_check(parse_poly("x1^2*x2^2+x3^4+x4^4+x5^4", 5), 7, pol);
    EXPECT_EQ(bad.r0.verdict, r0_verdict::fails);
    ASSERT_TRUE(bad.r0.witness.has_value());
    // Re-evaluate the witness: it is a singular point of the reduction.
    const field K = parse_field(bad.r0.witness_field);
    const auto Fq = R("x1^2*x2^2+x3^4+x4^4+x5^4", 5, K);
    EXPECT_EQ(Fq.eval(*bad.r0.witness), 0u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(partial(Fq, i).eval(*bad.r0.witness), 0u);
    }

    const auto r3 = r_check(F, 3, pol);
    EXPECT_EQ(r3.r1.sigma_histogram.size(), 6u);
    std::size_t total = r3.r1.degenerate_count;
    for (auto c : r3.r1.sigma_histogram) {
        total += c;
    }
    EXPECT_EQ(total, 121u);
    EXPECT_NE(r3.r1.verdict, r_verdict::not_run);
}

TEST(RCheck, BudgetIsNeverASilentPass)
{
    budget b(1000);
    const auto r = r_check(parse_poly(fermat5, 5), 7, {}, b);
    EXPECT_EQ(r.r1.verdict, r_verdict::skipped_budget);
    EXPECT_EQ(r.r2.verdict, r_verdict::skipped_budget);
}

TEST(RCheck, WorkerCountDoesNotChangeReports)
{
    const auto F = parse_poly(fermat5, 5);
    r_policy pol;
    pol.r2_samples = 4;
    set_workers(1);
    const auto a = r_check(F, 5, pol);
    set_workers(4);
    const auto b = r_check(F, 5, pol);
    set_workers(1);
    EXPECT_EQ(a.r1.sigma_histogram, b.r1.sigma_histogram);
    EXPECT_EQ(a.r2.y_checked, b.r2.y_checked);
    EXPECT_EQ(a.r2.witness_y, b.r2.witness_y);
    EXPECT_EQ(to_string(a.r2.verdict), to_string(b.r2.verdict));
}
