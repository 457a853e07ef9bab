#include "support.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace vdc;
using namespace vdc_test;

namespace
{

std::int64_t ipow(std::int64_t b, std::size_t e)
{
    std::int64_t r = 1;
    for (std::size_t i = 0; i < e; ++i) {
        r *= b;
    }
    return r;
}

std::vector<std::int64_t> add(const std::vector<std::int64_t> &a, const std::vector<std::int64_t> &b, std::int64_t s = 1)
{
    std::vector<std::int64_t> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        r[i] = a[i] + s * b[i];
    }
    return r;
}

// Every quantity straight from its definition, with the hat weight.
struct oracle
{
    int_poly f;
    std::int64_t B, pi, p, q;
    std::size_t n;

    mpq_class W(const std::vector<std::int64_t> &x) const { return hat_weight(x, B); }

    void box(const std::function<void(const std::vector<std::int64_t> &)> &fn) const { odometer(n, 2 * B - 1, fn); }

    mpq_class N(std::int64_t m) const
    {
        mpq_class s = 0;
        box([&](const auto &x) {
            if (divides(m, eval_mpz(f, x))) {
                s += W(x);
            }
        });
        return s;
    }

    mpq_class mass() const
    {
        mpq_class s = 0;
        box([&](const auto &x) { s += W(x); });
        return s;
    }

    mpq_class K() const { return mass() / mpq_class(ipow(pi, n) * p * q); }

    std::map<std::vector<std::int64_t>, mpq_class> A() const
    {
        std::map<std::vector<std::int64_t>, mpq_class> a;
        odometer(n, pi, [&](const auto &u) {
            if (std::all_of(u.begin(), u.end(), [&](auto v) { return v >= 0 && v < pi; })) {
                a[u] = 0;
            }
        });
        box([&](const auto &x) {
            if (divides(p * q, eval_mpz(f, x))) {
                std::vector<std::int64_t> u(n);
                for (std::size_t i = 0; i < n; ++i) {
                    u[i] = mod_floor(x[i], pi);
                }
                a[u] += W(x);
            }
        });
        return a;
    }

    mpq_class Sigma() const
    {
        const auto k = K();
        mpq_class s = 0;
        for (const auto &[u, v] : A()) {
            s += (v - k) * (v - k);
        }
        return s;
    }

    mpq_class S() const
    {
        const auto k = K();
        mpq_class s = 0;
        for (const auto &[u, v] : A()) {
            if (divides(pi, eval_mpz(f, u))) {
                s += v - k;
            }
        }
        return s;
    }

    mpq_class Delta(const std::vector<std::int64_t> &y) const
    {
        const auto shift = add(std::vector<std::int64_t>(n, 0), y, pi);
        mpq_class hit = 0, all = 0;
        box([&](const auto &x) {
            const auto xs = add(x, shift);
            const mpq_class w = W(x) * W(xs);
            if (w == 0) {
                return;
            }
            all += w;
            if (divides(p * q, eval_mpz(f, x)) && divides(p * q, eval_mpz(f, xs))) {
                hit += w;
            }
        });
        return hit - all / mpq_class(p * p * q * q);
    }

    mpq_class Delta(const std::vector<std::int64_t> &y, const std::vector<std::int64_t> &z) const
    {
        std::vector<std::int64_t> py(n), pz(n);
        for (std::size_t i = 0; i < n; ++i) {
            py[i] = pi * y[i];
            pz[i] = p * z[i];
        }
        mpq_class hit = 0, all = 0;
        box([&](const auto &x) {
            const auto a = add(x, py), b = add(x, pz), c = add(a, pz);
            const mpq_class w = W(x) * W(a) * W(b) * W(c);
            if (w == 0) {
                return;
            }
            all += w;
            const mpz_class f0 = eval_mpz(f, x), fa = eval_mpz(f, a), fb = eval_mpz(f, b), fc = eval_mpz(f, c);
            if (divides(q, f0) && divides(q, fb - f0) && divides(q, fc - fa - fb + f0)) {
                hit += w;
            }
        });
        return hit - all / mpq_class(q * q * q);
    }
};

mpq_class R(const quantity &v)
{
    EXPECT_TRUE(v.exact);
    return v.rational;
}

} // namespace

TEST(Pipeline, MatchesDefinitions)
{
    pipeline_params P;
    P.f = parse_poly("x1^4 - 2*x2^4 + x1*x2 + 3", 2);
    P.B = 3;
    P.pi = 2;
    P.p = 3;
    P.q = 5;
    P.weight = weight_kind::hat;
    const auto L = ledger(P);
    const oracle o{P.f, P.B, P.pi, P.p, P.q, 2};

    EXPECT_TRUE(L.exact);
    EXPECT_EQ(R(L.K), o.K());
    EXPECT_EQ(R(L.Sigma), o.Sigma());
    EXPECT_EQ(R(L.S), o.S());
    EXPECT_EQ(R(L.N_f_pipq), o.N(P.pi * P.p * P.q));
    EXPECT_EQ(R(L.N_0_pipq), o.mass());
    EXPECT_EQ(R(L.N_f_pq), o.N(P.p * P.q));
    EXPECT_EQ(R(L.E0), o.N(P.p * P.q) - mpq_class(ipow(P.pi, 2)) * o.K());
    EXPECT_EQ(L.Y, 4 * P.B / P.pi);
    EXPECT_EQ(L.Z, 4 * P.B / P.p);
    EXPECT_EQ(L.rows.size(), static_cast<std::size_t>(ipow(2 * L.Y + 1, 2)));

    std::uint64_t zeros = 0;
    odometer(2, 1, [&](const auto &u) {
        if (u[0] >= 0 && u[1] >= 0) {
            zeros += divides(P.pi, eval_mpz(P.f, u));
        }
    });
    EXPECT_EQ(L.zero_count_pi, zeros);

    for (const auto &row : L.rows) {
        EXPECT_EQ(R(row.delta), o.Delta(row.y)) << row.y[0] << "," << row.y[1];
        mpq_class ky = 0;
        odometer(2, 2 * P.B - 1, [&](const auto &x) {
            ky += hat_weight(x, P.B) * hat_weight(add(x, row.y, P.pi), P.B);
        });
        EXPECT_EQ(R(row.K_y), ky / mpq_class(ipow(P.p, 2) * P.q * P.q));
    }
    ASSERT_TRUE(L.pair_table_complete);
    ASSERT_FALSE(L.pair_table.empty());
    for (std::size_t i = 0; i < L.pair_table.size(); i += 7) {
        const auto &e = L.pair_table[i];
        EXPECT_EQ(R(e.value), o.Delta(L.rows[e.row].y, e.z));
    }
    EXPECT_TRUE(L.identities_ok());
}

TEST(Pipeline, IdentitiesExactOnRandomInstances)
{
    std::mt19937_64 rng(61);
    const std::vector<std::int64_t> primes{2, 3, 5, 7, 11, 13};
    for (int t = 0; t < 6; ++t) {
        pipeline_params P;
        P.f = random_poly_of_degree(rng, 3, 4, 5, 6);
        P.B = 1 + static_cast<std::int64_t>(rng() % 3);
        std::vector<std::int64_t> ps = primes;
        std::shuffle(ps.begin(), ps.end(), rng);
        P.pi = ps[0];
        P.p = ps[1];
        P.q = ps[2];
        const auto L = ledger(P);
        for (const auto &c : L.identities) {
            EXPECT_TRUE(c.ok) << c.name << " " << to_string(P.f);
            if (c.kind == "identity") {
                EXPECT_EQ(R(c.residual), 0) << c.name;
            }
        }
    }
}

TEST(Pipeline, SmoothWeightWithinTolerance)
{
    pipeline_params P;
    P.f = parse_poly("x1^4+x2^4-2*x3^4+x1*x2", 3);
    P.B = 3;
    P.pi = 3;
    P.p = 2;
    P.q = 7;
    P.weight = weight_kind::smooth;
    const auto L = ledger(P);
    EXPECT_FALSE(L.exact);
    for (const auto &c : L.identities) {
        EXPECT_TRUE(c.ok) << c.name;
        if (c.kind == "identity") {
            EXPECT_LE(std::fabs(c.residual.approx()), smooth_tolerance) << c.name;
        }
    }
}

TEST(Pipeline, WarningsAndErrors)
{
    pipeline_params P;
    P.f = parse_poly("x1^2+x2^2", 2);
    P.B = 2;
    P.pi = 2;
    P.p = 3;
    P.q = 5;
    const auto L = ledger(P);
    EXPECT_FALSE(L.warnings.empty());
    EXPECT_TRUE(L.identities_ok());

    P.q = 3;
    EXPECT_THROW(ledger(P), precondition_error);
    P.q = 4;
    EXPECT_THROW(ledger(P), precondition_error);

    P.q = 5;
    budget small(100);
    EXPECT_THROW(ledger(P, small), budget_exceeded);
}

TEST(Pipeline, WorkerCountInvariance)
{
    pipeline_params P;
    P.f = parse_poly("x1^4-x2^3*x3+2*x3^4-1", 3);
    P.B = 2;
    P.pi = 2;
    P.p = 3;
    P.q = 7;
    P.weight = weight_kind::smooth;
    set_workers(1);
    const auto a = ledger(P);
    set_workers(4);
    const auto b = ledger(P);
    set_workers(1);
    EXPECT_EQ(a.Sigma.real, b.Sigma.real);
    EXPECT_EQ(a.E4, b.E4);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].delta.real, b.rows[i].delta.real);
    }
}

TEST(Deviation, ReportsMeasuredAgainstTerms)
{
    const auto f = parse_poly("x1^3+x2^3+x3^3+x4^3", 4);
    const auto r = deviation_probe({f}, 4, 5, 7, weight_kind::hat);
    EXPECT_TRUE(r.check_p.ok);
    EXPECT_TRUE(r.check_q.ok);
    EXPECT_EQ(r.rows.size(), 3u);
    const mpq_class want = R(r.N_f) - R(r.N_0) / 35;
    EXPECT_NEAR(r.measured, std::fabs(want.get_d()), 1e-9);

    EXPECT_THROW(deviation_probe({parse_poly("x1^2+x2^2", 2)}, 4, 5, 7, weight_kind::hat), precondition_error);
}

TEST(SmoothIntersection, DetectsSingularReduction)
{
    EXPECT_TRUE(check_smooth_intersection({parse_poly("x1^3+x2^3+x3^3", 3)}, 5).ok);
    const auto bad = check_smooth_intersection({parse_poly("x1^3+x2^3+x3^3", 3)}, 3);
    EXPECT_FALSE(bad.ok);
    EXPECT_TRUE(bad.witness.has_value());
}
