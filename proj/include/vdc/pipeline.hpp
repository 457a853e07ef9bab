#ifndef VDC_PIPELINE_HPP
#define VDC_PIPELINE_HPP

#include "common.hpp"
#include "counting.hpp"
#include "ffield.hpp"
#include "geometry.hpp"
#include "mpoly.hpp"
#include "weight.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vdc
{

// The double-differencing ledger.
//
// Notation (w(x) = W(x/B), W_a(x) = W(x) W(x+a)):
//   A(u)      = sum_{x = u mod pi, pq | f(x)} w(x)                  u in F_pi^n
//   K         = pi^-n p^-1 q^-1 N_W(0, B, pi p q)
//   S         = sum_{u : f_pi(u) = 0} (A(u) - K)
//   Sigma     = sum_u (A(u) - K)^2
//   D1(y)     = sum_{pq | f(x), pq | f(x + pi y)} W_{pi y}(x/B)
//   M(y)      = sum_x W_{pi y}(x/B)
//   Delta(y)  = D1(y) - p^-2 q^-2 M(y)
//   C(v, a)   = sum_{x = v mod p, q | f(x), f^{pi y}(x) = a mod q} W_{pi y}(x/B)
//   K(y)      = p^-n q^-2 M(y)
//   S(y)      = sum_{v in X_y(F_p)} (C(v, 0) - K(y))
//   Sigma(y)  = sum_v (C(v, 0) - K(y))^2,  Sigma'(y) = sum_{v, a} (C(v, a) - K(y))^2
//   D2(y, z)  = sum_{q | f, q | f^{pz}, q | f^{pi y, pz}} W_{pi y, pz}(x/B)
//   Delta(y, z) = D2(y, z) - q^-3 sum_x W_{pi y, pz}(x/B)
//
// Everything is computed from these definitions; the identities between
// them are then checked as independent equalities.

using quantity = weighted_value;

inline quantity make_quantity(const mpq_class &v)
{
    quantity q;
    q.exact = true;
    q.rational = v;
    q.real = v.get_d();
    return q;
}

inline quantity make_quantity(double v)
{
    quantity q;
    q.exact = false;
    q.real = v;
    return q;
}

struct pipeline_params
{
    int_poly f{1};
    std::int64_t B = 1;
    std::int64_t pi = 2;
    std::int64_t p = 3;
    std::int64_t q = 5;
    weight_kind weight = weight_kind::hat;
    std::uint64_t max_pair_table = 20000; // Delta(y, z) entries kept in full
};

struct pipeline_y_row
{
    std::vector<std::int64_t> y;
    quantity pair_sum;          // D1(y)
    quantity mass;              // M(y)
    quantity delta;             // Delta(y)
    quantity K_y;
    quantity S_y;
    quantity Sigma_y;
    quantity Sigma_prime_y;
    quantity E2_y;
    std::uint64_t X_y = 0;      // #X_y(F_p)
    quantity sum_z_delta;       // sum_z Delta(y, z)
    quantity sum_z_abs_delta;   // sum_z |Delta(y, z)|
    quantity i6_residual;       // Delta(y) - S(y) - E2(y)
    quantity expansion_residual; // sum_{v,a} C^2 - sum_z D2(y, z)
    bool cauchy_ok = true;      // S(y)^2 <= #X_y Sigma(y)
    bool completion_ok = true;  // Sigma(y) <= Sigma'(y)
    std::optional<double> E3_y; // Delta(y) - p^{(n-2)/2} (sum_z Delta)^{1/2} - E2(y)
};

struct pair_entry
{
    std::size_t row = 0;
    std::vector<std::int64_t> z;
    quantity value;
};

struct identity_check
{
    std::string name;
    std::string kind; // "identity" or "inequality"
    quantity residual;
    bool ok = true;
    std::string detail;
};

struct pipeline_bounds
{
    int C = 0;
    double E0 = 0;
    double E1 = 0;
    double E3 = 0;
    double lemma_i_lhs = 0; // |N_W(f,B,pi pq) - (pi pq)^-1 N_W(0,B,pi pq)|
    double lemma_i_rhs = 0; // pi^{(n-1)/2} Sigma^{1/2} + B^n pi^{-n/2} p^-1 q^-1
};

struct pipeline_ledger
{
    pipeline_params params;
    std::size_t n = 0;
    bool exact = true;
    std::int64_t radius = -1; // support radius of w in lattice units
    std::int64_t Y = 0;       // |y| <= 4B/pi
    std::int64_t Z = 0;       // |z| <= 4B/p

    quantity N_f_pipq;  // N_W(f, B, pi p q)
    quantity N_0_pipq;  // N_W(0, B, pi p q)
    quantity N_f_pq;    // N_W(f, B, p q)
    quantity K;
    quantity S;
    quantity Sigma;
    quantity sum_sq;    // sum_u A(u)^2
    quantity sum_pairs; // sum_y D1(y)
    quantity sum_delta; // sum_y Delta(y)
    quantity sum_mass;  // sum_y M(y)
    quantity E0;        // N_W(f, B, pq) - pi^n K
    quantity E1;        // Sigma - sum_y Delta(y)
    quantity N_w2_pq;   // sum_{pq | f(x)} w(x)^2
    quantity sum_w2;    // sum_x w(x)^2
    std::uint64_t zero_count_pi = 0;

    std::vector<pipeline_y_row> rows;
    bool pair_table_complete = false;
    std::vector<pair_entry> pair_table;
    double E4 = 0;
    pipeline_bounds bounds;
    std::vector<identity_check> identities;
    std::vector<std::string> warnings;

    bool identities_ok() const
    {
        return std::all_of(identities.begin(), identities.end(), [](const identity_check &c) { return c.ok; });
    }

    const identity_check *find(const std::string &name) const
    {
        for (const auto &c : identities) {
            if (c.name == name) {
                return &c;
            }
        }
        return nullptr;
    }
};

/// E_4 = pi^{(n-1)/2} p^{(n-2)/4} ( sum_{y != 0} ( sum_z |Delta(y,z)| )^{1/2} )^{1/2},
/// from the per-y sums sum_z |Delta(y, z)|, y != 0, in a fixed order.
inline double e4(std::size_t n, std::int64_t pi, std::int64_t p, const std::vector<double> &abs_sums)
{
    compensated_sum s;
    for (double v : abs_sums) {
        s += std::sqrt(std::max(0.0, v));
    }
    return std::pow(double(pi), (double(n) - 1.0) / 2.0) * std::pow(double(p), (double(n) - 2.0) / 4.0) * std::sqrt(s.value());
}

/// Relative tolerance for identities under the smooth weight.
inline constexpr double smooth_tolerance = 1e-9;

namespace detail
{

inline mpz_class ipow(std::int64_t base, std::size_t e)
{
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), mpz_class(static_cast<long>(base)).get_mpz_t(), static_cast<unsigned long>(e));
    return r;
}

template <bool Exact>
struct pl_types;

template <>
struct pl_types<true>
{
    using pw = std::int64_t;
    using iv = __int128;
    using acc = wide_acc;
    using num = mpq_class;
};

template <>
struct pl_types<false>
{
    using pw = double;
    using iv = double;
    using acc = compensated_sum;
    using num = double;
};

inline mpq_class finish(const wide_acc &a, const mpz_class &unit)
{
    mpq_class r(a.value(), unit);
    r.canonicalize();
    return r;
}

inline double finish(const compensated_sum &a, const mpz_class &) { return a.value(); }

inline mpq_class finish(__int128 v, const mpz_class &unit)
{
    mpq_class r(to_mpz(v), unit);
    r.canonicalize();
    return r;
}

inline double finish(double v, const mpz_class &) { return v; }

template <typename Num>
Num from_mpq(const mpq_class &v)
{
    if constexpr (std::is_same_v<Num, double>) {
        return v.get_d();
    } else {
        return v;
    }
}

inline mpq_class abs_num(const mpq_class &v) { return abs(v); }
inline double abs_num(double v) { return std::fabs(v); }

/// Ordered sum of ledger numbers: exact for rationals, compensated for doubles.
template <typename Num>
class num_acc
{
public:
    void add(const Num &v)
    {
        if constexpr (std::is_same_v<Num, double>) {
            m_c += v;
        } else {
            m_q += v;
        }
    }
    Num value() const
    {
        if constexpr (std::is_same_v<Num, double>) {
            return m_c.value();
        } else {
            return m_q;
        }
    }

private:
    compensated_sum m_c;
    mpq_class m_q = 0;
};

/// lhs == sum(terms): exact difference for rationals, relative difference
/// against the total absolute size for doubles.
template <typename Num>
identity_check check_identity(std::string name, const Num &lhs, const std::vector<Num> &terms)
{
    identity_check c;
    c.name = std::move(name);
    c.kind = "identity";
    num_acc<Num> rhs;
    for (const auto &t : terms) {
        rhs.add(t);
    }
    if constexpr (std::is_same_v<Num, double>) {
        double scale = std::fabs(lhs);
        for (double t : terms) {
            scale += std::fabs(t);
        }
        const double res = scale > 0 ? std::fabs(lhs - rhs.value()) / scale : 0.0;
        c.residual = make_quantity(res);
        c.ok = res <= smooth_tolerance;
    } else {
        const mpq_class res = lhs - rhs.value();
        c.residual = make_quantity(res);
        c.ok = res == 0;
    }
    return c;
}

/// lhs <= rhs, with the smooth tolerance applied to doubles. The residual
/// reported is the slack rhs - lhs.
template <typename Num>
bool leq(const Num &lhs, const Num &rhs)
{
    if constexpr (std::is_same_v<Num, double>) {
        return lhs <= rhs + smooth_tolerance * (std::fabs(lhs) + std::fabs(rhs));
    } else {
        return lhs <= rhs;
    }
}

template <typename Num>
quantity to_quantity(const Num &v)
{
    return make_quantity(v);
}

template <typename Num>
struct y_result
{
    Num pair_sum = 0, mass = 0, delta = 0, K_y = 0, S_y = 0, Sigma_y = 0, Sigma_p = 0, E2 = 0;
    Num sum_dz = 0, sum_abs_dz = 0, i6 = 0, expansion = 0;
    std::uint64_t X_y = 0;
    bool cauchy_ok = true, completion_ok = true;
    std::vector<Num> dz;
};

template <bool Exact>
void run_pipeline(const pipeline_params &P, pipeline_ledger &L, budget &bud)
{
    using T = pl_types<Exact>;
    using pw_t = typename T::pw;
    using iv_t = typename T::iv;
    using acc_t = typename T::acc;
    using num = typename T::num;

    const int_poly &f = P.f;
    const std::size_t n = f.nvars();
    const std::int64_t pi = P.pi, p = P.p, q = P.q;
    const lattice_weight lw(P.weight, P.B);
    const std::int64_t R = lw.radius();
    const lattice_box box(n, R);
    const lattice_box ybox(n, L.Y);
    const lattice_box zbox(n, L.Z);
    const std::int64_t D = lw.denominator();
    const mpz_class unit1 = ipow(D, n), unit2 = ipow(D, 2 * n), unit4 = ipow(D, 4 * n);

    if constexpr (Exact) {
        // Largest integer formed: (sum of pair weights)^2 <= ((2R+1)^n (2B)^{2n})^2.
        const double bits = 2.0 * double(n) * (std::log2(double(2 * std::max<std::int64_t>(R, 0) + 1)) + 2.0 * std::log2(double(2 * P.B)));
        require(bits < 118.0, "exact weight sums exceed the 128-bit kernel range; use the smooth weight or a smaller box");
    }

    // Budget: the box tables plus one overlap scan and one z sweep per y.
    {
        const std::uint64_t work = box.size() + ybox.size() * (box.size() + zbox.size());
        if (work / std::max<std::uint64_t>(1, ybox.size()) < box.size()) {
            throw budget_exceeded("pipeline work estimate overflows");
        }
        bud.charge(work, "pipeline");
    }

    // Per-point tables over the support box.
    const std::uint64_t N = box.size();
    std::vector<pw_t> wpt(N);
    std::vector<std::uint32_t> fpi(N), fp(N), fq(N);
    std::vector<std::int32_t> xs(N * n);
    {
        const mod_evaluator epi(f, R, pi), ep(f, R, p), eq(f, R, q);
        const auto chunks = fixed_chunks(N, 4096);
        parallel_map(chunks.size(), [&](std::size_t c) {
            std::vector<std::int64_t> x(n);
            for (std::uint64_t k = chunks[c].first; k < chunks[c].second; ++k) {
                box.point(k, x.data());
                pw_t w = 1;
                for (std::size_t i = 0; i < n; ++i) {
                    xs[k * n + i] = static_cast<std::int32_t>(x[i]);
                    if constexpr (Exact) {
                        w *= lw.numerator(x[i]);
                    } else {
                        w *= lw.real(x[i]);
                    }
                }
                wpt[k] = w;
                fpi[k] = static_cast<std::uint32_t>(epi(x.data()));
                fp[k] = static_cast<std::uint32_t>(ep(x.data()));
                fq[k] = static_cast<std::uint32_t>(eq(x.data()));
            }
            return 0;
        });
    }

    // f on F_pi^n and F_p^n, indexed by sum v_i m^i.
    auto residue_table = [&](std::int64_t m) {
        const lattice_box cube(n, m - 1); // covers 0..m-1
        const mod_evaluator e(f, m - 1, m);
        const std::uint64_t total = checked_pow(static_cast<std::uint64_t>(m), static_cast<unsigned>(n));
        std::vector<std::uint32_t> t(total);
        std::vector<std::int64_t> v(n, 0);
        for (std::uint64_t k = 0; k < total; ++k) {
            t[k] = static_cast<std::uint32_t>(e(v.data()));
            for (std::size_t i = 0; i < n; ++i) {
                if (++v[i] < m) {
                    break;
                }
                v[i] = 0;
            }
        }
        (void)cube;
        return t;
    };
    const std::vector<std::uint32_t> fpi_cube = residue_table(pi);
    const std::vector<std::uint32_t> fp_cube = residue_table(p);
    auto cube_index = [&](const std::int32_t *x, std::int64_t m, const std::vector<std::int64_t> &shift) {
        std::uint64_t k = 0, s = 1;
        for (std::size_t i = 0; i < n; ++i) {
            k += static_cast<std::uint64_t>(mod_floor(std::int64_t(x[i]) + shift[i], m)) * s;
            s *= static_cast<std::uint64_t>(m);
        }
        return k;
    };

    // Level 0: sums over the box, and A(u).
    const std::uint64_t pin = checked_pow(static_cast<std::uint64_t>(pi), static_cast<unsigned>(n));
    const std::uint64_t pn = checked_pow(static_cast<std::uint64_t>(p), static_cast<unsigned>(n));
    std::vector<acc_t> A(pin);
    acc_t T0, Nf_pipq, Nf_pq, Nw2, W2;
    const std::vector<std::int64_t> no_shift(n, 0);
    for (std::uint64_t k = 0; k < N; ++k) {
        const iv_t w = wpt[k];
        T0 += w;
        W2 += w * w;
        if (fp[k] == 0 && fq[k] == 0) {
            Nf_pq += w;
            Nw2 += w * w;
            A[cube_index(&xs[k * n], pi, no_shift)] += w;
            if (fpi[k] == 0) {
                Nf_pipq += w;
            }
        }
    }
    L.zero_count_pi = static_cast<std::uint64_t>(std::count(fpi_cube.begin(), fpi_cube.end(), 0u));

    const num K = finish(T0, unit1) / from_mpq<num>(mpq_class(ipow(pi, n) * p * q));
    num S = 0, Sigma = 0, sum_sq = 0;
    {
        num_acc<num> s, sg, sq;
        for (std::uint64_t u = 0; u < pin; ++u) {
            const num a = finish(A[u], unit1);
            const num c = a - K;
            sg.add(c * c);
            sq.add(a * a);
            if (fpi_cube[u] == 0) {
                s.add(c);
            }
        }
        S = s.value();
        Sigma = sg.value();
        sum_sq = sq.value();
    }
    const num N_f_pq = finish(Nf_pq, unit1);
    const num E0 = N_f_pq - from_mpq<num>(mpq_class(ipow(pi, n))) * K;

    // One-dimensional weight correlations m1(t) = sum_x w(x) w(x+t) and
    // m2(a, b) = sum_x w(x) w(x+a) w(x+b) w(x+a+b), t, a, b in [-2R, 2R].
    const std::int64_t span = R >= 0 ? 4 * R + 1 : 0;
    auto w1 = [&](std::int64_t x) -> iv_t {
        if constexpr (Exact) {
            return lw.numerator(x);
        } else {
            return lw.real(x);
        }
    };
    std::vector<iv_t> m1(static_cast<std::size_t>(span), 0);
    std::vector<iv_t> m2(static_cast<std::size_t>(span * span), 0);
    for (std::int64_t a = -2 * R; a <= 2 * R && R >= 0; ++a) {
        iv_t s1 = 0;
        for (std::int64_t x = -R; x <= R; ++x) {
            s1 += w1(x) * w1(x + a);
        }
        m1[static_cast<std::size_t>(a + 2 * R)] = s1;
        for (std::int64_t b = -2 * R; b <= 2 * R; ++b) {
            iv_t s2 = 0;
            for (std::int64_t x = -R; x <= R; ++x) {
                s2 += w1(x) * w1(x + a) * w1(x + b) * w1(x + a + b);
            }
            m2[static_cast<std::size_t>((a + 2 * R) * span + (b + 2 * R))] = s2;
        }
    }
    auto m1_at = [&](std::int64_t t) -> iv_t {
        if (R < 0 || t < -2 * R || t > 2 * R) {
            return 0;
        }
        return m1[static_cast<std::size_t>(t + 2 * R)];
    };
    auto m2_at = [&](std::int64_t a, std::int64_t b) -> iv_t {
        if (R < 0 || a < -2 * R || a > 2 * R || b < -2 * R || b > 2 * R) {
            return 0;
        }
        return m2[static_cast<std::size_t>((a + 2 * R) * span + (b + 2 * R))];
    };

    // #X_y(F_p) depends only on pi y mod p.
    auto x_count = [&](const std::vector<std::int64_t> &t) {
        std::uint64_t c = 0;
        std::vector<std::int32_t> v(n, 0);
        std::vector<std::int64_t> vv(n, 0);
        for (std::uint64_t k = 0; k < pn; ++k) {
            if (fp_cube[k] == 0 && fp_cube[cube_index(v.data(), p, t)] == 0) {
                ++c;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (++v[i] < p) {
                    break;
                }
                v[i] = 0;
            }
        }
        return c;
    };

    const bool keep_table = ybox.size() * zbox.size() <= P.max_pair_table;
    const num pq2 = from_mpq<num>(mpq_class(mpz_class(p * q) * (p * q)));
    const num pn_q2 = from_mpq<num>(mpq_class(ipow(p, n) * q * q));
    const num pn_num = from_mpq<num>(mpq_class(ipow(p, n)));
    const num pnq_num = from_mpq<num>(mpq_class(ipow(p, n) * q));
    const num q3_num = from_mpq<num>(mpq_class(mpz_class(q) * q * q));
    mpq_class pn2 = n >= 2 ? mpq_class(ipow(p, n - 2)) : mpq_class(1, ipow(p, 2 - n));
    const num pn2_num = from_mpq<num>(pn2);
    const iv_t q3 = static_cast<iv_t>(q * q * q);

    auto per_y = [&](std::size_t yi) {
        y_result<num> out;
        std::vector<std::int64_t> y(n), t(n);
        ybox.point(yi, y.data());
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = pi * y[i];
        }
        out.X_y = x_count(t);

        // M(y) as a product of one-dimensional correlations.
        num mass;
        {
            if constexpr (Exact) {
                mpz_class m = 1;
                for (std::size_t i = 0; i < n; ++i) {
                    m *= to_mpz(m1_at(t[i]));
                }
                mass = mpq_class(m, unit2);
                mass.canonicalize();
            } else {
                double m = 1;
                for (std::size_t i = 0; i < n; ++i) {
                    m *= m1_at(t[i]);
                }
                mass = m;
            }
        }
        out.mass = mass;
        out.K_y = mass / pn_q2;

        // Overlap region: x and x + pi y both in the box.
        std::vector<std::int64_t> lo(n), hi(n);
        bool empty = R < 0;
        std::int64_t off = 0;
        for (std::size_t i = 0; i < n && !empty; ++i) {
            lo[i] = std::max(-R, -R - t[i]);
            hi[i] = std::min(R, R - t[i]);
            empty = lo[i] > hi[i];
            off += t[i] * static_cast<std::int64_t>(box.stride(i));
        }

        acc_t d1;
        struct member
        {
            std::uint64_t key;
            std::uint64_t k;
            iv_t w;
        };
        std::vector<member> G;
        if (!empty) {
            std::vector<std::int64_t> x = lo;
            do {
                const std::uint64_t k = box.index(x);
                if (fq[k] == 0) {
                    const std::uint64_t kt = static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + off);
                    const iv_t w2 = static_cast<iv_t>(wpt[k]) * static_cast<iv_t>(wpt[kt]);
                    if (fp[k] == 0 && fp[kt] == 0 && fq[kt] == 0) {
                        d1 += w2;
                    }
                    // f^{pi y}(x) = f(x + pi y) - f(x) = f(x + pi y) mod q here.
                    const std::uint64_t key = cube_index(&xs[k * n], p, no_shift) * static_cast<std::uint64_t>(q) + fq[kt];
                    G.push_back({key, k, w2});
                }
                std::size_t i = 0;
                for (; i < n; ++i) {
                    if (++x[i] <= hi[i]) {
                        break;
                    }
                    x[i] = lo[i];
                }
                if (i == n) {
                    break;
                }
            } while (true);
        }
        out.pair_sum = finish(d1, unit2);
        out.delta = out.pair_sum - mass / pq2;

        std::stable_sort(G.begin(), G.end(), [](const member &a, const member &b) { return a.key < b.key; });

        // Residue classes (v, a) and the pairs inside each class.
        std::vector<iv_t> D2(zbox.size(), 0);
        num_acc<num> s_acc, sig_acc, sigp_acc;
        acc_t sq_classes;
        std::uint64_t classes = 0, classes0 = 0;
        std::vector<std::int32_t> vcoord(n);
        for (std::size_t i = 0; i < G.size();) {
            std::size_t j = i;
            iv_t c_int = 0;
            while (j < G.size() && G[j].key == G[i].key) {
                c_int += G[j].w;
                ++j;
            }
            for (std::size_t u = i; u < j; ++u) {
                const std::int32_t *xu = &xs[G[u].k * n];
                for (std::size_t v = i; v < j; ++v) {
                    const std::int32_t *xv = &xs[G[v].k * n];
                    std::uint64_t zk = 0;
                    for (std::size_t c = 0; c < n; ++c) {
                        zk += static_cast<std::uint64_t>((xv[c] - xu[c]) / p + L.Z) * zbox.stride(c);
                    }
                    D2[zk] += G[u].w * G[v].w;
                }
            }
            sq_classes += c_int * c_int;
            const num c = finish(c_int, unit2);
            const num dev = c - out.K_y;
            sigp_acc.add(dev * dev);
            ++classes;
            const std::uint64_t a = G[i].key % static_cast<std::uint64_t>(q);
            if (a == 0) {
                ++classes0;
                sig_acc.add(dev * dev);
                const std::int32_t *xv = &xs[G[i].k * n];
                if (fp_cube[cube_index(xv, p, no_shift)] == 0 && fp_cube[cube_index(xv, p, t)] == 0) {
                    s_acc.add(c);
                }
            }
            i = j;
        }
        const num K2 = out.K_y * out.K_y;
        out.S_y = s_acc.value() - from_mpq<num>(mpq_class(static_cast<unsigned long>(out.X_y))) * out.K_y;
        out.Sigma_y = sig_acc.value() + (pn_num - from_mpq<num>(mpq_class(static_cast<unsigned long>(classes0)))) * K2;
        out.Sigma_p = sigp_acc.value() + (pnq_num - from_mpq<num>(mpq_class(static_cast<unsigned long>(classes)))) * K2;
        out.E2 = out.K_y * (from_mpq<num>(mpq_class(static_cast<unsigned long>(out.X_y))) - pn2_num);
        out.i6 = out.delta - out.S_y - out.E2;
        out.cauchy_ok = leq<num>(out.S_y * out.S_y, from_mpq<num>(mpq_class(static_cast<unsigned long>(out.X_y))) * out.Sigma_y);
        out.completion_ok = leq<num>(out.Sigma_y, out.Sigma_p);

        // Delta(y, z) over the z box, in units of q^-3 D^{-4n}.
        acc_t sum_d2, sum_d, sum_abs;
        std::vector<std::int64_t> z(n);
        if (keep_table) {
            out.dz.resize(zbox.size());
        }
        for (std::uint64_t zk = 0; zk < zbox.size(); ++zk) {
            zbox.point(zk, z.data());
            iv_t m2v = 1;
            for (std::size_t c = 0; c < n && m2v != 0; ++c) {
                m2v *= m2_at(t[c], p * z[c]);
            }
            const iv_t d2 = D2[zk];
            sum_d2 += d2;
            if constexpr (Exact) {
                __int128 prod;
                if (!__builtin_mul_overflow(q3, d2, &prod)) {
                    const __int128 d = prod - m2v;
                    sum_d += d;
                    sum_abs += d < 0 ? -d : d;
                    if (keep_table) {
                        out.dz[zk] = mpq_class(to_mpz(d), unit4 * (q * q * q));
                        out.dz[zk].canonicalize();
                    }
                } else {
                    throw precondition_error("exact Delta(y,z) exceeds the 128-bit kernel range");
                }
            } else {
                const double d = q3 * d2 - m2v;
                sum_d += d;
                sum_abs += std::fabs(d);
                if (keep_table) {
                    out.dz[zk] = d / double(q * q * q);
                }
            }
        }
        out.sum_dz = finish(sum_d, unit4) / q3_num;
        out.sum_abs_dz = finish(sum_abs, unit4) / q3_num;
        const num lhs2 = finish(sq_classes, unit4);
        const num rhs2 = finish(sum_d2, unit4);
        if constexpr (Exact) {
            out.expansion = lhs2 - rhs2;
        } else {
            const double scale = std::fabs(lhs2) + std::fabs(rhs2);
            out.expansion = scale > 0 ? std::fabs(lhs2 - rhs2) / scale : 0.0;
        }
        return out;
    };

    const std::vector<y_result<num>> ys = parallel_map(ybox.size(), per_y);

    // Assembly, single-threaded in y order.
    num_acc<num> sum_delta, sum_mass, sum_pairs;
    std::vector<double> abs_sums;
    bool i5_ok = true, w_support_ok = true;
    std::size_t i5_bad = 0, w_bad = 0;
    num i6_worst = 0, exp_worst = 0;
    bool i6_ok = true, exp_ok = true;
    const std::size_t zero_row = static_cast<std::size_t>(ybox.index(std::vector<std::int64_t>(n, 0)));
    L.rows.reserve(ys.size());
    for (std::size_t yi = 0; yi < ys.size(); ++yi) {
        const auto &r = ys[yi];
        pipeline_y_row row;
        row.y.resize(n);
        ybox.point(yi, row.y.data());
        sum_delta.add(r.delta);
        sum_mass.add(r.mass);
        sum_pairs.add(r.pair_sum);
        row.pair_sum = to_quantity(r.pair_sum);
        row.mass = to_quantity(r.mass);
        row.delta = to_quantity(r.delta);
        row.K_y = to_quantity(r.K_y);
        row.S_y = to_quantity(r.S_y);
        row.Sigma_y = to_quantity(r.Sigma_y);
        row.Sigma_prime_y = to_quantity(r.Sigma_p);
        row.E2_y = to_quantity(r.E2);
        row.X_y = r.X_y;
        row.sum_z_delta = to_quantity(r.sum_dz);
        row.sum_z_abs_delta = to_quantity(r.sum_abs_dz);
        row.expansion_residual = to_quantity(r.expansion);
        row.cauchy_ok = r.cauchy_ok;
        row.completion_ok = r.completion_ok;

        // I6 under the smooth weight is judged relative to the size of its terms.
        if constexpr (Exact) {
            row.i6_residual = to_quantity(r.i6);
            if (r.i6 != 0) {
                i6_ok = false;
            }
            if (abs_num(r.i6) > i6_worst) {
                i6_worst = abs_num(r.i6);
            }
            if (r.expansion != 0) {
                exp_ok = false;
            }
            if (abs_num(r.expansion) > exp_worst) {
                exp_worst = abs_num(r.expansion);
            }
        } else {
            const double scale = std::fabs(r.delta) + std::fabs(r.S_y) + std::fabs(r.E2);
            const double rel = scale > 0 ? std::fabs(r.i6) / scale : 0.0;
            row.i6_residual = make_quantity(rel);
            i6_ok = i6_ok && rel <= smooth_tolerance;
            i6_worst = std::max(i6_worst, rel);
            exp_ok = exp_ok && r.expansion <= smooth_tolerance;
            exp_worst = std::max(exp_worst, r.expansion);
        }
        if (!r.cauchy_ok || !r.completion_ok) {
            i5_ok = false;
            ++i5_bad;
        }
        std::int64_t ymax = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ymax = std::max(ymax, std::abs(pi * row.y[i]));
        }
        if (ymax >= 4 * P.B && (r.delta != 0 || r.pair_sum != 0 || r.mass != 0)) {
            w_support_ok = false;
            ++w_bad;
        }
        const double sum_dz_d = make_quantity(r.sum_dz).real;
        const double E3 = make_quantity(r.delta).real - std::pow(double(p), (double(n) - 2.0) / 2.0) * std::sqrt(std::max(0.0, sum_dz_d))
                          - make_quantity(r.E2).real;
        if (sum_dz_d >= 0) {
            row.E3_y = E3;
        }
        if (yi != zero_row) {
            abs_sums.push_back(make_quantity(r.sum_abs_dz).real);
        }
        if (keep_table) {
            std::vector<std::int64_t> zz(n);
            for (std::uint64_t zk = 0; zk < r.dz.size(); ++zk) {
                if (r.dz[zk] != 0) {
                    zbox.point(zk, zz.data());
                    L.pair_table.push_back({yi, zz, to_quantity(r.dz[zk])});
                }
            }
        }
        L.rows.push_back(std::move(row));
    }
    L.pair_table_complete = keep_table;

    const num pin_num = from_mpq<num>(mpq_class(ipow(pi, n)));
    L.N_f_pipq = to_quantity(finish(Nf_pipq, unit1));
    L.N_0_pipq = to_quantity(finish(T0, unit1));
    L.N_f_pq = to_quantity(N_f_pq);
    L.K = to_quantity(K);
    L.S = to_quantity(S);
    L.Sigma = to_quantity(Sigma);
    L.sum_sq = to_quantity(sum_sq);
    L.sum_pairs = to_quantity(sum_pairs.value());
    L.sum_delta = to_quantity(sum_delta.value());
    L.sum_mass = to_quantity(sum_mass.value());
    L.E0 = to_quantity(E0);
    L.E1 = to_quantity(Sigma - sum_delta.value());
    L.N_w2_pq = to_quantity(finish(Nw2, unit2));
    L.sum_w2 = to_quantity(finish(W2, unit2));
    L.E4 = e4(n, pi, p, abs_sums);

    const num zc = from_mpq<num>(mpq_class(static_cast<unsigned long>(L.zero_count_pi)));
    auto &I = L.identities;
    I.push_back(check_identity<num>("I1", finish(Nf_pipq, unit1), {S, K * zc}));
    I.back().detail = "N_W(f,B,pi p q) = S + K * #{u : f_pi(u) = 0}";
    I.push_back(check_identity<num>("I2", sum_sq, {sum_pairs.value()}));
    I.back().detail = "sum_u A(u)^2 = sum_y sum_{pq | f(x), pq | f(x + pi y)} W_{pi y}(x/B)";
    I.push_back(check_identity<num>("I3", Sigma, {sum_delta.value(), sum_mass.value() / pq2, -(pin_num * K * K), -(num(2) * K * E0)}));
    I.back().detail = "Sigma = sum_y Delta(y) + p^-2 q^-2 sum_y M(y) - pi^n K^2 - 2 K E_0";
    {
        identity_check c;
        c.name = "I4";
        c.kind = "inequality";
        const num slack = zc * Sigma - S * S;
        c.residual = to_quantity(slack);
        c.ok = leq<num>(S * S, zc * Sigma);
        c.detail = "S^2 <= #{u : f_pi(u) = 0} * Sigma (residual is the slack)";
        I.push_back(c);
    }
    {
        identity_check c;
        c.name = "I5";
        c.kind = "inequality";
        c.residual = make_quantity(mpq_class(static_cast<unsigned long>(i5_bad)));
        c.ok = i5_ok;
        c.detail = "S(y)^2 <= #X_y(F_p) Sigma(y) and Sigma(y) <= Sigma'(y) for every y (residual counts violations)";
        I.push_back(c);
    }
    {
        identity_check c;
        c.name = "I6";
        c.kind = "identity";
        c.residual = to_quantity(i6_worst);
        c.ok = i6_ok;
        c.detail = "Delta(y) - S(y) = E_2(y) = K(y) (#X_y(F_p) - p^{n-2}) for every y (residual is the worst case)";
        I.push_back(c);
    }
    {
        identity_check c;
        c.name = "second_expansion";
        c.kind = "identity";
        c.residual = to_quantity(exp_worst);
        c.ok = exp_ok;
        c.detail = "sum_{v,a} C(v,a)^2 = sum_z D2(y,z) for every y (residual is the worst case)";
        I.push_back(c);
    }
    {
        identity_check c = check_identity<num>("delta0", ys[zero_row].delta, {finish(Nw2, unit2), -(finish(W2, unit2) / pq2)});
        c.detail = "Delta(0) = N_{W^2}(f,B,pq) - p^-2 q^-2 sum_x W(x/B)^2";
        I.push_back(c);
    }
    {
        identity_check c;
        c.name = "W_support";
        c.kind = "identity";
        c.residual = make_quantity(mpq_class(static_cast<unsigned long>(w_bad)));
        c.ok = w_support_ok;
        c.detail = "Delta(y) = 0 whenever |pi y| >= 4B (residual counts violations)";
        I.push_back(c);
    }

    // Bound terms with unit implied constants, C = n - 1; reported, never asserted.
    const double Bd = double(P.B), pid = double(pi), pd = double(p), qd = double(q), nd = double(n);
    const int C = std::max(1, static_cast<int>(n) - 1);
    L.bounds.C = C;
    L.bounds.E0 = std::pow(Bd, (nd + 1) / 2) * std::pow(pd, -0.5) * std::pow(qd, (nd - 2) / 4)
                  + std::pow(Bd, (nd + 1) / 2) * std::pow(pd, (nd - 2) / 2) * std::pow(qd, -0.25) + std::pow(Bd, nd) * std::pow(pd, -nd / 2) / qd;
    L.bounds.E1 = std::pow(Bd, (3 * nd + 1) / 2) * std::pow(pid, -nd) * std::pow(pd, -1.5) * std::pow(qd, (nd - 6) / 4)
                  + std::pow(Bd, (3 * nd + 1) / 2) * std::pow(pid, -nd) * std::pow(pd, (nd - 4) / 2) * std::pow(qd, -1.25)
                  + std::pow(Bd, 2 * nd) * std::pow(pid, -nd) * std::pow(pd, -(nd + 2) / 2) * std::pow(qd, -2)
                  + std::pow(Bd, 2 * nd - C) * std::pow(pid, -nd + C) * std::pow(pd, -2) * std::pow(qd, -2);
    L.bounds.E3 = std::pow(Bd, (nd + 1) / 2) / pd * std::pow(qd, (nd - 6) / 4) + std::pow(Bd, nd - C) * std::pow(pd, -1 + C) * std::pow(qd, -1.5);
    const double Npipq = L.N_f_pipq.approx(), N0 = L.N_0_pipq.approx();
    L.bounds.lemma_i_lhs = std::fabs(Npipq - N0 / (pid * pd * qd));
    L.bounds.lemma_i_rhs = std::pow(pid, (nd - 1) / 2) * std::sqrt(std::max(0.0, L.Sigma.approx())) + std::pow(Bd, nd) * std::pow(pid, -nd / 2) / (pd * qd);
}

} // namespace detail

/// Compute the full ledger for (f, B, pi, p, q, weight).
inline pipeline_ledger ledger(const pipeline_params &P, budget &b = default_budget())
{
    require(P.B >= 1, "box size B must be a positive integer");
    for (std::int64_t m : {P.pi, P.p, P.q}) {
        require(m >= 2 && is_prime(static_cast<std::uint64_t>(m)), "pi, p, q must be primes");
    }
    require(P.pi != P.p && P.pi != P.q && P.p != P.q, "pi, p, q must be pairwise distinct");
    require(P.f.nvars() <= poly_limits{}.max_nvars, "too many variables");
    pipeline_ledger L;
    L.params = P;
    L.n = P.f.nvars();
    L.exact = is_exact(P.weight);
    L.radius = lattice_weight(P.weight, P.B).radius();
    L.Y = 4 * P.B / P.pi;
    L.Z = 4 * P.B / P.p;
    if (P.f.degree() < 2) {
        L.warnings.push_back("deg f < 2: identities still hold, the lemma's setting needs deg f >= 4");
    } else if (P.f.degree() < 4) {
        L.warnings.push_back("deg f < 4: outside the lemma's setting, identities still hold");
    }
    if (!(P.pi <= P.B && P.p <= P.B && 4 * P.B < P.q)) {
        L.warnings.push_back("hypothesis pi, p <= B < q/4 fails: identities hold, bounds need not");
    }
    if (L.exact) {
        detail::run_pipeline<true>(P, L, b);
    } else {
        detail::run_pipeline<false>(P, L, b);
    }
    return L;
}

// Deviation probe ----------------------------------------------------------------

struct smoothness_check
{
    std::uint32_t p = 0;
    bool ok = false;
    int dim_est = -1;
    std::string searched; // fields scanned, e.g. "5,5^2"
    std::string reason;
    std::optional<fq_point> witness;
    std::string witness_field;
};

/// Checks that V(F_1, ..., F_r) mod p has the expected dimension n-1-r and
/// no singular points over F_p and F_{p^2} (when the latter fits the cap).
inline smoothness_check check_smooth_intersection(const std::vector<int_poly> &forms, std::uint32_t p, budget &b = default_budget())
{
    smoothness_check out;
    out.p = p;
    const std::size_t n = forms.front().nvars();
    const std::size_t r = forms.size();
    const int expected = static_cast<int>(n) - 1 - static_cast<int>(r);
    bool dim_ok = false;
    for (unsigned k = 1; k <= 2; ++k) {
        if (checked_pow(p, k) > field::max_q || checked_pow(checked_pow(p, k), static_cast<unsigned>(n)) > enumeration_cap) {
            break;
        }
        const field K(p, k);
        std::vector<fq_poly> fs;
        for (const auto &F : forms) {
            fs.push_back(reduce_mod(F, K));
        }
        if (std::any_of(fs.begin(), fs.end(), [](const fq_poly &g) { return g.is_zero(); })) {
            out.reason = "a form vanishes identically mod " + std::to_string(p);
            return out;
        }
        const sing_report rep = sing_points(variety_spec(K, n, fs), static_cast<unsigned>(r), b);
        out.searched += (out.searched.empty() ? "" : ",") + K.name();
        if (rep.dim_est_variety == expected) {
            dim_ok = true;
            out.dim_est = rep.dim_est_variety;
        } else if (!dim_ok) {
            out.dim_est = rep.dim_est_variety;
        }
        if (rep.sing_points > 0) {
            out.reason = "singular point found";
            out.witness = rep.witnesses.front();
            out.witness_field = K.name();
            return out;
        }
    }
    if (!dim_ok) {
        out.reason = "dimension hypothesis fails: dim_est = " + std::to_string(out.dim_est) + ", expected " + std::to_string(expected);
        return out;
    }
    out.ok = true;
    return out;
}

struct deviation_row
{
    int C = 0;
    double terms[4] = {0, 0, 0, 0};
    double total = 0;
    double margin = 0; // total - measured
};

struct deviation_report
{
    std::size_t nvars = 0;
    std::size_t r = 0;
    std::int64_t B = 0, p = 0, q = 0;
    weight_kind weight = weight_kind::smooth;
    quantity N_f;      // N_W(f_1..f_r, B, pq)
    quantity N_0;      // N_W(0, B, pq)
    double measured = 0;
    std::vector<deviation_row> rows;
    smoothness_check check_p, check_q;
    std::vector<std::string> warnings;
};

/// Measures |N_W(f_1..f_r, B, pq) - (pq)^{-r} N_W(0, B, pq)| against the four
/// error terms of the weighted asymptotic, for C = 1, ..., n-1, after
/// verifying that the leading forms cut smooth complete intersections mod p
/// and mod q.
inline deviation_report deviation_probe(const std::vector<int_poly> &fs, std::int64_t B, std::int64_t p, std::int64_t q, weight_kind w,
                                        budget &b = default_budget())
{
    require(!fs.empty(), "need at least one polynomial");
    require(p != q && p >= 2 && q >= 2 && is_prime(std::uint64_t(p)) && is_prime(std::uint64_t(q)), "p and q must be distinct primes");
    require(B >= 1, "box size B must be positive");
    deviation_report rep;
    rep.nvars = fs.front().nvars();
    rep.r = fs.size();
    rep.B = B;
    rep.p = p;
    rep.q = q;
    rep.weight = w;
    std::vector<int_poly> lead;
    for (const auto &f : fs) {
        require(f.nvars() == rep.nvars, "polynomials live in different variable counts");
        require(f.degree() >= 3, "the weighted asymptotic needs polynomials of degree at least 3");
        lead.push_back(leading_form(f));
    }
    for (std::size_t i = 0; i < fs.size(); ++i) {
        for (std::size_t j = i + 1; j < fs.size(); ++j) {
            if (lead[i] == lead[j]) {
                throw refusal_error("duplicated leading forms: dim Z != n-1-r");
            }
        }
    }
    rep.check_p = check_smooth_intersection(lead, static_cast<std::uint32_t>(p), b);
    if (!rep.check_p.ok) {
        throw refusal_error("hypothesis fails at p = " + std::to_string(p) + ": " + rep.check_p.reason);
    }
    rep.check_q = check_smooth_intersection(lead, static_cast<std::uint32_t>(q), b);
    if (!rep.check_q.ok) {
        throw refusal_error("hypothesis fails at q = " + std::to_string(q) + ": " + rep.check_q.reason);
    }
    if (!(p <= B && B <= q)) {
        rep.warnings.push_back("hypothesis p <= B <= q fails");
    }
    rep.N_f = weighted_count(fs, B, p * q, w, b);
    rep.N_0 = weighted_count({int_poly(rep.nvars)}, B, p * q, w, b);
    const double r = double(rep.r), n = double(rep.nvars), Bd = double(B), pd = double(p), qd = double(q);
    if (rep.N_f.exact) {
        mpq_class pr = 1;
        for (std::size_t i = 0; i < rep.r; ++i) {
            pr *= mpq_class(1, p * q);
        }
        rep.measured = mpq_class(abs(rep.N_f.rational - rep.N_0.rational * pr)).get_d();
    } else {
        rep.measured = std::fabs(rep.N_f.real - rep.N_0.real * std::pow(pd * qd, -r));
    }
    for (int C = 1; C <= static_cast<int>(rep.nvars) - 1; ++C) {
        deviation_row row;
        row.C = C;
        row.terms[0] = std::pow(Bd, (n + 1) / 2) * std::pow(pd, -r / 2) * std::pow(qd, (n - r - 1) / 4);
        row.terms[1] = std::pow(Bd, (n + 1) / 2) * std::pow(pd, (n - 2 * r) / 2) * std::pow(qd, -0.25);
        row.terms[2] = std::pow(Bd, n) * std::pow(pd, -(n + r - 1) / 2) * std::pow(qd, -r);
        row.terms[3] = std::pow(Bd, n - C / 2.0) * std::pow(pd, (C - r) / 2) * std::pow(qd, -r / 2);
        row.total = row.terms[0] + row.terms[1] + row.terms[2] + row.terms[3];
        row.margin = row.total - rep.measured;
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace vdc

#endif
