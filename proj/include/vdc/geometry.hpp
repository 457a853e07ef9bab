#ifndef VDC_GEOMETRY_HPP
#define VDC_GEOMETRY_HPP

#include "common.hpp"
#include "ffield.hpp"
#include "mpoly.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace vdc
{

/// V(F_1, ..., F_r) over F_q, projective (all forms homogeneous) or affine.
struct variety_spec
{
    field base;
    std::size_t nvars;
    std::vector<fq_poly> forms;
    bool projective = true;

    variety_spec(field K, std::size_t n, std::vector<fq_poly> fs, bool proj = true)
        : base(std::move(K)), nvars(n), forms(std::move(fs)), projective(proj)
    {
        require(!forms.empty(), "variety needs at least one form");
        for (const auto &f : forms) {
            require(f.nvars() == nvars, "form has the wrong number of variables");
            require(f.base() == base, "form lives over a different field");
            require(!projective || f.is_homogeneous(), "projective variety needs homogeneous forms");
        }
    }
};

/// Rank of a rows x cols matrix over F_q (row-major), by elimination.
inline unsigned matrix_rank(const field &K, std::vector<field::elem> m, std::size_t rows, std::size_t cols)
{
    unsigned rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        while (piv < rows && m[piv * cols + c] == 0) {
            ++piv;
        }
        if (piv == rows) {
            continue;
        }
        if (piv != rank) {
            for (std::size_t j = 0; j < cols; ++j) {
                std::swap(m[piv * cols + j], m[rank * cols + j]);
            }
        }
        const field::elem inv = K.inv(m[rank * cols + c]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            const field::elem factor = K.mul(m[r * cols + c], inv);
            if (factor == 0) {
                continue;
            }
            for (std::size_t j = c; j < cols; ++j) {
                m[r * cols + j] = K.sub(m[r * cols + j], K.mul(factor, m[rank * cols + j]));
            }
        }
        ++rank;
    }
    return rank;
}

/// pi_d(q) = #P^d(F_q) = (q^{d+1} - 1)/(q - 1); pi_{-1} = 0.
inline mpz_class proj_size(std::uint64_t q, int d)
{
    if (d < 0) {
        return 0;
    }
    mpz_class r = 0;
    for (int i = 0; i <= d; ++i) {
        r = r * mpz_class(static_cast<unsigned long>(q)) + 1;
    }
    return r;
}

/// Dimension estimate from a rational point count: -1 for an empty set,
/// otherwise the unique d with g(d-1) < count <= g(d), where
/// g(d) = sqrt(pi_d(q) * pi_{d+1}(q)). Comparisons are done on squares, so
/// the result is exact. Capped at max_dim.
inline int dim_est(std::uint64_t count, std::uint64_t q, int max_dim = 64)
{
    if (count == 0) {
        return -1;
    }
    const mpz_class c2 = mpz_class(static_cast<unsigned long>(count)) * mpz_class(static_cast<unsigned long>(count));
    for (int d = 0; d < max_dim; ++d) {
        if (c2 <= proj_size(q, d) * proj_size(q, d + 1)) {
            return d;
        }
    }
    return max_dim;
}

/// Affine analogue of dim_est: thresholds sqrt(q^d * q^{d+1}).
inline int affine_dim_est(std::uint64_t count, std::uint64_t q, int max_dim = 64)
{
    if (count == 0) {
        return -1;
    }
    const mpz_class c2 = mpz_class(static_cast<unsigned long>(count)) * mpz_class(static_cast<unsigned long>(count));
    mpz_class qd = 1;
    for (int d = 0; d < max_dim; ++d) {
        if (c2 <= qd * qd * mpz_class(static_cast<unsigned long>(q))) {
            return d;
        }
        qd *= static_cast<unsigned long>(q);
    }
    return max_dim;
}

/// All canonical projective points on V.
inline std::vector<fq_point> proj_points(const variety_spec &v, budget &b = default_budget())
{
    require(v.projective, "proj_points needs a projective variety");
    unsigned deg = 0;
    for (const auto &f : v.forms) {
        deg = std::max(deg, static_cast<unsigned>(std::max(0, f.degree())));
    }
    std::vector<fq_point> out;
    power_table pw(v.base, v.nvars, deg);
    enum_proj(v.base, v.nvars,
              [&](const fq_point &x) {
                  pw.load(x);
                  for (const auto &f : v.forms) {
                      if (pw.eval(f) != 0) {
                          return;
                      }
                  }
                  out.push_back(x);
              },
              b);
    return out;
}

/// Exact #X(F_q) for X = V(polys) in affine n-space.
inline std::uint64_t affine_count(const std::vector<fq_poly> &polys, const field &K, budget &b = default_budget())
{
    require(!polys.empty(), "affine_count needs at least one polynomial");
    const std::size_t n = polys.front().nvars();
    unsigned deg = 0;
    for (const auto &f : polys) {
        require(f.nvars() == n && f.base() == K, "incompatible polynomials");
        deg = std::max(deg, static_cast<unsigned>(std::max(0, f.degree())));
    }
    const std::uint64_t total = checked_pow(K.q(), static_cast<unsigned>(n));
    require(total <= enumeration_cap, "q^n exceeds the enumeration cap 2^28");
    b.charge(total, "affine count");
    // Partition on the first coordinate; counts are integers so order is moot.
    auto counts = parallel_map(K.q(), [&](std::size_t first) {
        power_table pw(K, n, deg);
        fq_point x(n, 0);
        x[0] = static_cast<field::elem>(first);
        std::uint64_t c = 0;
        const std::uint64_t inner = total / K.q();
        for (std::uint64_t i = 0; i < inner; ++i) {
            pw.load(x);
            bool on = true;
            for (const auto &f : polys) {
                if (pw.eval(f) != 0) {
                    on = false;
                    break;
                }
            }
            c += on;
            for (std::size_t j = n; j-- > 1;) {
                if (++x[j] < K.q()) {
                    break;
                }
                x[j] = 0;
            }
        }
        return c;
    });
    std::uint64_t total_count = 0;
    for (auto c : counts) {
        total_count += c;
    }
    return total_count;
}

/// Result of a Jacobian-criterion scan of a projective variety.
struct sing_report
{
    std::string field_name;
    std::size_t nvars = 0;
    std::uint64_t total_points = 0;
    std::uint64_t sing_points = 0;
    unsigned expected_codim = 0;
    int dim_est_variety = -1;
    int dim_est_sing = -1;
    std::vector<fq_point> witnesses;

    static constexpr std::size_t max_witnesses = 16;
};

/// Count points of V and its singular points: x is singular when the
/// Jacobian of the first r forms has rank < r at x. Witnesses are the
/// first singular points in enumeration order.
inline sing_report sing_points(const variety_spec &v, unsigned r, budget &b = default_budget())
{
    require(v.projective, "sing_points needs a projective variety");
    require(r >= 1 && r <= v.forms.size(), "expected codimension must be between 1 and the number of forms");
    const field &K = v.base;
    const std::size_t n = v.nvars;
    require(checked_pow(K.q(), static_cast<unsigned>(n)) <= enumeration_cap, "q^n exceeds the enumeration cap 2^28");
    const std::uint64_t total = proj_count(K.q(), n);
    b.charge(total, "singular-locus scan");

    unsigned deg = 0;
    for (const auto &f : v.forms) {
        deg = std::max(deg, static_cast<unsigned>(std::max(0, f.degree())));
    }
    std::vector<std::vector<fq_poly>> jac(r);
    for (unsigned j = 0; j < r; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            jac[j].push_back(partial(v.forms[j], i));
        }
    }

    struct partial_result
    {
        std::uint64_t total = 0, sing = 0;
        std::vector<fq_point> wit;
    };
    const auto chunks = fixed_chunks(total, 512);
    auto parts = parallel_map(chunks.size(), [&](std::size_t c) {
        partial_result pr;
        power_table pw(K, n, deg);
        std::vector<field::elem> m(r * n);
        fq_point x = proj_point_at(K, n, chunks[c].first);
        for (std::uint64_t idx = chunks[c].first; idx < chunks[c].second; ++idx) {
            pw.load(x);
            bool on = true;
            for (const auto &f : v.forms) {
                if (pw.eval(f) != 0) {
                    on = false;
                    break;
                }
            }
            if (on) {
                ++pr.total;
                for (unsigned j = 0; j < r; ++j) {
                    for (std::size_t i = 0; i < n; ++i) {
                        m[j * n + i] = pw.eval(jac[j][i]);
                    }
                }
                if (matrix_rank(K, m, r, n) < r) {
                    ++pr.sing;
                    if (pr.wit.size() < sing_report::max_witnesses) {
                        pr.wit.push_back(x);
                    }
                }
            }
            next_proj_point(K, x);
        }
        return pr;
    });

    sing_report rep;
    rep.field_name = K.name();
    rep.nvars = n;
    rep.expected_codim = r;
    for (auto &pr : parts) {
        rep.total_points += pr.total;
        rep.sing_points += pr.sing;
        for (auto &w : pr.wit) {
            if (rep.witnesses.size() < sing_report::max_witnesses) {
                rep.witnesses.push_back(std::move(w));
            }
        }
    }
    const int cap = static_cast<int>(n) - 1;
    rep.dim_est_variety = dim_est(rep.total_points, K.q(), cap);
    rep.dim_est_sing = std::min(dim_est(rep.sing_points, K.q(), cap), rep.dim_est_variety);
    return rep;
}

// Differenced-form invariants ---------------------------------------------
//
// For F homogeneous over F_q and y, z in F_q^n:
//   V_y = V(F, F^y), V~_y = V(F^y), V_{y,z} = V(F, F^y, F^{y,z}),
//   s_y = dim Sing V_y, s~_y = dim Sing V~_y, sigma_y = max(s_y, s~_y),
//   s(y,z) = dim Sing V_{y,z}  (3 x n Jacobian test).
// A zero F^y or F^{y,z} is flagged as degenerate; the scan still runs with
// the zero row in the Jacobian.

struct sigma_result
{
    int s = -1;
    int s_tilde = -1;
    int sigma = -1;
    bool degenerate = false;
    std::uint64_t vy_points = 0;      // #V_y(F_q)
    std::uint64_t vy_sing = 0;        // #Sing V_y(F_q)
    std::uint64_t vty_points = 0;     // #V~_y(F_q)
    std::uint64_t vty_sing = 0;       // #Sing V~_y(F_q)
    int dim_est_vy = -1;
};

struct syz_result
{
    int s = -1;
    bool degenerate = false;
    std::uint64_t points = 0;
    std::uint64_t sing = 0;
    int dim_est_points = -1;
};

/// Values of F, grad F and Hess F at every point of P^{n-1}(F_q). All
/// directional invariants are linear in y and z, so sweeps over y or z only
/// need these tables.
class form_jets
{
public:
    form_jets(const fq_poly &F, budget &b = default_budget()) : m_field(F.base()), m_n(F.nvars())
    {
        require(F.is_homogeneous(), "form must be homogeneous");
        require(F.degree() >= 2, "form must have degree at least 2");
        m_points = proj_space(m_field, m_n, b);
        std::vector<fq_poly> grad;
        std::vector<fq_poly> hess;
        for (std::size_t i = 0; i < m_n; ++i) {
            grad.push_back(partial(F, i));
        }
        for (std::size_t i = 0; i < m_n; ++i) {
            for (std::size_t j = 0; j < m_n; ++j) {
                hess.push_back(partial(grad[i], j));
            }
        }
        const std::size_t stride = 1 + m_n + m_n * m_n;
        m_data.resize(m_points.size() * stride);
        const unsigned deg = static_cast<unsigned>(F.degree());
        auto chunks = fixed_chunks(m_points.size(), 512);
        parallel_map(chunks.size(), [&](std::size_t c) {
            power_table pw(m_field, m_n, deg);
            for (std::uint64_t k = chunks[c].first; k < chunks[c].second; ++k) {
                pw.load(m_points[k]);
                field::elem *row = &m_data[k * stride];
                row[0] = pw.eval(F);
                for (std::size_t i = 0; i < m_n; ++i) {
                    row[1 + i] = pw.eval(grad[i]);
                }
                for (std::size_t i = 0; i < m_n * m_n; ++i) {
                    row[1 + m_n + i] = pw.eval(hess[i]);
                }
            }
            return 0;
        });
    }

    const field &base() const { return m_field; }
    std::size_t nvars() const { return m_n; }
    std::size_t size() const { return m_points.size(); }
    const std::vector<fq_point> &points() const { return m_points; }

    field::elem value(std::size_t k) const { return m_data[k * stride()]; }
    const field::elem *grad(std::size_t k) const { return &m_data[k * stride() + 1]; }
    const field::elem *hess(std::size_t k) const { return &m_data[k * stride() + 1 + m_n]; }

    /// u . v over F_q.
    field::elem dot(const field::elem *u, std::span<const field::elem> v) const
    {
        field::elem acc = 0;
        for (std::size_t i = 0; i < m_n; ++i) {
            if (u[i] != 0 && v[i] != 0) {
                acc = m_field.add(acc, m_field.mul(u[i], v[i]));
            }
        }
        return acc;
    }

    /// (H v) for the symmetric n x n matrix H at a point.
    void mat_vec(const field::elem *H, std::span<const field::elem> v, field::elem *out) const
    {
        for (std::size_t i = 0; i < m_n; ++i) {
            out[i] = dot(H + i * m_n, v);
        }
    }

private:
    std::size_t stride() const { return 1 + m_n + m_n * m_n; }

    field m_field;
    std::size_t m_n;
    std::vector<fq_point> m_points;
    std::vector<field::elem> m_data;
};

/// sigma-invariants of y from precomputed jets. The Jacobian rows at x are
/// grad F(x), grad F^y(x) = Hess F(x) y, and F^y(x) = grad F(x) . y.
inline sigma_result sigma_y(const form_jets &J, const fq_poly &F, std::span<const field::elem> y)
{
    const field &K = J.base();
    const std::size_t n = J.nvars();
    sigma_result res;
    res.degenerate = directional_form(F, y).is_zero();
    std::vector<field::elem> gy(n), m(2 * n);
    for (std::size_t k = 0; k < J.size(); ++k) {
        const field::elem g = J.dot(J.grad(k), y);
        if (g != 0) {
            continue;
        }
        J.mat_vec(J.hess(k), y, gy.data());
        ++res.vty_points;
        const bool grad_zero = std::all_of(gy.begin(), gy.end(), [](auto e) { return e == 0; });
        if (grad_zero) {
            ++res.vty_sing;
        }
        if (J.value(k) != 0) {
            continue;
        }
        ++res.vy_points;
        std::copy(J.grad(k), J.grad(k) + n, m.begin());
        std::copy(gy.begin(), gy.end(), m.begin() + n);
        if (matrix_rank(K, m, 2, n) < 2) {
            ++res.vy_sing;
        }
    }
    const int cap = static_cast<int>(n) - 1;
    res.s = dim_est(res.vy_sing, K.q(), cap);
    res.s_tilde = dim_est(res.vty_sing, K.q(), cap);
    res.sigma = std::max(res.s, res.s_tilde);
    res.dim_est_vy = dim_est(res.vy_points, K.q(), cap);
    return res;
}

/// sigma-invariants of y, building the jets on the fly.
inline sigma_result sigma_y(const fq_poly &F, std::span<const field::elem> y, budget &b = default_budget())
{
    require(F.degree() >= 3, "sigma_y needs a form of degree at least 3");
    require(std::any_of(y.begin(), y.end(), [](auto e) { return e != 0; }), "y must be nonzero");
    form_jets J(F, b);
    return sigma_y(J, F, y);
}

/// Points of V_y with the first-order data needed for a sweep over z.
struct vy_jets
{
    struct entry
    {
        std::size_t index;                  // into form_jets::points()
        std::vector<field::elem> grad_f;    // grad F(x)
        std::vector<field::elem> grad_g;    // grad F^y(x)
        std::vector<field::elem> hess_g;    // Hess F^y(x), n x n
    };
    std::vector<entry> pts;
    std::vector<fq_poly> grad_g_polys;     // d F^y / d x_j
    bool degenerate = false;

    /// True when F^{y,z} = z . grad F^y is the zero polynomial.
    bool hessian_zero(std::span<const field::elem> z) const
    {
        if (degenerate) {
            return true;
        }
        fq_poly h(grad_g_polys.front().base(), grad_g_polys.front().nvars());
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (z[j] != 0) {
                h += grad_g_polys[j].scaled(z[j]);
            }
        }
        return h.is_zero();
    }
};

/// Collect V_y with Hess F^y, which needs third derivatives of F; these are
/// taken symbolically once per y.
inline vy_jets collect_vy(const form_jets &J, const fq_poly &F, std::span<const field::elem> y)
{
    const std::size_t n = J.nvars();
    const field &K = J.base();
    vy_jets out;
    const fq_poly G = directional_form(F, y);
    out.degenerate = G.is_zero();
    std::vector<fq_poly> hess_g;
    for (std::size_t i = 0; i < n; ++i) {
        const fq_poly gi = partial(G, i);
        out.grad_g_polys.push_back(gi);
        for (std::size_t j = 0; j < n; ++j) {
            hess_g.push_back(partial(gi, j));
        }
    }
    power_table pw(K, n, static_cast<unsigned>(std::max(1, F.degree())));
    for (std::size_t k = 0; k < J.size(); ++k) {
        if (J.value(k) != 0 || J.dot(J.grad(k), y) != 0) {
            continue;
        }
        vy_jets::entry e;
        e.index = k;
        e.grad_f.assign(J.grad(k), J.grad(k) + n);
        e.grad_g.resize(n);
        J.mat_vec(J.hess(k), y, e.grad_g.data());
        pw.load(J.points()[k]);
        e.hess_g.resize(n * n);
        for (std::size_t i = 0; i < n * n; ++i) {
            e.hess_g[i] = pw.eval(hess_g[i]);
        }
        out.pts.push_back(std::move(e));
    }
    return out;
}

/// s(y,z) from a collected V_y: F^{y,z}(x) = grad F^y(x) . z and
/// grad F^{y,z}(x) = Hess F^y(x) z.
inline syz_result s_yz(const vy_jets &V, const field &K, std::size_t n, std::span<const field::elem> z, bool hz_zero)
{
    syz_result res;
    res.degenerate = V.degenerate || hz_zero;
    std::vector<field::elem> m(3 * n);
    std::vector<field::elem> gh(n);
    for (const auto &e : V.pts) {
        field::elem h = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (z[i] != 0) {
                h = K.add(h, K.mul(e.grad_g[i], z[i]));
            }
        }
        if (h != 0) {
            continue;
        }
        ++res.points;
        for (std::size_t i = 0; i < n; ++i) {
            field::elem acc = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (z[j] != 0) {
                    acc = K.add(acc, K.mul(e.hess_g[i * n + j], z[j]));
                }
            }
            gh[i] = acc;
        }
        std::copy(e.grad_f.begin(), e.grad_f.end(), m.begin());
        std::copy(e.grad_g.begin(), e.grad_g.end(), m.begin() + n);
        std::copy(gh.begin(), gh.end(), m.begin() + 2 * n);
        if (matrix_rank(K, m, 3, n) < 3) {
            ++res.sing;
        }
    }
    const int cap = static_cast<int>(n) - 1;
    res.s = dim_est(res.sing, K.q(), cap);
    res.dim_est_points = dim_est(res.points, K.q(), cap);
    return res;
}

/// s(y,z) = dim Sing V(F, F^y, F^{y,z}).
inline syz_result s_yz(const fq_poly &F, std::span<const field::elem> y, std::span<const field::elem> z, budget &b = default_budget())
{
    require(F.degree() >= 3, "s_yz needs a form of degree at least 3");
    require(std::any_of(y.begin(), y.end(), [](auto e) { return e != 0; }), "y must be nonzero");
    require(std::any_of(z.begin(), z.end(), [](auto e) { return e != 0; }), "z must be nonzero");
    form_jets J(F, b);
    const vy_jets V = collect_vy(J, F, y);
    return s_yz(V, F.base(), F.nvars(), z, hessian_form(F, y, z).is_zero());
}

/// sigma_y for every y in P^{n-1}(F_q), in enumeration order.
inline std::vector<sigma_result> sigma_table(const form_jets &J, const fq_poly &F, budget &b = default_budget())
{
    b.charge(checked_pow(J.size(), 2), "sigma sweep");
    return parallel_map(J.size(), [&](std::size_t k) { return sigma_y(J, F, J.points()[k]); });
}

/// T_s = {y : sigma_y >= s} over the rational points.
struct t_set_result
{
    int s = -1;
    std::vector<std::size_t> members;   // indices into P^{n-1}(F_q)
    int dim_est = -1;
};

inline t_set_result t_set(const std::vector<sigma_result> &table, std::uint64_t q, std::size_t n, int s)
{
    t_set_result r;
    r.s = s;
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (table[k].sigma >= s) {
            r.members.push_back(k);
        }
    }
    r.dim_est = dim_est(r.members.size(), q, static_cast<int>(n) - 1);
    return r;
}

inline t_set_result t_set(const fq_poly &F, int s, budget &b = default_budget())
{
    require(F.degree() >= 3, "t_set needs a form of degree at least 3");
    form_jets J(F, b);
    return t_set(sigma_table(J, F, b), F.base().q(), F.nvars(), s);
}

// Prime admissibility ---------------------------------------------------------

struct r_policy
{
    unsigned max_ext_degree = 2;       // R_0 searches F_{p^k}, k <= this
    std::size_t r2_samples = 64;       // y samples once exhaustive is too big
    std::size_t r2_exhaustive_max = 121; // exhaustive R_2 when #P^{n-1}(F_p) <= this
    std::uint64_t seed = 0x5eed;
    bool run_r1 = true;
    bool run_r2 = true;
};

enum class r0_verdict { holds_certified, holds_empirically, fails, unknown };
enum class r_verdict { holds_empirically, fails, skipped_budget, not_run };

inline const char *to_string(r0_verdict v)
{
    switch (v) {
    case r0_verdict::holds_certified:
        return "holds_certified";
    case r0_verdict::holds_empirically:
        return "holds_empirically";
    case r0_verdict::fails:
        return "fails";
    default:
        return "unknown";
    }
}

inline const char *to_string(r_verdict v)
{
    switch (v) {
    case r_verdict::holds_empirically:
        return "holds_empirically";
    case r_verdict::fails:
        return "fails";
    case r_verdict::skipped_budget:
        return "skipped_budget";
    default:
        return "not_run";
    }
}

struct dim_bound_row
{
    int s = 0;
    std::uint64_t count = 0;
    int dim_est = -1;
    int bound = 0;
    bool ok = true;
};

struct r0_report
{
    r0_verdict verdict = r0_verdict::unknown;
    unsigned searched_degree = 0;
    std::string witness_field;
    std::optional<fq_point> witness;
};

struct r1_report
{
    r_verdict verdict = r_verdict::not_run;
    std::vector<dim_bound_row> rows;
    std::vector<int> sigma_histogram;   // count of y with sigma_y = -1, 0, ..., n-1
    std::size_t degenerate_count = 0;
    std::optional<int> witness_s;
    std::optional<fq_point> witness_y;
};

struct r2_y_row
{
    fq_point y;
    int sigma = -1;
    std::vector<dim_bound_row> rows;
    std::uint64_t t_deg_count = 0;
    int t_deg_dim_est = -1;
};

struct r2_report
{
    r_verdict verdict = r_verdict::not_run;
    bool sampled = false;
    std::size_t y_checked = 0;
    std::vector<r2_y_row> per_y;
    std::optional<fq_point> witness_y;
    std::optional<int> witness_s;
    std::optional<fq_point> witness_z;
    std::string note;
};

struct r_report
{
    std::uint32_t p = 0;
    std::size_t nvars = 0;
    r_policy policy;
    r0_report r0;
    r1_report r1;
    r2_report r2;
};

/// Smoothness is certified without search for diagonal forms whose
/// coefficients are units mod p and whose degree is prime to p: the
/// gradient (d c_i x_i^{d-1}) then vanishes only at the origin.
inline bool certified_smooth(const int_poly &F, std::uint32_t p)
{
    if (!is_diagonal(F) || F.degree() % static_cast<int>(p) == 0) {
        return false;
    }
    for (const auto &[m, c] : F.terms()) {
        if (mod_floor(c, p) == 0) {
            return false;
        }
    }
    return true;
}

inline r0_report r0_check(const int_poly &F, std::uint32_t p, const r_policy &pol, budget &b = default_budget())
{
    r0_report r;
    if (certified_smooth(F, p)) {
        r.verdict = r0_verdict::holds_certified;
        return r;
    }
    for (unsigned k = 1; k <= pol.max_ext_degree; ++k) {
        if (checked_pow(p, k) > field::max_q || checked_pow(checked_pow(p, k), static_cast<unsigned>(F.nvars())) > enumeration_cap) {
            break;
        }
        field K(p, k);
        if (!b.fits(proj_count(K.q(), F.nvars()))) {
            break;
        }
        variety_spec v(K, F.nvars(), {reduce_mod(F, K)});
        const sing_report rep = sing_points(v, 1, b);
        r.searched_degree = k;
        if (rep.sing_points > 0) {
            r.verdict = r0_verdict::fails;
            r.witness_field = K.name();
            r.witness = rep.witnesses.front();
            return r;
        }
    }
    r.verdict = r.searched_degree > 0 ? r0_verdict::holds_empirically : r0_verdict::unknown;
    return r;
}

namespace detail
{

inline std::vector<dim_bound_row> dim_rows(const std::vector<int> &values, std::uint64_t q, std::size_t n, int offset)
{
    std::vector<dim_bound_row> rows;
    for (int s = -1; s <= static_cast<int>(n) - 1; ++s) {
        dim_bound_row row;
        row.s = s;
        const int threshold = offset + s;
        for (int v : values) {
            row.count += v >= threshold;
        }
        row.dim_est = dim_est(row.count, q, static_cast<int>(n) - 1);
        row.bound = static_cast<int>(n) - 2 - s;
        row.ok = row.dim_est <= row.bound;
        rows.push_back(row);
    }
    return rows;
}

} // namespace detail

/// R_1 over F_p: dim T_s <= n-2-s for every s, from a full sigma sweep.
inline r1_report r1_check(const form_jets &J, const fq_poly &F, budget &b = default_budget())
{
    r1_report r;
    const std::size_t n = J.nvars();
    if (!b.fits(checked_pow(J.size(), 2))) {
        r.verdict = r_verdict::skipped_budget;
        return r;
    }
    const auto table = sigma_table(J, F, b);
    std::vector<int> sig;
    r.sigma_histogram.assign(n + 1, 0);
    for (const auto &t : table) {
        sig.push_back(t.sigma);
        r.sigma_histogram[t.sigma + 1] += 1;
        r.degenerate_count += t.degenerate;
    }
    r.rows = detail::dim_rows(sig, J.base().q(), n, 0);
    r.verdict = r_verdict::holds_empirically;
    for (const auto &row : r.rows) {
        if (!row.ok) {
            r.verdict = r_verdict::fails;
            r.witness_s = row.s;
            for (std::size_t k = 0; k < table.size(); ++k) {
                if (table[k].sigma >= row.s) {
                    r.witness_y = J.points()[k];
                    break;
                }
            }
            break;
        }
    }
    return r;
}

/// R_2 over F_p: for each checked y and every s,
/// dim T_{sigma_y + s + 1, y} <= n-2-s, where T_{t,y} = {z : s(y,z) >= t}.
inline r2_report r2_check(const form_jets &J, const fq_poly &F, const r_policy &pol, budget &b = default_budget())
{
    r2_report r;
    const std::size_t n = J.nvars();
    const field &K = J.base();
    std::vector<std::size_t> ys;
    if (J.size() <= pol.r2_exhaustive_max) {
        for (std::size_t k = 0; k < J.size(); ++k) {
            ys.push_back(k);
        }
    } else {
        r.sampled = true;
        std::mt19937_64 rng(pol.seed);
        std::vector<std::size_t> all(J.size());
        std::iota(all.begin(), all.end(), 0);
        const std::size_t take = std::min(pol.r2_samples, all.size());
        for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
            std::swap(all[i], all[pick(rng)]);
        }
        ys.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(ys.begin(), ys.end());
        r.note = "y sampled uniformly (seed " + std::to_string(pol.seed) + ")";
    }
    // Each (y, z) pair scans V_y, roughly #P^{n-1} / q points.
    const std::uint64_t cost = checked_pow(J.size(), 1) * ys.size() * (J.size() / K.q() + 1);
    if (!b.fits(cost)) {
        r.verdict = r_verdict::skipped_budget;
        return r;
    }
    auto rows = parallel_map(ys.size(), [&](std::size_t i) {
        const fq_point &y = J.points()[ys[i]];
        r2_y_row row;
        row.y = y;
        const sigma_result sig = sigma_y(J, F, y);
        row.sigma = sig.sigma;
        const vy_jets V = collect_vy(J, F, y);
        std::vector<int> svals;
        svals.reserve(J.size());
        const int base_dim = sig.dim_est_vy;
        for (std::size_t k = 0; k < J.size(); ++k) {
            const fq_point &z = J.points()[k];
            const bool hz_zero = V.hessian_zero(z);
            const syz_result sz = s_yz(V, K, n, z, hz_zero);
            svals.push_back(sz.s);
            if (sz.dim_est_points == base_dim) {
                ++row.t_deg_count;
            }
        }
        row.t_deg_dim_est = dim_est(row.t_deg_count, K.q(), static_cast<int>(n) - 1);
        row.rows = detail::dim_rows(svals, K.q(), n, sig.sigma + 1);
        return std::make_pair(row, svals);
    });
    b.charge(cost, "R_2 sweep");
    r.y_checked = ys.size();
    r.verdict = r_verdict::holds_empirically;
    for (auto &[row, svals] : rows) {
        if (r.verdict == r_verdict::holds_empirically) {
            for (const auto &d : row.rows) {
                if (!d.ok) {
                    r.verdict = r_verdict::fails;
                    r.witness_y = row.y;
                    r.witness_s = d.s;
                    for (std::size_t k = 0; k < svals.size(); ++k) {
                        if (svals[k] >= row.sigma + d.s + 1) {
                            r.witness_z = J.points()[k];
                            break;
                        }
                    }
                    break;
                }
            }
        }
        r.per_y.push_back(std::move(row));
    }
    return r;
}

/// Full R_0 / R_1 / R_2 check of a homogeneous integer form at p.
inline r_report r_check(const int_poly &F, std::uint32_t p, const r_policy &pol = {}, budget &b = default_budget())
{
    require(F.is_homogeneous(), "r_check needs a homogeneous form");
    require(F.degree() >= 3, "r_check needs degree at least 3");
    require(is_prime(p), "r_check needs a prime");
    r_report rep;
    rep.p = p;
    rep.nvars = F.nvars();
    rep.policy = pol;
    rep.r0 = r0_check(F, p, pol, b);
    if (!pol.run_r1 && !pol.run_r2) {
        return rep;
    }
    const std::uint64_t qn = checked_pow(p, static_cast<unsigned>(F.nvars()));
    if (p > field::max_q || qn > enumeration_cap || !b.fits(proj_count(p, F.nvars()))) {
        rep.r1.verdict = pol.run_r1 ? r_verdict::skipped_budget : r_verdict::not_run;
        rep.r2.verdict = pol.run_r2 ? r_verdict::skipped_budget : r_verdict::not_run;
        return rep;
    }
    const field K(p, 1);
    const fq_poly Fp = reduce_mod(F, K);
    if (Fp.degree() < 2) {
        rep.r1.verdict = rep.r2.verdict = r_verdict::fails;
        return rep;
    }
    const form_jets J(Fp, b);
    if (pol.run_r1) {
        rep.r1 = r1_check(J, Fp, b);
    }
    if (pol.run_r2) {
        rep.r2 = r2_check(J, Fp, pol, b);
    }
    return rep;
}

} // namespace vdc

#endif
