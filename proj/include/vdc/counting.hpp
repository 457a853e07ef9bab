#ifndef VDC_COUNTING_HPP
#define VDC_COUNTING_HPP

#include "common.hpp"
#include "ffield.hpp"
#include "geometry.hpp"
#include "mpoly.hpp"
#include "weight.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vdc
{

/// Exact accumulator: a 128-bit running sum that spills into an mpz on
/// overflow. Addends must themselves fit in 128 bits.
class wide_acc
{
public:
    void add(__int128 v)
    {
        __int128 r;
        if (__builtin_add_overflow(m_lo, v, &r)) {
            m_hi += to_mpz(m_lo);
            m_lo = v;
        } else {
            m_lo = r;
        }
    }

    wide_acc &operator+=(__int128 v)
    {
        add(v);
        return *this;
    }

    wide_acc &operator+=(const wide_acc &o)
    {
        m_hi += o.m_hi;
        add(o.m_lo);
        return *this;
    }

    mpz_class value() const { return m_hi + to_mpz(m_lo); }

private:
    __int128 m_lo = 0;
    mpz_class m_hi = 0;
};

// Box geometry ----------------------------------------------------------------

/// The lattice box [-R, R]^n with linear index sum_i (x_i + R) (2R+1)^i,
/// so x_1 runs fastest.
class lattice_box
{
public:
    lattice_box(std::size_t n, std::int64_t R) : m_n(n), m_R(R)
    {
        require(n >= 1, "box needs at least one coordinate");
        m_side = R >= 0 ? static_cast<std::uint64_t>(2 * R + 1) : 0;
        m_size = checked_pow(m_side, static_cast<unsigned>(n));
        m_stride.resize(n);
        std::uint64_t s = 1;
        for (std::size_t i = 0; i < n; ++i) {
            m_stride[i] = s;
            s *= m_side;
        }
    }

    std::size_t dim() const { return m_n; }
    std::int64_t radius() const { return m_R; }
    std::uint64_t side() const { return m_side; }
    std::uint64_t size() const { return m_size; }
    std::uint64_t stride(std::size_t i) const { return m_stride[i]; }

    bool contains(std::span<const std::int64_t> x) const
    {
        return std::all_of(x.begin(), x.end(), [this](std::int64_t v) { return v >= -m_R && v <= m_R; });
    }

    std::uint64_t index(std::span<const std::int64_t> x) const
    {
        std::uint64_t k = 0;
        for (std::size_t i = 0; i < m_n; ++i) {
            k += static_cast<std::uint64_t>(x[i] + m_R) * m_stride[i];
        }
        return k;
    }

    void point(std::uint64_t k, std::int64_t *x) const
    {
        for (std::size_t i = 0; i < m_n; ++i) {
            x[i] = static_cast<std::int64_t>(k % m_side) - m_R;
            k /= m_side;
        }
    }

    /// Advance x through the box with x_1 fastest; false after the last point.
    bool next(std::int64_t *x) const
    {
        for (std::size_t i = 0; i < m_n; ++i) {
            if (++x[i] <= m_R) {
                return true;
            }
            x[i] = -m_R;
        }
        return false;
    }

private:
    std::size_t m_n;
    std::int64_t m_R;
    std::uint64_t m_side = 0;
    std::uint64_t m_size = 0;
    std::vector<std::uint64_t> m_stride;
};

/// Run fn(slice, x, acc) for every box point, split into slices by the value
/// of x_n (the slowest coordinate). Each slice owns one accumulator; the
/// accumulators are returned in slice order for an ordered reduction.
template <typename Acc, typename Fn>
std::vector<Acc> scan_box(const lattice_box &box, Fn &&fn)
{
    const std::size_t n = box.dim();
    const std::int64_t R = box.radius();
    if (box.size() == 0) {
        return {};
    }
    return parallel_map(box.side(), [&](std::size_t slice) {
        Acc acc{};
        std::vector<std::int64_t> x(n, -R);
        x[n - 1] = static_cast<std::int64_t>(slice) - R;
        const lattice_box face(n - 1 == 0 ? 1 : n - 1, R);
        if (n == 1) {
            fn(x.data(), acc);
            return acc;
        }
        do {
            fn(x.data(), acc);
        } while (face.next(x.data()));
        return acc;
    });
}

// Evaluation inside a box -----------------------------------------------------

/// Evaluates f modulo m at points of [-R, R]^n via per-variable power tables.
class mod_evaluator
{
public:
    mod_evaluator(const int_poly &f, std::int64_t R, std::int64_t m) : m_n(f.nvars()), m_R(R), m_m(m)
    {
        require(m >= 1, "modulus must be positive");
        require(m < (std::int64_t(1) << 62), "modulus too large");
        const int d = std::max(0, f.degree());
        const std::size_t side = static_cast<std::size_t>(2 * std::max<std::int64_t>(R, 0) + 1);
        m_side = side;
        m_deg = static_cast<unsigned>(d);
        m_pw.assign(static_cast<std::size_t>(d + 1) * side, 0);
        for (std::size_t j = 0; j < side; ++j) {
            const std::int64_t x = mod_floor(static_cast<std::int64_t>(j) - R, m);
            std::int64_t v = 1 % m;
            for (int e = 0; e <= d; ++e) {
                m_pw[static_cast<std::size_t>(e) * side + j] = v;
                v = static_cast<std::int64_t>((__int128)v * x % m);
            }
        }
        for (const auto &[mono, c] : f.terms()) {
            const std::int64_t cm = mod_floor(c, m);
            if (cm != 0) {
                m_coef.push_back(cm);
                m_exps.insert(m_exps.end(), mono.exps.begin(), mono.exps.end());
            }
        }
    }

    std::int64_t modulus() const { return m_m; }

    std::int64_t operator()(const std::int64_t *x) const
    {
        __int128 acc = 0;
        for (std::size_t t = 0; t < m_coef.size(); ++t) {
            __int128 v = m_coef[t];
            const unsigned *e = &m_exps[t * m_n];
            for (std::size_t i = 0; i < m_n; ++i) {
                if (e[i] != 0) {
                    v = v * m_pw[e[i] * m_side + static_cast<std::size_t>(x[i] + m_R)] % m_m;
                }
            }
            acc += v;
        }
        return static_cast<std::int64_t>(acc % m_m);
    }

private:
    std::size_t m_n;
    std::int64_t m_R;
    std::int64_t m_m;
    std::size_t m_side = 1;
    unsigned m_deg = 0;
    std::vector<std::int64_t> m_pw;
    std::vector<std::int64_t> m_coef;
    std::vector<unsigned> m_exps;
};

/// Exact zero test for f on [-R, R]^n: 128-bit arithmetic with overflow
/// detection, falling back to arbitrary precision when it trips.
class zero_tester
{
public:
    zero_tester(const int_poly &f, std::int64_t R) : m_f(f), m_n(f.nvars()), m_R(R)
    {
        const int d = std::max(0, f.degree());
        m_side = static_cast<std::size_t>(2 * std::max<std::int64_t>(R, 0) + 1);
        m_pw.assign(static_cast<std::size_t>(d + 1) * m_side, 0);
        m_pw_ok.assign(m_pw.size(), true);
        for (std::size_t j = 0; j < m_side; ++j) {
            const __int128 x = static_cast<std::int64_t>(j) - R;
            __int128 v = 1;
            bool ok = true;
            for (int e = 0; e <= d; ++e) {
                m_pw[static_cast<std::size_t>(e) * m_side + j] = v;
                m_pw_ok[static_cast<std::size_t>(e) * m_side + j] = ok;
                ok = ok && !__builtin_mul_overflow(v, x, &v);
            }
        }
        m_fast = true;
        for (const auto &[mono, c] : f.terms()) {
            if (!c.fits_slong_p()) {
                m_fast = false;
            }
            m_coef.push_back(c.fits_slong_p() ? c.get_si() : 0);
            m_exps.insert(m_exps.end(), mono.exps.begin(), mono.exps.end());
        }
    }

    bool operator()(const std::int64_t *x) const
    {
        if (m_fast) {
            __int128 acc = 0;
            bool ok = true;
            for (std::size_t t = 0; t < m_coef.size() && ok; ++t) {
                __int128 v = m_coef[t];
                const unsigned *e = &m_exps[t * m_n];
                for (std::size_t i = 0; i < m_n && ok; ++i) {
                    if (e[i] != 0) {
                        const std::size_t k = e[i] * m_side + static_cast<std::size_t>(x[i] + m_R);
                        ok = m_pw_ok[k] && !__builtin_mul_overflow(v, m_pw[k], &v);
                    }
                }
                ok = ok && !__builtin_add_overflow(acc, v, &acc);
            }
            if (ok) {
                return acc == 0;
            }
        }
        return eval(m_f, std::span<const std::int64_t>(x, m_n)) == 0;
    }

private:
    int_poly m_f;
    std::size_t m_n;
    std::int64_t m_R;
    std::size_t m_side = 1;
    bool m_fast = true;
    std::vector<__int128> m_pw;
    std::vector<bool> m_pw_ok;
    std::vector<std::int64_t> m_coef;
    std::vector<unsigned> m_exps;
};

// Counting functions ------------------------------------------------------------

namespace detail
{

inline std::size_t common_nvars(const std::vector<int_poly> &fs)
{
    require(!fs.empty(), "need at least one polynomial");
    for (const auto &f : fs) {
        require(f.nvars() == fs.front().nvars(), "polynomials live in different variable counts");
    }
    return fs.front().nvars();
}

inline void charge_box(const lattice_box &box, budget &b, const char *what)
{
    if (box.size() == UINT64_MAX) {
        throw budget_exceeded(std::string(what) + " box size overflows");
    }
    b.charge(box.size(), what);
}

} // namespace detail

/// N(f, B) = #{x in Z^n : f(x) = 0, |x| <= B}.
inline std::uint64_t count_box(const int_poly &f, std::int64_t B, budget &b = default_budget())
{
    require(B >= 0, "box size B must be non-negative");
    const lattice_box box(f.nvars(), B);
    detail::charge_box(box, b, "box count");
    const zero_tester zero(f, B);
    std::uint64_t total = 0;
    for (std::uint64_t c : scan_box<std::uint64_t>(box, [&](const std::int64_t *x, std::uint64_t &acc) { acc += zero(x); })) {
        total += c;
    }
    return total;
}

/// N(f_1, ..., f_r, B, m): simultaneous solutions of f_i(x) = 0 mod m in the box.
inline std::uint64_t count_box_mod(const std::vector<int_poly> &fs, std::int64_t B, std::int64_t m, budget &b = default_budget())
{
    const std::size_t n = detail::common_nvars(fs);
    require(m >= 1, "modulus m must be at least 1");
    require(B >= 0, "box size B must be non-negative");
    const lattice_box box(n, B);
    detail::charge_box(box, b, "box count");
    std::vector<mod_evaluator> ev;
    for (const auto &f : fs) {
        ev.emplace_back(f, B, m);
    }
    std::uint64_t total = 0;
    auto slices = scan_box<std::uint64_t>(box, [&](const std::int64_t *x, std::uint64_t &acc) {
        for (const auto &e : ev) {
            if (e(x) != 0) {
                return;
            }
        }
        ++acc;
    });
    for (std::uint64_t c : slices) {
        total += c;
    }
    return total;
}

/// Value of a weighted count: exact rational for the exact weight kinds,
/// a double for the smooth weight.
struct weighted_value
{
    bool exact = true;
    mpq_class rational = 0;
    double real = 0.0;

    double approx() const { return exact ? rational.get_d() : real; }
};

/// N_W(f_1, ..., f_r, B, m) = sum over x with m | f_i(x) of W(x/B).
inline weighted_value weighted_count(const std::vector<int_poly> &fs, std::int64_t B, std::int64_t m, weight_kind w,
                                     budget &b = default_budget())
{
    const std::size_t n = detail::common_nvars(fs);
    require(m >= 1, "modulus m must be at least 1");
    const lattice_weight lw(w, B);
    weighted_value out;
    out.exact = lw.exact();
    if (lw.radius() < 0) {
        return out;
    }
    const lattice_box box(n, lw.radius());
    detail::charge_box(box, b, "weighted count");
    std::vector<mod_evaluator> ev;
    for (const auto &f : fs) {
        ev.emplace_back(f, lw.radius(), m);
    }
    auto solves = [&](const std::int64_t *x) {
        for (const auto &e : ev) {
            if (e(x) != 0) {
                return false;
            }
        }
        return true;
    };
    if (lw.exact()) {
        wide_acc total;
        for (const auto &s : scan_box<wide_acc>(box, [&](const std::int64_t *x, wide_acc &acc) {
                 if (!solves(x)) {
                     return;
                 }
                 __int128 v = 1;
                 for (std::size_t i = 0; i < n; ++i) {
                     v *= lw.numerator(x[i]);
                 }
                 acc += v;
             })) {
            total += s;
        }
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), static_cast<unsigned long>(lw.denominator()), static_cast<unsigned long>(n));
        out.rational = mpq_class(total.value(), den);
        out.rational.canonicalize();
    } else {
        compensated_sum total;
        for (const auto &s : scan_box<compensated_sum>(box, [&](const std::int64_t *x, compensated_sum &acc) {
                 if (!solves(x)) {
                     return;
                 }
                 double v = 1.0;
                 for (std::size_t i = 0; i < n; ++i) {
                     v *= lw.real(x[i]);
                 }
                 acc += v;
             })) {
            total += s;
        }
        out.real = total.value();
    }
    return out;
}

// Probes ---------------------------------------------------------------------

/// Leading form of a polynomial over F_q.
inline fq_poly leading_form(const fq_poly &f)
{
    require(!f.is_zero(), "leading form of the zero polynomial");
    fq_poly r(f.base(), f.nvars());
    const unsigned d = static_cast<unsigned>(f.degree());
    for (const auto &[m, c] : f.terms()) {
        if (m.degree() == d) {
            r.add_term(m, c);
        }
    }
    return r;
}

struct trivial_bound_row
{
    std::int64_t B = 0;
    std::uint64_t count = 0;
    mpq_class ratio = 0;   // count / B^dim
};

struct trivial_bound_report
{
    std::string field_name;
    std::size_t nvars = 0;
    std::uint64_t variety_points = 0;   // #X(F_q)
    int dim = -1;                       // affine dim_est of X
    std::vector<trivial_bound_row> rows;
    mpq_class max_ratio = 0;            // the empirical implied constant
};

/// Count box points whose reduction mod q lies on X, for boxes small enough
/// to hold at most one representative of each residue class.
inline trivial_bound_report trivial_bound_probe(const variety_spec &v, const std::vector<std::int64_t> &B_grid,
                                                budget &b = default_budget())
{
    const field &K = v.base;
    require(K.k() == 1, "box probe needs a prime field");
    for (const auto &f : v.forms) {
        require(!f.is_zero(), "forms must be nonzero");
    }
    trivial_bound_report rep;
    rep.field_name = K.name();
    rep.nvars = v.nvars;
    rep.variety_points = affine_count(v.forms, K, b);
    rep.dim = affine_dim_est(rep.variety_points, K.q(), static_cast<int>(v.nvars));
    const std::size_t n = v.nvars;
    for (std::int64_t B : B_grid) {
        require(B >= 1, "box size B must be positive");
        require(static_cast<std::uint64_t>(2 * B + 1) <= K.q(), "box side 2B+1 exceeds q, so residue classes repeat");
        const lattice_box box(n, B);
        detail::charge_box(box, b, "box probe");
        std::uint64_t count = 0;
        for (std::uint64_t c : scan_box<std::uint64_t>(box, [&](const std::int64_t *x, std::uint64_t &acc) {
                 fq_point u(n);
                 for (std::size_t i = 0; i < n; ++i) {
                     u[i] = K.from_int(x[i]);
                 }
                 for (const auto &f : v.forms) {
                     if (f.eval(u) != 0) {
                         return;
                     }
                 }
                 ++acc;
             })) {
            count += c;
        }
        trivial_bound_row row;
        row.B = B;
        row.count = count;
        mpz_class Bd = 1;
        for (int i = 0; i < std::max(rep.dim, 0); ++i) {
            Bd *= static_cast<long>(B);
        }
        row.ratio = mpq_class(mpz_class(static_cast<unsigned long>(count)), Bd);
        row.ratio.canonicalize();
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        rep.rows.push_back(row);
    }
    return rep;
}

struct hooley_deligne_report
{
    std::string field_name;
    std::size_t nvars = 0;
    std::size_t r = 0;
    std::uint64_t count = 0;      // #X(F_q)
    mpz_class main = 0;           // q^{n-r}
    mpz_class error = 0;          // count - main
    int s = -1;                   // dim Sing Z (estimated)
    int dim_z = -1;               // dim Z (estimated)
    std::string dim_field;        // field over which dim Z was confirmed
    double normalized_error = 0;  // |error| / q^{(n-r+2+s)/2}
    sing_report z_scan;
};

/// Compare #X(F_q) with q^{n-r} for X = V(f_1, ..., f_r) in A^n, normalizing
/// by the square-root error size predicted from dim Sing Z of the leading
/// forms. Refuses when Z does not have the expected dimension n-1-r. Point
/// counts over F_q can be empty by accident (Fermat curves over small
/// fields), so a failed dimension check over F_q is retried over F_{q^2}.
inline hooley_deligne_report hooley_deligne_probe(const std::vector<fq_poly> &fs, const field &K, budget &b = default_budget())
{
    require(!fs.empty(), "need at least one polynomial");
    const std::size_t n = fs.front().nvars();
    const std::size_t r = fs.size();
    require(n > r, "need more variables than equations");
    std::vector<fq_poly> lead;
    for (const auto &f : fs) {
        require(f.nvars() == n && f.base() == K, "polynomials must share the field and variable count");
        if (f.degree() < 2) {
            throw refusal_error("leading form of degree < 2: the probe targets forms of degree at least 2");
        }
        lead.push_back(leading_form(f));
    }
    hooley_deligne_report rep;
    rep.field_name = K.name();
    rep.nvars = n;
    rep.r = r;
    const int expected = static_cast<int>(n) - 1 - static_cast<int>(r);

    rep.z_scan = sing_points(variety_spec(K, n, lead), static_cast<unsigned>(r), b);
    rep.dim_z = rep.z_scan.dim_est_variety;
    rep.s = rep.z_scan.dim_est_sing;
    rep.dim_field = K.name();
    if (rep.dim_z != expected && K.k() == 1 && checked_pow(K.q(), 2) <= field::max_q
        && checked_pow(checked_pow(K.q(), 2), static_cast<unsigned>(n)) <= enumeration_cap) {
        const field K2(K.p(), 2);
        std::vector<fq_poly> lead2;
        for (const auto &f : fs) {
            fq_poly g(K2, n);
            const fq_poly F = leading_form(f);
            for (const auto &[m, c] : F.terms()) {
                g.add_term(m, K2.from_int(static_cast<std::int64_t>(c)));
            }
            lead2.push_back(g);
        }
        sing_report scan2 = sing_points(variety_spec(K2, n, lead2), static_cast<unsigned>(r), b);
        if (scan2.dim_est_variety == expected) {
            rep.dim_z = scan2.dim_est_variety;
            rep.s = std::max(rep.s, scan2.dim_est_sing);
            rep.dim_field = K2.name();
        }
    }
    if (rep.dim_z != expected) {
        throw refusal_error("dimension hypothesis fails: dim_est(Z) = " + std::to_string(rep.dim_z) + ", expected n-1-r = "
                            + std::to_string(expected));
    }
    rep.count = affine_count(fs, K, b);
    mpz_ui_pow_ui(rep.main.get_mpz_t(), K.q(), static_cast<unsigned long>(n - r));
    rep.error = mpz_class(static_cast<unsigned long>(rep.count)) - rep.main;
    const double expo = (static_cast<double>(n) - static_cast<double>(r) + 2.0 + rep.s) / 2.0;
    rep.normalized_error = std::fabs(rep.error.get_d()) / std::pow(static_cast<double>(K.q()), expo);
    return rep;
}

} // namespace vdc

#endif
