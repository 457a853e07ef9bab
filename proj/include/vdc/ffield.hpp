#ifndef VDC_FFIELD_HPP
#define VDC_FFIELD_HPP

#include "common.hpp"
#include "mpoly.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vdc
{

inline bool is_prime(std::uint64_t n)
{
    if (n < 2) {
        return false;
    }
    for (std::uint64_t d : {2u, 3u, 5u, 7u, 11u, 13u}) {
        if (n % d == 0) {
            return n == d;
        }
    }
    if (n < 289) {
        return true;
    }
    // Deterministic Miller-Rabin for 64-bit inputs.
    auto mulmod = [](std::uint64_t a, std::uint64_t b, std::uint64_t m) {
        return static_cast<std::uint64_t>((unsigned __int128)a * b % m);
    };
    auto powmod = [&](std::uint64_t a, std::uint64_t e, std::uint64_t m) {
        std::uint64_t r = 1;
        a %= m;
        while (e) {
            if (e & 1) {
                r = mulmod(r, a, m);
            }
            a = mulmod(a, a, m);
            e >>= 1;
        }
        return r;
    };
    std::uint64_t d = n - 1;
    unsigned s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        std::uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) {
            continue;
        }
        bool composite = true;
        for (unsigned r = 1; r < s; ++r) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) {
            return false;
        }
    }
    return true;
}

/// The finite field F_{p^k}, q = p^k <= 2^20.
///
/// Elements are encoded as integers in [0, q): the code sum_i c_i p^i stands
/// for the residue class of sum_i c_i t^i modulo the fixed modulus, which is
/// the monic irreducible of degree k whose low coefficients (c_0..c_{k-1})
/// form the smallest such code. For k = 1 the modulus is t and codes are the
/// residues themselves. The integers 0..p-1 embed as the prime field.
class field
{
public:
    using elem = std::uint32_t;
    static constexpr std::uint32_t max_q = 1u << 20;

    field(std::uint32_t p, unsigned k) : m_p(p), m_k(k)
    {
        require(is_prime(p), "field characteristic " + std::to_string(p) + " is not prime");
        require(k >= 1, "extension degree must be positive");
        const std::uint64_t q = checked_pow(p, k);
        require(q <= max_q, "field size " + std::to_string(p) + "^" + std::to_string(k) + " exceeds 2^20");
        m_q = static_cast<std::uint32_t>(q);
        m_modulus = find_modulus();
    }

    std::uint32_t p() const { return m_p; }
    unsigned k() const { return m_k; }
    std::uint32_t q() const { return m_q; }

    /// Coefficients c_0..c_k of the modulus (c_k = 1).
    const std::vector<std::uint32_t> &modulus() const { return m_modulus; }

    bool operator==(const field &o) const { return m_p == o.m_p && m_k == o.m_k; }

    std::string name() const { return m_k == 1 ? std::to_string(m_p) : std::to_string(m_p) + "^" + std::to_string(m_k); }

    elem zero() const { return 0; }
    elem one() const { return 1; }

    elem from_int(std::int64_t v) const { return static_cast<elem>(mod_floor(v, m_p)); }
    elem from_int(const mpz_class &v) const { return static_cast<elem>(mod_floor(v, m_p)); }

    elem add(elem a, elem b) const
    {
        if (m_k == 1) {
            const std::uint32_t s = a + b;
            return s >= m_p ? s - m_p : s;
        }
        elem r = 0, scale = 1;
        while (a || b) {
            std::uint32_t d = a % m_p + b % m_p;
            if (d >= m_p) {
                d -= m_p;
            }
            r += d * scale;
            scale *= m_p;
            a /= m_p;
            b /= m_p;
        }
        return r;
    }

    elem neg(elem a) const
    {
        if (m_k == 1) {
            return a == 0 ? 0 : m_p - a;
        }
        elem r = 0, scale = 1;
        while (a) {
            const std::uint32_t d = a % m_p;
            r += (d == 0 ? 0 : m_p - d) * scale;
            scale *= m_p;
            a /= m_p;
        }
        return r;
    }

    elem sub(elem a, elem b) const { return add(a, neg(b)); }

    elem mul(elem a, elem b) const
    {
        if (m_k == 1) {
            return static_cast<elem>(std::uint64_t(a) * b % m_p);
        }
        if (a == 0 || b == 0) {
            return 0;
        }
        std::uint32_t da[32] = {}, db[32] = {};
        std::uint64_t prod[64] = {};
        to_digits(a, da);
        to_digits(b, db);
        for (unsigned i = 0; i < m_k; ++i) {
            if (da[i] == 0) {
                continue;
            }
            for (unsigned j = 0; j < m_k; ++j) {
                prod[i + j] += std::uint64_t(da[i]) * db[j];
            }
        }
        for (unsigned i = 0; i < 2 * m_k - 1; ++i) {
            prod[i] %= m_p;
        }
        // Reduce t^m for m >= k using t^k = -sum c_i t^i.
        for (unsigned m = 2 * m_k - 2; m >= m_k; --m) {
            const std::uint64_t c = prod[m] % m_p;
            if (c != 0) {
                prod[m] = 0;
                for (unsigned i = 0; i < m_k; ++i) {
                    prod[m - m_k + i] = (prod[m - m_k + i] + c * (m_p - m_modulus[i])) % m_p;
                }
            }
        }
        elem r = 0;
        for (unsigned i = m_k; i-- > 0;) {
            r = r * m_p + static_cast<elem>(prod[i] % m_p);
        }
        return r;
    }

    elem pow(elem a, std::uint64_t e) const
    {
        elem r = one();
        while (e) {
            if (e & 1) {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        return r;
    }

    elem inv(elem a) const
    {
        require(a != 0, "zero has no inverse");
        return pow(a, m_q - 2);
    }

    elem frobenius(elem a) const { return pow(a, m_p); }

    /// Iteration over all q elements is simply 0..q-1.
    std::vector<elem> elements() const
    {
        std::vector<elem> v(m_q);
        for (elem i = 0; i < m_q; ++i) {
            v[i] = i;
        }
        return v;
    }

private:
    void to_digits(elem a, std::uint32_t *d) const
    {
        for (unsigned i = 0; i < m_k; ++i) {
            d[i] = a % m_p;
            a /= m_p;
        }
    }

    // Polynomials over F_p as coefficient vectors, low degree first.
    using fp_poly = std::vector<std::uint32_t>;

    fp_poly poly_mod(fp_poly a, const fp_poly &b) const
    {
        const std::uint32_t lead_inv = static_cast<std::uint32_t>(
            [&] {
                std::uint64_t r = 1, x = b.back(), e = m_p - 2;
                while (e) {
                    if (e & 1) {
                        r = r * x % m_p;
                    }
                    x = x * x % m_p;
                    e >>= 1;
                }
                return r;
            }());
        while (a.size() >= b.size()) {
            const std::uint64_t c = std::uint64_t(a.back()) * lead_inv % m_p;
            const std::size_t off = a.size() - b.size();
            for (std::size_t i = 0; i < b.size(); ++i) {
                a[off + i] = static_cast<std::uint32_t>((a[off + i] + (m_p - c) * b[i]) % m_p);
            }
            while (!a.empty() && a.back() == 0) {
                a.pop_back();
            }
        }
        return a;
    }

    bool irreducible(const fp_poly &f) const
    {
        const unsigned deg = static_cast<unsigned>(f.size() - 1);
        for (unsigned d = 1; d <= deg / 2; ++d) {
            const std::uint64_t count = checked_pow(m_p, d);
            for (std::uint64_t code = 0; code < count; ++code) {
                fp_poly g(d + 1);
                std::uint64_t c = code;
                for (unsigned i = 0; i < d; ++i) {
                    g[i] = static_cast<std::uint32_t>(c % m_p);
                    c /= m_p;
                }
                g[d] = 1;
                if (poly_mod(f, g).empty()) {
                    return false;
                }
            }
        }
        return true;
    }

    std::vector<std::uint32_t> find_modulus() const
    {
        for (std::uint64_t code = 0; code < m_q; ++code) {
            fp_poly f(m_k + 1);
            std::uint64_t c = code;
            for (unsigned i = 0; i < m_k; ++i) {
                f[i] = static_cast<std::uint32_t>(c % m_p);
                c /= m_p;
            }
            f[m_k] = 1;
            if (irreducible(f)) {
                return f;
            }
        }
        throw std::logic_error("no irreducible polynomial found");
    }

    std::uint32_t m_p;
    unsigned m_k;
    std::uint32_t m_q = 0;
    std::vector<std::uint32_t> m_modulus;
};

/// Parse a field literal "p" or "p^k".
inline field parse_field(std::string_view s)
{
    const auto caret = s.find('^');
    auto num = [&](std::string_view t) -> unsigned long {
        require(!t.empty() && t.find_first_not_of("0123456789") == std::string_view::npos,
                "bad field literal '" + std::string(s) + "'");
        return std::stoul(std::string(t));
    };
    if (caret == std::string_view::npos) {
        return field(static_cast<std::uint32_t>(num(s)), 1);
    }
    return field(static_cast<std::uint32_t>(num(s.substr(0, caret))), static_cast<unsigned>(num(s.substr(caret + 1))));
}

using fq_point = std::vector<field::elem>;

/// Polynomial with coefficients in F_q, same canonical term order as
/// int_poly.
class fq_poly
{
public:
    using elem = field::elem;
    using term_map = std::map<monomial, elem, grlex_greater>;

    fq_poly(const field &f, std::size_t nvars) : m_field(f), m_nvars(nvars) {}

    const field &base() const { return m_field; }
    std::size_t nvars() const { return m_nvars; }
    const term_map &terms() const { return m_terms; }
    bool is_zero() const { return m_terms.empty(); }
    int degree() const { return is_zero() ? -1 : static_cast<int>(m_terms.begin()->first.degree()); }

    bool is_homogeneous() const
    {
        if (is_zero()) {
            return true;
        }
        const unsigned d = m_terms.begin()->first.degree();
        return std::all_of(m_terms.begin(), m_terms.end(), [d](const auto &t) { return t.first.degree() == d; });
    }

    void add_term(const monomial &m, elem c)
    {
        require(m.size() == m_nvars, "monomial length does not match variable count");
        if (c == 0) {
            return;
        }
        auto [it, inserted] = m_terms.try_emplace(m, c);
        if (!inserted) {
            it->second = m_field.add(it->second, c);
            if (it->second == 0) {
                m_terms.erase(it);
            }
        }
    }

    fq_poly &operator+=(const fq_poly &o)
    {
        require(o.m_nvars == m_nvars && o.m_field == m_field, "incompatible polynomials");
        for (const auto &[m, c] : o.m_terms) {
            add_term(m, c);
        }
        return *this;
    }

    fq_poly scaled(elem s) const
    {
        fq_poly r(m_field, m_nvars);
        if (s == 0) {
            return r;
        }
        for (const auto &[m, c] : m_terms) {
            r.add_term(m, m_field.mul(c, s));
        }
        return r;
    }

    bool operator==(const fq_poly &o) const { return m_field == o.m_field && m_nvars == o.m_nvars && m_terms == o.m_terms; }

    elem eval(std::span<const elem> x) const
    {
        require(x.size() == m_nvars, "evaluation point has wrong dimension");
        elem acc = 0;
        for (const auto &[m, c] : m_terms) {
            elem t = c;
            for (std::size_t i = 0; i < m_nvars && t != 0; ++i) {
                if (m[i] != 0) {
                    t = m_field.mul(t, m_field.pow(x[i], m[i]));
                }
            }
            acc = m_field.add(acc, t);
        }
        return acc;
    }

private:
    field m_field;
    std::size_t m_nvars;
    term_map m_terms;
};

inline fq_poly partial(const fq_poly &f, std::size_t i)
{
    require(i < f.nvars(), "variable index out of range");
    const field &F = f.base();
    fq_poly r(F, f.nvars());
    for (const auto &[m, c] : f.terms()) {
        if (m[i] == 0) {
            continue;
        }
        monomial d = m;
        d[i] -= 1;
        r.add_term(d, F.mul(c, F.from_int(static_cast<std::int64_t>(m[i]))));
    }
    return r;
}

/// F^y = y . grad F over F_q.
inline fq_poly directional_form(const fq_poly &F, std::span<const field::elem> y)
{
    require(F.is_homogeneous(), "directional form needs a homogeneous polynomial");
    require(y.size() == F.nvars(), "direction has wrong dimension");
    fq_poly r(F.base(), F.nvars());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0) {
            r += partial(F, i).scaled(y[i]);
        }
    }
    return r;
}

/// F^{y,z} = (Hess F) y . z over F_q.
inline fq_poly hessian_form(const fq_poly &F, std::span<const field::elem> y, std::span<const field::elem> z)
{
    require(F.is_homogeneous(), "Hessian form needs a homogeneous polynomial");
    const std::size_t n = F.nvars();
    require(y.size() == n && z.size() == n, "direction has wrong dimension");
    const field &K = F.base();
    fq_poly r(K, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] == 0) {
            continue;
        }
        const fq_poly di = partial(F, i);
        for (std::size_t j = 0; j < n; ++j) {
            if (z[j] != 0) {
                r += partial(di, j).scaled(K.mul(y[i], z[j]));
            }
        }
    }
    return r;
}

/// Image of f under Z -> F_p -> F_{p^k}; zero terms are dropped.
inline fq_poly reduce_mod(const int_poly &f, const field &K)
{
    fq_poly r(K, f.nvars());
    for (const auto &[m, c] : f.terms()) {
        r.add_term(m, K.from_int(c));
    }
    return r;
}

inline std::string to_string(const fq_poly &f)
{
    if (f.is_zero()) {
        return "0";
    }
    std::string s;
    for (const auto &[m, c] : f.terms()) {
        if (!s.empty()) {
            s += " + ";
        }
        const std::string vars = to_string(m);
        const std::string cs = f.base().k() == 1 ? std::to_string(c) : "[" + std::to_string(c) + "]";
        if (vars.empty()) {
            s += cs;
        } else if (c == 1) {
            s += vars;
        } else {
            s += cs + "*" + vars;
        }
    }
    return s;
}

/// Evaluator for sweeps: caches per-point powers so each polynomial in a
/// family is evaluated with table lookups only.
class power_table
{
public:
    power_table(const field &K, std::size_t nvars, unsigned max_deg) : m_field(K), m_nvars(nvars), m_deg(max_deg), m_pw(nvars * (max_deg + 1)) {}

    void load(std::span<const field::elem> x)
    {
        for (std::size_t i = 0; i < m_nvars; ++i) {
            field::elem *row = &m_pw[i * (m_deg + 1)];
            row[0] = 1;
            for (unsigned e = 1; e <= m_deg; ++e) {
                row[e] = m_field.mul(row[e - 1], x[i]);
            }
        }
    }

    field::elem eval(const fq_poly &f) const
    {
        field::elem acc = 0;
        for (const auto &[m, c] : f.terms()) {
            field::elem t = c;
            for (std::size_t i = 0; i < m_nvars && t != 0; ++i) {
                if (m[i] != 0) {
                    t = m_field.mul(t, m_pw[i * (m_deg + 1) + m[i]]);
                }
            }
            acc = m_field.add(acc, t);
        }
        return acc;
    }

private:
    field m_field;
    std::size_t m_nvars;
    unsigned m_deg;
    std::vector<field::elem> m_pw;
};

// Projective enumeration ----------------------------------------------------

/// Number of points of P^{n-1}(F_q), i.e. (q^n - 1)/(q - 1).
inline std::uint64_t proj_count(std::uint64_t q, std::size_t n)
{
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        c = c * q + 1;
    }
    return c;
}

/// Cap on q^n for any single enumeration over F_q^n.
inline constexpr std::uint64_t enumeration_cap = std::uint64_t(1) << 28;

/// Canonical projective point number `index` in the fixed enumeration
/// order: points are grouped by the position of their leading 1 (leftmost
/// first) and within a group the trailing coordinates run as an odometer
/// with the last coordinate fastest.
inline fq_point proj_point_at(const field &K, std::size_t n, std::uint64_t index)
{
    const std::uint64_t q = K.q();
    fq_point x(n, 0);
    for (std::size_t lead = 0; lead < n; ++lead) {
        const std::uint64_t block = checked_pow(q, static_cast<unsigned>(n - 1 - lead));
        if (index < block) {
            x[lead] = 1;
            for (std::size_t j = n; j-- > lead + 1;) {
                x[j] = static_cast<field::elem>(index % q);
                index /= q;
            }
            return x;
        }
        index -= block;
    }
    throw precondition_error("projective point index out of range");
}

/// Advance a canonical point to its successor in enumeration order; returns
/// false after the last point.
inline bool next_proj_point(const field &K, fq_point &x)
{
    const std::size_t n = x.size();
    std::size_t lead = 0;
    while (x[lead] == 0) {
        ++lead;
    }
    for (std::size_t j = n; j-- > lead + 1;) {
        if (++x[j] < K.q()) {
            return true;
        }
        x[j] = 0;
    }
    if (lead + 1 == n) {
        return false;
    }
    x[lead] = 0;
    x[lead + 1] = 1;
    return true;
}

/// Visit every point of P^{n-1}(F_q) exactly once, in canonical order.
template <typename Fn>
void enum_proj(const field &K, std::size_t n, Fn &&fn, budget &b = default_budget())
{
    require(n >= 2, "projective enumeration needs n >= 2");
    require(checked_pow(K.q(), static_cast<unsigned>(n)) <= enumeration_cap, "q^n exceeds the enumeration cap 2^28");
    b.charge(proj_count(K.q(), n), "projective enumeration");
    fq_point x(n, 0);
    x[0] = 1;
    do {
        fn(std::as_const(x));
    } while (next_proj_point(K, x));
}

inline std::vector<fq_point> proj_space(const field &K, std::size_t n, budget &b = default_budget())
{
    std::vector<fq_point> pts;
    pts.reserve(proj_count(K.q(), n));
    enum_proj(K, n, [&](const fq_point &x) { pts.push_back(x); }, b);
    return pts;
}

/// Split [0, total) into contiguous chunks for parallel sweeps. The chunk
/// shape depends only on `total`, never on the worker count.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> fixed_chunks(std::uint64_t total, std::uint64_t chunk = 256)
{
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (std::uint64_t s = 0; s < total; s += chunk) {
        out.emplace_back(s, std::min(total, s + chunk));
    }
    return out;
}

/// Visit every vector of F_q^n (odometer, last coordinate fastest).
template <typename Fn>
void enum_affine(const field &K, std::size_t n, Fn &&fn, budget &b = default_budget())
{
    const std::uint64_t total = checked_pow(K.q(), static_cast<unsigned>(n));
    require(total <= enumeration_cap, "q^n exceeds the enumeration cap 2^28");
    b.charge(total, "affine enumeration");
    fq_point x(n, 0);
    for (std::uint64_t i = 0; i < total; ++i) {
        fn(std::as_const(x));
        for (std::size_t j = n; j-- > 0;) {
            if (++x[j] < K.q()) {
                break;
            }
            x[j] = 0;
        }
    }
}

} // namespace vdc

#endif
