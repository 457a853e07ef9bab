#ifndef VDC_MPOLY_HPP
#define VDC_MPOLY_HPP

#include "common.hpp"

#include <gmpxx.h>

#include <cctype>
#include <compare>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace vdc
{

/// Exponent vector x1^e1 ... xn^en. Its length is the variable count of the
/// polynomial that owns it.
struct monomial
{
    std::vector<unsigned> exps;

    monomial() = default;
    explicit monomial(std::size_t nvars) : exps(nvars, 0) {}
    explicit monomial(std::vector<unsigned> e) : exps(std::move(e)) {}

    std::size_t size() const { return exps.size(); }
    unsigned operator[](std::size_t i) const { return exps[i]; }
    unsigned &operator[](std::size_t i) { return exps[i]; }

    unsigned degree() const { return std::accumulate(exps.begin(), exps.end(), 0u); }

    bool operator==(const monomial &) const = default;
};

/// Graded lexicographic order, largest first: higher total degree wins,
/// ties broken by the larger exponent of x1, then x2, ...
struct grlex_greater
{
    bool operator()(const monomial &a, const monomial &b) const
    {
        const unsigned da = a.degree(), db = b.degree();
        if (da != db) {
            return da > db;
        }
        return std::lexicographical_compare(b.exps.begin(), b.exps.end(), a.exps.begin(), a.exps.end());
    }
};

/// Sparse multivariate polynomial over Z. Terms are kept in canonical
/// grlex order with no zero coefficients, so structural equality is
/// polynomial equality. The zero polynomial has degree -1.
class int_poly
{
public:
    using term_map = std::map<monomial, mpz_class, grlex_greater>;

    explicit int_poly(std::size_t nvars = 1) : m_nvars(nvars) { require(nvars >= 1, "polynomial needs at least one variable"); }

    static int_poly constant(std::size_t nvars, const mpz_class &c)
    {
        int_poly p(nvars);
        p.add_term(monomial(nvars), c);
        return p;
    }

    /// The variable x_{i+1} (zero-based index i).
    static int_poly variable(std::size_t nvars, std::size_t i)
    {
        require(i < nvars, "variable index out of range");
        int_poly p(nvars);
        monomial m(nvars);
        m[i] = 1;
        p.add_term(m, 1);
        return p;
    }

    std::size_t nvars() const { return m_nvars; }
    const term_map &terms() const { return m_terms; }
    std::size_t size() const { return m_terms.size(); }
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

    mpz_class coefficient(const monomial &m) const
    {
        auto it = m_terms.find(m);
        return it == m_terms.end() ? mpz_class(0) : it->second;
    }

    /// max |coefficient|, zero for the zero polynomial.
    mpz_class height() const
    {
        mpz_class h = 0;
        for (const auto &[m, c] : m_terms) {
            if (abs(c) > h) {
                h = abs(c);
            }
        }
        return h;
    }

    void add_term(const monomial &m, const mpz_class &c)
    {
        require(m.size() == m_nvars, "monomial length does not match variable count");
        if (c == 0) {
            return;
        }
        auto [it, inserted] = m_terms.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) {
                m_terms.erase(it);
            }
        }
    }

    int_poly &operator+=(const int_poly &o)
    {
        check_compatible(o);
        for (const auto &[m, c] : o.m_terms) {
            add_term(m, c);
        }
        return *this;
    }

    int_poly &operator-=(const int_poly &o)
    {
        check_compatible(o);
        for (const auto &[m, c] : o.m_terms) {
            add_term(m, -c);
        }
        return *this;
    }

    int_poly &operator*=(const mpz_class &s)
    {
        if (s == 0) {
            m_terms.clear();
            return *this;
        }
        for (auto &[m, c] : m_terms) {
            c *= s;
        }
        return *this;
    }

    friend int_poly operator+(int_poly a, const int_poly &b) { return a += b; }
    friend int_poly operator-(int_poly a, const int_poly &b) { return a -= b; }
    friend int_poly operator*(int_poly a, const mpz_class &s) { return a *= s; }
    friend int_poly operator*(const mpz_class &s, int_poly a) { return a *= s; }
    friend int_poly operator-(int_poly a) { return a *= mpz_class(-1); }

    friend int_poly operator*(const int_poly &a, const int_poly &b)
    {
        a.check_compatible(b);
        int_poly r(a.m_nvars);
        monomial m(a.m_nvars);
        for (const auto &[ma, ca] : a.m_terms) {
            for (const auto &[mb, cb] : b.m_terms) {
                for (std::size_t i = 0; i < a.m_nvars; ++i) {
                    m[i] = ma[i] + mb[i];
                }
                r.add_term(m, ca * cb);
            }
        }
        return r;
    }

    bool operator==(const int_poly &o) const { return m_nvars == o.m_nvars && m_terms == o.m_terms; }

private:
    void check_compatible(const int_poly &o) const { require(o.m_nvars == m_nvars, "polynomials live in different variable counts"); }

    std::size_t m_nvars;
    term_map m_terms;
};

/// Exact value f(x).
inline mpz_class eval(const int_poly &f, std::span<const mpz_class> x)
{
    require(x.size() == f.nvars(), "evaluation point has wrong dimension");
    mpz_class acc = 0, t, pw;
    for (const auto &[m, c] : f.terms()) {
        t = c;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i] != 0) {
                mpz_pow_ui(pw.get_mpz_t(), x[i].get_mpz_t(), m[i]);
                t *= pw;
            }
        }
        acc += t;
    }
    return acc;
}

inline mpz_class eval(const int_poly &f, std::span<const std::int64_t> x)
{
    std::vector<mpz_class> z;
    z.reserve(x.size());
    for (auto v : x) {
        z.emplace_back(static_cast<long>(v));
    }
    return eval(f, std::span<const mpz_class>(z));
}

/// The homogeneous part of maximal degree.
inline int_poly leading_form(const int_poly &f)
{
    require(!f.is_zero(), "leading form of the zero polynomial is undefined");
    int_poly r(f.nvars());
    const unsigned d = static_cast<unsigned>(f.degree());
    for (const auto &[m, c] : f.terms()) {
        if (m.degree() != d) {
            break;
        }
        r.add_term(m, c);
    }
    return r;
}

/// f(x + y) for an integer shift y.
inline int_poly shift(const int_poly &f, std::span<const mpz_class> y)
{
    const std::size_t n = f.nvars();
    require(y.size() == n, "shift vector has wrong dimension");
    int_poly r(n);
    monomial out(n);
    mpz_class binom, pw;
    for (const auto &[m, c] : f.terms()) {
        // Expand prod_i (x_i + y_i)^{e_i} by iterating every choice of the
        // kept exponent j_i <= e_i.
        std::vector<unsigned> j(n, 0);
        for (;;) {
            mpz_class coef = c;
            for (std::size_t i = 0; i < n; ++i) {
                mpz_bin_uiui(binom.get_mpz_t(), m[i], j[i]);
                mpz_pow_ui(pw.get_mpz_t(), y[i].get_mpz_t(), m[i] - j[i]);
                coef *= binom * pw;
                out[i] = j[i];
            }
            r.add_term(out, coef);
            std::size_t i = 0;
            while (i < n && j[i] == m[i]) {
                j[i] = 0;
                ++i;
            }
            if (i == n) {
                break;
            }
            ++j[i];
        }
    }
    return r;
}

inline std::vector<mpz_class> to_mpz_vector(std::span<const std::int64_t> v)
{
    std::vector<mpz_class> z;
    z.reserve(v.size());
    for (auto x : v) {
        z.emplace_back(static_cast<long>(x));
    }
    return z;
}

/// f^y(x) = f(x + y) - f(x).
inline int_poly diff_y(const int_poly &f, std::span<const mpz_class> y) { return shift(f, y) - f; }

inline int_poly diff_y(const int_poly &f, std::span<const std::int64_t> y) { return diff_y(f, to_mpz_vector(y)); }

/// f^{y,z}(x) = f(x+y+z) - f(x+y) - f(x+z) + f(x).
inline int_poly diff_yz(const int_poly &f, std::span<const mpz_class> y, std::span<const mpz_class> z)
{
    require(y.size() == f.nvars() && z.size() == f.nvars(), "shift vector has wrong dimension");
    std::vector<mpz_class> yz(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        yz[i] = y[i] + z[i];
    }
    return shift(f, yz) - shift(f, y) - shift(f, z) + f;
}

inline int_poly diff_yz(const int_poly &f, std::span<const std::int64_t> y, std::span<const std::int64_t> z)
{
    return diff_yz(f, to_mpz_vector(y), to_mpz_vector(z));
}

/// d f / d x_{i+1}.
inline int_poly partial(const int_poly &f, std::size_t i)
{
    require(i < f.nvars(), "variable index out of range");
    int_poly r(f.nvars());
    for (const auto &[m, c] : f.terms()) {
        if (m[i] == 0) {
            continue;
        }
        monomial d = m;
        d[i] -= 1;
        r.add_term(d, c * m[i]);
    }
    return r;
}

/// F^y = y . grad F, for homogeneous F.
inline int_poly directional_form(const int_poly &F, std::span<const mpz_class> y)
{
    require(F.is_homogeneous(), "directional form needs a homogeneous polynomial");
    require(y.size() == F.nvars(), "direction has wrong dimension");
    int_poly r(F.nvars());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0) {
            r += partial(F, i) * y[i];
        }
    }
    return r;
}

inline int_poly directional_form(const int_poly &F, std::span<const std::int64_t> y)
{
    return directional_form(F, to_mpz_vector(y));
}

/// F^{y,z} = (Hess F) y . z, computed from second partials directly.
inline int_poly hessian_form(const int_poly &F, std::span<const mpz_class> y, std::span<const mpz_class> z)
{
    require(F.is_homogeneous(), "Hessian form needs a homogeneous polynomial");
    require(F.degree() >= 2, "Hessian form needs degree at least 2");
    const std::size_t n = F.nvars();
    require(y.size() == n && z.size() == n, "direction has wrong dimension");
    int_poly r(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] == 0) {
            continue;
        }
        const int_poly di = partial(F, i);
        for (std::size_t j = 0; j < n; ++j) {
            if (z[j] != 0) {
                r += partial(di, j) * mpz_class(y[i] * z[j]);
            }
        }
    }
    return r;
}

inline int_poly hessian_form(const int_poly &F, std::span<const std::int64_t> y, std::span<const std::int64_t> z)
{
    return hessian_form(F, to_mpz_vector(y), to_mpz_vector(z));
}

/// True when F = sum_i c_i x_i^d with every coefficient nonzero.
inline bool is_diagonal(const int_poly &F)
{
    if (F.is_zero() || !F.is_homogeneous() || F.size() != F.nvars()) {
        return false;
    }
    std::vector<bool> seen(F.nvars(), false);
    for (const auto &[m, c] : F.terms()) {
        std::size_t nz = 0, idx = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i] != 0) {
                ++nz;
                idx = i;
            }
        }
        if (nz != 1 || seen[idx]) {
            return false;
        }
        seen[idx] = true;
    }
    return true;
}

// Text format ---------------------------------------------------------------
//
//   poly := term (('+'|'-') term)*
//   term := [integer] ('*'? var)*
//   var  := 'x' index ('^' exponent)?
//
// Whitespace is ignored. A leading sign on the first term is accepted.

class poly_parse_error : public precondition_error
{
public:
    using precondition_error::precondition_error;
};

namespace detail
{

class poly_parser
{
public:
    poly_parser(std::string_view text, std::size_t nvars) : m_nvars(nvars)
    {
        for (char ch : text) {
            if (!std::isspace(static_cast<unsigned char>(ch))) {
                m_s.push_back(ch);
            }
        }
    }

    int_poly parse()
    {
        if (m_s.empty()) {
            fail("empty polynomial");
        }
        int_poly p(m_nvars);
        bool first = true;
        while (m_pos < m_s.size()) {
            int sign = 1;
            if (peek() == '+' || peek() == '-') {
                sign = peek() == '-' ? -1 : 1;
                ++m_pos;
            } else if (!first) {
                fail("expected '+' or '-'");
            }
            parse_term(p, sign);
            first = false;
        }
        return p;
    }

private:
    char peek() const { return m_pos < m_s.size() ? m_s[m_pos] : '\0'; }

    [[noreturn]] void fail(const std::string &why) const
    {
        throw poly_parse_error("cannot parse polynomial at offset " + std::to_string(m_pos) + ": " + why);
    }

    std::string digits()
    {
        const std::size_t start = m_pos;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            ++m_pos;
        }
        return m_s.substr(start, m_pos - start);
    }

    void parse_term(int_poly &p, int sign)
    {
        mpz_class coef = sign;
        monomial m(m_nvars);
        bool any = false;
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
            coef *= mpz_class(digits());
            any = true;
        }
        for (;;) {
            const std::size_t save = m_pos;
            if (peek() == '*') {
                ++m_pos;
            }
            if (peek() != 'x') {
                m_pos = save;
                break;
            }
            ++m_pos;
            const std::string idx = digits();
            if (idx.empty()) {
                fail("variable needs an index");
            }
            const unsigned long i = std::stoul(idx);
            if (i < 1 || i > m_nvars) {
                fail("variable x" + idx + " outside x1..x" + std::to_string(m_nvars));
            }
            unsigned long e = 1;
            if (peek() == '^') {
                ++m_pos;
                const std::string ex = digits();
                if (ex.empty()) {
                    fail("exponent expected after '^'");
                }
                e = std::stoul(ex);
            }
            m[i - 1] += static_cast<unsigned>(e);
            any = true;
        }
        if (!any) {
            fail("empty term");
        }
        p.add_term(m, coef);
    }

    std::string m_s;
    std::size_t m_pos = 0;
    std::size_t m_nvars;
};

} // namespace detail

inline int_poly parse_poly(std::string_view text, std::size_t nvars)
{
    require(nvars >= 1, "polynomial needs at least one variable");
    return detail::poly_parser(text, nvars).parse();
}

inline std::string to_string(const monomial &m)
{
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0) {
            continue;
        }
        if (!s.empty()) {
            s += '*';
        }
        s += 'x' + std::to_string(i + 1);
        if (m[i] > 1) {
            s += '^' + std::to_string(m[i]);
        }
    }
    return s;
}

/// Canonical text form, e.g. "3*x1^2 + 3*x1 + 1". Round-trips through
/// parse_poly.
inline std::string to_string(const int_poly &f)
{
    if (f.is_zero()) {
        return "0";
    }
    std::string s;
    bool first = true;
    for (const auto &[m, c] : f.terms()) {
        const bool neg = c < 0;
        if (first) {
            s += neg ? "-" : "";
        } else {
            s += neg ? " - " : " + ";
        }
        const mpz_class a = abs(c);
        const std::string vars = to_string(m);
        if (vars.empty()) {
            s += a.get_str();
        } else if (a == 1) {
            s += vars;
        } else {
            s += a.get_str() + "*" + vars;
        }
        first = false;
    }
    return s;
}

inline std::ostream &operator<<(std::ostream &os, const int_poly &f) { return os << to_string(f); }

/// Input caps for user-supplied polynomials. Enumeration cost grows fast in
/// both, so callers reject oversize inputs up front.
struct poly_limits
{
    int max_degree = 12;
    std::size_t max_nvars = 12;
};

inline void check_limits(const int_poly &f, const poly_limits &lim = {})
{
    require(f.nvars() <= lim.max_nvars, "too many variables (cap " + std::to_string(lim.max_nvars) + ")");
    require(f.degree() <= lim.max_degree, "degree above cap " + std::to_string(lim.max_degree));
}

} // namespace vdc

#endif
