#ifndef VDC_ASYMPTOTICS_HPP
#define VDC_ASYMPTOTICS_HPP

#include "common.hpp"
#include "ffield.hpp"
#include "geometry.hpp"
#include "mpoly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <tuple>
#include <string>
#include <vector>

namespace vdc
{

/// Exponents of (B, pi, p, q) in a monomial B^b pi^c p^d q^e, exact.
struct exponent_vector
{
    mpq_class b = 0, pi = 0, p = 0, q = 0;

    /// Collapse to a single exponent of B under pi = B^alpha, p = B^beta, q = B^gamma.
    mpq_class at(const mpq_class &alpha, const mpq_class &beta, const mpq_class &gamma) const
    {
        return b + alpha * pi + beta * p + gamma * q;
    }

    exponent_vector operator+(const exponent_vector &o) const { return {b + o.b, pi + o.pi, p + o.p, q + o.q}; }
    exponent_vector operator*(const mpq_class &s) const { return {b * s, pi * s, p * s, q * s}; }
    bool operator==(const exponent_vector &o) const { return b == o.b && pi == o.pi && p == o.p && q == o.q; }
};

inline mpq_class rat(long num, long den = 1)
{
    mpq_class r(num, den);
    r.canonicalize();
    return r;
}

inline void require_n(long n) { require(n >= 5, "the exponent analysis needs n >= 5"); }

/// n - 4 + (37n - 18)/(n^2 + 8n - 4).
inline mpq_class thm_exponent(long n)
{
    require_n(n);
    return mpq_class(n - 4) + rat(37 * n - 18, n * n + 8 * n - 4);
}

/// The exponent in its printed shape "(n-4) + (37n-18)/(n^2+8n-4)", unreduced.
inline std::string thm_exponent_display(long n)
{
    require_n(n);
    return std::to_string(n - 4) + " + " + std::to_string(37 * n - 18) + "/" + std::to_string(n * n + 8 * n - 4);
}

/// Salberger's exponent n - 3 + 9/(n+2), the benchmark to beat.
inline mpq_class salberger_exponent(long n) { return mpq_class(n - 3) + rat(9, n + 2); }

struct param_exponents_result
{
    mpq_class alpha, beta, gamma;
    mpq_class main; // n - (alpha + beta + gamma)
    bool q_exceeds_B = false; // gamma >= 1, so that q >> B is possible
};

/// The parameter relations pi ~ B^alpha, p ~ B^beta, q ~ B^gamma.
inline param_exponents_result param_exponents(long n)
{
    require_n(n);
    const long D = n * n + 8 * n - 4;
    param_exponents_result r;
    r.alpha = rat(n * n - n - 2, D);
    r.beta = rat(n * n - 2 * n + 8, D);
    r.gamma = rat(2 * (n * n - n - 2), D);
    r.main = mpq_class(n) - (r.alpha + r.beta + r.gamma);
    r.q_exceeds_B = r.gamma >= 1;
    return r;
}

/// The ten monomials bounding E_4, in their printed order.
inline std::array<exponent_vector, 10> e4_terms(long n)
{
    const mpq_class N(n);
    return {{
        {(3 * N + 1) / 4, rat(-1, 2), rat(-1, 2), (N - 4) / 8},
        {(3 * N + 1) / 4, (N - 5) / 4, rat(-1, 2), rat(-1, 8)},
        {(3 * N + 1) / 4, rat(-1, 2), (N - 5) / 4, rat(-1, 8)},
        {3 * N / 4, (N - 3) / 4, rat(-1, 4), rat(-1, 2)},
        {(N + 1) / 2, (N - 3) / 4, rat(-1, 4), (N - 4) / 8},
        {3 * N / 4, (N - 4) / 4, 0, rat(-1, 2)},
        {(2 * N + 3) / 4, (N - 4) / 4, 0, (N - 5) / 8},
        {(2 * N + 3) / 4, (N - 4) / 4, (N - 4) / 4, rat(-1, 8)},
        {3 * N / 4, rat(-1, 2), (N - 2) / 4, rat(-1, 4)},
        {(2 * N + 1) / 4, rat(-1, 2), (N - 2) / 4, (N - 2) / 8},
    }};
}

struct e4_analysis
{
    long n = 0;
    std::array<mpq_class, 10> exponents;
    std::vector<int> argmax;          // 1-based indices attaining the maximum
    mpq_class max_exponent;
    mpq_class main;                   // thm_exponent(n)
    bool max_equals_main = false;
    bool expected_dominance = false;  // argmax == {1, 2, 9}
};

inline e4_analysis e4_term_exponents(long n)
{
    require_n(n);
    const auto pe = param_exponents(n);
    e4_analysis r;
    r.n = n;
    r.main = thm_exponent(n);
    const auto terms = e4_terms(n);
    for (std::size_t i = 0; i < 10; ++i) {
        r.exponents[i] = terms[i].at(pe.alpha, pe.beta, pe.gamma);
    }
    r.max_exponent = *std::max_element(r.exponents.begin(), r.exponents.end());
    for (std::size_t i = 0; i < 10; ++i) {
        if (r.exponents[i] == r.max_exponent) {
            r.argmax.push_back(static_cast<int>(i + 1));
        }
    }
    r.max_equals_main = r.max_exponent == r.main;
    r.expected_dominance = r.argmax == std::vector<int>{1, 2, 9};
    return r;
}

/// One error monomial, possibly depending linearly on a free parameter
/// (C for E_1 and E_3, s for E_2): exponent = base + param * slope.
struct error_term
{
    std::string group;   // E0, E1, E2, E3, lemma_i
    int index = 0;       // 1-based within the group
    exponent_vector base;
    exponent_vector slope;
    std::string param;   // "" when there is no free parameter
    long param_value = 0;

    mpq_class raw;        // B-exponent at the evaluated parameter
    mpq_class propagated; // B-exponent of the induced contribution to N_W(f, B, pi p q)
    bool exceeds_main = false;
    std::string trend;    // for parametrized terms: "decreasing", "increasing", "constant"
};

struct lemma41_table
{
    long n = 0;
    mpq_class main;
    std::vector<error_term> terms;
    std::vector<std::string> exceeding; // "E1.4" etc.
};

/// Exponents of every error term of Lemma 4.1 at the parameter relations.
///
/// Each term is also pushed through the argument to its effect on the
/// count itself: errors in Sigma enter as pi^{(n-1)/2} Sigma^{1/2}, the
/// per-y errors E_2(y), E_3 are first summed over the (B/pi)^n shifts y.
/// C is taken as n-1 and s as -1 unless the caller overrides.
inline lemma41_table lemma41_error_exponents(long n, long C = -1, long s = -1)
{
    require_n(n);
    if (C < 0) {
        C = n - 1;
    }
    const auto pe = param_exponents(n);
    const mpq_class N(n);
    lemma41_table t;
    t.n = n;
    t.main = pe.main;
    auto add = [&](std::string group, int idx, exponent_vector base, exponent_vector slope = {}, std::string param = "") {
        error_term e;
        e.group = std::move(group);
        e.index = idx;
        e.base = base;
        e.slope = slope;
        e.param = std::move(param);
        e.param_value = e.param == "C" ? C : (e.param == "s" ? s : 0);
        const exponent_vector v = base + slope * mpq_class(e.param_value);
        e.raw = v.at(pe.alpha, pe.beta, pe.gamma);
        const mpq_class sigma_to_n = (N - 1) / 2 * pe.alpha;
        if (e.group == "lemma_i") {
            e.propagated = e.raw;
        } else if (e.group == "E0" || e.group == "E1") {
            e.propagated = sigma_to_n + e.raw / 2;
        } else {
            e.propagated = sigma_to_n + (N * (1 - pe.alpha) + e.raw) / 2;
        }
        e.exceeds_main = e.propagated > t.main;
        if (!e.param.empty()) {
            const mpq_class d = slope.at(pe.alpha, pe.beta, pe.gamma);
            e.trend = d < 0 ? "decreasing" : (d > 0 ? "increasing" : "constant");
        }
        if (e.exceeds_main) {
            t.exceeding.push_back(e.group + "." + std::to_string(idx));
        }
        t.terms.push_back(std::move(e));
    };
    add("lemma_i", 1, {N, -N / 2, -1, -1});
    add("E0", 1, {(N + 1) / 2, 0, rat(-1, 2), (N - 2) / 4});
    add("E0", 2, {(N + 1) / 2, 0, (N - 2) / 2, rat(-1, 4)});
    add("E0", 3, {N, 0, -N / 2, -1});
    add("E1", 1, {(3 * N + 1) / 2, -N, rat(-3, 2), (N - 6) / 4});
    add("E1", 2, {(3 * N + 1) / 2, -N, (N - 4) / 2, rat(-5, 4)});
    add("E1", 3, {2 * N, -N, -(N + 2) / 2, -2});
    add("E1", 4, {2 * N, -N, -2, -2}, {-1, 1, 0, 0}, "C");
    add("E2", 1, {N, 0, -N / 2, -2}, {0, 0, rat(1, 2), 0}, "s");
    add("E3", 1, {(N + 1) / 2, 0, -1, (N - 6) / 4});
    add("E3", 2, {N, 0, -1, rat(-3, 2)}, {-1, 0, 1, 0}, "C");
    return t;
}

// Primes -------------------------------------------------------------------------

/// Visit the primes of [lo, hi] in increasing order with a segmented sieve;
/// stops early when fn returns true. Returns the prime that stopped it.
inline std::optional<std::uint64_t> scan_primes(std::uint64_t lo, std::uint64_t hi, const std::function<bool(std::uint64_t)> &fn)
{
    if (hi < 2 || lo > hi) {
        return std::nullopt;
    }
    lo = std::max<std::uint64_t>(lo, 2);
    std::uint64_t root = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(hi)));
    while (root * root > hi) {
        --root;
    }
    while ((root + 1) * (root + 1) <= hi) {
        ++root;
    }
    std::vector<bool> small(root + 1, true);
    std::vector<std::uint64_t> base;
    for (std::uint64_t i = 2; i <= root; ++i) {
        if (small[i]) {
            base.push_back(i);
            for (std::uint64_t j = i * i; j <= root; j += i) {
                small[j] = false;
            }
        }
    }
    constexpr std::uint64_t seg = 1 << 16;
    for (std::uint64_t s = lo; s <= hi; s += seg) {
        const std::uint64_t e = std::min(hi, s + seg - 1);
        std::vector<bool> comp(e - s + 1, false);
        for (std::uint64_t pr : base) {
            std::uint64_t start = std::max(pr * pr, (s + pr - 1) / pr * pr);
            for (std::uint64_t j = start; j <= e; j += pr) {
                comp[j - s] = true;
            }
        }
        for (std::uint64_t v = s; v <= e; ++v) {
            if (!comp[v - s] && fn(v)) {
                return v;
            }
        }
        if (e == hi) {
            break;
        }
    }
    return std::nullopt;
}

/// Smallest integer L >= c B^{a/b}, c = cn/cd > 0, computed exactly.
inline mpz_class ceil_scaled_root(const mpq_class &c, std::uint64_t B, const mpq_class &e)
{
    const unsigned long a = e.get_num().get_ui(), b = e.get_den().get_ui();
    mpz_class Ba, rhs, lhs;
    mpz_ui_pow_ui(Ba.get_mpz_t(), B, a);
    mpz_class cnb, cdb;
    mpz_pow_ui(cnb.get_mpz_t(), c.get_num().get_mpz_t(), b);
    mpz_pow_ui(cdb.get_mpz_t(), c.get_den().get_mpz_t(), b);
    rhs = cnb * Ba; // need (L cd)^b >= cn^b B^a, i.e. L^b cd^b >= rhs
    mpz_class lo = 0, hi = 1;
    auto ok = [&](const mpz_class &L) {
        mpz_pow_ui(lhs.get_mpz_t(), L.get_mpz_t(), b);
        return lhs * cdb >= rhs;
    };
    while (!ok(hi)) {
        hi *= 2;
    }
    while (lo < hi) {
        mpz_class mid = (lo + hi) / 2;
        if (ok(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

/// Largest integer U <= c B^{a/b}.
inline mpz_class floor_scaled_root(const mpq_class &c, std::uint64_t B, const mpq_class &e)
{
    mpz_class L = ceil_scaled_root(c, B, e);
    // L >= x; U = L if L == x exactly, else L - 1.
    const unsigned long a = e.get_num().get_ui(), b = e.get_den().get_ui();
    mpz_class Ba, lhs, cnb, cdb;
    mpz_ui_pow_ui(Ba.get_mpz_t(), B, a);
    mpz_pow_ui(cnb.get_mpz_t(), c.get_num().get_mpz_t(), b);
    mpz_pow_ui(cdb.get_mpz_t(), c.get_den().get_mpz_t(), b);
    mpz_pow_ui(lhs.get_mpz_t(), L.get_mpz_t(), b);
    return lhs * cdb == cnb * Ba ? L : mpz_class(L - 1);
}

enum class prime_role { pi, p, q };

inline const char *to_string(prime_role r)
{
    switch (r) {
    case prime_role::pi:
        return "pi";
    case prime_role::p:
        return "p";
    default:
        return "q";
    }
}

struct prime_rejection
{
    std::uint64_t prime = 0;
    std::string reason;
};

struct prime_pick
{
    prime_role role = prime_role::pi;
    std::uint64_t lo = 0, hi = 0;
    std::uint64_t prime = 0;
    std::vector<std::string> filters;   // e.g. {"R0", "R1"}
    std::vector<prime_rejection> rejected;
    std::optional<r_report> report;     // R-check of the chosen prime
};

struct param_choice
{
    long n = 0;
    std::uint64_t B = 0;
    mpq_class constant = 1;
    mpq_class alpha, beta, gamma;
    std::array<prime_pick, 3> picks;
    bool theorem_regime = true;
    std::vector<std::string> stamps;
};

/// Filters applied to a candidate prime, by role: pi needs R_0; p needs
/// R_0, R_1; q needs R_0, R_1, R_2 (sampled).
inline std::vector<std::string> role_filters(prime_role r)
{
    switch (r) {
    case prime_role::pi:
        return {"R0"};
    case prime_role::p:
        return {"R0", "R1"};
    default:
        return {"R0", "R1", "R2"};
    }
}

/// Runs the filters of `role` on the prime; returns the failure reason, or
/// nothing when all requested properties hold. Budget exhaustion of any
/// requested check propagates as budget_exceeded.
inline std::optional<std::string> prime_filter(const int_poly &F, std::uint64_t prime, prime_role role, const r_policy &base,
                                               r_report &out, budget &b)
{
    r_policy pol = base;
    const auto filters = role_filters(role);
    pol.run_r1 = std::find(filters.begin(), filters.end(), "R1") != filters.end();
    pol.run_r2 = std::find(filters.begin(), filters.end(), "R2") != filters.end();
    if (prime > field::max_q) {
        if (!(certified_smooth(F, static_cast<std::uint32_t>(std::min<std::uint64_t>(prime, UINT32_MAX))) && filters.size() == 1)) {
            throw budget_exceeded("R-checks at prime " + std::to_string(prime) + " exceed the field size cap");
        }
        out.p = static_cast<std::uint32_t>(prime);
        out.r0.verdict = r0_verdict::holds_certified;
        return std::nullopt;
    }
    out = r_check(F, static_cast<std::uint32_t>(prime), pol, b);
    if (out.r0.verdict == r0_verdict::fails) {
        return "R0 fails (singular point over F_" + out.r0.witness_field + ")";
    }
    if (out.r0.verdict == r0_verdict::unknown) {
        throw budget_exceeded("R0 check at prime " + std::to_string(prime) + " could not search any field within budget");
    }
    for (auto [verdict, name, run] : {std::tuple{out.r1.verdict, "R1", pol.run_r1}, std::tuple{out.r2.verdict, "R2", pol.run_r2}}) {
        if (!run) {
            continue;
        }
        if (verdict == r_verdict::skipped_budget || verdict == r_verdict::not_run) {
            throw budget_exceeded(std::string(name) + " check at prime " + std::to_string(prime) + " exceeds the budget");
        }
        if (verdict == r_verdict::fails) {
            return std::string(name) + " fails";
        }
    }
    return std::nullopt;
}

/// Smallest prime of [lo, hi] outside `exclude` passing the role's filters.
inline prime_pick select_prime(const int_poly &F, std::uint64_t lo, std::uint64_t hi, prime_role role, const std::set<std::uint64_t> &exclude,
                               const r_policy &pol = {}, budget &b = default_budget())
{
    prime_pick pick;
    pick.role = role;
    pick.lo = lo;
    pick.hi = hi;
    pick.filters = role_filters(role);
    auto found = scan_primes(lo, hi, [&](std::uint64_t pr) {
        if (exclude.count(pr)) {
            pick.rejected.push_back({pr, "already chosen for another role"});
            return false;
        }
        r_report rep;
        if (auto why = prime_filter(F, pr, role, pol, rep, b)) {
            pick.rejected.push_back({pr, *why});
            return false;
        }
        pick.report = rep;
        return true;
    });
    if (!found) {
        std::string why;
        for (const auto &r : pick.rejected) {
            why += (why.empty() ? "" : "; ") + std::to_string(r.prime) + ": " + r.reason;
        }
        throw refusal_error(std::string("no qualifying prime for ") + to_string(role) + " in [" + std::to_string(lo) + ", " + std::to_string(hi)
                            + "]" + (why.empty() ? std::string(" (no primes in range)") : " (rejected " + why + ")"));
    }
    pick.prime = *found;
    return pick;
}

/// Choose (pi, p, q) in the intervals [c B^e, 2c B^e] for the parameter
/// exponents of n, in the order pi, p, q, keeping them distinct.
inline param_choice prime_select(std::uint64_t B, long n, const mpq_class &c, const int_poly &F, const r_policy &pol = {},
                                 budget &b = default_budget())
{
    require_n(n);
    require(B >= 2, "B must be at least 2");
    require(c > 0, "interval constant must be positive");
    require(F.is_homogeneous() && F.degree() >= 3 && static_cast<long>(F.nvars()) == n, "F must be a form of degree >= 3 in n variables");
    const auto pe = param_exponents(n);
    param_choice out;
    out.n = n;
    out.B = B;
    out.constant = c;
    out.alpha = pe.alpha;
    out.beta = pe.beta;
    out.gamma = pe.gamma;
    if (!pe.q_exceeds_B || n < 10) {
        out.theorem_regime = false;
        out.stamps.push_back("outside-theorem-regime");
    }
    std::set<std::uint64_t> used;
    const std::array<std::pair<prime_role, mpq_class>, 3> roles{{{prime_role::pi, pe.alpha}, {prime_role::p, pe.beta}, {prime_role::q, pe.gamma}}};
    for (std::size_t i = 0; i < 3; ++i) {
        const mpz_class lo = ceil_scaled_root(c, B, roles[i].second);
        const mpz_class hi = floor_scaled_root(mpq_class(2 * c), B, roles[i].second);
        require(hi.fits_ulong_p(), "interval exceeds the supported prime range");
        out.picks[i] = select_prime(F, lo.get_ui(), hi.get_ui(), roles[i].first, used, pol, b);
        used.insert(out.picks[i].prime);
    }
    return out;
}

} // namespace vdc

#endif
