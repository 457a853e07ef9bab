#ifndef VDC_TESTS_SUPPORT_HPP
#define VDC_TESTS_SUPPORT_HPP

// Random generators and brute-force oracles shared by the unit tests and
// the acceptance runner. The oracles deliberately avoid the library's fast
// paths: they walk boxes with nested odometers and evaluate with mpz.

#include <vdc/vdc.hpp>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace vdc_test
{

using namespace vdc;

inline int_poly random_poly(std::mt19937_64 &rng, std::size_t n, unsigned max_deg, int coef, std::size_t max_terms)
{
    std::uniform_int_distribution<int> c(-coef, coef);
    std::uniform_int_distribution<unsigned> e(0, max_deg);
    std::uniform_int_distribution<std::size_t> t(1, max_terms);
    int_poly f(n);
    const std::size_t terms = t(rng);
    for (std::size_t k = 0; k < terms; ++k) {
        monomial m;
        m.exps.assign(n, 0);
        unsigned budget = e(rng);
        for (unsigned b = 0; b < budget; ++b) {
            m.exps[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] += 1;
        }
        f.add_term(m, c(rng));
    }
    return f;
}

/// A polynomial of exact degree d: a random lower part plus one nonzero
/// top-degree term.
inline int_poly random_poly_of_degree(std::mt19937_64 &rng, std::size_t n, unsigned d, int coef, std::size_t max_terms)
{
    int_poly f = random_poly(rng, n, d, coef, max_terms);
    while (f.degree() != static_cast<int>(d)) {
        monomial m;
        m.exps.assign(n, 0);
        for (unsigned b = 0; b < d; ++b) {
            m.exps[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] += 1;
        }
        int a = 0;
        while (a == 0) {
            a = std::uniform_int_distribution<int>(-coef, coef)(rng);
        }
        f.add_term(m, a);
    }
    return f;
}

inline std::vector<std::int64_t> random_vec(std::mt19937_64 &rng, std::size_t n, std::int64_t r)
{
    std::uniform_int_distribution<std::int64_t> d(-r, r);
    std::vector<std::int64_t> v(n);
    for (auto &x : v) {
        x = d(rng);
    }
    return v;
}

/// Call fn on every x in [-R, R]^n in lexicographic order.
inline void odometer(std::size_t n, std::int64_t R, const std::function<void(const std::vector<std::int64_t> &)> &fn)
{
    std::vector<std::int64_t> x(n, -R);
    while (true) {
        fn(x);
        std::size_t i = 0;
        while (i < n && x[i] == R) {
            x[i] = -R;
            ++i;
        }
        if (i == n) {
            return;
        }
        ++x[i];
    }
}

inline mpz_class eval_mpz(const int_poly &f, const std::vector<std::int64_t> &x)
{
    mpz_class s = 0;
    for (const auto &[m, c] : f.terms()) {
        mpz_class t = c;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (unsigned e = 0; e < m.exps[i]; ++e) {
                t *= x[i];
            }
        }
        s += t;
    }
    return s;
}

/// The hat weight at x/B as an exact rational.
inline mpq_class hat_weight(const std::vector<std::int64_t> &x, std::int64_t B)
{
    mpq_class w = 1;
    for (auto v : x) {
        const std::int64_t a = v < 0 ? -v : v;
        if (a >= 2 * B) {
            return 0;
        }
        w *= mpq_class(2 * B - a, 2 * B);
    }
    w.canonicalize();
    return w;
}

inline double smooth_weight(const std::vector<std::int64_t> &x, std::int64_t B)
{
    double w = 1;
    for (auto v : x) {
        const double u = double(v) / double(2 * B);
        if (std::fabs(u) >= 1) {
            return 0;
        }
        w *= std::exp(-1.0 / (1.0 - u * u));
    }
    return w;
}

inline bool divides(std::int64_t m, const mpz_class &v) { return mpz_divisible_ui_p(v.get_mpz_t(), static_cast<unsigned long>(m)) != 0; }

} // namespace vdc_test

#endif
