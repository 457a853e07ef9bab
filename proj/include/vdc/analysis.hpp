#ifndef VDC_ANALYSIS_HPP
#define VDC_ANALYSIS_HPP

#include "common.hpp"
#include "weight.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace vdc
{

/// Working precision of the Poisson probe. The error term is many orders
/// below the sums it is the difference of, so doubles cannot see it.
using hp_float = boost::multiprecision::cpp_bin_float_50;

/// phi = smooth_W, one coordinate: phi(t) = exp(-1/(1 - t^2/4)) on (-2, 2).
template <typename Real>
Real smooth_factor(const Real &t)
{
    using std::exp;
    using std::fabs;
    const Real u = t / 2;
    if (fabs(u) >= 1) {
        return Real(0);
    }
    return exp(Real(-1) / (Real(1) - u * u));
}

/// Taylor coefficients c_0..c_k of phi(t0 + h) = sum c_j h^j, for the
/// one-dimensional smooth factor: phi = exp(g), g(t) = -1/(1 - t^2/4).
inline std::vector<double> smooth_jet(double t0, unsigned k)
{
    std::vector<double> out(k + 1, 0.0);
    if (std::fabs(t0) >= 2.0) {
        return out;
    }
    // a(h) = 1 - (t0 + h)^2 / 4 = a0 + a1 h + a2 h^2.
    const double a0 = 1.0 - t0 * t0 / 4.0, a1 = -t0 / 2.0, a2 = -0.25;
    // r = 1/a as a power series.
    std::vector<double> r(k + 1, 0.0);
    r[0] = 1.0 / a0;
    for (unsigned j = 1; j <= k; ++j) {
        double s = a1 * r[j - 1];
        if (j >= 2) {
            s += a2 * r[j - 2];
        }
        r[j] = -s / a0;
    }
    // g = -r; e = exp(g) via e' = g' e.
    std::vector<double> g(k + 1);
    for (unsigned j = 0; j <= k; ++j) {
        g[j] = -r[j];
    }
    out[0] = std::exp(g[0]);
    for (unsigned j = 1; j <= k; ++j) {
        double s = 0.0;
        for (unsigned i = 1; i <= j; ++i) {
            s += double(i) * g[i] * out[j - i];
        }
        out[j] = s / double(j);
    }
    return out;
}

/// max_t |phi^{(j)}(t)| for j = 0..k on the grid t = -2 + i*step.
inline std::vector<double> derivative_maxima(unsigned k, double step)
{
    std::vector<double> m(k + 1, 0.0);
    const long steps = static_cast<long>(std::llround(4.0 / step));
    for (long i = 0; i <= steps; ++i) {
        const double t = -2.0 + double(i) * step;
        const auto c = smooth_jet(t, k);
        double fact = 1.0;
        for (unsigned j = 0; j <= k; ++j) {
            if (j > 0) {
                fact *= double(j);
            }
            m[j] = std::max(m[j], std::fabs(c[j]) * fact);
        }
    }
    return m;
}

/// D_k for the n-dimensional product weight: the largest |partial| of order
/// k, i.e. the maximum over compositions k = k_1 + ... + k_n of prod M_{k_i}.
inline double product_dk(const std::vector<double> &M, std::size_t n, unsigned k)
{
    // best[j] after i factors = max prod over compositions of j into i parts.
    std::vector<double> best(k + 1, 0.0);
    best[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> next(k + 1, 0.0);
        for (unsigned j = 0; j <= k; ++j) {
            for (unsigned a = 0; a <= j; ++a) {
                next[j] = std::max(next[j], best[j - a] * M[a]);
            }
        }
        best = next;
    }
    return best[k];
}

struct poisson_report
{
    std::size_t n = 1;
    double B = 1, a = 1;
    unsigned k = 0;
    double lhs = 0, main = 0;
    double error = 0;          // lhs - main
    double relative_error = 0; // |error| / main
    double predicted = 0;      // D_0 D_k B^{2n-k} a^{-n+k} + D_k^2 B^{2(n-k)} a^{-n+k}
    double D0 = 0, Dk = 0;
    double grid_step = 0;
    std::string method;        // "residue_classes" or "direct"
    std::string precision;
};

/// Compare sum_x phi(x/B) sum_y phi((x + a y)/B) with a^{-n} (sum_x phi(x/B))^2.
///
/// For integer a the inner sum depends only on x mod a, so with
/// T(r) = sum_{v = r mod a} phi(v/B) the double sum is sum_r T(r)^2 and the
/// error is sum_r (T(r) - mean T)^2. Both reduce to one dimension because
/// phi is a product. Non-integer a (n = 1 only) is summed directly.
inline poisson_report poisson_probe(std::size_t n, double B, double a, unsigned k, double grid_step = 1.0 / 256.0)
{
    require(n >= 1 && n <= 2, "poisson probe supports n = 1 or 2");
    require(B >= 1.0, "B must be at least 1");
    require(a >= 1.0 && a <= B, "a must satisfy 1 <= a <= B");
    require(grid_step > 0 && grid_step <= 1.0 / 256.0, "derivative grid step must be at most 1/256");
    poisson_report r;
    r.n = n;
    r.B = B;
    r.a = a;
    r.k = k;
    r.grid_step = grid_step;
    r.precision = "cpp_bin_float_50";

    const hp_float Bh(B);
    const long X = static_cast<long>(std::floor(2.0 * B)); // phi(x/B) = 0 for |x| >= 2B
    auto phi = [&](long x) { return smooth_factor<hp_float>(hp_float(x) / Bh); };

    hp_float lhs1, main1, err1, total;
    const bool integral = std::floor(a) == a;
    if (integral) {
        const long A = static_cast<long>(a);
        std::vector<hp_float> T(static_cast<std::size_t>(A), hp_float(0));
        for (long x = -X; x <= X; ++x) {
            T[static_cast<std::size_t>(((x % A) + A) % A)] += phi(x);
        }
        for (const auto &t : T) {
            total += t;
        }
        const hp_float mean = total / A;
        hp_float sq = 0, var = 0;
        for (const auto &t : T) {
            sq += t * t;
            var += (t - mean) * (t - mean);
        }
        r.method = "residue_classes";
        // One-dimensional pieces: lhs1 = sum_r T(r)^2, main1 = total^2 / a.
        lhs1 = sq;
        main1 = total * total / A;
        err1 = var;
    } else {
        require(n == 1, "non-integer a is supported for n = 1 only");
        r.method = "direct";
        const hp_float ah(a);
        for (long x = -X; x <= X; ++x) {
            total += phi(x);
        }
        for (long x = -X; x <= X; ++x) {
            const hp_float px = phi(x);
            if (px == 0) {
                continue;
            }
            hp_float inner = 0;
            const long ylo = static_cast<long>(std::floor((-2.0 * B - double(x)) / a)) - 1;
            const long yhi = static_cast<long>(std::ceil((2.0 * B - double(x)) / a)) + 1;
            for (long y = ylo; y <= yhi; ++y) {
                inner += smooth_factor<hp_float>((hp_float(x) + ah * y) / Bh);
            }
            lhs1 += px * inner;
        }
        main1 = total * total / ah;
        err1 = lhs1 - main1;
    }
    // n-dimensional values: lhs = lhs1^n, main = main1^n.
    hp_float lhs = 1, main = 1;
    for (std::size_t i = 0; i < n; ++i) {
        lhs *= lhs1;
        main *= main1;
    }
    // lhs - main = prod(main1 + err1) - prod(main1), expanded to keep precision.
    hp_float err = 0;
    if (n == 1) {
        err = err1;
    } else {
        err = 2 * main1 * err1 + err1 * err1;
    }
    r.lhs = static_cast<double>(lhs);
    r.main = static_cast<double>(main);
    r.error = static_cast<double>(err);
    r.relative_error = main != 0 ? static_cast<double>(boost::multiprecision::abs(err) / main) : 0.0;

    const auto M = derivative_maxima(k, grid_step);
    r.D0 = product_dk(M, n, 0);
    r.Dk = product_dk(M, n, k);
    const double nd = double(n), kd = double(k);
    r.predicted = r.D0 * r.Dk * std::pow(B, 2 * nd - kd) * std::pow(a, -nd + kd) + r.Dk * r.Dk * std::pow(B, 2 * (nd - kd)) * std::pow(a, -nd + kd);
    return r;
}

/// Least-squares slope of log|y| against log x.
inline double log_slope(const std::vector<double> &x, const std::vector<double> &y)
{
    require(x.size() == y.size() && x.size() >= 2, "slope fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(std::fabs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct fourier_row
{
    double xi = 0;
    double re = 0, im = 0;
    double magnitude = 0;
    double product = 0; // |phi_hat(xi)| |xi|^k
};

struct fourier_report
{
    unsigned k = 0;
    std::size_t nodes = 0;     // trapezoid nodes at the accepted level
    double l1_norm = 0;        // int |phi|
    double max_product = 0;
    double max_imag = 0;
    std::vector<fourier_row> rows;
};

/// phi_hat(xi) = int phi(t) e^{-2 pi i xi t} dt for the one-dimensional
/// smooth factor, by the trapezoid rule on [-2, 2]. Every row is computed
/// at N and 2N nodes; the rule is accepted when the two agree to `tol`
/// relative to int |phi|, doubling N up to a cap.
inline fourier_report fourier_decay_probe(unsigned k, const std::vector<double> &xi_grid, double tol = 1e-13)
{
    const double two_pi = 2.0 * boost::math::constants::pi<double>();
    auto trapezoid = [&](double xi, std::size_t N, double &re, double &im) {
        const double h = 4.0 / double(N);
        compensated_sum sr, si;
        for (std::size_t i = 1; i < N; ++i) { // endpoints vanish
            const double t = -2.0 + h * double(i);
            const double w = smooth_factor<double>(t);
            sr += w * std::cos(two_pi * xi * t);
            si += -w * std::sin(two_pi * xi * t);
        }
        re = sr.value() * h;
        im = si.value() * h;
    };
    fourier_report rep;
    rep.k = k;
    double dummy = 0;
    std::size_t N = 1024;
    trapezoid(0.0, 1 << 16, rep.l1_norm, dummy);
    for (double xi : xi_grid) {
        require(xi >= 1.0, "frequencies must satisfy |xi| >= 1");
    }
    for (;; N *= 2) {
        bool ok = true;
        std::vector<fourier_row> rows;
        for (double xi : xi_grid) {
            double r1, i1, r2, i2;
            trapezoid(xi, N, r1, i1);
            trapezoid(xi, 2 * N, r2, i2);
            if (std::hypot(r1 - r2, i1 - i2) > tol * rep.l1_norm) {
                ok = false;
                break;
            }
            fourier_row row;
            row.xi = xi;
            row.re = r2;
            row.im = i2;
            row.magnitude = std::hypot(r2, i2);
            row.product = row.magnitude * std::pow(xi, double(k));
            rows.push_back(row);
        }
        if (ok) {
            rep.nodes = 2 * N;
            rep.rows = std::move(rows);
            break;
        }
        if (N >= (std::size_t(1) << 22)) {
            throw std::runtime_error("quadrature did not converge across two refinement levels");
        }
    }
    for (const auto &row : rep.rows) {
        rep.max_product = std::max(rep.max_product, row.product);
        rep.max_imag = std::max(rep.max_imag, std::fabs(row.im));
    }
    return rep;
}

} // namespace vdc

#endif
