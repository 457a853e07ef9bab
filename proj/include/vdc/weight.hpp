#ifndef VDC_WEIGHT_HPP
#define VDC_WEIGHT_HPP

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <span>
#include <vector>

namespace vdc
{

/// Product weights W(t) = prod_i w(t_i) on R^n, all supported in [-2,2]^n
/// except the indicator, which is the cube [-1,1]^n.
///
///   smooth    : w(t) = exp(-1/(1 - t^2/4)) for |t| < 2, else 0
///   hat       : w(t) = max(0, 1 - |t|/2)  (exactly rational at rationals)
///   indicator : w(t) = [|t| <= 1]
///   zero      : w = 0, a test weight that empties every weighted sum
enum class weight_kind { smooth, hat, indicator, zero };

inline const char *to_string(weight_kind k)
{
    switch (k) {
    case weight_kind::smooth:
        return "smooth";
    case weight_kind::hat:
        return "hat";
    case weight_kind::indicator:
        return "indicator";
    default:
        return "zero";
    }
}

inline weight_kind parse_weight(std::string_view s)
{
    if (s == "smooth") {
        return weight_kind::smooth;
    }
    if (s == "hat") {
        return weight_kind::hat;
    }
    if (s == "indicator") {
        return weight_kind::indicator;
    }
    if (s == "zero") {
        return weight_kind::zero;
    }
    throw precondition_error("unknown weight '" + std::string(s) + "' (smooth, hat, indicator, zero)");
}

inline bool is_exact(weight_kind k) { return k != weight_kind::smooth; }

/// The one-dimensional bump w(u) = exp(-1/(1-u^2)) on (-1, 1).
inline double bump(double u)
{
    const double a = std::fabs(u);
    if (a >= 1.0) {
        return 0.0;
    }
    return std::exp(-1.0 / (1.0 - u * u));
}

/// One coordinate factor of W at real t.
inline double weight_factor(weight_kind k, double t)
{
    switch (k) {
    case weight_kind::smooth:
        return bump(t / 2.0);
    case weight_kind::hat:
        return std::max(0.0, 1.0 - std::fabs(t) / 2.0);
    case weight_kind::indicator:
        return std::fabs(t) <= 1.0 ? 1.0 : 0.0;
    default:
        return 0.0;
    }
}

/// W(t) at a real point.
inline double weight_value(weight_kind k, std::span<const double> t)
{
    double r = 1.0;
    for (double v : t) {
        r *= weight_factor(k, v);
    }
    return r;
}

/// Per-coordinate factors w(x/B) at lattice points, for an integer scale B.
///
/// Exact kinds store integer numerators over a common per-coordinate
/// denominator (2B for the hat, 1 otherwise); the smooth kind stores
/// doubles. `radius` is the largest |x| with a nonzero factor, or -1 when
/// the weight is identically zero.
class lattice_weight
{
public:
    lattice_weight(weight_kind k, std::int64_t B) : m_kind(k), m_B(B)
    {
        require(B >= 1, "box size B must be a positive integer");
        switch (k) {
        case weight_kind::smooth:
        case weight_kind::hat:
            m_radius = 2 * B - 1;
            break;
        case weight_kind::indicator:
            m_radius = B;
            break;
        default:
            m_radius = -1;
            break;
        }
        m_den = k == weight_kind::hat ? 2 * B : 1;
        if (m_radius >= 0) {
            m_num.resize(static_cast<std::size_t>(2 * m_radius + 1));
            m_real.resize(m_num.size());
            for (std::int64_t x = -m_radius; x <= m_radius; ++x) {
                const std::size_t i = static_cast<std::size_t>(x + m_radius);
                switch (k) {
                case weight_kind::hat:
                    m_num[i] = 2 * B - (x < 0 ? -x : x);
                    break;
                case weight_kind::indicator:
                    m_num[i] = 1;
                    break;
                default:
                    m_num[i] = 0;
                    break;
                }
                m_real[i] = k == weight_kind::smooth ? weight_factor(k, double(x) / double(B)) : double(m_num[i]) / double(m_den);
            }
        }
    }

    weight_kind kind() const { return m_kind; }
    bool exact() const { return is_exact(m_kind); }
    std::int64_t scale() const { return m_B; }
    std::int64_t radius() const { return m_radius; }
    std::int64_t denominator() const { return m_den; }

    bool in_support(std::int64_t x) const { return x >= -m_radius && x <= m_radius; }

    std::int64_t numerator(std::int64_t x) const { return in_support(x) ? m_num[static_cast<std::size_t>(x + m_radius)] : 0; }
    double real(std::int64_t x) const { return in_support(x) ? m_real[static_cast<std::size_t>(x + m_radius)] : 0.0; }

private:
    weight_kind m_kind;
    std::int64_t m_B;
    std::int64_t m_radius = -1;
    std::int64_t m_den = 1;
    std::vector<std::int64_t> m_num;
    std::vector<double> m_real;
};

} // namespace vdc

#endif
