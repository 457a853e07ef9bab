#ifndef VDC_COMMON_HPP
#define VDC_COMMON_HPP

#include <gmpxx.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vdc
{

/// Raised when an operation's input violates its documented precondition.
/// The CLI maps it to exit code 2.
class precondition_error : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a hypothesis of a probe (dimension, smoothness) is not met.
class refusal_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an enumeration would exceed the configured point budget.
class budget_exceeded : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string &what)
{
    if (!cond) {
        throw precondition_error(what);
    }
}

/// Global counter of enumerated points. Every enumeration charges its full
/// size up front, so an oversize request fails before any work is done.
class budget
{
public:
    static constexpr std::uint64_t default_limit = std::uint64_t(1) << 28;

    explicit budget(std::uint64_t limit = default_limit) : m_limit(limit) {}

    budget(const budget &) = delete;
    budget &operator=(const budget &) = delete;

    /// Charge `points` to the budget; throws budget_exceeded on overflow of
    /// the remaining allowance for this single request.
    void charge(std::uint64_t points, const char *what = "enumeration")
    {
        if (points > m_limit) {
            throw budget_exceeded(std::string(what) + " needs " + std::to_string(points)
                                  + " points, budget is " + std::to_string(m_limit));
        }
        m_used.fetch_add(points, std::memory_order_relaxed);
    }

    /// True if a request of `points` would be accepted.
    bool fits(std::uint64_t points) const { return points <= m_limit; }

    std::uint64_t limit() const { return m_limit; }
    std::uint64_t used() const { return m_used.load(std::memory_order_relaxed); }

private:
    std::uint64_t m_limit;
    std::atomic<std::uint64_t> m_used{0};
};

inline budget &default_budget()
{
    static budget b;
    return b;
}

/// Saturating integer power used for budget arithmetic.
inline std::uint64_t checked_pow(std::uint64_t base, unsigned exp)
{
    std::uint64_t r = 1;
    for (unsigned i = 0; i < exp; ++i) {
        if (base != 0 && r > UINT64_MAX / base) {
            return UINT64_MAX;
        }
        r *= base;
    }
    return r;
}

inline mpz_class to_mpz(__int128 v)
{
    const bool neg = v < 0;
    unsigned __int128 u = neg ? (unsigned __int128)(-(v + 1)) + 1 : (unsigned __int128)v;
    mpz_class hi, lo;
    const std::uint64_t high = std::uint64_t(u >> 64), low = std::uint64_t(u);
    mpz_import(hi.get_mpz_t(), 1, 1, sizeof(high), 0, 0, &high);
    mpz_import(lo.get_mpz_t(), 1, 1, sizeof(low), 0, 0, &low);
    mpz_class r = (hi << 64) + lo;
    return neg ? mpz_class(-r) : r;
}

inline std::string to_string(const mpz_class &v) { return v.get_str(); }

inline std::string to_string(const mpq_class &v) { return v.get_str(); }

/// Non-negative residue of v modulo m > 0.
inline std::int64_t mod_floor(std::int64_t v, std::int64_t m)
{
    std::int64_t r = v % m;
    return r < 0 ? r + m : r;
}

inline std::int64_t mod_floor(const mpz_class &v, std::int64_t m)
{
    mpz_class r;
    mpz_fdiv_r_ui(r.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(m));
    return r.get_si();
}

/// Number of worker threads used by sweeps. Results never depend on it.
inline std::atomic<unsigned> &worker_count_ref()
{
    static std::atomic<unsigned> w{std::max(1u, std::thread::hardware_concurrency())};
    return w;
}

inline unsigned workers() { return worker_count_ref().load(); }

inline void set_workers(unsigned w) { worker_count_ref().store(std::max(1u, w)); }

/// Evaluate fn(i) for i in [0, tasks) on the configured workers and return
/// the results in index order. Tasks are claimed dynamically, but each
/// result lands in its own slot, so any later reduction over the returned
/// vector is independent of the worker count.
template <typename Fn>
auto parallel_map(std::size_t tasks, Fn &&fn) -> std::vector<decltype(fn(std::size_t{}))>
{
    using result_t = decltype(fn(std::size_t{}));
    std::vector<result_t> out(tasks);
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers(), tasks));
    if (w <= 1) {
        for (std::size_t i = 0; i < tasks; ++i) {
            out[i] = fn(i);
        }
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) {
                    out[i] = fn(i);
                }
            } catch (...) {
                errors[t] = std::current_exception();
                next.store(tasks);
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

/// Neumaier-compensated accumulator. Used wherever floating point sums are
/// formed, always in a fixed traversal order.
class compensated_sum
{
public:
    compensated_sum &operator+=(double v)
    {
        const double t = m_sum + v;
        if (std::fabs(m_sum) >= std::fabs(v)) {
            m_comp += (m_sum - t) + v;
        } else {
            m_comp += (v - t) + m_sum;
        }
        m_sum = t;
        return *this;
    }
    compensated_sum &operator+=(const compensated_sum &o)
    {
        *this += o.m_sum;
        *this += o.m_comp;
        return *this;
    }
    double value() const { return m_sum + m_comp; }

private:
    double m_sum = 0.0;
    double m_comp = 0.0;
};

} // namespace vdc

#endif
