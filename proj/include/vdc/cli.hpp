#ifndef VDC_CLI_HPP
#define VDC_CLI_HPP

#include "analysis.hpp"
#include "asymptotics.hpp"
#include "common.hpp"
#include "counting.hpp"
#include "ffield.hpp"
#include "geometry.hpp"
#include "mpoly.hpp"
#include "pipeline.hpp"
#include "weight.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/version.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vdc::cli
{

using json = nlohmann::ordered_json;

inline constexpr const char *version = "1.0.0";
inline constexpr int schema_version = 1;

inline constexpr int exit_ok = 0;
inline constexpr int exit_internal = 1;
inline constexpr int exit_refused = 2;
inline constexpr int exit_usage = 64;

// ---------------------------------------------------------------- encoding

inline json to_json(const mpz_class &v)
{
    if (v.fits_slong_p()) {
        return v.get_si();
    }
    return v.get_str();
}

/// Exact rationals travel as decimal strings so no reader loses digits.
inline json to_json(const mpq_class &v) { return json{{"num", v.get_num().get_str()}, {"den", v.get_den().get_str()}}; }

inline json to_json(const weighted_value &v)
{
    if (v.exact) {
        return to_json(v.rational);
    }
    return v.real;
}

json to_json(const sing_report &r);
json to_json(const sigma_result &r);
json to_json(const dim_bound_row &r);
json to_json(const r_report &r);
json to_json(const exponent_vector &v);
json to_json(const prime_pick &p);
json to_json(const smoothness_check &c);

template <typename T>
json to_json(const std::vector<T> &v)
{
    json a = json::array();
    for (const auto &x : v) {
        if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, std::string>) {
            a.push_back(x);
        } else {
            a.push_back(to_json(x));
        }
    }
    return a;
}

template <typename T>
json opt_json(const std::optional<T> &v)
{
    if (!v) {
        return nullptr;
    }
    if constexpr (std::is_arithmetic_v<T>) {
        return *v;
    } else {
        return to_json(*v);
    }
}

inline json to_json(const sing_report &r)
{
    json w = json::array();
    for (const auto &p : r.witnesses) {
        w.push_back(to_json(p));
    }
    return json{{"field", r.field_name},           {"nvars", r.nvars},
                {"total_points", r.total_points},  {"sing_points", r.sing_points},
                {"expected_codim", r.expected_codim}, {"dim_est_variety", r.dim_est_variety},
                {"dim_est_sing", r.dim_est_sing},  {"witnesses", w}};
}

inline json to_json(const sigma_result &r)
{
    return json{{"s", r.s},
                {"s_tilde", r.s_tilde},
                {"sigma", r.sigma},
                {"degenerate", r.degenerate},
                {"vy_points", r.vy_points},
                {"vy_sing", r.vy_sing},
                {"vty_points", r.vty_points},
                {"vty_sing", r.vty_sing},
                {"dim_est_vy", r.dim_est_vy}};
}

inline json to_json(const dim_bound_row &r)
{
    return json{{"s", r.s}, {"count", r.count}, {"dim_est", r.dim_est}, {"bound", r.bound}, {"ok", r.ok}};
}

inline json to_json(const r_report &r)
{
    json out;
    out["p"] = r.p;
    out["nvars"] = r.nvars;
    out["policy"] = json{{"max_ext_degree", r.policy.max_ext_degree},
                         {"r2_samples", r.policy.r2_samples},
                         {"r2_exhaustive_max", r.policy.r2_exhaustive_max},
                         {"seed", r.policy.seed},
                         {"run_r1", r.policy.run_r1},
                         {"run_r2", r.policy.run_r2}};
    out["r0"] = json{{"verdict", to_string(r.r0.verdict)},
                     {"searched_degree", r.r0.searched_degree},
                     {"witness_field", r.r0.witness_field},
                     {"witness", opt_json(r.r0.witness)}};
    out["r1"] = json{{"verdict", to_string(r.r1.verdict)},
                     {"rows", to_json(r.r1.rows)},
                     {"sigma_histogram", to_json(r.r1.sigma_histogram)},
                     {"degenerate_count", r.r1.degenerate_count},
                     {"witness_s", opt_json(r.r1.witness_s)},
                     {"witness_y", opt_json(r.r1.witness_y)}};
    json per_y = json::array();
    for (const auto &row : r.r2.per_y) {
        per_y.push_back(json{{"y", to_json(row.y)},
                             {"sigma", row.sigma},
                             {"rows", to_json(row.rows)},
                             {"t_deg_count", row.t_deg_count},
                             {"t_deg_dim_est", row.t_deg_dim_est}});
    }
    out["r2"] = json{{"verdict", to_string(r.r2.verdict)},
                     {"sampled", r.r2.sampled},
                     {"y_checked", r.r2.y_checked},
                     {"per_y", per_y},
                     {"witness_y", opt_json(r.r2.witness_y)},
                     {"witness_s", opt_json(r.r2.witness_s)},
                     {"witness_z", opt_json(r.r2.witness_z)},
                     {"note", r.r2.note}};
    return out;
}

inline json to_json(const exponent_vector &v)
{
    return json{{"log_B", to_json(v.b)}, {"log_pi", to_json(v.pi)}, {"log_p", to_json(v.p)}, {"log_q", to_json(v.q)}};
}

inline json to_json(const prime_pick &p)
{
    json rej = json::array();
    for (const auto &r : p.rejected) {
        rej.push_back(json{{"prime", r.prime}, {"reason", r.reason}});
    }
    return json{{"role", to_string(p.role)},
                {"interval", json::array({p.lo, p.hi})},
                {"prime", p.prime},
                {"filters", p.filters},
                {"rejected", rej},
                {"report", p.report ? to_json(*p.report) : json(nullptr)}};
}

inline json to_json(const smoothness_check &c)
{
    return json{{"p", c.p},
                {"ok", c.ok},
                {"dim_est", c.dim_est},
                {"searched", c.searched},
                {"reason", c.reason},
                {"witness", opt_json(c.witness)},
                {"witness_field", c.witness_field}};
}

/// Rational written as "a + b/c" with 0 <= b < c, alongside num/den.
inline json mixed_json(const mpq_class &v)
{
    mpz_class whole;
    mpz_fdiv_q(whole.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
    const mpq_class frac = v - mpq_class(whole);
    json j = to_json(v);
    j["integer_part"] = to_json(whole);
    j["fraction"] = to_json(frac);
    return j;
}

// ---------------------------------------------------------------- parsing

inline std::vector<int_poly> parse_polys(const std::vector<std::string> &texts, std::size_t n)
{
    require(!texts.empty(), "at least one polynomial is required");
    std::vector<int_poly> out;
    for (const auto &t : texts) {
        out.push_back(parse_poly(t, n));
        check_limits(out.back());
    }
    return out;
}

inline std::vector<fq_poly> reduce_all(const std::vector<int_poly> &fs, const field &K)
{
    std::vector<fq_poly> out;
    for (const auto &f : fs) {
        out.push_back(reduce_mod(f, K));
    }
    return out;
}

inline std::vector<field::elem> to_field_point(const std::vector<std::int64_t> &v, const field &K)
{
    std::vector<field::elem> out;
    for (auto x : v) {
        out.push_back(K.from_int(x));
    }
    return out;
}

inline json poly_json(const int_poly &f)
{
    return json{{"text", to_string(f)}, {"nvars", f.nvars()}, {"degree", f.degree()}, {"terms", f.size()}};
}

// ---------------------------------------------------------------- dispatch

struct options
{
    unsigned workers = 0;
    std::uint64_t budget_limit = budget::default_limit;
    std::string emit;
    std::string manifest;
    std::string replay;

    std::size_t n = 0;
    std::vector<std::string> polys, forms;
    std::string field_text;
    std::int64_t B = 0;
    std::uint64_t B_big = 0;
    std::int64_t mod = 1;
    std::string weight = "none";
    std::int64_t pi = 0, p = 0, q = 0;
    unsigned codim = 0;
    std::size_t r2_samples = 64;
    std::size_t r2_exhaustive_max = 121;
    unsigned max_ext_degree = 2;
    std::uint64_t seed = 0x5eed;
    bool no_r1 = false, no_r2 = false;
    std::vector<std::int64_t> y, z, x;
    std::vector<std::int64_t> B_grid;
    std::string c = "1";
    long C = -1, s = -1;
    double a = 1, Bf = 1, grid_step = 1.0 / 256.0;
    unsigned k = 0;
    std::vector<double> xi;
    std::uint64_t max_pair_table = 20000;
};

inline r_policy policy_from(const options &o)
{
    r_policy pol;
    pol.max_ext_degree = o.max_ext_degree;
    pol.r2_samples = o.r2_samples;
    pol.r2_exhaustive_max = o.r2_exhaustive_max;
    pol.seed = o.seed;
    pol.run_r1 = !o.no_r1;
    pol.run_r2 = !o.no_r2;
    return pol;
}

// Individual commands ------------------------------------------------------

inline json run_count(const options &o, budget &b)
{
    const auto fs = parse_polys(o.polys, o.n);
    require(o.mod >= 1, "modulus must be positive");
    json r;
    r["polys"] = to_json(std::vector<std::string>(o.polys.begin(), o.polys.end()));
    r["B"] = o.B;
    r["modulus"] = o.mod;
    r["weight"] = o.weight;
    if (o.weight == "none") {
        if (fs.size() == 1 && o.mod == 1) {
            r["value"] = count_box(fs.front(), o.B, b);
        } else {
            r["value"] = count_box_mod(fs, o.B, o.mod, b);
        }
        r["kind"] = "integer";
    } else {
        const auto v = weighted_count(fs, o.B, o.mod, parse_weight(o.weight), b);
        r["value"] = to_json(v);
        r["kind"] = v.exact ? "rational" : "real";
        if (v.exact) {
            r["approx"] = v.rational.get_d();
        }
    }
    return r;
}

inline json run_geom_sing(const options &o, budget &b)
{
    const field K = parse_field(o.field_text);
    const auto fs = parse_polys(o.forms, o.n);
    const variety_spec v(K, o.n, reduce_all(fs, K));
    const unsigned r = o.codim ? o.codim : static_cast<unsigned>(fs.size());
    return to_json(sing_points(v, r, b));
}

inline json run_geom_rcheck(const options &o, budget &b)
{
    const auto fs = parse_polys(o.forms, o.n);
    require(fs.size() == 1, "rcheck takes a single form");
    require(o.p >= 2 && o.p <= 0xffffffffLL, "p out of range");
    return to_json(r_check(fs.front(), static_cast<std::uint32_t>(o.p), policy_from(o), b));
}

inline json run_geom_sigma(const options &o, budget &b)
{
    const field K = parse_field(o.field_text);
    const auto fs = parse_polys(o.forms, o.n);
    require(fs.size() == 1, "sigma takes a single form");
    require(o.y.size() == o.n, "--y needs n coordinates");
    const auto F = reduce_mod(fs.front(), K);
    const auto y = to_field_point(o.y, K);
    json r = to_json(sigma_y(F, y, b));
    r["field"] = K.name();
    r["y"] = to_json(y);
    if (!o.z.empty()) {
        require(o.z.size() == o.n, "--z needs n coordinates");
        const auto z = to_field_point(o.z, K);
        const auto sz = s_yz(F, y, z, b);
        r["z"] = to_json(z);
        r["s_yz"] = json{{"s", sz.s}, {"degenerate", sz.degenerate}, {"points", sz.points}, {"sing", sz.sing}, {"dim_est_points", sz.dim_est_points}};
    }
    return r;
}

inline json run_geom_tset(const options &o, budget &b)
{
    const field K = parse_field(o.field_text);
    const auto fs = parse_polys(o.forms, o.n);
    require(fs.size() == 1, "tset takes a single form");
    const auto F = reduce_mod(fs.front(), K);
    const auto t = t_set(F, static_cast<int>(o.s), b);
    return json{{"field", K.name()}, {"s", t.s}, {"count", t.members.size()}, {"dim_est", t.dim_est}, {"bound", static_cast<int>(o.n) - 2 - t.s}};
}

inline json run_pipeline(const options &o, budget &b)
{
    const auto fs = parse_polys(o.polys, o.n);
    require(fs.size() == 1, "pipeline takes a single polynomial");
    pipeline_params P;
    P.f = fs.front();
    P.B = o.B;
    P.pi = o.pi;
    P.p = o.p;
    P.q = o.q;
    P.weight = parse_weight(o.weight == "none" ? "hat" : o.weight);
    P.max_pair_table = o.max_pair_table;
    const auto L = ledger(P, b);

    json r;
    r["exact"] = L.exact;
    r["n"] = L.n;
    r["support_radius"] = L.radius;
    r["Y"] = L.Y;
    r["Z"] = L.Z;
    json sc;
    sc["N_W(f,B,pi p q)"] = to_json(L.N_f_pipq);
    sc["N_W(0,B,pi p q)"] = to_json(L.N_0_pipq);
    sc["N_W(f,B,pq)"] = to_json(L.N_f_pq);
    sc["K"] = to_json(L.K);
    sc["S"] = to_json(L.S);
    sc["Sigma"] = to_json(L.Sigma);
    sc["sum_u A(u)^2"] = to_json(L.sum_sq);
    sc["sum_y D1(y)"] = to_json(L.sum_pairs);
    sc["sum_y Delta(y)"] = to_json(L.sum_delta);
    sc["sum_y M(y)"] = to_json(L.sum_mass);
    sc["E0"] = to_json(L.E0);
    sc["E1"] = to_json(L.E1);
    sc["N_{W^2}(f,B,pq)"] = to_json(L.N_w2_pq);
    sc["sum_x W(x/B)^2"] = to_json(L.sum_w2);
    sc["zero_count_pi"] = L.zero_count_pi;
    r["scalars"] = sc;
    r["E4"] = L.E4;
    r["bounds"] = json{{"C", L.bounds.C},
                       {"E0", L.bounds.E0},
                       {"E1", L.bounds.E1},
                       {"E3", L.bounds.E3},
                       {"lemma_i_lhs", L.bounds.lemma_i_lhs},
                       {"lemma_i_rhs", L.bounds.lemma_i_rhs}};
    json ids = json::array();
    for (const auto &c : L.identities) {
        ids.push_back(json{{"name", c.name}, {"kind", c.kind}, {"residual", to_json(c.residual)}, {"ok", c.ok}, {"detail", c.detail}});
    }
    r["identities"] = ids;
    r["identities_ok"] = L.identities_ok();
    r["warnings"] = L.warnings;
    r["y_count"] = L.rows.size();
    r["pair_table_complete"] = L.pair_table_complete;

    json rows = json::array();
    for (const auto &row : L.rows) {
        rows.push_back(json{{"y", to_json(row.y)},
                            {"D1", to_json(row.pair_sum)},
                            {"M", to_json(row.mass)},
                            {"Delta", to_json(row.delta)},
                            {"K", to_json(row.K_y)},
                            {"S", to_json(row.S_y)},
                            {"Sigma", to_json(row.Sigma_y)},
                            {"Sigma_prime", to_json(row.Sigma_prime_y)},
                            {"E2", to_json(row.E2_y)},
                            {"X_y", row.X_y},
                            {"sum_z_Delta", to_json(row.sum_z_delta)},
                            {"sum_z_abs_Delta", to_json(row.sum_z_abs_delta)},
                            {"I6_residual", to_json(row.i6_residual)},
                            {"expansion_residual", to_json(row.expansion_residual)},
                            {"cauchy_ok", row.cauchy_ok},
                            {"completion_ok", row.completion_ok},
                            {"E3", opt_json(row.E3_y)}});
    }
    r["rows"] = rows;
    json pairs = json::array();
    for (const auto &e : L.pair_table) {
        pairs.push_back(json{{"y", to_json(L.rows[e.row].y)}, {"z", to_json(e.z)}, {"Delta", to_json(e.value)}});
    }
    r["pair_table"] = pairs;
    return r;
}

/// The pipeline prints its scalars and checks; the per-y and pair tables
/// go to --emit only.
inline json summarize_pipeline(const json &full)
{
    json s = full;
    s.erase("rows");
    s.erase("pair_table");
    return s;
}

inline json run_exponents(const options &o, budget &)
{
    const long n = static_cast<long>(o.n);
    json r;
    r["n"] = n;
    const auto t = thm_exponent(n);
    json te = mixed_json(t);
    te["display"] = thm_exponent_display(n);
    r["thm_exponent"] = te;
    const auto sal = salberger_exponent(n);
    r["salberger_exponent"] = mixed_json(sal);
    r["beats_salberger"] = t < sal;
    r["below_n_minus_3"] = t < mpq_class(n - 3);
    const auto pe = param_exponents(n);
    r["alpha"] = to_json(pe.alpha);
    r["beta"] = to_json(pe.beta);
    r["gamma"] = to_json(pe.gamma);
    r["n_minus_alpha_beta_gamma"] = to_json(pe.main);
    r["identity_holds"] = pe.main == t;
    r["q_exceeds_B"] = pe.q_exceeds_B;

    const auto e4a = e4_term_exponents(n);
    json e4j;
    e4j["exponents"] = to_json(std::vector<mpq_class>(e4a.exponents.begin(), e4a.exponents.end()));
    e4j["argmax"] = e4a.argmax;
    e4j["max_exponent"] = to_json(e4a.max_exponent);
    e4j["max_equals_main"] = e4a.max_equals_main;
    e4j["expected_dominance"] = e4a.expected_dominance;
    const auto terms = e4_terms(n);
    json tv = json::array();
    for (const auto &v : terms) {
        tv.push_back(to_json(v));
    }
    e4j["terms"] = tv;
    r["e4"] = e4j;

    const auto tab = lemma41_error_exponents(n, o.C, o.s);
    json lt = json::array();
    for (const auto &e : tab.terms) {
        lt.push_back(json{{"group", e.group},
                          {"index", e.index},
                          {"base", to_json(e.base)},
                          {"slope", to_json(e.slope)},
                          {"param", e.param},
                          {"param_value", e.param_value},
                          {"raw", to_json(e.raw)},
                          {"propagated", to_json(e.propagated)},
                          {"exceeds_main", e.exceeds_main},
                          {"trend", e.trend}});
    }
    r["lemma_error_terms"] = json{{"main", to_json(tab.main)}, {"terms", lt}, {"exceeding", tab.exceeding}};
    return r;
}

inline mpq_class parse_rational(const std::string &s)
{
    mpq_class v;
    if (v.set_str(s, 10) != 0) {
        throw precondition_error("not a rational number: '" + s + "'");
    }
    v.canonicalize();
    return v;
}

inline json run_primes(const options &o, budget &b)
{
    const auto fs = parse_polys(o.forms, o.n);
    require(fs.size() == 1, "primes takes a single form");
    const auto pc = prime_select(o.B_big, static_cast<long>(o.n), parse_rational(o.c), fs.front(), policy_from(o), b);
    json picks = json::array();
    for (const auto &p : pc.picks) {
        picks.push_back(to_json(p));
    }
    return json{{"n", pc.n},
                {"B", pc.B},
                {"constant", to_json(pc.constant)},
                {"alpha", to_json(pc.alpha)},
                {"beta", to_json(pc.beta)},
                {"gamma", to_json(pc.gamma)},
                {"picks", picks},
                {"theorem_regime", pc.theorem_regime},
                {"stamps", pc.stamps}};
}

inline json run_poisson(const options &o, budget &)
{
    const auto r = poisson_probe(o.n, o.Bf, o.a, o.k, o.grid_step);
    return json{{"weight", "smooth"},
                {"n", r.n},
                {"B", r.B},
                {"a", r.a},
                {"k", r.k},
                {"lhs", r.lhs},
                {"main", r.main},
                {"error", r.error},
                {"relative_error", r.relative_error},
                {"predicted", r.predicted},
                {"D0", r.D0},
                {"Dk", r.Dk},
                {"grid_step", r.grid_step},
                {"method", r.method},
                {"precision", r.precision}};
}

inline json run_fourier(const options &o, budget &)
{
    std::vector<double> grid = o.xi;
    if (grid.empty()) {
        for (int i = 1; i <= 64; ++i) {
            grid.push_back(i);
        }
    }
    const auto r = fourier_decay_probe(o.k, grid);
    json rows = json::array();
    for (const auto &row : r.rows) {
        rows.push_back(json{{"xi", row.xi}, {"re", row.re}, {"im", row.im}, {"magnitude", row.magnitude}, {"product", row.product}});
    }
    return json{{"k", r.k}, {"nodes", r.nodes}, {"l1_norm", r.l1_norm}, {"max_product", r.max_product}, {"max_imag", r.max_imag}, {"rows", rows}};
}

inline json run_poly(const std::string &op, const options &o, budget &)
{
    const auto fs = parse_polys(o.polys, o.n);
    require(fs.size() == 1, "poly takes a single polynomial");
    const auto &f = fs.front();
    json r;
    r["input"] = poly_json(f);
    auto need = [&](const std::vector<std::int64_t> &v, const char *flag) {
        require(v.size() == o.n, std::string(flag) + " needs n coordinates");
        return std::span<const std::int64_t>(v);
    };
    if (op == "diff") {
        const auto y = need(o.y, "--y");
        const int_poly d = o.z.empty() ? diff_y(f, y) : diff_yz(f, y, need(o.z, "--z"));
        r["result"] = to_string(d);
        r["degree"] = d.degree();
    } else if (op == "eval") {
        r["result"] = to_json(eval(f, need(o.x, "--x")));
    } else if (op == "lead") {
        r["result"] = to_string(leading_form(f));
    } else if (op == "dirform") {
        const auto d = directional_form(leading_form(f), need(o.y, "--y"));
        r["result"] = to_string(d);
        r["degree"] = d.degree();
    } else if (op == "hessian") {
        const auto d = hessian_form(leading_form(f), need(o.y, "--y"), need(o.z, "--z"));
        r["result"] = to_string(d);
        r["degree"] = d.degree();
    }
    return r;
}

inline json run_trivial_bound(const options &o, budget &b)
{
    const field K = parse_field(o.field_text);
    const auto fs = parse_polys(o.forms, o.n);
    const variety_spec v(K, o.n, reduce_all(fs, K), false);
    std::vector<std::int64_t> grid = o.B_grid;
    if (grid.empty()) {
        grid = {5, 10, 20, 40};
    }
    const auto r = trivial_bound_probe(v, grid, b);
    json rows = json::array();
    for (const auto &row : r.rows) {
        rows.push_back(json{{"B", row.B}, {"count", row.count}, {"ratio", to_json(row.ratio)}, {"ratio_approx", row.ratio.get_d()}});
    }
    return json{{"field", r.field_name},
                {"nvars", r.nvars},
                {"variety_points", r.variety_points},
                {"dim", r.dim},
                {"rows", rows},
                {"max_ratio", to_json(r.max_ratio)},
                {"max_ratio_approx", r.max_ratio.get_d()}};
}

inline json run_hooley_deligne(const options &o, budget &b)
{
    const field K = parse_field(o.field_text);
    const auto fs = parse_polys(o.forms, o.n);
    const auto r = hooley_deligne_probe(reduce_all(fs, K), K, b);
    return json{{"field", r.field_name},
                {"nvars", r.nvars},
                {"r", r.r},
                {"count", r.count},
                {"main", to_json(r.main)},
                {"error", to_json(r.error)},
                {"s", r.s},
                {"dim_z", r.dim_z},
                {"dim_field", r.dim_field},
                {"normalized_error", r.normalized_error},
                {"sing_scan", to_json(r.z_scan)}};
}

inline json run_deviation(const options &o, budget &b)
{
    const auto fs = parse_polys(o.polys, o.n);
    const auto r = deviation_probe(fs, o.B, o.p, o.q, parse_weight(o.weight == "none" ? "smooth" : o.weight), b);
    json rows = json::array();
    for (const auto &row : r.rows) {
        rows.push_back(json{{"C", row.C},
                            {"terms", json::array({row.terms[0], row.terms[1], row.terms[2], row.terms[3]})},
                            {"total", row.total},
                            {"margin", row.margin}});
    }
    return json{{"nvars", r.nvars},
                {"r", r.r},
                {"B", r.B},
                {"p", r.p},
                {"q", r.q},
                {"weight", to_string(r.weight)},
                {"N_f", to_json(r.N_f)},
                {"N_0", to_json(r.N_0)},
                {"measured", r.measured},
                {"rows", rows},
                {"check_p", to_json(r.check_p)},
                {"check_q", to_json(r.check_q)},
                {"warnings", r.warnings}};
}

// Driver ---------------------------------------------------------------------

inline json versions_json()
{
    return json{{"vdc", version},
                {"schema", schema_version},
                {"gmp", gmp_version},
                {"boost", BOOST_LIB_VERSION},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "."
                                      + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

inline void write_file(const std::string &path, const json &doc)
{
    std::ofstream f(path);
    if (!f) {
        throw precondition_error("cannot write '" + path + "'");
    }
    f << doc.dump(2) << "\n";
}

inline json read_file(const std::string &path)
{
    std::ifstream f(path);
    if (!f) {
        throw precondition_error("cannot read '" + path + "'");
    }
    try {
        return json::parse(f);
    } catch (const json::exception &e) {
        throw precondition_error("'" + path + "' is not valid JSON: " + e.what());
    }
}

/// Run the CLI on argv. JSON goes to `out`, usage and diagnostics to `err`.
inline int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

inline int dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, out, err);
}

inline int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    options o;
    CLI::App app{"vdc: exact counting, differencing and finite-field tools for van der Corput differencing", "vdc"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--workers", o.workers, "worker threads (default: available parallelism)");
    app.add_option("--budget", o.budget_limit, "maximum points per enumeration")->check(CLI::PositiveNumber);
    app.add_option("--emit", o.emit, "also write the full JSON report to this path");
    app.add_option("--manifest", o.manifest, "write a run manifest to this path");

    std::string chosen;
    std::function<json(const options &, budget &)> run;
    std::function<json(const json &)> summarize;
    auto bind = [&](CLI::App *sc, std::string name, std::function<json(const options &, budget &)> fn) {
        sc->callback([&, name, fn] {
            chosen = name;
            run = fn;
        });
    };
    auto add_n = [&](CLI::App *sc) { sc->add_option("--n", o.n, "number of variables")->required()->check(CLI::Range(1, 12)); };
    auto add_poly = [&](CLI::App *sc) { sc->add_option("--poly", o.polys, "polynomial (repeatable)")->required(); };
    auto add_form = [&](CLI::App *sc) { sc->add_option("--form", o.forms, "form (repeatable)")->required(); };
    auto add_vec = [&](CLI::App *sc, const char *flag, std::vector<std::int64_t> &v, const char *help) {
        sc->add_option(flag, v, help)->delimiter(',')->allow_extra_args(false);
    };
    auto add_policy = [&](CLI::App *sc) {
        sc->add_option("--r2-samples", o.r2_samples, "R_2 y samples when not exhaustive");
        sc->add_option("--r2-exhaustive-max", o.r2_exhaustive_max, "exhaustive R_2 up to this many y");
        sc->add_option("--max-ext-degree", o.max_ext_degree, "R_0 searches F_{p^k} for k up to this");
        sc->add_option("--seed", o.seed, "sampling seed");
        sc->add_flag("--no-r1", o.no_r1, "skip R_1");
        sc->add_flag("--no-r2", o.no_r2, "skip R_2");
    };
    const std::vector<std::string> weights{"none", "smooth", "hat", "indicator", "zero"};

    auto *count = app.add_subcommand("count", "weighted and congruence lattice point counts");
    add_poly(count);
    add_n(count);
    count->add_option("--B", o.B, "box size")->required()->check(CLI::NonNegativeNumber);
    count->add_option("--mod", o.mod, "modulus m (default 1)");
    count->add_option("--weight", o.weight, "none|smooth|hat|indicator|zero")->check(CLI::IsMember(weights));
    bind(count, "count", run_count);

    auto *geom = app.add_subcommand("geom", "finite-field geometry");
    geom->require_subcommand(1);
    auto *sing = geom->add_subcommand("sing", "rational and singular points of a projective variety");
    add_form(sing);
    add_n(sing);
    sing->add_option("--field", o.field_text, "field p or p^k")->required();
    sing->add_option("--codim", o.codim, "expected codimension (default: number of forms)");
    bind(sing, "geom sing", run_geom_sing);
    auto *rcheck = geom->add_subcommand("rcheck", "R_0, R_1, R_2 admissibility of a prime");
    add_form(rcheck);
    add_n(rcheck);
    rcheck->add_option("--p", o.p, "prime")->required();
    add_policy(rcheck);
    bind(rcheck, "geom rcheck", run_geom_rcheck);
    auto *sigma = geom->add_subcommand("sigma", "singular-locus dimensions for one y (and z)");
    add_form(sigma);
    add_n(sigma);
    sigma->add_option("--field", o.field_text, "field p or p^k")->required();
    add_vec(sigma, "--y", o.y, "y, comma separated");
    add_vec(sigma, "--z", o.z, "z, comma separated");
    bind(sigma, "geom sigma", run_geom_sigma);
    auto *tset = geom->add_subcommand("tset", "the set T_s of y with sigma_y >= s");
    add_form(tset);
    add_n(tset);
    tset->add_option("--field", o.field_text, "field p or p^k")->required();
    tset->add_option("--s", o.s, "threshold s")->required();
    bind(tset, "geom tset", run_geom_tset);

    auto *pipe = app.add_subcommand("pipeline", "the differencing quantity ledger with identity checks");
    add_poly(pipe);
    add_n(pipe);
    pipe->add_option("--B", o.B, "box size")->required()->check(CLI::PositiveNumber);
    pipe->add_option("--pi", o.pi, "first differencing prime")->required();
    pipe->add_option("--p", o.p, "second differencing prime")->required();
    pipe->add_option("--q", o.q, "completion prime")->required();
    pipe->add_option("--weight", o.weight, "hat|smooth|indicator|zero (default hat)")->check(CLI::IsMember(weights));
    pipe->add_option("--max-pair-table", o.max_pair_table, "keep the full Delta(y,z) table up to this many entries");
    bind(pipe, "pipeline", run_pipeline);

    auto *expo = app.add_subcommand("exponents", "exact exponent bookkeeping");
    expo->add_option("--n", o.n, "number of variables")->required()->check(CLI::Range(5, 100000));
    expo->add_option("--C", o.C, "the parameter C of the pair bound (default n-1)");
    expo->add_option("--s", o.s, "singular-locus dimension s (default -1)");
    bind(expo, "exponents", run_exponents);

    auto *primes = app.add_subcommand("primes", "choose admissible primes pi, p, q for a box size");
    primes->add_option("--B", o.B_big, "box size")->required();
    add_n(primes);
    add_form(primes);
    primes->add_option("--c", o.c, "interval constant as a rational (default 1)");
    add_policy(primes);
    bind(primes, "primes", run_primes);

    auto *pois = app.add_subcommand("poisson", "Poisson summation error probe for the smooth weight");
    pois->add_option("--n", o.n, "dimension (1 or 2)")->required();
    pois->add_option("--B", o.Bf, "scale B")->required();
    pois->add_option("--a", o.a, "step a")->required();
    pois->add_option("--k", o.k, "derivative order k")->required();
    pois->add_option("--grid-step", o.grid_step, "derivative sampling step (<= 1/256)");
    bind(pois, "poisson", run_poisson);

    auto *poly = app.add_subcommand("poly", "polynomial operations");
    poly->require_subcommand(1);
    for (const char *op : {"diff", "eval", "lead", "dirform", "hessian"}) {
        auto *sc = poly->add_subcommand(op, std::string("poly ") + op);
        add_poly(sc);
        add_n(sc);
        add_vec(sc, "--y", o.y, "y, comma separated");
        add_vec(sc, "--z", o.z, "z, comma separated");
        add_vec(sc, "--x", o.x, "x, comma separated");
        const std::string name = op;
        bind(sc, "poly " + name, [name](const options &oo, budget &bb) { return run_poly(name, oo, bb); });
    }

    auto *probe = app.add_subcommand("probe", "empirical probes of the counting estimates");
    probe->require_subcommand(1);
    auto *triv = probe->add_subcommand("trivial-bound", "N(X, B) / B^dim for an affine variety over F_q");
    add_form(triv);
    add_n(triv);
    triv->add_option("--field", o.field_text, "prime field")->required();
    triv->add_option("--B", o.B_grid, "box sizes, comma separated")->delimiter(',');
    bind(triv, "probe trivial-bound", run_trivial_bound);
    auto *hd = probe->add_subcommand("hooley-deligne", "point count deviation for a complete intersection");
    add_form(hd);
    add_n(hd);
    hd->add_option("--field", o.field_text, "field p or p^k")->required();
    bind(hd, "probe hooley-deligne", run_hooley_deligne);
    auto *dev = probe->add_subcommand("deviation", "N_W(f, B, pq) against its expected value");
    add_poly(dev);
    add_n(dev);
    dev->add_option("--B", o.B, "box size")->required()->check(CLI::PositiveNumber);
    dev->add_option("--p", o.p, "prime p")->required();
    dev->add_option("--q", o.q, "prime q")->required();
    dev->add_option("--weight", o.weight, "smooth|hat|indicator (default smooth)")->check(CLI::IsMember(weights));
    bind(dev, "probe deviation", run_deviation);
    auto *four = probe->add_subcommand("fourier", "|phi_hat(xi)| |xi|^k for the smooth weight");
    four->add_option("--k", o.k, "decay order")->required();
    four->add_option("--xi", o.xi, "frequencies >= 1, comma separated (default 1..64)")->delimiter(',');
    bind(four, "probe fourier", run_fourier);

    auto *replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay->add_option("manifest", o.replay, "manifest path")->required();
    replay->callback([&] { chosen = "replay"; });

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp &e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::CallForAllHelp &e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    if (chosen == "replay") {
        try {
            const json m = read_file(o.replay);
            const auto argv = m.at("argv").get<std::vector<std::string>>();
            return dispatch(argv, out, err);
        } catch (const json::exception &e) {
            err << "error: manifest has no usable argv: " << e.what() << "\n";
            return exit_refused;
        } catch (const precondition_error &e) {
            err << "error: " << e.what() << "\n";
            return exit_refused;
        }
    }

    if (chosen == "pipeline") {
        summarize = summarize_pipeline;
    }
    set_workers(o.workers ? o.workers : std::max(1u, std::thread::hardware_concurrency()));
    budget b(o.budget_limit);

    // Echo only what the user could have set; the echo must not depend on
    // the worker count so that outputs stay byte-identical across runs.
    json params = json::array();
    {
        std::vector<std::string> echo;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--workers" || args[i] == "--emit" || args[i] == "--manifest") {
                ++i;
                continue;
            }
            if (args[i].rfind("--workers=", 0) == 0 || args[i].rfind("--emit=", 0) == 0 || args[i].rfind("--manifest=", 0) == 0) {
                continue;
            }
            echo.push_back(args[i]);
        }
        params = echo;
    }

    json doc;
    doc["schema_version"] = schema_version;
    doc["subcommand"] = chosen;
    doc["args"] = params;
    const auto t0 = std::chrono::steady_clock::now();
    int code = exit_ok;
    try {
        doc["result"] = run(o, b);
    } catch (const budget_exceeded &e) {
        doc["error"] = json{{"kind", "budget_exceeded"}, {"message", e.what()}};
        code = exit_refused;
    } catch (const refusal_error &e) {
        doc["error"] = json{{"kind", "refused"}, {"message", e.what()}};
        code = exit_refused;
    } catch (const precondition_error &e) {
        doc["error"] = json{{"kind", "precondition"}, {"message", e.what()}};
        code = exit_refused;
    } catch (const std::exception &e) {
        doc["error"] = json{{"kind", "internal"}, {"message", e.what()}};
        code = exit_internal;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    doc["run"] = json{{"versions", versions_json()}, {"seed", o.seed}, {"budget_limit", b.limit()}, {"points_enumerated", b.used()}};

    try {
        if (!o.emit.empty()) {
            write_file(o.emit, doc);
        }
        if (!o.manifest.empty()) {
            json m;
            m["schema_version"] = schema_version;
            m["subcommand"] = chosen;
            std::vector<std::string> argv;
            for (std::size_t i = 0; i < args.size(); ++i) {
                if (args[i] == "--manifest" || args[i] == "--emit") {
                    ++i;
                    continue;
                }
                if (args[i].rfind("--manifest=", 0) == 0 || args[i].rfind("--emit=", 0) == 0) {
                    continue;
                }
                argv.push_back(args[i]);
            }
            m["argv"] = argv;
            m["versions"] = versions_json();
            m["seed"] = o.seed;
            m["workers"] = workers();
            m["budget_limit"] = b.limit();
            m["points_enumerated"] = b.used();
            m["exit_code"] = code;
            m["wall_time_seconds"] = wall;
            write_file(o.manifest, m);
        }
    } catch (const precondition_error &e) {
        err << "error: " << e.what() << "\n";
        return exit_refused;
    }

    const json shown = (summarize && doc.contains("result")) ? [&] {
        json s = doc;
        s["result"] = summarize(doc["result"]);
        return s;
    }()
                                                              : doc;
    out << shown.dump(2) << "\n";
    if (code != exit_ok) {
        err << "error: " << doc["error"]["message"].get<std::string>() << "\n";
    }
    return code;
}

} // namespace vdc::cli

#endif
