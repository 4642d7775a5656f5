#pragma once

// Command-line front end. `run` is callable in-process; tools/main.cpp wraps it.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmax/budget.hpp"
#include "hmax/core.hpp"
#include "hmax/criticality.hpp"
#include "hmax/errors.hpp"
#include "hmax/exact_engine.hpp"
#include "hmax/gumbel_sums.hpp"
#include "hmax/helix.hpp"
#include "hmax/mc_sim.hpp"

namespace hmax::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kUnwritable = 3, kBudget = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnwritablePath : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{
        "evolve", "cyclic", "limit-point", "fixed-point", "drift", "critical",
        "aidekon", "gumbel", "verify-bound", "simulate", "gw", "joint"};
    return names;
}

inline const std::vector<std::string>& option_keys() {
    static const std::vector<std::string> keys{
        "n", "p", "a", "levels", "k-max", "replicas", "seed", "interval", "out", "format",
        "config", "count", "threads", "x-max", "children", "support", "probs"};
    return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

[[noreturn]] inline void bad(const std::string& key, const std::string& value, const std::string& why) {
    throw UsageError("invalid value for key '" + key + "': '" + value + "' " + why);
}

inline double parse_real(const std::string& key, const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) bad(key, s, "is not a finite number");
    return v;
}

inline std::int64_t parse_int(const std::string& key, const std::string& s) {
    std::int64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) bad(key, s, "is not an integer");
    return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) bad(key, s, "is not an unsigned 64-bit integer");
    return v;
}

inline std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::int64_t int_at_least(const std::string& key, const std::string& s, std::int64_t lo) {
    const std::int64_t v = parse_int(key, s);
    if (v < lo) bad(key, s, "must be >= " + std::to_string(lo));
    return v;
}

}  // namespace detail

/// Key-independent syntax and range rules; throws UsageError naming the key.
inline void validate_value(const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "n") {
        int_at_least(key, value, 0);
    } else if (key == "k-max" || key == "replicas" || key == "count" || key == "threads" ||
               key == "x-max") {
        int_at_least(key, value, 1);
    } else if (key == "children") {
        int_at_least(key, value, 2);
    } else if (key == "seed") {
        parse_uint(key, value);
    } else if (key == "p") {
        const double p = parse_real(key, value);
        if (!(p >= 0.0 && p <= 1.0)) bad(key, value, "is outside [0,1]");
    } else if (key == "a") {
        const double a = parse_real(key, value);
        if (!(a > 0.0 && a < 1.0)) bad(key, value, "is outside (0,1)");
    } else if (key == "levels") {
        const auto parts = split(value, ',');
        if (parts.empty()) bad(key, value, "is empty");
        for (const auto& part : parts) int_at_least(key, part, 1);
    } else if (key == "interval") {
        const auto parts = split(value, ',');
        if (parts.size() != 2) bad(key, value, "must be 'lo,hi'");
        if (parse_real(key, parts[0]) > parse_real(key, parts[1])) bad(key, value, "has lo > hi");
    } else if (key == "support" || key == "probs") {
        const auto parts = split(value, ',');
        if (parts.empty()) bad(key, value, "is empty");
        for (const auto& part : parts) parse_real(key, part);
    } else if (key == "format") {
        if (value != "csv" && value != "json") bad(key, value, "must be csv or json");
    } else if (key == "out" || key == "config") {
        if (value.empty()) bad(key, value, "is empty");
    } else {
        throw UsageError("unknown key '" + key + "'");
    }
}

struct ExperimentConfig {
    std::string command;                        // may be empty
    std::map<std::string, std::string> values;  // key -> raw value
};

/// Reads `key = value` lines; '#' starts a comment; `command` names the subcommand.
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = path + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw UsageError(where + "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "command") {
            if (std::find(subcommands().begin(), subcommands().end(), value) == subcommands().end())
                throw UsageError(where + "unknown command '" + value + "'");
            cfg.command = value;
            continue;
        }
        if (key == "config") throw UsageError(where + "key 'config' cannot be nested");
        try {
            validate_value(key, value);
        } catch (const UsageError& e) {
            throw UsageError(where + e.what());
        }
        if (!cfg.values.emplace(key, value).second)
            throw UsageError(where + "duplicate key '" + key + "'");
    }
    return cfg;
}

/// Typed access to the effective parameters of one invocation.
class Params {
public:
    Params(std::string command, std::map<std::string, std::string> given)
        : command_(std::move(command)), given_(std::move(given)) {}

    const std::string& command() const { return command_; }
    bool has(const std::string& key) const { return given_.count(key) != 0; }

    std::int64_t integer(const std::string& key, std::optional<std::int64_t> def, std::int64_t lo) {
        const auto raw = fetch(key, def ? std::optional<std::string>(std::to_string(*def)) : std::nullopt);
        const auto v = detail::int_at_least(key, raw, lo);
        effective_[key] = std::to_string(v);
        return v;
    }

    std::uint64_t seed(std::uint64_t def) {
        const auto raw = fetch("seed", std::to_string(def));
        const auto v = detail::parse_uint("seed", raw);
        effective_["seed"] = std::to_string(v);
        return v;
    }

    double real(const std::string& key, std::optional<double> def) {
        const auto raw = fetch(key, def ? std::optional<std::string>(detail::shortest(*def)) : std::nullopt);
        const double v = detail::parse_real(key, raw);
        effective_[key] = detail::shortest(v);
        return v;
    }

    std::vector<double> reals(const std::string& key) {
        const auto raw = fetch(key, std::nullopt);
        std::vector<double> out;
        std::string echo;
        for (const auto& part : detail::split(raw, ',')) {
            out.push_back(detail::parse_real(key, part));
            echo += (echo.empty() ? "" : ",") + detail::shortest(out.back());
        }
        effective_[key] = echo;
        return out;
    }

    std::vector<std::int64_t> integers(const std::string& key, const std::string& def) {
        const auto raw = fetch(key, def);
        std::vector<std::int64_t> out;
        std::string echo;
        for (const auto& part : detail::split(raw, ',')) {
            out.push_back(detail::int_at_least(key, part, 1));
            echo += (echo.empty() ? "" : ",") + std::to_string(out.back());
        }
        effective_[key] = echo;
        return out;
    }

    std::pair<double, double> interval(const std::string& def) {
        const auto parts = detail::split(fetch("interval", def), ',');
        const double lo = detail::parse_real("interval", parts.at(0));
        const double hi = detail::parse_real("interval", parts.at(1));
        effective_["interval"] = detail::shortest(lo) + "," + detail::shortest(hi);
        return {lo, hi};
    }

    /// Execution knob: consumed but not echoed, so artifacts do not depend on it.
    int threads() {
        used_.insert("threads");
        if (!has("threads")) return mc::default_threads();
        return static_cast<int>(detail::int_at_least("threads", given_.at("threads"), 1));
    }

    /// Rejects keys the command never asked for. Call before computing.
    void seal() const {
        for (const auto& [key, value] : given_) {
            if (key == "out" || key == "format" || key == "config") continue;
            if (!used_.count(key))
                throw UsageError("key '" + key + "' is not used by '" + command_ + "'");
        }
    }

    const std::map<std::string, std::string>& effective() const { return effective_; }

private:
    std::string fetch(const std::string& key, std::optional<std::string> def) {
        used_.insert(key);
        auto it = given_.find(key);
        if (it != given_.end()) return it->second;
        if (!def) throw UsageError("'" + command_ + "' requires key '" + key + "'");
        return *def;
    }

    std::string command_;
    std::map<std::string, std::string> given_;
    std::map<std::string, std::string> effective_;
    std::set<std::string> used_;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

struct Result {
    std::variant<Table, json> payload;
    json extra = json::object();       // merged into the metadata block
    bool sidecar_meta = false;         // also write <out>.meta.json
};

namespace detail {

inline std::string format_cell(const json& c) {
    if (c.is_null()) return "nan";
    if (c.is_number_float()) {
        const double v = c.get<double>();
        if (std::isnan(v)) return "nan";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    if (c.is_string()) return c.get<std::string>();
    return c.dump();
}

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json metadata(const Params& params, const json& extra) {
    json meta;
    meta["tool"] = "hmax";
    meta["version"] = kVersion;
    meta["command"] = params.command();
    json ps = json::object();
    for (const auto& [k, v] : params.effective()) ps[k] = v;
    meta["parameters"] = ps;
    auto seed = params.effective().find("seed");
    meta["seed"] = seed == params.effective().end() ? json("none") : json(seed->second);
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    return meta;
}

inline std::string render_csv(const json& meta, const Result& res) {
    std::ostringstream os;
    os << "# tool: hmax " << kVersion << "\n";
    os << "# command: " << meta["command"].get<std::string>() << "\n";
    for (auto it = meta["parameters"].begin(); it != meta["parameters"].end(); ++it)
        os << "# " << it.key() << "=" << it.value().get<std::string>() << "\n";
    os << "# seed: " << meta["seed"].get<std::string>() << "\n";
    for (auto it = res.extra.begin(); it != res.extra.end(); ++it)
        os << "# " << it.key() << ": " << (it.value().is_string() ? it.value().get<std::string>() : it.value().dump()) << "\n";
    if (const auto* table = std::get_if<Table>(&res.payload)) {
        for (std::size_t i = 0; i < table->columns.size(); ++i) os << (i ? "," : "") << table->columns[i];
        os << "\n";
        for (const auto& row : table->rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
            os << "\n";
        }
    } else {
        os << "key,value\n";
        const json& report = std::get<json>(res.payload);
        for (auto it = report.begin(); it != report.end(); ++it) {
            if (it.value().is_structured()) {
                os << it.key() << ",\"" << it.value().dump() << "\"\n";
            } else {
                os << it.key() << "," << format_cell(it.value()) << "\n";
            }
        }
    }
    return os.str();
}

inline std::string render_json(const json& meta, const Result& res) {
    json doc;
    doc["metadata"] = meta;
    if (const auto* table = std::get_if<Table>(&res.payload)) {
        json rows = json::array();
        for (const auto& row : table->rows) {
            json obj;
            for (std::size_t i = 0; i < row.size(); ++i) obj[table->columns[i]] = row[i];
            rows.push_back(obj);
        }
        doc["rows"] = rows;
    } else {
        doc["report"] = std::get<json>(res.payload);
    }
    return doc.dump(2) + "\n";
}

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UnwritablePath("cannot open '" + path + "' for writing");
    out << body;
    out.flush();
    if (!out) throw UnwritablePath("failed writing '" + path + "'");
}

inline LatticePmf step_law(Params& params) {
    if (params.has("support") || params.has("probs")) {
        const auto support = params.reals("support");
        const auto probs = params.reals("probs");
        if (support.size() != probs.size())
            throw UsageError("keys 'support' and 'probs' must have equal length");
        std::vector<std::int64_t> ints;
        for (double s : support) {
            if (s != std::floor(s)) throw UsageError("key 'support' must list integers for a lattice step law");
            ints.push_back(static_cast<std::int64_t>(s));
        }
        return LatticePmf(std::move(ints), probs);
    }
    return LatticePmf::bernoulli01(params.real("p", 0.3));
}

inline crit::ProgenySpec progeny(Params& params) {
    const int m = static_cast<int>(params.integer("children", 2, 2));
    if (params.has("support") || params.has("probs")) {
        const auto support = params.reals("support");
        const auto probs = params.reals("probs");
        return crit::ProgenySpec(m, support, probs);
    }
    return crit::ProgenySpec::bernoulli_pm1(params.real("p", 0.3), m);
}

inline json array_of(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

}  // namespace detail

namespace commands {

using detail::number;

inline Result evolve(Params& params) {
    const auto n = params.integer("n", std::nullopt, 0);
    const double p = params.real("p", 0.5);
    params.seal();
    OpBudget budget = OpBudget::from_env();
    const TailFunction f = exact::evolve(n, p, &budget);
    Table t{{"x", "F"}, {}};
    for (std::int64_t x = 1; x <= f.hi(); ++x) t.rows.push_back({json(x), number(f(x))});
    Result r{t};
    r.extra["expected_max"] = number(exact::expected_max(f));
    r.extra["median"] = exact::median(f);
    return r;
}

inline Result cyclic(Params& params) {
    const auto levels = params.integers("levels", "100,1000,10000");
    params.seal();
    OpBudget budget = OpBudget::from_env();
    Table t{{"n", "k_n", "d_n"}, {}};
    for (const auto& pt : helix::cyclic_distance_curve(levels, &budget))
        t.rows.push_back({json(pt.n), json(pt.k_n), number(pt.d_n)});
    return Result{t};
}

inline Result limit_point(Params& params) {
    const double a = params.real("a", std::nullopt);
    const auto count = params.integer("count", 3, 1);
    params.seal();
    OpBudget budget = OpBudget::from_env();
    const auto rep = helix::find_limit_point(a, static_cast<int>(count), &budget);
    json report;
    report["a"] = number(rep.a);
    report["a_used"] = number(rep.a_used);
    report["perturbed"] = rep.perturbed;
    report["z"] = rep.z;
    report["anchor_value"] = number(rep.element.v0);
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json row;
        row["k"] = e.k;
        row["n_k"] = e.n_k;
        row["value"] = number(e.value);
        row["distance"] = number(e.distance);
        row["tie"] = e.tie;
        entries.push_back(row);
    }
    report["entries"] = entries;
    report["nonincreasing_with_slack"] = rep.nonincreasing_with_slack;
    return Result{report};
}

inline Result fixed_point(Params& params) {
    const double p = params.real("p", 0.6);
    const auto x_max = params.integer("x-max", 50, 1);
    params.seal();
    const TailFunction f = exact::fixed_point_supercritical(p, x_max);
    Table t{{"x", "F", "residual"}, {}};
    for (std::int64_t x = 1; x <= x_max; ++x)
        t.rows.push_back({json(x), number(f(x)), number(exact::fixed_point_residual(f, p, x))});
    return Result{t};
}

inline Result drift(Params& params) {
    const double p = params.real("p", std::nullopt);
    const bool exact_check = params.has("n");
    const std::int64_t n = exact_check ? params.integer("n", std::nullopt, 1) : 0;
    params.seal();
    const auto sol = crit::solve_bdrift(p);
    json report;
    report["p"] = number(p);
    report["rho01"] = number(sol.rho01);
    report["speed_pm1"] = number(sol.speed_pm1);
    report["residual"] = number(sol.residual);
    report["interpretation"] = "E M_n grows like (2 rho01 - 1) n on the +-1 scale";
    if (exact_check) {
        OpBudget budget = OpBudget::from_env();
        exact::Evolver ev(p, &budget);
        const double m1 = exact::expected_max(ev.advance_to(n));
        const double m2 = exact::expected_max(ev.advance_to(2 * n));
        const double slope = (m2 - m1) / static_cast<double>(n);
        report["exact_slope"] = number(slope);
        report["relative_gap"] = number(std::abs(slope - sol.speed_pm1) / sol.speed_pm1);
    }
    return Result{report};
}

inline Result critical(Params& params) {
    const auto spec = detail::progeny(params);
    params.seal();
    json report;
    report["children"] = spec.children();
    report["support"] = detail::array_of(spec.displacement());
    report["probs"] = detail::array_of(spec.probs());
    report["r_infinity"] = number(crit::r_infinity(spec));
    const double gamma = crit::solve_critical_gamma(spec);
    const auto c = crit::cumulants(spec, gamma);
    const auto tilted = crit::reduce_to_critical(spec);
    const auto ids = crit::critical_identities(tilted);
    report["gamma"] = number(gamma);
    report["psi"] = number(c.psi);
    report["r_residual"] = number(c.r);
    report["tilted_support"] = detail::array_of(tilted.displacement());
    report["sum_exp"] = number(ids.sum_exp);
    report["sum_v_exp"] = number(ids.sum_v_exp);
    return Result{report};
}

inline Result aidekon(Params& params) {
    const auto spec = detail::progeny(params);
    params.seal();
    const auto rep = crit::check_aidekon(spec);
    json report;
    report["supercritical"] = rep.supercritical;
    report["critical_mean_shift"] = rep.critical_mean_shift;
    report["moments_finite"] = rep.moments_finite;
    report["lattice"] = rep.lattice;
    report["limit_law_applicable"] = rep.limit_law_applicable;
    report["mean_children"] = number(rep.mean_children);
    report["sum_exp"] = number(rep.sum_exp);
    report["sum_v_exp"] = number(rep.sum_v_exp);
    report["sum_v2_exp"] = number(rep.sum_v2_exp);
    report["x_log2_moment"] = number(rep.x_log2_moment);
    report["xtilde_log_moment"] = number(rep.xtilde_log_moment);
    return Result{report};
}

inline Result gumbel(Params& params) {
    const auto step = detail::step_law(params);
    const bool with_n = params.has("n");
    const std::int64_t n = with_n ? params.integer("n", std::nullopt, 1) : 0;
    params.seal();
    const auto scheme = gumbel::classify(step);
    json report;
    json support = json::array();
    for (auto s : step.support()) support.push_back(s);
    report["support"] = support;
    report["probs"] = detail::array_of(step.probs());
    report["omega"] = scheme.omega;
    report["condition"] = gumbel::to_string(scheme.condition);
    const auto params_g = gumbel::solve_gamma_star(scheme);
    report["gamma_star"] = number(params_g.gamma_star);
    report["rho_star"] = number(params_g.rho_star);
    report["sigma"] = number(params_g.sigma);
    report["residual"] = number(params_g.residual(step));
    const auto& sup = step.support();
    if (sup.size() == 2 && sup[0] == 0 && sup[1] == 1) {
        const auto kb = gumbel::bernoulli_kappa_beta(step.probs()[1]);
        report["kappa"] = number(kb.kappa);
        report["beta"] = number(kb.beta);
    }
    if (with_n) report["a_n"] = number(params_g.a_n(n));
    return Result{report};
}

inline Result verify_bound(Params& params) {
    const auto n = params.integer("n", 256, 1);
    const auto step = detail::step_law(params);
    const auto [lo, hi] = params.interval("-3,3");
    params.seal();
    const auto rows = gumbel::verify_bound(gumbel::classify(step), n, lo, hi);
    Table t{{"n", "z", "m", "exact_neglog", "asymptotic_neglog", "ratio", "bernoulli_neglog",
             "reconciliation", "underflow"},
            {}};
    for (const auto& r : rows)
        t.rows.push_back({json(r.n), number(r.z), json(r.m), number(r.exact_neglog),
                          number(r.asymptotic_neglog), number(r.ratio), number(r.bernoulli_neglog),
                          number(r.reconciliation), json(r.underflow)});
    Result res{t};
    res.extra["max_ratio_deviation"] = number(gumbel::max_ratio_deviation(rows));
    return res;
}

inline Result simulate(Params& params) {
    const auto n = params.integer("n", 20, 0);
    const double p = params.real("p", 0.5);
    const auto replicas = params.integer("replicas", 10000, 1);
    const auto seed = params.seed(1);
    const int threads = params.threads();
    params.seal();
    if (n > 126) throw DomainError("simulate: n must be <= 126");
    const auto res = mc::simulate_brw(static_cast<int>(n), p, seed,
                                      static_cast<std::uint64_t>(replicas), threads);
    Table t{{"level", "mean_M", "mean_K", "p_K_le_4", "mean_increment", "var_M"}, {}};
    for (const auto& s : res.levels)
        t.rows.push_back({json(s.level), number(s.mean_M), number(s.mean_K), number(s.p_K_le_4),
                          number(s.mean_increment), number(s.var_M)});
    Result r{t};
    r.extra["replicas"] = res.replicas;
    r.extra["exact_binomial_draws"] = res.sampler.exact_draws;
    r.extra["normal_approximation_draws"] = res.sampler.normal_draws;
    r.extra["conservation_ok"] = res.conservation_ok;
    r.sidecar_meta = true;
    return r;
}

inline Result gw(Params& params) {
    const auto n = params.integer("n", 10, 0);
    const auto replicas = params.integer("replicas", 10000, 1);
    const auto seed = params.seed(1);
    const int threads = params.threads();
    params.seal();
    const auto res = mc::simulate_gw_restart(static_cast<int>(n), static_cast<std::uint64_t>(replicas),
                                             seed, threads);
    Table t{{"z", "count", "probability"}, {}};
    for (const auto& [z, c] : res.counts) t.rows.push_back({json(z), json(c), number(res.probability(z))});
    Result r{t};
    r.extra["replicas"] = res.replicas;
    r.extra["extinct_at_last_step"] = res.extinct_at_last_step;
    r.extra["normal_approximation_draws"] = res.sampler.normal_draws;
    r.sidecar_meta = true;
    return r;
}

inline Result joint(Params& params) {
    const auto n = params.integer("n", std::nullopt, 0);
    const double p = params.real("p", 0.5);
    const auto k_max = params.integer("k-max", 64, 1);
    params.seal();
    OpBudget budget = OpBudget::from_env();
    const auto rep = exact::joint_evolve(n, p, static_cast<int>(k_max), &budget);
    json report;
    report["n"] = n;
    report["p"] = number(p);
    report["k_max"] = k_max;
    report["e_4_pow_minus_k"] = number(rep.e_4_pow_minus_k);
    report["increment_mean"] = number(rep.increment_mean);
    report["e_q_pow_2k"] = number(rep.e_q_pow_2k);
    report["e_2_pow_minus_k"] = number(rep.e_2_pow_minus_k);
    report["increment_mean_2_pow"] = number(rep.increment_mean_2_pow);
    report["total_mass"] = number(rep.pmf.total());
    return Result{report};
}

}  // namespace commands

inline Result dispatch(Params& params) {
    const std::string& c = params.command();
    if (c == "evolve") return commands::evolve(params);
    if (c == "cyclic") return commands::cyclic(params);
    if (c == "limit-point") return commands::limit_point(params);
    if (c == "fixed-point") return commands::fixed_point(params);
    if (c == "drift") return commands::drift(params);
    if (c == "critical") return commands::critical(params);
    if (c == "aidekon") return commands::aidekon(params);
    if (c == "gumbel") return commands::gumbel(params);
    if (c == "verify-bound") return commands::verify_bound(params);
    if (c == "simulate") return commands::simulate(params);
    if (c == "gw") return commands::gw(params);
    if (c == "joint") return commands::joint(params);
    throw UsageError("unknown command '" + c + "'");
}

/// Runs one invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Maxima of branching random walks: exact recursions, helix limits, Monte Carlo", "hmax"};
    app.set_version_flag("--version", std::string("hmax ") + kVersion);
    app.require_subcommand(0, 1);
    std::map<std::string, std::string> storage;
    std::map<std::string, CLI::Option*> options;
    for (const auto& key : option_keys()) options[key] = app.add_option("--" + key, storage[key]);
    for (const auto& name : subcommands()) app.add_subcommand(name)->fallthrough();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << "hmax " << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "hmax: error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        std::map<std::string, std::string> given;
        std::string command;
        if (options["config"]->count() > 0) {
            const auto cfg = load_config(storage["config"]);
            given = cfg.values;
            command = cfg.command;
        }
        for (const auto& key : option_keys()) {
            if (key == "config" || options[key]->count() == 0) continue;
            validate_value(key, storage[key]);
            given[key] = storage[key];
        }
        for (const auto* sub : app.get_subcommands()) command = sub->get_name();
        if (command.empty())
            throw UsageError("no command given; expected one of evolve, cyclic, limit-point, fixed-point, "
                             "drift, critical, aidekon, gumbel, verify-bound, simulate, gw, joint");

        std::string format;
        if (auto it = given.find("format"); it != given.end()) format = it->second;
        std::string path;
        if (auto it = given.find("out"); it != given.end()) path = it->second;

        Params params(command, given);
        Result res = dispatch(params);
        if (format.empty()) format = std::holds_alternative<Table>(res.payload) ? "csv" : "json";
        const json meta = detail::metadata(params, res.extra);
        const std::string body =
            format == "csv" ? detail::render_csv(meta, res) : detail::render_json(meta, res);
        if (path.empty()) {
            out << body;
        } else {
            detail::write_file(path, body);
            if (res.sidecar_meta) detail::write_file(path + ".meta.json", meta.dump(2) + "\n");
        }
        return kOk;
    } catch (const UsageError& e) {
        err << "hmax: error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "hmax: error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::domain_error& e) {
        err << "hmax: error: " << e.what() << "\n";
        return kUsage;
    } catch (const UnwritablePath& e) {
        err << "hmax: error: " << e.what() << "\n";
        return kUnwritable;
    } catch (const BudgetExceeded& e) {
        err << "hmax: error: " << e.what() << "\n";
        return kBudget;
    } catch (const std::exception& e) {
        err << "hmax: error: " << e.what() << "\n";
        return kFailure;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace hmax::cli
