#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regflow/baselines.hpp"
#include "regflow/damping.hpp"
#include "regflow/integrators.hpp"
#include "regflow/linalg.hpp"
#include "regflow/problems.hpp"
#include "regflow/report_io.hpp"
#include "regflow/stopping.hpp"

namespace regflow {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace detail

inline double parse_real(const std::string& s) {
    double v{};
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw std::invalid_argument("not a real number: '" + s + "'");
    return v;
}

inline std::uint64_t parse_uint(const std::string& s) {
    std::uint64_t v{};
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw std::invalid_argument("not a non-negative integer: '" + s + "'");
    return v;
}

/// Parsed form of a problem spec string: `conv:n=100,gamma=0.05,C=20` or
/// `hilbert:n=100`. gamma and C are optional for conv and default to the
/// benchmark values.
struct ProblemSpec {
    std::string family;
    std::size_t n = 0;
    double gamma = 0.05;
    double c = 20.0;
};

inline ProblemSpec parse_problem_spec(const std::string& s) {
    const auto colon = s.find(':');
    ProblemSpec ps;
    ps.family = s.substr(0, colon);
    if (ps.family != "conv" && ps.family != "hilbert")
        throw std::invalid_argument("unknown problem family: '" + ps.family + "'");
    bool have_n = false;
    if (colon != std::string::npos) {
        for (const auto& kv : detail::split(s.substr(colon + 1), ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("problem spec expects key=value: '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            const std::string val = kv.substr(eq + 1);
            if (key == "n") {
                ps.n = static_cast<std::size_t>(parse_uint(val));
                have_n = true;
            } else if (key == "gamma" && ps.family == "conv") {
                ps.gamma = parse_real(val);
            } else if (key == "C" && ps.family == "conv") {
                ps.c = parse_real(val);
            } else {
                throw std::invalid_argument("unknown problem key '" + key + "' for family '" +
                                            ps.family + "'");
            }
        }
    }
    if (!have_n) throw std::invalid_argument("problem spec requires n=<count>: '" + s + "'");
    return ps;
}

inline std::string to_string(const ProblemSpec& ps) {
    if (ps.family == "conv")
        return "conv:n=" + std::to_string(ps.n) + ",gamma=" + format_double(ps.gamma) +
               ",C=" + format_double(ps.c);
    return "hilbert:n=" + std::to_string(ps.n);
}

inline TestProblem build_problem(const ProblemSpec& ps) {
    if (ps.family == "conv") return gaussian_convolution_problem(ps.n, ps.gamma, ps.c);
    return hilbert_problem(ps.n);
}

inline std::string damping_spec_string(const DampingSchedule& d) {
    switch (d.kind) {
        case DampingSchedule::Kind::constant: return "const:" + format_double(d.eta);
        case DampingSchedule::Kind::dynamic_over_t: return "dyn:" + format_double(d.s);
        case DampingSchedule::Kind::inverse_sqrt: return "invsqrt";
    }
    return "";
}

inline DampingSchedule parse_damping(const std::string& s) {
    if (s == "invsqrt") return DampingSchedule::inverse_sqrt();
    if (s.rfind("const:", 0) == 0) return DampingSchedule::constant(parse_real(s.substr(6)));
    if (s.rfind("dyn:", 0) == 0) return DampingSchedule::dynamic(parse_real(s.substr(4)));
    throw std::invalid_argument("unknown damping spec: '" + s + "'");
}

/// Parsed form of a method spec string:
///   <id> [dt=<real>] [damping=<spec>] [tau=<real>]
/// where <id> is one of se, sv, msv, rk4, landweber, cg, nu:<real>,
/// nesterov:alpha=<real>,omega=<real>.
struct MethodSpec {
    std::string label;
    std::string kind;
    std::optional<double> dt;
    std::optional<DampingSchedule> damping;
    std::optional<double> tau;
    double nu = 0.0;
    NesterovConfig nesterov;
};

inline MethodSpec parse_method(const std::string& spec) {
    const auto tokens = detail::split_ws(spec);
    if (tokens.empty()) throw std::invalid_argument("empty method spec");

    MethodSpec m;
    m.label = tokens[0];
    const auto colon = tokens[0].find(':');
    m.kind = tokens[0].substr(0, colon);

    if (m.kind == "nu") {
        if (colon == std::string::npos)
            throw std::invalid_argument("nu method requires nu:<real>");
        m.nu = parse_real(tokens[0].substr(colon + 1));
    } else if (m.kind == "nesterov") {
        if (colon == std::string::npos)
            throw std::invalid_argument("nesterov requires nesterov:alpha=<real>,omega=<real>");
        bool have_alpha = false, have_omega = false;
        for (const auto& kv : detail::split(tokens[0].substr(colon + 1), ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("nesterov expects key=value: '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            const double val = parse_real(kv.substr(eq + 1));
            if (key == "alpha") {
                m.nesterov.alpha = val;
                have_alpha = true;
            } else if (key == "omega") {
                m.nesterov.omega = val;
                have_omega = true;
            } else {
                throw std::invalid_argument("unknown nesterov key: '" + key + "'");
            }
        }
        if (!have_alpha || !have_omega)
            throw std::invalid_argument("nesterov requires both alpha= and omega=");
    } else if (m.kind != "se" && m.kind != "sv" && m.kind != "msv" && m.kind != "rk4" &&
               m.kind != "landweber" && m.kind != "cg") {
        throw std::invalid_argument("unknown method id: '" + tokens[0] + "'");
    } else if (colon != std::string::npos) {
        throw std::invalid_argument("method id '" + m.kind + "' takes no colon arguments");
    }

    const bool is_flow = m.kind == "se" || m.kind == "sv" || m.kind == "msv" || m.kind == "rk4";
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("method option expects key=value: '" + tokens[i] + "'");
        const std::string key = tokens[i].substr(0, eq);
        const std::string val = tokens[i].substr(eq + 1);
        if (key == "dt") {
            if (!is_flow && m.kind != "landweber")
                throw std::invalid_argument("dt= does not apply to method '" + m.kind + "'");
            m.dt = parse_real(val);
        } else if (key == "damping") {
            if (!is_flow)
                throw std::invalid_argument("damping= does not apply to method '" + m.kind + "'");
            m.damping = parse_damping(val);
        } else if (key == "tau") {
            m.tau = parse_real(val);
        } else {
            throw std::invalid_argument("unknown method option: '" + key + "'");
        }
    }
    return m;
}

/// Canonical one-line form of a parsed method spec: id token followed by
/// its options in fixed order. Distinguishes two entries that share a scheme
/// id but differ in step size or damping.
inline std::string canonical_method_string(const MethodSpec& m) {
    std::string s = m.label;
    if (m.dt) s += " dt=" + format_double(*m.dt);
    if (m.damping) s += " damping=" + damping_spec_string(*m.damping);
    if (m.tau) s += " tau=" + format_double(*m.tau);
    return s;
}

/// Everything needed to run one benchmark: a problem, a noise level, the
/// seeds, and the method list with per-method parameters.
struct ExperimentSpec {
    std::string problem;
    double delta_prime = 0.01;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> methods;
    double tau = 1.03;
    std::size_t n_max = 5000;
};

namespace detail {

inline void validate_spec(const ExperimentSpec& spec) {
    if (spec.methods.empty()) throw std::invalid_argument("experiment: no methods");
    if (spec.seeds.empty()) throw std::invalid_argument("experiment: no seeds");
    if (!(spec.delta_prime >= 0.0)) throw std::invalid_argument("experiment: delta_prime < 0");
    if (!(spec.tau > 0.0)) throw std::invalid_argument("experiment: tau must be > 0");
    if (spec.n_max < 1) throw std::invalid_argument("experiment: n_max must be >= 1");
}

/// Runs one (method, seed) cell. The stop rule's delta is the a-priori noise
/// level delta_prime * ||b_exact||, not the realized perturbation norm.
inline RunReport run_one(const TestProblem& p, const ProblemSpec& ps, const MethodSpec& m,
                         double delta_prime, std::uint64_t seed, double tau, std::size_t n_max,
                         std::optional<double>& sigma1_cache) {
    const NoisyInstance noisy = add_multiplicative_noise(p, delta_prime, seed);
    const StopRule rule(tau, noisy.noise_level(), n_max);

    auto sigma1 = [&]() {
        if (!sigma1_cache) sigma1_cache = spectral_norm(p.a);
        return *sigma1_cache;
    };

    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    if (m.kind == "se" || m.kind == "sv" || m.kind == "msv" || m.kind == "rk4") {
        if (!m.dt || !m.damping)
            throw std::invalid_argument("method '" + m.kind + "' requires dt= and damping=");
        rep = run_flow(parse_scheme(m.kind), p, noisy, *m.damping, *m.dt, rule);
    } else if (m.kind == "landweber") {
        if (!m.dt) throw std::invalid_argument("landweber requires dt=");
        rep = run_landweber(p, noisy, *m.dt, rule, sigma1());
    } else if (m.kind == "cg") {
        rep = run_cgls(p, noisy, rule);
    } else if (m.kind == "nu") {
        rep = run_nu(p, noisy, m.nu, rule, 1.0 / (sigma1() * sigma1()));
    } else {
        rep = run_nesterov(p, noisy, m.nesterov, rule);
    }
    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();

    rep.method = m.label;
    rep.params["method_spec"] = canonical_method_string(m);
    rep.params["problem"] = ps.family;
    rep.params["n"] = std::to_string(ps.n);
    rep.params["delta_prime"] = format_double(delta_prime);
    rep.params["seed"] = std::to_string(seed);
    rep.params["tau"] = format_double(tau);
    if (m.dt) rep.params["dt"] = format_double(*m.dt);
    if (m.damping) rep.params["damping"] = damping_spec_string(*m.damping);
    return rep;
}

inline std::vector<RunReport> run_methods(const ExperimentSpec& spec,
                                          const std::vector<MethodSpec>& methods,
                                          bool mark_failures_divergent) {
    const ProblemSpec ps = parse_problem_spec(spec.problem);
    const TestProblem p = build_problem(ps);
    std::optional<double> sigma1_cache;

    std::vector<RunReport> out;
    out.reserve(methods.size() * spec.seeds.size());
    for (const auto& m : methods) {
        const double tau = m.tau.value_or(spec.tau);
        for (const auto seed : spec.seeds) {
            if (!mark_failures_divergent) {
                out.push_back(
                    run_one(p, ps, m, spec.delta_prime, seed, tau, spec.n_max, sigma1_cache));
                continue;
            }
            try {
                out.push_back(
                    run_one(p, ps, m, spec.delta_prime, seed, tau, spec.n_max, sigma1_cache));
            } catch (const std::invalid_argument& err) {
                RunReport rep;
                rep.method = m.label;
                rep.params["method_spec"] = canonical_method_string(m);
                rep.stopped_by = StopReason::divergence;
                rep.l2err = std::numeric_limits<double>::quiet_NaN();
                rep.final_residual = std::numeric_limits<double>::quiet_NaN();
                rep.params["problem"] = ps.family;
                rep.params["n"] = std::to_string(ps.n);
                rep.params["delta_prime"] = format_double(spec.delta_prime);
                rep.params["seed"] = std::to_string(seed);
                rep.params["tau"] = format_double(tau);
                if (m.dt) rep.params["dt"] = format_double(*m.dt);
                if (m.damping) rep.params["damping"] = damping_spec_string(*m.damping);
                rep.params["error"] = err.what();
                out.push_back(std::move(rep));
            }
        }
    }
    return out;
}

}  // namespace detail

/// Runs every (method, seed) cell of the spec in spec order, then seed order.
/// Deterministic apart from the wall_ms timing field.
inline std::vector<RunReport> run_experiment(const ExperimentSpec& spec) {
    detail::validate_spec(spec);
    std::vector<MethodSpec> methods;
    methods.reserve(spec.methods.size());
    for (const auto& s : spec.methods) methods.push_back(parse_method(s));
    return detail::run_methods(spec, methods, false);
}

/// Flattens one run into a CSV row using the metadata stored in params.
inline BenchRecord to_record(const RunReport& rep) {
    BenchRecord r;
    r.method = rep.method;
    auto get = [&](const char* key) -> std::string {
        const auto it = rep.params.find(key);
        return it == rep.params.end() ? std::string() : it->second;
    };
    r.problem = get("problem");
    const std::string n = get("n");
    if (!n.empty()) r.n = static_cast<std::size_t>(parse_uint(n));
    const std::string dp = get("delta_prime");
    if (!dp.empty()) r.delta_prime = parse_real(dp);
    const std::string seed = get("seed");
    if (!seed.empty()) r.seed = parse_uint(seed);
    const std::string tau = get("tau");
    if (!tau.empty()) r.tau = parse_real(tau);
    const std::string dt = get("dt");
    if (!dt.empty()) r.dt = parse_real(dt);
    r.damping = get("damping");
    r.iterN = rep.iterN;
    r.l2err = rep.l2err;
    r.final_residual = rep.final_residual;
    r.stopped_by = to_string(rep.stopped_by);
    r.wall_ms = rep.wall_ms;
    return r;
}

/// Median with the even-count mean-of-middles convention; NaN when empty.
inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Per-method medians over seeds. Divergent runs are counted but excluded
/// from the medians (their iteration index marks detection, not a stop).
struct MethodSummary {
    std::string method;
    double median_iterN = 0.0;
    double median_l2err = 0.0;
    std::size_t runs = 0;
    std::size_t divergent = 0;
};

inline std::vector<MethodSummary> summarize(const std::vector<RunReport>& reports) {
    std::vector<MethodSummary> out;
    std::vector<std::vector<double>> iters, errs;
    auto index_of = [&](const std::string& method) {
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i].method == method) return i;
        out.push_back({method, 0.0, 0.0, 0, 0});
        iters.emplace_back();
        errs.emplace_back();
        return out.size() - 1;
    };
    for (const auto& rep : reports) {
        const auto spec_it = rep.params.find("method_spec");
        const std::size_t i =
            index_of(spec_it == rep.params.end() ? rep.method : spec_it->second);
        ++out[i].runs;
        if (rep.stopped_by == StopReason::divergence) {
            ++out[i].divergent;
            continue;
        }
        iters[i].push_back(static_cast<double>(rep.iterN));
        errs[i].push_back(rep.l2err);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].median_iterN = median(iters[i]);
        out[i].median_l2err = median(errs[i]);
    }
    return out;
}

/// One summary row of a parameter sweep.
struct SweepRow {
    double value = 0.0;
    std::string method;
    double median_iterN = 0.0;
    double median_l2err = 0.0;
    std::size_t runs = 0;
    std::size_t divergent = 0;
};

struct SweepResult {
    std::vector<RunReport> runs;
    std::vector<SweepRow> summary;
};

/// Sweeps one parameter (dt, tau, or n) over the given values, rerunning the
/// whole experiment per value. Cells whose configuration is rejected by a
/// solver are marked divergent instead of aborting the sweep.
inline SweepResult sweep(const ExperimentSpec& base, const std::string& param,
                         const std::vector<double>& values) {
    detail::validate_spec(base);
    if (values.empty()) throw std::invalid_argument("sweep: no values");
    if (param != "dt" && param != "tau" && param != "n")
        throw std::invalid_argument("sweep: param must be one of dt, tau, n");

    std::vector<MethodSpec> methods;
    for (const auto& s : base.methods) methods.push_back(parse_method(s));
    if (param == "dt") {
        for (const auto& m : methods)
            if (m.kind == "cg" || m.kind == "nu" || m.kind == "nesterov")
                throw std::invalid_argument("sweep dt: method '" + m.label +
                                            "' has no dt parameter");
    }

    SweepResult result;
    for (const double value : values) {
        ExperimentSpec spec = base;
        std::vector<MethodSpec> ms = methods;
        if (param == "dt") {
            for (auto& m : ms) m.dt = value;
        } else if (param == "tau") {
            spec.tau = value;
            for (auto& m : ms) m.tau.reset();
        } else {
            ProblemSpec ps = parse_problem_spec(base.problem);
            ps.n = static_cast<std::size_t>(value);
            if (static_cast<double>(ps.n) != value)
                throw std::invalid_argument("sweep n: values must be positive integers");
            spec.problem = to_string(ps);
        }

        std::vector<RunReport> reports = detail::run_methods(spec, ms, true);
        for (auto& rep : reports) {
            rep.params["sweep_param"] = param;
            rep.params["sweep_value"] = format_double(value);
        }
        const auto sums = summarize(reports);
        for (const auto& s : sums)
            result.summary.push_back(
                {value, s.method, s.median_iterN, s.median_l2err, s.runs, s.divergent});
        for (auto& rep : reports) result.runs.push_back(std::move(rep));
    }
    return result;
}

/// Condition numbers of one problem family over ascending sizes.
struct ConditionRow {
    std::size_t n = 0;
    double condition = 0.0;
    bool numerically_singular = false;
};

inline std::vector<ConditionRow> condition_scan(const std::string& family,
                                                const std::vector<std::size_t>& n_values) {
    if (n_values.empty()) throw std::invalid_argument("condition_scan: no sizes");
    for (std::size_t i = 1; i < n_values.size(); ++i)
        if (n_values[i] <= n_values[i - 1])
            throw std::invalid_argument("condition_scan: sizes must be ascending");

    std::vector<ConditionRow> rows;
    for (const auto n : n_values) {
        ProblemSpec ps;
        ps.family = family;
        ps.n = n;
        if (family != "conv" && family != "hilbert")
            throw std::invalid_argument("unknown problem family: '" + family + "'");
        const TestProblem p = build_problem(ps);
        const ConditionReport rep = condition_number(p.a);
        rows.push_back({n, rep.value, rep.numerically_singular});
    }
    return rows;
}

/// Benchmark preset on the convolution problem: the full method list with
/// the per-method step sizes and damping settings of the n=100 comparison.
inline ExperimentSpec table1_preset() {
    ExperimentSpec s;
    s.problem = "conv:n=100,gamma=0.05,C=20";
    s.delta_prime = 0.01;
    s.tau = 1.03;
    s.n_max = 5000;
    for (std::uint64_t i = 1; i <= 20; ++i) s.seeds.push_back(i);
    s.methods = {
        "landweber dt=0.3",
        "cg",
        "nu:0.5",
        "nu:0.7",
        "nu:1.0",
        "nu:1.5",
        "nu:2.0",
        "nesterov:alpha=3,omega=0.16",
        "se dt=0.7 damping=const:0.6",
        "sv dt=0.8 damping=const:0.8",
        "msv dt=0.4 damping=const:0.1",
        "rk4 dt=1.1 damping=const:0.1",
        "se dt=0.6 damping=dyn:1.5",
        "sv dt=0.8 damping=dyn:1.5",
        "msv dt=0.4 damping=dyn:1.5",
        "rk4 dt=1.1 damping=dyn:1.5",
    };
    return s;
}

/// Benchmark preset on the Hilbert-matrix problem at n=100.
inline ExperimentSpec table2_preset() {
    ExperimentSpec s;
    s.problem = "hilbert:n=100";
    s.delta_prime = 0.01;
    s.tau = 1.03;
    s.n_max = 5000;
    for (std::uint64_t i = 1; i <= 20; ++i) s.seeds.push_back(i);
    s.methods = {
        "landweber dt=0.3",
        "cg",
        "nu:0.5",
        "nu:0.7",
        "nu:1.0",
        "nu:1.5",
        "nu:2.0",
        "nesterov:alpha=3,omega=0.2",
        "se dt=0.8 damping=const:0.2",
        "sv dt=0.9 damping=const:0.2",
        "msv dt=0.5 damping=const:0.1",
        "rk4 dt=1.2 damping=const:0.1",
        "se dt=0.7 damping=dyn:1.5",
        "sv dt=0.9 damping=dyn:1.5",
        "msv dt=0.5 damping=dyn:1.5",
        "rk4 dt=1.1 damping=dyn:1.5",
    };
    return s;
}

/// Serializes a spec as flat key-value text: one `key = value` per line,
/// one `method = ...` line per method, seeds comma separated.
inline std::string dump_config(const ExperimentSpec& spec) {
    std::string out;
    out += "problem = " + spec.problem + "\n";
    out += "delta_prime = " + format_double(spec.delta_prime) + "\n";
    out += "tau = " + format_double(spec.tau) + "\n";
    out += "n_max = " + std::to_string(spec.n_max) + "\n";
    out += "seeds = ";
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(spec.seeds[i]);
    }
    out += "\n";
    for (const auto& m : spec.methods) out += "method = " + m + "\n";
    return out;
}

/// Parses the flat key-value config format produced by dump_config.
/// Blank lines and lines starting with '#' are ignored.
inline ExperimentSpec parse_config(const std::string& text) {
    ExperimentSpec spec;
    spec.seeds.clear();
    spec.methods.clear();
    bool have_problem = false;
    for (const auto& raw : detail::split(text, '\n')) {
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line expects key = value: '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key == "problem") {
            spec.problem = val;
            have_problem = true;
        } else if (key == "delta_prime") {
            spec.delta_prime = parse_real(val);
        } else if (key == "tau") {
            spec.tau = parse_real(val);
        } else if (key == "n_max") {
            spec.n_max = static_cast<std::size_t>(parse_uint(val));
        } else if (key == "seeds") {
            for (const auto& tok : detail::split(val, ','))
                spec.seeds.push_back(parse_uint(detail::trim(tok)));
        } else if (key == "method") {
            spec.methods.push_back(val);
        } else {
            throw std::invalid_argument("unknown config key: '" + key + "'");
        }
    }
    if (!have_problem) throw std::invalid_argument("config missing problem =");
    return spec;
}

}  // namespace regflow
