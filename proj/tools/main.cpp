// Benchmark CLI: single solves, parameter sweeps, preset tables, condition
// number scans, and closed-form oracle evaluations.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regflow/bench.hpp"
#include "regflow/oracle.hpp"
#include "regflow/regflow.hpp"

namespace {

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

std::string runs_csv(const std::vector<regflow::RunReport>& reports) {
    std::string text = regflow::csv_header();
    text += '\n';
    for (const auto& rep : reports) {
        text += regflow::csv_line(regflow::to_record(rep));
        text += '\n';
    }
    return text;
}

std::string summary_csv(const std::vector<regflow::MethodSummary>& rows) {
    std::string text = "method,median_iterN,median_l2err,runs,divergent\n";
    for (const auto& r : rows) {
        text += regflow::csv_field(r.method);
        text += ',';
        text += regflow::format_double(r.median_iterN);
        text += ',';
        text += regflow::format_double(r.median_l2err);
        text += ',';
        text += std::to_string(r.runs);
        text += ',';
        text += std::to_string(r.divergent);
        text += '\n';
    }
    return text;
}

std::string sweep_summary_csv(const std::vector<regflow::SweepRow>& rows) {
    std::string text = "value,method,median_iterN,median_l2err,runs,divergent\n";
    for (const auto& r : rows) {
        text += regflow::format_double(r.value);
        text += ',';
        text += regflow::csv_field(r.method);
        text += ',';
        text += regflow::format_double(r.median_iterN);
        text += ',';
        text += regflow::format_double(r.median_l2err);
        text += ',';
        text += std::to_string(r.runs);
        text += ',';
        text += std::to_string(r.divergent);
        text += '\n';
    }
    return text;
}

regflow::ExperimentSpec load_spec(const std::string& preset, const std::string& config_path) {
    if (!preset.empty() && !config_path.empty())
        throw std::runtime_error("give either --preset or --config, not both");
    if (!preset.empty()) {
        if (preset == "table1") return regflow::table1_preset();
        if (preset == "table2") return regflow::table2_preset();
        throw std::runtime_error("unknown preset: " + preset);
    }
    if (config_path.empty()) throw std::runtime_error("need --preset or --config");
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + config_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return regflow::parse_config(text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark harness for damped-flow regularization of ill-posed systems"};
    app.require_subcommand(1);

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "Run one method on one noisy instance");
    std::string sv_problem, sv_method, sv_damping, sv_out;
    double sv_noise = 0.01, sv_dt = 0.0, sv_tau = 1.03;
    std::uint64_t sv_seed = 1;
    std::size_t sv_max_iter = 5000;
    bool sv_trace = false;
    solve->add_option("--problem", sv_problem, "Problem spec, e.g. conv:n=100 or hilbert:n=100")
        ->required();
    solve->add_option("--noise", sv_noise, "Relative noise level delta'");
    solve->add_option("--seed", sv_seed, "Noise seed");
    solve->add_option("--method", sv_method, "Method spec, e.g. 'se dt=0.7 damping=const:0.6'")
        ->required();
    solve->add_option("--dt", sv_dt, "Step size (overrides the method spec)");
    solve->add_option("--damping", sv_damping, "Damping spec (overrides the method spec)");
    solve->add_option("--tau", sv_tau, "Discrepancy factor tau");
    solve->add_option("--max-iter", sv_max_iter, "Iteration cap");
    solve->add_option("--out", sv_out, "Output path for the JSON report (default stdout)");
    solve->add_flag("--trace", sv_trace, "Include per-iteration histories in the report");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep dt, tau, or n over a value list");
    std::string sw_preset, sw_config, sw_param, sw_out, sw_summary_out;
    std::vector<double> sw_values;
    sweep_cmd->add_option("--preset", sw_preset, "Built-in experiment preset: table1 or table2");
    sweep_cmd->add_option("--config", sw_config, "Experiment config file");
    sweep_cmd->add_option("--param", sw_param, "Swept parameter: dt, tau, or n")->required();
    sweep_cmd->add_option("--values", sw_values, "Swept values")->required()->delimiter(',');
    sweep_cmd->add_option("--out", sw_out, "Per-run CSV path (default stdout)");
    sweep_cmd->add_option("--summary-out", sw_summary_out, "Median summary CSV path");

    // ---- table ----
    auto* table = app.add_subcommand("table", "Run a full benchmark preset or config");
    std::string tb_preset, tb_config, tb_out, tb_summary_out, tb_dump;
    table->add_option("--preset", tb_preset, "Built-in experiment preset: table1 or table2");
    table->add_option("--config", tb_config, "Experiment config file");
    table->add_option("--out", tb_out, "Per-run CSV path (default stdout)");
    table->add_option("--summary-out", tb_summary_out, "Median summary CSV path");
    table->add_option("--dump-config", tb_dump,
                      "Write the experiment as flat key-value config and exit");

    // ---- cond ----
    auto* cond = app.add_subcommand("cond", "Condition numbers over problem sizes");
    std::string cd_family = "hilbert", cd_out;
    std::vector<std::size_t> cd_sizes;
    cond->add_option("--family", cd_family, "Problem family: conv or hilbert");
    cond->add_option("--n", cd_sizes, "Ascending sizes")->required()->delimiter(',');
    cond->add_option("--out", cd_out, "CSV path (default stdout)");

    // ---- oracle ----
    auto* oracle = app.add_subcommand("oracle", "Evaluate closed-form reference quantities");
    std::string or_kind;
    double or_eta = 3.0, or_s = 1.5, or_t = 1.0, or_lambda = 0.0, or_z = 1.0, or_x = 1.0;
    oracle
        ->add_option("--kind", or_kind,
                     "One of filter-const, filter-dyn, bessel, gamma")
        ->required();
    oracle->add_option("--eta", or_eta, "Constant damping strength");
    oracle->add_option("--s", or_s, "Bessel order / dynamic damping exponent");
    oracle->add_option("--t", or_t, "Evaluation time");
    oracle->add_option("--lambda", or_lambda, "Spectral value sigma^2");
    oracle->add_option("--z", or_z, "Bessel argument");
    oracle->add_option("--x", or_x, "Gamma argument");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            regflow::ExperimentSpec spec;
            spec.problem = sv_problem;
            spec.delta_prime = sv_noise;
            spec.seeds = {sv_seed};
            spec.tau = sv_tau;
            spec.n_max = sv_max_iter;
            std::string method = sv_method;
            if (solve->count("--dt") > 0) method += " dt=" + regflow::format_double(sv_dt);
            if (!sv_damping.empty()) method += " damping=" + sv_damping;
            spec.methods = {method};
            const auto reports = regflow::run_experiment(spec);
            write_text(sv_out, regflow::report_to_json(reports.at(0), sv_trace).dump(2) + "\n");
        } else if (*sweep_cmd) {
            const auto spec = load_spec(sw_preset, sw_config);
            const auto result = regflow::sweep(spec, sw_param, sw_values);
            write_text(sw_out, runs_csv(result.runs));
            if (!sw_summary_out.empty())
                write_text(sw_summary_out, sweep_summary_csv(result.summary));
        } else if (*table) {
            const auto spec = load_spec(tb_preset, tb_config);
            if (!tb_dump.empty()) {
                write_text(tb_dump, regflow::dump_config(spec));
                return 0;
            }
            const auto reports = regflow::run_experiment(spec);
            write_text(tb_out, runs_csv(reports));
            if (!tb_summary_out.empty())
                write_text(tb_summary_out, summary_csv(regflow::summarize(reports)));
        } else if (*cond) {
            const auto rows = regflow::condition_scan(cd_family, cd_sizes);
            std::string text = "n,condition,numerically_singular\n";
            for (const auto& r : rows) {
                text += std::to_string(r.n);
                text += ',';
                text += regflow::format_double(r.condition);
                text += ',';
                text += r.numerically_singular ? "true" : "false";
                text += '\n';
            }
            write_text(cd_out, text);
        } else if (*oracle) {
            nlohmann::json j;
            if (or_kind == "filter-const") {
                const auto fe = regflow::filter_const(or_eta, or_t, or_lambda);
                j = {{"kind", "filter-const"}, {"eta", or_eta},          {"t", fe.t},
                     {"lambda", fe.lambda},    {"g", fe.g_value},        {"phi", fe.phi_value}};
            } else if (or_kind == "filter-dyn") {
                j = {{"kind", "filter-dyn"},
                     {"s", or_s},
                     {"t", or_t},
                     {"lambda", or_lambda},
                     {"g2", regflow::filter_dynamic(or_s, or_t, or_lambda)}};
            } else if (or_kind == "bessel") {
                j = {{"kind", "bessel"}, {"s", or_s}, {"z", or_z},
                     {"value", regflow::bessel_j(or_s, or_z)}};
            } else if (or_kind == "gamma") {
                j = {{"kind", "gamma"}, {"x", or_x}, {"value", regflow::gamma_fn(or_x)}};
            } else {
                throw std::runtime_error("unknown oracle kind: " + or_kind);
            }
            std::cout << j.dump(2) << "\n";
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
