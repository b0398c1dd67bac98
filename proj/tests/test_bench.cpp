#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "regflow/bench.hpp"

using namespace regflow;
using Catch::Approx;
using Catch::Matchers::WithinRel;

namespace {

// Serialized row without the timing column, for determinism comparisons.
std::string stable_row(const RunReport& rep) {
    const std::string line = csv_line(to_record(rep));
    return line.substr(0, line.rfind(','));
}

ExperimentSpec small_spec() {
    ExperimentSpec s;
    s.problem = "conv:n=16";
    s.delta_prime = 0.01;
    s.seeds = {1, 2, 3};
    s.methods = {"landweber dt=0.3", "cg", "nu:1.0", "se dt=0.7 damping=const:0.6"};
    return s;
}

}  // namespace

TEST_CASE("format_double") {
    CHECK(format_double(0.3) == "0.3");
    CHECK(format_double(1.03) == "1.03");
    CHECK(format_double(5.0) == "5");
    CHECK(format_double(0.05) == "0.05");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    // Round trip through the shortest form is exact.
    CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(csv_field("") == "");
}

TEST_CASE("csv schema") {
    CHECK(std::string(csv_header()) ==
          "method,problem,n,delta_prime,seed,tau,dt,damping,iterN,l2err,final_residual,"
          "stopped_by,wall_ms");

    BenchRecord r;
    r.method = "cg";
    r.problem = "conv";
    r.n = 16;
    r.delta_prime = 0.01;
    r.seed = 3;
    r.tau = 1.03;
    r.iterN = 5;
    r.l2err = 0.25;
    r.final_residual = 0.125;
    r.stopped_by = "discrepancy";
    r.wall_ms = 1.5;
    // dt stays NaN and damping empty: both render as empty cells.
    CHECK(csv_line(r) == "cg,conv,16,0.01,3,1.03,,,5,0.25,0.125,discrepancy,1.5");

    r.method = "nesterov:alpha=3,omega=0.16";
    const std::string line = csv_line(r);
    CHECK(line.rfind("\"nesterov:alpha=3,omega=0.16\",conv,", 0) == 0);
}

TEST_CASE("json report serialization") {
    RunReport rep;
    rep.method = "se";
    rep.params["problem"] = "conv";
    rep.iterN = 2;
    rep.l2err = 0.5;
    rep.final_residual = 0.25;
    rep.stopped_by = StopReason::discrepancy;
    rep.residual_history = {1.0, 0.5, 0.25};
    rep.error_history = {1.0, 0.7, 0.5};
    rep.wall_ms = 3.25;

    const nlohmann::json j = report_to_json(rep);
    CHECK(j.at("method") == "se");
    CHECK(j.at("iterN") == 2);
    CHECK(j.at("l2err") == 0.5);
    CHECK(j.at("final_residual") == 0.25);
    CHECK(j.at("stopped_by") == "discrepancy");
    CHECK(j.at("wall_time") == 3.25);
    CHECK(j.at("params").at("problem") == "conv");
    CHECK_FALSE(j.contains("residual_history"));

    const nlohmann::json jt = report_to_json(rep, true);
    REQUIRE(jt.contains("residual_history"));
    CHECK(jt.at("residual_history").size() == 3);
    CHECK(jt.at("error_history").size() == 3);
}

TEST_CASE("median convention") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({7.0}) == 7.0);
    CHECK(std::isnan(median({})));
}

TEST_CASE("problem spec parsing") {
    const ProblemSpec ps = parse_problem_spec("conv:n=40,gamma=0.1,C=15");
    CHECK(ps.family == "conv");
    CHECK(ps.n == 40);
    CHECK(ps.gamma == 0.1);
    CHECK(ps.c == 15.0);

    const ProblemSpec defaults = parse_problem_spec("conv:n=25");
    CHECK(defaults.gamma == 0.05);
    CHECK(defaults.c == 20.0);

    const ProblemSpec hp = parse_problem_spec("hilbert:n=12");
    CHECK(hp.family == "hilbert");
    CHECK(hp.n == 12);

    // Canonical text form round trips.
    CHECK(to_string(parse_problem_spec("conv:n=40")) == "conv:n=40,gamma=0.05,C=20");
    CHECK(to_string(parse_problem_spec("hilbert:n=12")) == "hilbert:n=12");

    CHECK_THROWS_AS(parse_problem_spec("conv"), std::invalid_argument);          // no n
    CHECK_THROWS_AS(parse_problem_spec("laplace:n=10"), std::invalid_argument);  // family
    CHECK_THROWS_AS(parse_problem_spec("conv:n=10,sigma=1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_problem_spec("hilbert:n=10,gamma=0.1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_problem_spec("conv:n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_problem_spec("conv:n=ten"), std::invalid_argument);

    const TestProblem built = build_problem(parse_problem_spec("hilbert:n=6"));
    CHECK(built.name == "hilbert");
    CHECK(built.a.rows() == 6);
}

TEST_CASE("damping spec parsing") {
    const DampingSchedule c = parse_damping("const:2.5");
    CHECK(c.kind == DampingSchedule::Kind::constant);
    CHECK(c.eta == 2.5);

    const DampingSchedule d = parse_damping("dyn:1.5");
    CHECK(d.kind == DampingSchedule::Kind::dynamic_over_t);
    CHECK(d.s == 1.5);
    CHECK(d.t0 == 1.0);

    CHECK(parse_damping("invsqrt").kind == DampingSchedule::Kind::inverse_sqrt);

    CHECK(damping_spec_string(c) == "const:2.5");
    CHECK(damping_spec_string(d) == "dyn:1.5");
    CHECK(damping_spec_string(parse_damping("invsqrt")) == "invsqrt");

    CHECK_THROWS_AS(parse_damping("exp:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_damping("const:0"), std::invalid_argument);
}

TEST_CASE("method spec parsing") {
    SECTION("flow method with options") {
        const MethodSpec m = parse_method("se dt=0.7 damping=const:0.6");
        CHECK(m.kind == "se");
        CHECK(m.label == "se");
        REQUIRE(m.dt.has_value());
        CHECK(*m.dt == 0.7);
        REQUIRE(m.damping.has_value());
        CHECK(m.damping->eta == 0.6);
        CHECK_FALSE(m.tau.has_value());
    }

    SECTION("id token arguments") {
        CHECK(parse_method("nu:1.5").nu == 1.5);
        CHECK(parse_method("nu:1.5").label == "nu:1.5");

        const MethodSpec nest = parse_method("nesterov:alpha=3,omega=0.16");
        CHECK(nest.nesterov.alpha == 3.0);
        CHECK(nest.nesterov.omega == 0.16);

        CHECK(parse_method("cg").kind == "cg");
        CHECK(parse_method("landweber dt=0.3").dt == 0.3);
    }

    SECTION("per-method tau override") {
        const MethodSpec m = parse_method("cg tau=1.2");
        REQUIRE(m.tau.has_value());
        CHECK(*m.tau == 1.2);
    }

    SECTION("rejected forms") {
        CHECK_THROWS_AS(parse_method(""), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("sor"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("nu"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("se:0.5"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("cg dt=0.1"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("nu:1.0 dt=0.1"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("nu:1.0 damping=const:1"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("cg damping=const:1"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("se dt"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("se step=0.1"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("nesterov:alpha=3"), std::invalid_argument);
        CHECK_THROWS_AS(parse_method("nesterov:beta=1,omega=0.1"), std::invalid_argument);
    }

    SECTION("canonical form fixes the option order") {
        const MethodSpec m = parse_method("se damping=const:0.6 dt=0.7");
        CHECK(canonical_method_string(m) == "se dt=0.7 damping=const:0.6");
        CHECK(canonical_method_string(parse_method("nu:1.0")) == "nu:1.0");
        CHECK(canonical_method_string(parse_method("cg tau=1.2")) == "cg tau=1.2");
    }
}

TEST_CASE("config text round trip") {
    const ExperimentSpec t1 = table1_preset();
    const std::string text = dump_config(t1);
    const ExperimentSpec back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.problem == t1.problem);
    CHECK(back.seeds == t1.seeds);
    CHECK(back.methods == t1.methods);
    CHECK(back.tau == t1.tau);
    CHECK(back.n_max == t1.n_max);

    const ExperimentSpec commented = parse_config(
        "# benchmark setup\n"
        "problem = hilbert:n=10\n"
        "\n"
        "seeds = 1, 2, 3\n"
        "method = cg\n"
        "tau = 1.1\n");
    CHECK(commented.problem == "hilbert:n=10");
    CHECK(commented.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(commented.methods == std::vector<std::string>{"cg"});
    CHECK(commented.tau == 1.1);

    CHECK_THROWS_AS(parse_config("seeds = 1\nmethod = cg\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("problem = conv:n=4\nsolver = cg\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("problem = conv:n=4\njust a line\n"), std::invalid_argument);
}

TEST_CASE("benchmark presets parse cleanly") {
    for (const auto& spec : {table1_preset(), table2_preset()}) {
        CHECK(spec.methods.size() == 16);
        CHECK(spec.seeds.size() == 20);
        CHECK(spec.delta_prime == 0.01);
        for (const auto& m : spec.methods) CHECK_NOTHROW(parse_method(m));
        CHECK_NOTHROW(parse_problem_spec(spec.problem));
    }
    CHECK(parse_problem_spec(table1_preset().problem).family == "conv");
    CHECK(parse_problem_spec(table2_preset().problem).family == "hilbert");
}

TEST_CASE("experiment runs") {
    const ExperimentSpec spec = small_spec();
    const std::vector<RunReport> reports = run_experiment(spec);

    SECTION("method-major then seed order, fully annotated") {
        REQUIRE(reports.size() == 12);
        for (std::size_t i = 0; i < 12; ++i) {
            const auto& rep = reports[i];
            const std::size_t mi = i / 3;
            CHECK(rep.method == parse_method(spec.methods[mi]).label);
            CHECK(rep.params.at("seed") == std::to_string(spec.seeds[i % 3]));
            CHECK(rep.params.at("problem") == "conv");
            CHECK(rep.params.at("n") == "16");
            CHECK(rep.params.at("delta_prime") == "0.01");
            CHECK(rep.params.at("tau") == "1.03");
            CHECK(rep.params.at("method_spec") ==
                  canonical_method_string(parse_method(spec.methods[mi])));
            CHECK(rep.stopped_by == StopReason::discrepancy);
            CHECK(rep.final_residual <= 1.03 * 0.01 * norm(build_problem(
                      parse_problem_spec(spec.problem)).b_exact) + 1e-12);
        }
    }

    SECTION("flattened records read the annotations back") {
        const BenchRecord lw = to_record(reports[0]);
        CHECK(lw.method == "landweber");
        CHECK(lw.problem == "conv");
        CHECK(lw.n == 16);
        CHECK(lw.delta_prime == 0.01);
        CHECK(lw.seed == 1);
        CHECK(lw.tau == 1.03);
        CHECK(lw.dt == 0.3);
        CHECK(lw.damping.empty());
        CHECK(lw.stopped_by == "discrepancy");

        const BenchRecord cg = to_record(reports[3]);
        CHECK(cg.method == "cg");
        CHECK(std::isnan(cg.dt));

        const BenchRecord se = to_record(reports[9]);
        CHECK(se.method == "se");
        CHECK(se.dt == 0.7);
        CHECK(se.damping == "const:0.6");
    }

    SECTION("two runs are identical apart from timing") {
        const std::vector<RunReport> again = run_experiment(spec);
        REQUIRE(again.size() == reports.size());
        for (std::size_t i = 0; i < reports.size(); ++i)
            REQUIRE(stable_row(again[i]) == stable_row(reports[i]));
    }

    SECTION("summaries group by the canonical method string") {
        const auto sums = summarize(reports);
        REQUIRE(sums.size() == 4);
        for (const auto& s : sums) {
            CHECK(s.runs == 3);
            CHECK(s.divergent == 0);
            CHECK(s.median_iterN >= 0.0);
            CHECK(s.median_l2err > 0.0);
        }
        CHECK(sums[0].method == "landweber dt=0.3");
        CHECK(sums[1].method == "cg");
    }

    SECTION("validation") {
        ExperimentSpec bad = spec;
        bad.methods.clear();
        CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
        bad = spec;
        bad.seeds.clear();
        CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
        bad = spec;
        bad.methods = {"sor"};
        CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
    }
}

TEST_CASE("summaries split methods that share a scheme id") {
    ExperimentSpec spec;
    spec.problem = "conv:n=16";
    spec.seeds = {1, 2};
    spec.methods = {"se dt=0.7 damping=const:0.6", "se dt=0.6 damping=dyn:1.5"};
    const auto sums = summarize(run_experiment(spec));
    REQUIRE(sums.size() == 2);
    CHECK(sums[0].method == "se dt=0.7 damping=const:0.6");
    CHECK(sums[1].method == "se dt=0.6 damping=dyn:1.5");
    CHECK(sums[0].runs == 2);
    CHECK(sums[1].runs == 2);
}

TEST_CASE("parameter sweeps") {
    ExperimentSpec base;
    base.problem = "conv:n=16";
    base.seeds = {1, 2};
    base.methods = {"landweber dt=0.3", "se dt=0.7 damping=const:0.6"};

    SECTION("tau sweep tightens or keeps the stopping index") {
        const SweepResult r = sweep(base, "tau", {1.03, 1.5, 2.0});
        REQUIRE(r.runs.size() == 2 * 2 * 3);
        REQUIRE(r.summary.size() == 2 * 3);
        for (const auto& run : r.runs) {
            CHECK(run.params.at("sweep_param") == "tau");
            REQUIRE(run.params.count("sweep_value") == 1);
        }
        // A larger threshold can only stop earlier.
        for (const auto& m : {std::string("landweber dt=0.3"),
                              std::string("se dt=0.7 damping=const:0.6")}) {
            double prev = std::numeric_limits<double>::infinity();
            for (const double tau : {1.03, 1.5, 2.0}) {
                for (const auto& row : r.summary)
                    if (row.method == m && row.value == tau) {
                        REQUIRE(row.median_iterN <= prev);
                        prev = row.median_iterN;
                    }
            }
        }
    }

    SECTION("dt sweep rejects methods without a step size") {
        ExperimentSpec with_cg = base;
        with_cg.methods.push_back("cg");
        CHECK_THROWS_AS(sweep(with_cg, "dt", {0.1, 0.2}), std::invalid_argument);
    }

    SECTION("unstable dt cells are marked divergent, not fatal") {
        ExperimentSpec lw;
        lw.problem = "conv:n=16";
        lw.seeds = {1, 2};
        lw.methods = {"landweber dt=0.3"};
        // 2 / sigma_1^2 is about 0.33 here, so 5.0 is rejected by the solver.
        const SweepResult r = sweep(lw, "dt", {0.3, 5.0});
        REQUIRE(r.summary.size() == 2);
        CHECK(r.summary[0].divergent == 0);
        CHECK(r.summary[1].divergent == 2);
        CHECK(r.summary[1].runs == 2);
        CHECK(std::isnan(r.summary[1].median_iterN));
        bool saw_error = false;
        for (const auto& run : r.runs)
            if (run.params.count("error")) saw_error = true;
        CHECK(saw_error);
    }

    SECTION("n sweep rebuilds the problem") {
        const SweepResult r = sweep(base, "n", {16.0, 25.0});
        REQUIRE(r.runs.size() == 2 * 2 * 2);
        CHECK(r.runs[0].params.at("n") == "16");
        CHECK(r.runs.back().params.at("n") == "25");
        CHECK_THROWS_AS(sweep(base, "n", {16.5}), std::invalid_argument);
    }

    SECTION("sweep validation") {
        CHECK_THROWS_AS(sweep(base, "gamma", {0.1}), std::invalid_argument);
        CHECK_THROWS_AS(sweep(base, "tau", {}), std::invalid_argument);
    }
}

TEST_CASE("condition scan") {
    const auto rows = condition_scan("hilbert", {3, 5});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].n == 3);
    // Reference values computed in 40-digit extended precision.
    CHECK_THAT(rows[0].condition, WithinRel(524.0567775860608, 1e-9));
    CHECK_THAT(rows[1].condition, WithinRel(476607.25024256081, 1e-9));
    CHECK_FALSE(rows[0].numerically_singular);

    CHECK_NOTHROW(condition_scan("conv", {8, 12}));
    CHECK_THROWS_AS(condition_scan("hilbert", {5, 3}), std::invalid_argument);
    CHECK_THROWS_AS(condition_scan("hilbert", {}), std::invalid_argument);
    CHECK_THROWS_AS(condition_scan("laplace", {3, 5}), std::invalid_argument);
}
