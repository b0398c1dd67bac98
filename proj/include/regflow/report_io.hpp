#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "regflow/stopping.hpp"

namespace regflow {

/// Shortest round-trip decimal form, locale independent ('.' decimal point,
/// lowercase 'e' exponent). Non-finite values are spelled out.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

/// JSON document for one run. Histories are included only when trace is set;
/// wall_time is wall-clock milliseconds and is the only field expected to
/// vary between identical runs.
inline nlohmann::json report_to_json(const RunReport& rep, bool trace = false) {
    nlohmann::json j;
    j["method"] = rep.method;
    j["params"] = rep.params;
    j["iterN"] = rep.iterN;
    j["l2err"] = rep.l2err;
    j["final_residual"] = rep.final_residual;
    j["stopped_by"] = to_string(rep.stopped_by);
    j["wall_time"] = rep.wall_ms;
    if (trace) {
        j["residual_history"] = rep.residual_history;
        j["error_history"] = rep.error_history;
    }
    return j;
}

/// One benchmark CSV row. dt may be NaN and damping empty for methods the
/// column does not apply to; both render as empty cells.
struct BenchRecord {
    std::string method;
    std::string problem;
    std::size_t n = 0;
    double delta_prime = 0.0;
    std::uint64_t seed = 0;
    double tau = 0.0;
    double dt = std::nan("");
    std::string damping;
    std::size_t iterN = 0;
    double l2err = 0.0;
    double final_residual = 0.0;
    std::string stopped_by;
    double wall_ms = 0.0;
};

inline const char* csv_header() {
    return "method,problem,n,delta_prime,seed,tau,dt,damping,iterN,l2err,final_residual,"
           "stopped_by,wall_ms";
}

/// Quotes a text field when it contains a separator, per the usual CSV
/// doubling convention (method ids like nesterov:alpha=...,omega=... carry
/// commas).
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_line(const BenchRecord& r) {
    std::string line;
    line += csv_field(r.method);
    line += ',';
    line += csv_field(r.problem);
    line += ',';
    line += std::to_string(r.n);
    line += ',';
    line += format_double(r.delta_prime);
    line += ',';
    line += std::to_string(r.seed);
    line += ',';
    line += format_double(r.tau);
    line += ',';
    if (!std::isnan(r.dt)) line += format_double(r.dt);
    line += ',';
    line += csv_field(r.damping);
    line += ',';
    line += std::to_string(r.iterN);
    line += ',';
    line += format_double(r.l2err);
    line += ',';
    line += format_double(r.final_residual);
    line += ',';
    line += r.stopped_by;
    line += ',';
    line += format_double(r.wall_ms);
    return line;
}

}  // namespace regflow
