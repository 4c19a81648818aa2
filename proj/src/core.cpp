#include "wattscope/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace wattscope::core {

EnergyQuantity EnergyQuantity::from_joules(double j) {
    if (!std::isfinite(j) || j < 0.0) {
        throw DomainError(fmt::format("energy must be finite and non-negative, got {} J", j));
    }
    EnergyQuantity q;
    q.joules_ = j;
    return q;
}

void validate(const PowerTrace& trace) {
    if (!(trace.nominal_interval_s > 0.0) || !std::isfinite(trace.nominal_interval_s)) {
        throw FormatError(fmt::format("trace '{}': nominal interval must be positive, got {}",
                                      trace.source_id, trace.nominal_interval_s));
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        if (!std::isfinite(s.t_s) || s.t_s <= prev) {
            throw FormatError(fmt::format(
                "trace '{}': timestamps must be finite and strictly increasing (sample {}, t={})",
                trace.source_id, i, s.t_s));
        }
        if (!std::isfinite(s.power_w) || s.power_w < 0.0) {
            throw FormatError(
                fmt::format("trace '{}': power must be finite and non-negative (sample {}, {} W)",
                            trace.source_id, i, s.power_w));
        }
        prev = s.t_s;
    }
}

std::string to_string(RaplDomain domain) {
    switch (domain) {
    case RaplDomain::cpu_package: return "cpu_package";
    case RaplDomain::dram: return "dram";
    }
    throw DomainError("unknown RAPL domain enum value");
}

RaplDomain rapl_domain_from_string(const std::string& name) {
    if (name == "cpu_package") return RaplDomain::cpu_package;
    if (name == "dram") return RaplDomain::dram;
    throw FormatError(fmt::format("unknown RAPL domain '{}', expected cpu_package or dram", name));
}

void validate(const EnergyCounterTrace& trace) {
    if (!(trace.wrap_range_uj > 0.0) || !std::isfinite(trace.wrap_range_uj)) {
        throw FormatError(fmt::format("counter '{}': wrap range must be positive, got {}",
                                      to_string(trace.domain), trace.wrap_range_uj));
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.readings.size(); ++i) {
        const auto& r = trace.readings[i];
        if (!std::isfinite(r.t_s) || r.t_s <= prev) {
            throw FormatError(fmt::format(
                "counter '{}': timestamps must be finite and strictly increasing (reading {}, t={})",
                to_string(trace.domain), i, r.t_s));
        }
        if (!std::isfinite(r.counter_uj) || r.counter_uj < 0.0 ||
            r.counter_uj >= trace.wrap_range_uj) {
            throw FormatError(fmt::format(
                "counter '{}': reading {} is outside [0, {}) microjoules: {}",
                to_string(trace.domain), i, trace.wrap_range_uj, r.counter_uj));
        }
        prev = r.t_s;
    }
}

void validate(const SessionLog& log) {
    if (log.session_id.empty()) {
        throw FormatError("session log: session_id must not be empty");
    }
    if (!(log.memory_gb > 0.0) || !std::isfinite(log.memory_gb)) {
        throw FormatError(fmt::format("session '{}': memory_gb must be positive, got {}",
                                      log.session_id, log.memory_gb));
    }
    if (log.gpu_count < 1) {
        throw FormatError(fmt::format("session '{}': gpu_count must be at least 1, got {}",
                                      log.session_id, log.gpu_count));
    }
    if (!(log.gpu_nominal_rate_hz > 0.0) || !std::isfinite(log.gpu_nominal_rate_hz)) {
        throw FormatError(fmt::format("session '{}': gpu_nominal_rate_hz must be positive, got {}",
                                      log.session_id, log.gpu_nominal_rate_hz));
    }
    double prev_end = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log.epochs.size(); ++i) {
        const auto& e = log.epochs[i];
        if (!std::isfinite(e.start_s) || !std::isfinite(e.end_s) || !(e.start_s < e.end_s)) {
            throw FormatError(fmt::format("session '{}': epoch {} has invalid window [{}, {})",
                                          log.session_id, i, e.start_s, e.end_s));
        }
        if (e.start_s < prev_end) {
            throw FormatError(fmt::format("session '{}': epoch {} overlaps its predecessor",
                                          log.session_id, i));
        }
        prev_end = e.end_s;
    }
}

double session_start_s(const SessionLog& log) {
    if (log.epochs.empty()) throw InsufficientDataError("session log has no epochs");
    return log.epochs.front().start_s;
}

double session_end_s(const SessionLog& log) {
    if (log.epochs.empty()) throw InsufficientDataError("session log has no epochs");
    return log.epochs.back().end_s;
}

namespace {

void check_window(double t0_s, double t1_s) {
    if (!std::isfinite(t0_s) || !std::isfinite(t1_s) || !(t0_s < t1_s)) {
        throw InvalidWindowError(
            fmt::format("window [{}, {}) is not a valid time interval", t0_s, t1_s));
    }
}

// Index of the first sample with t >= t0 (samples are time-ordered).
template <typename Vec>
std::size_t lower_index(const Vec& v, double t0) {
    auto it = std::lower_bound(v.begin(), v.end(), t0,
                               [](const auto& s, double t) { return s.t_s < t; });
    return static_cast<std::size_t>(it - v.begin());
}

double integrate_rectangle(const PowerTrace& trace, double t0_s, double t1_s) {
    const auto& ss = trace.samples;
    std::size_t i = lower_index(ss, t0_s);
    double joules = 0.0;
    std::size_t used = 0;
    for (; i < ss.size() && ss[i].t_s < t1_s; ++i) {
        double hold_until = std::min(ss[i].t_s + trace.nominal_interval_s, t1_s);
        joules += ss[i].power_w * (hold_until - ss[i].t_s);
        ++used;
    }
    if (used == 0) {
        throw EmptyWindowError(fmt::format("trace '{}' has no samples in [{}, {})",
                                           trace.source_id, t0_s, t1_s));
    }
    return joules;
}

double integrate_trapezoid(const PowerTrace& trace, double t0_s, double t1_s) {
    const auto& ss = trace.samples;
    // The interpolant only exists over the sampled range; integrate the
    // overlap of that range with the requested window.
    std::size_t in_window = 0;
    for (std::size_t i = lower_index(ss, t0_s); i < ss.size() && ss[i].t_s <= t1_s; ++i) {
        ++in_window;
    }
    if (in_window < 2) {
        throw EmptyWindowError(
            fmt::format("trace '{}' needs at least 2 samples in [{}, {}] for trapezoid "
                        "integration, found {}",
                        trace.source_id, t0_s, t1_s, in_window));
    }
    double joules = 0.0;
    for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
        double a = ss[i].t_s, b = ss[i + 1].t_s;
        double lo = std::max(a, t0_s), hi = std::min(b, t1_s);
        if (lo >= hi) continue;
        auto at = [&](double t) {
            double w = (t - a) / (b - a);
            return ss[i].power_w + w * (ss[i + 1].power_w - ss[i].power_w);
        };
        joules += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    return joules;
}

} // namespace

EnergyQuantity integrate_power(const PowerTrace& trace, double t0_s, double t1_s,
                               IntegrationMethod method) {
    check_window(t0_s, t1_s);
    double joules = method == IntegrationMethod::rectangle
                        ? integrate_rectangle(trace, t0_s, t1_s)
                        : integrate_trapezoid(trace, t0_s, t1_s);
    return EnergyQuantity::from_joules(joules);
}

namespace {

// Snap outward: last reading at or before t0, first at or after t1. When
// the window starts before the first reading or ends after the last one,
// fall back to the nearest reading available.
std::pair<std::size_t, std::size_t> snap_counter_window(const EnergyCounterTrace& trace,
                                                        double t0_s, double t1_s) {
    check_window(t0_s, t1_s);
    const auto& rs = trace.readings;
    if (rs.size() < 2) {
        throw InsufficientDataError(fmt::format(
            "counter '{}' has {} reading(s), need at least 2", to_string(trace.domain), rs.size()));
    }
    std::size_t begin = lower_index(rs, t0_s);
    if (begin == rs.size()) begin = rs.size() - 1;
    if (begin > 0 && rs[begin].t_s > t0_s) --begin;
    std::size_t end = lower_index(rs, t1_s);
    if (end == rs.size()) end = rs.size() - 1;
    if (begin >= end) {
        throw InsufficientDataError(
            fmt::format("counter '{}' has no two distinct readings bracketing [{}, {}]",
                        to_string(trace.domain), t0_s, t1_s));
    }
    return {begin, end};
}

} // namespace

EnergyQuantity counter_delta(const EnergyCounterTrace& trace, double t0_s, double t1_s) {
    auto [begin, end] = snap_counter_window(trace, t0_s, t1_s);
    const auto& rs = trace.readings;
    double total_uj = 0.0;
    for (std::size_t i = begin; i <= end; ++i) {
        if (!std::isfinite(rs[i].counter_uj) || rs[i].counter_uj < 0.0 ||
            rs[i].counter_uj >= trace.wrap_range_uj) {
            throw UnreliableCounterError(
                fmt::format("counter '{}': reading at t={} is outside [0, {}) microjoules",
                            to_string(trace.domain), rs[i].t_s, trace.wrap_range_uj));
        }
        if (i == begin) continue;
        double step = rs[i].counter_uj - rs[i - 1].counter_uj;
        if (step < 0.0) step += trace.wrap_range_uj; // counter wrapped once
        total_uj += step;
    }
    return EnergyQuantity::from_joules(total_uj * 1e-6);
}

double mean_power(const PowerTrace& trace, double t0_s, double t1_s) {
    EnergyQuantity e = integrate_power(trace, t0_s, t1_s, IntegrationMethod::rectangle);
    return e.joules() / (t1_s - t0_s);
}

double counter_mean_power(const EnergyCounterTrace& trace, double t0_s, double t1_s) {
    auto [begin, end] = snap_counter_window(trace, t0_s, t1_s);
    double span = trace.readings[end].t_s - trace.readings[begin].t_s;
    return counter_delta(trace, t0_s, t1_s).joules() / span;
}

} // namespace wattscope::core
