#include "wattscope/calibrate.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace wattscope::calibrate {

using core::EnergyCounterTrace;
using core::PowerTrace;

namespace {

// Shared body of the adjustment: node power minus what the socket-level
// counters account for.
double residual_power(const PowerTrace& meter, const EnergyCounterTrace& cpu,
                      const EnergyCounterTrace& dram, double t0_s, double t1_s) {
    return core::mean_power(meter, t0_s, t1_s) - core::counter_mean_power(cpu, t0_s, t1_s) -
           core::counter_mean_power(dram, t0_s, t1_s);
}

constexpr double kClampToleranceW = 1.0;

double clamp_adjusted(double watts) {
    if (watts < -kClampToleranceW) {
        throw InconsistencyError(
            fmt::format("adjusted GPU power is {} W; the calibration profile does not fit "
                        "this session (re-measure the floors or check clock alignment)",
                        watts));
    }
    return watts < 0.0 ? 0.0 : watts;
}

} // namespace

double off_socket_power(const PowerTrace& meter, const EnergyCounterTrace& cpu,
                        const EnergyCounterTrace& dram, const PowerTrace& gpu, double t0_s,
                        double t1_s) {
    double off = residual_power(meter, cpu, dram, t0_s, t1_s) -
                 core::mean_power(gpu, t0_s, t1_s);
    if (off < 0.0) {
        throw InconsistencyError(
            fmt::format("off-socket power came out negative ({} W); component traces "
                        "account for more than the node meter saw",
                        off));
    }
    return off;
}

CalibrationProfile build_profile(double p_idle_w, double p_busy_w,
                                 std::optional<double> p_load_w) {
    if (!(p_idle_w >= 0.0) || !std::isfinite(p_idle_w) || !std::isfinite(p_busy_w)) {
        throw InconsistencyError(
            fmt::format("calibration floors must be finite and non-negative, got idle={} "
                        "busy={}",
                        p_idle_w, p_busy_w));
    }
    if (p_idle_w > p_busy_w) {
        throw InconsistencyError(
            fmt::format("idle floor {} W exceeds busy floor {} W; the runs are probably "
                        "swapped, re-measure",
                        p_idle_w, p_busy_w));
    }
    if (p_load_w && (!(*p_load_w >= p_idle_w) || !(*p_load_w <= p_busy_w))) {
        throw InconsistencyError(
            fmt::format("load estimate {} W falls outside the idle/busy bracket [{}, {}]",
                        *p_load_w, p_idle_w, p_busy_w));
    }
    return {p_idle_w, p_busy_w, p_load_w};
}

double adjusted_gpu_power(const PowerTrace& meter, const EnergyCounterTrace& cpu,
                          const EnergyCounterTrace& dram, const CalibrationProfile& profile,
                          double t0_s, double t1_s) {
    return clamp_adjusted(residual_power(meter, cpu, dram, t0_s, t1_s) - profile.p_busy_w);
}

GpuPowerBounds adjusted_gpu_power_bounds(const PowerTrace& meter, const EnergyCounterTrace& cpu,
                                         const EnergyCounterTrace& dram,
                                         const CalibrationProfile& profile, double t0_s,
                                         double t1_s) {
    double residual = residual_power(meter, cpu, dram, t0_s, t1_s);
    GpuPowerBounds bounds;
    bounds.lower_w = clamp_adjusted(residual - profile.p_busy_w);
    bounds.upper_w = clamp_adjusted(residual - profile.p_idle_w);
    return bounds;
}

std::string write_profile(const CalibrationProfile& profile) {
    std::string out = fmt::format("p_idle_w={}\np_busy_w={}\n", profile.p_idle_w,
                                  profile.p_busy_w);
    if (profile.p_load_w) out += fmt::format("p_load_w={}\n", *profile.p_load_w);
    return out;
}

CalibrationProfile parse_profile(std::string_view text, const std::string& path) {
    std::optional<double> idle, busy, load;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError("expected key=value", path, line_no);
        }
        std::string_view key = line.substr(0, eq);
        std::string_view val = line.substr(eq + 1);
        double parsed = 0.0;
        auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), parsed);
        if (ec != std::errc{} || ptr != val.data() + val.size() || !std::isfinite(parsed)) {
            throw FormatError(fmt::format("bad value '{}'", std::string(val)), path, line_no);
        }
        if (key == "p_idle_w") idle = parsed;
        else if (key == "p_busy_w") busy = parsed;
        else if (key == "p_load_w") load = parsed;
        else throw FormatError(fmt::format("unknown key '{}'", std::string(key)), path, line_no);
    }
    if (!idle || !busy) {
        throw FormatError("profile needs both p_idle_w and p_busy_w", path);
    }
    try {
        return build_profile(*idle, *busy, load);
    } catch (const InconsistencyError& e) {
        throw FormatError(e.what(), path);
    }
}

core::Epoch trim_window(double t0_s, double t1_s, double margin_s) {
    if (margin_s < 0.0) {
        throw InvalidWindowError(fmt::format("trim margin must be non-negative, got {}",
                                             margin_s));
    }
    core::Epoch trimmed{t0_s + margin_s, t1_s - margin_s};
    if (!(trimmed.start_s < trimmed.end_s)) {
        throw InvalidWindowError(
            fmt::format("window [{}, {}) vanishes when trimmed by {} s on each side", t0_s,
                        t1_s, margin_s));
    }
    return trimmed;
}

} // namespace wattscope::calibrate
