#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "wattscope/core.hpp"

namespace wattscope::calibrate {

// The node's off-socket power floor: everything the per-component
// instruments (GPU sensor, CPU/DRAM counters) cannot see. Measured twice,
// with the node idle and with CPU and memory under full load, because the
// floor itself moves with load (fans, VRM and PSU losses). p_load_w is an
// optional extra run under a realistic compute load, giving a tighter
// subtrahend than the worst-case busy floor.
struct CalibrationProfile {
    double p_idle_w = 0.0;
    double p_busy_w = 0.0;
    std::optional<double> p_load_w;
};

// Residual node power invisible to the component instruments over the
// window: mean(meter) - mean(cpu) - mean(dram) - mean(gpu). Evaluated on a
// calibration run this is the off-socket floor itself. Throws
// InconsistencyError when negative (mislabeled traces or misaligned clocks).
double off_socket_power(const core::PowerTrace& meter, const core::EnergyCounterTrace& cpu,
                        const core::EnergyCounterTrace& dram, const core::PowerTrace& gpu,
                        double t0_s, double t1_s);

// Bundles the measured floors, enforcing 0 <= idle <= busy and, when given,
// idle <= load <= busy. Violations raise InconsistencyError with a hint to
// re-measure.
CalibrationProfile build_profile(double p_idle_w, double p_busy_w,
                                 std::optional<double> p_load_w = std::nullopt);

// GPU power reconstructed from the whole-node meter:
//   mean(meter) - mean(cpu) - mean(dram) - subtrahend
// where the subtrahend is the profile's busy floor (the conservative
// choice: attribute as much as possible to the rest of the node). Results
// in [-1, 0) W are measurement noise and clamp to 0; anything below -1 W
// raises InconsistencyError.
double adjusted_gpu_power(const core::PowerTrace& meter, const core::EnergyCounterTrace& cpu,
                          const core::EnergyCounterTrace& dram,
                          const CalibrationProfile& profile, double t0_s, double t1_s);

// Same computation with both floors: the busy floor gives the lower bound
// on true GPU power, the idle floor the upper bound. The 1 W clamp applies
// to each end.
struct GpuPowerBounds {
    double lower_w = 0.0; // subtracting p_busy
    double upper_w = 0.0; // subtracting p_idle
};
GpuPowerBounds adjusted_gpu_power_bounds(const core::PowerTrace& meter,
                                         const core::EnergyCounterTrace& cpu,
                                         const core::EnergyCounterTrace& dram,
                                         const CalibrationProfile& profile, double t0_s,
                                         double t1_s);

// Profile file: one key=value per line (p_idle_w, p_busy_w, optional
// p_load_w), '#' comments allowed.
std::string write_profile(const CalibrationProfile& profile);
CalibrationProfile parse_profile(std::string_view text, const std::string& path = "<profile>");

// Cuts margin_s off each end of a calibration run to drop ramp transients.
// The trimmed window must stay non-empty.
core::Epoch trim_window(double t0_s, double t1_s, double margin_s = 2.0);

} // namespace wattscope::calibrate
