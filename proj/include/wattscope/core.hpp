#pragma once

#include <string>
#include <vector>

#include "wattscope/errors.hpp"

namespace wattscope::core {

// An amount of energy, stored canonically in joules. Construction rejects
// negative and non-finite values so downstream code never has to re-check.
class EnergyQuantity {
public:
    EnergyQuantity() = default;

    static EnergyQuantity from_joules(double j);
    static EnergyQuantity from_watt_hours(double wh) { return from_joules(wh * 3600.0); }
    static EnergyQuantity from_kilowatt_hours(double kwh) { return from_joules(kwh * 3.6e6); }

    double joules() const noexcept { return joules_; }
    double watt_hours() const noexcept { return joules_ / 3600.0; }
    double kilowatt_hours() const noexcept { return joules_ / 3.6e6; }

    EnergyQuantity& operator+=(EnergyQuantity rhs) {
        joules_ += rhs.joules_;
        return *this;
    }
    friend EnergyQuantity operator+(EnergyQuantity a, EnergyQuantity b) { return a += b; }

private:
    double joules_ = 0.0;
};

// One instantaneous power reading, timestamped in seconds since the start
// of the measurement session.
struct PowerSample {
    double t_s = 0.0;
    double power_w = 0.0;
};

// A time series of power readings from a single instrument.
// nominal_interval_s is the sampling period the instrument was configured
// for; actual sample spacing may be coarser when the instrument misbehaves.
struct PowerTrace {
    std::string source_id;
    double nominal_interval_s = 0.1;
    std::vector<PowerSample> samples;
};

// Throws FormatError unless timestamps are finite and strictly increasing,
// power values are finite and non-negative, and the nominal interval is a
// positive finite number.
void validate(const PowerTrace& trace);

enum class RaplDomain { cpu_package, dram };

std::string to_string(RaplDomain domain);
RaplDomain rapl_domain_from_string(const std::string& name);

// One reading of a cumulative energy counter, in microjoules.
struct CounterReading {
    double t_s = 0.0;
    double counter_uj = 0.0;
};

// A cumulative energy counter that wraps to zero after wrap_range_uj.
struct EnergyCounterTrace {
    RaplDomain domain = RaplDomain::cpu_package;
    double wrap_range_uj = 0.0;
    std::vector<CounterReading> readings;
};

// Throws FormatError unless timestamps are strictly increasing, the wrap
// range is positive, and every counter value lies in [0, wrap_range_uj).
void validate(const EnergyCounterTrace& trace);

// Half-open interval [start_s, end_s) of one training epoch.
struct Epoch {
    double start_s = 0.0;
    double end_s = 0.0;
};

// What the benchmark under test reports about its own run: epoch boundaries
// plus the hardware facts needed for energy models.
struct SessionLog {
    std::string session_id;
    std::vector<Epoch> epochs;
    double memory_gb = 0.0;
    int gpu_count = 1;
    double gpu_nominal_rate_hz = 10.0;
};

// Throws FormatError unless epochs are non-empty windows in non-decreasing,
// non-overlapping order and the hardware fields are positive.
void validate(const SessionLog& log);

double session_start_s(const SessionLog& log);
double session_end_s(const SessionLog& log);

enum class IntegrationMethod { rectangle, trapezoid };

// Integrates a power trace over the window [t0_s, t1_s).
//
// rectangle: each sample with t in [t0_s, t1_s) is held constant for one
// nominal interval, clipped to the window end. This treats a sparse trace
// the way the instrument's own accumulator would: missing samples simply
// contribute nothing, which is exactly the undercounting behaviour we need
// to be able to reproduce and detect.
//
// trapezoid: linear interpolation between consecutive samples, integrated
// over the overlap of [t0_s, t1_s] with the sampled range. Needs at least
// two samples inside the window.
//
// Throws InvalidWindowError for ill-formed windows and EmptyWindowError
// when the window contains too few samples for the chosen method.
EnergyQuantity integrate_power(const PowerTrace& trace, double t0_s, double t1_s,
                               IntegrationMethod method = IntegrationMethod::rectangle);

// Energy accumulated by a wrapping counter across [t0_s, t1_s]. The window
// edges snap outward to the nearest readings (last reading at or before
// t0_s, first reading at or after t1_s); wraps between consecutive readings
// are unfolded by adding the wrap range. Throws InsufficientDataError when
// fewer than two readings bracket the window and UnreliableCounterError
// when a step between readings exceeds the wrap range.
EnergyQuantity counter_delta(const EnergyCounterTrace& trace, double t0_s, double t1_s);

// Time-weighted mean power over [t0_s, t1_s): rectangle-integrated energy
// divided by the window length.
double mean_power(const PowerTrace& trace, double t0_s, double t1_s);

// Mean power implied by a wrapping counter over [t0_s, t1_s]. Because the
// window snaps outward to actual readings, the divisor is the snapped
// duration, not t1_s - t0_s.
double counter_mean_power(const EnergyCounterTrace& trace, double t0_s, double t1_s);

} // namespace wattscope::core
