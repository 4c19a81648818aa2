#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wattscope/core.hpp"

namespace wattscope::ingest {

// One row of a whole-node meter export. The meter reports four channels
// (one per PSU input); node power is their sum.
struct MeterRecord {
    double t_s = 0.0;
    std::array<double, 4> channels_w{};

    double total_w() const {
        return channels_w[0] + channels_w[1] + channels_w[2] + channels_w[3];
    }
};

// Expected header: timestamp,ch1_w,ch2_w,ch3_w,ch4_w
// Lines starting with '#' are comments. Timestamps must be strictly
// increasing and channel powers non-negative; anything else is a FormatError
// carrying the path and 1-based line number.
std::vector<MeterRecord> parse_meter_csv(std::string_view text,
                                         const std::string& path = "<meter>");

// GPU sampler CSV, header: timestamp_s,power_w
// A "# interval_s=<seconds>" comment before the header declares the
// configured sampling period. Without it the trace gets the conventional
// 0.1 s and interval_defaulted is set so callers can warn.
struct GpuTraceFile {
    core::PowerTrace trace;
    bool interval_defaulted = false;
};
GpuTraceFile parse_gpu_csv(std::string_view text, const std::string& source_id = "gpu",
                           const std::string& path = "<gpu>");

// Cumulative energy counter log, header:
// timestamp_s,domain,counter_uj,wrap_range_uj
// Domains may interleave; each domain's rows must be time-ordered and agree
// on the wrap range. Returns one trace per domain present.
std::map<core::RaplDomain, core::EnergyCounterTrace>
parse_rapl_csv(std::string_view text, const std::string& path = "<rapl>");

// Cumulative per-component estimate written by a software energy tracker.
// Header: timestamp_s,gpu_energy_j,cpu_energy_j,memory_energy_j
// Every energy column must be non-decreasing.
struct EstimatorRecord {
    double t_s = 0.0;
    double gpu_j = 0.0;
    double cpu_j = 0.0;
    double memory_j = 0.0;

    double total_j() const { return gpu_j + cpu_j + memory_j; }
};
std::vector<EstimatorRecord> parse_codecarbon_csv(std::string_view text,
                                                  const std::string& path = "<codecarbon>");

// Session log: one line of run facts, then the epoch windows.
//   session_id,memory_gb,gpu_count,gpu_nominal_rate_hz
//   <id>,<gb>,<count>,<hz>
//   epoch_idx,start_s,end_s
//   0,<s>,<s>
//   ...
// Epoch indices must count up from zero without holes.
core::SessionLog parse_session_csv(std::string_view text,
                                   const std::string& path = "<session>");

// Canonical serializers for the formats above. Numbers are written with
// shortest-round-trip precision, so parse(write(x)) == x exactly.
std::string write_meter_csv(const std::vector<MeterRecord>& records);
std::string write_gpu_csv(const core::PowerTrace& trace);
std::string write_rapl_csv(const std::map<core::RaplDomain, core::EnergyCounterTrace>& traces);
std::string write_codecarbon_csv(const std::vector<EstimatorRecord>& records);
std::string write_session_csv(const core::SessionLog& log);

// Writes text to path through a temp file in the same directory plus a
// rename, so readers never observe a half-written file. Throws Error on
// filesystem failure.
void write_text_file_atomic(const std::string& path, std::string_view text);

// Median spacing between consecutive meter rows; the meter's effective
// sampling period. Needs at least two records.
double median_interval_s(const std::vector<MeterRecord>& records);

// Meter rows as a node-power trace on the session clock: every timestamp
// is shifted by offset_s (session time = meter time + offset).
core::PowerTrace align(const std::vector<MeterRecord>& records, double offset_s,
                       std::string source_id = "meter");

struct ClockOffset {
    double offset_s = 0.0;
    // Sampling period of the meter: the edge position is only known to
    // within one sample.
    double confidence_s = 0.0;
};

// Estimates the meter-to-session clock offset from a power edge: the
// workload's first epoch makes node power jump, so the largest total-power
// rise between consecutive rows (at least min_step_w, earliest such rise if
// tied) is matched to first_marker_s on the session clock. Throws
// NoMarkerError when no rise reaches min_step_w.
ClockOffset estimate_offset(const std::vector<MeterRecord>& records, double first_marker_s,
                            double min_step_w = 50.0);

} // namespace wattscope::ingest
