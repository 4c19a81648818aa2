#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wattscope/core.hpp"
#include "wattscope/errors.hpp"

namespace wattscope::collector {

struct CollectorConfig {
    double rate_hz = 10.0;
    // Collection stops after this many seconds; nullopt runs until the stop
    // flag handed to run_collector flips.
    std::optional<double> duration_s;
    std::string powercap_root = "/sys/class/powercap";
    std::string gpu_query_command = "nvidia-smi --query-gpu=power.draw --format=csv,noheader";
    std::string output_dir = ".";
};

// Throws DomainError for a non-positive rate or a negative duration.
void validate(const CollectorConfig& config);

struct PowercapReading {
    core::RaplDomain domain = core::RaplDomain::cpu_package;
    double counter_uj = 0.0;
    double wrap_range_uj = 0.0;
};

struct PowercapSnapshot {
    std::vector<PowercapReading> readings;
    std::vector<std::string> warnings;
};

// Scans the power-cap tree once: every child directory with a `name` file
// is a candidate domain; names starting with "package" map to cpu_package
// and "dram" maps to dram, everything else (core, uncore, psys) is not ours
// and is skipped. The first hit per domain wins; additional sockets are
// reported through warnings, as are domains missing their counter files. A
// counter file that exists but cannot be opened raises Error pointing out
// that elevated access or ownership of the power cap interface may be
// required. A missing or empty root yields an empty snapshot plus a
// warning.
PowercapSnapshot read_powercap_snapshot(const std::string& root);

// Parses GPU power-query output: one "<float> W" line per GPU, in device
// order (a bare "<float>" is accepted for unit-less query formats). Throws
// FormatError retaining the offending raw line.
std::vector<double> parse_gpu_query_output(std::string_view text);

// The two sources a collection run samples. Injectable so tests and
// alternative backends can supply their own. A reader reports a failed read
// by returning no data; that sampling slot is dropped, never interpolated.
struct Readers {
    std::function<std::vector<double>()> gpu_power_w;
    std::function<PowercapSnapshot()> powercap;
};

// Readers backed by the real machine: the GPU command template through a
// shell subprocess, the power-cap tree through read_powercap_snapshot.
Readers make_system_readers(const CollectorConfig& config);

struct CollectorResult {
    std::vector<std::string> files_written;
    std::size_t gpu_sample_count = 0;  // rows per GPU file
    std::size_t rapl_sample_count = 0; // counter snapshots recorded
    double achieved_rate_hz = 0.0;     // GPU rows over elapsed wall time
    std::vector<std::string> warnings;
};

// Samples both sources at config.rate_hz until the duration elapses or
// *stop flips, then writes gpu_<i>.csv and rapl.csv into config.output_dir.
//
// Each source runs on its own thread feeding an ordered queue consumed by a
// writer; sampling never blocks on the sink. A slot whose deadline has
// already passed by more than one period is dropped, so a stalling reader
// shows up as a hole in the trace rather than as fabricated values.
// Timestamps are monotonic-clock seconds since collection start.
//
// One probing GPU read happens up front to learn the device count; its
// value is not recorded. While the run is in flight the outputs exist as
// *.partial files and are renamed into place only on clean finalization, so
// an aborted run is recognizable by its leftovers. The achieved sampling
// rate lands in a header comment of every produced file.
CollectorResult run_collector(const CollectorConfig& config, const Readers& readers,
                              const std::atomic<bool>* stop = nullptr);

} // namespace wattscope::collector
