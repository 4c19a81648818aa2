#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wattscope/core.hpp"
#include "wattscope/errors.hpp"
#include "wattscope/ingest.hpp"

namespace wattscope::synth {

// How the unmetered rest of the node behaves: either a fixed draw, or one
// that steps with the workload (fans and VRMs spin up when the GPUs do).
struct OffSocketModel {
    enum class Kind { constant, tracks_load };
    Kind kind = Kind::constant;
    double constant_w = 0.0;
    double low_w = 0.0;  // draw during low-power epochs (tracks_load)
    double high_w = 0.0; // draw during high-power epochs (tracks_load)

    static OffSocketModel constant(double watts);
    static OffSocketModel tracking(double low_w, double high_w);

    double watts_for(bool low_epoch) const;
};

// A synthetic training run on one node. Epochs switch between a low-power
// state (data loading, evaluation) and a high-power state (compute); CPU and
// memory draw constant power; the off-socket remainder follows its model.
// low_power_w/high_power_w are the draw of a single GPU; the node's GPU
// total scales with the number of samplers attached at generation time.
struct WorkloadSpec {
    std::string session_id = "synthetic";
    int epoch_count = 0;
    // One entry applies to every epoch; otherwise exactly one per epoch.
    // Durations are snapped to the 0.1 s meter grid during generation so
    // piecewise-constant integration is exact; see epoch_durations().
    std::vector<double> epoch_durations_s;
    double low_power_w = 0.0;
    double high_power_w = 0.0;
    double low_fraction = 0.0; // share of epochs in the low-power state
    double cpu_power_w = 0.0;
    double mem_power_w = 0.0;
    OffSocketModel off_socket;
    std::uint64_t seed = 0;
    double memory_gb = 2000.0; // node fact carried into the session log
};

// Throws DomainError when a field is out of range, the duration list does
// not match epoch_count, or low_power_w is not strictly below high_power_w.
void validate(const WorkloadSpec& spec);

// Which epochs are in the low-power state. Exactly
// round(low_fraction * epoch_count) epochs are low, placed by a shuffle
// seeded from spec.seed, so the realized fraction never wobbles with the
// seed. Deterministic across platforms.
std::vector<bool> low_epoch_mask(const WorkloadSpec& spec);

// Per-epoch durations after broadcast and grid snapping: each value is
// rounded to the nearest 0.1 s, with a floor of one interval.
std::vector<double> epoch_durations(const WorkloadSpec& spec);

// One simulated instrument watching a single GPU's power draw.
//   ideal          - a sample every interval, exact values.
//   rate_collapse  - epochs whose true draw is below threshold_w keep at
//                    most collapsed_count samples (the leading ones; the
//                    instrument stalls after the epoch starts).
//                    collapse_fraction picks how many of the eligible
//                    epochs actually misbehave (1.0 = all of them).
//   gaussian_noise - zero-mean noise of sigma_w on every value.
struct SamplerSpec {
    enum class Pathology { ideal, rate_collapse, gaussian_noise };

    double nominal_rate_hz = 10.0;
    Pathology pathology = Pathology::ideal;
    double threshold_w = 0.0;
    int collapsed_count = 10;
    double collapse_fraction = 1.0;
    double sigma_w = 0.0;

    static SamplerSpec ideal(double rate_hz = 10.0);
    static SamplerSpec rate_collapse(double threshold_w, int collapsed_count,
                                     double rate_hz = 10.0, double collapse_fraction = 1.0);
    static SamplerSpec gaussian_noise(double sigma_w, double rate_hz = 10.0);
};

// Throws DomainError for non-positive rates, collapsed_count < 1,
// collapse_fraction outside [0, 1], or negative threshold/sigma.
void validate(const SamplerSpec& spec);

// Closed-form truth for one epoch, all energies in joules. gpu_j covers all
// GPUs combined; meter_j is the node total and equals the sum of the
// component columns by construction.
struct EpochTruth {
    int epoch_idx = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double duration_s = 0.0;
    bool low_power = false;
    double gpu_w = 0.0; // one GPU's draw during this epoch
    double gpu_j = 0.0;
    double cpu_j = 0.0;
    double mem_j = 0.0;
    double off_socket_j = 0.0;
    double meter_j = 0.0;
};

struct AnalyticBlock {
    std::vector<EpochTruth> epochs;
    double gpu_j = 0.0;
    double cpu_j = 0.0;
    double mem_j = 0.0;
    double off_socket_j = 0.0;
    double meter_j = 0.0;
};

// Everything generate_session produces: the session log, dense ground-truth
// component traces on the 10 Hz meter grid, what each sampler actually
// recorded, counter and estimator logs, and the closed-form truth that all
// pipeline estimates are judged against.
struct GeneratedSession {
    core::SessionLog session;
    std::vector<bool> low_epochs;

    core::PowerTrace meter; // cpu + mem + gpu_total + off_socket, pointwise
    core::PowerTrace cpu;
    core::PowerTrace mem;
    core::PowerTrace gpu_total;
    core::PowerTrace off_socket;

    // One recorded trace per SamplerSpec, in order (source ids gpu_0, ...).
    std::vector<core::PowerTrace> gpu_sampled;
    // Epoch indices each sampler collapsed (empty for healthy samplers).
    std::vector<std::vector<int>> collapsed_epochs;

    core::EnergyCounterTrace cpu_counter;
    core::EnergyCounterTrace dram_counter;

    // Cumulative per-component log a software tracker would have written:
    // true GPU and CPU energy, but memory modeled at 3 W per 8 GB.
    std::vector<ingest::EstimatorRecord> codecarbon;

    AnalyticBlock analytic;
    std::vector<std::string> warnings;
};

// Simulates the run. Deterministic for a given spec: the seed fixes epoch
// classes, counter phases, pathology picks and noise. A rate_collapse
// threshold above high_power_w disables that sampler's pathology and is
// reported through warnings instead of failing the run.
GeneratedSession generate_session(const WorkloadSpec& workload,
                                  const std::vector<SamplerSpec>& samplers);

// Closed-form energy of the single-GPU power signal: draw times duration,
// summed over constant-power epochs. The whole-session overload is the sum
// over all epochs. Throws DomainError for an out-of-range epoch index.
core::EnergyQuantity analytic_energy(const WorkloadSpec& workload, int epoch_idx);
core::EnergyQuantity analytic_energy(const WorkloadSpec& workload);

// Writes the session directory: meter.csv, one gpu_<i>.csv per sampler,
// rapl.csv, codecarbon.csv, session.csv and the analytic.json truth file.
// Creates the directory if needed; throws Error when a file cannot be
// written.
void write_session_dir(const std::string& dir, const GeneratedSession& generated);

// A parsed synthesis request: the workload plus the instruments watching it.
struct SynthJob {
    WorkloadSpec workload;
    std::vector<SamplerSpec> samplers;
};

// Reads a synthesis spec from JSON text. Field reference:
//   session_id (string, default "synthetic"), epoch_count (int),
//   low_power_w / high_power_w (numbers), low_fraction (number),
//   cpu_power_w / mem_power_w (numbers, default 0),
//   off_socket (number, or {"low_w", "high_w"} to track the load),
//   memory_gb (number, default 2000), seed (integer, default 0),
//   epoch_duration_s (number or per-epoch array), or instead
//   low_duration_range_s / high_duration_range_s ([min, max] pairs; each
//   epoch's duration is drawn uniformly from its class's range, seeded),
//   samplers (array of {rate_hz, pathology, threshold_w, collapsed_count,
//   collapse_fraction, sigma_w}, default one ideal 10 Hz sampler).
// Unknown keys, type mismatches and invariant violations all throw
// FormatError carrying the path.
SynthJob parse_synth_spec(std::string_view text, const std::string& path = "<synth-spec>");

} // namespace wattscope::synth
