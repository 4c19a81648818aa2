#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wattscope/core.hpp"

namespace wattscope::analysis {

// When is a sampler's epoch too thin to trust?
//   absolute: flagged iff sample_count <= k. Instruments that collapse to a
//     trickle under low load produce a handful of samples per epoch no
//     matter how long the epoch is, so an absolute floor catches them.
//   ratio: flagged iff sample_count < r * expected_samples, for detecting
//     partial dropout relative to the configured rate.
struct UndersamplingPolicy {
    enum class Kind { absolute, ratio };
    Kind kind = Kind::absolute;
    int k = 10;
    double r = 0.5;

    static UndersamplingPolicy absolute(int k = 10) { return {Kind::absolute, k, 0.5}; }
    static UndersamplingPolicy ratio(double r = 0.5) { return {Kind::ratio, 10, r}; }
};

// Per-epoch, per-source measurement summary. energy is empty when the
// source had no usable data in the epoch window (a missing cell, not zero).
// Cells backed by a cumulative counter are exempt from undersampling
// policies (the reading count reflects the log rate, not lost energy), so
// they carry their origin.
struct SourceEpochStats {
    std::optional<core::EnergyQuantity> energy;
    double mean_power_w = 0.0;
    int sample_count = 0;
    int expected_samples = 0;
    bool undersampled = false;
    bool from_counter = false;
};

struct EpochEnergy {
    int epoch_idx = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double duration_s = 0.0;
    std::map<std::string, SourceEpochStats> sources;
};

bool is_undersampled(const SourceEpochStats& stats, const UndersamplingPolicy& policy);

// An energy source is either a power sampler or a cumulative counter.
using TraceVariant = std::variant<core::PowerTrace, core::EnergyCounterTrace>;

// Integrates every source over every epoch of the session. Epochs where a
// source has no data get a missing energy cell instead of zero. Counter
// sources are never flagged as undersampled; the policy is about samplers.
// jobs > 1 splits the epochs across that many threads.
std::vector<EpochEnergy> epoch_energy_table(const core::SessionLog& session,
                                            const std::map<std::string, TraceVariant>& sources,
                                            const UndersamplingPolicy& policy =
                                                UndersamplingPolicy::absolute(),
                                            int jobs = 1);

// Rows of the table where `source` has a usable, not-undersampled cell.
std::vector<EpochEnergy> corrected_view(const std::vector<EpochEnergy>& table,
                                        const std::string& source,
                                        const UndersamplingPolicy& policy =
                                            UndersamplingPolicy::absolute());

// Splits a trace into one sub-trace per epoch window [start, end).
// Samples falling outside every epoch are counted, not silently dropped.
struct SegmentedTrace {
    std::vector<core::PowerTrace> per_epoch;
    std::size_t discarded_samples = 0;
};
SegmentedTrace segment_epochs(const core::PowerTrace& trace, const core::SessionLog& session);

// Pearson product-moment correlation. Throws UndefinedCorrelationError when
// either series is constant or has fewer than two values, rather than
// returning NaN.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Spearman rank correlation; ties get average ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double alpha = 0.05;
    bool exact = false; // exact enumeration vs asymptotic approximation
};

// Two-sample Kolmogorov-Smirnov test. With both sample sizes at most 10 the
// p-value is exact (conditional on ties, every assignment of the pooled
// values to the two samples equally likely); otherwise the usual asymptotic
// approximation with effective size n*m/(n+m) is used. Rejects when
// p < alpha.
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys,
                       double alpha = 0.05);

// Everything we report about a pair of paired series.
struct CorrelationReport {
    double pearson = 0.0;
    double spearman = 0.0;
    double ks_statistic = 0.0;
    double ks_p_value = 1.0;
    bool ks_reject_at_alpha = false;
    double alpha = 0.05;
    int n = 0;
};

CorrelationReport compare_series(std::span<const double> xs, std::span<const double> ys,
                                 double alpha = 0.05);

struct EcdfPoint {
    double value = 0.0;
    double fraction = 0.0; // P(X <= value)
};

// Empirical CDF over the distinct values of the input.
std::vector<EcdfPoint> ecdf(std::span<const double> values);

// A horizontal plateau in the eCDF: no observations between low_w and
// high_w although both ends were observed. Wide gaps in a power
// distribution are the signature of a sampler that only reports a few
// discrete operating points.
struct EcdfGap {
    double low_w = 0.0;
    double high_w = 0.0;
    double width_w = 0.0;
    double fraction_below = 0.0; // eCDF value at low_w
};

std::vector<EcdfGap> ecdf_gaps(std::span<const double> values, double min_width_w = 10.0);

// Per-epoch power/utilization digest: means and standard deviations per
// epoch, plus how well mean power tracks the two utilization signals
// across epochs.
struct UsageEpochStats {
    double mean_power_w = 0.0;
    double sd_power_w = 0.0;
    double mean_util_pct = 0.0;
    double sd_util_pct = 0.0;
    double mean_mem_pct = 0.0;
    double sd_mem_pct = 0.0;
};

struct UsageSummary {
    std::vector<UsageEpochStats> epochs;
    double power_util_pearson = 0.0;
    double power_mem_pearson = 0.0;
};

UsageSummary usage_power_summary(const std::vector<std::vector<double>>& power_w,
                                 const std::vector<std::vector<double>>& util_pct,
                                 const std::vector<std::vector<double>>& mem_pct);

} // namespace wattscope::analysis
