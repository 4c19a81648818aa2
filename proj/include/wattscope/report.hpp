#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wattscope/analysis.hpp"
#include "wattscope/calibrate.hpp"
#include "wattscope/core.hpp"

namespace wattscope::report {

// Inputs for a whole-run energy estimate: the per-component measurements
// plus the run facts the models need.
struct HolisticInputs {
    core::EnergyQuantity e_gpu;                         // GPU sensor path
    core::EnergyQuantity e_cpu;                         // cpu_package counter
    std::optional<core::EnergyQuantity> e_mem_measured; // dram counter, if present
    double memory_gb = 0.0;
    double duration_s = 0.0;
    double pue = 1.0;
};

// Throws DomainError unless pue >= 1 and duration > 0.
void validate(const HolisticInputs& inputs);

// The 3 W per 8 GB rule of thumb used by software trackers when no memory
// measurement exists. Wildly wrong for large-memory nodes, which is the
// point of comparing it against the dram counter.
double memory_power_estimate_w(double memory_gb);

// (e_gpu + e_cpu + estimated memory) * pue. Always uses the 3 W / 8 GB
// memory model, never a measured value; that is what the estimator under
// study does.
core::EnergyQuantity codecarbon_energy(const HolisticInputs& inputs);

enum class HolisticMethod { codecarbon_model, calibrated_bounds, calibrated_with_load_estimate };
std::string to_string(HolisticMethod method);

struct HolisticEstimate {
    core::EnergyQuantity lower;
    core::EnergyQuantity point;
    core::EnergyQuantity upper;
    HolisticMethod method = HolisticMethod::calibrated_bounds;
    double co2eq_g = 0.0; // for the point estimate
    double intensity_g_per_kwh = 0.0;
    bool memory_estimated = false; // dram counter missing, 3 W/8 GB fallback used
};

// Calibrated whole-node bracket: measured components plus the off-socket
// floor interval [p_idle, p_busy], all scaled by PUE. The point estimate
// uses the profile's load estimate when present, the interval midpoint
// otherwise. Without a measured memory energy the memory model fills in and
// the result is flagged.
HolisticEstimate bounded_holistic_energy(const HolisticInputs& inputs,
                                         const calibrate::CalibrationProfile& profile,
                                         double intensity_g_per_kwh);

// Grams of CO2-equivalent at the given grid intensity.
double co2eq_g(core::EnergyQuantity energy, double intensity_g_per_kwh);

// Signed percentage deviation of an estimate from a reference; negative
// means underestimation. Reference zero is an error.
double deviation_percent(core::EnergyQuantity estimate, core::EnergyQuantity reference);

// How one source's per-epoch energies relate to the reference column.
// Correlation slots are empty (with a note) when undefined for the data,
// e.g. constant series or too few shared epochs.
struct SourceComparison {
    std::string source;
    int epochs_used = 0;
    std::optional<analysis::CorrelationReport> energy;
    std::optional<analysis::CorrelationReport> energy_corrected;
    std::optional<analysis::CorrelationReport> count_vs_energy;
    std::optional<analysis::CorrelationReport> count_vs_energy_corrected;
    std::optional<double> deviation_max_pct;    // largest magnitude, sign kept
    std::optional<double> deviation_median_pct; // median of signed deviations
    std::vector<std::string> notes;
};

struct SessionReportInputs {
    core::SessionLog session;
    std::optional<calibrate::CalibrationProfile> calibration;
    std::vector<analysis::EpochEnergy> epoch_table;
    std::string reference_source; // empty when no reference column exists
    std::vector<SourceComparison> correlations;
    std::map<std::string, std::vector<analysis::EcdfGap>> ecdf_gaps; // per power source
    std::optional<HolisticEstimate> holistic;
    std::optional<core::EnergyQuantity> codecarbon_estimate;
    std::optional<double> codecarbon_deviation_pct;
    std::vector<std::string> warnings;
};

// Deterministic machine-readable report, schema "wattscope/1".
nlohmann::ordered_json render_session_report(const SessionReportInputs& inputs);

// Tukey box summary with the linear-interpolation quantile rule; whiskers
// reach the most extreme values within 1.5 IQR of the box.
struct BoxplotStats {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::vector<double> outliers;
};

// p-th quantile (0 <= p <= 1) by linear interpolation between order
// statistics; values need not be sorted.
double quantile(std::span<const double> values, double p);

BoxplotStats boxplot_stats(std::span<const double> values);

// Plot-data emitters. All return headered CSV text.
std::string ecdf_csv(const std::vector<analysis::EcdfPoint>& points);
std::string boxplot_csv(const std::vector<std::pair<std::string, BoxplotStats>>& rows);
std::string scatter_csv(const std::string& x_label, const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points);

// Reference vs estimate over time plus their difference (estimate - reference).
struct DiffRow {
    double t_s = 0.0;
    double reference_w = 0.0;
    double estimate_w = 0.0;
};
std::string timeseries_diff_csv(const std::vector<DiffRow>& rows);

} // namespace wattscope::report
