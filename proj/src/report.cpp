#include "wattscope/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace wattscope::report {

using core::EnergyQuantity;

void validate(const HolisticInputs& inputs) {
    if (!(inputs.pue >= 1.0) || !std::isfinite(inputs.pue)) {
        throw DomainError(fmt::format("PUE must be at least 1, got {}", inputs.pue));
    }
    if (!(inputs.duration_s > 0.0) || !std::isfinite(inputs.duration_s)) {
        throw DomainError(fmt::format("duration must be positive, got {} s", inputs.duration_s));
    }
    if (inputs.memory_gb < 0.0 || !std::isfinite(inputs.memory_gb)) {
        throw DomainError(fmt::format("memory_gb must be non-negative, got {}",
                                      inputs.memory_gb));
    }
}

double memory_power_estimate_w(double memory_gb) {
    if (memory_gb < 0.0 || !std::isfinite(memory_gb)) {
        throw DomainError(fmt::format("memory_gb must be non-negative, got {}", memory_gb));
    }
    return memory_gb / 8.0 * 3.0;
}

EnergyQuantity codecarbon_energy(const HolisticInputs& inputs) {
    validate(inputs);
    double mem_j = memory_power_estimate_w(inputs.memory_gb) * inputs.duration_s;
    double total = (inputs.e_gpu.joules() + inputs.e_cpu.joules() + mem_j) * inputs.pue;
    return EnergyQuantity::from_joules(total);
}

std::string to_string(HolisticMethod method) {
    switch (method) {
    case HolisticMethod::codecarbon_model: return "codecarbon_model";
    case HolisticMethod::calibrated_bounds: return "calibrated_bounds";
    case HolisticMethod::calibrated_with_load_estimate: return "calibrated_with_load_estimate";
    }
    throw DomainError("unknown holistic method enum value");
}

HolisticEstimate bounded_holistic_energy(const HolisticInputs& inputs,
                                         const calibrate::CalibrationProfile& profile,
                                         double intensity_g_per_kwh) {
    validate(inputs);
    HolisticEstimate est;
    est.intensity_g_per_kwh = intensity_g_per_kwh;

    double mem_j;
    if (inputs.e_mem_measured) {
        mem_j = inputs.e_mem_measured->joules();
    } else {
        mem_j = memory_power_estimate_w(inputs.memory_gb) * inputs.duration_s;
        est.memory_estimated = true;
    }
    double measured_j = inputs.e_gpu.joules() + inputs.e_cpu.joules() + mem_j;

    // PUE is always the final factor so scaling it rescales every output
    // exactly, the midpoint included.
    double lower_j = (measured_j + profile.p_idle_w * inputs.duration_s) * inputs.pue;
    double upper_j = (measured_j + profile.p_busy_w * inputs.duration_s) * inputs.pue;
    double point_j;
    if (profile.p_load_w) {
        point_j = (measured_j + *profile.p_load_w * inputs.duration_s) * inputs.pue;
        est.method = HolisticMethod::calibrated_with_load_estimate;
    } else {
        point_j = (measured_j + 0.5 * (profile.p_idle_w + profile.p_busy_w) *
                                    inputs.duration_s) *
                  inputs.pue;
        est.method = HolisticMethod::calibrated_bounds;
    }
    est.lower = EnergyQuantity::from_joules(lower_j);
    est.point = EnergyQuantity::from_joules(point_j);
    est.upper = EnergyQuantity::from_joules(upper_j);
    est.co2eq_g = co2eq_g(est.point, intensity_g_per_kwh);
    return est;
}

double co2eq_g(EnergyQuantity energy, double intensity_g_per_kwh) {
    if (intensity_g_per_kwh < 0.0 || !std::isfinite(intensity_g_per_kwh)) {
        throw DomainError(fmt::format("carbon intensity must be non-negative, got {}",
                                      intensity_g_per_kwh));
    }
    return energy.kilowatt_hours() * intensity_g_per_kwh;
}

double deviation_percent(EnergyQuantity estimate, EnergyQuantity reference) {
    if (reference.joules() == 0.0) {
        throw DomainError("deviation from a zero reference is undefined");
    }
    return (estimate.joules() - reference.joules()) / reference.joules() * 100.0;
}

namespace {

nlohmann::ordered_json correlation_json(const std::optional<analysis::CorrelationReport>& rep) {
    if (!rep) return nullptr;
    return nlohmann::ordered_json{{"pearson", rep->pearson},
                                  {"spearman", rep->spearman},
                                  {"ks_statistic", rep->ks_statistic},
                                  {"ks_p_value", rep->ks_p_value},
                                  {"ks_reject_at_alpha", rep->ks_reject_at_alpha},
                                  {"alpha", rep->alpha},
                                  {"n", rep->n}};
}

nlohmann::ordered_json energy_json(const EnergyQuantity& e) {
    return nlohmann::ordered_json{{"joules", e.joules()}, {"watt_hours", e.watt_hours()}};
}

} // namespace

nlohmann::ordered_json render_session_report(const SessionReportInputs& in) {
    nlohmann::ordered_json doc;
    doc["schema"] = "wattscope/1";

    double duration = in.session.epochs.empty()
                          ? 0.0
                          : in.session.epochs.back().end_s - in.session.epochs.front().start_s;
    doc["session"] = {{"session_id", in.session.session_id},
                      {"epoch_count", in.session.epochs.size()},
                      {"duration_s", duration},
                      {"memory_gb", in.session.memory_gb},
                      {"gpu_count", in.session.gpu_count},
                      {"gpu_nominal_rate_hz", in.session.gpu_nominal_rate_hz}};

    if (in.calibration) {
        nlohmann::ordered_json cal{{"p_idle_w", in.calibration->p_idle_w},
                                   {"p_busy_w", in.calibration->p_busy_w}};
        cal["p_load_w"] =
            in.calibration->p_load_w ? nlohmann::ordered_json(*in.calibration->p_load_w)
                                     : nlohmann::ordered_json(nullptr);
        doc["calibration"] = cal;
    } else {
        doc["calibration"] = nullptr;
    }

    doc["epoch_table"] = nlohmann::ordered_json::array();
    for (const auto& row : in.epoch_table) {
        nlohmann::ordered_json cells = nlohmann::ordered_json::object();
        for (const auto& [name, st] : row.sources) {
            cells[name] = {{"energy_j",
                            st.energy ? nlohmann::ordered_json(st.energy->joules())
                                      : nlohmann::ordered_json(nullptr)},
                           {"mean_power_w", st.energy ? nlohmann::ordered_json(st.mean_power_w)
                                                      : nlohmann::ordered_json(nullptr)},
                           {"sample_count", st.sample_count},
                           {"expected_samples", st.expected_samples},
                           {"undersampled", st.undersampled}};
        }
        doc["epoch_table"].push_back({{"epoch_idx", row.epoch_idx},
                                      {"start_s", row.start_s},
                                      {"end_s", row.end_s},
                                      {"duration_s", row.duration_s},
                                      {"sources", cells}});
    }

    nlohmann::ordered_json corr;
    corr["reference"] = in.reference_source.empty()
                            ? nlohmann::ordered_json(nullptr)
                            : nlohmann::ordered_json(in.reference_source);
    corr["sources"] = nlohmann::ordered_json::array();
    for (const auto& sc : in.correlations) {
        nlohmann::ordered_json entry;
        entry["source"] = sc.source;
        entry["epochs_used"] = sc.epochs_used;
        entry["energy"] = correlation_json(sc.energy);
        entry["energy_corrected"] = correlation_json(sc.energy_corrected);
        entry["count_vs_energy"] = correlation_json(sc.count_vs_energy);
        entry["count_vs_energy_corrected"] = correlation_json(sc.count_vs_energy_corrected);
        entry["deviation_max_pct"] = sc.deviation_max_pct
                                         ? nlohmann::ordered_json(*sc.deviation_max_pct)
                                         : nlohmann::ordered_json(nullptr);
        entry["deviation_median_pct"] = sc.deviation_median_pct
                                            ? nlohmann::ordered_json(*sc.deviation_median_pct)
                                            : nlohmann::ordered_json(nullptr);
        entry["notes"] = sc.notes;
        corr["sources"].push_back(entry);
    }
    doc["correlations"] = corr;

    nlohmann::ordered_json gaps = nlohmann::ordered_json::object();
    for (const auto& [source, list] : in.ecdf_gaps) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& g : list) {
            arr.push_back({{"low_w", g.low_w},
                           {"high_w", g.high_w},
                           {"width_w", g.width_w},
                           {"fraction_below", g.fraction_below}});
        }
        gaps[source] = arr;
    }
    doc["ecdf_gaps"] = gaps;

    if (in.holistic) {
        const auto& h = *in.holistic;
        nlohmann::ordered_json hj;
        hj["method"] = to_string(h.method);
        hj["lower"] = energy_json(h.lower);
        hj["point"] = energy_json(h.point);
        hj["upper"] = energy_json(h.upper);
        hj["co2eq_g"] = h.co2eq_g;
        hj["intensity_g_per_kwh"] = h.intensity_g_per_kwh;
        hj["memory_estimated"] = h.memory_estimated;
        hj["codecarbon"] =
            in.codecarbon_estimate
                ? nlohmann::ordered_json(
                      {{"energy", energy_json(*in.codecarbon_estimate)},
                       {"deviation_pct", in.codecarbon_deviation_pct
                                             ? nlohmann::ordered_json(*in.codecarbon_deviation_pct)
                                             : nlohmann::ordered_json(nullptr)}})
                : nlohmann::ordered_json(nullptr);
        doc["holistic"] = hj;
    } else {
        doc["holistic"] = nullptr;
    }

    doc["warnings"] = in.warnings;
    return doc;
}

double quantile(std::span<const double> values, double p) {
    if (values.empty()) throw InsufficientDataError("quantile of an empty sample");
    if (p < 0.0 || p > 1.0) {
        throw DomainError(fmt::format("quantile fraction must be in [0, 1], got {}", p));
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double idx = p * (static_cast<double>(sorted.size()) - 1.0);
    std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
    double w = idx - static_cast<double>(lo);
    return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

BoxplotStats boxplot_stats(std::span<const double> values) {
    if (values.empty()) throw InsufficientDataError("boxplot of an empty sample");
    BoxplotStats st;
    st.q1 = quantile(values, 0.25);
    st.median = quantile(values, 0.5);
    st.q3 = quantile(values, 0.75);
    double iqr = st.q3 - st.q1;
    double lo_fence = st.q1 - 1.5 * iqr;
    double hi_fence = st.q3 + 1.5 * iqr;

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    st.min = sorted.back();
    st.max = sorted.front();
    for (double v : sorted) {
        if (v < lo_fence || v > hi_fence) {
            st.outliers.push_back(v);
        } else {
            st.min = std::min(st.min, v);
            st.max = std::max(st.max, v);
        }
    }
    return st;
}

std::string ecdf_csv(const std::vector<analysis::EcdfPoint>& points) {
    std::string out = "value_w,fraction\n";
    for (const auto& p : points) out += fmt::format("{},{}\n", p.value, p.fraction);
    return out;
}

std::string boxplot_csv(const std::vector<std::pair<std::string, BoxplotStats>>& rows) {
    std::string out = "label,min,q1,median,q3,max,outliers\n";
    for (const auto& [label, st] : rows) {
        std::string outliers;
        for (std::size_t i = 0; i < st.outliers.size(); ++i) {
            if (i) outliers += ';';
            outliers += fmt::format("{}", st.outliers[i]);
        }
        out += fmt::format("{},{},{},{},{},{},{}\n", label, st.min, st.q1, st.median, st.q3,
                           st.max, outliers);
    }
    return out;
}

std::string scatter_csv(const std::string& x_label, const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points) {
    std::string out = fmt::format("{},{}\n", x_label, y_label);
    for (const auto& [x, y] : points) out += fmt::format("{},{}\n", x, y);
    return out;
}

std::string timeseries_diff_csv(const std::vector<DiffRow>& rows) {
    std::string out = "t_s,reference_w,estimate_w,difference_w\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{}\n", r.t_s, r.reference_w, r.estimate_w,
                           r.estimate_w - r.reference_w);
    }
    return out;
}

} // namespace wattscope::report
