// Command-line front end tying the pipeline together:
//
//   calibrate  measure the node's off-socket power floors from metered runs
//   validate   per-epoch energy table, correlations, KS tests, eCDF gaps
//   report     bounded whole-run energy with CO2 equivalents
//   synth      generate a synthetic session with known ground truth
//   collect    sample live GPU power and energy counters into trace files
//
// Exit codes are part of the interface and stay stable across releases:
//   0   success
//   2   domain error (inconsistent calibration, empty windows, ...)
//   64  usage error (bad flags, missing inputs)
//   65  malformed input data (CSV syntax, ordering violations, ...)
//   1   anything unexpected

#include <atomic>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "wattscope/analysis.hpp"
#include "wattscope/calibrate.hpp"
#include "wattscope/collector.hpp"
#include "wattscope/core.hpp"
#include "wattscope/errors.hpp"
#include "wattscope/ingest.hpp"
#include "wattscope/report.hpp"
#include "wattscope/synth.hpp"

namespace fs = std::filesystem;
using namespace wattscope;

namespace {

// Bad invocations that CLI11's validators cannot catch (e.g. a session
// directory missing a required file). Mapped to exit code 64 like any other
// usage mistake.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError(fmt::format("cannot read {}", path));
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_output(const std::string& dir, const std::string& name, std::string_view text) {
    fs::create_directories(dir);
    std::string path = (fs::path(dir) / name).string();
    ingest::write_text_file_atomic(path, text);
    fmt::print("wrote {}\n", path);
}

nlohmann::ordered_json energy_json(core::EnergyQuantity e) {
    return nlohmann::ordered_json{{"joules", e.joules()}, {"watt_hours", e.watt_hours()}};
}

// ---------------------------------------------------------------------------
// Session directory loading. Files are discovered by their conventional
// names; every path can be overridden by a flag.

struct SessionOverrides {
    std::string session;
    std::string meter;
    std::string rapl;
    std::string codecarbon;
    std::vector<std::string> gpus;
};

struct SessionPaths {
    std::string session;
    std::string meter;
    std::string rapl;
    std::string codecarbon;
    std::vector<std::string> gpus;
};

SessionPaths discover_session(const std::string& dir, const SessionOverrides& ov) {
    auto present = [&](const char* name) {
        fs::path p = fs::path(dir) / name;
        return fs::exists(p) ? p.string() : std::string{};
    };
    SessionPaths paths;
    paths.session = ov.session.empty() ? present("session.csv") : ov.session;
    paths.meter = ov.meter.empty() ? present("meter.csv") : ov.meter;
    paths.rapl = ov.rapl.empty() ? present("rapl.csv") : ov.rapl;
    paths.codecarbon = ov.codecarbon.empty() ? present("codecarbon.csv") : ov.codecarbon;
    if (!ov.gpus.empty()) {
        paths.gpus = ov.gpus;
    } else {
        for (int i = 0;; ++i) {
            fs::path p = fs::path(dir) / fmt::format("gpu_{}.csv", i);
            if (!fs::exists(p)) break;
            paths.gpus.push_back(p.string());
        }
    }
    return paths;
}

struct LoadedSession {
    core::SessionLog session;
    std::optional<core::PowerTrace> meter;
    std::vector<core::PowerTrace> gpus;
    std::map<core::RaplDomain, core::EnergyCounterTrace> rapl;
    std::vector<ingest::EstimatorRecord> codecarbon;
    std::vector<std::string> warnings;
};

struct MeterAlignment {
    double offset_s = 0.0;
    bool from_marker = false; // estimate the offset from the first power edge
    double min_step_w = 50.0;
};

LoadedSession load_session(const std::string& dir, const SessionOverrides& ov,
                           const MeterAlignment& alignment, double gpu_rate_override_hz) {
    SessionPaths paths = discover_session(dir, ov);
    if (paths.session.empty()) {
        throw UsageError(fmt::format("no session.csv in {} (override with --session)", dir));
    }

    LoadedSession loaded;
    loaded.session = ingest::parse_session_csv(read_file(paths.session), paths.session);

    if (!paths.meter.empty()) {
        auto records = ingest::parse_meter_csv(read_file(paths.meter), paths.meter);
        double offset = alignment.offset_s;
        if (alignment.from_marker) {
            auto est = ingest::estimate_offset(records, core::session_start_s(loaded.session),
                                               alignment.min_step_w);
            offset = est.offset_s;
            loaded.warnings.push_back(fmt::format(
                "meter clock offset estimated from power edge: {} s (+-{} s)", est.offset_s,
                est.confidence_s));
        }
        loaded.meter = ingest::align(records, offset);
    }

    for (std::size_t i = 0; i < paths.gpus.size(); ++i) {
        std::string id = fmt::format("gpu_{}", i);
        auto file = ingest::parse_gpu_csv(read_file(paths.gpus[i]), id, paths.gpus[i]);
        if (file.interval_defaulted && loaded.session.gpu_nominal_rate_hz > 0.0) {
            file.trace.nominal_interval_s = 1.0 / loaded.session.gpu_nominal_rate_hz;
            loaded.warnings.push_back(fmt::format(
                "{} declares no sampling interval; assuming the session nominal rate {} Hz",
                paths.gpus[i], loaded.session.gpu_nominal_rate_hz));
        }
        if (gpu_rate_override_hz > 0.0) {
            file.trace.nominal_interval_s = 1.0 / gpu_rate_override_hz;
        }
        loaded.gpus.push_back(std::move(file.trace));
    }

    if (!paths.rapl.empty()) {
        loaded.rapl = ingest::parse_rapl_csv(read_file(paths.rapl), paths.rapl);
    }
    if (!paths.codecarbon.empty()) {
        loaded.codecarbon =
            ingest::parse_codecarbon_csv(read_file(paths.codecarbon), paths.codecarbon);
    }
    return loaded;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOpts {
    std::string idle_dir;
    std::string busy_dir;
    std::string load_dir;
    std::string out_dir = ".";
    double margin_s = 2.0;
};

// GPU files written by the collector share sample times (one device query
// yields every GPU's value), so the node's GPU draw is their pointwise sum.
core::PowerTrace combined_gpu_trace(std::vector<core::PowerTrace> gpus) {
    core::PowerTrace sum = std::move(gpus.front());
    for (std::size_t i = 1; i < gpus.size(); ++i) {
        const auto& t = gpus[i];
        if (t.samples.size() != sum.samples.size()) {
            throw DomainError(
                "gpu traces must be jointly sampled to combine them for calibration");
        }
        for (std::size_t k = 0; k < t.samples.size(); ++k) {
            if (t.samples[k].t_s != sum.samples[k].t_s) {
                throw DomainError(
                    "gpu traces must be jointly sampled to combine them for calibration");
            }
            sum.samples[k].power_w += t.samples[k].power_w;
        }
    }
    sum.source_id = "gpu";
    return sum;
}

double calibration_run_floor(const std::string& dir, double margin_s) {
    SessionOverrides none;
    SessionPaths paths = discover_session(dir, none);
    if (paths.meter.empty() || paths.rapl.empty() || paths.gpus.empty()) {
        throw UsageError(fmt::format(
            "calibration run {} needs meter.csv, rapl.csv and at least one gpu_<i>.csv", dir));
    }

    auto records = ingest::parse_meter_csv(read_file(paths.meter), paths.meter);
    auto meter = ingest::align(records, 0.0);
    auto rapl = ingest::parse_rapl_csv(read_file(paths.rapl), paths.rapl);
    auto cpu = rapl.find(core::RaplDomain::cpu_package);
    auto dram = rapl.find(core::RaplDomain::dram);
    if (cpu == rapl.end() || dram == rapl.end()) {
        throw DomainError(fmt::format(
            "calibration run {} needs both cpu_package and dram counters in rapl.csv", dir));
    }
    std::vector<core::PowerTrace> gpus;
    for (std::size_t i = 0; i < paths.gpus.size(); ++i) {
        gpus.push_back(
            ingest::parse_gpu_csv(read_file(paths.gpus[i]), fmt::format("gpu_{}", i),
                                  paths.gpus[i])
                .trace);
    }
    auto gpu = combined_gpu_trace(std::move(gpus));

    // Prefer the run's own epoch log for the window; otherwise the meter's
    // span. Either way trim the ramp transients off both ends.
    double t0 = 0.0;
    double t1 = 0.0;
    if (!paths.session.empty()) {
        auto log = ingest::parse_session_csv(read_file(paths.session), paths.session);
        t0 = core::session_start_s(log);
        t1 = core::session_end_s(log);
    } else {
        t0 = meter.samples.front().t_s;
        t1 = meter.samples.back().t_s + meter.nominal_interval_s;
    }
    if (margin_s > 0.0) {
        auto window = calibrate::trim_window(t0, t1, margin_s);
        t0 = window.start_s;
        t1 = window.end_s;
    }
    return calibrate::off_socket_power(meter, cpu->second, dram->second, gpu, t0, t1);
}

void cmd_calibrate(const CalibrateOpts& o) {
    double p_idle = calibration_run_floor(o.idle_dir, o.margin_s);
    double p_busy = calibration_run_floor(o.busy_dir, o.margin_s);
    std::optional<double> p_load;
    if (!o.load_dir.empty()) p_load = calibration_run_floor(o.load_dir, o.margin_s);

    auto profile = calibrate::build_profile(p_idle, p_busy, p_load);
    fmt::print("p_idle_w={}\n", profile.p_idle_w);
    fmt::print("p_busy_w={}\n", profile.p_busy_w);
    if (profile.p_load_w) fmt::print("p_load_w={}\n", *profile.p_load_w);
    write_output(o.out_dir, "calibration.profile", calibrate::write_profile(profile));
}

// ---------------------------------------------------------------------------
// validate

struct ValidateOpts {
    std::string session_dir;
    SessionOverrides overrides;
    std::string profile_path;
    std::string out_dir = ".";
    int k = 10;
    double ratio = 0.5;
    bool use_ratio = false;
    double alpha = 0.05;
    double min_gap_w = 10.0;
    double rate_hz = 0.0; // 0 keeps the per-file / session value
    int jobs = 1;
    MeterAlignment alignment;
};

struct PairedColumns {
    std::vector<double> energies;
    std::vector<double> reference_energies;
    std::vector<double> counts;
    std::vector<double> deviations_pct;
};

PairedColumns paired_columns(const std::vector<analysis::EpochEnergy>& rows,
                             const std::string& source, const std::string& reference) {
    PairedColumns cols;
    for (const auto& row : rows) {
        auto is = row.sources.find(source);
        auto ir = row.sources.find(reference);
        if (is == row.sources.end() || ir == row.sources.end()) continue;
        if (!is->second.energy || !ir->second.energy) continue;
        cols.energies.push_back(is->second.energy->joules());
        cols.reference_energies.push_back(ir->second.energy->joules());
        cols.counts.push_back(static_cast<double>(is->second.sample_count));
        cols.deviations_pct.push_back(
            report::deviation_percent(*is->second.energy, *ir->second.energy));
    }
    return cols;
}

report::SourceComparison compare_source(const std::vector<analysis::EpochEnergy>& table,
                                        const std::string& source, const std::string& reference,
                                        const analysis::UndersamplingPolicy& policy,
                                        double alpha) {
    report::SourceComparison sc;
    sc.source = source;

    auto correlate = [&](const std::vector<double>& xs, const std::vector<double>& ys)
        -> std::optional<analysis::CorrelationReport> {
        try {
            return analysis::compare_series(xs, ys, alpha);
        } catch (const DomainError& e) {
            sc.notes.push_back(fmt::format("{}: {}", source, e.what()));
            return std::nullopt;
        }
    };

    auto raw = paired_columns(table, source, reference);
    sc.epochs_used = static_cast<int>(raw.energies.size());
    sc.energy = correlate(raw.energies, raw.reference_energies);
    sc.count_vs_energy = correlate(raw.counts, raw.reference_energies);

    auto healthy = paired_columns(analysis::corrected_view(table, source, policy), source,
                                  reference);
    sc.energy_corrected = correlate(healthy.energies, healthy.reference_energies);
    sc.count_vs_energy_corrected = correlate(healthy.counts, healthy.reference_energies);

    if (!raw.deviations_pct.empty()) {
        double max_dev = raw.deviations_pct.front();
        for (double d : raw.deviations_pct) {
            if (std::abs(d) > std::abs(max_dev)) max_dev = d;
        }
        sc.deviation_max_pct = max_dev;
        sc.deviation_median_pct = report::quantile(raw.deviations_pct, 0.5);
    }
    return sc;
}

void cmd_validate(const ValidateOpts& o) {
    auto loaded = load_session(o.session_dir, o.overrides, o.alignment, o.rate_hz);
    const auto& log = loaded.session;

    auto policy = o.use_ratio ? analysis::UndersamplingPolicy::ratio(o.ratio)
                              : analysis::UndersamplingPolicy::absolute(o.k);

    std::map<std::string, analysis::TraceVariant> sources;
    std::vector<const core::PowerTrace*> power_traces;
    if (loaded.meter) {
        sources["meter"] = *loaded.meter;
        power_traces.push_back(&*loaded.meter);
    }
    for (const auto& g : loaded.gpus) {
        sources[g.source_id] = g;
        power_traces.push_back(&g);
    }
    for (const auto& [domain, trace] : loaded.rapl) sources[core::to_string(domain)] = trace;
    if (sources.empty()) {
        throw UsageError(fmt::format("{} holds no power or counter traces", o.session_dir));
    }

    auto table = analysis::epoch_energy_table(log, sources, policy, o.jobs);

    std::string reference = loaded.meter ? "meter" : "";
    std::vector<report::SourceComparison> comparisons;
    if (reference.empty()) {
        loaded.warnings.push_back(
            "no reference source (meter.csv missing); correlation report skipped");
    } else {
        for (const auto& [name, unused] : sources) {
            if (name != reference) {
                comparisons.push_back(compare_source(table, name, reference, policy, o.alpha));
            }
        }
    }

    std::map<std::string, std::vector<analysis::EcdfGap>> gaps;
    for (const auto* trace : power_traces) {
        std::vector<double> powers;
        powers.reserve(trace->samples.size());
        for (const auto& s : trace->samples) powers.push_back(s.power_w);
        if (!powers.empty()) gaps[trace->source_id] = analysis::ecdf_gaps(powers, o.min_gap_w);
    }

    std::optional<calibrate::CalibrationProfile> profile;
    if (!o.profile_path.empty()) {
        profile = calibrate::parse_profile(read_file(o.profile_path), o.profile_path);
    }

    report::SessionReportInputs inputs;
    inputs.session = log;
    inputs.calibration = profile;
    inputs.epoch_table = table;
    inputs.reference_source = reference;
    inputs.correlations = comparisons;
    inputs.ecdf_gaps = gaps;
    inputs.warnings = loaded.warnings;

    for (const auto& w : loaded.warnings) fmt::print(stderr, "warning: {}\n", w);

    double duration = core::session_end_s(log) - core::session_start_s(log);
    fmt::print("session {}: {} epochs over {} s\n", log.session_id, log.epochs.size(),
               duration);
    fmt::print("reference: {}\n", reference.empty() ? "(none)" : reference);
    for (const auto& sc : comparisons) {
        int undersampled = 0;
        for (const auto& row : table) {
            auto it = row.sources.find(sc.source);
            if (it != row.sources.end() && it->second.undersampled) ++undersampled;
        }
        fmt::print("{}: epochs_used={} undersampled_epochs={}", sc.source, sc.epochs_used,
                   undersampled);
        if (sc.energy) fmt::print(" pearson_raw={:.6f}", sc.energy->pearson);
        if (sc.energy_corrected) {
            fmt::print(" pearson_corrected={:.6f}", sc.energy_corrected->pearson);
        }
        fmt::print("\n");
        if (sc.energy) {
            fmt::print("{}: spearman_raw={:.6f} ks_p={:.6g} ks_reject={}\n", sc.source,
                       sc.energy->spearman, sc.energy->ks_p_value,
                       sc.energy->ks_reject_at_alpha ? "yes" : "no");
        }
        if (sc.count_vs_energy) {
            fmt::print("{}: count_vs_energy_raw={:.6f}", sc.source,
                       sc.count_vs_energy->pearson);
            if (sc.count_vs_energy_corrected) {
                fmt::print(" count_vs_energy_corrected={:.6f}",
                           sc.count_vs_energy_corrected->pearson);
            }
            fmt::print("\n");
        }
        if (sc.deviation_max_pct) {
            fmt::print("{}: deviation_max_pct={:.3f} deviation_median_pct={:.3f}\n", sc.source,
                       *sc.deviation_max_pct, *sc.deviation_median_pct);
        }
        for (const auto& note : sc.notes) fmt::print("{}: note: {}\n", sc.source, note);
    }
    for (const auto& [source, list] : gaps) {
        if (list.empty()) continue;
        fmt::print("{}: ecdf_gaps={}", source, list.size());
        for (const auto& g : list) fmt::print(" [{}..{} W]", g.low_w, g.high_w);
        fmt::print("\n");
    }

    write_output(o.out_dir, "report.json", report::render_session_report(inputs).dump(2) + "\n");

    for (const auto* trace : power_traces) {
        std::vector<double> powers;
        powers.reserve(trace->samples.size());
        for (const auto& s : trace->samples) powers.push_back(s.power_w);
        if (powers.empty()) continue;
        write_output(o.out_dir, fmt::format("ecdf_{}.csv", trace->source_id),
                     report::ecdf_csv(analysis::ecdf(powers)));
    }

    std::vector<std::pair<std::string, report::BoxplotStats>> box_rows;
    for (const auto& [name, unused] : sources) {
        std::vector<double> means;
        for (const auto& row : table) {
            auto it = row.sources.find(name);
            if (it != row.sources.end() && it->second.energy) {
                means.push_back(it->second.mean_power_w);
            }
        }
        if (!means.empty()) box_rows.emplace_back(name, report::boxplot_stats(means));
    }
    if (!box_rows.empty()) {
        write_output(o.out_dir, "boxplot_epoch_power.csv", report::boxplot_csv(box_rows));
    }

    if (!reference.empty()) {
        for (const auto& g : loaded.gpus) {
            std::vector<std::pair<double, double>> scatter;
            std::vector<report::DiffRow> diff;
            for (const auto& row : table) {
                auto is = row.sources.find(g.source_id);
                auto ir = row.sources.find(reference);
                if (is == row.sources.end() || ir == row.sources.end()) continue;
                if (!is->second.energy || !ir->second.energy) continue;
                scatter.emplace_back(static_cast<double>(is->second.sample_count),
                                     ir->second.energy->joules());
                diff.push_back(
                    {row.start_s, ir->second.mean_power_w, is->second.mean_power_w});
            }
            if (scatter.empty()) continue;
            write_output(o.out_dir, fmt::format("scatter_count_energy_{}.csv", g.source_id),
                         report::scatter_csv("sample_count", "epoch_energy_j", scatter));
            write_output(o.out_dir, fmt::format("epoch_power_diff_{}.csv", g.source_id),
                         report::timeseries_diff_csv(diff));
        }
    }
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
    std::string session_dir;
    SessionOverrides overrides;
    std::string profile_path;
    std::string out_dir = ".";
    double pue = 1.0;
    double intensity_g_per_kwh = 0.0;
};

void cmd_report(const ReportOpts& o) {
    auto loaded = load_session(o.session_dir, o.overrides, MeterAlignment{}, 0.0);
    const auto& log = loaded.session;
    double t0 = core::session_start_s(log);
    double t1 = core::session_end_s(log);
    auto warnings = loaded.warnings;

    report::HolisticInputs inputs;
    inputs.memory_gb = log.memory_gb;
    inputs.duration_s = t1 - t0;
    inputs.pue = o.pue;

    for (const auto& g : loaded.gpus) {
        try {
            inputs.e_gpu += core::integrate_power(g, t0, t1);
        } catch (const EmptyWindowError&) {
            warnings.push_back(
                fmt::format("{} has no samples inside the session window", g.source_id));
        }
    }
    if (auto cpu = loaded.rapl.find(core::RaplDomain::cpu_package); cpu != loaded.rapl.end()) {
        inputs.e_cpu = core::counter_delta(cpu->second, t0, t1);
    } else {
        warnings.push_back("no cpu_package counter; CPU energy counted as zero");
    }
    if (auto dram = loaded.rapl.find(core::RaplDomain::dram); dram != loaded.rapl.end()) {
        inputs.e_mem_measured = core::counter_delta(dram->second, t0, t1);
    } else {
        warnings.push_back(fmt::format("no dram counter; memory estimated at {} W",
                                       report::memory_power_estimate_w(log.memory_gb)));
    }
    report::validate(inputs);

    // Prefer the tracker's own cumulative log when the session ships one;
    // otherwise apply the estimator model to our measured components.
    core::EnergyQuantity codecarbon;
    std::string codecarbon_source;
    if (loaded.codecarbon.size() >= 2) {
        codecarbon = core::EnergyQuantity::from_joules(
            (loaded.codecarbon.back().total_j() - loaded.codecarbon.front().total_j()) *
            o.pue);
        codecarbon_source = "tracker_log";
    } else {
        codecarbon = report::codecarbon_energy(inputs);
        codecarbon_source = "component_model";
    }
    double codecarbon_co2 = report::co2eq_g(codecarbon, o.intensity_g_per_kwh);

    std::optional<calibrate::CalibrationProfile> profile;
    if (!o.profile_path.empty()) {
        profile = calibrate::parse_profile(read_file(o.profile_path), o.profile_path);
    }
    std::optional<report::HolisticEstimate> bounded;
    std::optional<double> codecarbon_deviation;
    if (profile) {
        bounded = report::bounded_holistic_energy(inputs, *profile, o.intensity_g_per_kwh);
        codecarbon_deviation = report::deviation_percent(codecarbon, bounded->point);
    } else {
        warnings.push_back("no calibration profile; only the estimator model is reported");
    }

    nlohmann::ordered_json doc;
    doc["schema"] = "wattscope/holistic/1";
    doc["session"] = {{"session_id", log.session_id},
                      {"duration_s", inputs.duration_s},
                      {"memory_gb", log.memory_gb},
                      {"gpu_count", log.gpu_count}};
    doc["pue"] = inputs.pue;
    doc["intensity_g_per_kwh"] = o.intensity_g_per_kwh;
    doc["inputs"] = {{"gpu", energy_json(inputs.e_gpu)},
                     {"cpu", energy_json(inputs.e_cpu)},
                     {"memory", inputs.e_mem_measured
                                    ? energy_json(*inputs.e_mem_measured)
                                    : nlohmann::ordered_json(nullptr)},
                     {"memory_model_w", report::memory_power_estimate_w(log.memory_gb)}};
    doc["codecarbon"] = {{"source", codecarbon_source},
                         {"energy", energy_json(codecarbon)},
                         {"co2eq_g", codecarbon_co2},
                         {"deviation_vs_calibrated_pct",
                          codecarbon_deviation ? nlohmann::ordered_json(*codecarbon_deviation)
                                               : nlohmann::ordered_json(nullptr)}};
    if (bounded) {
        doc["calibrated"] = {{"method", report::to_string(bounded->method)},
                             {"lower", energy_json(bounded->lower)},
                             {"point", energy_json(bounded->point)},
                             {"upper", energy_json(bounded->upper)},
                             {"co2eq_g", bounded->co2eq_g},
                             {"memory_estimated", bounded->memory_estimated}};
    } else {
        doc["calibrated"] = nullptr;
    }
    doc["warnings"] = warnings;

    for (const auto& w : warnings) fmt::print(stderr, "warning: {}\n", w);
    fmt::print("session {}: duration_s={} pue={}\n", log.session_id, inputs.duration_s,
               inputs.pue);
    fmt::print("codecarbon_wh={}", codecarbon.watt_hours());
    if (o.intensity_g_per_kwh > 0.0) fmt::print(" co2eq_g={}", codecarbon_co2);
    fmt::print("\n");
    if (bounded) {
        fmt::print("calibrated method={} lower_wh={} point_wh={} upper_wh={}",
                   report::to_string(bounded->method), bounded->lower.watt_hours(),
                   bounded->point.watt_hours(), bounded->upper.watt_hours());
        if (o.intensity_g_per_kwh > 0.0) fmt::print(" co2eq_g={}", bounded->co2eq_g);
        fmt::print("\n");
    }
    write_output(o.out_dir, "holistic.json", doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
    std::string spec_path;
    std::string out_dir = ".";
};

void cmd_synth(const SynthOpts& o) {
    auto job = synth::parse_synth_spec(read_file(o.spec_path), o.spec_path);
    auto generated = synth::generate_session(job.workload, job.samplers);
    synth::write_session_dir(o.out_dir, generated);

    for (const auto& w : generated.warnings) fmt::print(stderr, "warning: {}\n", w);
    double duration = core::session_end_s(generated.session) -
                      core::session_start_s(generated.session);
    fmt::print("session {}: {} epochs over {} s, {} gpu trace(s)\n",
               generated.session.session_id, generated.session.epochs.size(), duration,
               generated.gpu_sampled.size());
    fmt::print("wrote {}\n", o.out_dir);
}

// ---------------------------------------------------------------------------
// collect

std::atomic<bool> g_stop{false};

void request_stop(int) { g_stop.store(true); }

struct CollectOpts {
    std::optional<double> duration_s;
    double rate_hz = 10.0;
    std::string powercap_root = "/sys/class/powercap";
    std::string gpu_command = "nvidia-smi --query-gpu=power.draw --format=csv,noheader";
    std::string out_dir = ".";
};

void cmd_collect(const CollectOpts& o) {
    collector::CollectorConfig config;
    config.rate_hz = o.rate_hz;
    config.duration_s = o.duration_s;
    config.powercap_root = o.powercap_root;
    config.gpu_query_command = o.gpu_command;
    config.output_dir = o.out_dir;
    collector::validate(config);
    fs::create_directories(o.out_dir);

    std::signal(SIGINT, request_stop);
    std::signal(SIGTERM, request_stop);
    auto result = collector::run_collector(config, collector::make_system_readers(config),
                                           &g_stop);

    for (const auto& w : result.warnings) fmt::print(stderr, "warning: {}\n", w);
    for (const auto& f : result.files_written) fmt::print("wrote {}\n", f);
    fmt::print("gpu_samples={} rapl_snapshots={} achieved_rate_hz={:.3f}\n",
               result.gpu_sample_count, result.rapl_sample_count, result.achieved_rate_hz);
}

void add_out_option(CLI::App* cmd, std::string& out_dir) {
    cmd->add_option("-o,--out", out_dir, "output directory")
        ->envname("WATTSCOPE_OUT")
        ->capture_default_str();
}

void add_session_overrides(CLI::App* cmd, SessionOverrides& ov) {
    cmd->add_option("--session", ov.session, "session log path (default <dir>/session.csv)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--meter", ov.meter, "meter export path (default <dir>/meter.csv)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--rapl", ov.rapl, "counter log path (default <dir>/rapl.csv)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--codecarbon", ov.codecarbon,
                    "tracker log path (default <dir>/codecarbon.csv)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--gpu", ov.gpus, "gpu trace paths (default <dir>/gpu_<i>.csv)")
        ->check(CLI::ExistingFile);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wattscope: measurement QA for GPU training-energy benchmarks"};
    app.require_subcommand(1);

    CalibrateOpts cal;
    auto* calibrate_cmd = app.add_subcommand(
        "calibrate", "measure the node's off-socket power floors from metered runs");
    calibrate_cmd->add_option("--idle", cal.idle_dir, "session directory of the idle run")
        ->required()
        ->check(CLI::ExistingDirectory);
    calibrate_cmd->add_option("--busy", cal.busy_dir, "session directory of the stress run")
        ->required()
        ->check(CLI::ExistingDirectory);
    calibrate_cmd
        ->add_option("--load", cal.load_dir, "session directory of a realistic-load run")
        ->check(CLI::ExistingDirectory);
    calibrate_cmd
        ->add_option("--margin-s", cal.margin_s,
                     "seconds trimmed off each window end to drop ramp transients")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    add_out_option(calibrate_cmd, cal.out_dir);
    calibrate_cmd->callback([&] { cmd_calibrate(cal); });

    ValidateOpts val;
    bool val_paper_defaults = false;
    auto* validate_cmd = app.add_subcommand(
        "validate", "per-epoch energy table, correlations, KS tests and eCDF gaps");
    validate_cmd->add_option("session_dir", val.session_dir, "session directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    validate_cmd->add_option("--profile", val.profile_path, "calibration profile to attach")
        ->check(CLI::ExistingFile);
    auto* k_opt = validate_cmd
                      ->add_option("--k", val.k,
                                   "absolute undersampling floor: flag epochs with <= k samples")
                      ->check(CLI::PositiveNumber)
                      ->capture_default_str();
    auto* ratio_opt =
        validate_cmd
            ->add_option("--ratio", val.ratio,
                         "ratio policy instead: flag epochs below this share of expected samples")
            ->check(CLI::Range(0.0, 1.0))
            ->excludes(k_opt);
    validate_cmd->add_option("--alpha", val.alpha, "KS rejection level")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    validate_cmd->add_option("--min-gap-w", val.min_gap_w, "minimum eCDF gap width reported")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    validate_cmd
        ->add_option("--rate-hz", val.rate_hz,
                     "override the expected GPU sampling rate (0 keeps per-file values)")
        ->check(CLI::NonNegativeNumber);
    validate_cmd->add_option("--jobs", val.jobs, "worker threads for the epoch table")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
    validate_cmd->add_flag("--paper-defaults", val_paper_defaults,
                           "pin the replication policy set: absolute k=10, alpha 0.05, "
                           "min gap 10 W, rate 10 Hz");
    validate_cmd
        ->add_option("--meter-offset-s", val.alignment.offset_s,
                     "seconds added to meter timestamps (session = meter + offset)")
        ->capture_default_str();
    validate_cmd->add_flag("--align-meter", val.alignment.from_marker,
                           "estimate the meter clock offset from the first power edge");
    validate_cmd
        ->add_option("--min-step-w", val.alignment.min_step_w,
                     "smallest power rise accepted as the alignment edge")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_session_overrides(validate_cmd, val.overrides);
    add_out_option(validate_cmd, val.out_dir);
    validate_cmd->callback([&] {
        val.use_ratio = ratio_opt->count() > 0;
        if (val_paper_defaults) {
            val.use_ratio = false;
            val.k = 10;
            val.alpha = 0.05;
            val.min_gap_w = 10.0;
            val.rate_hz = 10.0;
        }
        cmd_validate(val);
    });

    ReportOpts rep;
    auto* report_cmd =
        app.add_subcommand("report", "bounded whole-run energy with CO2 equivalents");
    report_cmd->add_option("session_dir", rep.session_dir, "session directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    report_cmd->add_option("--profile", rep.profile_path, "calibration profile")
        ->check(CLI::ExistingFile);
    report_cmd->add_option("--pue", rep.pue, "power usage effectiveness factor")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    report_cmd
        ->add_option("--intensity", rep.intensity_g_per_kwh,
                     "grid carbon intensity in gCO2eq per kWh")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    add_session_overrides(report_cmd, rep.overrides);
    add_out_option(report_cmd, rep.out_dir);
    report_cmd->callback([&] { cmd_report(rep); });

    SynthOpts syn;
    auto* synth_cmd =
        app.add_subcommand("synth", "generate a synthetic session with known ground truth");
    synth_cmd->add_option("spec", syn.spec_path, "synthesis spec (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    add_out_option(synth_cmd, syn.out_dir);
    synth_cmd->callback([&] { cmd_synth(syn); });

    CollectOpts col;
    auto* collect_cmd = app.add_subcommand(
        "collect", "sample live GPU power and energy counters into trace files");
    collect_cmd
        ->add_option("--duration-s", col.duration_s,
                     "seconds to collect (omit to run until Ctrl-C)")
        ->check(CLI::NonNegativeNumber);
    collect_cmd->add_option("--rate-hz", col.rate_hz, "sampling rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    collect_cmd
        ->add_option("--powercap-root", col.powercap_root, "power-cap sysfs tree to scan")
        ->capture_default_str();
    collect_cmd->add_option("--gpu-command", col.gpu_command, "GPU power query command")
        ->capture_default_str();
    add_out_option(collect_cmd, col.out_dir);
    collect_cmd->callback([&] { cmd_collect(col); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        app.exit(e);
        return 64;
    } catch (const FormatError& e) {
        fmt::print(stderr, "wattscope: {}\n", e.what());
        return 65;
    } catch (const DomainError& e) {
        fmt::print(stderr, "wattscope: {}\n", e.what());
        return 2;
    } catch (const UsageError& e) {
        fmt::print(stderr, "wattscope: {}\n", e.what());
        return 64;
    } catch (const std::exception& e) {
        fmt::print(stderr, "wattscope: {}\n", e.what());
        return 1;
    }
    return 0;
}
