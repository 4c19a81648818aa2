// Release gate: one self-contained check per shipping requirement, each
// printing a single PASS/FAIL line. Exits nonzero when anything fails.
//
// The checks combine exact-arithmetic fixtures (floors, units, wraps), a
// synthetic measurement study that must reproduce the known sampler
// pathologies, and full-pipeline determinism through the installed binary.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ks_oracle.hpp"
#include "wattscope/analysis.hpp"
#include "wattscope/calibrate.hpp"
#include "wattscope/core.hpp"
#include "wattscope/errors.hpp"
#include "wattscope/ingest.hpp"
#include "wattscope/report.hpp"
#include "wattscope/synth.hpp"

namespace fs = std::filesystem;
using namespace wattscope;

namespace {

// Pinned gate tolerances and thresholds.
constexpr double kFloorTolW = 1e-9;          // calibration floor reproduction
constexpr double kWidthRelTol = 1e-9;        // interval width vs closed form
constexpr double kStatTol = 1e-12;           // statistic vs oracle agreement
constexpr double kUnitRelTol = 1e-15;        // unit conversion round trips
constexpr double kRawEpochPearsonMax = 0.80; // before undersampling correction
constexpr double kCorrectedPearsonMin = 0.90;
constexpr double kFullRunPearsonMin = 0.98;
constexpr double kCountRawPearsonMin = 0.3;
constexpr double kCountCorrectedPearsonMax = 0.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Deterministic across platforms, unlike the stdlib distributions.
struct Rng {
    std::uint64_t state;

    double u01() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
    double in(double lo, double hi) { return lo + (hi - lo) * u01(); }
};

// ---------------------------------------------------------------------------
// 1. memory power model

Outcome check_memory_model() {
    double big = report::memory_power_estimate_w(2000.0);
    double small = report::memory_power_estimate_w(8.0);
    bool pass = big == 750.0 && small == 3.0;
    return {pass, fmt::format("2000 GB -> {} W, 8 GB -> {} W (want 750 and 3 exactly)", big,
                              small)};
}

// ---------------------------------------------------------------------------
// 2. off-socket floor calibration
//
// Constant-power runs on grids where every mean is exact in binary: meter
// and GPU every 0.25 s, counters every second.

struct CalibrationRun {
    core::PowerTrace meter;
    core::PowerTrace gpu;
    core::EnergyCounterTrace cpu;
    core::EnergyCounterTrace dram;
};

CalibrationRun constant_run(double cpu_w, double dram_w, double gpu_w, double off_w,
                            double duration_s) {
    CalibrationRun run;
    const double total = cpu_w + dram_w + gpu_w + off_w;
    run.meter.source_id = "meter";
    run.meter.nominal_interval_s = 0.25;
    run.gpu.source_id = "gpu";
    run.gpu.nominal_interval_s = 0.25;
    for (int k = 0; k < static_cast<int>(duration_s * 4.0); ++k) {
        run.meter.samples.push_back({k * 0.25, total});
        run.gpu.samples.push_back({k * 0.25, gpu_w});
    }
    auto fill = [&](core::EnergyCounterTrace& tr, core::RaplDomain domain, double watts) {
        tr.domain = domain;
        tr.wrap_range_uj = 262143328850.0;
        for (int t = 0; t <= static_cast<int>(duration_s); ++t) {
            tr.readings.push_back({static_cast<double>(t), t * watts * 1e6});
        }
    };
    fill(run.cpu, core::RaplDomain::cpu_package, cpu_w);
    fill(run.dram, core::RaplDomain::dram, dram_w);
    return run;
}

Outcome check_calibration() {
    auto floor_of = [](const CalibrationRun& run) {
        return calibrate::off_socket_power(run.meter, run.cpu, run.dram, run.gpu, 2.0, 58.0);
    };
    double idle = floor_of(constant_run(100.0, 20.0, 75.0, 783.0, 60.0));
    double busy = floor_of(constant_run(150.0, 30.0, 75.0, 941.0, 60.0));
    bool floors = std::fabs(idle - 783.0) <= kFloorTolW && std::fabs(busy - 941.0) <= kFloorTolW;

    bool accepts = false;
    try {
        auto profile = calibrate::build_profile(783.0, 941.0, 811.0);
        accepts = profile.p_idle_w == 783.0 && profile.p_busy_w == 941.0 &&
                  profile.p_load_w && *profile.p_load_w == 811.0;
    } catch (const DomainError&) {
    }
    bool rejects = false;
    try {
        calibrate::build_profile(941.0, 783.0);
    } catch (const InconsistencyError&) {
        rejects = true;
    }

    return {floors && accepts && rejects,
            fmt::format("idle residual {} W, busy residual {} W, bracket accepted={} "
                        "inverted rejected={}",
                        idle, busy, accepts, rejects)};
}

// ---------------------------------------------------------------------------
// 3 and 4 share one synthetic study: 24 sessions of 200 epochs with a
// sampler that collapses to 10 samples in half the low-power epochs.

struct Study {
    std::vector<double> measured_j;
    std::vector<double> truth_j;
    std::vector<double> counts;
    std::vector<bool> flagged;
    std::vector<double> run_measured_raw, run_truth_raw;
    std::vector<double> run_measured_corr, run_truth_corr;
};

Study run_pathology_study() {
    constexpr int kSessions = 24;
    constexpr int kEpochs = 200;
    Study study;
    Rng rng{0x0ff50c4e7001ull};

    for (int s = 0; s < kSessions; ++s) {
        synth::WorkloadSpec w;
        w.session_id = fmt::format("study-{}", s);
        w.epoch_count = kEpochs;
        w.low_power_w = 146.0;
        w.high_power_w = 305.0;
        w.low_fraction = 0.4;
        w.cpu_power_w = 150.0;
        w.mem_power_w = 12.0;
        w.off_socket = synth::OffSocketModel::constant(783.0);
        w.seed = 9000 + static_cast<std::uint64_t>(s);
        w.epoch_durations_s.assign(kEpochs, 1.0);

        // Low-power epochs run longer than compute epochs, with a
        // per-session scale so whole-run energies spread out.
        auto mask = synth::low_epoch_mask(w);
        double scale = rng.in(0.9, 1.1);
        for (int i = 0; i < kEpochs; ++i) {
            w.epoch_durations_s[i] =
                mask[i] ? scale * rng.in(11.0, 15.0) : scale * rng.in(6.5, 7.5);
        }

        auto generated = synth::generate_session(
            w, {synth::SamplerSpec::rate_collapse(200.0, 10, 10.0, 0.5)});

        std::map<std::string, analysis::TraceVariant> sources{
            {"gpu_0", generated.gpu_sampled.front()}};
        auto table = analysis::epoch_energy_table(generated.session, sources,
                                                  analysis::UndersamplingPolicy::absolute(10));

        double m_raw = 0.0, t_raw = 0.0, m_corr = 0.0, t_corr = 0.0;
        for (int i = 0; i < kEpochs; ++i) {
            const auto& cell = table[static_cast<std::size_t>(i)].sources.at("gpu_0");
            if (!cell.energy) continue;
            double measured = cell.energy->joules();
            double truth = generated.analytic.epochs[static_cast<std::size_t>(i)].gpu_j;
            study.measured_j.push_back(measured);
            study.truth_j.push_back(truth);
            study.counts.push_back(static_cast<double>(cell.sample_count));
            study.flagged.push_back(cell.undersampled);
            m_raw += measured;
            t_raw += truth;
            if (!cell.undersampled) {
                m_corr += measured;
                t_corr += truth;
            }
        }
        study.run_measured_raw.push_back(m_raw);
        study.run_truth_raw.push_back(t_raw);
        study.run_measured_corr.push_back(m_corr);
        study.run_truth_corr.push_back(t_corr);
    }
    return study;
}

Outcome check_epoch_correlation(const Study& study) {
    double raw = analysis::pearson(study.measured_j, study.truth_j);

    std::vector<double> m_kept, t_kept;
    for (std::size_t i = 0; i < study.flagged.size(); ++i) {
        if (!study.flagged[i]) {
            m_kept.push_back(study.measured_j[i]);
            t_kept.push_back(study.truth_j[i]);
        }
    }
    double corrected = analysis::pearson(m_kept, t_kept);
    double full_raw = analysis::pearson(study.run_measured_raw, study.run_truth_raw);
    double full_corr = analysis::pearson(study.run_measured_corr, study.run_truth_corr);

    bool pass = raw < kRawEpochPearsonMax && corrected > kCorrectedPearsonMin &&
                full_raw > kFullRunPearsonMin && full_corr > kFullRunPearsonMin;
    return {pass, fmt::format("epoch r raw {:.3f} (< {}), corrected {:.3f} (> {}), "
                              "whole-run r raw {:.4f} corrected {:.4f} (> {})",
                              raw, kRawEpochPearsonMax, corrected, kCorrectedPearsonMin,
                              full_raw, full_corr, kFullRunPearsonMin)};
}

Outcome check_count_energy_flip(const Study& study) {
    double raw = analysis::pearson(study.counts, study.measured_j);

    std::vector<double> c_kept, m_kept;
    for (std::size_t i = 0; i < study.flagged.size(); ++i) {
        if (!study.flagged[i]) {
            c_kept.push_back(study.counts[i]);
            m_kept.push_back(study.measured_j[i]);
        }
    }
    double corrected = analysis::pearson(c_kept, m_kept);

    bool pass = raw > kCountRawPearsonMin && corrected < kCountCorrectedPearsonMax;
    return {pass, fmt::format("count-energy r raw {:.3f} (> {}), corrected {:.3f} (< {})",
                              raw, kCountRawPearsonMin, corrected,
                              kCountCorrectedPearsonMax)};
}

// ---------------------------------------------------------------------------
// 5. distribution gap detection

Outcome check_gap_detection() {
    std::vector<double> values{122.0, 125.0, 125.0, 128.0, 130.0, 130.0,
                               150.0, 152.0, 155.0, 155.0, 158.0};
    auto gaps = analysis::ecdf_gaps(values, 10.0);
    bool pass = gaps.size() == 1 && gaps.front().low_w == 130.0 && gaps.front().high_w == 150.0;
    std::string found = gaps.empty() ? "none"
                                     : fmt::format("[{}, {}] W x{}", gaps.front().low_w,
                                                   gaps.front().high_w, gaps.size());
    return {pass, fmt::format("no mass in (130, 150) W -> gap {} (want exactly [130, 150])",
                              found)};
}

// ---------------------------------------------------------------------------
// 6. exact KS p-values vs enumeration

Outcome check_ks_exact() {
    Rng rng{0x6b73ull};
    int compared = 0;
    double worst = 0.0;
    for (int n = 1; n <= 6; ++n) {
        for (int m = 1; m <= 6; ++m) {
            for (int rep = 0; rep < 3; ++rep) {
                std::vector<double> xs, ys;
                // A coarse grid forces ties; the third rep uses spread-out
                // values so the all-distinct path is covered too.
                for (int i = 0; i < n; ++i) {
                    xs.push_back(rep < 2 ? std::floor(rng.in(0.0, 5.0)) * 10.0
                                         : rng.in(0.0, 1000.0));
                }
                for (int j = 0; j < m; ++j) {
                    ys.push_back(rep < 2 ? std::floor(rng.in(0.0, 5.0)) * 10.0
                                         : rng.in(0.0, 1000.0));
                }
                auto res = analysis::ks_two_sample(xs, ys);
                if (!res.exact) return {false, fmt::format("n={} m={} not exact", n, m)};
                worst = std::max(worst, std::fabs(res.statistic - ks_oracle::statistic(xs, ys)));
                worst = std::max(worst, std::fabs(res.p_value - ks_oracle::p_value(xs, ys)));
                ++compared;
            }
        }
    }

    bool never_rejects = true;
    for (int n : {1, 2, 5, 10, 60}) {
        std::vector<double> same;
        for (int i = 0; i < n; ++i) same.push_back(rng.in(50.0, 500.0));
        if (analysis::ks_two_sample(same, same, 0.05).reject) never_rejects = false;
    }

    bool pass = worst <= kStatTol && never_rejects;
    return {pass, fmt::format("{} enumerated cases, max |delta| {:.2e} (tol {:.0e}); "
                              "identical samples never reject: {}",
                              compared, worst, kStatTol, never_rejects)};
}

// ---------------------------------------------------------------------------
// 7. calibrated interval containment

Outcome check_containment() {
    constexpr int kSessions = 1000;
    const calibrate::CalibrationProfile profile{783.0, 941.0, std::nullopt};
    Rng rng{0xb0a7edull};
    int contained = 0;
    double worst_width_rel = 0.0;

    for (int s = 0; s < kSessions; ++s) {
        synth::WorkloadSpec w;
        w.session_id = fmt::format("bounds-{}", s);
        w.epoch_count = 20;
        w.low_power_w = 146.0;
        w.high_power_w = 305.0;
        w.low_fraction = 0.4;
        w.cpu_power_w = 150.0;
        w.mem_power_w = 12.0;
        w.off_socket = synth::OffSocketModel::constant(rng.in(783.0, 941.0));
        w.seed = 100000 + static_cast<std::uint64_t>(s);
        for (int i = 0; i < w.epoch_count; ++i) {
            w.epoch_durations_s.push_back(rng.in(4.0, 6.0));
        }
        double pue = rng.in(1.0, 2.0);

        auto generated = synth::generate_session(w, {synth::SamplerSpec::ideal(10.0)});
        double t0 = core::session_start_s(generated.session);
        double t1 = core::session_end_s(generated.session);

        report::HolisticInputs inputs;
        inputs.e_gpu = core::integrate_power(generated.gpu_sampled.front(), t0, t1);
        inputs.e_cpu = core::counter_delta(generated.cpu_counter, t0, t1);
        inputs.e_mem_measured = core::counter_delta(generated.dram_counter, t0, t1);
        inputs.memory_gb = w.memory_gb;
        inputs.duration_s = t1 - t0;
        inputs.pue = pue;

        auto est = report::bounded_holistic_energy(inputs, profile, 381.0);
        double truth = generated.analytic.meter_j * pue;
        if (est.lower.joules() <= truth && truth <= est.upper.joules()) ++contained;

        double width = est.upper.joules() - est.lower.joules();
        double expected = (profile.p_busy_w - profile.p_idle_w) * inputs.duration_s * pue;
        worst_width_rel = std::max(worst_width_rel,
                                   std::fabs(width - expected) / expected);
    }

    bool pass = contained == kSessions && worst_width_rel <= kWidthRelTol;
    return {pass, fmt::format("{}/{} intervals contain the true node energy; max width "
                              "error {:.2e} (tol {:.0e})",
                              contained, kSessions, worst_width_rel, kWidthRelTol)};
}

// ---------------------------------------------------------------------------
// 8. bounded report beats the estimator model

Outcome check_deviation_reduction() {
    synth::WorkloadSpec w;
    w.session_id = "deviation";
    w.epoch_count = 20;
    w.low_power_w = 146.0;
    w.high_power_w = 305.0;
    w.low_fraction = 0.4;
    w.cpu_power_w = 150.0;
    w.mem_power_w = 12.0; // the node's memory really draws 12 W
    w.off_socket = synth::OffSocketModel::constant(900.0);
    w.seed = 42;
    w.memory_gb = 2000.0; // while the model assumes 3 W per 8 GB = 750 W
    Rng rng{0xd17aull};
    for (int i = 0; i < w.epoch_count; ++i) w.epoch_durations_s.push_back(rng.in(6.0, 10.0));

    auto generated = synth::generate_session(w, {synth::SamplerSpec::ideal(10.0)});
    double t0 = core::session_start_s(generated.session);
    double t1 = core::session_end_s(generated.session);

    report::HolisticInputs inputs;
    inputs.e_gpu = core::integrate_power(generated.gpu_sampled.front(), t0, t1);
    inputs.e_cpu = core::counter_delta(generated.cpu_counter, t0, t1);
    inputs.e_mem_measured = core::counter_delta(generated.dram_counter, t0, t1);
    inputs.memory_gb = w.memory_gb;
    inputs.duration_s = t1 - t0;
    inputs.pue = 1.0;

    auto truth = core::EnergyQuantity::from_joules(generated.analytic.meter_j);
    auto model = report::codecarbon_energy(inputs);
    auto est = report::bounded_holistic_energy(
        inputs, calibrate::CalibrationProfile{783.0, 941.0, std::nullopt}, 0.0);

    double model_dev = std::fabs(report::deviation_percent(model, truth));
    double worst_bound_dev = std::max(std::fabs(report::deviation_percent(est.lower, truth)),
                                      std::fabs(report::deviation_percent(est.upper, truth)));

    bool pass = model_dev > worst_bound_dev;
    return {pass, fmt::format("estimator model off by {:.2f} %, calibrated bounds off by at "
                              "most {:.2f} %",
                              model_dev, worst_bound_dev)};
}

// ---------------------------------------------------------------------------
// 9. core numerics properties

Outcome check_core_numerics() {
    Rng rng{0xc04eull};
    double worst_add = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        core::PowerTrace tr;
        tr.source_id = "t";
        tr.nominal_interval_s = 0.1;
        for (int k = 0; k < 300; ++k) tr.samples.push_back({k * 0.1, rng.in(50.0, 400.0)});
        // Splitting at a sample timestamp must cost nothing with either rule.
        double cut = tr.samples[73].t_s;
        double end = tr.samples.back().t_s;
        for (auto method : {core::IntegrationMethod::rectangle,
                            core::IntegrationMethod::trapezoid}) {
            double whole = core::integrate_power(tr, 0.0, end, method).joules();
            double split = core::integrate_power(tr, 0.0, cut, method).joules() +
                           core::integrate_power(tr, cut, end, method).joules();
            worst_add = std::max(worst_add, std::fabs(whole - split) / whole);
        }
    }

    core::EnergyCounterTrace wrapped;
    wrapped.domain = core::RaplDomain::cpu_package;
    wrapped.wrap_range_uj = 262143328850.0;
    wrapped.readings = {{0.0, 262143328000.0}, {1.0, 150.0}};
    double wrap_j = core::counter_delta(wrapped, 0.0, 1.0).joules();
    bool wrap_ok = std::fabs(wrap_j - 1e-3) <= 1e-15;

    double worst_unit = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        double v = rng.in(1e-3, 1e6);
        worst_unit = std::max(
            worst_unit, std::fabs(core::EnergyQuantity::from_watt_hours(v).watt_hours() - v) / v);
        worst_unit = std::max(worst_unit,
                              std::fabs(core::EnergyQuantity::from_kilowatt_hours(v)
                                            .kilowatt_hours() -
                                        v) /
                                  v);
    }

    // Correlations against algebraically different formulations.
    double worst_corr = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x, y;
        for (int i = 0; i < 50; ++i) {
            x.push_back(rng.in(-5.0, 5.0));
            y.push_back(0.4 * x.back() + rng.in(-5.0, 5.0));
        }
        double n = 50.0;
        double sx = std::accumulate(x.begin(), x.end(), 0.0);
        double sy = std::accumulate(y.begin(), y.end(), 0.0);
        double sxx = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
        double syy = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
        double sxy = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        double raw_sums = (n * sxy - sx * sy) /
                          std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
        worst_corr = std::max(worst_corr, std::fabs(analysis::pearson(x, y) - raw_sums));
    }
    std::vector<double> tie_x{1, 2, 3, 4, 5}, tie_y{5, 6, 7, 8, 7};
    std::vector<double> rank_x{1, 2, 3, 4, 5}, rank_y{1, 2, 3.5, 5, 3.5};
    worst_corr = std::max(worst_corr, std::fabs(analysis::spearman(tie_x, tie_y) -
                                                analysis::pearson(rank_x, rank_y)));

    bool pass = worst_add <= kStatTol && wrap_ok && worst_unit <= kUnitRelTol &&
                worst_corr <= kStatTol;
    return {pass, fmt::format("integration split error {:.2e}, wrap delta {} J (want 0.001), "
                              "unit round-trip error {:.2e}, correlation oracle error {:.2e}",
                              worst_add, wrap_j, worst_unit, worst_corr)};
}

// ---------------------------------------------------------------------------
// 10. pipeline determinism through the installed binary

int run_quiet(const std::string& cmd) {
    int status = std::system(fmt::format("{} >/dev/null 2>&1", cmd).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot read {}", path.string()));
    return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome check_pipeline_determinism() {
    fs::path base = fs::temp_directory_path() / "wattscope_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);

    std::string spec = R"({
      "session_id": "determinism",
      "epoch_count": 40,
      "low_power_w": 146, "high_power_w": 305, "low_fraction": 0.4,
      "cpu_power_w": 150, "mem_power_w": 12, "off_socket": 850,
      "low_duration_range_s": [8, 12], "high_duration_range_s": [5, 7],
      "seed": 11,
      "samplers": [{"pathology": "rate_collapse", "threshold_w": 200, "collapsed_count": 10}]
    })";
    std::ofstream(base / "spec.json") << spec;
    std::ofstream(base / "cal.profile")
        << calibrate::write_profile(calibrate::build_profile(783.0, 941.0, 811.0));

    const std::string cli = WATTSCOPE_CLI_PATH;
    for (const char* run : {"a", "b"}) {
        fs::path dir = base / run;
        if (run_quiet(fmt::format("{} synth {} --out {}", cli, (base / "spec.json").string(),
                                  (dir / "session").string())) != 0 ||
            run_quiet(fmt::format("{} validate {} --paper-defaults --out {}",
                                  (cli), (dir / "session").string(),
                                  (dir / "analysis").string())) != 0 ||
            run_quiet(fmt::format("{} report {} --profile {} --pue 1.58 --intensity 381 "
                                  "--out {}",
                                  cli, (dir / "session").string(),
                                  (base / "cal.profile").string(),
                                  (dir / "holistic").string())) != 0) {
            return {false, fmt::format("pipeline run '{}' failed", run)};
        }
    }

    int artifacts = 0;
    for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
        if (!entry.is_regular_file()) continue;
        fs::path relative = fs::relative(entry.path(), base / "a");
        if (slurp(entry.path()) != slurp(base / "b" / relative)) {
            return {false, fmt::format("{} differs between identical runs",
                                       relative.string())};
        }
        ++artifacts;
    }
    fs::remove_all(base);

    bool pass = artifacts >= 10; // session files plus analysis and holistic outputs
    return {pass, fmt::format("{} artifacts byte-identical across repeated runs", artifacts)};
}

} // namespace

int main() {
    Study study = run_pathology_study();

    struct Criterion {
        const char* name;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria{
        {"memory power model", check_memory_model},
        {"off-socket floor calibration", check_calibration},
        {"undersampling correction restores epoch correlation",
         [&] { return check_epoch_correlation(study); }},
        {"sample-count correlation sign flip", [&] { return check_count_energy_flip(study); }},
        {"distribution gap detection", check_gap_detection},
        {"exact KS p-values vs enumeration", check_ks_exact},
        {"calibrated interval containment", check_containment},
        {"bounded report beats the estimator model", check_deviation_reduction},
        {"core numerics properties", check_core_numerics},
        {"pipeline determinism", check_pipeline_determinism},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].check();
        } catch (const std::exception& e) {
            outcome = {false, fmt::format("threw: {}", e.what())};
        }
        if (!outcome.pass) ++failed;
        fmt::print("{}  {:>2}  {}: {}\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                   criteria[i].name, outcome.detail);
    }
    if (failed == 0) {
        fmt::print("all {} acceptance checks passed\n", criteria.size());
        return 0;
    }
    fmt::print("{} of {} acceptance checks FAILED\n", failed, criteria.size());
    return 1;
}
