#include "wattscope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "wattscope/report.hpp"

namespace wattscope::synth {

namespace {

// The meter grid everything is generated on: ten samples per second, and
// epoch boundaries snapped to it, so rectangle integration of a
// piecewise-constant signal is exact.
constexpr double kMeterIntervalS = 0.1;
constexpr long long kTicksPerSecond = 10;

// Largest value a cumulative counter reaches before wrapping to zero.
// Matches the order of magnitude real package counters expose (~2.6e11 uJ,
// a few hundred wraps per day at node-level draw).
constexpr std::uint64_t kWrapRangeUj = 262'143'328'850ull;

// splitmix64. <random> distributions are implementation-defined, so the
// generator rolls its own draws to keep output stable across platforms.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n), rejection sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % n;
    }

    double gaussian() {
        double u1;
        do {
            u1 = u01();
        } while (u1 <= 0.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u01());
    }
};

// One independent stream per concern, so attaching another sampler never
// shifts the draws that decide epoch classes or counter phases.
enum StreamTag : std::uint64_t {
    kTagEpochClasses = 1,
    kTagCpuPhase = 2,
    kTagDramPhase = 3,
    kTagDurations = 4,
    kTagSamplerCollapse = 100, // + sampler index
    kTagSamplerNoise = 200,    // + sampler index
};

SplitMix64 stream(std::uint64_t seed, std::uint64_t tag) {
    SplitMix64 rng(seed ^ (tag * 0xD1B54A32D192ED03ull));
    rng.next();
    return rng;
}

void shuffle_indices(std::vector<int>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

long long snap_to_ticks(double duration_s) {
    return std::max<long long>(1, std::llround(duration_s * kTicksPerSecond));
}

double tick_time(long long tick) { return static_cast<double>(tick) / kTicksPerSecond; }

void require(bool ok, const std::string& message) {
    if (!ok) throw DomainError(message);
}

bool finite(double v) { return std::isfinite(v); }

} // namespace

OffSocketModel OffSocketModel::constant(double watts) {
    OffSocketModel m;
    m.kind = Kind::constant;
    m.constant_w = watts;
    return m;
}

OffSocketModel OffSocketModel::tracking(double low_w, double high_w) {
    OffSocketModel m;
    m.kind = Kind::tracks_load;
    m.low_w = low_w;
    m.high_w = high_w;
    return m;
}

double OffSocketModel::watts_for(bool low_epoch) const {
    if (kind == Kind::constant) return constant_w;
    return low_epoch ? low_w : high_w;
}

void validate(const WorkloadSpec& spec) {
    require(!spec.session_id.empty(), "workload needs a session id");
    require(spec.epoch_count >= 1, "epoch_count must be at least 1");
    require(!spec.epoch_durations_s.empty(),
            "epoch durations missing: give one value or one per epoch");
    require(spec.epoch_durations_s.size() == 1 ||
                spec.epoch_durations_s.size() == static_cast<std::size_t>(spec.epoch_count),
            fmt::format("expected 1 or {} epoch durations, got {}", spec.epoch_count,
                        spec.epoch_durations_s.size()));
    for (double d : spec.epoch_durations_s) {
        require(finite(d) && d > 0.0, "epoch durations must be positive");
    }
    require(finite(spec.low_fraction) && spec.low_fraction >= 0.0 && spec.low_fraction <= 1.0,
            "low_fraction must lie in [0, 1]");
    require(finite(spec.low_power_w) && spec.low_power_w >= 0.0,
            "low_power_w must be non-negative");
    require(finite(spec.high_power_w) && spec.low_power_w < spec.high_power_w,
            "low_power_w must be strictly below high_power_w");
    require(finite(spec.cpu_power_w) && spec.cpu_power_w >= 0.0,
            "cpu_power_w must be non-negative");
    require(finite(spec.mem_power_w) && spec.mem_power_w >= 0.0,
            "mem_power_w must be non-negative");
    if (spec.off_socket.kind == OffSocketModel::Kind::constant) {
        require(finite(spec.off_socket.constant_w) && spec.off_socket.constant_w >= 0.0,
                "off_socket draw must be non-negative");
    } else {
        require(finite(spec.off_socket.low_w) && spec.off_socket.low_w >= 0.0 &&
                    finite(spec.off_socket.high_w) && spec.off_socket.high_w >= 0.0,
                "off_socket draws must be non-negative");
    }
    require(finite(spec.memory_gb) && spec.memory_gb > 0.0, "memory_gb must be positive");
}

std::vector<bool> low_epoch_mask(const WorkloadSpec& spec) {
    require(spec.epoch_count >= 1, "epoch_count must be at least 1");
    require(finite(spec.low_fraction) && spec.low_fraction >= 0.0 && spec.low_fraction <= 1.0,
            "low_fraction must lie in [0, 1]");
    const int n = spec.epoch_count;
    const int n_low = static_cast<int>(std::lround(spec.low_fraction * n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = stream(spec.seed, kTagEpochClasses);
    shuffle_indices(order, rng);
    std::vector<bool> mask(n, false);
    for (int k = 0; k < n_low; ++k) mask[order[k]] = true;
    return mask;
}

std::vector<double> epoch_durations(const WorkloadSpec& spec) {
    validate(spec);
    std::vector<double> out(spec.epoch_count);
    for (int i = 0; i < spec.epoch_count; ++i) {
        double d = spec.epoch_durations_s.size() == 1
                       ? spec.epoch_durations_s[0]
                       : spec.epoch_durations_s[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = tick_time(snap_to_ticks(d));
    }
    return out;
}

SamplerSpec SamplerSpec::ideal(double rate_hz) {
    SamplerSpec s;
    s.nominal_rate_hz = rate_hz;
    s.pathology = Pathology::ideal;
    return s;
}

SamplerSpec SamplerSpec::rate_collapse(double threshold_w, int collapsed_count, double rate_hz,
                                       double collapse_fraction) {
    SamplerSpec s;
    s.nominal_rate_hz = rate_hz;
    s.pathology = Pathology::rate_collapse;
    s.threshold_w = threshold_w;
    s.collapsed_count = collapsed_count;
    s.collapse_fraction = collapse_fraction;
    return s;
}

SamplerSpec SamplerSpec::gaussian_noise(double sigma_w, double rate_hz) {
    SamplerSpec s;
    s.nominal_rate_hz = rate_hz;
    s.pathology = Pathology::gaussian_noise;
    s.sigma_w = sigma_w;
    return s;
}

void validate(const SamplerSpec& spec) {
    require(finite(spec.nominal_rate_hz) && spec.nominal_rate_hz > 0.0,
            "sampler rate must be positive");
    require(spec.collapsed_count >= 1, "collapsed_count must be at least 1");
    require(finite(spec.collapse_fraction) && spec.collapse_fraction >= 0.0 &&
                spec.collapse_fraction <= 1.0,
            "collapse_fraction must lie in [0, 1]");
    require(finite(spec.threshold_w) && spec.threshold_w >= 0.0,
            "threshold_w must be non-negative");
    require(finite(spec.sigma_w) && spec.sigma_w >= 0.0, "sigma_w must be non-negative");
}

namespace {

struct Grid {
    std::vector<long long> bounds_ticks; // size n+1, cumulative
    long long total_ticks = 0;

    int epoch_of(long long tick) const {
        auto it = std::upper_bound(bounds_ticks.begin(), bounds_ticks.end(), tick);
        return static_cast<int>(it - bounds_ticks.begin()) - 1;
    }
};

Grid make_grid(const std::vector<double>& durations) {
    Grid g;
    g.bounds_ticks.assign(1, 0);
    for (double d : durations) {
        g.bounds_ticks.push_back(g.bounds_ticks.back() + snap_to_ticks(d));
    }
    g.total_ticks = g.bounds_ticks.back();
    return g;
}

// Which epochs a rate_collapse sampler actually throttles: every eligible
// epoch when collapse_fraction is 1, otherwise a seeded pick of
// round(fraction * eligible) of them.
std::vector<int> pick_collapsed(const std::vector<int>& eligible, double fraction,
                                SplitMix64& rng) {
    auto chosen = eligible;
    const auto want = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(eligible.size())));
    if (want < chosen.size()) {
        shuffle_indices(chosen, rng);
        chosen.resize(want);
        std::sort(chosen.begin(), chosen.end());
    }
    return chosen;
}

} // namespace

GeneratedSession generate_session(const WorkloadSpec& workload,
                                  const std::vector<SamplerSpec>& samplers) {
    validate(workload);
    for (const auto& s : samplers) validate(s);

    GeneratedSession out;
    out.low_epochs = low_epoch_mask(workload);
    const auto durations = epoch_durations(workload);
    const Grid grid = make_grid(durations);
    const int n = workload.epoch_count;
    const int n_gpu = static_cast<int>(std::max<std::size_t>(1, samplers.size()));

    out.session.session_id = workload.session_id;
    out.session.memory_gb = workload.memory_gb;
    out.session.gpu_count = n_gpu;
    out.session.gpu_nominal_rate_hz = samplers.empty() ? 10.0 : samplers[0].nominal_rate_hz;
    for (int i = 0; i < n; ++i) {
        out.session.epochs.push_back(
            {tick_time(grid.bounds_ticks[static_cast<std::size_t>(i)]),
             tick_time(grid.bounds_ticks[static_cast<std::size_t>(i) + 1])});
    }

    // Per-epoch closed-form truth. meter_j uses the same summed power
    // expression as the meter trace below, so integrating the trace
    // reproduces these numbers to rounding.
    for (int i = 0; i < n; ++i) {
        const bool low = out.low_epochs[static_cast<std::size_t>(i)];
        const double dur = durations[static_cast<std::size_t>(i)];
        EpochTruth t;
        t.epoch_idx = i;
        t.start_s = out.session.epochs[static_cast<std::size_t>(i)].start_s;
        t.end_s = out.session.epochs[static_cast<std::size_t>(i)].end_s;
        t.duration_s = dur;
        t.low_power = low;
        t.gpu_w = low ? workload.low_power_w : workload.high_power_w;
        const double gpu_node_w = t.gpu_w * n_gpu;
        const double off_w = workload.off_socket.watts_for(low);
        t.gpu_j = gpu_node_w * dur;
        t.cpu_j = workload.cpu_power_w * dur;
        t.mem_j = workload.mem_power_w * dur;
        t.off_socket_j = off_w * dur;
        t.meter_j = (workload.cpu_power_w + workload.mem_power_w + gpu_node_w + off_w) * dur;
        out.analytic.epochs.push_back(t);
        out.analytic.gpu_j += t.gpu_j;
        out.analytic.cpu_j += t.cpu_j;
        out.analytic.mem_j += t.mem_j;
        out.analytic.off_socket_j += t.off_socket_j;
        out.analytic.meter_j += t.meter_j;
    }

    // Dense ground truth on the meter grid.
    out.meter.source_id = "meter";
    out.cpu.source_id = "cpu";
    out.mem.source_id = "mem";
    out.gpu_total.source_id = "gpu_total";
    out.off_socket.source_id = "off_socket";
    for (auto* trace : {&out.meter, &out.cpu, &out.mem, &out.gpu_total, &out.off_socket}) {
        trace->nominal_interval_s = kMeterIntervalS;
        trace->samples.reserve(static_cast<std::size_t>(grid.total_ticks));
    }
    {
        int epoch = 0;
        for (long long tick = 0; tick < grid.total_ticks; ++tick) {
            while (tick >= grid.bounds_ticks[static_cast<std::size_t>(epoch) + 1]) ++epoch;
            const bool low = out.low_epochs[static_cast<std::size_t>(epoch)];
            const double t = tick_time(tick);
            const double gpu_w =
                (low ? workload.low_power_w : workload.high_power_w) * n_gpu;
            const double off_w = workload.off_socket.watts_for(low);
            out.cpu.samples.push_back({t, workload.cpu_power_w});
            out.mem.samples.push_back({t, workload.mem_power_w});
            out.gpu_total.samples.push_back({t, gpu_w});
            out.off_socket.samples.push_back({t, off_w});
            out.meter.samples.push_back(
                {t, workload.cpu_power_w + workload.mem_power_w + gpu_w + off_w});
        }
    }

    // What each instrument recorded.
    for (std::size_t si = 0; si < samplers.size(); ++si) {
        const auto& sampler = samplers[si];
        bool collapse_active = sampler.pathology == SamplerSpec::Pathology::rate_collapse;
        if (collapse_active && sampler.threshold_w > workload.high_power_w) {
            out.warnings.push_back(fmt::format(
                "sampler {}: rate_collapse threshold {} W is above the high epoch power "
                "{} W; every epoch would throttle, so the pathology is disabled",
                si, sampler.threshold_w, workload.high_power_w));
            collapse_active = false;
        }

        std::vector<char> is_collapsed(static_cast<std::size_t>(n), 0);
        std::vector<int> collapsed;
        if (collapse_active) {
            std::vector<int> eligible;
            for (int i = 0; i < n; ++i) {
                const double power = out.low_epochs[static_cast<std::size_t>(i)]
                                         ? workload.low_power_w
                                         : workload.high_power_w;
                if (power < sampler.threshold_w) eligible.push_back(i);
            }
            auto rng = stream(workload.seed, kTagSamplerCollapse + si);
            collapsed = pick_collapsed(eligible, sampler.collapse_fraction, rng);
            for (int i : collapsed) is_collapsed[static_cast<std::size_t>(i)] = 1;
        }
        out.collapsed_epochs.push_back(std::move(collapsed));

        auto noise_rng = stream(workload.seed, kTagSamplerNoise + si);
        const bool noisy = sampler.pathology == SamplerSpec::Pathology::gaussian_noise;

        core::PowerTrace trace;
        trace.source_id = fmt::format("gpu_{}", si);
        trace.nominal_interval_s = 1.0 / sampler.nominal_rate_hz;
        const double total_s = tick_time(grid.total_ticks);
        int epoch = 0;
        long long taken_in_epoch = 0;
        for (long long k = 0;; ++k) {
            const double t = static_cast<double>(k) / sampler.nominal_rate_hz;
            if (t >= total_s) break;
            while (t >= tick_time(grid.bounds_ticks[static_cast<std::size_t>(epoch) + 1])) {
                ++epoch;
                taken_in_epoch = 0;
            }
            if (is_collapsed[static_cast<std::size_t>(epoch)] &&
                taken_in_epoch >= sampler.collapsed_count) {
                continue;
            }
            double value = out.low_epochs[static_cast<std::size_t>(epoch)]
                               ? workload.low_power_w
                               : workload.high_power_w;
            if (noisy) value = std::max(0.0, value + sampler.sigma_w * noise_rng.gaussian());
            trace.samples.push_back({t, value});
            ++taken_in_epoch;
        }
        out.gpu_sampled.push_back(std::move(trace));
    }

    // Cumulative counters, read once a second plus once at the very end.
    // A seeded start phase exercises wraparound handling downstream.
    auto fill_counter = [&](core::EnergyCounterTrace& counter, core::RaplDomain domain,
                            double power_w, StreamTag tag) {
        counter.domain = domain;
        counter.wrap_range_uj = static_cast<double>(kWrapRangeUj);
        auto rng = stream(workload.seed, tag);
        const double phase_uj = static_cast<double>(rng.below(kWrapRangeUj));
        auto push = [&](long long tick) {
            const double cumulative_uj = power_w * static_cast<double>(tick) * 1e5;
            counter.readings.push_back(
                {tick_time(tick), std::fmod(phase_uj + cumulative_uj, counter.wrap_range_uj)});
        };
        for (long long tick = 0; tick < grid.total_ticks; tick += kTicksPerSecond) push(tick);
        push(grid.total_ticks);
    };
    fill_counter(out.cpu_counter, core::RaplDomain::cpu_package, workload.cpu_power_w,
                 kTagCpuPhase);
    fill_counter(out.dram_counter, core::RaplDomain::dram, workload.mem_power_w, kTagDramPhase);

    // Software tracker log: GPU and CPU columns follow the true cumulative
    // energy, the memory column grows at the 3 W per 8 GB model rate.
    {
        const double model_mem_w = report::memory_power_estimate_w(workload.memory_gb);
        std::vector<double> gpu_prefix_j(static_cast<std::size_t>(n) + 1, 0.0);
        for (int i = 0; i < n; ++i) {
            gpu_prefix_j[static_cast<std::size_t>(i) + 1] =
                gpu_prefix_j[static_cast<std::size_t>(i)] +
                out.analytic.epochs[static_cast<std::size_t>(i)].gpu_j;
        }
        auto cumulative_gpu_j = [&](long long tick) {
            if (tick >= grid.total_ticks) return gpu_prefix_j.back();
            const int e = grid.epoch_of(tick);
            const auto& truth = out.analytic.epochs[static_cast<std::size_t>(e)];
            return gpu_prefix_j[static_cast<std::size_t>(e)] +
                   truth.gpu_w * out.session.gpu_count * (tick_time(tick) - truth.start_s);
        };
        auto push = [&](long long tick) {
            const double t = tick_time(tick);
            out.codecarbon.push_back(
                {t, cumulative_gpu_j(tick), workload.cpu_power_w * t, model_mem_w * t});
        };
        for (long long tick = 0; tick < grid.total_ticks; tick += kTicksPerSecond) push(tick);
        push(grid.total_ticks);
    }

    return out;
}

core::EnergyQuantity analytic_energy(const WorkloadSpec& workload, int epoch_idx) {
    const auto mask = low_epoch_mask(workload);
    const auto durations = epoch_durations(workload);
    if (epoch_idx < 0 || epoch_idx >= workload.epoch_count) {
        throw DomainError(fmt::format("epoch index {} outside [0, {})", epoch_idx,
                                      workload.epoch_count));
    }
    const double power = mask[static_cast<std::size_t>(epoch_idx)] ? workload.low_power_w
                                                                   : workload.high_power_w;
    return core::EnergyQuantity::from_joules(power *
                                             durations[static_cast<std::size_t>(epoch_idx)]);
}

core::EnergyQuantity analytic_energy(const WorkloadSpec& workload) {
    core::EnergyQuantity total;
    for (int i = 0; i < workload.epoch_count; ++i) total += analytic_energy(workload, i);
    return total;
}

void write_session_dir(const std::string& dir, const GeneratedSession& generated) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(fmt::format("cannot create {}: {}", dir, ec.message()));

    std::vector<ingest::MeterRecord> meter_rows;
    meter_rows.reserve(generated.meter.samples.size());
    for (const auto& s : generated.meter.samples) {
        const double quarter = s.power_w * 0.25;
        meter_rows.push_back({s.t_s, {quarter, quarter, quarter, quarter}});
    }
    auto path = [&](const std::string& name) { return dir + "/" + name; };
    ingest::write_text_file_atomic(path("meter.csv"), ingest::write_meter_csv(meter_rows));

    for (std::size_t i = 0; i < generated.gpu_sampled.size(); ++i) {
        ingest::write_text_file_atomic(path(fmt::format("gpu_{}.csv", i)),
                                       ingest::write_gpu_csv(generated.gpu_sampled[i]));
    }

    std::map<core::RaplDomain, core::EnergyCounterTrace> counters{
        {core::RaplDomain::cpu_package, generated.cpu_counter},
        {core::RaplDomain::dram, generated.dram_counter}};
    ingest::write_text_file_atomic(path("rapl.csv"), ingest::write_rapl_csv(counters));

    ingest::write_text_file_atomic(path("codecarbon.csv"),
                                   ingest::write_codecarbon_csv(generated.codecarbon));
    ingest::write_text_file_atomic(path("session.csv"),
                                   ingest::write_session_csv(generated.session));

    nlohmann::ordered_json truth;
    truth["schema"] = "wattscope/synth-truth/1";
    truth["session_id"] = generated.session.session_id;
    truth["gpu_count"] = generated.session.gpu_count;
    truth["totals"] = {{"meter_j", generated.analytic.meter_j},
                       {"gpu_j", generated.analytic.gpu_j},
                       {"cpu_j", generated.analytic.cpu_j},
                       {"mem_j", generated.analytic.mem_j},
                       {"off_socket_j", generated.analytic.off_socket_j}};
    truth["epochs"] = nlohmann::ordered_json::array();
    for (const auto& e : generated.analytic.epochs) {
        truth["epochs"].push_back({{"epoch_idx", e.epoch_idx},
                                   {"start_s", e.start_s},
                                   {"end_s", e.end_s},
                                   {"duration_s", e.duration_s},
                                   {"low_power", e.low_power},
                                   {"gpu_w", e.gpu_w},
                                   {"gpu_j", e.gpu_j},
                                   {"cpu_j", e.cpu_j},
                                   {"mem_j", e.mem_j},
                                   {"off_socket_j", e.off_socket_j},
                                   {"meter_j", e.meter_j}});
    }
    ingest::write_text_file_atomic(path("analytic.json"), truth.dump(2) + "\n");
}

namespace {

using json = nlohmann::json;

[[noreturn]] void spec_fail(const std::string& message, const std::string& path) {
    throw FormatError(message, path);
}

void check_keys(const json& obj, const std::set<std::string>& known, const std::string& what,
                const std::string& path) {
    for (const auto& item : obj.items()) {
        if (!known.count(item.key())) {
            spec_fail(fmt::format("unknown {} key \"{}\"", what, item.key()), path);
        }
    }
}

double get_number(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = obj.at(key);
    if (!v.is_number()) spec_fail(fmt::format("\"{}\" must be a number", key), path);
    return v.get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback,
                     const std::string& path) {
    if (!obj.contains(key)) return fallback;
    return get_number(obj, key, path);
}

int get_int(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) spec_fail(fmt::format("\"{}\" must be an integer", key), path);
    return v.get<int>();
}

std::pair<double, double> get_range(const json& obj, const std::string& key,
                                    const std::string& path) {
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        spec_fail(fmt::format("\"{}\" must be a [min, max] pair of numbers", key), path);
    }
    double lo = v[0].get<double>(), hi = v[1].get<double>();
    if (!(lo > 0.0) || hi < lo) {
        spec_fail(fmt::format("\"{}\" must satisfy 0 < min <= max", key), path);
    }
    return {lo, hi};
}

SamplerSpec parse_sampler(const json& obj, std::size_t index, const std::string& path) {
    if (!obj.is_object()) spec_fail("each sampler must be a JSON object", path);
    check_keys(obj,
               {"rate_hz", "pathology", "threshold_w", "collapsed_count", "collapse_fraction",
                "sigma_w"},
               fmt::format("sampler {}", index), path);
    std::string pathology = "ideal";
    if (obj.contains("pathology")) {
        if (!obj.at("pathology").is_string()) spec_fail("\"pathology\" must be a string", path);
        pathology = obj.at("pathology").get<std::string>();
    }
    const double rate = get_number_or(obj, "rate_hz", 10.0, path);

    if (pathology == "ideal") {
        for (const char* key : {"threshold_w", "collapsed_count", "collapse_fraction", "sigma_w"}) {
            if (obj.contains(key)) {
                spec_fail(fmt::format("\"{}\" is only valid for other pathologies", key), path);
            }
        }
        return SamplerSpec::ideal(rate);
    }
    if (pathology == "rate_collapse") {
        if (obj.contains("sigma_w")) spec_fail("\"sigma_w\" is a gaussian_noise field", path);
        if (!obj.contains("threshold_w")) {
            spec_fail("rate_collapse needs a \"threshold_w\"", path);
        }
        int count = 10;
        if (obj.contains("collapsed_count")) count = get_int(obj, "collapsed_count", path);
        return SamplerSpec::rate_collapse(get_number(obj, "threshold_w", path), count, rate,
                                          get_number_or(obj, "collapse_fraction", 1.0, path));
    }
    if (pathology == "gaussian_noise") {
        for (const char* key : {"threshold_w", "collapsed_count", "collapse_fraction"}) {
            if (obj.contains(key)) {
                spec_fail(fmt::format("\"{}\" is a rate_collapse field", key), path);
            }
        }
        if (!obj.contains("sigma_w")) spec_fail("gaussian_noise needs a \"sigma_w\"", path);
        return SamplerSpec::gaussian_noise(get_number(obj, "sigma_w", path), rate);
    }
    spec_fail(fmt::format("unknown pathology \"{}\"", pathology), path);
}

} // namespace

SynthJob parse_synth_spec(std::string_view text, const std::string& path) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(e.what(), path);
    }
    if (!root.is_object()) spec_fail("synthesis spec must be a JSON object", path);
    check_keys(root,
               {"session_id", "epoch_count", "epoch_duration_s", "low_duration_range_s",
                "high_duration_range_s", "low_power_w", "high_power_w", "low_fraction",
                "cpu_power_w", "mem_power_w", "off_socket", "memory_gb", "seed", "samplers"},
               "spec", path);
    for (const char* key : {"epoch_count", "low_power_w", "high_power_w", "low_fraction"}) {
        if (!root.contains(key)) spec_fail(fmt::format("missing required \"{}\"", key), path);
    }

    SynthJob job;
    auto& w = job.workload;
    if (root.contains("session_id")) {
        if (!root.at("session_id").is_string()) spec_fail("\"session_id\" must be a string", path);
        w.session_id = root.at("session_id").get<std::string>();
    }
    w.epoch_count = get_int(root, "epoch_count", path);
    w.low_power_w = get_number(root, "low_power_w", path);
    w.high_power_w = get_number(root, "high_power_w", path);
    w.low_fraction = get_number(root, "low_fraction", path);
    w.cpu_power_w = get_number_or(root, "cpu_power_w", 0.0, path);
    w.mem_power_w = get_number_or(root, "mem_power_w", 0.0, path);
    w.memory_gb = get_number_or(root, "memory_gb", 2000.0, path);
    if (root.contains("seed")) {
        const auto& v = root.at("seed");
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
            spec_fail("\"seed\" must be a non-negative integer", path);
        }
        w.seed = v.get<std::uint64_t>();
    }
    if (root.contains("off_socket")) {
        const auto& v = root.at("off_socket");
        if (v.is_number()) {
            w.off_socket = OffSocketModel::constant(v.get<double>());
        } else if (v.is_object()) {
            check_keys(v, {"low_w", "high_w"}, "off_socket", path);
            if (!v.contains("low_w") || !v.contains("high_w")) {
                spec_fail("off_socket object needs \"low_w\" and \"high_w\"", path);
            }
            w.off_socket = OffSocketModel::tracking(get_number(v, "low_w", path),
                                                    get_number(v, "high_w", path));
        } else {
            spec_fail("\"off_socket\" must be a number or a {low_w, high_w} object", path);
        }
    }

    const bool has_scalar = root.contains("epoch_duration_s");
    const bool has_low_range = root.contains("low_duration_range_s");
    const bool has_high_range = root.contains("high_duration_range_s");
    if (has_low_range != has_high_range) {
        spec_fail("give both low_duration_range_s and high_duration_range_s or neither", path);
    }
    if (has_scalar == has_low_range) {
        spec_fail("give either epoch_duration_s or the per-class duration ranges", path);
    }
    if (has_scalar) {
        const auto& v = root.at("epoch_duration_s");
        if (v.is_number()) {
            w.epoch_durations_s = {v.get<double>()};
        } else if (v.is_array()) {
            for (const auto& d : v) {
                if (!d.is_number()) {
                    spec_fail("\"epoch_duration_s\" entries must be numbers", path);
                }
                w.epoch_durations_s.push_back(d.get<double>());
            }
        } else {
            spec_fail("\"epoch_duration_s\" must be a number or an array", path);
        }
    } else {
        const auto low_range = get_range(root, "low_duration_range_s", path);
        const auto high_range = get_range(root, "high_duration_range_s", path);
        std::vector<bool> mask;
        try {
            mask = low_epoch_mask(w);
        } catch (const DomainError& e) {
            throw FormatError(e.what(), path);
        }
        auto rng = stream(w.seed, kTagDurations);
        for (int i = 0; i < w.epoch_count; ++i) {
            const auto& range = mask[static_cast<std::size_t>(i)] ? low_range : high_range;
            w.epoch_durations_s.push_back(range.first +
                                          (range.second - range.first) * rng.u01());
        }
    }

    if (root.contains("samplers")) {
        const auto& arr = root.at("samplers");
        if (!arr.is_array()) spec_fail("\"samplers\" must be an array", path);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            job.samplers.push_back(parse_sampler(arr[i], i, path));
        }
    } else {
        job.samplers.push_back(SamplerSpec::ideal(10.0));
    }

    try {
        validate(w);
        for (const auto& s : job.samplers) validate(s);
    } catch (const DomainError& e) {
        throw FormatError(e.what(), path);
    }
    return job;
}

} // namespace wattscope::synth
