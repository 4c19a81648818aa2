#include "wattscope/collector.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "wattscope/ingest.hpp"

namespace wattscope::collector {

namespace fs = std::filesystem;

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view field, double& out) {
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc{} && ptr == field.data() + field.size() && std::isfinite(out);
}

std::string read_file(const fs::path& path) {
    auto access_error = [&] {
        return Error(fmt::format("cannot read {}: elevated access or ownership of the power "
                                 "cap interface may be required",
                                 path.string()));
    };
    std::ifstream in(path, std::ios::binary);
    if (!in) throw access_error();
    try {
        std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        if (in.bad()) throw access_error();
        return content;
    } catch (const std::ios_base::failure&) {
        // Reading a present entry failed outright (the directory-instead-of-
        // file shape some restricted sysfs nodes take).
        throw access_error();
    }
}

} // namespace

void validate(const CollectorConfig& config) {
    if (!(config.rate_hz > 0.0) || !std::isfinite(config.rate_hz)) {
        throw DomainError(fmt::format("sampling rate must be positive, got {}", config.rate_hz));
    }
    if (config.duration_s && (!std::isfinite(*config.duration_s) || *config.duration_s < 0.0)) {
        throw DomainError(
            fmt::format("collection duration must be non-negative, got {}", *config.duration_s));
    }
}

PowercapSnapshot read_powercap_snapshot(const std::string& root) {
    PowercapSnapshot snap;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        snap.warnings.push_back(
            fmt::format("power cap root {} is missing or not a directory", root));
        return snap;
    }

    std::vector<fs::path> candidates;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        std::error_code dir_ec;
        if (entry.is_directory(dir_ec)) candidates.push_back(entry.path());
    }
    std::sort(candidates.begin(), candidates.end());

    std::set<core::RaplDomain> seen;
    for (const auto& dir : candidates) {
        const auto name_path = dir / "name";
        if (!fs::exists(name_path, ec)) continue; // not a domain directory

        const std::string name{trim(read_file(name_path))};
        core::RaplDomain domain;
        if (name.rfind("package", 0) == 0) {
            domain = core::RaplDomain::cpu_package;
        } else if (name == "dram") {
            domain = core::RaplDomain::dram;
        } else {
            continue; // core/uncore/psys and friends are not ours
        }
        if (seen.count(domain)) {
            snap.warnings.push_back(
                fmt::format("ignoring additional {} domain at {} (single-socket collection)",
                            core::to_string(domain), dir.string()));
            continue;
        }

        const auto energy_path = dir / "energy_uj";
        const auto range_path = dir / "max_energy_range_uj";
        if (!fs::exists(energy_path, ec) || !fs::exists(range_path, ec)) {
            snap.warnings.push_back(fmt::format(
                "domain {} at {} lacks its counter files; skipped", name, dir.string()));
            continue;
        }
        PowercapReading reading;
        reading.domain = domain;
        if (!parse_double(trim(read_file(energy_path)), reading.counter_uj) ||
            !parse_double(trim(read_file(range_path)), reading.wrap_range_uj)) {
            snap.warnings.push_back(fmt::format(
                "domain {} at {} has unparsable counter files; skipped", name, dir.string()));
            continue;
        }
        seen.insert(domain);
        snap.readings.push_back(reading);
    }
    if (snap.readings.empty()) {
        snap.warnings.push_back(fmt::format("no usable power domains under {}", root));
    }
    return snap;
}

std::vector<double> parse_gpu_query_output(std::string_view text) {
    std::vector<double> watts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view raw = eol == std::string_view::npos ? text.substr(pos)
                                                             : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        std::string_view line = trim(raw);
        if (line.empty()) continue;
        std::string_view body = line;
        if (body.back() == 'W') {
            body.remove_suffix(1);
            body = trim(body);
        }
        double value = 0.0;
        if (!parse_double(body, value) || value < 0.0) {
            throw FormatError(
                fmt::format("cannot parse GPU power from line '{}'", std::string(raw)));
        }
        watts.push_back(value);
    }
    return watts;
}

Readers make_system_readers(const CollectorConfig& config) {
    Readers readers;
    readers.gpu_power_w = [command = config.gpu_query_command]() -> std::vector<double> {
        FILE* pipe = popen(command.c_str(), "r");
        if (!pipe) return {};
        std::string output;
        char buffer[256];
        std::size_t n = 0;
        while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) output.append(buffer, n);
        if (pclose(pipe) != 0) return {};
        try {
            return parse_gpu_query_output(output);
        } catch (const FormatError&) {
            return {};
        }
    };
    readers.powercap = [root = config.powercap_root] { return read_powercap_snapshot(root); };
    return readers;
}

namespace {

struct Message {
    enum class Kind { gpu, rapl, producer_done };
    Kind kind = Kind::producer_done;
    double t_s = 0.0;
    std::vector<double> gpu_w;
    PowercapSnapshot snapshot;
};

// FIFO handoff from the sampling threads to the writer.
class MessageQueue {
public:
    void push(Message m) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            items_.push_back(std::move(m));
        }
        ready_.notify_one();
    }

    Message pop() {
        std::unique_lock<std::mutex> lock(mutex_);
        ready_.wait(lock, [&] { return !items_.empty(); });
        Message m = std::move(items_.front());
        items_.pop_front();
        return m;
    }

private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<Message> items_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start, Clock::time_point now) {
    return std::chrono::duration<double>(now - start).count();
}

// One periodic sampling task. Wakes at slot deadlines start + k/rate; a
// slot whose deadline has already slipped by a full period is dropped, so a
// stalled read leaves a gap instead of a burst of stale values.
void sampling_loop(Clock::time_point start, double rate_hz, std::optional<double> duration_s,
                   const std::atomic<bool>* stop, MessageQueue& queue,
                   const std::function<bool(double t_s, Message&)>& read_one) {
    const auto period = std::chrono::duration<double>(1.0 / rate_hz);
    for (long long slot = 0;; ++slot) {
        const double planned_s = static_cast<double>(slot) / rate_hz;
        if (duration_s && planned_s >= *duration_s) break;
        if (stop && stop->load()) break;
        const auto deadline =
            start + std::chrono::duration_cast<Clock::duration>(period * slot);
        std::this_thread::sleep_until(deadline);
        if (stop && stop->load()) break;
        const auto now = Clock::now();
        if (now >= deadline + period) continue; // missed; drop, never backfill

        Message m;
        m.t_s = seconds_since(start, now);
        if (read_one(m.t_s, m)) queue.push(std::move(m));
    }
    Message done;
    done.kind = Message::Kind::producer_done;
    queue.push(std::move(done));
}

// Everything the writer accumulated by the time both producers finished.
struct WriterState {
    std::vector<core::PowerTrace> gpu;
    std::map<core::RaplDomain, core::EnergyCounterTrace> counters;
    std::set<std::string> warnings;
    std::size_t gpu_rows = 0;
    std::size_t rapl_rows = 0;
    double last_gpu_t = -1.0;
    double last_rapl_t = -1.0;
};

void consume_messages(MessageQueue& queue, std::size_t n_gpu, WriterState& state) {
    int producers_left = 2;
    while (producers_left > 0) {
        Message m = queue.pop();
        switch (m.kind) {
        case Message::Kind::producer_done:
            --producers_left;
            break;
        case Message::Kind::gpu: {
            if (m.gpu_w.size() != n_gpu) {
                state.warnings.insert(
                    fmt::format("a GPU read returned {} devices instead of {}; sample dropped",
                                m.gpu_w.size(), n_gpu));
                break;
            }
            if (m.t_s <= state.last_gpu_t) break; // clock tie; keep files strictly ordered
            state.last_gpu_t = m.t_s;
            for (std::size_t i = 0; i < n_gpu; ++i) {
                state.gpu[i].samples.push_back({m.t_s, m.gpu_w[i]});
            }
            ++state.gpu_rows;
            break;
        }
        case Message::Kind::rapl: {
            for (const auto& w : m.snapshot.warnings) state.warnings.insert(w);
            if (m.snapshot.readings.empty()) break;
            if (m.t_s <= state.last_rapl_t) break;
            state.last_rapl_t = m.t_s;
            for (const auto& r : m.snapshot.readings) {
                auto& trace = state.counters[r.domain];
                if (trace.readings.empty()) {
                    trace.domain = r.domain;
                    trace.wrap_range_uj = r.wrap_range_uj;
                }
                trace.readings.push_back({m.t_s, r.counter_uj});
            }
            ++state.rapl_rows;
            break;
        }
        }
    }
}

// Fills the .partial file and renames it into place; on failure the
// .partial stays behind as the abort marker.
void finalize_file(const std::string& final_path, const std::string& content) {
    const std::string partial = final_path + ".partial";
    {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot open {} for writing", partial));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(fmt::format("writing {} failed", partial));
    }
    std::error_code ec;
    fs::rename(partial, final_path, ec);
    if (ec) {
        throw Error(fmt::format("renaming {} into place failed: {}", partial, ec.message()));
    }
}

void touch_partial(const std::string& final_path) {
    std::ofstream out(final_path + ".partial", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot create {}.partial", final_path));
}

} // namespace

CollectorResult run_collector(const CollectorConfig& config, const Readers& readers,
                              const std::atomic<bool>* stop) {
    validate(config);
    if (!readers.gpu_power_w || !readers.powercap) {
        throw DomainError("collector needs both a GPU reader and a power-cap reader");
    }
    if (!config.duration_s && !stop) {
        throw DomainError("unbounded collection needs a stop flag");
    }

    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) {
        throw Error(fmt::format("cannot create {}: {}", config.output_dir, ec.message()));
    }

    CollectorResult result;

    // Probe once to size the output; the probed values are not recorded.
    const std::size_t n_gpu = readers.gpu_power_w().size();
    if (n_gpu == 0) {
        result.warnings.push_back("GPU probe read returned no devices; no GPU trace written");
    }

    auto out_path = [&](const std::string& name) { return config.output_dir + "/" + name; };
    std::vector<std::string> planned;
    for (std::size_t i = 0; i < n_gpu; ++i) planned.push_back(out_path(fmt::format("gpu_{}.csv", i)));
    planned.push_back(out_path("rapl.csv"));
    for (const auto& p : planned) touch_partial(p);

    WriterState state;
    state.gpu.resize(n_gpu);
    for (std::size_t i = 0; i < n_gpu; ++i) {
        state.gpu[i].source_id = fmt::format("gpu_{}", i);
        state.gpu[i].nominal_interval_s = 1.0 / config.rate_hz;
    }

    MessageQueue queue;
    const auto start = Clock::now();

    std::thread gpu_thread([&] {
        sampling_loop(start, config.rate_hz, config.duration_s, stop, queue,
                      [&](double, Message& m) {
                          m.kind = Message::Kind::gpu;
                          m.gpu_w = readers.gpu_power_w();
                          return !m.gpu_w.empty();
                      });
    });
    std::thread rapl_thread([&] {
        sampling_loop(start, config.rate_hz, config.duration_s, stop, queue,
                      [&](double, Message& m) {
                          m.kind = Message::Kind::rapl;
                          m.snapshot = readers.powercap();
                          return !m.snapshot.readings.empty() || !m.snapshot.warnings.empty();
                      });
    });
    std::thread writer_thread([&] { consume_messages(queue, n_gpu, state); });

    gpu_thread.join();
    rapl_thread.join();
    const double elapsed_s = seconds_since(start, Clock::now());
    writer_thread.join();

    result.gpu_sample_count = state.gpu_rows;
    result.rapl_sample_count = state.rapl_rows;
    result.achieved_rate_hz =
        elapsed_s > 0.0 ? static_cast<double>(state.gpu_rows) / elapsed_s : 0.0;
    for (const auto& w : state.warnings) result.warnings.push_back(w);

    const std::string rate_comment =
        fmt::format("# achieved_rate_hz={}\n", result.achieved_rate_hz);
    for (std::size_t i = 0; i < n_gpu; ++i) {
        finalize_file(planned[i], rate_comment + ingest::write_gpu_csv(state.gpu[i]));
        result.files_written.push_back(planned[i]);
    }
    finalize_file(planned.back(), rate_comment + ingest::write_rapl_csv(state.counters));
    result.files_written.push_back(planned.back());
    return result;
}

} // namespace wattscope::collector
