#include "wattscope/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <fmt/format.h>

namespace wattscope::ingest {

using core::EnergyCounterTrace;
using core::PowerTrace;
using core::RaplDomain;
using core::SessionLog;

namespace {

// Hands out trimmed lines with their 1-based numbers; skips blank lines.
struct LineScanner {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    bool next(std::string_view& out) {
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            std::string_view line = eol == std::string_view::npos
                                        ? text.substr(pos)
                                        : text.substr(pos, eol - pos);
            pos = eol == std::string_view::npos ? text.size() : eol + 1;
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.empty()) continue;
            out = line;
            return true;
        }
        return false;
    }
};

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

// Locale-independent strict number parse; the whole field must be consumed.
double parse_num(std::string_view field, const std::string& path, std::size_t line,
                 const char* what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw FormatError(fmt::format("bad {} '{}'", what, std::string(field)), path, line);
    }
    return value;
}

void expect_header(const LineScanner& sc, std::string_view got, std::string_view want,
                   const std::string& path) {
    if (got != want) {
        throw FormatError(fmt::format("expected header '{}', got '{}'", want, std::string(got)),
                          path, sc.line_no);
    }
}

void expect_fields(std::size_t got, std::size_t want, const std::string& path,
                   std::size_t line) {
    if (got != want) {
        throw FormatError(fmt::format("expected {} fields, got {}", want, got), path, line);
    }
}

std::string num(double v) { return fmt::format("{}", v); }

} // namespace

std::vector<MeterRecord> parse_meter_csv(std::string_view text, const std::string& path) {
    LineScanner sc{text};
    std::string_view line;
    while (sc.next(line) && line.front() == '#') {
    }
    if (sc.line_no == 0 || line.empty() || line.front() == '#') {
        throw FormatError("empty meter file", path);
    }
    expect_header(sc, line, "timestamp,ch1_w,ch2_w,ch3_w,ch4_w", path);

    std::vector<MeterRecord> records;
    double prev_t = -std::numeric_limits<double>::infinity();
    while (sc.next(line)) {
        if (line.front() == '#') continue;
        auto fields = split_fields(line);
        expect_fields(fields.size(), 5, path, sc.line_no);
        MeterRecord rec;
        rec.t_s = parse_num(fields[0], path, sc.line_no, "timestamp");
        for (int c = 0; c < 4; ++c) {
            rec.channels_w[c] = parse_num(fields[c + 1], path, sc.line_no, "channel power");
            if (rec.channels_w[c] < 0.0) {
                throw FormatError(fmt::format("negative channel power {}", rec.channels_w[c]),
                                  path, sc.line_no);
            }
        }
        if (rec.t_s <= prev_t) {
            throw FormatError(fmt::format("timestamps must be strictly increasing, {} after {}",
                                          rec.t_s, prev_t),
                              path, sc.line_no);
        }
        prev_t = rec.t_s;
        records.push_back(rec);
    }
    return records;
}

GpuTraceFile parse_gpu_csv(std::string_view text, const std::string& source_id,
                           const std::string& path) {
    LineScanner sc{text};
    std::string_view line;
    GpuTraceFile out;
    out.trace.source_id = source_id;
    out.trace.nominal_interval_s = 0.0;

    while (sc.next(line) && line.front() == '#') {
        std::string_view body = line.substr(1);
        while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
        if (body.rfind("interval_s=", 0) == 0) {
            out.trace.nominal_interval_s =
                parse_num(body.substr(11), path, sc.line_no, "interval_s");
        }
    }
    if (sc.line_no == 0 || line.empty() || line.front() == '#') {
        throw FormatError("empty sampler file", path);
    }
    expect_header(sc, line, "timestamp_s,power_w", path);
    if (out.trace.nominal_interval_s == 0.0) {
        out.trace.nominal_interval_s = 0.1;
        out.interval_defaulted = true;
    }

    while (sc.next(line)) {
        if (line.front() == '#') continue;
        auto fields = split_fields(line);
        expect_fields(fields.size(), 2, path, sc.line_no);
        core::PowerSample s;
        s.t_s = parse_num(fields[0], path, sc.line_no, "timestamp");
        s.power_w = parse_num(fields[1], path, sc.line_no, "power");
        out.trace.samples.push_back(s);
    }
    try {
        core::validate(out.trace);
    } catch (const FormatError& e) {
        throw FormatError(e.what(), path);
    }
    return out;
}

std::map<RaplDomain, EnergyCounterTrace> parse_rapl_csv(std::string_view text,
                                                        const std::string& path) {
    LineScanner sc{text};
    std::string_view line;
    while (sc.next(line) && line.front() == '#') {
    }
    if (sc.line_no == 0 || line.empty() || line.front() == '#') {
        throw FormatError("empty counter file", path);
    }
    expect_header(sc, line, "timestamp_s,domain,counter_uj,wrap_range_uj", path);

    std::map<RaplDomain, EnergyCounterTrace> traces;
    while (sc.next(line)) {
        if (line.front() == '#') continue;
        auto fields = split_fields(line);
        expect_fields(fields.size(), 4, path, sc.line_no);
        double t = parse_num(fields[0], path, sc.line_no, "timestamp");
        RaplDomain domain;
        try {
            domain = core::rapl_domain_from_string(std::string(fields[1]));
        } catch (const FormatError& e) {
            throw FormatError(e.what(), path, sc.line_no);
        }
        double counter = parse_num(fields[2], path, sc.line_no, "counter_uj");
        double wrap = parse_num(fields[3], path, sc.line_no, "wrap_range_uj");

        auto [it, inserted] = traces.try_emplace(domain);
        auto& trace = it->second;
        if (inserted) {
            trace.domain = domain;
            trace.wrap_range_uj = wrap;
        } else if (trace.wrap_range_uj != wrap) {
            throw FormatError(fmt::format("wrap_range_uj changed from {} to {} for domain {}",
                                          trace.wrap_range_uj, wrap, std::string(fields[1])),
                              path, sc.line_no);
        }
        trace.readings.push_back({t, counter});
    }
    for (auto& [domain, trace] : traces) {
        try {
            core::validate(trace);
        } catch (const FormatError& e) {
            throw FormatError(e.what(), path);
        }
    }
    return traces;
}

std::vector<EstimatorRecord> parse_codecarbon_csv(std::string_view text,
                                                  const std::string& path) {
    LineScanner sc{text};
    std::string_view line;
    while (sc.next(line) && line.front() == '#') {
    }
    if (sc.line_no == 0 || line.empty() || line.front() == '#') {
        throw FormatError("empty estimator file", path);
    }
    expect_header(sc, line, "timestamp_s,gpu_energy_j,cpu_energy_j,memory_energy_j", path);

    std::vector<EstimatorRecord> records;
    const char* names[3] = {"gpu_energy_j", "cpu_energy_j", "memory_energy_j"};
    while (sc.next(line)) {
        if (line.front() == '#') continue;
        auto fields = split_fields(line);
        expect_fields(fields.size(), 4, path, sc.line_no);
        EstimatorRecord rec;
        rec.t_s = parse_num(fields[0], path, sc.line_no, "timestamp");
        double* cols[3] = {&rec.gpu_j, &rec.cpu_j, &rec.memory_j};
        for (int c = 0; c < 3; ++c) {
            *cols[c] = parse_num(fields[c + 1], path, sc.line_no, names[c]);
            if (*cols[c] < 0.0) {
                throw FormatError(fmt::format("negative {}", names[c]), path, sc.line_no);
            }
        }
        if (!records.empty()) {
            const auto& prev = records.back();
            if (rec.t_s <= prev.t_s) {
                throw FormatError(fmt::format("timestamps must be strictly increasing, {} after {}",
                                              rec.t_s, prev.t_s),
                                  path, sc.line_no);
            }
            double prev_cols[3] = {prev.gpu_j, prev.cpu_j, prev.memory_j};
            for (int c = 0; c < 3; ++c) {
                if (*cols[c] < prev_cols[c]) {
                    throw FormatError(
                        fmt::format("cumulative column {} decreased from {} to {}", names[c],
                                    prev_cols[c], *cols[c]),
                        path, sc.line_no);
                }
            }
        }
        records.push_back(rec);
    }
    return records;
}

SessionLog parse_session_csv(std::string_view text, const std::string& path) {
    LineScanner sc{text};
    std::string_view line;
    while (sc.next(line) && line.front() == '#') {
    }
    if (sc.line_no == 0 || line.empty() || line.front() == '#') {
        throw FormatError("empty session file", path);
    }
    expect_header(sc, line, "session_id,memory_gb,gpu_count,gpu_nominal_rate_hz", path);

    if (!sc.next(line)) throw FormatError("missing session facts row", path, sc.line_no);
    auto facts = split_fields(line);
    expect_fields(facts.size(), 4, path, sc.line_no);
    SessionLog log;
    log.session_id = std::string(facts[0]);
    log.memory_gb = parse_num(facts[1], path, sc.line_no, "memory_gb");
    double count = parse_num(facts[2], path, sc.line_no, "gpu_count");
    if (count != std::floor(count) || count < 1.0) {
        throw FormatError(fmt::format("gpu_count must be a positive integer, got '{}'",
                                      std::string(facts[2])),
                          path, sc.line_no);
    }
    log.gpu_count = static_cast<int>(count);
    log.gpu_nominal_rate_hz = parse_num(facts[3], path, sc.line_no, "gpu_nominal_rate_hz");

    if (!sc.next(line)) throw FormatError("missing epoch header", path, sc.line_no);
    expect_header(sc, line, "epoch_idx,start_s,end_s", path);

    int expected_idx = 0;
    while (sc.next(line)) {
        if (line.front() == '#') continue;
        auto fields = split_fields(line);
        expect_fields(fields.size(), 3, path, sc.line_no);
        double idx = parse_num(fields[0], path, sc.line_no, "epoch_idx");
        if (idx != expected_idx) {
            throw FormatError(fmt::format("epoch_idx must count up from 0 without holes; "
                                          "expected {}, got {}",
                                          expected_idx, idx),
                              path, sc.line_no);
        }
        ++expected_idx;
        core::Epoch ep;
        ep.start_s = parse_num(fields[1], path, sc.line_no, "start_s");
        ep.end_s = parse_num(fields[2], path, sc.line_no, "end_s");
        log.epochs.push_back(ep);
    }
    try {
        core::validate(log);
    } catch (const FormatError& e) {
        throw FormatError(e.what(), path);
    }
    return log;
}

std::string write_meter_csv(const std::vector<MeterRecord>& records) {
    std::string out = "timestamp,ch1_w,ch2_w,ch3_w,ch4_w\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{},{}\n", num(r.t_s), num(r.channels_w[0]),
                           num(r.channels_w[1]), num(r.channels_w[2]), num(r.channels_w[3]));
    }
    return out;
}

std::string write_gpu_csv(const PowerTrace& trace) {
    std::string out = fmt::format("# interval_s={}\ntimestamp_s,power_w\n",
                                  num(trace.nominal_interval_s));
    for (const auto& s : trace.samples) {
        out += fmt::format("{},{}\n", num(s.t_s), num(s.power_w));
    }
    return out;
}

std::string write_rapl_csv(const std::map<RaplDomain, EnergyCounterTrace>& traces) {
    struct Row {
        double t;
        int domain_order;
        std::string text;
    };
    std::vector<Row> rows;
    int order = 0;
    for (const auto& [domain, trace] : traces) {
        for (const auto& r : trace.readings) {
            rows.push_back({r.t_s, order,
                            fmt::format("{},{},{},{}\n", num(r.t_s), core::to_string(domain),
                                        num(r.counter_uj), num(trace.wrap_range_uj))});
        }
        ++order;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.t != b.t ? a.t < b.t : a.domain_order < b.domain_order;
    });
    std::string out = "timestamp_s,domain,counter_uj,wrap_range_uj\n";
    for (const auto& r : rows) out += r.text;
    return out;
}

std::string write_codecarbon_csv(const std::vector<EstimatorRecord>& records) {
    std::string out = "timestamp_s,gpu_energy_j,cpu_energy_j,memory_energy_j\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{}\n", num(r.t_s), num(r.gpu_j), num(r.cpu_j),
                           num(r.memory_j));
    }
    return out;
}

std::string write_session_csv(const SessionLog& log) {
    std::string out = "session_id,memory_gb,gpu_count,gpu_nominal_rate_hz\n";
    out += fmt::format("{},{},{},{}\n", log.session_id, num(log.memory_gb), log.gpu_count,
                       num(log.gpu_nominal_rate_hz));
    out += "epoch_idx,start_s,end_s\n";
    for (std::size_t i = 0; i < log.epochs.size(); ++i) {
        out += fmt::format("{},{},{}\n", i, num(log.epochs[i].start_s), num(log.epochs[i].end_s));
    }
    return out;
}

void write_text_file_atomic(const std::string& path, std::string_view text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot open {} for writing", tmp));
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw Error(fmt::format("writing {} failed", tmp));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(fmt::format("renaming {} into place failed: {}", tmp, ec.message()));
    }
}

double median_interval_s(const std::vector<MeterRecord>& records) {
    if (records.size() < 2) {
        throw InsufficientDataError("need at least two meter rows to derive an interval");
    }
    std::vector<double> gaps;
    for (std::size_t i = 1; i < records.size(); ++i) {
        gaps.push_back(records[i].t_s - records[i - 1].t_s);
    }
    std::sort(gaps.begin(), gaps.end());
    std::size_t mid = gaps.size() / 2;
    return gaps.size() % 2 ? gaps[mid] : 0.5 * (gaps[mid - 1] + gaps[mid]);
}

PowerTrace align(const std::vector<MeterRecord>& records, double offset_s,
                 std::string source_id) {
    PowerTrace trace;
    trace.source_id = std::move(source_id);
    trace.nominal_interval_s = median_interval_s(records);
    trace.samples.reserve(records.size());
    for (const auto& r : records) {
        trace.samples.push_back({r.t_s + offset_s, r.total_w()});
    }
    core::validate(trace);
    return trace;
}

ClockOffset estimate_offset(const std::vector<MeterRecord>& records, double first_marker_s,
                            double min_step_w) {
    double interval = median_interval_s(records);
    double best_rise = 0.0;
    double edge_t = 0.0;
    bool found = false;
    for (std::size_t i = 1; i < records.size(); ++i) {
        double rise = records[i].total_w() - records[i - 1].total_w();
        if (rise >= min_step_w && rise > best_rise) {
            best_rise = rise;
            edge_t = records[i].t_s;
            found = true;
        }
    }
    if (!found) {
        throw NoMarkerError(fmt::format(
            "no power rise of at least {} W between consecutive meter rows", min_step_w));
    }
    return {first_marker_s - edge_t, interval};
}

} // namespace wattscope::ingest
