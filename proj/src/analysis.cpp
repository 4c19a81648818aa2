#include "wattscope/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace wattscope::analysis {

using core::EnergyCounterTrace;
using core::EnergyQuantity;
using core::PowerTrace;
using core::SessionLog;

bool is_undersampled(const SourceEpochStats& stats, const UndersamplingPolicy& policy) {
    if (stats.from_counter) return false;
    if (policy.kind == UndersamplingPolicy::Kind::absolute) {
        return stats.sample_count <= policy.k;
    }
    return stats.sample_count < policy.r * stats.expected_samples;
}

namespace {

template <typename Vec>
int count_in_window(const Vec& v, double t0, double t1, bool closed_end) {
    auto lo = std::lower_bound(v.begin(), v.end(), t0,
                               [](const auto& s, double t) { return s.t_s < t; });
    auto hi = closed_end ? std::upper_bound(v.begin(), v.end(), t1,
                                            [](double t, const auto& s) { return t < s.t_s; })
                         : std::lower_bound(lo, v.end(), t1,
                                            [](const auto& s, double t) { return s.t_s < t; });
    return static_cast<int>(hi - lo);
}

SourceEpochStats stats_for_power(const PowerTrace& trace, double t0, double t1,
                                 const UndersamplingPolicy& policy) {
    SourceEpochStats st;
    st.sample_count = count_in_window(trace.samples, t0, t1, /*closed_end=*/false);
    st.expected_samples = std::max(
        1, static_cast<int>(std::floor((t1 - t0) / trace.nominal_interval_s + 1e-9)));
    try {
        st.energy = core::integrate_power(trace, t0, t1);
        st.mean_power_w = st.energy->joules() / (t1 - t0);
    } catch (const EmptyWindowError&) {
        // missing cell
    }
    st.undersampled = is_undersampled(st, policy);
    return st;
}

SourceEpochStats stats_for_counter(const EnergyCounterTrace& trace, double t0, double t1) {
    SourceEpochStats st;
    st.from_counter = true;
    st.sample_count = count_in_window(trace.readings, t0, t1, /*closed_end=*/true);
    st.expected_samples = st.sample_count;
    try {
        st.energy = core::counter_delta(trace, t0, t1);
        st.mean_power_w = st.energy->joules() / (t1 - t0);
    } catch (const InsufficientDataError&) {
        // missing cell
    }
    return st;
}

} // namespace

std::vector<EpochEnergy> epoch_energy_table(const SessionLog& session,
                                            const std::map<std::string, TraceVariant>& sources,
                                            const UndersamplingPolicy& policy, int jobs) {
    core::validate(session);
    std::vector<EpochEnergy> table(session.epochs.size());

    auto fill_row = [&](std::size_t idx) {
        const auto& ep = session.epochs[idx];
        EpochEnergy& row = table[idx];
        row.epoch_idx = static_cast<int>(idx);
        row.start_s = ep.start_s;
        row.end_s = ep.end_s;
        row.duration_s = ep.end_s - ep.start_s;
        for (const auto& [name, variant] : sources) {
            if (const auto* pt = std::get_if<PowerTrace>(&variant)) {
                row.sources[name] = stats_for_power(*pt, ep.start_s, ep.end_s, policy);
            } else {
                row.sources[name] =
                    stats_for_counter(std::get<EnergyCounterTrace>(variant), ep.start_s, ep.end_s);
            }
        }
    };

    jobs = std::max(1, jobs);
    if (jobs == 1 || table.size() < 2) {
        for (std::size_t i = 0; i < table.size(); ++i) fill_row(i);
        return table;
    }
    std::vector<std::thread> workers;
    std::size_t per = (table.size() + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
        std::size_t lo = w * per;
        std::size_t hi = std::min(table.size(), lo + per);
        if (lo >= hi) break;
        workers.emplace_back([=] {
            for (std::size_t i = lo; i < hi; ++i) fill_row(i);
        });
    }
    for (auto& t : workers) t.join();
    return table;
}

std::vector<EpochEnergy> corrected_view(const std::vector<EpochEnergy>& table,
                                        const std::string& source,
                                        const UndersamplingPolicy& policy) {
    std::vector<EpochEnergy> kept;
    for (const auto& row : table) {
        auto it = row.sources.find(source);
        if (it == row.sources.end() || !it->second.energy) continue;
        if (is_undersampled(it->second, policy)) continue;
        kept.push_back(row);
    }
    return kept;
}

SegmentedTrace segment_epochs(const PowerTrace& trace, const SessionLog& session) {
    core::validate(session);
    SegmentedTrace out;
    out.per_epoch.resize(session.epochs.size());
    for (std::size_t i = 0; i < session.epochs.size(); ++i) {
        auto& sub = out.per_epoch[i];
        sub.source_id = fmt::format("{}[{}]", trace.source_id, i);
        sub.nominal_interval_s = trace.nominal_interval_s;
    }
    for (const auto& s : trace.samples) {
        bool placed = false;
        for (std::size_t i = 0; i < session.epochs.size(); ++i) {
            const auto& ep = session.epochs[i];
            if (s.t_s >= ep.start_s && s.t_s < ep.end_s) {
                out.per_epoch[i].samples.push_back(s);
                placed = true;
                break;
            }
        }
        if (!placed) ++out.discarded_samples;
    }
    return out;
}

namespace {

void require_paired(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw DomainError(fmt::format("paired series differ in length: {} vs {}", xs.size(),
                                      ys.size()));
    }
    if (xs.size() < 2) {
        throw UndefinedCorrelationError(
            fmt::format("correlation needs at least 2 pairs, got {}", xs.size()));
    }
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
    require_paired(xs, ys);
    double n = static_cast<double>(xs.size());
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedCorrelationError("correlation is undefined for a constant series");
    }
    return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    require_paired(xs, ys);
    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

namespace {

// Pooled tie structure shared by the exact and asymptotic KS paths:
// distinct pooled values in order, with how many came from each sample.
struct TieGroup {
    double value;
    int from_x;
    int from_y;
};

std::vector<TieGroup> pool_groups(std::span<const double> xs, std::span<const double> ys) {
    std::vector<double> sx(xs.begin(), xs.end());
    std::vector<double> sy(ys.begin(), ys.end());
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    std::vector<TieGroup> groups;
    std::size_t i = 0, j = 0;
    while (i < sx.size() || j < sy.size()) {
        double v;
        if (j == sy.size() || (i < sx.size() && sx[i] <= sy[j])) v = sx[i];
        else v = sy[j];
        TieGroup g{v, 0, 0};
        while (i < sx.size() && sx[i] == v) ++g.from_x, ++i;
        while (j < sy.size() && sy[j] == v) ++g.from_y, ++j;
        groups.push_back(g);
    }
    return groups;
}

// D scaled by n*m so it stays an exact integer: max over group boundaries
// of |i*m - j*n| where (i, j) counts values consumed from each sample.
std::int64_t scaled_statistic(const std::vector<TieGroup>& groups, std::int64_t n,
                              std::int64_t m) {
    std::int64_t i = 0, j = 0, d = 0;
    for (const auto& g : groups) {
        i += g.from_x;
        j += g.from_y;
        d = std::max(d, static_cast<std::int64_t>(std::llabs(i * m - j * n)));
    }
    return d;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

// Exact p-value, conditional on the observed tie pattern: over all equally
// likely assignments of the pooled values to the two samples, the fraction
// whose statistic reaches the observed one. Counted by a lattice walk over
// (taken from x, taken from y) with one transition per tie group; paths
// whose running |i*m - j*n| reaches d_obs anywhere are pruned, so the
// surviving mass is P(D < D_obs).
double exact_p_value(const std::vector<TieGroup>& groups, int n, int m, std::int64_t d_obs) {
    if (d_obs == 0) return 1.0; // every assignment reaches D >= 0
    std::vector<std::uint64_t> dp(static_cast<std::size_t>((n + 1) * (m + 1)), 0);
    auto at = [&](std::vector<std::uint64_t>& v, int i, int j) -> std::uint64_t& {
        return v[static_cast<std::size_t>(i * (m + 1) + j)];
    };
    at(dp, 0, 0) = 1;
    for (const auto& g : groups) {
        int size = g.from_x + g.from_y;
        std::vector<std::uint64_t> next(dp.size(), 0);
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= m; ++j) {
                std::uint64_t ways = at(dp, i, j);
                if (ways == 0) continue;
                for (int k = 0; k <= size; ++k) {
                    int ni = i + k, nj = j + (size - k);
                    if (ni > n || nj > m) continue;
                    std::int64_t dev = std::llabs(static_cast<std::int64_t>(ni) * m -
                                                  static_cast<std::int64_t>(nj) * n);
                    if (dev >= d_obs) continue;
                    at(next, ni, nj) += ways * binomial(size, k);
                }
            }
        }
        dp.swap(next);
    }
    long double below = static_cast<long double>(at(dp, n, m));
    long double total = static_cast<long double>(binomial(n + m, n));
    return static_cast<double>(1.0L - below / total);
}

// Kolmogorov tail probability Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

} // namespace

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys, double alpha) {
    if (xs.empty() || ys.empty()) {
        throw InsufficientDataError("KS test needs at least one value in each sample");
    }
    int n = static_cast<int>(xs.size());
    int m = static_cast<int>(ys.size());
    auto groups = pool_groups(xs, ys);
    std::int64_t d_int = scaled_statistic(groups, n, m);

    KsResult res;
    res.alpha = alpha;
    res.statistic = static_cast<double>(d_int) / (static_cast<double>(n) * m);
    if (n <= 10 && m <= 10) {
        res.exact = true;
        res.p_value = exact_p_value(groups, n, m, d_int);
    } else {
        double ne = static_cast<double>(n) * m / (n + m);
        double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * res.statistic;
        res.p_value = kolmogorov_q(lambda);
    }
    res.reject = res.p_value < alpha;
    return res;
}

CorrelationReport compare_series(std::span<const double> xs, std::span<const double> ys,
                                 double alpha) {
    require_paired(xs, ys);
    CorrelationReport rep;
    rep.n = static_cast<int>(xs.size());
    rep.alpha = alpha;
    rep.pearson = pearson(xs, ys);
    rep.spearman = spearman(xs, ys);
    auto ks = ks_two_sample(xs, ys, alpha);
    rep.ks_statistic = ks.statistic;
    rep.ks_p_value = ks.p_value;
    rep.ks_reject_at_alpha = ks.reject;
    return rep;
}

std::vector<EcdfPoint> ecdf(std::span<const double> values) {
    if (values.empty()) {
        throw InsufficientDataError("ecdf of an empty sample is undefined");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<EcdfPoint> out;
    double n = static_cast<double>(sorted.size());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        out.push_back({sorted[i], static_cast<double>(j + 1) / n});
        i = j + 1;
    }
    return out;
}

std::vector<EcdfGap> ecdf_gaps(std::span<const double> values, double min_width_w) {
    auto points = ecdf(values);
    std::vector<EcdfGap> gaps;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        double width = points[i + 1].value - points[i].value;
        if (width >= min_width_w) {
            gaps.push_back({points[i].value, points[i + 1].value, width, points[i].fraction});
        }
    }
    return gaps;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (v.size() - 1))};
}

} // namespace

UsageSummary usage_power_summary(const std::vector<std::vector<double>>& power_w,
                                 const std::vector<std::vector<double>>& util_pct,
                                 const std::vector<std::vector<double>>& mem_pct) {
    if (power_w.size() != util_pct.size() || power_w.size() != mem_pct.size()) {
        throw DomainError("usage summary needs the same epoch count for every signal");
    }
    UsageSummary out;
    std::vector<double> mp, mu, mm;
    for (std::size_t i = 0; i < power_w.size(); ++i) {
        UsageEpochStats st;
        std::tie(st.mean_power_w, st.sd_power_w) = mean_sd(power_w[i]);
        std::tie(st.mean_util_pct, st.sd_util_pct) = mean_sd(util_pct[i]);
        std::tie(st.mean_mem_pct, st.sd_mem_pct) = mean_sd(mem_pct[i]);
        mp.push_back(st.mean_power_w);
        mu.push_back(st.mean_util_pct);
        mm.push_back(st.mean_mem_pct);
        out.epochs.push_back(st);
    }
    out.power_util_pearson = pearson(mp, mu);
    out.power_mem_pearson = pearson(mp, mm);
    return out;
}

} // namespace wattscope::analysis
