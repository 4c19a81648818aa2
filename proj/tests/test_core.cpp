#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "wattscope/core.hpp"

using namespace wattscope;
using namespace wattscope::core;

namespace {

PowerTrace make_trace(std::vector<PowerSample> samples, double interval_s = 0.1,
                      std::string id = "test") {
    PowerTrace t;
    t.source_id = std::move(id);
    t.nominal_interval_s = interval_s;
    t.samples = std::move(samples);
    return t;
}

PowerTrace constant_trace(double power_w, double rate_hz, double duration_s) {
    std::vector<PowerSample> ss;
    double dt = 1.0 / rate_hz;
    for (int i = 0;; ++i) {
        double t = i * dt;
        if (t >= duration_s - 1e-9) break;
        ss.push_back({t, power_w});
    }
    return make_trace(std::move(ss), dt);
}

// Independent oracle for rectangle integration: enumerate every breakpoint
// of the sample-hold step function inside the window, then sum power times
// length over the elementary intervals. Valid when holds do not overlap
// (sample spacing >= nominal interval), which is the regime the rectangle
// rule is meant for.
double sweep_hold_energy(const PowerTrace& tr, double t0, double t1) {
    std::vector<double> pts{t0, t1};
    for (const auto& s : tr.samples) {
        pts.push_back(std::clamp(s.t_s, t0, t1));
        pts.push_back(std::clamp(s.t_s + tr.nominal_interval_s, t0, t1));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double mid = 0.5 * (pts[i] + pts[i + 1]);
        for (const auto& s : tr.samples) {
            if (s.t_s >= t0 && s.t_s < t1 && mid >= s.t_s &&
                mid < s.t_s + tr.nominal_interval_s) {
                e += s.power_w * (pts[i + 1] - pts[i]);
                break;
            }
        }
    }
    return e;
}

// Independent oracle for trapezoid integration: midpoint rule on the
// elementary intervals between sample times, which is exact for a piecewise
// linear function.
double midpoint_linear_energy(const PowerTrace& tr, double t0, double t1) {
    const auto& ss = tr.samples;
    double lo = std::max(t0, ss.front().t_s);
    double hi = std::min(t1, ss.back().t_s);
    std::vector<double> pts{lo, hi};
    for (const auto& s : tr.samples)
        if (s.t_s > lo && s.t_s < hi) pts.push_back(s.t_s);
    std::sort(pts.begin(), pts.end());
    auto value_at = [&](double t) {
        for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
            if (t >= ss[i].t_s && t <= ss[i + 1].t_s) {
                double w = (t - ss[i].t_s) / (ss[i + 1].t_s - ss[i].t_s);
                return ss[i].power_w + w * (ss[i + 1].power_w - ss[i].power_w);
            }
        }
        return 0.0;
    };
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        e += value_at(0.5 * (pts[i] + pts[i + 1])) * (pts[i + 1] - pts[i]);
    return e;
}

PowerTrace random_sparse_trace(std::mt19937& rng, double interval_s, int n) {
    std::uniform_real_distribution<double> gap(interval_s, 3.0 * interval_s);
    std::uniform_real_distribution<double> power(0.0, 400.0);
    std::vector<PowerSample> ss;
    double t = gap(rng);
    for (int i = 0; i < n; ++i) {
        ss.push_back({t, power(rng)});
        t += gap(rng);
    }
    return make_trace(std::move(ss), interval_s);
}

} // namespace

TEST_CASE("energy quantity converts between units without drift") {
    for (double j : {1e-3, 1.0, 3600.0, 123456.789, 2.5e9}) {
        auto q = EnergyQuantity::from_joules(j);
        CHECK(q.joules() == doctest::Approx(j).epsilon(1e-15));
        CHECK(EnergyQuantity::from_watt_hours(q.watt_hours()).joules() ==
              doctest::Approx(j).epsilon(1e-12));
        CHECK(EnergyQuantity::from_kilowatt_hours(q.kilowatt_hours()).joules() ==
              doctest::Approx(j).epsilon(1e-12));
    }
    CHECK(EnergyQuantity::from_watt_hours(1.0).joules() == doctest::Approx(3600.0));
    CHECK(EnergyQuantity::from_kilowatt_hours(1.0).joules() == doctest::Approx(3.6e6));

    auto sum = EnergyQuantity::from_joules(2.0) + EnergyQuantity::from_joules(3.5);
    CHECK(sum.joules() == doctest::Approx(5.5));

    CHECK_THROWS_AS(EnergyQuantity::from_joules(-1.0), DomainError);
    CHECK_THROWS_AS(EnergyQuantity::from_joules(std::nan("")), DomainError);
}

TEST_CASE("rectangle integration matches hand-computed energies") {
    auto tr = constant_trace(100.0, 10.0, 10.0); // samples at 0.0 .. 9.9

    CHECK(integrate_power(tr, 0.0, 10.0).joules() == doctest::Approx(1000.0).epsilon(1e-12));
    // Last sample inside [0, 9.95) sits at 9.9 and is clipped to 0.05 s.
    CHECK(integrate_power(tr, 0.0, 9.95).joules() == doctest::Approx(995.0).epsilon(1e-12));
    // A sample exactly at the window end belongs to the next window.
    CHECK(integrate_power(tr, 0.0, 9.9).joules() == doctest::Approx(990.0).epsilon(1e-12));

    // Sparse trace: two samples far apart only account for one nominal
    // interval each; the gap contributes nothing.
    auto sparse = make_trace({{0.0, 200.0}, {5.0, 200.0}}, 0.1);
    CHECK(integrate_power(sparse, 0.0, 10.0).joules() == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("rectangle integration agrees with the breakpoint-sweep oracle") {
    std::mt19937 rng(20260815);
    for (int iter = 0; iter < 50; ++iter) {
        auto tr = random_sparse_trace(rng, 0.1, 60);
        double start = tr.samples.front().t_s;
        double end = tr.samples.back().t_s;
        std::uniform_real_distribution<double> pick(start, end);
        double a = pick(rng), b = pick(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 0.5) b = a + 0.5;
        bool any = std::any_of(tr.samples.begin(), tr.samples.end(),
                               [&](const PowerSample& s) { return s.t_s >= a && s.t_s < b; });
        if (!any) continue;
        double expected = sweep_hold_energy(tr, a, b);
        CHECK(integrate_power(tr, a, b).joules() == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("rectangle integration is additive across cuts at sample times") {
    std::mt19937 rng(7);
    for (int iter = 0; iter < 20; ++iter) {
        auto tr = random_sparse_trace(rng, 0.1, 40);
        double a = tr.samples.front().t_s;
        double b = tr.samples.back().t_s + 1.0;
        double cut = tr.samples[20].t_s;
        double whole = integrate_power(tr, a, b).joules();
        double parts = integrate_power(tr, a, cut).joules() + integrate_power(tr, cut, b).joules();
        CHECK(whole == doctest::Approx(parts).epsilon(1e-9));
    }
}

TEST_CASE("rectangle integration never loses energy as the window grows") {
    std::mt19937 rng(11);
    auto tr = random_sparse_trace(rng, 0.1, 80);
    double a = tr.samples.front().t_s;
    double prev = 0.0;
    for (double b = a + 0.3; b < tr.samples.back().t_s + 0.5; b += 0.37) {
        double e = integrate_power(tr, a, b).joules();
        CHECK(e >= prev - 1e-12);
        prev = e;
    }
}

TEST_CASE("trapezoid integration matches hand values and the midpoint oracle") {
    auto ramp = make_trace({{0.0, 0.0}, {1.0, 100.0}}, 1.0);
    CHECK(integrate_power(ramp, 0.0, 1.0, IntegrationMethod::trapezoid).joules() ==
          doctest::Approx(50.0).epsilon(1e-12));

    auto three = make_trace({{0.0, 0.0}, {1.0, 100.0}, {3.0, 100.0}}, 1.0);
    CHECK(integrate_power(three, 0.0, 3.0, IntegrationMethod::trapezoid).joules() ==
          doctest::Approx(250.0).epsilon(1e-12));

    std::mt19937 rng(23);
    for (int iter = 0; iter < 30; ++iter) {
        auto tr = random_sparse_trace(rng, 0.1, 50);
        double a = tr.samples[3].t_s;
        double b = tr.samples[45].t_s;
        double expected = midpoint_linear_energy(tr, a, b);
        CHECK(integrate_power(tr, a, b, IntegrationMethod::trapezoid).joules() ==
              doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("trapezoid clips the window to the sampled range") {
    auto ramp = make_trace({{1.0, 100.0}, {2.0, 100.0}}, 1.0);
    // Window extends beyond both ends of the trace; only [1, 2] is covered.
    CHECK(integrate_power(ramp, 0.0, 5.0, IntegrationMethod::trapezoid).joules() ==
          doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("rectangle and trapezoid agree on an ideal constant trace") {
    auto tr = constant_trace(250.0, 10.0, 20.0);
    double a = 0.0, b = tr.samples.back().t_s;
    double rect = integrate_power(tr, a, b, IntegrationMethod::rectangle).joules();
    double trap = integrate_power(tr, a, b, IntegrationMethod::trapezoid).joules();
    CHECK(rect == doctest::Approx(trap).epsilon(1e-9));
}

TEST_CASE("integration rejects bad windows") {
    auto tr = constant_trace(100.0, 10.0, 2.0);
    CHECK_THROWS_AS(integrate_power(tr, 1.0, 1.0), InvalidWindowError);
    CHECK_THROWS_AS(integrate_power(tr, 2.0, 1.0), InvalidWindowError);
    CHECK_THROWS_AS(integrate_power(tr, std::nan(""), 1.0), InvalidWindowError);
    CHECK_THROWS_AS(integrate_power(tr, 5.0, 6.0), EmptyWindowError);

    auto single = make_trace({{0.5, 10.0}}, 0.1);
    CHECK_THROWS_AS(integrate_power(single, 0.0, 1.0, IntegrationMethod::trapezoid),
                    EmptyWindowError);
    CHECK(integrate_power(single, 0.0, 1.0).joules() == doctest::Approx(1.0));
}

TEST_CASE("mean power is the time-weighted average over the window") {
    auto tr = constant_trace(100.0, 10.0, 10.0);
    CHECK(mean_power(tr, 0.0, 10.0) == doctest::Approx(100.0).epsilon(1e-12));

    // 100 W for 1 s then 300 W for 1 s.
    std::vector<PowerSample> ss;
    for (int i = 0; i < 10; ++i) ss.push_back({0.1 * i, 100.0});
    for (int i = 10; i < 20; ++i) ss.push_back({0.1 * i, 300.0});
    auto two = make_trace(std::move(ss), 0.1);
    CHECK(mean_power(two, 0.0, 2.0) == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(mean_power(two, 0.0, 1.0) == doctest::Approx(100.0).epsilon(1e-12));
}

namespace {

// Ground-truth counter fixture: draw positive energy increments, keep the
// unwrapped cumulative sum next to the wrapped readings the library sees.
struct CounterFixture {
    EnergyCounterTrace trace;
    std::vector<double> cumulative_uj;
};

CounterFixture random_counter(std::mt19937& rng, double wrap_uj, int n, double start_uj) {
    std::uniform_real_distribution<double> inc(0.0, 0.6 * wrap_uj);
    CounterFixture fx;
    fx.trace.domain = RaplDomain::cpu_package;
    fx.trace.wrap_range_uj = wrap_uj;
    double cum = start_uj;
    for (int i = 0; i < n; ++i) {
        fx.cumulative_uj.push_back(cum);
        fx.trace.readings.push_back({static_cast<double>(i), std::fmod(cum, wrap_uj)});
        cum += inc(rng);
    }
    return fx;
}

} // namespace

TEST_CASE("counter delta recovers ground-truth accumulation across wraps") {
    std::mt19937 rng(31);
    for (int iter = 0; iter < 30; ++iter) {
        auto fx = random_counter(rng, 1e6, 50, 7.5e5);
        // Window aligned with reading times i=4 .. i=41.
        double expected = (fx.cumulative_uj[41] - fx.cumulative_uj[4]) * 1e-6;
        auto got = counter_delta(fx.trace, 4.0, 41.0);
        CHECK(got.joules() == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("counter delta unfolds a single wrap") {
    EnergyCounterTrace tr;
    tr.domain = RaplDomain::dram;
    tr.wrap_range_uj = 1000.0;
    tr.readings = {{0.0, 900.0}, {1.0, 100.0}};
    CHECK(counter_delta(tr, 0.0, 1.0).joules() == doctest::Approx(200e-6).epsilon(1e-12));
}

TEST_CASE("counter delta snaps the window outward to bracketing readings") {
    EnergyCounterTrace tr;
    tr.wrap_range_uj = 1e6;
    tr.readings = {{0.0, 0.0}, {1.0, 100.0}, {2.0, 250.0}, {3.0, 450.0}};
    // [0.5, 2.5] has no readings at its edges; nearest bracketing pair is
    // t=0 and t=3.
    CHECK(counter_delta(tr, 0.5, 2.5).joules() == doctest::Approx(450e-6).epsilon(1e-12));
    CHECK(counter_delta(tr, 1.0, 2.0).joules() == doctest::Approx(150e-6).epsilon(1e-12));
    // Window end past the last reading falls back to the last reading.
    CHECK(counter_delta(tr, 1.0, 10.0).joules() == doctest::Approx(350e-6).epsilon(1e-12));
}

TEST_CASE("counter delta reports unusable data") {
    EnergyCounterTrace one;
    one.wrap_range_uj = 1e6;
    one.readings = {{0.0, 10.0}};
    CHECK_THROWS_AS(counter_delta(one, 0.0, 1.0), InsufficientDataError);

    EnergyCounterTrace tr;
    tr.wrap_range_uj = 1e6;
    tr.readings = {{0.0, 10.0}, {1.0, 20.0}};
    // Window entirely after the data: no two readings bracket it.
    CHECK_THROWS_AS(counter_delta(tr, 5.0, 6.0), InsufficientDataError);

    EnergyCounterTrace bad;
    bad.wrap_range_uj = 100.0;
    bad.readings = {{0.0, 10.0}, {1.0, 250.0}}; // 250 exceeds the wrap range
    CHECK_THROWS_AS(counter_delta(bad, 0.0, 1.0), UnreliableCounterError);
}

TEST_CASE("validation rejects disordered and out-of-range inputs") {
    auto ok = constant_trace(10.0, 10.0, 1.0);
    CHECK_NOTHROW(validate(ok));

    auto unordered = make_trace({{1.0, 5.0}, {0.5, 5.0}});
    CHECK_THROWS_AS(validate(unordered), FormatError);

    auto duplicate = make_trace({{1.0, 5.0}, {1.0, 5.0}});
    CHECK_THROWS_AS(validate(duplicate), FormatError);

    auto negative = make_trace({{0.0, -5.0}});
    CHECK_THROWS_AS(validate(negative), FormatError);

    auto bad_interval = make_trace({{0.0, 5.0}}, 0.0);
    CHECK_THROWS_AS(validate(bad_interval), FormatError);

    EnergyCounterTrace ctr;
    ctr.wrap_range_uj = 100.0;
    ctr.readings = {{0.0, 50.0}, {1.0, 100.0}}; // reading == wrap range
    CHECK_THROWS_AS(validate(ctr), FormatError);

    SessionLog log;
    log.session_id = "s";
    log.memory_gb = 16.0;
    log.epochs = {{0.0, 1.0}, {0.5, 2.0}}; // overlap
    CHECK_THROWS_AS(validate(log), FormatError);

    log.epochs = {{0.0, 1.0}, {1.0, 2.0}};
    CHECK_NOTHROW(validate(log));
    CHECK(session_start_s(log) == doctest::Approx(0.0));
    CHECK(session_end_s(log) == doctest::Approx(2.0));

    log.epochs.clear();
    CHECK_THROWS_AS(session_start_s(log), InsufficientDataError);
}

TEST_CASE("rapl domain names round trip") {
    CHECK(to_string(RaplDomain::cpu_package) == "cpu_package");
    CHECK(to_string(RaplDomain::dram) == "dram");
    CHECK(rapl_domain_from_string("cpu_package") == RaplDomain::cpu_package);
    CHECK(rapl_domain_from_string("dram") == RaplDomain::dram);
    CHECK_THROWS_AS(rapl_domain_from_string("gpu"), FormatError);
}
