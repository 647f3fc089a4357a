#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "dataset.hpp"
#include "neural.hpp"

using namespace smfc;

namespace {

SampleSeries make_series(double start, double step, int count, double voltage = 0.5) {
    SampleSeries s;
    s.deployment_start = start;
    for (int i = 0; i < count; ++i) {
        SampleRecord r;
        r.timestamp = start + i * step;
        r.voltage = voltage;
        r.current = 1e-4;
        r.power = voltage * 1e-4;
        r.ec = 500;
        r.temp = 20;
        r.vwc = 2000;
        s.records.push_back(r);
    }
    return s;
}

ResampledSeries make_resampled(double horizon, const std::vector<bool>& present,
                               double start = 0.0) {
    ResampledSeries rs;
    rs.horizon = horizon;
    rs.deployment_start = start;
    for (std::size_t i = 0; i < present.size(); ++i) {
        ResampledInterval iv;
        iv.interval_start = start + static_cast<double>(i) * horizon;
        if (present[i]) {
            iv.sample_count = 10;
            iv.mean_voltage = 0.5 + 0.001 * static_cast<double>(i);
            iv.mean_current = 1e-4;
            iv.mean_power = iv.mean_voltage * 1e-4;
            iv.mean_ec = 500;
            iv.mean_temp = 20;
            iv.mean_vwc = 2000;
        }
        rs.intervals.push_back(iv);
    }
    return rs;
}

}  // namespace

TEST_CASE("parse_samples reads well-formed rows") {
    std::stringstream src(
        "timestamp,voltage,current,power,ec,temp,vwc\n"
        "100,0.5,0.0001,0.00005,500,20,2000\n"
        "112,0.51,0.0001,0.000051,501,20,2001\n"
        "125,0.52,0.0001,0.000052,502,21,2002\n");
    ParseReport report;
    auto series = parse_samples(src, 90, report);
    CHECK(series.records.size() == 3);
    CHECK(report.rows_read == 3);
    CHECK(report.rows_skipped == 0);
    CHECK(series.records[0].voltage == doctest::Approx(0.5));
    CHECK(series.deployment_start == 90);
}

TEST_CASE("parse_samples skips rows with unparsable fields") {
    std::stringstream src(
        "timestamp,voltage,current,power,ec,temp,vwc\n"
        "100,0.5,0.0001,0.00005,500,20,2000\n"
        "112,garbage,0.0001,0.000051,501,20,2001\n"
        "125,0.52,0.0001,0.000052,502,21,2002\n");
    ParseReport report;
    auto series = parse_samples(src, 90, report);
    CHECK(series.records.size() == 2);
    CHECK(report.rows_skipped == 1);
}

TEST_CASE("parse_samples sorts out-of-order rows") {
    std::stringstream src(
        "timestamp,voltage,current,power,ec,temp,vwc\n"
        "125,0.52,0.0001,0.000052,502,21,2002\n"
        "100,0.5,0.0001,0.00005,500,20,2000\n"
        "112,0.51,0.0001,0.000051,501,20,2001\n");
    ParseReport report;
    auto series = parse_samples(src, 90, report);
    REQUIRE(series.records.size() == 3);
    CHECK(series.records[0].timestamp == 100);
    CHECK(series.records[2].timestamp == 125);
}

TEST_CASE("parse_samples rejects empty input and missing columns") {
    std::stringstream empty("");
    ParseReport report;
    CHECK_THROWS_WITH(parse_samples(empty, 0, report), "no samples");

    std::stringstream headers_only("timestamp,voltage,current,power,ec,temp,vwc\n");
    CHECK_THROWS_WITH(parse_samples(headers_only, 0, report), "no samples");

    std::stringstream no_vwc(
        "timestamp,voltage,current,power,ec,temp\n"
        "100,0.5,0.0001,0.00005,500,20\n");
    CHECK_THROWS_WITH(parse_samples(no_vwc, 0, report), "missing required column: vwc");
}

TEST_CASE("parse_samples accepts ISO-8601 timestamps") {
    std::stringstream src(
        "timestamp,voltage,current,power,ec,temp,vwc\n"
        "2021-06-04T00:00:00Z,0.5,0.0001,0.00005,500,20,2000\n"
        "2021-06-04 00:00:13,0.51,0.0001,0.000051,501,20,2001\n");
    ParseReport report;
    auto series = parse_samples(src, 1622764800, report);
    REQUIRE(series.records.size() == 2);
    CHECK(series.records[0].timestamp == doctest::Approx(1622764800.0));
    CHECK(series.records[1].timestamp == doctest::Approx(1622764813.0));
}

TEST_CASE("parse -> serialize -> parse round-trips exactly") {
    auto original = make_series(1000, 13, 40);
    original.records[7].voltage = 0.123456789012345;
    std::stringstream text;
    write_samples(original, text);
    ParseReport report;
    auto reparsed = parse_samples(text, original.deployment_start, report);
    REQUIRE(reparsed.records.size() == original.records.size());
    for (std::size_t i = 0; i < original.records.size(); ++i) {
        CHECK(reparsed.records[i].timestamp == original.records[i].timestamp);
        CHECK(reparsed.records[i].voltage == original.records[i].voltage);
        CHECK(reparsed.records[i].vwc == original.records[i].vwc);
    }
}

TEST_CASE("sanitize drops only exact-zero voltage rows") {
    auto series = make_series(0, 13, 10);
    std::size_t removed = 0;
    auto clean = sanitize(series, removed);
    CHECK(removed == 0);
    CHECK(clean.records.size() == 10);

    series.records[2].voltage = 0.0;
    series.records[7].voltage = 0.0;
    clean = sanitize(series, removed);
    CHECK(removed == 2);
    CHECK(clean.records.size() == 8);

    for (auto& r : series.records) r.voltage = 0.0;
    CHECK_THROWS_WITH(sanitize(series, removed), "series empty after sanitization");
}

TEST_CASE("sanitize is idempotent") {
    auto series = make_series(0, 13, 30);
    series.records[4].voltage = 0.0;
    std::size_t removed = 0;
    auto once = sanitize(series, removed);
    auto twice = sanitize(once, removed);
    CHECK(removed == 0);
    REQUIRE(twice.records.size() == once.records.size());
    for (std::size_t i = 0; i < once.records.size(); ++i)
        CHECK(twice.records[i].timestamp == once.records[i].timestamp);
}

TEST_CASE("resample averages samples into aligned intervals") {
    auto series = make_series(0, 12, 15);
    for (int i = 0; i < 15; ++i) series.records[static_cast<std::size_t>(i)].voltage = 0.4 + 0.01 * i;
    auto rs = resample(series, 180);
    REQUIRE(rs.intervals.size() == 1);
    double expected = 0.0;
    for (int i = 0; i < 15; ++i) expected += 0.4 + 0.01 * i;
    expected /= 15.0;
    CHECK(rs.intervals[0].mean_voltage == doctest::Approx(expected).epsilon(1e-12));
    CHECK(rs.intervals[0].sample_count == 15);
}

TEST_CASE("resample of a constant series is constant") {
    auto series = make_series(0, 13, 200, 0.37);
    auto rs = resample(series, 300);
    for (const auto& iv : rs.intervals) {
        if (iv.missing()) continue;
        CHECK(iv.mean_voltage == doctest::Approx(0.37).epsilon(1e-12));
        CHECK(iv.mean_ec == doctest::Approx(500.0).epsilon(1e-12));
    }
}

TEST_CASE("resample matches a brute-force per-interval mean") {
    neural::Rng rng(7);
    auto series = make_series(0, 12, 30);
    for (auto& r : series.records) r.voltage = rng.uniform(0.1, 0.9);
    auto rs = resample(series, 180);
    REQUIRE(rs.intervals.size() == 2);
    for (int k = 0; k < 2; ++k) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : series.records)
            if (r.timestamp >= k * 180.0 && r.timestamp < (k + 1) * 180.0) {
                sum += r.voltage;
                ++n;
            }
        CHECK(rs.intervals[static_cast<std::size_t>(k)].sample_count ==
              static_cast<std::size_t>(n));
        CHECK(rs.intervals[static_cast<std::size_t>(k)].mean_voltage ==
              doctest::Approx(sum / n).epsilon(1e-12));
    }
}

TEST_CASE("resample preserves the global mean with equal interval counts") {
    auto series = make_series(0, 12, 150);  // 15 samples per 180 s interval, 10 intervals
    neural::Rng rng(11);
    for (auto& r : series.records) r.voltage = rng.uniform(0.1, 0.9);
    auto rs = resample(series, 180);
    double mean_of_means = 0.0;
    for (const auto& iv : rs.intervals) {
        REQUIRE(iv.sample_count == 15);
        mean_of_means += iv.mean_voltage;
    }
    mean_of_means /= static_cast<double>(rs.intervals.size());
    double raw_mean = 0.0;
    for (const auto& r : series.records) raw_mean += r.voltage;
    raw_mean /= static_cast<double>(series.records.size());
    CHECK(mean_of_means == doctest::Approx(raw_mean).epsilon(1e-12));
}

TEST_CASE("resample rejects unsupported horizons") {
    auto series = make_series(0, 13, 10);
    CHECK_THROWS(resample(series, 600));
}

TEST_CASE("build_supervised windows the four preceding intervals") {
    auto rs = make_resampled(180, std::vector<bool>(5, true));
    auto ds = build_supervised(rs, 0);
    REQUIRE(ds.windows.size() == 1);
    CHECK(ds.windows[0].target_interval_start == doctest::Approx(4 * 180.0));
    // oldest-first lag features
    CHECK(ds.windows[0].input[0][1] == doctest::Approx(0.5));
    CHECK(ds.windows[0].input[3][1] == doctest::Approx(0.503));
    CHECK(ds.windows[0].target[0] == doctest::Approx(0.504));
    // per-timestep calendar features
    CHECK(ds.windows[0].input[0][6] == doctest::Approx(0.0));
    CHECK(ds.windows[0].input[1][7] == doctest::Approx(180.0 / 3600.0));
}

TEST_CASE("build_supervised yields n - 4 windows without gaps") {
    auto rs = make_resampled(300, std::vector<bool>(10, true));
    auto ds = build_supervised(rs, 0);
    CHECK(ds.windows.size() == 6);
    CHECK(ds.windows_dropped == 0);
}

TEST_CASE("build_supervised matches a brute-force enumerator on gap patterns") {
    neural::Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 8 + static_cast<int>(rng.uniform() * 30);
        std::vector<bool> present(static_cast<std::size_t>(n));
        for (auto&& p : present) p = rng.uniform() > 0.2;
        auto rs = make_resampled(180, present);

        std::vector<double> expected_targets;
        for (int t = 4; t < n; ++t) {
            bool ok = true;
            for (int k = t - 4; k <= t; ++k) ok = ok && present[static_cast<std::size_t>(k)];
            if (ok) expected_targets.push_back(t * 180.0);
        }
        if (expected_targets.empty()) {
            CHECK_THROWS(build_supervised(rs, 0));
            continue;
        }
        auto ds = build_supervised(rs, 0);
        REQUIRE(ds.windows.size() == expected_targets.size());
        for (std::size_t i = 0; i < expected_targets.size(); ++i)
            CHECK(ds.windows[i].target_interval_start == doctest::Approx(expected_targets[i]));
    }
}

TEST_CASE("build_supervised requires enough history") {
    auto rs = make_resampled(180, std::vector<bool>(4, true));
    CHECK_THROWS_WITH(build_supervised(rs, 0), "insufficient history");
}

TEST_CASE("split_chrono applies floor sizes with remainder to test") {
    auto rs = make_resampled(180, std::vector<bool>(104, true));
    auto ds = build_supervised(rs, 0);
    REQUIRE(ds.windows.size() == 100);
    auto split = split_chrono(ds, {0.70, 0.15, 0.15});
    CHECK(split.train.windows.size() == 70);
    CHECK(split.val.windows.size() == 15);
    CHECK(split.test.windows.size() == 15);

    auto rs10 = make_resampled(180, std::vector<bool>(14, true));
    auto ds10 = build_supervised(rs10, 0);
    REQUIRE(ds10.windows.size() == 10);
    auto split10 = split_chrono(ds10, {0.70, 0.15, 0.15});
    CHECK(split10.train.windows.size() == 7);
    CHECK(split10.val.windows.size() == 1);
    CHECK(split10.test.windows.size() == 2);
}

TEST_CASE("split_chrono slices stay chronological and disjoint") {
    auto rs = make_resampled(180, std::vector<bool>(60, true));
    auto ds = build_supervised(rs, 0);
    auto split = split_chrono(ds, {0.5, 0.25, 0.25});
    CHECK(split.train.windows.back().target_interval_start <
          split.val.windows.front().target_interval_start);
    CHECK(split.val.windows.back().target_interval_start <
          split.test.windows.front().target_interval_start);
    CHECK(split.train.windows.size() + split.val.windows.size() + split.test.windows.size() ==
          ds.windows.size());
}

TEST_CASE("split_chrono rejects slices that would be empty") {
    auto rs = make_resampled(180, std::vector<bool>(9, true));
    auto ds = build_supervised(rs, 0);  // 5 windows
    CHECK_THROWS_WITH(split_chrono(ds, {0.7, 0.1, 0.2}), "val slice empty");
}

TEST_CASE("tscv_folds follows the 20k/10/10 schedule") {
    auto rs = make_resampled(180, std::vector<bool>(104, true));
    auto ds = build_supervised(rs, 0);
    REQUIRE(ds.windows.size() == 100);
    auto folds = tscv_folds(ds);
    REQUIRE(folds.size() == 4);

    CHECK(folds[0].train.windows.size() == 20);
    CHECK(folds[0].naive_history.windows.size() == 10);
    CHECK(folds[0].test.windows.size() == 10);
    CHECK(folds[0].train.windows.front().target_interval_start ==
          ds.windows[0].target_interval_start);
    CHECK(folds[0].naive_history.windows.front().target_interval_start ==
          ds.windows[20].target_interval_start);
    CHECK(folds[0].test.windows.back().target_interval_start ==
          ds.windows[39].target_interval_start);

    CHECK(folds[3].train.windows.size() == 80);
    CHECK(folds[3].naive_history.windows.front().target_interval_start ==
          ds.windows[80].target_interval_start);
    CHECK(folds[3].test.windows.back().target_interval_start ==
          ds.windows[99].target_interval_start);
}

TEST_CASE("tscv_folds floor arithmetic on a tiny dataset") {
    auto rs = make_resampled(180, std::vector<bool>(14, true));
    auto ds = build_supervised(rs, 0);
    REQUIRE(ds.windows.size() == 10);
    auto folds = tscv_folds(ds);
    CHECK(folds[0].train.windows.size() == 2);
    CHECK(folds[0].naive_history.windows.size() == 1);
    CHECK(folds[0].test.windows.size() == 1);
    CHECK(folds[0].test.windows[0].target_interval_start == ds.windows[3].target_interval_start);
}

TEST_CASE("tscv_folds never overlap or reorder") {
    auto rs = make_resampled(180, std::vector<bool>(77, true));
    auto ds = build_supervised(rs, 0);
    for (const auto& fold : tscv_folds(ds)) {
        CHECK(fold.train.windows.back().target_interval_start <
              fold.naive_history.windows.front().target_interval_start);
        CHECK(fold.naive_history.windows.back().target_interval_start <
              fold.test.windows.front().target_interval_start);
    }
}

TEST_CASE("tscv_folds rejects datasets too small for four folds") {
    auto rs = make_resampled(180, std::vector<bool>(12, true));
    auto ds = build_supervised(rs, 0);  // 8 windows
    CHECK_THROWS(tscv_folds(ds));
}
