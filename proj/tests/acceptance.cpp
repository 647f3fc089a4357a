// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// unconditional criterion fails. argv[1] is the path to the smfc-cli
// binary, used for the end-to-end determinism check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "forecast.hpp"
#include "harvestsim.hpp"
#include "metrics.hpp"
#include "neural.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s — %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

// ---- 1: gradient correctness ------------------------------------------------

bool criterion1() {
    const auto t0 = Clock::now();
    smfc::neural::ModelConfig config;
    config.hidden_size = 4;
    config.alpha = 0.05;
    auto rep = smfc::neural::grad_check(config, 50, 1234);
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "grad check max rel error " << rep.max_rel_error << " over " << rep.points_tested
           << " points (" << rep.points_skipped << " near-kink skipped), " << elapsed << " s";
    return [&] {
        bool ok = rep.max_rel_error < 1e-4 && rep.points_tested >= 40 && elapsed < 10.0;
        report(1, ok, detail.str());
        return ok;
    }();
}

// ---- 2: a corrupted gradient is detected ------------------------------------

bool criterion2() {
    using namespace smfc::neural;
    ModelConfig config;
    config.hidden_size = 4;
    config.alpha = 0.5;
    config.seed = 77;
    LstmWeights weights(config);
    Rng rng(501);
    std::vector<double> sequence(static_cast<std::size_t>(config.sequence_length) *
                                 static_cast<std::size_t>(config.input_size));
    for (auto& x : sequence) x = rng.uniform(-1, 1);
    double actual[3] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

    ForwardCache cache;
    forward(weights, sequence, cache);
    std::vector<double> grad(weights.size(), 0.0);
    backward(weights, cache, {actual, 3}, config.alpha, grad);

    // corrupt the largest-magnitude gradient entry by x2 and compare it to a
    // central finite difference at that coordinate
    std::size_t k = 0;
    for (std::size_t j = 0; j < grad.size(); ++j)
        if (std::abs(grad[j]) > std::abs(grad[k])) k = j;
    const double corrupted = 2.0 * grad[k];

    const double h = 1e-5 * std::max(1.0, std::abs(weights.flat()[k]));
    const double saved = weights.flat()[k];
    ForwardCache fd_cache;
    weights.flat()[k] = saved + h;
    forward(weights, sequence, fd_cache);
    const double up = pinball_loss(
        {fd_cache.outputs.data(), fd_cache.outputs.size()}, {actual, 3}, config.alpha);
    weights.flat()[k] = saved - h;
    forward(weights, sequence, fd_cache);
    const double down = pinball_loss(
        {fd_cache.outputs.data(), fd_cache.outputs.size()}, {actual, 3}, config.alpha);
    weights.flat()[k] = saved;
    const double fd = (up - down) / (2 * h);

    const double rel =
        std::abs(corrupted - fd) / std::max({std::abs(corrupted), std::abs(fd), 1e-8});
    std::ostringstream detail;
    detail << "x2-corrupted gradient rel error " << rel << " (threshold 0.1)";
    const bool ok = rel > 0.1;
    report(2, ok, detail.str());
    return ok;
}

// ---- 3: quantile coverage on the synthetic generator -----------------------

bool criterion3() {
    using namespace smfc;
    const auto t0 = Clock::now();
    synth::SynthConfig sc;
    sc.seed = 42;
    sc.days = 12.0;
    auto trace = synth::generate_trace(sc);
    auto resampled = resample(trace, 180);
    auto dataset = build_supervised(resampled, trace.deployment_start);
    if (dataset.windows.size() < 5000) {
        report(3, false, "only " + std::to_string(dataset.windows.size()) + " windows");
        return false;
    }
    auto split = split_chrono(dataset, SplitSpec{});

    neural::ModelConfig mc;
    mc.hidden_size = 16;
    mc.seed = 42;
    neural::TrainConfig tc;
    tc.batch_size = neural::default_batch_size(180);
    auto ensemble = forecast::train_ensemble(split.train, split.val, mc, tc, 0.05, 0.95);
    const double train_seconds = seconds_since(t0);

    auto series = forecast::forecast_series(ensemble, split.test);
    auto cov = metrics::interval_coverage(series, split.test);
    const double pooled =
        (cov.per_output[0] + cov.per_output[1] + cov.per_output[2]) / 3.0;

    std::ostringstream detail;
    detail << dataset.windows.size() << " windows; coverage v=" << cov.per_output[0]
           << " i=" << cov.per_output[1] << " p=" << cov.per_output[2] << " pooled=" << pooled
           << "; " << train_seconds << " s training";
    const bool ok = pooled >= 0.85 && pooled <= 0.95 && train_seconds < 300.0;
    report(3, ok, detail.str());
    return ok;
}

// ---- 4: metric oracles -------------------------------------------------------

bool criterion4() {
    using namespace smfc;
    neural::Rng rng(901);
    double worst = 0.0;
    auto relerr = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    };

    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 30);
        std::vector<double> p(n), a(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.uniform(-2, 2);
            a[i] = rng.uniform(0.1, 2.0);  // away from the exclusion threshold
        }
        // MAPE
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) sum += std::abs((p[i] - a[i]) / a[i]);
        worst = std::max(worst, relerr(metrics::mape(p, a),
                                       100.0 * sum / static_cast<double>(n)));
        // total energy error
        double pe = 0, ae = 0;
        const double dt = rng.uniform(1, 3600);
        for (std::size_t i = 0; i < n; ++i) {
            pe += p[i] * dt;
            ae += a[i] * dt;
        }
        worst = std::max(worst, relerr(metrics::total_energy_error(p, a, dt),
                                       100.0 * (pe - ae) / ae));
        // activation rates
        const std::size_t scheduled = 1 + static_cast<std::size_t>(rng.uniform() * 500);
        const std::size_t failed =
            static_cast<std::size_t>(rng.uniform() * static_cast<double>(scheduled + 1)) %
            (scheduled + 1);
        worst = std::max(worst, relerr(metrics::failed_activation_rate(failed, scheduled),
                                       static_cast<double>(failed) /
                                           static_cast<double>(scheduled)));
        const std::size_t possible = 1 + static_cast<std::size_t>(rng.uniform() * 500);
        const std::size_t missed =
            static_cast<std::size_t>(rng.uniform() * static_cast<double>(possible + 1)) %
            (possible + 1);
        worst = std::max(worst, relerr(metrics::missed_activation_rate(missed, possible),
                                       static_cast<double>(missed) /
                                           static_cast<double>(possible)));
        // coverage and crossing on random interval forecasts
        forecast::ForecastSeries series;
        SupervisedDataset actual;
        series.horizon = actual.horizon = 180;
        for (std::size_t i = 0; i < n; ++i) {
            forecast::QuantileForecast f;
            SupervisedWindow w;
            for (int k = 0; k < 3; ++k) {
                f.values[0][k] = rng.uniform(-1, 1);
                f.values[1][k] = rng.uniform(-1, 1);
                f.values[2][k] = rng.uniform(-1, 1);
                w.target[k] = rng.uniform(-1, 1);
            }
            series.forecasts.push_back(f);
            actual.windows.push_back(w);
        }
        auto cov = metrics::interval_coverage(series, actual);
        auto cross = forecast::quantile_crossing_rate(series);
        for (int k = 0; k < 3; ++k) {
            std::size_t inside = 0, crossed = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& f = series.forecasts[i];
                if (f.values[0][k] <= actual.windows[i].target[k] &&
                    actual.windows[i].target[k] <= f.values[2][k])
                    ++inside;
                if (f.values[0][k] > f.values[1][k] || f.values[1][k] > f.values[2][k])
                    ++crossed;
            }
            if (inside > 0 || cov.per_output[k] > 0)
                worst = std::max(worst,
                                 relerr(cov.per_output[k],
                                        static_cast<double>(inside) / static_cast<double>(n)));
            if (crossed > 0 || cross.per_output[k] > 0)
                worst = std::max(worst,
                                 relerr(cross.per_output[k],
                                        static_cast<double>(crossed) / static_cast<double>(n)));
        }
    }
    std::ostringstream detail;
    detail << "worst metric-vs-brute-force rel error " << worst << " over 1000 instances";
    const bool ok = worst <= 1e-12;
    report(4, ok, detail.str());
    return ok;
}

// ---- 5: ledger conservation and oracle dominance ----------------------------

bool criterion5() {
    using namespace smfc::harvestsim;
    const auto t0 = Clock::now();
    smfc::neural::Rng rng(1201);
    HarvestConfig cfg;
    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 25);
        std::vector<double> forecast(n), actual(n);
        for (std::size_t t = 0; t < n; ++t) {
            forecast[t] = rng.uniform(0, 6 * cfg.activation_energy);
            actual[t] = rng.uniform(0, 6 * cfg.activation_energy);
        }
        auto trace = simulate_schedule(forecast, actual, cfg);
        double harvested = 0, consumed = 0, wasted = 0;
        for (const auto& e : trace.ledger) {
            harvested += e.harvested;
            consumed += e.consumed;
            wasted += e.wasted;
            if (e.stored_after < 0) ok = false;
        }
        const double lhs = harvested + cfg.initial_stored_energy;
        const double rhs = consumed + wasted + trace.ledger.back().stored_after;
        if (std::abs(lhs - rhs) > 1e-12 * std::max(lhs, 1e-9)) ok = false;
        if (trace.successful > oracle_max(actual, cfg)) ok = false;
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "1000 random simulations, " << elapsed << " s";
    ok = ok && elapsed < 30.0;
    report(5, ok, detail.str());
    return ok;
}

// ---- 6: certified underestimates never fail ---------------------------------

bool criterion6() {
    using namespace smfc::harvestsim;
    smfc::neural::Rng rng(1301);
    HarvestConfig cfg;
    std::size_t total_failed = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 25);
        std::vector<double> forecast(n), actual(n);
        for (std::size_t t = 0; t < n; ++t) {
            actual[t] = rng.uniform(0, 6 * cfg.activation_energy);
            forecast[t] = std::min(rng.uniform(0, 6 * cfg.activation_energy), actual[t]);
        }
        total_failed += simulate_schedule(forecast, actual, cfg).failed;
    }
    std::ostringstream detail;
    detail << total_failed << " failures across 1000 clamped-forecast simulations";
    const bool ok = total_failed == 0;
    report(6, ok, detail.str());
    return ok;
}

// ---- 7: baseline ordering on drifting data ----------------------------------

bool criterion7() {
    using namespace smfc;
    synth::SynthConfig sc;
    sc.seed = 7;
    sc.days = 12.0;
    // linear relative drift of -0.74 overall makes the final 15% of the
    // span (the test split) decline by roughly 30%
    sc.drift_fraction = -0.74;
    auto trace = synth::generate_trace(sc);
    auto resampled = resample(trace, 900);
    auto dataset = build_supervised(resampled, trace.deployment_start);
    auto split = split_chrono(dataset, SplitSpec{});

    neural::ModelConfig mc;
    mc.hidden_size = 16;
    mc.seed = 7;
    neural::TrainConfig tc;
    tc.batch_size = neural::default_batch_size(900);
    auto ensemble = forecast::train_ensemble(split.train, split.val, mc, tc, 0.05, 0.95);
    auto series = forecast::forecast_series(ensemble, split.test);

    harvestsim::HarvestConfig cfg;
    const double dt = 900.0;
    const std::size_t n = split.test.windows.size();
    std::vector<double> actual(n), lower_forecast(n);
    for (std::size_t i = 0; i < n; ++i) {
        actual[i] = harvestsim::usable_power(std::max(split.test.windows[i].target[0], 0.0),
                                             cfg) * dt;
        lower_forecast[i] =
            harvestsim::usable_power(std::max(series.forecasts[i].values[0][0], 0.0), cfg) * dt;
    }
    // naive history: the same-length span immediately before the test split
    const std::size_t test_begin = dataset.windows.size() - n;
    const std::size_t hist_begin = test_begin > n ? test_begin - n : 0;
    std::vector<double> history;
    for (std::size_t i = hist_begin; i < test_begin; ++i)
        history.push_back(dataset.windows[i].target[0]);

    const std::size_t oracle = harvestsim::oracle_max(actual, cfg);
    auto lstm = harvestsim::simulate_schedule(lower_forecast, actual, cfg);
    auto naive = harvestsim::naive_schedule(history, actual, dt, cfg);
    const double missed_rate =
        metrics::missed_activation_rate(lstm.missed, lstm.max_possible);

    std::ostringstream detail;
    detail << "successes oracle=" << oracle << " lstm-lower=" << lstm.successful
           << " naive=" << naive.successful << "; lstm missed rate " << missed_rate * 100
           << "% (lstm failed " << lstm.failed << ", naive failed " << naive.failed << ")";
    const bool ok = oracle >= lstm.successful && lstm.successful >= naive.successful &&
                    missed_rate < 0.10;
    report(7, ok, detail.str());
    return ok;
}

// ---- 8: end-to-end determinism through the CLI ------------------------------

std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool criterion8(const std::string& cli) {
    const fs::path root = fs::temp_directory_path() / "smfc_acceptance8";
    std::error_code ec;
    fs::remove_all(root, ec);
    fs::create_directories(root);
    const fs::path trace = root / "trace.csv";

    auto run = [&](const std::string& args) {
        const std::string cmd = "'" + cli + "' " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    if (run("synth --days 3 --seed 5 --out '" + trace.string() + "'") != 0) {
        report(8, false, "synth subcommand failed");
        return false;
    }
    const std::string common = "train --trace '" + trace.string() +
                               "' --horizons 1800 --seed 11 --hidden 6 --epochs 15 --patience 5 --out-dir '";
    if (run(common + (root / "a").string() + "'") != 0 ||
        run(common + (root / "b").string() + "'") != 0) {
        report(8, false, "train subcommand failed");
        return false;
    }
    const auto a = read_bytes(root / "a" / "ensemble_1800s.smfcq");
    const auto b = read_bytes(root / "b" / "ensemble_1800s.smfcq");
    std::ostringstream detail;
    detail << "two seeded train runs: " << a.size() << " vs " << b.size() << " bytes, "
           << (a == b ? "byte-identical" : "DIFFER");
    const bool ok = !a.empty() && a == b;
    report(8, ok, detail.str());
    fs::remove_all(root, ec);
    return ok;
}

// ---- 9: arithmetic anchors ---------------------------------------------------

bool criterion9() {
    using namespace smfc::harvestsim;
    HarvestConfig cfg;
    const double p = usable_power(0.5, cfg);
    const double banked[3] = {10e-6, 10e-6, 3.49e-6};  // 23.49 uJ total
    const std::size_t n = oracle_max(banked, cfg);
    std::ostringstream detail;
    detail << "usable_power(0.5 V) = " << p << " W; oracle_max(23.49 uJ) = " << n;
    const bool ok = std::abs(p - 5.414e-6) <= 1e-9 && n == 6;
    report(9, ok, detail.str());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    int failures = 0;
    if (!criterion1()) ++failures;
    if (!criterion2()) ++failures;
    if (!criterion3()) ++failures;
    if (!criterion4()) ++failures;
    if (!criterion5()) ++failures;
    if (!criterion6()) ++failures;
    if (!criterion7()) ++failures;
    if (cli.empty()) {
        report(8, false, "no CLI path supplied");
        ++failures;
    } else if (!criterion8(cli)) {
        ++failures;
    }
    if (!criterion9()) ++failures;
    std::printf(
        "criterion 10: SKIP — conditional on the original field dataset, which is not "
        "bundled\n");
    std::printf("%s (%d failing)\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                failures);
    return failures == 0 ? 0 : 1;
}
