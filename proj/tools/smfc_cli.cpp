// Command-line front end for the smfc toolkit, built on the public C API.
//
// Subcommands: synth, ingest, train, evaluate, simulate, cv.
// Configuration layering: built-in defaults < key=value config file
// (--config) < command-line flags.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smfc/smfc.h"

namespace fs = std::filesystem;

namespace {

struct ApiError {
    std::string message;
};

void check(smfc_status status) {
    if (status != SMFC_OK) throw ApiError{smfc_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    explicit Handle(T* p) : ptr(p) {}
    ~Handle() { reset(); }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
    Handle& operator=(Handle&& other) noexcept {
        if (this != &other) {
            reset();
            ptr = other.ptr;
            other.ptr = nullptr;
        }
        return *this;
    }
    void reset() {
        if (ptr) Free(ptr);
        ptr = nullptr;
    }
    T** out() {
        reset();
        return &ptr;
    }
    T* get() const { return ptr; }
};

using SeriesHandle = Handle<smfc_series, smfc_series_free>;
using ResampledHandle = Handle<smfc_resampled, smfc_resampled_free>;
using DatasetHandle = Handle<smfc_dataset, smfc_dataset_free>;
using EnsembleHandle = Handle<smfc_ensemble, smfc_ensemble_free>;
using ForecastHandle = Handle<smfc_forecast_series, smfc_forecast_free>;
using SimHandle = Handle<smfc_sim, smfc_sim_free>;

// Options shared across subcommands. Defaults here are the built-in layer.
struct CommonOptions {
    std::string trace;
    double deployment_start = 0.0;
    std::vector<double> horizons = {180, 300, 900, 1800, 3600};
    std::vector<double> split = {0.70, 0.15, 0.15};
    unsigned long long seed = 0;
    std::string out_dir = "out";

    int hidden = 32;
    double learning_rate = 1e-3;
    long long batch_override = -1;  // <0 keeps the per-horizon default
    int max_epochs = 200;
    int patience = 20;
    std::vector<double> quantiles = {0.05, 0.95};

    std::string config_path;
    double r_int = 6926.0;
    double efficiency = 0.60;
    double e_act = 3.9e-6;
    std::string energy_model = "matched_load";
    double initial_stored = 0.0;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt, bool need_trace) {
    cmd->add_option("--trace", opt.trace,
                    need_trace ? "input trace file (required here or in the config file)"
                               : "input trace file");
    cmd->add_option("--deployment-start", opt.deployment_start,
                    "deployment start, epoch seconds");
    cmd->add_option("--horizons", opt.horizons,
                    "horizons in seconds (180 300 900 1800 3600)")
        ->delimiter(',');
    cmd->add_option("--split", opt.split, "train,val,test fractions")->delimiter(',')
        ->expected(3);
    cmd->add_option("--seed", opt.seed, "base RNG seed");
    cmd->add_option("--out-dir", opt.out_dir, "output directory");
    cmd->add_option("--hidden", opt.hidden, "LSTM hidden size");
    cmd->add_option("--lr", opt.learning_rate, "learning rate");
    cmd->add_option("--batch", opt.batch_override, "batch size override");
    cmd->add_option("--epochs", opt.max_epochs, "max training epochs");
    cmd->add_option("--patience", opt.patience, "early-stop patience");
    cmd->add_option("--quantiles", opt.quantiles, "lower,upper quantile pair")
        ->delimiter(',')
        ->expected(2);
    cmd->add_option("--r-int", opt.r_int, "internal resistance, ohms");
    cmd->add_option("--efficiency", opt.efficiency, "harvester efficiency");
    cmd->add_option("--e-act", opt.e_act, "per-activation energy, joules");
    cmd->add_option("--energy-model", opt.energy_model, "matched_load or measured_vi")
        ->check(CLI::IsMember({"matched_load", "measured_vi"}));
    cmd->add_option("--initial-stored", opt.initial_stored, "initial stored energy, joules");
    cmd->add_option("--config", opt.config_path,
                    "key=value config file (flags override its values)");
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(std::stod(part));
    return out;
}

// Applies a key=value config file to the options. Keys match the long flag
// names without the leading dashes. Runs before CLI11 parses argv, so
// command-line flags override file values.
void apply_config_file(const std::string& path, CommonOptions& opt) {
    std::ifstream in(path);
    if (!in) throw ApiError{"cannot open config file: " + path};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ApiError{"config line " + std::to_string(line_no) + ": expected key=value"};
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "trace") opt.trace = value;
        else if (key == "deployment-start") opt.deployment_start = std::stod(value);
        else if (key == "horizons") opt.horizons = parse_double_list(value);
        else if (key == "split") opt.split = parse_double_list(value);
        else if (key == "seed") opt.seed = std::stoull(value);
        else if (key == "out-dir") opt.out_dir = value;
        else if (key == "hidden") opt.hidden = std::stoi(value);
        else if (key == "lr") opt.learning_rate = std::stod(value);
        else if (key == "batch") opt.batch_override = std::stoll(value);
        else if (key == "epochs") opt.max_epochs = std::stoi(value);
        else if (key == "patience") opt.patience = std::stoi(value);
        else if (key == "quantiles") opt.quantiles = parse_double_list(value);
        else if (key == "r-int") opt.r_int = std::stod(value);
        else if (key == "efficiency") opt.efficiency = std::stod(value);
        else if (key == "e-act") opt.e_act = std::stod(value);
        else if (key == "energy-model") opt.energy_model = value;
        else if (key == "initial-stored") opt.initial_stored = std::stod(value);
        else throw ApiError{"config line " + std::to_string(line_no) + ": unknown key " + key};
    }
    if (opt.split.size() != 3) throw ApiError{"config: split needs three fractions"};
    if (opt.quantiles.size() != 2) throw ApiError{"config: quantiles needs two values"};
    if (opt.energy_model != "matched_load" && opt.energy_model != "measured_vi")
        throw ApiError{"config: energy-model must be matched_load or measured_vi"};
}

smfc_harvest_config harvest_config(const CommonOptions& opt) {
    smfc_harvest_config cfg;
    smfc_harvest_config_default(&cfg);
    cfg.internal_resistance = opt.r_int;
    cfg.harvester_efficiency = opt.efficiency;
    cfg.activation_energy = opt.e_act;
    cfg.energy_model = opt.energy_model == "measured_vi" ? SMFC_ENERGY_MEASURED_VI
                                                         : SMFC_ENERGY_MATCHED_LOAD;
    cfg.initial_stored_energy = opt.initial_stored;
    return cfg;
}

smfc_train_options train_options(const CommonOptions& opt, double horizon) {
    smfc_train_options to;
    check(smfc_train_options_default(&to, horizon));
    to.hidden_size = opt.hidden;
    to.learning_rate = opt.learning_rate;
    if (opt.batch_override > 0) to.batch_size = static_cast<size_t>(opt.batch_override);
    to.max_epochs = opt.max_epochs;
    to.patience = opt.patience;
    to.seed = opt.seed;
    to.lower_alpha = opt.quantiles[0];
    to.upper_alpha = opt.quantiles[1];
    return to;
}

// Effective configuration block embedded at the top of every text artifact.
void write_config_echo(std::ostream& out, const CommonOptions& opt) {
    out << "# trace = " << opt.trace << "\n";
    out << "# deployment_start = " << opt.deployment_start << "\n";
    out << "# split = " << opt.split[0] << "," << opt.split[1] << "," << opt.split[2] << "\n";
    out << "# seed = " << opt.seed << "\n";
    out << "# hidden = " << opt.hidden << "\n";
    out << "# lr = " << opt.learning_rate << "\n";
    out << "# epochs = " << opt.max_epochs << "\n";
    out << "# patience = " << opt.patience << "\n";
    out << "# quantiles = " << opt.quantiles[0] << "," << opt.quantiles[1] << "\n";
    out << "# r_int = " << opt.r_int << "\n";
    out << "# efficiency = " << opt.efficiency << "\n";
    out << "# e_act = " << opt.e_act << "\n";
    out << "# energy_model = " << opt.energy_model << "\n";
    out << "# initial_stored = " << opt.initial_stored << "\n";
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ApiError{"cannot open output file: " + path.string()};
    return out;
}

SeriesHandle load_clean_series(const CommonOptions& opt) {
    if (opt.trace.empty()) throw ApiError{"no input trace given (--trace or config file)"};
    SeriesHandle raw;
    size_t rows = 0, skipped = 0;
    check(smfc_series_parse_file(opt.trace.c_str(), opt.deployment_start, raw.out(), &rows,
                                 &skipped));
    SeriesHandle clean;
    size_t removed = 0;
    check(smfc_series_sanitize(raw.get(), clean.out(), &removed));
    return clean;
}

DatasetHandle build_dataset(const SeriesHandle& series, const CommonOptions& opt,
                            double horizon) {
    ResampledHandle resampled;
    check(smfc_resample(series.get(), horizon, resampled.out()));
    DatasetHandle dataset;
    size_t dropped = 0;
    check(smfc_build_supervised(resampled.get(), opt.deployment_start, dataset.out(), &dropped));
    return dataset;
}

std::vector<double> dataset_voltages(const DatasetHandle& ds) {
    std::vector<double> out(smfc_dataset_count(ds.get()));
    for (size_t i = 0; i < out.size(); ++i) {
        double target[3];
        check(smfc_dataset_target(ds.get(), i, target, nullptr));
        out[i] = target[0];
    }
    return out;
}

// Ground-truth usable energy per interval under the configured energy model.
std::vector<double> actual_energies(const DatasetHandle& test, const smfc_harvest_config& cfg,
                                    double dt) {
    const size_t n = smfc_dataset_count(test.get());
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        double target[3];
        check(smfc_dataset_target(test.get(), i, target, nullptr));
        if (cfg.energy_model == SMFC_ENERGY_MEASURED_VI) {
            check(smfc_usable_energy_vi(&target[0], &target[1], 1, dt, &cfg, &out[i]));
        } else {
            double watts = 0;
            check(smfc_usable_power(std::max(target[0], 0.0), &cfg, &watts));
            out[i] = watts * dt;
        }
    }
    return out;
}

// Forecast energy from a quantile's voltage prediction through the
// matched-load conversion.
std::vector<double> forecast_energies(const ForecastHandle& fc, int quantile,
                                      const smfc_harvest_config& cfg, double dt) {
    const size_t n = smfc_forecast_count(fc.get());
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        double values[9];
        check(smfc_forecast_get(fc.get(), i, values, nullptr));
        const double v = std::max(values[quantile], 0.0);  // voltage row, clamp negatives
        double watts = 0;
        check(smfc_usable_power(v, &cfg, &watts));
        out[i] = watts * dt;
    }
    return out;
}

std::string horizon_tag(double horizon) {
    return std::to_string(static_cast<long>(horizon)) + "s";
}

struct MetricRow {
    double mape_v = 0, mape_i = 0, mape_p = 0, energy_err = 0;
    double failed_rate = 0, missed_rate = 0;
    size_t predicted = 0, possible = 0;
    double coverage[3] = {0, 0, 0};
    double crossing[3] = {0, 0, 0};
};

MetricRow compute_metrics(const ForecastHandle& fc, const DatasetHandle& test, double dt) {
    const size_t n = smfc_forecast_count(fc.get());
    std::vector<double> pred_v(n), pred_i(n), pred_p(n), act_v(n), act_i(n), act_p(n);
    for (size_t i = 0; i < n; ++i) {
        double values[9], target[3];
        check(smfc_forecast_get(fc.get(), i, values, nullptr));
        check(smfc_dataset_target(test.get(), i, target, nullptr));
        pred_v[i] = values[1];  // median quantile
        pred_i[i] = values[4];
        pred_p[i] = values[7];
        act_v[i] = target[0];
        act_i[i] = target[1];
        act_p[i] = target[2];
    }
    MetricRow row;
    check(smfc_mape(pred_v.data(), act_v.data(), n, &row.mape_v, nullptr));
    check(smfc_mape(pred_i.data(), act_i.data(), n, &row.mape_i, nullptr));
    check(smfc_mape(pred_p.data(), act_p.data(), n, &row.mape_p, nullptr));
    check(smfc_total_energy_error(pred_p.data(), act_p.data(), n, dt, &row.energy_err));
    check(smfc_forecast_coverage(fc.get(), test.get(), row.coverage));
    check(smfc_forecast_crossing(fc.get(), row.crossing));
    return row;
}

void write_metric_block(std::ostream& out, const MetricRow& row) {
    out << "Test MAPE Voltage = " << row.mape_v << "\n";
    out << "Test MAPE Current = " << row.mape_i << "\n";
    out << "Test MAPE Power = " << row.mape_p << "\n";
    out << "Total Energy Error = " << row.energy_err << "\n";
    out << "Failed Activations (%) = " << row.failed_rate * 100.0 << "\n";
    out << "Missed Activations (%) = " << row.missed_rate * 100.0 << "\n";
    out << "Predicted Activations = " << row.predicted << "\n";
    out << "Possible Activations = " << row.possible << "\n";
    out << "Coverage Voltage (diagnostic) = " << row.coverage[0] << "\n";
    out << "Coverage Current (diagnostic) = " << row.coverage[1] << "\n";
    out << "Coverage Power (diagnostic) = " << row.coverage[2] << "\n";
    out << "Crossing Rate Voltage (diagnostic) = " << row.crossing[0] << "\n";
    out << "Crossing Rate Current (diagnostic) = " << row.crossing[1] << "\n";
    out << "Crossing Rate Power (diagnostic) = " << row.crossing[2] << "\n";
}

int cmd_synth(const CommonOptions& opt, const smfc_synth_config& synth,
              const std::string& out_path) {
    SeriesHandle series;
    check(smfc_series_synth(&synth, series.out()));
    check(smfc_series_write_file(series.get(), out_path.c_str()));
    std::cout << "wrote " << smfc_series_count(series.get()) << " samples to " << out_path
              << "\n";
    (void)opt;
    return 0;
}

int cmd_ingest(const CommonOptions& opt) {
    if (opt.trace.empty()) throw ApiError{"no input trace given (--trace or config file)"};
    SeriesHandle raw;
    size_t rows = 0, skipped = 0;
    check(smfc_series_parse_file(opt.trace.c_str(), opt.deployment_start, raw.out(), &rows,
                                 &skipped));
    SeriesHandle clean;
    size_t removed = 0;
    check(smfc_series_sanitize(raw.get(), clean.out(), &removed));
    size_t gaps = 0;
    double max_gap = 0;
    check(smfc_series_gap_stats(clean.get(), 60.0, &gaps, &max_gap));

    fs::create_directories(opt.out_dir);
    const fs::path trace_path = fs::path(opt.out_dir) / "normalized_trace.csv";
    check(smfc_series_write_file(clean.get(), trace_path.string().c_str()));

    auto report = open_output(fs::path(opt.out_dir) / "ingest_report.txt");
    write_config_echo(report, opt);
    report << "rows read = " << rows << "\n";
    report << "rows skipped = " << skipped << "\n";
    report << "zero-voltage rows dropped = " << removed << "\n";
    report << "records kept = " << smfc_series_count(clean.get()) << "\n";
    report << "gaps over 60s = " << gaps << "\n";
    report << "max gap seconds = " << max_gap << "\n";

    std::cout << "ingested " << rows << " rows (" << skipped << " skipped, " << removed
              << " zero-voltage dropped); normalized trace at " << trace_path.string() << "\n";
    return 0;
}

int cmd_train(const CommonOptions& opt) {
    auto series = load_clean_series(opt);
    fs::create_directories(opt.out_dir);
    int failures = 0;
    for (double horizon : opt.horizons) {
        try {
            auto dataset = build_dataset(series, opt, horizon);
            DatasetHandle train, val, test;
            check(smfc_dataset_split(dataset.get(), opt.split[0], opt.split[1], opt.split[2],
                                     train.out(), val.out(), test.out()));
            const auto to = train_options(opt, horizon);
            EnsembleHandle ensemble;
            check(smfc_train_ensemble(train.get(), val.get(), &to, ensemble.out()));

            const fs::path model_path =
                fs::path(opt.out_dir) / ("ensemble_" + horizon_tag(horizon) + ".smfcq");
            check(smfc_ensemble_save(ensemble.get(), model_path.string().c_str()));

            static const char* names[3] = {"lower", "median", "upper"};
            std::cout << "horizon " << horizon_tag(horizon) << ": trained on "
                      << smfc_dataset_count(train.get()) << " windows, batch " << to.batch_size
                      << ", model " << model_path.string() << "\n";
            for (int q = 0; q < 3; ++q) {
                int epochs = 0;
                double val_loss = 0;
                check(smfc_ensemble_summary(ensemble.get(), q, &epochs, &val_loss));
                std::cout << "  " << names[q] << ": " << epochs << " epochs, val loss "
                          << val_loss << "\n";
            }
        } catch (const ApiError& e) {
            std::cerr << "horizon " << horizon_tag(horizon) << ": error: " << e.message << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const CommonOptions& opt, const std::string& model_path) {
    EnsembleHandle ensemble;
    check(smfc_ensemble_load(model_path.c_str(), ensemble.out()));
    const double horizon = smfc_ensemble_horizon(ensemble.get());

    auto series = load_clean_series(opt);
    auto dataset = build_dataset(series, opt, horizon);
    DatasetHandle train, val, test;
    check(smfc_dataset_split(dataset.get(), opt.split[0], opt.split[1], opt.split[2],
                             train.out(), val.out(), test.out()));

    unsigned long long fp = 0;
    check(smfc_dataset_fingerprint(train.get(), &fp));
    if (fp != smfc_ensemble_fingerprint(ensemble.get()))
        std::cerr << "warning: trace differs from the ensemble's training data (fingerprint "
                     "mismatch)\n";

    ForecastHandle fc;
    check(smfc_forecast(ensemble.get(), test.get(), fc.out()));
    auto row = compute_metrics(fc, test, horizon);

    // activation rows come from the lower-quantile (guaranteed-energy) schedule
    const auto cfg = harvest_config(opt);
    const auto actual = actual_energies(test, cfg, horizon);
    const auto forecast_e = forecast_energies(fc, 0, cfg, horizon);
    SimHandle sim;
    check(smfc_simulate(forecast_e.data(), actual.data(), actual.size(), &cfg, 0.0, horizon,
                        sim.out()));
    smfc_sim_totals totals;
    check(smfc_sim_totals_get(sim.get(), &totals));
    row.predicted = totals.scheduled;
    row.possible = totals.max_possible;
    check(smfc_failed_rate(totals.failed, totals.scheduled, &row.failed_rate));
    if (totals.max_possible > 0)
        check(smfc_missed_rate(totals.missed, totals.max_possible, &row.missed_rate));

    fs::create_directories(opt.out_dir);
    const fs::path forecast_path =
        fs::path(opt.out_dir) / ("forecast_" + horizon_tag(horizon) + ".csv");
    check(smfc_forecast_export_file(fc.get(), test.get(), forecast_path.string().c_str()));

    auto report = open_output(fs::path(opt.out_dir) / ("metrics_" + horizon_tag(horizon) + ".txt"));
    write_config_echo(report, opt);
    write_metric_block(report, row);

    write_metric_block(std::cout, row);
    std::cout << "forecast data written to " << forecast_path.string() << "\n";
    return 0;
}

int cmd_simulate(const CommonOptions& opt, const std::string& model_path,
                 std::vector<std::string> quantile_names) {
    EnsembleHandle ensemble;
    check(smfc_ensemble_load(model_path.c_str(), ensemble.out()));
    const double horizon = smfc_ensemble_horizon(ensemble.get());

    auto series = load_clean_series(opt);
    auto dataset = build_dataset(series, opt, horizon);
    DatasetHandle train, val, test;
    check(smfc_dataset_split(dataset.get(), opt.split[0], opt.split[1], opt.split[2],
                             train.out(), val.out(), test.out()));

    unsigned long long fp = 0;
    check(smfc_dataset_fingerprint(train.get(), &fp));
    if (fp != smfc_ensemble_fingerprint(ensemble.get()))
        std::cerr << "warning: trace differs from the ensemble's training data (fingerprint "
                     "mismatch)\n";

    ForecastHandle fc;
    check(smfc_forecast(ensemble.get(), test.get(), fc.out()));

    const auto cfg = harvest_config(opt);
    const auto actual = actual_energies(test, cfg, horizon);

    // naive history: the windows spanning the test-set length right before it
    const size_t n_total = smfc_dataset_count(dataset.get());
    const size_t n_test = smfc_dataset_count(test.get());
    const size_t test_begin = n_total - n_test;
    const size_t hist_begin = test_begin > n_test ? test_begin - n_test : 0;
    DatasetHandle history;
    check(smfc_dataset_slice(dataset.get(), hist_begin, test_begin, history.out()));
    const auto history_v = dataset_voltages(history);

    fs::create_directories(opt.out_dir);
    auto table = open_output(fs::path(opt.out_dir) / ("comparison_" + horizon_tag(horizon) + ".txt"));
    write_config_echo(table, opt);

    size_t possible = 0;
    check(smfc_oracle_max(actual.data(), actual.size(), &cfg, &possible));

    auto emit = [&](const std::string& name, const smfc_sim_totals& totals) {
        std::ostringstream line;
        line << name << ": scheduled " << totals.scheduled << ", successful "
             << totals.successful << ", failed " << totals.failed << " ("
             << (totals.scheduled
                     ? 100.0 * static_cast<double>(totals.failed) /
                           static_cast<double>(totals.scheduled)
                     : 0.0)
             << "%), missed " << totals.missed << " ("
             << (totals.max_possible
                     ? 100.0 * static_cast<double>(totals.missed) /
                           static_cast<double>(totals.max_possible)
                     : 0.0)
             << "%)";
        table << line.str() << "\n";
        std::cout << line.str() << "\n";
    };

    table << "Possible Activations = " << possible << "\n";
    std::cout << "Possible Activations = " << possible << "\n";

    static const char* all_names[3] = {"lower", "median", "upper"};
    for (const auto& name : quantile_names) {
        int q = -1;
        for (int k = 0; k < 3; ++k)
            if (name == all_names[k]) q = k;
        if (q < 0) throw ApiError{"unknown quantile name: " + name};
        const auto forecast_e = forecast_energies(fc, q, cfg, horizon);
        SimHandle sim;
        check(smfc_simulate(forecast_e.data(), actual.data(), actual.size(), &cfg, 0.0, horizon,
                            sim.out()));
        const fs::path sim_path = fs::path(opt.out_dir) /
                                  ("sim_" + name + "_" + horizon_tag(horizon) + ".csv");
        check(smfc_sim_export_file(sim.get(), sim_path.string().c_str()));
        smfc_sim_totals totals;
        check(smfc_sim_totals_get(sim.get(), &totals));
        emit(name, totals);
    }

    SimHandle naive;
    check(smfc_naive_simulate(history_v.data(), history_v.size(), actual.data(), actual.size(),
                              horizon, &cfg, 0.0, naive.out()));
    smfc_sim_totals naive_totals;
    check(smfc_sim_totals_get(naive.get(), &naive_totals));
    emit("naive", naive_totals);

    std::ostringstream oracle_line;
    oracle_line << "oracle: successful " << possible;
    table << oracle_line.str() << "\n";
    std::cout << oracle_line.str() << "\n";
    return 0;
}

int cmd_cv(const CommonOptions& opt) {
    auto series = load_clean_series(opt);
    fs::create_directories(opt.out_dir);
    const auto cfg = harvest_config(opt);
    int failures = 0;

    for (double horizon : opt.horizons) {
        std::vector<MetricRow> rows;
        try {
            auto dataset = build_dataset(series, opt, horizon);
            for (int fold = 1; fold <= 4; ++fold) {
                DatasetHandle fold_train, naive_hist, fold_test;
                const smfc_status st = smfc_dataset_tscv(dataset.get(), fold, fold_train.out(),
                                                         naive_hist.out(), fold_test.out());
                if (st != SMFC_OK) {
                    std::cerr << "horizon " << horizon_tag(horizon) << " fold " << fold
                              << ": skipped: " << smfc_last_error() << "\n";
                    continue;
                }
                // last 15% of the fold's training range serves as validation
                const size_t n = smfc_dataset_count(fold_train.get());
                const size_t n_val = std::max<size_t>(1, n * 15 / 100);
                if (n < n_val + 5) {
                    std::cerr << "horizon " << horizon_tag(horizon) << " fold " << fold
                              << ": skipped: too few training windows\n";
                    continue;
                }
                DatasetHandle tr, va;
                check(smfc_dataset_slice(fold_train.get(), 0, n - n_val, tr.out()));
                check(smfc_dataset_slice(fold_train.get(), n - n_val, n, va.out()));

                const auto to = train_options(opt, horizon);
                EnsembleHandle ensemble;
                check(smfc_train_ensemble(tr.get(), va.get(), &to, ensemble.out()));
                ForecastHandle fc;
                check(smfc_forecast(ensemble.get(), fold_test.get(), fc.out()));
                auto row = compute_metrics(fc, fold_test, horizon);

                const auto actual = actual_energies(fold_test, cfg, horizon);
                const auto forecast_e = forecast_energies(fc, 0, cfg, horizon);  // lower bound
                SimHandle sim;
                check(smfc_simulate(forecast_e.data(), actual.data(), actual.size(), &cfg, 0.0,
                                    horizon, sim.out()));
                smfc_sim_totals totals;
                check(smfc_sim_totals_get(sim.get(), &totals));
                row.predicted = totals.scheduled;
                row.possible = totals.max_possible;
                double rate = 0;
                check(smfc_failed_rate(totals.failed, totals.scheduled, &rate));
                row.failed_rate = rate;
                if (totals.max_possible > 0) {
                    check(smfc_missed_rate(totals.missed, totals.max_possible, &rate));
                    row.missed_rate = rate;
                }
                rows.push_back(row);

                auto report = open_output(fs::path(opt.out_dir) /
                                          ("cv_fold" + std::to_string(fold) + "_" +
                                           horizon_tag(horizon) + ".txt"));
                write_config_echo(report, opt);
                report << "fold = " << fold << "\n";
                write_metric_block(report, row);
                std::cout << "horizon " << horizon_tag(horizon) << " fold " << fold
                          << ": MAPE V " << row.mape_v << "%, failed "
                          << row.failed_rate * 100 << "%, missed " << row.missed_rate * 100
                          << "%\n";
            }
        } catch (const ApiError& e) {
            std::cerr << "horizon " << horizon_tag(horizon) << ": error: " << e.message << "\n";
            ++failures;
            continue;
        }
        if (rows.empty()) continue;

        auto summary = open_output(fs::path(opt.out_dir) /
                                   ("cv_summary_" + horizon_tag(horizon) + ".txt"));
        write_config_echo(summary, opt);
        auto aggregate = [&](const char* name, auto getter) {
            std::vector<double> values;
            for (const auto& r : rows) values.push_back(getter(r));
            std::sort(values.begin(), values.end());
            const double median = values.size() % 2 == 1
                                      ? values[values.size() / 2]
                                      : 0.5 * (values[values.size() / 2 - 1] +
                                               values[values.size() / 2]);
            summary << name << " min = " << values.front() << "\n";
            summary << name << " median = " << median << "\n";
            summary << name << " max = " << values.back() << "\n";
        };
        aggregate("Test MAPE Voltage", [](const MetricRow& r) { return r.mape_v; });
        aggregate("Test MAPE Current", [](const MetricRow& r) { return r.mape_i; });
        aggregate("Test MAPE Power", [](const MetricRow& r) { return r.mape_p; });
        aggregate("Total Energy Error", [](const MetricRow& r) { return r.energy_err; });
        aggregate("Failed Activations (%)",
                  [](const MetricRow& r) { return r.failed_rate * 100; });
        aggregate("Missed Activations (%)",
                  [](const MetricRow& r) { return r.missed_rate * 100; });
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SMFC energy forecasting and activation scheduling"};
    app.require_subcommand(1);

    CommonOptions opt;

    smfc_synth_config synth;
    smfc_synth_config_default(&synth);
    std::string synth_out = "trace.csv";
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic trace");
    synth_cmd->add_option("--out", synth_out, "output trace path");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--days", synth.days, "trace length in days");
    synth_cmd->add_option("--start", synth.start_timestamp, "start timestamp, epoch seconds");
    synth_cmd->add_option("--base-voltage", synth.base_voltage, "mean open-circuit voltage");
    synth_cmd->add_option("--drift", synth.drift_fraction,
                          "total fractional voltage change across the span");
    synth_cmd->add_option("--diurnal", synth.diurnal_amplitude, "relative diurnal amplitude");
    synth_cmd->add_option("--noise", synth.noise_level, "relative noise level");
    synth_cmd->add_option("--current-scale", synth.current_scale, "current/voltage ratio");
    synth_cmd->add_option("--zero-rate", synth.zero_rate, "fraction of outage rows");

    auto* ingest_cmd = app.add_subcommand("ingest", "parse and sanitize a trace");
    add_common_flags(ingest_cmd, opt, true);

    auto* train_cmd = app.add_subcommand("train", "train quantile ensembles per horizon");
    add_common_flags(train_cmd, opt, true);

    std::string model_path;
    auto* eval_cmd = app.add_subcommand("evaluate", "metric report for a trained ensemble");
    add_common_flags(eval_cmd, opt, true);
    eval_cmd->add_option("--model", model_path, "ensemble file")->required();

    std::vector<std::string> quantile_names = {"lower", "median", "upper"};
    auto* sim_cmd = app.add_subcommand("simulate", "run the activation scheduler");
    add_common_flags(sim_cmd, opt, true);
    sim_cmd->add_option("--model", model_path, "ensemble file")->required();
    sim_cmd->add_option("--use-quantiles", quantile_names,
                        "quantile schedules to run (lower median upper)")
        ->delimiter(',');

    auto* cv_cmd = app.add_subcommand("cv", "walk-forward cross validation");
    add_common_flags(cv_cmd, opt, true);

    // apply the config-file layer before CLI11 so flags override it
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) apply_config_file(argv[i + 1], opt);
            else if (arg.rfind("--config=", 0) == 0) apply_config_file(arg.substr(9), opt);
        }
    } catch (const ApiError& e) {
        std::cerr << "error: " << e.message << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: bad config value: " << e.what() << "\n";
        return 1;
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return cmd_synth(opt, synth, synth_out);
        if (ingest_cmd->parsed()) return cmd_ingest(opt);
        if (train_cmd->parsed()) return cmd_train(opt);
        if (eval_cmd->parsed()) return cmd_evaluate(opt, model_path);
        if (sim_cmd->parsed()) return cmd_simulate(opt, model_path, quantile_names);
        if (cv_cmd->parsed()) return cmd_cv(opt);
    } catch (const ApiError& e) {
        std::cerr << "error: " << e.message << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
