#include "smfc/smfc.h"

#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>

#include "dataset.hpp"
#include "forecast.hpp"
#include "harvestsim.hpp"
#include "metrics.hpp"
#include "neural.hpp"
#include "synth.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
smfc_status guarded(Fn&& fn) {
    try {
        fn();
        return SMFC_OK;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SMFC_ERROR;
    } catch (...) {
        g_last_error = "unknown error";
        return SMFC_ERROR;
    }
}

void require(bool ok, const char* message) {
    if (!ok) throw std::runtime_error(message);
}

smfc::harvestsim::HarvestConfig to_cpp(const smfc_harvest_config* c) {
    require(c != nullptr, "null harvest config");
    smfc::harvestsim::HarvestConfig out;
    out.internal_resistance = c->internal_resistance;
    out.harvester_efficiency = c->harvester_efficiency;
    out.activation_energy = c->activation_energy;
    out.energy_model = c->energy_model == SMFC_ENERGY_MEASURED_VI
                           ? smfc::harvestsim::EnergyModel::kMeasuredVi
                           : smfc::harvestsim::EnergyModel::kMatchedLoad;
    out.initial_stored_energy = c->initial_stored_energy;
    return out;
}

}  // namespace

struct smfc_series {
    smfc::SampleSeries value;
};
struct smfc_resampled {
    smfc::ResampledSeries value;
};
struct smfc_dataset {
    smfc::SupervisedDataset value;
};
struct smfc_ensemble {
    smfc::forecast::QuantileEnsemble value;
};
struct smfc_forecast_series {
    smfc::forecast::ForecastSeries value;
};
struct smfc_sim {
    smfc::harvestsim::SimulationTrace value;
};

extern "C" {

const char* smfc_version(void) { return "1.0.0"; }

const char* smfc_last_error(void) { return g_last_error.c_str(); }

smfc_status smfc_series_parse_file(const char* path, double deployment_start, smfc_series** out,
                                   size_t* rows_read, size_t* rows_skipped) {
    return guarded([&] {
        require(path && out, "null argument");
        smfc::ParseReport report;
        auto series = smfc::parse_samples_file(path, deployment_start, report);
        if (rows_read) *rows_read = report.rows_read;
        if (rows_skipped) *rows_skipped = report.rows_skipped;
        *out = new smfc_series{std::move(series)};
    });
}

smfc_status smfc_series_sanitize(const smfc_series* series, smfc_series** out, size_t* removed) {
    return guarded([&] {
        require(series && out, "null argument");
        std::size_t dropped = 0;
        auto clean = smfc::sanitize(series->value, dropped);
        if (removed) *removed = dropped;
        *out = new smfc_series{std::move(clean)};
    });
}

smfc_status smfc_series_write_file(const smfc_series* series, const char* path) {
    return guarded([&] {
        require(series && path, "null argument");
        std::ofstream outf(path, std::ios::trunc);
        require(static_cast<bool>(outf), "cannot open output file");
        smfc::write_samples(series->value, outf);
        require(static_cast<bool>(outf), "write failed");
    });
}

size_t smfc_series_count(const smfc_series* series) {
    return series ? series->value.records.size() : 0;
}

smfc_status smfc_series_gap_stats(const smfc_series* series, double threshold, size_t* gap_count,
                                  double* max_gap) {
    return guarded([&] {
        require(series != nullptr, "null argument");
        std::size_t gaps = 0;
        double widest = 0.0;
        const auto& recs = series->value.records;
        for (std::size_t i = 1; i < recs.size(); ++i) {
            const double gap = recs[i].timestamp - recs[i - 1].timestamp;
            widest = std::max(widest, gap);
            if (gap > threshold) ++gaps;
        }
        if (gap_count) *gap_count = gaps;
        if (max_gap) *max_gap = widest;
    });
}

void smfc_series_free(smfc_series* series) { delete series; }

void smfc_synth_config_default(smfc_synth_config* config) {
    if (!config) return;
    const smfc::synth::SynthConfig d;
    config->seed = d.seed;
    config->days = d.days;
    config->start_timestamp = d.start_timestamp;
    config->base_voltage = d.base_voltage;
    config->drift_fraction = d.drift_fraction;
    config->diurnal_amplitude = d.diurnal_amplitude;
    config->noise_level = d.noise_level;
    config->current_scale = d.current_scale;
    config->zero_rate = d.zero_rate;
}

smfc_status smfc_series_synth(const smfc_synth_config* config, smfc_series** out) {
    return guarded([&] {
        require(config && out, "null argument");
        smfc::synth::SynthConfig c;
        c.seed = config->seed;
        c.days = config->days;
        c.start_timestamp = config->start_timestamp;
        c.base_voltage = config->base_voltage;
        c.drift_fraction = config->drift_fraction;
        c.diurnal_amplitude = config->diurnal_amplitude;
        c.noise_level = config->noise_level;
        c.current_scale = config->current_scale;
        c.zero_rate = config->zero_rate;
        require(c.days > 0, "synth days must be positive");
        *out = new smfc_series{smfc::synth::generate_trace(c)};
    });
}

smfc_status smfc_resample(const smfc_series* series, double horizon, smfc_resampled** out) {
    return guarded([&] {
        require(series && out, "null argument");
        *out = new smfc_resampled{smfc::resample(series->value, horizon)};
    });
}

size_t smfc_resampled_count(const smfc_resampled* resampled) {
    return resampled ? resampled->value.intervals.size() : 0;
}

size_t smfc_resampled_missing_count(const smfc_resampled* resampled) {
    if (!resampled) return 0;
    size_t missing = 0;
    for (const auto& iv : resampled->value.intervals)
        if (iv.missing()) ++missing;
    return missing;
}

void smfc_resampled_free(smfc_resampled* resampled) { delete resampled; }

smfc_status smfc_build_supervised(const smfc_resampled* resampled, double deployment_start,
                                  smfc_dataset** out, size_t* windows_dropped) {
    return guarded([&] {
        require(resampled && out, "null argument");
        auto ds = smfc::build_supervised(resampled->value, deployment_start);
        if (windows_dropped) *windows_dropped = ds.windows_dropped;
        *out = new smfc_dataset{std::move(ds)};
    });
}

size_t smfc_dataset_count(const smfc_dataset* dataset) {
    return dataset ? dataset->value.windows.size() : 0;
}

double smfc_dataset_horizon(const smfc_dataset* dataset) {
    return dataset ? dataset->value.horizon : 0.0;
}

smfc_status smfc_dataset_target(const smfc_dataset* dataset, size_t index, double target[3],
                                double* interval_start) {
    return guarded([&] {
        require(dataset && target, "null argument");
        require(index < dataset->value.windows.size(), "window index out of range");
        const auto& w = dataset->value.windows[index];
        for (int k = 0; k < 3; ++k) target[k] = w.target[k];
        if (interval_start) *interval_start = w.target_interval_start;
    });
}

smfc_status smfc_dataset_split(const smfc_dataset* dataset, double train_fraction,
                               double val_fraction, double test_fraction, smfc_dataset** train,
                               smfc_dataset** val, smfc_dataset** test) {
    return guarded([&] {
        require(dataset && train && val && test, "null argument");
        smfc::SplitSpec spec{train_fraction, val_fraction, test_fraction};
        auto split = smfc::split_chrono(dataset->value, spec);
        *train = new smfc_dataset{std::move(split.train)};
        *val = new smfc_dataset{std::move(split.val)};
        *test = new smfc_dataset{std::move(split.test)};
    });
}

smfc_status smfc_dataset_fingerprint(const smfc_dataset* dataset, unsigned long long* out) {
    return guarded([&] {
        require(dataset && out, "null argument");
        *out = smfc::forecast::dataset_fingerprint(dataset->value);
    });
}

smfc_status smfc_dataset_slice(const smfc_dataset* dataset, size_t begin, size_t end,
                               smfc_dataset** out) {
    return guarded([&] {
        require(dataset && out, "null argument");
        require(begin <= end && end <= dataset->value.windows.size(),
                "slice range out of bounds");
        require(begin < end, "slice is empty");
        smfc::SupervisedDataset ds;
        ds.horizon = dataset->value.horizon;
        ds.windows.assign(dataset->value.windows.begin() + static_cast<std::ptrdiff_t>(begin),
                          dataset->value.windows.begin() + static_cast<std::ptrdiff_t>(end));
        *out = new smfc_dataset{std::move(ds)};
    });
}

smfc_status smfc_dataset_tscv(const smfc_dataset* dataset, int fold, smfc_dataset** train,
                              smfc_dataset** naive_history, smfc_dataset** test) {
    return guarded([&] {
        require(dataset && train && naive_history && test, "null argument");
        require(fold >= 1 && fold <= 4, "fold must lie in 1..4");
        auto folds = smfc::tscv_folds(dataset->value);
        auto& f = folds[static_cast<std::size_t>(fold - 1)];
        *train = new smfc_dataset{std::move(f.train)};
        *naive_history = new smfc_dataset{std::move(f.naive_history)};
        *test = new smfc_dataset{std::move(f.test)};
    });
}

void smfc_dataset_free(smfc_dataset* dataset) { delete dataset; }

smfc_status smfc_train_options_default(smfc_train_options* options, double horizon) {
    return guarded([&] {
        require(options != nullptr, "null argument");
        const smfc::neural::TrainConfig d;
        options->hidden_size = 32;
        options->learning_rate = d.learning_rate;
        options->batch_size = smfc::neural::default_batch_size(horizon);
        options->max_epochs = d.max_epochs;
        options->patience = d.patience;
        options->grad_clip_norm = d.grad_clip_norm;
        options->seed = 0;
        options->lower_alpha = 0.05;
        options->upper_alpha = 0.95;
    });
}

smfc_status smfc_train_ensemble(const smfc_dataset* train, const smfc_dataset* val,
                                const smfc_train_options* options, smfc_ensemble** out) {
    return guarded([&] {
        require(train && val && options && out, "null argument");
        smfc::neural::ModelConfig model;
        model.hidden_size = options->hidden_size;
        model.seed = options->seed;
        smfc::neural::TrainConfig tc;
        tc.learning_rate = options->learning_rate;
        tc.batch_size = options->batch_size;
        tc.max_epochs = options->max_epochs;
        tc.patience = options->patience;
        tc.grad_clip_norm = options->grad_clip_norm;
        *out = new smfc_ensemble{smfc::forecast::train_ensemble(
            train->value, val->value, model, tc, options->lower_alpha, options->upper_alpha)};
    });
}

smfc_status smfc_ensemble_save(const smfc_ensemble* ensemble, const char* path) {
    return guarded([&] {
        require(ensemble && path, "null argument");
        smfc::forecast::save_ensemble(ensemble->value, path);
    });
}

smfc_status smfc_ensemble_load(const char* path, smfc_ensemble** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new smfc_ensemble{smfc::forecast::load_ensemble(path)};
    });
}

double smfc_ensemble_horizon(const smfc_ensemble* ensemble) {
    return ensemble ? ensemble->value.horizon : 0.0;
}

unsigned long long smfc_ensemble_fingerprint(const smfc_ensemble* ensemble) {
    return ensemble ? ensemble->value.fingerprint : 0;
}

smfc_status smfc_ensemble_summary(const smfc_ensemble* ensemble, int quantile, int* epochs_run,
                                  double* best_val_loss) {
    return guarded([&] {
        require(ensemble != nullptr, "null argument");
        require(quantile >= 0 && quantile <= 2, "quantile index must lie in 0..2");
        const smfc::neural::TrainedModel* models[3] = {&ensemble->value.lower,
                                                       &ensemble->value.median,
                                                       &ensemble->value.upper};
        if (epochs_run) *epochs_run = models[quantile]->summary.epochs_run;
        if (best_val_loss) *best_val_loss = models[quantile]->summary.best_val_loss;
    });
}

void smfc_ensemble_free(smfc_ensemble* ensemble) { delete ensemble; }

smfc_status smfc_forecast(const smfc_ensemble* ensemble, const smfc_dataset* test,
                          smfc_forecast_series** out) {
    return guarded([&] {
        require(ensemble && test && out, "null argument");
        *out = new smfc_forecast_series{
            smfc::forecast::forecast_series(ensemble->value, test->value)};
    });
}

size_t smfc_forecast_count(const smfc_forecast_series* series) {
    return series ? series->value.forecasts.size() : 0;
}

smfc_status smfc_forecast_get(const smfc_forecast_series* series, size_t index, double values[9],
                              double* interval_start) {
    return guarded([&] {
        require(series && values, "null argument");
        require(index < series->value.forecasts.size(), "forecast index out of range");
        const auto& f = series->value.forecasts[index];
        for (int k = 0; k < 3; ++k)
            for (int q = 0; q < 3; ++q) values[k * 3 + q] = f.values[q][k];
        if (interval_start) *interval_start = f.target_interval_start;
    });
}

smfc_status smfc_forecast_export_file(const smfc_forecast_series* series,
                                      const smfc_dataset* test, const char* path) {
    return guarded([&] {
        require(series && test && path, "null argument");
        std::ofstream outf(path, std::ios::trunc);
        require(static_cast<bool>(outf), "cannot open output file");
        smfc::forecast::export_forecast(series->value, test->value, outf);
        require(static_cast<bool>(outf), "write failed");
    });
}

smfc_status smfc_forecast_crossing(const smfc_forecast_series* series, double out[3]) {
    return guarded([&] {
        require(series && out, "null argument");
        const auto rates = smfc::forecast::quantile_crossing_rate(series->value);
        for (int k = 0; k < 3; ++k) out[k] = rates.per_output[k];
    });
}

smfc_status smfc_forecast_coverage(const smfc_forecast_series* series,
                                   const smfc_dataset* actual, double out[3]) {
    return guarded([&] {
        require(series && actual && out, "null argument");
        const auto cov = smfc::metrics::interval_coverage(series->value, actual->value);
        for (int k = 0; k < 3; ++k) out[k] = cov.per_output[k];
    });
}

void smfc_forecast_free(smfc_forecast_series* series) { delete series; }

smfc_status smfc_mape(const double* predicted, const double* actual, size_t n,
                      double* out_percent, size_t* excluded) {
    return guarded([&] {
        require(predicted && actual && out_percent, "null argument");
        std::size_t skipped = 0;
        *out_percent = smfc::metrics::mape({predicted, n}, {actual, n}, &skipped);
        if (excluded) *excluded = skipped;
    });
}

smfc_status smfc_total_energy_error(const double* predicted_power, const double* actual_power,
                                    size_t n, double interval_seconds, double* out_percent) {
    return guarded([&] {
        require(predicted_power && actual_power && out_percent, "null argument");
        *out_percent = smfc::metrics::total_energy_error({predicted_power, n}, {actual_power, n},
                                                         interval_seconds);
    });
}

smfc_status smfc_failed_rate(size_t failed, size_t scheduled, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        *out = smfc::metrics::failed_activation_rate(failed, scheduled);
    });
}

smfc_status smfc_missed_rate(size_t missed, size_t max_possible, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        *out = smfc::metrics::missed_activation_rate(missed, max_possible);
    });
}

void smfc_harvest_config_default(smfc_harvest_config* config) {
    if (!config) return;
    const smfc::harvestsim::HarvestConfig d;
    config->internal_resistance = d.internal_resistance;
    config->harvester_efficiency = d.harvester_efficiency;
    config->activation_energy = d.activation_energy;
    config->energy_model = SMFC_ENERGY_MATCHED_LOAD;
    config->initial_stored_energy = d.initial_stored_energy;
}

smfc_status smfc_usable_power(double voltage, const smfc_harvest_config* config,
                              double* out_watts) {
    return guarded([&] {
        require(out_watts != nullptr, "null argument");
        *out_watts = smfc::harvestsim::usable_power(voltage, to_cpp(config));
    });
}

smfc_status smfc_usable_energy_vi(const double* voltage, const double* current, size_t n,
                                  double interval_seconds, const smfc_harvest_config* config,
                                  double* out_joules) {
    return guarded([&] {
        require(voltage && current && out_joules, "null argument");
        *out_joules = smfc::harvestsim::usable_energy_vi({voltage, n}, {current, n},
                                                         interval_seconds, to_cpp(config));
    });
}

smfc_status smfc_oracle_max(const double* actual_energy, size_t n,
                            const smfc_harvest_config* config, size_t* out) {
    return guarded([&] {
        require(actual_energy && out, "null argument");
        *out = smfc::harvestsim::oracle_max({actual_energy, n}, to_cpp(config));
    });
}

smfc_status smfc_simulate(const double* forecast_energy, const double* actual_energy, size_t n,
                          const smfc_harvest_config* config, double first_interval_start,
                          double interval_seconds, smfc_sim** out) {
    return guarded([&] {
        require(forecast_energy && actual_energy && out, "null argument");
        *out = new smfc_sim{smfc::harvestsim::simulate_schedule(
            {forecast_energy, n}, {actual_energy, n}, to_cpp(config), first_interval_start,
            interval_seconds)};
    });
}

smfc_status smfc_naive_simulate(const double* history_voltage, size_t history_n,
                                const double* actual_energy, size_t n, double interval_seconds,
                                const smfc_harvest_config* config, double first_interval_start,
                                smfc_sim** out) {
    return guarded([&] {
        require(history_voltage && actual_energy && out, "null argument");
        *out = new smfc_sim{smfc::harvestsim::naive_schedule(
            {history_voltage, history_n}, {actual_energy, n}, interval_seconds, to_cpp(config),
            first_interval_start)};
    });
}

smfc_status smfc_sim_totals_get(const smfc_sim* sim, smfc_sim_totals* out) {
    return guarded([&] {
        require(sim && out, "null argument");
        out->scheduled = sim->value.scheduled;
        out->failed = sim->value.failed;
        out->successful = sim->value.successful;
        out->missed = sim->value.missed;
        out->max_possible = sim->value.max_possible;
    });
}

smfc_status smfc_sim_export_file(const smfc_sim* sim, const char* path) {
    return guarded([&] {
        require(sim && path, "null argument");
        std::ofstream outf(path, std::ios::trunc);
        require(static_cast<bool>(outf), "cannot open output file");
        smfc::harvestsim::export_trace(sim->value, outf);
        require(static_cast<bool>(outf), "write failed");
    });
}

void smfc_sim_free(smfc_sim* sim) { delete sim; }

}  // extern "C"
