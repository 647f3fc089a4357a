#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dataset.hpp"
#include "neural.hpp"

namespace smfc::forecast {

struct QuantileEnsemble {
    double horizon = 0.0;
    double lower_alpha = 0.05;
    double upper_alpha = 0.95;
    neural::TrainedModel lower;   // lower_alpha
    neural::TrainedModel median;  // 0.5
    neural::TrainedModel upper;   // upper_alpha
    std::uint64_t fingerprint = 0;  // hash of the training windows
};

struct QuantileForecast {
    double target_interval_start = 0.0;
    // indexed [quantile][output]: quantile 0=lower 1=median 2=upper,
    // output 0=voltage 1=current 2=power
    double values[3][kTargetCount] = {};
};

struct ForecastSeries {
    double horizon = 0.0;
    std::vector<QuantileForecast> forecasts;
};

std::uint64_t dataset_fingerprint(const SupervisedDataset& dataset);

// Trains the three quantile models (seeds base, base+1, base+2). The
// trainings are independent and run on separate threads.
QuantileEnsemble train_ensemble(const SupervisedDataset& train, const SupervisedDataset& val,
                                const neural::ModelConfig& model_config,
                                const neural::TrainConfig& train_config,
                                double lower_alpha = 0.05, double upper_alpha = 0.95);

ForecastSeries forecast_series(const QuantileEnsemble& ensemble, const SupervisedDataset& test);

// Versioned binary container: magic, format version, metadata, little-endian
// f64 parameters, trailing CRC32.
void save_ensemble(const QuantileEnsemble& ensemble, const std::string& path);
QuantileEnsemble load_ensemble(const std::string& path);

struct CrossingRates {
    double per_output[kTargetCount] = {};  // lower > median or median > upper
};

CrossingRates quantile_crossing_rate(const ForecastSeries& series);

// Plot-data export: interval_start, v_lo, v_med, v_hi, i_lo, i_med, i_hi,
// p_lo, p_med, p_hi, v_true, i_true, p_true.
void export_forecast(const ForecastSeries& series, const SupervisedDataset& test,
                     std::ostream& out);

}  // namespace smfc::forecast
