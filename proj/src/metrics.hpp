#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>

#include "forecast.hpp"

namespace smfc::metrics {

// Mean absolute percent error. Points whose |actual| < 1e-12 are excluded
// and counted; throws if every point is excluded.
double mape(std::span<const double> predicted, std::span<const double> actual,
            std::size_t* excluded = nullptr);

// Signed percent error of integrated energy; positive means overestimation.
double total_energy_error(std::span<const double> predicted_power,
                          std::span<const double> actual_power, double interval_seconds);

// failed/scheduled, with 0/0 defined as 0.
double failed_activation_rate(std::size_t failed, std::size_t scheduled);

double missed_activation_rate(std::size_t missed, std::size_t max_possible);

struct Coverage {
    double per_output[kTargetCount] = {};  // fraction with lower <= actual <= upper
};

Coverage interval_coverage(const forecast::ForecastSeries& series,
                           const SupervisedDataset& actual);

struct MetricReport {
    double mape_voltage = 0.0;
    double mape_current = 0.0;
    double mape_power = 0.0;
    std::size_t mape_excluded = 0;
    double total_energy_error = 0.0;
    double failed_activation_rate = 0.0;
    double missed_activation_rate = 0.0;
    std::size_t predicted_activations = 0;
    std::size_t possible_activations = 0;
    Coverage coverage;
    forecast::CrossingRates crossing;
};

// Key-value text block with the standard report row names.
void write_report(const MetricReport& report, std::ostream& out);

}  // namespace smfc::metrics
