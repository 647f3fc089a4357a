#include "metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace smfc::metrics {

double mape(std::span<const double> predicted, std::span<const double> actual,
            std::size_t* excluded) {
    if (predicted.size() != actual.size() || actual.empty())
        throw std::runtime_error("mape needs equal-length non-empty inputs");
    double total = 0.0;
    std::size_t used = 0, skipped = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (std::abs(actual[i]) < 1e-12) {
            ++skipped;
            continue;
        }
        total += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
        ++used;
    }
    if (excluded) *excluded = skipped;
    if (used == 0) throw std::runtime_error("MAPE undefined: zero actuals");
    return total / static_cast<double>(used) * 100.0;
}

double total_energy_error(std::span<const double> predicted_power,
                          std::span<const double> actual_power, double interval_seconds) {
    if (predicted_power.size() != actual_power.size() || actual_power.empty())
        throw std::runtime_error("total_energy_error needs equal-length non-empty inputs");
    if (interval_seconds <= 0) throw std::runtime_error("interval must be positive");
    double predicted_energy = 0.0, actual_energy = 0.0;
    for (std::size_t i = 0; i < actual_power.size(); ++i) {
        predicted_energy += predicted_power[i] * interval_seconds;
        actual_energy += actual_power[i] * interval_seconds;
    }
    if (actual_energy <= 0) throw std::runtime_error("actual energy must be positive");
    return (predicted_energy - actual_energy) / actual_energy * 100.0;
}

double failed_activation_rate(std::size_t failed, std::size_t scheduled) {
    if (failed > scheduled) throw std::runtime_error("failed count exceeds scheduled count");
    if (scheduled == 0) return 0.0;
    return static_cast<double>(failed) / static_cast<double>(scheduled);
}

double missed_activation_rate(std::size_t missed, std::size_t max_possible) {
    if (max_possible == 0) throw std::runtime_error("max possible activations must be >= 1");
    if (missed > max_possible) throw std::runtime_error("missed count exceeds maximum");
    return static_cast<double>(missed) / static_cast<double>(max_possible);
}

Coverage interval_coverage(const forecast::ForecastSeries& series,
                           const SupervisedDataset& actual) {
    if (series.forecasts.size() != actual.windows.size())
        throw std::runtime_error("coverage needs aligned forecast/actual series");
    if (series.forecasts.empty()) throw std::runtime_error("coverage undefined for empty series");
    Coverage cov;
    for (std::size_t i = 0; i < series.forecasts.size(); ++i) {
        const auto& f = series.forecasts[i];
        const auto& w = actual.windows[i];
        for (int k = 0; k < kTargetCount; ++k)
            if (f.values[0][k] <= w.target[k] && w.target[k] <= f.values[2][k])
                cov.per_output[k] += 1.0;
    }
    for (auto& c : cov.per_output) c /= static_cast<double>(series.forecasts.size());
    return cov;
}

void write_report(const MetricReport& report, std::ostream& out) {
    char buf[160];
    auto line = [&](const char* name, double value) {
        std::snprintf(buf, sizeof(buf), "%s = %.6g\n", name, value);
        out << buf;
    };
    line("Test MAPE Voltage", report.mape_voltage);
    line("Test MAPE Current", report.mape_current);
    line("Test MAPE Power", report.mape_power);
    line("Total Energy Error", report.total_energy_error);
    line("Failed Activations (%)", report.failed_activation_rate * 100.0);
    line("Missed Activations (%)", report.missed_activation_rate * 100.0);
    out << "Predicted Activations = " << report.predicted_activations << "\n";
    out << "Possible Activations = " << report.possible_activations << "\n";
    line("MAPE Excluded Points", static_cast<double>(report.mape_excluded));
    line("Coverage Voltage (diagnostic)", report.coverage.per_output[0]);
    line("Coverage Current (diagnostic)", report.coverage.per_output[1]);
    line("Coverage Power (diagnostic)", report.coverage.per_output[2]);
    line("Crossing Rate Voltage (diagnostic)", report.crossing.per_output[0]);
    line("Crossing Rate Current (diagnostic)", report.crossing.per_output[1]);
    line("Crossing Rate Power (diagnostic)", report.crossing.per_output[2]);
}

}  // namespace smfc::metrics
