#include "harvestsim.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace smfc::harvestsim {

namespace {

void check_config(const HarvestConfig& config) {
    if (config.internal_resistance <= 0) throw std::runtime_error("internal resistance must be > 0");
    if (!(config.harvester_efficiency > 0 && config.harvester_efficiency <= 1))
        throw std::runtime_error("harvester efficiency must lie in (0, 1]");
    if (config.activation_energy <= 0) throw std::runtime_error("activation energy must be > 0");
}

}  // namespace

double usable_power(double voltage, const HarvestConfig& config) {
    check_config(config);
    if (voltage < 0) throw std::runtime_error("voltage must be non-negative");
    return config.harvester_efficiency * voltage * voltage / (4.0 * config.internal_resistance);
}

double usable_energy_vi(std::span<const double> voltage, std::span<const double> current,
                        double interval_seconds, const HarvestConfig& config) {
    check_config(config);
    if (voltage.size() != current.size())
        throw std::runtime_error("voltage/current lists must align");
    if (interval_seconds <= 0) throw std::runtime_error("interval must be positive");
    double energy = 0.0;
    for (std::size_t i = 0; i < voltage.size(); ++i)
        energy += voltage[i] * current[i] * interval_seconds;
    return config.harvester_efficiency * energy;
}

std::size_t oracle_max(std::span<const double> actual_energy, const HarvestConfig& config) {
    check_config(config);
    double total = 0.0;
    for (double e : actual_energy) {
        if (e < 0) throw std::runtime_error("energies must be non-negative");
        total += e;
    }
    return static_cast<std::size_t>(std::floor(total / config.activation_energy));
}

SimulationTrace simulate_schedule(std::span<const double> forecast_energy,
                                  std::span<const double> actual_energy,
                                  const HarvestConfig& config, double first_interval_start,
                                  double interval_seconds) {
    check_config(config);
    if (forecast_energy.size() != actual_energy.size())
        throw std::runtime_error("forecast/actual energy lists must align");

    SimulationTrace trace;
    trace.ledger.reserve(actual_energy.size());
    trace.max_possible = oracle_max(actual_energy, config);

    double stored = config.initial_stored_energy;
    for (std::size_t t = 0; t < actual_energy.size(); ++t) {
        if (forecast_energy[t] < 0) throw std::runtime_error("energies must be non-negative");
        LedgerEntry entry;
        entry.interval_start = first_interval_start + static_cast<double>(t) * interval_seconds;

        const double planned_stored = stored + forecast_energy[t];
        entry.scheduled_activations =
            static_cast<std::size_t>(std::floor(planned_stored / config.activation_energy));

        stored += actual_energy[t];
        entry.harvested = actual_energy[t];

        for (std::size_t a = 0; a < entry.scheduled_activations; ++a) {
            if (stored >= config.activation_energy) {
                stored -= config.activation_energy;
                entry.consumed += config.activation_energy;
                ++entry.successful_activations;
            } else {
                // failed attempt drains the store and cancels the rest
                entry.wasted = stored;
                stored = 0.0;
                ++entry.failed_attempts;
                break;
            }
        }
        entry.stored_after = stored;
        trace.scheduled += entry.scheduled_activations;
        trace.successful += entry.successful_activations;
        trace.failed += entry.failed_attempts;
        trace.ledger.push_back(entry);
    }
    trace.missed = trace.max_possible > trace.successful
                       ? trace.max_possible - trace.successful
                       : 0;
    return trace;
}

SimulationTrace naive_schedule(std::span<const double> history_voltage,
                               std::span<const double> actual_energy, double interval_seconds,
                               const HarvestConfig& config, double first_interval_start) {
    if (history_voltage.empty()) throw std::runtime_error("naive history is empty");
    if (interval_seconds <= 0) throw std::runtime_error("interval must be positive");
    double mean_voltage = 0.0;
    for (double v : history_voltage) mean_voltage += v;
    mean_voltage /= static_cast<double>(history_voltage.size());

    const double forecast = usable_power(mean_voltage, config) * interval_seconds;
    std::vector<double> forecast_energy(actual_energy.size(), forecast);
    return simulate_schedule(forecast_energy, actual_energy, config, first_interval_start,
                             interval_seconds);
}

void export_trace(const SimulationTrace& trace, std::ostream& out) {
    out << "interval_start,harvested,scheduled,successful,failed,consumed,wasted,stored_after\n";
    char buf[320];
    for (const auto& e : trace.ledger) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu,%zu,%zu,%.17g,%.17g,%.17g\n",
                      e.interval_start, e.harvested, e.scheduled_activations,
                      e.successful_activations, e.failed_attempts, e.consumed, e.wasted,
                      e.stored_after);
        out << buf;
    }
    out << "Predicted Activations = " << trace.scheduled << "\n";
    out << "Successful Activations = " << trace.successful << "\n";
    out << "Possible Activations = " << trace.max_possible << "\n";
    char pct[96];
    std::snprintf(pct, sizeof(pct), "Failed Activations (%%) = %.6g\n",
                  trace.scheduled ? 100.0 * static_cast<double>(trace.failed) /
                                        static_cast<double>(trace.scheduled)
                                  : 0.0);
    out << pct;
    std::snprintf(pct, sizeof(pct), "Missed Activations (%%) = %.6g\n",
                  trace.max_possible ? 100.0 * static_cast<double>(trace.missed) /
                                           static_cast<double>(trace.max_possible)
                                     : 0.0);
    out << pct;
}

}  // namespace smfc::harvestsim
