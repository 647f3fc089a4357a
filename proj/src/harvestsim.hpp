#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace smfc::harvestsim {

enum class EnergyModel {
    kMatchedLoad,  // P = eta * V^2 / (4 R_int), from open-circuit voltage
    kMeasuredVi,   // E = eta * sum(V * I * dt), from measured traces
};

struct HarvestConfig {
    double internal_resistance = 6926.0;  // ohms
    double harvester_efficiency = 0.60;
    double activation_energy = 3.9e-6;  // joules per activation
    EnergyModel energy_model = EnergyModel::kMatchedLoad;
    double initial_stored_energy = 0.0;  // joules
};

struct LedgerEntry {
    double interval_start = 0.0;
    double harvested = 0.0;  // joules actually banked this interval
    std::size_t scheduled_activations = 0;
    std::size_t successful_activations = 0;
    std::size_t failed_attempts = 0;
    double consumed = 0.0;     // joules spent on successful activations
    double wasted = 0.0;       // joules lost to failed attempts
    double stored_after = 0.0;  // joules
};

struct SimulationTrace {
    std::vector<LedgerEntry> ledger;
    std::size_t scheduled = 0;   // active_pred
    std::size_t failed = 0;      // failed_active
    std::size_t successful = 0;
    std::size_t missed = 0;      // max_possible - successful
    std::size_t max_possible = 0;
};

// Matched-load harvestable power for an open-circuit voltage.
double usable_power(double voltage, const HarvestConfig& config);

// Ground-truth usable energy from measured V/I over fixed-width intervals.
double usable_energy_vi(std::span<const double> voltage, std::span<const double> current,
                        double interval_seconds, const HarvestConfig& config);

// floor(total energy / activation energy): the perfect-knowledge maximum.
std::size_t oracle_max(std::span<const double> actual_energy, const HarvestConfig& config);

// Per interval: plan floor((stored + forecast)/E_act) activations, bank the
// actual energy, then attempt them in order. An attempt without enough
// stored energy fails, zeroes the store, and cancels the interval's
// remaining attempts.
SimulationTrace simulate_schedule(std::span<const double> forecast_energy,
                                  std::span<const double> actual_energy,
                                  const HarvestConfig& config, double first_interval_start = 0.0,
                                  double interval_seconds = 0.0);

// Baseline: constant forecast from the mean history voltage through the
// matched-load conversion.
SimulationTrace naive_schedule(std::span<const double> history_voltage,
                               std::span<const double> actual_energy, double interval_seconds,
                               const HarvestConfig& config, double first_interval_start = 0.0);

void export_trace(const SimulationTrace& trace, std::ostream& out);

}  // namespace smfc::harvestsim
