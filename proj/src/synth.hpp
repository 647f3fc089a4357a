#pragma once

#include <cstdint>

#include "dataset.hpp"

namespace smfc::synth {

// Seeded generator standing in for the unpublished field trace: slow trend
// plus diurnal cycle plus heteroskedastic noise, sampled every 12-15 s.
struct SynthConfig {
    std::uint64_t seed = 42;
    double days = 12.0;
    double start_timestamp = 1622764800.0;  // 2021-06-04T00:00:00Z
    double base_voltage = 0.5;
    double drift_fraction = 0.0;     // total fractional change across the span
    double diurnal_amplitude = 0.10;  // relative diurnal swing
    double noise_level = 0.05;        // relative noise, scales with signal level
    double current_scale = 0.8;       // current = scale * voltage (synthetic units)
    double zero_rate = 0.0;           // fraction of rows forced to the outage sentinel
};

SampleSeries generate_trace(const SynthConfig& config);

}  // namespace smfc::synth
