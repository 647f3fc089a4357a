#include "synth.hpp"

#include <cmath>

#include "neural.hpp"

namespace smfc::synth {

SampleSeries generate_trace(const SynthConfig& config) {
    neural::Rng rng(config.seed);
    SampleSeries series;
    series.deployment_start = config.start_timestamp;

    const double span = config.days * 86400.0;
    double t = config.start_timestamp;
    const double two_pi = 2.0 * 3.14159265358979323846;
    while (t < config.start_timestamp + span) {
        const double frac = (t - config.start_timestamp) / span;
        const double hour = std::fmod(t, 86400.0) / 3600.0;
        const double diurnal = 1.0 + config.diurnal_amplitude * std::sin(two_pi * hour / 24.0);
        const double level = config.base_voltage * (1.0 + config.drift_fraction * frac) * diurnal;

        // noise sd scales with the local level, so the spread is learnable
        // from the lagged inputs
        const double sd = config.noise_level * level;
        double voltage = level + sd * rng.gaussian();
        double current = config.current_scale * level * (1.0 + config.noise_level * rng.gaussian());
        if (voltage < 1e-4) voltage = 1e-4;
        if (current < 1e-6) current = 1e-6;

        SampleRecord r;
        r.timestamp = t;
        r.voltage = voltage;
        r.current = current;
        r.power = voltage * current;
        r.ec = 500.0 + 40.0 * std::sin(two_pi * hour / 24.0) + 5.0 * rng.gaussian();
        r.temp = 20.0 + 6.0 * std::sin(two_pi * (hour - 6.0) / 24.0) + 0.3 * rng.gaussian();
        r.vwc = 2000.0 + 300.0 * frac + 10.0 * rng.gaussian();
        if (config.zero_rate > 0.0 && rng.uniform() < config.zero_rate) {
            r.voltage = 0.0;  // outage sentinel
            r.power = 0.0;
        }
        series.records.push_back(r);

        t += 12.0 + 3.0 * rng.uniform();
    }
    return series;
}

}  // namespace smfc::synth
