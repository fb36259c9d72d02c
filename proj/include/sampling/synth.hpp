#pragma once

#include <cstdint>
#include <string>

namespace sampling {

// Synthetic hourly road-occupancy panel: per-location double-peaked weekday
// profiles, attenuated weekends, slow day-to-day amplitude drift, sensor
// dropouts and spikes. Values lie in [0, 1] with a mean around 0.05.
struct SynthConfig {
    int locations = 80;
    int hours = 6480;
    uint64_t seed = 7;
};

void write_synthetic_csv(const std::string& path, const SynthConfig& cfg);

}  // namespace sampling
