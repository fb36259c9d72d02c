#include "sampling/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "sampling/errors.hpp"
#include "sampling/rng.hpp"

namespace sampling {

namespace {

struct LocationShape {
    double base;
    double am_amp, pm_amp;
    double am_hour, pm_hour;
    double am_width, pm_width;
    double weekend_factor;
    double noise;
};

LocationShape draw_shape(Rng& rng) {
    LocationShape s;
    s.base = 0.01 + 0.02 * rng.uniform();
    s.am_amp = 0.06 + 0.08 * rng.uniform();
    s.pm_amp = 0.05 + 0.07 * rng.uniform();
    s.am_hour = 7.5 + 1.5 * rng.uniform();
    s.pm_hour = 16.5 + 2.0 * rng.uniform();
    s.am_width = 1.2 + 1.0 * rng.uniform();
    s.pm_width = 1.4 + 1.2 * rng.uniform();
    s.weekend_factor = 0.35 + 0.3 * rng.uniform();
    s.noise = 0.0015 + 0.0025 * rng.uniform();
    return s;
}

double bump(double h, double center, double width) {
    const double d = h - center;
    return std::exp(-d * d / (2.0 * width * width));
}

constexpr int kDaysInMonth[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

}  // namespace

void write_synthetic_csv(const std::string& path, const SynthConfig& cfg) {
    if (cfg.locations < 1 || cfg.hours < 1) {
        throw UsageError("synthetic data: locations and hours must be positive");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot create file: " + path);

    out << "timestamp";
    std::vector<LocationShape> shapes;
    std::vector<double> drift(cfg.locations, 0.0);
    std::vector<Rng> rngs;
    for (int i = 0; i < cfg.locations; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "loc%03d", i + 1);
        out << ',' << id;
        rngs.emplace_back(derive_seed(cfg.seed, "synth-location", i));
        shapes.push_back(draw_shape(rngs.back()));
    }
    out << '\n';

    std::vector<int> dropout_left(cfg.locations, 0);

    int year = 2022, month = 1, day = 1, hour = 0;
    int day_index = 0;
    char cell[32];
    for (int t = 0; t < cfg.hours; ++t) {
        char stamp[64];
        std::snprintf(stamp, sizeof(stamp), "%04d-%02d-%02dT%02d:00:00", year, month, day, hour);
        out << stamp;

        const bool weekend = day_index % 7 >= 5;  // day 0 is a Monday
        for (int i = 0; i < cfg.locations; ++i) {
            Rng& rng = rngs[i];
            const LocationShape& s = shapes[i];
            if (t > 0) {
                // congestion waves: deviations persist with a half-life of roughly
                // half a day, so a fresh reading says a lot about the next few
                // hours and nothing about the day after tomorrow
                drift[i] = 0.95 * drift[i] + rng.normal(0.0, 0.009);
                if (rng.uniform() < 0.01) {
                    // incident / closure / event; lingers until the AR pull clears it
                    const double mag = 0.05 + 0.07 * rng.uniform();
                    drift[i] += rng.uniform() < 0.5 ? mag : -mag;
                }
                drift[i] = std::clamp(drift[i], -0.12, 0.18);
            }
            if (hour == 0 && t > 0) {
                if (rng.uniform() < 0.02) dropout_left[i] = 1 + static_cast<int>(rng.uniform_int(4));
            }
            const double peaks = (weekend ? s.weekend_factor : 1.0) *
                                 (s.am_amp * bump(hour, s.am_hour, s.am_width) +
                                  s.pm_amp * bump(hour, s.pm_hour, s.pm_width));
            // congestion rides mostly on the demand profile; the floor keeps
            // nights from being perfectly predictable
            const double day_level = peaks / (s.am_amp + s.pm_amp);
            double v = s.base + peaks + drift[i] * (0.35 + 0.65 * day_level) +
                       rng.normal(0.0, s.noise);
            if (rng.uniform() < 0.001) v *= 2.0 + rng.uniform();  // spike
            if (dropout_left[i] > 0) {
                v = 0.0;
                --dropout_left[i];
            }
            v = std::clamp(v, 0.0, 1.0);
            std::snprintf(cell, sizeof(cell), ",%.6f", v);
            out << cell;
        }
        out << '\n';

        if (++hour == 24) {
            hour = 0;
            ++day_index;
            const int dim = kDaysInMonth[month - 1] + (month == 2 && year % 4 == 0 ? 1 : 0);
            if (++day > dim) {
                day = 1;
                if (++month > 12) {
                    month = 1;
                    ++year;
                }
            }
        }
    }
    if (!out) throw DataError("failed while writing: " + path);
}

}  // namespace sampling
