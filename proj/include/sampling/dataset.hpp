#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace sampling {

constexpr int kHistoryLen = 48;   // stage-one recording, 2 days
constexpr int kTargetLen = 168;   // collection horizon, 7 days
constexpr int kWindowLen = kHistoryLen + kTargetLen;  // 216

// One column of the input CSV: hourly occupancy rates for a single detector.
struct RawDataset {
    std::vector<std::string> location_ids;
    std::vector<std::vector<double>> series;  // [location][hour]
    int64_t first_hour_of_day = 0;            // hour of day of row 0
    size_t rows = 0;

    size_t locations() const { return location_ids.size(); }
};

// A 216-point window: 48 points of history followed by the 168-point target.
struct EpisodeInstance {
    std::array<double, kHistoryLen> history;
    std::array<double, kTargetLen> target;
    int hour_of_day_offset = 0;  // wall-clock hour of target[0]
    std::string location_id;
    int window_index = 0;
};

// Global affine map to [0,1], fit on training locations only.
struct Normalizer {
    double min = 0.0;
    double max = 1.0;

    double apply(double x) const { return (x - min) / (max - min); }
    double invert(double y) const { return y * (max - min) + min; }
};

struct SplitSpec {
    double train_ratio = 0.7;
    double val_ratio = 0.2;
    double test_ratio = 0.1;
    uint64_t seed = 0;
};

// Parses the CSV (header row; column 0 ISO-8601 hourly timestamps, columns
// 1..n per-location occupancy). Throws DataError naming the offending line.
RawDataset load_csv(const std::string& path);

// Disjoint partition by location. Sizes floor(0.7 n) / floor(0.2 n) /
// remainder, permutation drawn from spec.seed.
std::tuple<RawDataset, RawDataset, RawDataset> split_locations(const RawDataset& ds,
                                                               const SplitSpec& spec);

// Non-overlapping 216-point windows from index 0; trailing remainder dropped.
std::vector<EpisodeInstance> make_episodes(const std::vector<double>& series,
                                           int64_t first_hour_of_day,
                                           const std::string& location_id);

// All windows of every location in the set, optionally capped per location.
std::vector<EpisodeInstance> make_episodes(const RawDataset& ds,
                                           int max_windows_per_location = 0);

Normalizer fit_normalizer(const RawDataset& train);

}  // namespace sampling
