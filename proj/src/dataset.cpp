#include "sampling/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "sampling/errors.hpp"
#include "sampling/rng.hpp"

namespace sampling {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_cell(std::string_view cell, size_t line_no, size_t col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw DataError("non-numeric cell at line " + std::to_string(line_no) +
                        ", column " + std::to_string(col));
    }
    return v;
}

// "YYYY-MM-DDTHH:..." or "YYYY-MM-DD HH:..." -> hour of day
int parse_hour_of_day(std::string_view ts, size_t line_no) {
    if (ts.size() < 13 || !std::isdigit(static_cast<unsigned char>(ts[11])) ||
        !std::isdigit(static_cast<unsigned char>(ts[12]))) {
        throw DataError("malformed timestamp at line " + std::to_string(line_no));
    }
    const int h = (ts[11] - '0') * 10 + (ts[12] - '0');
    if (h > 23) throw DataError("timestamp hour out of range at line " + std::to_string(line_no));
    return h;
}

}  // namespace

RawDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    RawDataset ds;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty data file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    if (header.size() < 2) throw DataError("header must name a timestamp column plus locations");
    for (size_t i = 1; i < header.size(); ++i) ds.location_ids.emplace_back(header[i]);
    ds.series.resize(ds.location_ids.size());

    const size_t cols = header.size();
    size_t line_no = 1;
    int prev_hour = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != cols) {
            throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                            std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
        }
        const int hour = parse_hour_of_day(fields[0], line_no);
        if (ds.rows == 0) {
            ds.first_hour_of_day = hour;
        } else if (hour != (prev_hour + 1) % 24) {
            throw DataError("timestamps not hourly/monotone at line " + std::to_string(line_no));
        }
        prev_hour = hour;
        for (size_t c = 1; c < cols; ++c) {
            ds.series[c - 1].push_back(parse_cell(fields[c], line_no, c));
        }
        ++ds.rows;
    }
    return ds;
}

std::tuple<RawDataset, RawDataset, RawDataset> split_locations(const RawDataset& ds,
                                                               const SplitSpec& spec) {
    const size_t n = ds.locations();
    if (n < 3) throw DataError("need at least 3 locations to split");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(derive_seed(spec.seed, "location-split"));
    rng.shuffle(order);

    const size_t n_train = static_cast<size_t>(std::floor(spec.train_ratio * static_cast<double>(n)));
    const size_t n_val = static_cast<size_t>(std::floor(spec.val_ratio * static_cast<double>(n)));

    auto take = [&](size_t begin, size_t end) {
        RawDataset out;
        out.first_hour_of_day = ds.first_hour_of_day;
        out.rows = ds.rows;
        for (size_t i = begin; i < end; ++i) {
            out.location_ids.push_back(ds.location_ids[order[i]]);
            out.series.push_back(ds.series[order[i]]);
        }
        return out;
    };
    return {take(0, n_train), take(n_train, n_train + n_val), take(n_train + n_val, n)};
}

std::vector<EpisodeInstance> make_episodes(const std::vector<double>& series,
                                           int64_t first_hour_of_day,
                                           const std::string& location_id) {
    std::vector<EpisodeInstance> out;
    const size_t n_windows = series.size() / kWindowLen;
    out.reserve(n_windows);
    for (size_t w = 0; w < n_windows; ++w) {
        EpisodeInstance ep;
        const size_t base = w * kWindowLen;
        std::copy_n(series.begin() + static_cast<long>(base), kHistoryLen, ep.history.begin());
        std::copy_n(series.begin() + static_cast<long>(base + kHistoryLen), kTargetLen,
                    ep.target.begin());
        ep.hour_of_day_offset =
            static_cast<int>((first_hour_of_day + base + kHistoryLen) % 24);
        ep.location_id = location_id;
        ep.window_index = static_cast<int>(w);
        out.push_back(std::move(ep));
    }
    return out;
}

std::vector<EpisodeInstance> make_episodes(const RawDataset& ds, int max_windows_per_location) {
    std::vector<EpisodeInstance> out;
    for (size_t i = 0; i < ds.locations(); ++i) {
        auto eps = make_episodes(ds.series[i], ds.first_hour_of_day, ds.location_ids[i]);
        if (max_windows_per_location > 0 &&
            eps.size() > static_cast<size_t>(max_windows_per_location)) {
            eps.resize(static_cast<size_t>(max_windows_per_location));
        }
        for (auto& e : eps) out.push_back(std::move(e));
    }
    return out;
}

Normalizer fit_normalizer(const RawDataset& train) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : train.series) {
        for (const double v : s) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo)) throw DataError("degenerate scale: training data has max <= min");
    return Normalizer{lo, hi};
}

}  // namespace sampling
