#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "sampling/dataset.hpp"
#include "sampling/errors.hpp"
#include "sampling/rng.hpp"

using namespace sampling;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_csv(const std::string& name, const std::string& body) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream f(p, std::ios::binary);
    f << body;
    return p;
}

std::string hourly_csv(int locations, int rows, int start_hour = 0) {
    std::string out = "timestamp";
    for (int l = 0; l < locations; ++l) out += ",loc" + std::to_string(l);
    out += "\n";
    for (int r = 0; r < rows; ++r) {
        int h = (start_hour + r) % 24;
        int d = 1 + (start_hour + r) / 24;
        char stamp[40];
        std::snprintf(stamp, sizeof stamp, "2022-01-%02dT%02d:00:00", d, h);
        out += stamp;
        for (int l = 0; l < locations; ++l)
            out += "," + std::to_string(0.01 * (r % 50) + 0.001 * l);
        out += "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("load_csv parses locations, rows and the starting hour") {
    auto p = write_temp_csv("ds_ok.csv", hourly_csv(3, 30, 5));
    RawDataset ds = load_csv(p.string());
    CHECK(ds.locations() == 3);
    CHECK(ds.rows == 30);
    CHECK(ds.first_hour_of_day == 5);
    CHECK(ds.location_ids[1] == "loc1");
    CHECK(ds.series[2][0] == doctest::Approx(0.002).epsilon(1e-12));
    CHECK(ds.series[0][29] == doctest::Approx(0.29).epsilon(1e-12));
}

TEST_CASE("load_csv rejects malformed inputs with line numbers") {
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);

    auto bad_header = write_temp_csv("ds_h.csv", "timestamp\n2022-01-01T00:00:00\n");
    CHECK_THROWS_AS(load_csv(bad_header.string()), DataError);

    auto gap = write_temp_csv(
        "ds_gap.csv",
        "timestamp,a\n2022-01-01T00:00:00,0.1\n2022-01-01T02:00:00,0.2\n");
    CHECK_THROWS_AS(load_csv(gap.string()), DataError);

    auto ragged = write_temp_csv(
        "ds_rag.csv", "timestamp,a,b\n2022-01-01T00:00:00,0.1,0.2\n2022-01-01T01:00:00,0.3\n");
    CHECK_THROWS_AS(load_csv(ragged.string()), DataError);

    auto text_cell = write_temp_csv(
        "ds_txt.csv", "timestamp,a\n2022-01-01T00:00:00,0.1\n2022-01-01T01:00:00,oops\n");
    CHECK_THROWS_AS(load_csv(text_cell.string()), DataError);

    try {
        load_csv(gap.string());
        CHECK(false);
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("windowing: non-overlapping 216-point episodes, remainder dropped") {
    std::vector<double> series(500);
    for (size_t i = 0; i < series.size(); ++i) series[i] = 0.001 * static_cast<double>(i);
    auto eps = make_episodes(series, 5, "locX");
    REQUIRE(eps.size() == 2);  // 500 / 216
    CHECK(eps[0].history[0] == 0.0);
    CHECK(eps[0].target[0] == doctest::Approx(0.048).epsilon(1e-12));
    CHECK(eps[1].history[0] == doctest::Approx(0.216).epsilon(1e-12));
    CHECK(eps[1].target[167] == doctest::Approx(0.431).epsilon(1e-12));
    CHECK(eps[0].window_index == 0);
    CHECK(eps[1].window_index == 1);
    // target[0] sits 48 hours past the window start; 216 is a whole number of
    // days so both windows share the same wall-clock offset
    CHECK(eps[0].hour_of_day_offset == (5 + 48) % 24);
    CHECK(eps[1].hour_of_day_offset == (5 + 48) % 24);
}

TEST_CASE("per-location window cap") {
    auto p = write_temp_csv("ds_cap.csv", hourly_csv(3, 216 * 3 + 10));
    RawDataset ds = load_csv(p.string());
    CHECK(make_episodes(ds).size() == 9);
    CHECK(make_episodes(ds, 2).size() == 6);
    CHECK(make_episodes(ds, 0).size() == 9);
}

TEST_CASE("location split is disjoint, exhaustive and seed-deterministic") {
    auto p = write_temp_csv("ds_split.csv", hourly_csv(10, 24));
    RawDataset ds = load_csv(p.string());
    SplitSpec spec;
    spec.seed = 11;
    auto [tr, va, te] = split_locations(ds, spec);
    CHECK(tr.locations() == 7);  // floor(0.7 * 10)
    CHECK(va.locations() == 2);  // floor(0.2 * 10)
    CHECK(te.locations() == 1);  // remainder
    std::set<std::string> seen;
    for (const auto* part : {&tr, &va, &te})
        for (const auto& id : part->location_ids) CHECK(seen.insert(id).second);
    CHECK(seen.size() == 10);

    auto [tr2, va2, te2] = split_locations(ds, spec);
    CHECK(tr2.location_ids == tr.location_ids);
    CHECK(te2.location_ids == te.location_ids);

    SplitSpec other = spec;
    other.seed = 12;
    auto [tr3, va3, te3] = split_locations(ds, other);
    CHECK(tr3.location_ids != tr.location_ids);  // a different permutation
}

TEST_CASE("normalizer round-trips within 1e-9 and rejects constant data") {
    auto p = write_temp_csv("ds_norm.csv", hourly_csv(3, 48));
    RawDataset ds = load_csv(p.string());
    Normalizer norm = fit_normalizer(ds);
    Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        double x = norm.min + (norm.max - norm.min) * rng.uniform();
        CHECK(std::fabs(norm.invert(norm.apply(x)) - x) < 1e-9);
    }
    CHECK(norm.apply(norm.min) == 0.0);
    CHECK(norm.apply(norm.max) == 1.0);

    RawDataset flat;
    flat.location_ids = {"a"};
    flat.series = {{0.5, 0.5, 0.5}};
    flat.rows = 3;
    CHECK_THROWS_AS(fit_normalizer(flat), DataError);
}
