#pragma once

#include <span>
#include <string>

namespace sampling {

// Accuracy/coverage numbers for one evaluated configuration.
struct MetricReport {
    double rmse = 0.0;
    double mae = 0.0;
    double mape_pct = 0.0;  // excludes zero ground-truth entries
    double coverage = 0.0;  // mean over episodes of the observed-value sum

    std::string to_kv() const;        // flat key=value record
    std::string to_csv_row() const;   // values only, header via csv_header()
    static std::string csv_header();
};

double rmse(std::span<const double> pred, std::span<const double> gt);
double mae(std::span<const double> pred, std::span<const double> gt);

// Mean of |pred-gt|/|gt| over nonzero gt entries, in percent. Throws
// NumericError when gt is all zero.
double mape_excluding_zeros(std::span<const double> pred, std::span<const double> gt);

// Sum of ground-truth values at observation times.
double coverage(std::span<const double> observed_values);

// Dynamic time warping distance: DP over the |a|x|b| grid, squared-difference
// ground cost, steps {(1,0),(0,1),(1,1)}, boundary to boundary; returns the
// square root of the accumulated cost.
double dtw_distance(std::span<const double> a, std::span<const double> b);

}  // namespace sampling
