#include "sampling/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "sampling/errors.hpp"

namespace sampling {

namespace {
void check_pair(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size()) {
        throw DimensionError("metric inputs differ in length: " + std::to_string(pred.size()) +
                             " vs " + std::to_string(gt.size()));
    }
    if (pred.empty()) throw DimensionError("metric inputs are empty");
}
}  // namespace

double rmse(std::span<const double> pred, std::span<const double> gt) {
    check_pair(pred, gt);
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> gt) {
    check_pair(pred, gt);
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - gt[i]);
    return acc / static_cast<double>(pred.size());
}

double mape_excluding_zeros(std::span<const double> pred, std::span<const double> gt) {
    check_pair(pred, gt);
    double acc = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (gt[i] == 0.0) continue;
        acc += std::abs(pred[i] - gt[i]) / std::abs(gt[i]);
        ++n;
    }
    if (n == 0) throw NumericError("MAPE undefined: ground truth is all zero");
    return 100.0 * acc / static_cast<double>(n);
}

double coverage(std::span<const double> observed_values) {
    double acc = 0.0;
    for (const double v : observed_values) acc += v;
    return acc;
}

double dtw_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DimensionError("dtw requires nonempty sequences");
    const size_t n = a.size();
    const size_t m = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();

    // rolling two-row DP
    std::vector<double> prev(m + 1, inf);
    std::vector<double> curr(m + 1, inf);
    prev[0] = 0.0;
    for (size_t i = 1; i <= n; ++i) {
        curr[0] = inf;
        for (size_t j = 1; j <= m; ++j) {
            const double d = a[i - 1] - b[j - 1];
            const double best = std::min({prev[j], curr[j - 1], prev[j - 1]});
            curr[j] = d * d + best;
        }
        std::swap(prev, curr);
    }
    return std::sqrt(prev[m]);
}

std::string MetricReport::to_kv() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "rmse=%.10g\nmae=%.10g\nmape_pct=%.10g\ncoverage=%.10g\n",
                  rmse, mae, mape_pct, coverage);
    return buf;
}

std::string MetricReport::csv_header() { return "rmse,mae,mape_pct,coverage"; }

std::string MetricReport::to_csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g", rmse, mae, mape_pct, coverage);
    return buf;
}

}  // namespace sampling
