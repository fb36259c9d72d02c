#include "sampling/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sampling::nn {

GradCheckReport grad_check(const ParamRegistry& params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           double fd_eps, double tolerance) {
    grad_fn();
    std::vector<Mat> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(*p.grad);

    GradCheckReport report;
    for (size_t k = 0; k < params.size(); ++k) {
        Mat& value = *params[k].value;
        for (Eigen::Index c = 0; c < value.cols(); ++c) {
            for (Eigen::Index r = 0; r < value.rows(); ++r) {
                const double saved = value(r, c);
                value(r, c) = saved + fd_eps;
                const double up = loss_fn();
                value(r, c) = saved - fd_eps;
                const double down = loss_fn();
                value(r, c) = saved;

                const double numeric = (up - down) / (2.0 * fd_eps);
                const double a = analytic[k](r, c);
                const double abs_err = std::abs(a - numeric);
                const double rel_err =
                    abs_err / std::max({std::abs(a), std::abs(numeric), 1e-6});
                if (rel_err > report.max_rel_err) {
                    report.max_rel_err = rel_err;
                    report.worst_param = params[k].name + "[" + std::to_string(r) + "," +
                                         std::to_string(c) + "]";
                }
                report.max_abs_err = std::max(report.max_abs_err, abs_err);
                ++report.coords_checked;
            }
        }
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

}  // namespace sampling::nn
