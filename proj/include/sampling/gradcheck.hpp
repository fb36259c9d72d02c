#pragma once

#include <functional>
#include <string>

#include "sampling/nn.hpp"

namespace sampling::nn {

struct GradCheckReport {
    bool pass = false;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::string worst_param;  // "name[row,col]" of the worst coordinate
    int coords_checked = 0;
};

// Compares analytic gradients against central finite differences.
//
// loss_fn must be a pure forward pass (no gradient side effects); grad_fn
// must zero the registry gradients and run a full backward pass for the same
// loss. Every coordinate of every registered tensor is perturbed by +/-fd_eps.
// Relative error uses max(|analytic|, |numeric|, 1e-6) as the denominator so
// near-zero gradients don't blow up the ratio.
GradCheckReport grad_check(const ParamRegistry& params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           double fd_eps = 1e-5, double tolerance = 1e-4);

}  // namespace sampling::nn
