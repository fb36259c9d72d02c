#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace sampling {
class Rng;  // rng.hpp
}

namespace sampling::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// A named view over one parameter matrix and its gradient buffer. Networks own
// the storage and hand out registries; the optimizer, clipping, checkpointing
// and the finite-difference checker all work through this list.
struct ParamRef {
    std::string name;
    Mat* value;
    Mat* grad;
};

using ParamRegistry = std::vector<ParamRef>;

size_t param_count(const ParamRegistry& params);
void zero_grads(const ParamRegistry& params);

// Global-norm gradient clipping; returns the pre-clip norm.
double clip_grad_norm(const ParamRegistry& params, double max_norm);

// Throws NumericError naming the offending tensor if any value is not finite.
void check_finite(const ParamRegistry& params, const std::string& context);
bool all_finite(const Mat& m);

// Xavier-uniform fill: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
void xavier_uniform(Mat& m, sampling::Rng& rng, int fan_in, int fan_out);

// Epoch-level training record shared by the trainable networks. best_epoch is
// the epoch whose weights were kept (-1 when the untrained weights won).
struct FitLog {
    std::vector<double> train_loss;
    std::vector<double> val_rmse;
    int best_epoch = -1;
};

// Standard bias-corrected Adam over a registry. Moment buffers are created on
// first use and keyed by registry order.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // One update from the gradients currently held in the registry.
    void step(const ParamRegistry& params);

    int64_t steps_taken() const { return step_; }
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    int64_t step_ = 0;
    std::vector<Mat> m_;
    std::vector<Mat> v_;
};

// Checkpoint file: magic + named tensors with shape headers and little-endian
// f64 payloads. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ParamRegistry& params);
void load_checkpoint(const std::string& path, const ParamRegistry& params);

}  // namespace sampling::nn
