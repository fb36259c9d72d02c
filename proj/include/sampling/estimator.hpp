#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sampling/dataset.hpp"
#include "sampling/lstm.hpp"

namespace sampling {

// The interleaving of observations and bridged predictions over one episode's
// target window, plus the conditioning history.
struct CollectedProfile {
    std::array<double, kTargetLen> values{};
    std::array<uint8_t, kTargetLen> observed{};
    std::array<double, kHistoryLen> history{};

    int observation_count() const {
        int n = 0;
        for (uint8_t o : observed) n += o;
        return n;
    }
};

// Builds a profile from strictly increasing observations and per-index
// bridging predictions. Every index must be covered by exactly one source.
CollectedProfile assemble_profile(const std::vector<std::pair<int, double>>& observations,
                                  const std::vector<std::pair<int, double>>& bridging,
                                  const std::array<double, kHistoryLen>& history);

// Recurrent refiner over the 216-step [history | profile] sequence. Each of
// the last 168 steps emits a residual added to the profile value, from a
// zero-initialized head — the untrained network is exactly the identity.
class EstimatorNet {
public:
    EstimatorNet() = default;
    EstimatorNet(int hidden, int layers, bool use_mask, uint64_t seed);

    int hidden() const { return hidden_; }
    int layers() const { return layers_; }
    bool use_mask() const { return use_mask_; }
    bool trained() const { return trained_; }
    void mark_trained() { trained_ = true; }

    nn::LstmStack& stack() { return stack_; }
    nn::DenseParams& head() { return head_; }
    nn::ParamRegistry params();

    void save(const std::string& path);
    void load(const std::string& path);

    std::array<double, kTargetLen> estimate(const CollectedProfile& profile) const;

    // Step inputs: [value, observed flag] ([value] when the mask feature is
    // off). History steps count as observed.
    std::vector<nn::Mat> encode(const std::vector<const CollectedProfile*>& batch) const;

private:
    int hidden_ = 0;
    int layers_ = 0;
    bool use_mask_ = true;
    bool trained_ = false;
    nn::LstmStack stack_;
    nn::DenseParams head_;
};

struct EstimatorSample {
    CollectedProfile profile;
    std::array<double, kTargetLen> target{};
};

struct EstimatorTrainConfig {
    int epochs = 8;
    int batch = 32;
    double learning_rate = 1e-4;
    uint64_t seed = 1;
};

// MSE on the refined 168 outputs; keeps the best validation epoch's weights
// (including the untrained identity, so refinement never regresses on val).
nn::FitLog train_estimator(EstimatorNet& net, const std::vector<EstimatorSample>& train,
                           const std::vector<EstimatorSample>& val,
                           const EstimatorTrainConfig& cfg);

// Gaussian-process baseline: squared-exponential kernel over time indices,
// fixed hyperparameters, prior mean = mean of the episode's observations.
struct GprConfig {
    double length_scale = 6.0;  // hours
    double noise_var = 1e-4;
};

struct GprModel {
    std::vector<double> times;   // sorted
    std::vector<double> values;
    double prior_mean = 0.0;
    double signal_var = 0.0;
    GprConfig cfg;
    Eigen::VectorXd alpha;  // (K + noise I)^-1 (values - prior_mean)
};

GprModel gpr_fit(const std::vector<std::pair<int, double>>& observations,
                 const GprConfig& cfg = {});
std::vector<double> gpr_predict(const GprModel& m, const std::vector<int>& query_times);

}  // namespace sampling
