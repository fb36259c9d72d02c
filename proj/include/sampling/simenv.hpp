#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sampling/controller.hpp"
#include "sampling/dataset.hpp"
#include "sampling/estimator.hpp"
#include "sampling/metrics.hpp"
#include "sampling/predictor.hpp"

namespace sampling {

struct EpisodeConfig {
    int horizon = kTargetLen;     // 168 hourly steps
    int budget = kBudget;         // 28 observations
    int window = kActionCount;    // forecast/action span K
    double w1 = 1.0;              // DTW similarity weight
    double w2 = 10.0;             // waste weight
};

struct PolicySpec {
    enum class Kind { Uniform, Drqn };
    Kind kind = Kind::Uniform;
    const DrqnNet* net = nullptr;  // required for Drqn
    double epsilon = 0.0;
    int uniform_interval = 6;
    int history_window = 12;  // states fed to action selection (L_m)
};

struct EpisodeLog {
    std::vector<int> observation_times;
    std::vector<int> actions;
    std::vector<double> rewards;                // one per transition
    std::array<double, kTargetLen> forecast{};  // model's per-step forecast before any observation
    CollectedProfile profile;
    double total_return = 0.0;
    int waste = 0;
    std::vector<Transition> transitions;
};

using SessionFactory =
    std::function<std::unique_ptr<ForecastSession>(const EpisodeInstance&)>;

// Walks one episode: forced observation at step 0, then alternating gap
// decisions and predictor bridging until the budget or the horizon runs out.
// When the budget dies before the horizon the predictor-filled tail is still
// scored, priced in window-sized chunks on the final transition; unused
// budget is charged there too.
EpisodeLog run_episode(const EpisodeInstance& instance, ForecastSession& session,
                       const PolicySpec& policy, const EpisodeConfig& cfg, Rng& rng,
                       uint64_t episode_id);

struct TrainingConfig {
    int episodes = 800;
    int batch = 8;
    int seq_len = 12;  // L_m
    size_t buffer_capacity = 5000;
    double gamma = 0.99;
    double learning_rate = 1e-4;
    int sync_every = 200;  // target sync cadence, in train steps
    double eps_start = 1.0;
    double eps_final = 0.1;
    double eps_decay_frac = 0.6;  // fraction of episodes spent decaying
    uint64_t seed = 1;
};

// Linear decay from eps_start over the first eps_decay_frac of episodes,
// then flat at eps_final.
double epsilon_at(int episode, const TrainingConfig& cfg);

struct TrainingCurvePoint {
    int episode = 0;
    double total_return = 0.0;
    double mean_loss = 0.0;
    double epsilon = 0.0;
    int observations = 0;
};

struct AgentTrainLog {
    std::vector<TrainingCurvePoint> curve;
    int train_steps = 0;
};

// One train_step per stored transition once the buffer holds a batch; target
// copied from the evaluation net every sync_every steps.
AgentTrainLog run_training(DrqnNet& eval, DrqnNet& target,
                           const std::vector<EpisodeInstance>& train,
                           const SessionFactory& sessions, const EpisodeConfig& ecfg,
                           const TrainingConfig& tcfg);

struct EvalOutput {
    MetricReport report;  // denormalized
    std::vector<EpisodeLog> logs;
    std::vector<std::array<double, kTargetLen>> estimates;  // normalized refined profiles
    double mean_return = 0.0;
};

// Runs every test episode, optionally refines the profile (learned estimator
// takes precedence over GPR), and reports denormalized pooled metrics.
// Coverage is the episode-averaged sum of ground truth at observation times.
EvalOutput evaluate_configuration(const std::vector<EpisodeInstance>& test,
                                  const SessionFactory& sessions, const PolicySpec& policy,
                                  const EstimatorNet* estimator, const GprConfig* gpr,
                                  const EpisodeConfig& cfg, const Normalizer& norm,
                                  uint64_t seed);

// Profile/target pairs for estimator training, generated by the given
// predictor+policy over the supplied episodes.
std::vector<EstimatorSample> collect_profiles(const std::vector<EpisodeInstance>& episodes,
                                              const SessionFactory& sessions,
                                              const PolicySpec& policy,
                                              const EpisodeConfig& cfg, uint64_t seed);

}  // namespace sampling
