#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sampling/simenv.hpp"

namespace sampling {

// Flat key=value configuration covering every tunable; the resolved config is
// serialized into each run directory so a run can be reproduced bit-exactly.
struct ExperimentConfig {
    // data
    std::string data_path;
    double train_ratio = 0.7;
    double val_ratio = 0.2;
    double test_ratio = 0.1;
    int max_windows_per_location = 0;  // 0 = all
    int max_locations_train = 0;       // 0 = all
    int max_locations_val = 0;
    int max_locations_test = 0;
    uint64_t seed = 1;
    std::string out_dir = "run_out";
    std::string preset = "full";

    // pipeline selection
    std::string predictor = "lstm";  // lstm | ar4_kalman | none
    std::string policy = "drqn";     // drqn | uniform
    std::string estimator = "lstm";  // lstm | gpr | none

    // forecasting network
    int predictor_hidden = 128;
    int predictor_layers = 2;
    int predictor_epochs = 60;
    int predictor_batch = 32;
    double predictor_lr = 1e-4;

    // episode protocol
    int horizon = 168;
    int budget = 28;
    int window = 12;
    double w1 = 1.0;
    double w2 = 10.0;
    int uniform_interval = 6;

    // agent training
    int drqn_episodes = 3000;
    int drqn_batch = 8;
    int seq_len = 12;
    int buffer_capacity = 5000;
    double gamma = 0.99;
    double drqn_lr = 1e-4;
    int sync_every = 200;
    double eps_start = 1.0;
    double eps_final = 0.1;
    double eps_decay_frac = 0.6;

    // refinement
    int estimator_hidden = 256;
    int estimator_layers = 2;
    int estimator_epochs = 10;
    int estimator_batch = 32;
    double estimator_lr = 1e-4;
    bool estimator_use_mask = true;
    double gpr_length_scale = 6.0;
    double gpr_noise = 1e-4;
};

// Reduced sizes for laptop-scale runs; "full" restores the defaults.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

// key=value per line, '#' comments; unknown keys are usage errors.
void set_config_field(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Throws UsageError on any invalid field combination, before any compute.
void validate_config(const ExperimentConfig& cfg);

// Trained components keyed by the configuration subset that determines them,
// so several pipeline variants over the same data can share training work.
struct TrainedPredictor {
    std::shared_ptr<Seq2SeqPredictor> net;
    nn::FitLog log;
};
struct TrainedAgent {
    std::shared_ptr<DrqnNet> net;
    AgentTrainLog log;
};
struct TrainedEstimator {
    std::shared_ptr<EstimatorNet> net;
    nn::FitLog log;
};
struct ComponentCache {
    std::map<std::string, TrainedPredictor> predictors;
    std::map<std::string, TrainedAgent> agents;
    std::map<std::string, TrainedEstimator> estimators;
};

struct RunResult {
    MetricReport report;
    double mean_return = 0.0;
    std::string out_dir;
};

// Full pipeline: prepare data, train the configured components, evaluate on
// the test split, write artifacts into cfg.out_dir. A shared cache (optional)
// returns identical components to what a fresh run would train.
RunResult run_experiment(const ExperimentConfig& cfg, ComponentCache* cache = nullptr);

// Side-by-side metric table over completed run directories, with deltas
// relative to the first column; columns ordered by pipeline name.
std::string compare_runs(const std::vector<std::string>& run_dirs);

// Merges one episode's logged series into <run>/plot_episode_<i>.csv with
// columns t,gt,profile,estimate,observed_flag; returns the file path.
std::string plot_episode(const std::string& run_dir, int episode_index);

}  // namespace sampling
