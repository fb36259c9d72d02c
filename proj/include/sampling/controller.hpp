#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sampling/dataset.hpp"
#include "sampling/lstm.hpp"

namespace sampling {

class Rng;

inline constexpr int kActionCount = 12;  // max gap K; actions are 1..K
inline constexpr int kBudget = 28;       // observations per episode
inline constexpr int kStateDim = 1 + kActionCount + 1 + 2 + 1 + kHistoryLen;  // 65

// Flat agent state: [x_t, forecast(12, zero-padded), t/168, sin hour,
// cos hour, o_ava/28, history(48)]. All inputs normalized-space.
nn::Vec build_state(double x_t, const std::vector<double>& forecast, int t_local,
                    int hour_of_day, int o_ava, const std::array<double, kHistoryLen>& history);

struct Transition {
    nn::Vec state;
    int action = 1;  // 1..12
    double reward = 0.0;
    nn::Vec next_state;  // zeros when terminal
    bool done = false;
    uint64_t episode_id = 0;
};

// FIFO ring of episode-ordered transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);

    void push(Transition t);
    size_t size() const { return data_.size(); }
    size_t capacity() const { return cap_; }
    const Transition& at(size_t logical) const;  // 0 = oldest

    // One batch of length-`seq_len` windows, each ending at a uniformly drawn
    // transition and walking back within the same episode; short head-of-
    // episode windows are left-padded with zero states and mask 0.
    struct SeqBatch {
        std::vector<nn::Mat> states;       // seq_len entries of state_dim x batch
        std::vector<nn::Mat> next_states;  // same layout
        std::vector<std::vector<int>> actions;     // [step][col], 1..12 (0 if padded)
        std::vector<std::vector<double>> rewards;  // [step][col]
        std::vector<std::vector<uint8_t>> done;    // [step][col]
        std::vector<std::vector<uint8_t>> mask;    // [step][col], 1 = real
        int steps = 0;
        int batch = 0;
    };
    SeqBatch sample(int batch, int seq_len, Rng& rng) const;

private:
    std::vector<Transition> data_;
    size_t cap_ = 0;
    size_t next_ = 0;  // overwrite position once full
    bool full_ = false;
};

// Three ReLU dense layers into an LSTM layer into a linear action-value head.
class DrqnNet {
public:
    DrqnNet() = default;
    DrqnNet(int state_dim, int d1, int d2, int d3, int lstm_hidden, int actions, uint64_t seed);
    static DrqnNet standard(uint64_t seed);  // 65 -> 128-128-64 -> LSTM 64 -> 12

    int state_dim() const { return state_dim_; }
    int actions() const { return actions_; }
    nn::ParamRegistry params();
    void copy_from(DrqnNet& other);  // value copy (target sync)

    struct Cache {
        std::vector<nn::Mat> x;   // raw inputs per step
        std::vector<nn::Mat> h1;  // post-ReLU activations
        std::vector<nn::Mat> h2;
        std::vector<nn::Mat> h3;
        nn::StackCache lstm;
    };

    // Per-step action values (actions x batch) over a state sequence.
    std::vector<nn::Mat> forward(const std::vector<nn::Mat>& states, Cache* cache) const;
    void backward(const Cache& cache, const std::vector<nn::Mat>& d_q);

private:
    int state_dim_ = 0;
    int actions_ = 0;
    nn::DenseParams d1_, d2_, d3_;
    nn::LstmStack lstm_;
    nn::DenseParams head_;
};

// Epsilon-greedy over the net's output at the last state of the sequence;
// ties break toward the smallest action. Returns 1..K.
int select_action(const DrqnNet& net, const std::vector<nn::Vec>& recent_states, double epsilon,
                  Rng& rng);

// r = -(1/a) sum |forecast - gt| - w1 * DTW(forecast, gt) - w2 * waste.
// Empty segments contribute no accuracy/similarity terms.
double compute_reward(const std::vector<double>& forecast_used, const std::vector<double>& gt,
                      double w1, double w2, int waste);

// y = r + gamma * max_a Q_target(s', a), y = r on terminal/masked steps.
std::vector<std::vector<double>> td_target(const ReplayBuffer::SeqBatch& batch, DrqnNet& target,
                                           double gamma);

// One Adam step on mean squared TD error over the batch's unmasked steps;
// gradients flow only through the chosen actions' Q values. Returns the loss.
double drqn_train_step(DrqnNet& eval, const ReplayBuffer::SeqBatch& batch,
                       const std::vector<std::vector<double>>& targets, nn::Adam& opt);

// Fixed-interval baseline: the gap clipped at the horizon end.
int uniform_policy(int t_local, int interval = 6, int horizon = kTargetLen);

}  // namespace sampling
