#pragma once

#include <string>
#include <vector>

#include "sampling/nn.hpp"

namespace sampling {
class Rng;
}

namespace sampling::nn {

// One LSTM cell. Gate rows are stacked [input; forget; candidate; output]
// inside the 4H-row matrices. Forget-gate bias starts at 1.0.
struct LstmCellParams {
    int input_dim = 0;
    int hidden_dim = 0;
    Mat w_input;   // 4H x in
    Mat w_hidden;  // 4H x H
    Mat bias;      // 4H x 1
    Mat g_w_input;
    Mat g_w_hidden;
    Mat g_bias;

    LstmCellParams() = default;
    LstmCellParams(int input_dim, int hidden_dim, Rng& rng);

    void register_params(ParamRegistry& reg, const std::string& prefix);
};

struct DenseParams {
    Mat weight;  // out x in
    Mat bias;    // out x 1
    Mat g_weight;
    Mat g_bias;

    DenseParams() = default;
    DenseParams(int input_dim, int output_dim, Rng& rng, bool zero_init = false);

    void register_params(ParamRegistry& reg, const std::string& prefix);

    Mat forward(const Mat& x) const;
    // d_out -> d_x; accumulates weight/bias gradients
    Mat backward(const Mat& x, const Mat& d_out);
};

// Single-sample LSTM step: updates h and c in place.
void lstm_step(const LstmCellParams& p, const Vec& x, Vec& h, Vec& c);

// Hidden and cell state per layer, one column per batch element.
struct LstmState {
    std::vector<Mat> h;
    std::vector<Mat> c;
};

// Everything the backward pass needs, per [layer][step].
struct StackCache {
    std::vector<std::vector<Mat>> gates;  // 4H x B, post-activation
    std::vector<std::vector<Mat>> cell;   // H x B
    std::vector<std::vector<Mat>> hidden; // H x B
    std::vector<Mat> inputs;              // layer-0 input per step, in x B
    LstmState initial;
    int steps = 0;
    int batch = 0;

    // State after the last cached step (the initial state if none yet).
    LstmState final_state() const;
};

// A stack of LSTM layers unrolled over time.
class LstmStack {
public:
    LstmStack() = default;
    LstmStack(int input_dim, int hidden_dim, int layers, Rng& rng);

    int input_dim() const { return input_dim_; }
    int hidden_dim() const { return hidden_dim_; }
    int layers() const { return static_cast<int>(cells_.size()); }

    std::vector<LstmCellParams>& cells() { return cells_; }
    const std::vector<LstmCellParams>& cells() const { return cells_; }
    void register_params(ParamRegistry& reg, const std::string& prefix);

    LstmState zero_state(int batch) const;

    // Unrolled forward; caches all activations for backward. Initial state may
    // be null (zeros). Top-layer hidden per step lands in cache.hidden.back().
    void forward(const std::vector<Mat>& xs, const LstmState* initial, StackCache& cache) const;

    // Incremental cached forward, for rollouts whose inputs depend on earlier
    // outputs. begin() then forward_step() per step; backward() works the same.
    void begin(StackCache& cache, const LstmState* initial, int batch) const;
    const Mat& forward_step(const Mat& x, StackCache& cache) const;

    // Full BPTT from per-step gradients on the top hidden states. Accumulates
    // parameter gradients, returns per-step input gradients; d_initial (if not
    // null) receives the gradient w.r.t. the initial state; d_final (if given)
    // injects extra gradient on the final hidden/cell state of every layer.
    std::vector<Mat> backward(const StackCache& cache, const std::vector<Mat>& d_top,
                              LstmState* d_initial, const LstmState* d_final = nullptr);

    // One incremental step without caching (inference); state updated in place.
    void step(const Mat& x, LstmState& state) const;

private:
    int input_dim_ = 0;
    int hidden_dim_ = 0;
    std::vector<LstmCellParams> cells_;
};

// LSTM stack plus a per-step linear head.
class SequenceNet {
public:
    SequenceNet() = default;
    SequenceNet(int input_dim, int hidden_dim, int layers, int output_dim, Rng& rng,
                bool zero_init_head = false);

    LstmStack& stack() { return stack_; }
    const LstmStack& stack() const { return stack_; }
    DenseParams& head() { return head_; }
    const DenseParams& head() const { return head_; }

    void register_params(ParamRegistry& reg, const std::string& prefix);
    ParamRegistry params();  // convenience registry of just this net

    // Returns per-step head outputs (out x B); cache filled for backward.
    std::vector<Mat> forward(const std::vector<Mat>& xs, const LstmState* initial,
                             StackCache& cache) const;

    // d_outputs are gradients on the head outputs, one per step (empty Mat
    // means no loss at that step). Returns per-step input gradients.
    std::vector<Mat> backward(const StackCache& cache, const std::vector<Mat>& d_outputs,
                              LstmState* d_initial);

private:
    LstmStack stack_;
    DenseParams head_;
};

}  // namespace sampling::nn
