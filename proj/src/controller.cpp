#include "sampling/controller.hpp"

#include <algorithm>
#include <cmath>

#include "sampling/errors.hpp"
#include "sampling/metrics.hpp"
#include "sampling/predictor.hpp"
#include "sampling/rng.hpp"

namespace sampling {

using nn::Mat;
using nn::Vec;

nn::Vec build_state(double x_t, const std::vector<double>& forecast, int t_local,
                    int hour_of_day, int o_ava,
                    const std::array<double, kHistoryLen>& history) {
    if (static_cast<int>(forecast.size()) > kActionCount) {
        throw DimensionError("build_state: forecast longer than K");
    }
    if (t_local < 0 || t_local >= kTargetLen) {
        throw DimensionError("build_state: step index out of range");
    }
    if (o_ava < 0 || o_ava > kBudget) {
        throw DimensionError("build_state: remaining budget out of range");
    }
    Vec s = Vec::Zero(kStateDim);
    s(0) = x_t;
    for (size_t i = 0; i < forecast.size(); ++i) s(1 + i) = forecast[i];
    s(1 + kActionCount) = static_cast<double>(t_local) / kTargetLen;
    auto [sa, ca] = hour_angles(hour_of_day);
    s(2 + kActionCount) = sa;
    s(3 + kActionCount) = ca;
    s(4 + kActionCount) = static_cast<double>(o_ava) / kBudget;
    for (int i = 0; i < kHistoryLen; ++i) s(5 + kActionCount + i) = history[i];
    return s;
}

ReplayBuffer::ReplayBuffer(size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw UsageError("ReplayBuffer: capacity must be positive");
    data_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
    if (!full_) {
        data_.push_back(std::move(t));
        if (data_.size() == cap_) full_ = true;
        return;
    }
    data_[next_] = std::move(t);
    next_ = (next_ + 1) % cap_;
}

const Transition& ReplayBuffer::at(size_t logical) const {
    if (logical >= size()) throw DimensionError("ReplayBuffer::at: index out of range");
    return full_ ? data_[(next_ + logical) % cap_] : data_[logical];
}

ReplayBuffer::SeqBatch ReplayBuffer::sample(int batch, int seq_len, Rng& rng) const {
    if (size() == 0) throw UsageError("ReplayBuffer::sample: buffer empty");
    if (batch < 1 || seq_len < 1) throw UsageError("ReplayBuffer::sample: bad batch shape");

    const int dim = static_cast<int>(at(0).state.size());
    SeqBatch sb;
    sb.steps = seq_len;
    sb.batch = batch;
    sb.states.assign(seq_len, Mat::Zero(dim, batch));
    sb.next_states.assign(seq_len, Mat::Zero(dim, batch));
    sb.actions.assign(seq_len, std::vector<int>(batch, 0));
    sb.rewards.assign(seq_len, std::vector<double>(batch, 0.0));
    sb.done.assign(seq_len, std::vector<uint8_t>(batch, 0));
    sb.mask.assign(seq_len, std::vector<uint8_t>(batch, 0));

    for (int b = 0; b < batch; ++b) {
        const size_t end = rng.uniform_int(size());
        const uint64_t eid = at(end).episode_id;
        // Count how far back this episode extends (bounded by the window,
        // the buffer head, and the episode boundary).
        int count = 1;
        while (count < seq_len && end >= static_cast<size_t>(count) &&
               at(end - count).episode_id == eid) {
            ++count;
        }
        for (int j = 0; j < count; ++j) {
            const Transition& tr = at(end - count + 1 + j);
            const int slot = seq_len - count + j;
            sb.states[slot].col(b) = tr.state;
            if (tr.next_state.size() == dim) sb.next_states[slot].col(b) = tr.next_state;
            sb.actions[slot][b] = tr.action;
            sb.rewards[slot][b] = tr.reward;
            sb.done[slot][b] = tr.done ? 1 : 0;
            sb.mask[slot][b] = 1;
        }
    }
    return sb;
}

DrqnNet::DrqnNet(int state_dim, int d1, int d2, int d3, int lstm_hidden, int actions,
                 uint64_t seed)
    : state_dim_(state_dim), actions_(actions) {
    Rng rng(derive_seed(seed, "drqn-init"));
    d1_ = nn::DenseParams(state_dim, d1, rng);
    d2_ = nn::DenseParams(d1, d2, rng);
    d3_ = nn::DenseParams(d2, d3, rng);
    lstm_ = nn::LstmStack(d3, lstm_hidden, 1, rng);
    head_ = nn::DenseParams(lstm_hidden, actions, rng);
}

DrqnNet DrqnNet::standard(uint64_t seed) {
    return DrqnNet(kStateDim, 128, 128, 64, 64, kActionCount, seed);
}

nn::ParamRegistry DrqnNet::params() {
    nn::ParamRegistry reg;
    d1_.register_params(reg, "d1");
    d2_.register_params(reg, "d2");
    d3_.register_params(reg, "d3");
    lstm_.register_params(reg, "lstm");
    head_.register_params(reg, "head");
    return reg;
}

void DrqnNet::copy_from(DrqnNet& other) {
    nn::ParamRegistry dst = params();
    nn::ParamRegistry src = other.params();
    if (dst.size() != src.size()) throw DimensionError("DrqnNet::copy_from: shape mismatch");
    for (size_t i = 0; i < dst.size(); ++i) *dst[i].value = *src[i].value;
}

namespace {

inline Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

inline Mat relu_mask(const Mat& post, const Mat& grad) {
    return (post.array() > 0.0).cast<double>().matrix().cwiseProduct(grad);
}

}  // namespace

std::vector<Mat> DrqnNet::forward(const std::vector<Mat>& states, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    const int steps = static_cast<int>(states.size());
    if (steps == 0) throw DimensionError("DrqnNet::forward: empty sequence");

    c.x = states;
    c.h1.resize(steps);
    c.h2.resize(steps);
    c.h3.resize(steps);
    std::vector<Mat> lstm_in(steps);
    for (int t = 0; t < steps; ++t) {
        if (states[t].rows() != state_dim_) {
            throw DimensionError("DrqnNet::forward: state dim mismatch");
        }
        c.h1[t] = relu(d1_.forward(states[t]));
        c.h2[t] = relu(d2_.forward(c.h1[t]));
        c.h3[t] = relu(d3_.forward(c.h2[t]));
        lstm_in[t] = c.h3[t];
    }
    lstm_.forward(lstm_in, nullptr, c.lstm);

    std::vector<Mat> q(steps);
    const auto& top = c.lstm.hidden.back();
    for (int t = 0; t < steps; ++t) q[t] = head_.forward(top[t]);
    return q;
}

void DrqnNet::backward(const Cache& cache, const std::vector<Mat>& d_q) {
    const int steps = cache.lstm.steps;
    std::vector<Mat> d_top(steps);
    const auto& top = cache.lstm.hidden.back();
    for (int t = 0; t < steps; ++t) {
        if (d_q[t].size() != 0) d_top[t] = head_.backward(top[t], d_q[t]);
    }
    std::vector<Mat> d_h3 = lstm_.backward(cache.lstm, d_top, nullptr);
    for (int t = 0; t < steps; ++t) {
        Mat g3 = relu_mask(cache.h3[t], d_h3[t]);
        Mat d_h2 = d3_.backward(cache.h2[t], g3);
        Mat g2 = relu_mask(cache.h2[t], d_h2);
        Mat d_h1 = d2_.backward(cache.h1[t], g2);
        Mat g1 = relu_mask(cache.h1[t], d_h1);
        d1_.backward(cache.x[t], g1);
    }
}

int select_action(const DrqnNet& net, const std::vector<Vec>& recent_states, double epsilon,
                  Rng& rng) {
    if (recent_states.empty()) throw UsageError("select_action: no states");
    if (rng.uniform() < epsilon) {
        return 1 + static_cast<int>(rng.uniform_int(net.actions()));
    }
    std::vector<Mat> xs;
    xs.reserve(recent_states.size());
    for (const Vec& s : recent_states) xs.push_back(s);
    const std::vector<Mat> q = net.forward(xs, nullptr);
    const Mat& last = q.back();
    int best = 0;
    for (int a = 1; a < last.rows(); ++a) {
        if (last(a, 0) > last(best, 0)) best = a;  // strict: ties keep smallest
    }
    return best + 1;
}

double compute_reward(const std::vector<double>& forecast_used, const std::vector<double>& gt,
                      double w1, double w2, int waste) {
    if (forecast_used.size() != gt.size()) {
        throw DimensionError("compute_reward: segment length mismatch");
    }
    if (waste < 0) throw UsageError("compute_reward: negative waste");
    double accuracy = 0.0;
    double similarity = 0.0;
    if (!forecast_used.empty()) {
        for (size_t i = 0; i < forecast_used.size(); ++i) {
            accuracy += std::abs(forecast_used[i] - gt[i]);
        }
        accuracy /= static_cast<double>(forecast_used.size());
        similarity = dtw_distance(forecast_used, gt);
    }
    return -accuracy - w1 * similarity - w2 * waste;
}

std::vector<std::vector<double>> td_target(const ReplayBuffer::SeqBatch& batch, DrqnNet& target,
                                           double gamma) {
    const std::vector<Mat> qn = target.forward(batch.next_states, nullptr);
    std::vector<std::vector<double>> y(batch.steps, std::vector<double>(batch.batch, 0.0));
    for (int t = 0; t < batch.steps; ++t) {
        for (int b = 0; b < batch.batch; ++b) {
            if (!batch.mask[t][b]) continue;
            double v = batch.rewards[t][b];
            if (!batch.done[t][b]) v += gamma * qn[t].col(b).maxCoeff();
            y[t][b] = v;
        }
    }
    return y;
}

double drqn_train_step(DrqnNet& eval, const ReplayBuffer::SeqBatch& batch,
                       const std::vector<std::vector<double>>& targets, nn::Adam& opt) {
    DrqnNet::Cache cache;
    const std::vector<Mat> q = eval.forward(batch.states, &cache);

    int n = 0;
    for (int t = 0; t < batch.steps; ++t)
        for (int b = 0; b < batch.batch; ++b) n += batch.mask[t][b];
    if (n == 0) return 0.0;

    double loss = 0.0;
    std::vector<Mat> d_q(batch.steps);
    for (int t = 0; t < batch.steps; ++t) {
        d_q[t] = Mat::Zero(eval.actions(), batch.batch);
        for (int b = 0; b < batch.batch; ++b) {
            if (!batch.mask[t][b]) continue;
            const int a = batch.actions[t][b] - 1;
            const double diff = q[t](a, b) - targets[t][b];
            loss += diff * diff;
            d_q[t](a, b) = 2.0 * diff / n;
        }
    }
    loss /= n;
    if (!std::isfinite(loss)) throw NumericError("drqn_train_step: non-finite TD loss");

    eval.backward(cache, d_q);
    nn::ParamRegistry reg = eval.params();
    nn::clip_grad_norm(reg, 5.0);
    opt.step(reg);
    nn::zero_grads(reg);
    return loss;
}

int uniform_policy(int t_local, int interval, int horizon) {
    if (interval < 1) throw UsageError("uniform_policy: interval must be >= 1");
    if (t_local < 0 || t_local >= horizon) throw UsageError("uniform_policy: step out of range");
    return std::min(interval, horizon - t_local);
}

}  // namespace sampling
