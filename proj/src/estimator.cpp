#include "sampling/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sampling/errors.hpp"
#include "sampling/nn.hpp"
#include "sampling/rng.hpp"

namespace sampling {

using nn::Mat;
using nn::Vec;

CollectedProfile assemble_profile(const std::vector<std::pair<int, double>>& observations,
                                  const std::vector<std::pair<int, double>>& bridging,
                                  const std::array<double, kHistoryLen>& history) {
    CollectedProfile p;
    p.history = history;
    std::array<uint8_t, kTargetLen> covered{};

    int prev_time = -1;
    for (const auto& [t, v] : observations) {
        if (t < 0 || t >= kTargetLen) throw DataError("assemble_profile: observation time out of range");
        if (t <= prev_time) throw DataError("assemble_profile: observation times not strictly increasing");
        prev_time = t;
        p.values[t] = v;
        p.observed[t] = 1;
        covered[t] = 1;
    }
    for (const auto& [t, v] : bridging) {
        if (t < 0 || t >= kTargetLen) throw DataError("assemble_profile: bridging index out of range");
        if (covered[t]) throw DataError("assemble_profile: index " + std::to_string(t) + " covered twice");
        p.values[t] = v;
        covered[t] = 1;
    }
    for (int t = 0; t < kTargetLen; ++t) {
        if (!covered[t]) throw DataError("assemble_profile: coverage gap at index " + std::to_string(t));
        if (!std::isfinite(p.values[t])) throw DataError("assemble_profile: non-finite value at index " + std::to_string(t));
    }
    return p;
}

EstimatorNet::EstimatorNet(int hidden, int layers, bool use_mask, uint64_t seed)
    : hidden_(hidden), layers_(layers), use_mask_(use_mask) {
    Rng rng(derive_seed(seed, "estimator-init"));
    stack_ = nn::LstmStack(use_mask ? 2 : 1, hidden, layers, rng);
    head_ = nn::DenseParams(hidden, 1, rng, /*zero_init=*/true);
}

nn::ParamRegistry EstimatorNet::params() {
    nn::ParamRegistry reg;
    stack_.register_params(reg, "est");
    head_.register_params(reg, "est.head");
    return reg;
}

void EstimatorNet::save(const std::string& path) { nn::save_checkpoint(path, params()); }

void EstimatorNet::load(const std::string& path) {
    nn::load_checkpoint(path, params());
    trained_ = true;
}

std::vector<Mat> EstimatorNet::encode(const std::vector<const CollectedProfile*>& batch) const {
    const int b = static_cast<int>(batch.size());
    const int in_dim = use_mask_ ? 2 : 1;
    std::vector<Mat> xs(kWindowLen, Mat(in_dim, b));
    for (int j = 0; j < b; ++j) {
        const CollectedProfile& p = *batch[j];
        for (int t = 0; t < kHistoryLen; ++t) {
            xs[t](0, j) = p.history[t];
            if (use_mask_) xs[t](1, j) = 1.0;
        }
        for (int t = 0; t < kTargetLen; ++t) {
            xs[kHistoryLen + t](0, j) = p.values[t];
            if (use_mask_) xs[kHistoryLen + t](1, j) = p.observed[t] ? 1.0 : 0.0;
        }
    }
    return xs;
}

std::array<double, kTargetLen> EstimatorNet::estimate(const CollectedProfile& profile) const {
    if (!trained_) throw UsageError("estimator is untrained; train or load a checkpoint first");
    nn::StackCache cache;
    stack_.forward(encode({&profile}), nullptr, cache);
    const auto& top = cache.hidden.back();
    std::array<double, kTargetLen> out{};
    for (int t = 0; t < kTargetLen; ++t) {
        out[t] = profile.values[t] + head_.forward(top[kHistoryLen + t])(0, 0);
    }
    return out;
}

namespace {

// Refined outputs for a batch of samples; returns 168 x B.
Mat refine_batch(EstimatorNet& net, const std::vector<const CollectedProfile*>& profiles,
                 nn::StackCache* cache_out) {
    nn::StackCache local;
    nn::StackCache& cache = cache_out ? *cache_out : local;
    net.stack().forward(net.encode(profiles), nullptr, cache);
    const auto& top = cache.hidden.back();
    const int b = static_cast<int>(profiles.size());
    Mat out(kTargetLen, b);
    for (int t = 0; t < kTargetLen; ++t) {
        Mat y = net.head().forward(top[kHistoryLen + t]);
        for (int j = 0; j < b; ++j) out(t, j) = profiles[j]->values[t] + y(0, j);
    }
    return out;
}

double val_rmse_of(EstimatorNet& net, const std::vector<EstimatorSample>& val, int chunk) {
    double se = 0.0;
    size_t n = 0;
    for (size_t start = 0; start < val.size(); start += chunk) {
        const size_t stop = std::min(val.size(), start + chunk);
        std::vector<const CollectedProfile*> profiles;
        for (size_t i = start; i < stop; ++i) profiles.push_back(&val[i].profile);
        const Mat out = refine_batch(net, profiles, nullptr);
        for (size_t i = start; i < stop; ++i) {
            for (int t = 0; t < kTargetLen; ++t) {
                const double d = out(t, static_cast<int>(i - start)) - val[i].target[t];
                se += d * d;
                ++n;
            }
        }
    }
    return n ? std::sqrt(se / n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

nn::FitLog train_estimator(EstimatorNet& net, const std::vector<EstimatorSample>& train,
                           const std::vector<EstimatorSample>& val,
                           const EstimatorTrainConfig& cfg) {
    if (train.empty()) throw UsageError("train_estimator: no training samples");
    net.mark_trained();
    nn::FitLog log;
    if (cfg.epochs <= 0) return log;

    nn::ParamRegistry reg = net.params();
    nn::Adam opt(cfg.learning_rate);
    Rng rng(derive_seed(cfg.seed, "estimator-train"));

    // The zero-initialized head makes the fresh network the identity map, so
    // the pre-training validation score is the baseline to beat.
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Mat> best_weights;
    if (!val.empty()) {
        best_val = val_rmse_of(net, val, cfg.batch);
        best_weights.reserve(reg.size());
        for (const auto& pr : reg) best_weights.push_back(*pr.value);
    }

    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch) {
            const int b = static_cast<int>(std::min<size_t>(cfg.batch, order.size() - start));
            std::vector<const CollectedProfile*> profiles;
            profiles.reserve(b);
            for (int j = 0; j < b; ++j) profiles.push_back(&train[order[start + j]].profile);

            nn::StackCache cache;
            const Mat out = refine_batch(net, profiles, &cache);

            const double denom = static_cast<double>(kTargetLen) * b;
            double batch_loss = 0.0;
            std::vector<Mat> d_top(kWindowLen);
            const auto& top = cache.hidden.back();
            for (int t = 0; t < kTargetLen; ++t) {
                Mat diff(1, b);
                for (int j = 0; j < b; ++j) {
                    diff(0, j) = out(t, j) - train[order[start + j]].target[t];
                }
                batch_loss += diff.squaredNorm();
                d_top[kHistoryLen + t] =
                    net.head().backward(top[kHistoryLen + t], Mat((2.0 / denom) * diff));
            }
            batch_loss /= denom;
            if (!std::isfinite(batch_loss)) {
                throw NumericError("train_estimator: non-finite loss at epoch " +
                                   std::to_string(epoch));
            }
            net.stack().backward(cache, d_top, nullptr);

            nn::clip_grad_norm(reg, 5.0);
            opt.step(reg);
            nn::zero_grads(reg);
            epoch_loss += batch_loss;
            ++batches;
        }
        log.train_loss.push_back(epoch_loss / std::max(batches, 1));

        double vr = std::numeric_limits<double>::quiet_NaN();
        if (!val.empty()) {
            vr = val_rmse_of(net, val, cfg.batch);
            if (vr < best_val) {
                best_val = vr;
                log.best_epoch = epoch;
                best_weights.clear();
                for (const auto& pr : reg) best_weights.push_back(*pr.value);
            }
        }
        log.val_rmse.push_back(vr);
    }

    if (!best_weights.empty()) {
        for (size_t i = 0; i < reg.size(); ++i) *reg[i].value = best_weights[i];
    } else if (log.best_epoch < 0) {
        log.best_epoch = cfg.epochs - 1;
    }
    nn::check_finite(reg, "train_estimator");
    return log;
}

GprModel gpr_fit(const std::vector<std::pair<int, double>>& observations, const GprConfig& cfg) {
    if (observations.size() < 2) throw DataError("gpr_fit: need at least 2 observations");

    std::vector<std::pair<int, double>> obs = observations;
    std::sort(obs.begin(), obs.end());  // posterior is order-invariant; make it bit-exact
    for (size_t i = 1; i < obs.size(); ++i) {
        if (obs[i].first == obs[i - 1].first) throw DataError("gpr_fit: duplicate observation time");
    }

    GprModel m;
    m.cfg = cfg;
    const int n = static_cast<int>(obs.size());
    m.times.resize(n);
    m.values.resize(n);
    for (int i = 0; i < n; ++i) {
        m.times[i] = obs[i].first;
        m.values[i] = obs[i].second;
    }
    m.prior_mean = std::accumulate(m.values.begin(), m.values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : m.values) var += (v - m.prior_mean) * (v - m.prior_mean);
    m.signal_var = var / n;

    const double ls2 = 2.0 * cfg.length_scale * cfg.length_scale;
    Mat k(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d = m.times[i] - m.times[j];
            k(i, j) = m.signal_var * std::exp(-d * d / ls2);
        }
    }

    Vec y(n);
    for (int i = 0; i < n; ++i) y(i) = m.values[i] - m.prior_mean;

    double jitter = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        Mat a = k;
        a.diagonal().array() += cfg.noise_var + jitter;
        Eigen::LLT<Mat> llt(a);
        if (llt.info() == Eigen::Success) {
            m.alpha = llt.solve(y);
            return m;
        }
        jitter = jitter == 0.0 ? 1e-10 * std::max(m.signal_var, 1.0) : jitter * 100.0;
    }
    throw NumericError("gpr_fit: kernel matrix not positive definite after jitter");
}

std::vector<double> gpr_predict(const GprModel& m, const std::vector<int>& query_times) {
    const int n = static_cast<int>(m.times.size());
    const double ls2 = 2.0 * m.cfg.length_scale * m.cfg.length_scale;
    std::vector<double> out;
    out.reserve(query_times.size());
    for (int q : query_times) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = q - m.times[i];
            acc += m.signal_var * std::exp(-d * d / ls2) * m.alpha(i);
        }
        out.push_back(m.prior_mean + acc);
    }
    return out;
}

}  // namespace sampling
