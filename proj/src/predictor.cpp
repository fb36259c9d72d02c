#include "sampling/predictor.hpp"

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

namespace {

Eigen::Matrix4d companion(const Eigen::Vector4d& phi) {
    Eigen::Matrix4d f = Eigen::Matrix4d::Zero();
    f.row(0) = phi.transpose();
    f(1, 0) = 1.0;
    f(2, 1) = 1.0;
    f(3, 2) = 1.0;
    return f;
}

class PredictorSession final : public ForecastSession {
public:
    PredictorSession(const Seq2SeqPredictor* p, const EpisodeInstance& ep)
        : p_(p), hour_offset_(ep.hour_of_day_offset) {
        state_ = p_->encoder().zero_state(1);
        Mat x(1, 1);
        for (int i = 0; i < kHistoryLen; ++i) {
            x(0, 0) = ep.history[i];
            p_->encoder().step(x, state_);
        }
        prev_ = ep.history[kHistoryLen - 1];
    }

    std::vector<double> lookahead(int k) const override {
        std::vector<double> out;
        out.reserve(k);
        nn::LstmState st = state_;
        double prev = prev_;
        for (int j = 0; j < k; ++j) {
            p_->decoder().step(decoder_input(prev, pos_ + j), st);
            double v = p_->head().forward(st.h.back())(0, 0);
            v = clamp_forecast(v);
            out.push_back(v);
            prev = v;
        }
        return out;
    }

    void step(double value, bool /*observed*/) override {
        p_->decoder().step(decoder_input(prev_, pos_), state_);
        prev_ = value;
        ++pos_;
    }

    int position() const override { return pos_; }

private:
    Mat decoder_input(double prev, int step) const {
        auto [s, c] = hour_angles(hour_offset_ + step);
        Mat x(3, 1);
        x(0, 0) = prev;
        x(1, 0) = s;
        x(2, 0) = c;
        return x;
    }

    const Seq2SeqPredictor* p_;
    int hour_offset_;
    nn::LstmState state_;
    double prev_ = 0.0;
    int pos_ = 0;
};

class ArSession final : public ForecastSession {
public:
    explicit ArSession(const EpisodeInstance& ep)
        : model_(ar_fit(std::vector<double>(ep.history.begin(), ep.history.end()))) {}

    std::vector<double> lookahead(int k) const override {
        std::vector<double> out;
        out.reserve(k);
        const Eigen::Matrix4d f = companion(model_.phi);
        Eigen::Vector4d z = model_.z;
        for (int j = 0; j < k; ++j) {
            z = f * z;
            out.push_back(z(0) + model_.mean);
        }
        return out;
    }

    void step(double value, bool observed) override {
        kalman_step(model_, observed ? std::optional<double>(value) : std::nullopt);
        ++pos_;
    }

    int position() const override { return pos_; }

private:
    ArKalmanModel model_;
    int pos_ = 0;
};

class ZeroSession final : public ForecastSession {
public:
    std::vector<double> lookahead(int k) const override {
        return std::vector<double>(static_cast<size_t>(k), 0.0);
    }
    void step(double /*value*/, bool /*observed*/) override { ++pos_; }
    int position() const override { return pos_; }

private:
    int pos_ = 0;
};

// Batched decode of many episodes at once; returns 168 x B forecasts. With
// obs_every > 0 the true value is fed back at that stride (the deployment
// pattern); 0 rolls fully free. The incremental session path is equivalent.
Mat batched_rollout(Seq2SeqPredictor& p, const std::vector<EpisodeInstance>& eps,
                    int obs_every) {
    const int b = static_cast<int>(eps.size());
    std::vector<Mat> enc_xs(kHistoryLen, Mat(1, b));
    for (int t = 0; t < kHistoryLen; ++t)
        for (int j = 0; j < b; ++j) enc_xs[t](0, j) = eps[j].history[t];

    nn::StackCache enc_cache;
    p.encoder().forward(enc_xs, nullptr, enc_cache);
    nn::LstmState dec_state = enc_cache.final_state();

    Mat out(kTargetLen, b);
    Mat prev(1, b);
    for (int j = 0; j < b; ++j) prev(0, j) = eps[j].history[kHistoryLen - 1];
    Mat x(3, b);
    for (int t = 0; t < kTargetLen; ++t) {
        x.row(0) = prev;
        for (int j = 0; j < b; ++j) {
            auto [s, c] = hour_angles(eps[j].hour_of_day_offset + t);
            x(1, j) = s;
            x(2, j) = c;
        }
        p.decoder().step(x, dec_state);
        Mat y = p.head().forward(dec_state.h.back());
        const bool observed = obs_every > 0 && t % obs_every == 0;
        for (int j = 0; j < b; ++j) {
            const double v = clamp_forecast(y(0, j));
            out(t, j) = v;
            prev(0, j) = observed ? eps[j].target[t] : v;
        }
    }
    return out;
}

}  // namespace

Seq2SeqPredictor::Seq2SeqPredictor(int hidden, int layers, uint64_t seed)
    : hidden_(hidden), layers_(layers) {
    Rng rng(derive_seed(seed, "predictor-init"));
    encoder_ = nn::LstmStack(1, hidden, layers, rng);
    decoder_ = nn::LstmStack(3, hidden, layers, rng);
    head_ = nn::DenseParams(hidden, 1, rng);
}

nn::ParamRegistry Seq2SeqPredictor::params() {
    nn::ParamRegistry reg;
    encoder_.register_params(reg, "enc");
    decoder_.register_params(reg, "dec");
    head_.register_params(reg, "head");
    return reg;
}

void Seq2SeqPredictor::save(const std::string& path) { nn::save_checkpoint(path, params()); }

void Seq2SeqPredictor::load(const std::string& path) {
    nn::load_checkpoint(path, params());
    trained_ = true;
}

std::unique_ptr<ForecastSession> Seq2SeqPredictor::make_session(const EpisodeInstance& ep) const {
    if (!trained_) throw UsageError("predictor is untrained; train or load a checkpoint first");
    return std::make_unique<PredictorSession>(this, ep);
}

std::array<double, kTargetLen> Seq2SeqPredictor::free_run(const EpisodeInstance& ep) const {
    auto session = make_session(ep);
    const std::vector<double> v = session->lookahead(kTargetLen);
    std::array<double, kTargetLen> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

FitLog train_predictor(Seq2SeqPredictor& p, const std::vector<EpisodeInstance>& train,
                       const std::vector<EpisodeInstance>& val,
                       const PredictorTrainConfig& cfg) {
    if (train.empty()) throw UsageError("train_predictor: no training episodes");
    p.mark_trained();  // sessions become legal from here on
    FitLog log;
    if (cfg.epochs <= 0) return log;

    nn::ParamRegistry reg = p.params();
    nn::Adam opt(cfg.learning_rate);
    Rng rng(derive_seed(cfg.seed, "predictor-train"));

    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Mat> best_weights;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double p_tf =
            cfg.epochs > 1 ? 1.0 - static_cast<double>(epoch) / (cfg.epochs - 1) : 1.0;
        rng.shuffle(order);

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch) {
            const int b = static_cast<int>(std::min<size_t>(cfg.batch, order.size() - start));

            std::vector<Mat> enc_xs(kHistoryLen, Mat(1, b));
            Mat targets(kTargetLen, b);
            Mat prev(1, b);
            for (int j = 0; j < b; ++j) {
                const EpisodeInstance& ep = train[order[start + j]];
                for (int t = 0; t < kHistoryLen; ++t) enc_xs[t](0, j) = ep.history[t];
                for (int t = 0; t < kTargetLen; ++t) targets(t, j) = ep.target[t];
                prev(0, j) = ep.history[kHistoryLen - 1];
            }

            nn::StackCache enc_cache;
            p.encoder().forward(enc_xs, nullptr, enc_cache);
            nn::LstmState dec_init = enc_cache.final_state();
            nn::StackCache dec_cache;
            p.decoder().begin(dec_cache, &dec_init, b);

            std::vector<Mat> outs(kTargetLen);
            Mat x(3, b);
            for (int t = 0; t < kTargetLen; ++t) {
                x.row(0) = prev;
                for (int j = 0; j < b; ++j) {
                    auto [sa, ca] =
                        hour_angles(train[order[start + j]].hour_of_day_offset + t);
                    x(1, j) = sa;
                    x(2, j) = ca;
                }
                const Mat& top = p.decoder().forward_step(x, dec_cache);
                outs[t] = p.head().forward(top);
                if (t + 1 < kTargetLen) {
                    // Scheduled sampling: ground truth with probability p_tf,
                    // else the (detached) clamped model output.
                    if (rng.uniform() < p_tf) {
                        prev = targets.row(t);
                    } else {
                        prev = outs[t].array().min(kClampHi).max(kClampLo).matrix();
                    }
                }
            }

            const double denom = static_cast<double>(kTargetLen) * b;
            double batch_loss = 0.0;
            std::vector<Mat> d_top(kTargetLen);
            const auto& top_h = dec_cache.hidden.back();
            for (int t = 0; t < kTargetLen; ++t) {
                Mat diff = outs[t] - targets.row(t);
                batch_loss += diff.squaredNorm();
                d_top[t] = p.head().backward(top_h[t], Mat((2.0 / denom) * diff));
            }
            batch_loss /= denom;
            if (!std::isfinite(batch_loss)) {
                throw NumericError("train_predictor: non-finite loss at epoch " +
                                   std::to_string(epoch));
            }

            nn::LstmState d_init;
            p.decoder().backward(dec_cache, d_top, &d_init);
            std::vector<Mat> no_direct_loss(kHistoryLen);
            p.encoder().backward(enc_cache, no_direct_loss, nullptr, &d_init);

            nn::clip_grad_norm(reg, 5.0);
            opt.step(reg);
            nn::zero_grads(reg);

            epoch_loss += batch_loss;
            ++batches;
        }
        log.train_loss.push_back(epoch_loss / std::max(batches, 1));

        double val_rmse = std::numeric_limits<double>::quiet_NaN();
        if (!val.empty()) {
            // Model selection under the deployment pattern: a reading lands about
            // every 6 hours, so rank epochs by how well they forecast between
            // injected true values rather than by pure open-loop rollout.
            const Mat pred = batched_rollout(p, val, 6);
            double se = 0.0;
            for (int j = 0; j < pred.cols(); ++j)
                for (int t = 0; t < kTargetLen; ++t) {
                    const double d = pred(t, j) - val[j].target[t];
                    se += d * d;
                }
            val_rmse = std::sqrt(se / (static_cast<double>(kTargetLen) * pred.cols()));
            if (val_rmse < best_val) {
                best_val = val_rmse;
                log.best_epoch = epoch;
                best_weights.clear();
                for (const auto& pr : reg) best_weights.push_back(*pr.value);
            }
        }
        log.val_rmse.push_back(val_rmse);
    }

    if (!best_weights.empty()) {
        for (size_t i = 0; i < reg.size(); ++i) *reg[i].value = best_weights[i];
    } else {
        log.best_epoch = cfg.epochs - 1;
    }
    nn::check_finite(reg, "train_predictor");
    return log;
}

std::vector<double> predict_horizon(const Seq2SeqPredictor& p, const EpisodeInstance& ep,
                                    const std::vector<std::pair<int, double>>& observations,
                                    int t, int k) {
    if (t < 0 || t >= kTargetLen) throw UsageError("predict_horizon: step out of range");
    if (k < 1) throw UsageError("predict_horizon: horizon must be >= 1");
    for (size_t i = 1; i < observations.size(); ++i) {
        if (observations[i].first <= observations[i - 1].first) {
            throw UsageError("predict_horizon: observation times must be strictly increasing");
        }
    }
    auto session = p.make_session(ep);
    size_t oi = 0;
    for (int s = 0; s <= t; ++s) {
        const bool observed = oi < observations.size() && observations[oi].first == s;
        double v;
        if (observed) {
            v = observations[oi].second;
            ++oi;
        } else {
            v = session->lookahead(1)[0];
        }
        session->step(v, observed);
    }
    const int avail = kTargetLen - (t + 1);
    const int kk = std::min(k, avail);
    if (kk <= 0) return {};
    return session->lookahead(kk);
}

ArKalmanModel ar_fit(const std::vector<double>& history) {
    const int n = static_cast<int>(history.size());
    if (n < 5) throw DataError("ar_fit: need at least 5 history points");

    ArKalmanModel m;
    m.mean = std::accumulate(history.begin(), history.end(), 0.0) / n;
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = history[i] - m.mean;

    const int rows = n - 4;
    Mat a(rows, 4);
    Vec b(rows);
    for (int i = 0; i < rows; ++i) {
        const int t = i + 4;
        b(i) = z[t];
        for (int j = 0; j < 4; ++j) a(i, j) = z[t - 1 - j];
    }

    const double scale = a.cwiseAbs().maxCoeff();
    if (scale < 1e-12) {
        // Constant history carries no dynamics: persistence model.
        m.phi << 1.0, 0.0, 0.0, 0.0;
        m.persistence_fallback = true;
        m.q = 1e-10;
        m.r = 1e-10;
    } else {
        // Minimum-norm least squares; tolerant of rank-deficient designs
        // (e.g. perfectly linear histories).
        Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);
        if (svd.rank() == 0) {
            m.phi << 1.0, 0.0, 0.0, 0.0;
            m.persistence_fallback = true;
            m.q = 1e-10;
            m.r = 1e-10;
        } else {
            m.phi = svd.solve(b);
            const double resid = (b - a * m.phi).squaredNorm() / rows;
            m.q = std::max(resid, 1e-12);
            m.r = 0.05 * m.q;
        }
    }

    for (int j = 0; j < 4; ++j) m.z(j) = z[n - 1 - j];
    m.cov = m.q * Eigen::Matrix4d::Identity();
    return m;
}

double kalman_step(ArKalmanModel& m, std::optional<double> observation) {
    const Eigen::Matrix4d f = companion(m.phi);
    m.z = f * m.z;
    m.cov = f * m.cov * f.transpose();
    m.cov(0, 0) += m.q;

    if (observation.has_value()) {
        const double innovation = (*observation - m.mean) - m.z(0);
        const double s = m.cov(0, 0) + m.r;
        const Eigen::Vector4d gain = m.cov.col(0) / s;
        m.z += gain * innovation;
        // Joseph form: keeps the covariance symmetric PSD.
        Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity();
        ikh.col(0) -= gain;
        m.cov = ikh * m.cov * ikh.transpose() + m.r * (gain * gain.transpose());
    }
    m.cov = 0.5 * (m.cov + m.cov.transpose());
    if (!m.cov.allFinite() || !m.z.allFinite()) {
        throw NumericError("kalman_step: non-finite filter state");
    }
    return m.phi.dot(m.z) + m.mean;
}

std::unique_ptr<ForecastSession> make_ar_session(const EpisodeInstance& ep) {
    return std::make_unique<ArSession>(ep);
}

std::unique_ptr<ForecastSession> make_zero_session() { return std::make_unique<ZeroSession>(); }

}  // namespace sampling
