#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sampling/dataset.hpp"
#include "sampling/lstm.hpp"

namespace sampling {

// Forecast feedback clamp, normalized space.
inline constexpr double kClampLo = -0.5;
inline constexpr double kClampHi = 1.5;

inline double clamp_forecast(double v) {
    return v < kClampLo ? kClampLo : (v > kClampHi ? kClampHi : v);
}

// sin/cos encoding of an hour of day, in that order.
inline std::pair<double, double> hour_angles(int hour_of_day) {
    const double a = 2.0 * 3.14159265358979323846 * (hour_of_day % 24) / 24.0;
    return {std::sin(a), std::cos(a)};
}

// Incremental forecaster walked along an episode's 168-step target window.
// position() is the next target step to be produced/consumed.
class ForecastSession {
public:
    virtual ~ForecastSession() = default;

    // Forecasts for steps position()..position()+k-1. Pure: two consecutive
    // calls return identical values.
    virtual std::vector<double> lookahead(int k) const = 0;

    // Advance past the current step. `value` is what step position() turned
    // out to be: the observation when observed, else the forecast the caller
    // chose to commit (ignored by models that only condition on observations).
    virtual void step(double value, bool observed) = 0;

    virtual int position() const = 0;
};

// Encoder-decoder forecaster. The encoder consumes the 48-point history; the
// decoder emits one value per target step from input [previous value, sin
// hour, cos hour], feeding its own clamped output back when rolling free.
class Seq2SeqPredictor {
public:
    Seq2SeqPredictor() = default;
    Seq2SeqPredictor(int hidden, int layers, uint64_t seed);

    int hidden() const { return hidden_; }
    int layers() const { return layers_; }
    bool trained() const { return trained_; }
    void mark_trained() { trained_ = true; }

    nn::LstmStack& encoder() { return encoder_; }
    nn::LstmStack& decoder() { return decoder_; }
    nn::DenseParams& head() { return head_; }
    const nn::LstmStack& encoder() const { return encoder_; }
    const nn::LstmStack& decoder() const { return decoder_; }
    const nn::DenseParams& head() const { return head_; }

    nn::ParamRegistry params();

    void save(const std::string& path);
    void load(const std::string& path);

    // Session positioned at target step 0. Throws UsageError when untrained.
    std::unique_ptr<ForecastSession> make_session(const EpisodeInstance& ep) const;

    // Free-running forecast of the whole target window (no observations).
    std::array<double, kTargetLen> free_run(const EpisodeInstance& ep) const;

private:
    int hidden_ = 0;
    int layers_ = 0;
    nn::LstmStack encoder_;
    nn::LstmStack decoder_;
    nn::DenseParams head_;
    bool trained_ = false;
};

struct PredictorTrainConfig {
    int epochs = 30;
    int batch = 32;
    double learning_rate = 1e-4;
    uint64_t seed = 1;
};

using FitLog = nn::FitLog;  // train_loss is scheduled-sampling MSE; val_rmse free-running

// MSE training with teacher forcing decaying linearly 1 -> 0 across epochs.
// Keeps the weights of the best free-running validation epoch.
FitLog train_predictor(Seq2SeqPredictor& p, const std::vector<EpisodeInstance>& train,
                       const std::vector<EpisodeInstance>& val,
                       const PredictorTrainConfig& cfg);

// Stateless replay: rolls the decoder over steps 0..t feeding observations
// where present (its own clamped output elsewhere), then returns forecasts
// for steps t+1..min(t+k, 167).
std::vector<double> predict_horizon(const Seq2SeqPredictor& p, const EpisodeInstance& ep,
                                    const std::vector<std::pair<int, double>>& observations,
                                    int t, int k);

// AR(4) baseline with a Kalman filter over the companion-form state. Fit on
// the mean-removed history; state holds the last 4 mean-removed values.
struct ArKalmanModel {
    Eigen::Vector4d phi = Eigen::Vector4d::Zero();
    double mean = 0.0;
    double q = 0.0;  // process noise variance
    double r = 0.0;  // observation noise variance
    bool persistence_fallback = false;
    Eigen::Vector4d z = Eigen::Vector4d::Zero();  // z(0) = latest
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
};

// Least-squares fit; constant (zero-information) history falls back to the
// persistence model phi=[1,0,0,0]. Throws DataError when history < 5 points.
ArKalmanModel ar_fit(const std::vector<double>& history);

// Time update always; measurement update only when an observation is given.
// Returns the one-step-ahead prediction from the updated state.
double kalman_step(ArKalmanModel& m, std::optional<double> observation);

// Session wrappers used by the episode engine. AR forecasts are the raw
// linear recursion (deliberately unclamped); the zero session stands in when
// no predictor is configured and forecasts 0 everywhere.
std::unique_ptr<ForecastSession> make_ar_session(const EpisodeInstance& ep);
std::unique_ptr<ForecastSession> make_zero_session();

}  // namespace sampling
