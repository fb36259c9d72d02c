#include "sampling/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "sampling/errors.hpp"
#include "sampling/rng.hpp"

namespace sampling {

using nn::Vec;

namespace {

double checked_forecast(ForecastSession& session, int step) {
    const double f = session.lookahead(1)[0];
    if (!std::isfinite(f)) {
        throw NumericError("predictor produced a non-finite value at step " +
                           std::to_string(step));
    }
    return f;
}

int choose_action(const PolicySpec& policy, const std::vector<Vec>& states, int t,
                  const EpisodeConfig& cfg, Rng& rng) {
    if (policy.kind == PolicySpec::Kind::Uniform) {
        return uniform_policy(t, policy.uniform_interval, cfg.horizon);
    }
    if (!policy.net) throw UsageError("run_episode: drqn policy without a network");
    const size_t from = states.size() > static_cast<size_t>(policy.history_window)
                            ? states.size() - policy.history_window
                            : 0;
    const std::vector<Vec> recent(states.begin() + from, states.end());
    return select_action(*policy.net, recent, policy.epsilon, rng);
}

}  // namespace

EpisodeLog run_episode(const EpisodeInstance& instance, ForecastSession& session,
                       const PolicySpec& policy, const EpisodeConfig& cfg, Rng& rng,
                       uint64_t episode_id) {
    if (session.position() != 0) throw UsageError("run_episode: session already advanced");
    if (cfg.horizon != kTargetLen) throw UsageError("run_episode: horizon must match the window layout");
    if (cfg.budget < 1 || cfg.budget > cfg.horizon) throw UsageError("run_episode: bad budget");
    if (cfg.window < 1 || cfg.window > kActionCount) throw UsageError("run_episode: bad window");

    EpisodeLog log;
    log.profile.history = instance.history;

    std::vector<Vec> states;
    struct Pending {
        Vec state;
        int action;
        int t_from;
    };
    std::optional<Pending> pending;
    int budget = cfg.budget;

    // Forced observation at step 0; the model's prior view is logged first.
    log.forecast[0] = checked_forecast(session, 0);
    log.profile.values[0] = instance.target[0];
    log.profile.observed[0] = 1;
    log.observation_times.push_back(0);
    session.step(instance.target[0], true);
    --budget;

    auto close_pending = [&](const Vec* next_state, bool done, int seg_to, int waste,
                             double extra_cost = 0.0) {
        const Pending& p = *pending;
        std::vector<double> f, g;
        if (seg_to >= p.t_from + 1) {
            f.assign(log.forecast.begin() + p.t_from + 1, log.forecast.begin() + seg_to + 1);
            g.assign(instance.target.begin() + p.t_from + 1,
                     instance.target.begin() + seg_to + 1);
        }
        const double r = compute_reward(f, g, cfg.w1, cfg.w2, waste) + extra_cost;
        Transition tr;
        tr.state = p.state;
        tr.action = p.action;
        tr.reward = r;
        tr.next_state = next_state ? *next_state : Vec(Vec::Zero(kStateDim));
        tr.done = done;
        tr.episode_id = episode_id;
        log.transitions.push_back(std::move(tr));
        log.rewards.push_back(r);
        log.total_return += r;
        pending.reset();
    };

    int t = 0;
    while (true) {
        // State at the current landing; its observation is already charged.
        std::vector<double> fc;
        const int avail = std::min(cfg.window, cfg.horizon - 1 - t);
        if (avail > 0) {
            fc = session.lookahead(avail);
            for (double v : fc) {
                if (!std::isfinite(v)) {
                    throw NumericError("predictor produced a non-finite forecast at step " +
                                       std::to_string(t));
                }
            }
        }
        Vec s = build_state(instance.target[t], fc, t,
                            (instance.hour_of_day_offset + t) % 24, budget, instance.history);
        states.push_back(s);

        if (budget == 0) {
            // Budget exhausted: the predictor fills the tail. No decisions are
            // made out there, but leaving those steps unpriced would make early
            // exhaustion free, so the remainder is charged at the same
            // granularity as live decisions — one accuracy+similarity term per
            // window-sized chunk — and settled on the final transition.
            for (int u = t + 1; u < cfg.horizon; ++u) {
                const double f = checked_forecast(session, u);
                log.forecast[u] = f;
                log.profile.values[u] = f;
                session.step(f, false);
            }
            double tail_cost = 0.0;
            for (int from = t + 1; from < cfg.horizon; from += cfg.window) {
                const int to = std::min(from + cfg.window, cfg.horizon);
                const std::vector<double> f(log.forecast.begin() + from,
                                            log.forecast.begin() + to);
                const std::vector<double> g(instance.target.begin() + from,
                                            instance.target.begin() + to);
                tail_cost += compute_reward(f, g, cfg.w1, cfg.w2, 0);
            }
            if (pending) {
                close_pending(&s, true, t, 0, tail_cost);
            } else {
                // Budget of 1: no decision exists to carry the charge, so it
                // shows up only in the reported return.
                log.total_return += tail_cost;
            }
            break;
        }

        if (pending) close_pending(&s, false, t, 0);

        const int a = choose_action(policy, states, t, cfg, rng);
        log.actions.push_back(a);
        pending = Pending{s, a, t};

        const int land = std::min(t + a, cfg.horizon);
        for (int u = t + 1; u <= std::min(land, cfg.horizon - 1); ++u) {
            const double f = checked_forecast(session, u);
            log.forecast[u] = f;
            if (u == land) {
                log.profile.values[u] = instance.target[u];
                log.profile.observed[u] = 1;
                log.observation_times.push_back(u);
                session.step(instance.target[u], true);
                --budget;
            } else {
                log.profile.values[u] = f;
                session.step(f, false);
            }
        }
        if (land >= cfg.horizon) {
            // Horizon reached without landing an observation: leftover budget
            // is wasted and charged on this terminal transition.
            log.waste = budget;
            close_pending(nullptr, true, cfg.horizon - 1, budget);
            break;
        }
        t = land;
    }
    return log;
}

double epsilon_at(int episode, const TrainingConfig& cfg) {
    const int decay = static_cast<int>(std::llround(cfg.eps_decay_frac * cfg.episodes));
    if (decay <= 0 || episode >= decay) return cfg.eps_final;
    return cfg.eps_start -
           (cfg.eps_start - cfg.eps_final) * (static_cast<double>(episode) / decay);
}

AgentTrainLog run_training(DrqnNet& eval, DrqnNet& target,
                           const std::vector<EpisodeInstance>& train,
                           const SessionFactory& sessions, const EpisodeConfig& ecfg,
                           const TrainingConfig& tcfg) {
    AgentTrainLog log;
    if (tcfg.episodes <= 0 || train.empty()) return log;

    ReplayBuffer buffer(tcfg.buffer_capacity);
    nn::Adam opt(tcfg.learning_rate);
    Rng rng(derive_seed(tcfg.seed, "drqn-train"));
    target.copy_from(eval);

    for (int e = 0; e < tcfg.episodes; ++e) {
        const double eps = epsilon_at(e, tcfg);
        const EpisodeInstance& inst = train[rng.uniform_int(train.size())];
        auto session = sessions(inst);

        PolicySpec pol;
        pol.kind = PolicySpec::Kind::Drqn;
        pol.net = &eval;
        pol.epsilon = eps;
        pol.history_window = tcfg.seq_len;
        EpisodeLog el = run_episode(inst, *session, pol, ecfg, rng,
                                    static_cast<uint64_t>(e));

        double loss_sum = 0.0;
        int loss_n = 0;
        for (Transition& tr : el.transitions) {
            buffer.push(std::move(tr));
            if (buffer.size() >= static_cast<size_t>(tcfg.batch)) {
                const auto batch = buffer.sample(tcfg.batch, tcfg.seq_len, rng);
                const auto y = td_target(batch, target, tcfg.gamma);
                loss_sum += drqn_train_step(eval, batch, y, opt);
                ++loss_n;
                ++log.train_steps;
                if (log.train_steps % tcfg.sync_every == 0) target.copy_from(eval);
            }
        }
        log.curve.push_back({e, el.total_return, loss_n ? loss_sum / loss_n : 0.0, eps,
                             static_cast<int>(el.observation_times.size())});
    }
    return log;
}

EvalOutput evaluate_configuration(const std::vector<EpisodeInstance>& test,
                                  const SessionFactory& sessions, const PolicySpec& policy,
                                  const EstimatorNet* estimator, const GprConfig* gpr,
                                  const EpisodeConfig& cfg, const Normalizer& norm,
                                  uint64_t seed) {
    if (test.empty()) throw UsageError("evaluate_configuration: no test episodes");

    EvalOutput out;
    std::vector<double> pred_all, gt_all;
    pred_all.reserve(test.size() * kTargetLen);
    gt_all.reserve(test.size() * kTargetLen);
    double coverage_sum = 0.0;
    double return_sum = 0.0;

    for (size_t i = 0; i < test.size(); ++i) {
        const EpisodeInstance& inst = test[i];
        Rng rng(derive_seed(seed, "eval-episode", i));
        auto session = sessions(inst);
        EpisodeLog el = run_episode(inst, *session, policy, cfg, rng,
                                    static_cast<uint64_t>(i));

        std::array<double, kTargetLen> refined = el.profile.values;
        if (estimator) {
            refined = estimator->estimate(el.profile);
        } else if (gpr) {
            std::vector<std::pair<int, double>> obs;
            obs.reserve(el.observation_times.size());
            for (int t : el.observation_times) obs.emplace_back(t, el.profile.values[t]);
            const GprModel gm = gpr_fit(obs, *gpr);
            std::vector<int> query(kTargetLen);
            for (int t = 0; t < kTargetLen; ++t) query[t] = t;
            const std::vector<double> mean = gpr_predict(gm, query);
            std::copy(mean.begin(), mean.end(), refined.begin());
        }

        for (int t = 0; t < kTargetLen; ++t) {
            pred_all.push_back(norm.invert(refined[t]));
            gt_all.push_back(norm.invert(inst.target[t]));
        }
        double cov = 0.0;
        for (int t : el.observation_times) cov += norm.invert(inst.target[t]);
        coverage_sum += cov;
        return_sum += el.total_return;

        out.estimates.push_back(refined);
        out.logs.push_back(std::move(el));
    }

    out.report.rmse = rmse(pred_all, gt_all);
    out.report.mae = mae(pred_all, gt_all);
    out.report.mape_pct = mape_excluding_zeros(pred_all, gt_all);
    out.report.coverage = coverage_sum / static_cast<double>(test.size());
    out.mean_return = return_sum / static_cast<double>(test.size());
    return out;
}

std::vector<EstimatorSample> collect_profiles(const std::vector<EpisodeInstance>& episodes,
                                              const SessionFactory& sessions,
                                              const PolicySpec& policy,
                                              const EpisodeConfig& cfg, uint64_t seed) {
    std::vector<EstimatorSample> samples;
    samples.reserve(episodes.size());
    for (size_t i = 0; i < episodes.size(); ++i) {
        Rng rng(derive_seed(seed, "profile-episode", i));
        auto session = sessions(episodes[i]);
        EpisodeLog el = run_episode(episodes[i], *session, policy, cfg, rng,
                                    static_cast<uint64_t>(i));
        samples.push_back({std::move(el.profile), episodes[i].target});
    }
    return samples;
}

}  // namespace sampling
