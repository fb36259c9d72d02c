// End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
// exits with the number of failures. Criteria 3-5 train the full desk-scale
// pipeline matrix over three seeds, so this binary runs for tens of minutes.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sampling/controller.hpp"
#include "sampling/dataset.hpp"
#include "sampling/errors.hpp"
#include "sampling/experiment.hpp"
#include "sampling/gradcheck.hpp"
#include "sampling/metrics.hpp"
#include "sampling/predictor.hpp"
#include "sampling/rng.hpp"
#include "sampling/simenv.hpp"
#include "sampling/synth.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace sampling;
using nn::Mat;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("ACCEPTANCE %d: %s — %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Mat randn(int r, int c, Rng& rng) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

// Deterministic scripted predictor used where forecast quality is irrelevant.
class ScriptSession : public ForecastSession {
public:
    explicit ScriptSession(const std::array<double, kTargetLen>& values) : values_(values) {}
    std::vector<double> lookahead(int k) const override {
        std::vector<double> out(static_cast<size_t>(k), 0.0);
        for (int i = 0; i < k; ++i)
            if (pos_ + i < kTargetLen) out[static_cast<size_t>(i)] = values_[pos_ + i];
        return out;
    }
    void step(double, bool) override { ++pos_; }
    int position() const override { return pos_; }

private:
    std::array<double, kTargetLen> values_;
    int pos_ = 0;
};

// ---------------------------------------------------------------- criterion 1

bool grad_encoder_decoder(std::string& why) {
    Rng rng(13);
    nn::LstmStack encoder(1, 3, 2, rng);
    nn::SequenceNet decoder(2, 3, 2, 1, rng);
    nn::ParamRegistry reg;
    encoder.register_params(reg, "enc");
    decoder.register_params(reg, "dec");

    const int Te = 4, Td = 3, B = 2;
    std::vector<Mat> enc_in, dec_in, ys;
    for (int t = 0; t < Te; ++t) enc_in.push_back(randn(1, B, rng));
    for (int t = 0; t < Td; ++t) {
        dec_in.push_back(randn(2, B, rng));
        ys.push_back(randn(1, B, rng));
    }
    auto loss_fn = [&]() {
        nn::StackCache ec;
        encoder.forward(enc_in, nullptr, ec);
        nn::LstmState handoff = ec.final_state();
        nn::StackCache dc;
        std::vector<Mat> outs = decoder.forward(dec_in, &handoff, dc);
        double loss = 0.0;
        for (int t = 0; t < Td; ++t)
            loss += 0.5 * (outs[static_cast<size_t>(t)] - ys[static_cast<size_t>(t)]).squaredNorm();
        return loss;
    };
    auto grad_fn = [&]() {
        nn::zero_grads(reg);
        nn::StackCache ec;
        encoder.forward(enc_in, nullptr, ec);
        nn::LstmState handoff = ec.final_state();
        nn::StackCache dc;
        std::vector<Mat> outs = decoder.forward(dec_in, &handoff, dc);
        std::vector<Mat> d_out(static_cast<size_t>(Td));
        for (int t = 0; t < Td; ++t)
            d_out[static_cast<size_t>(t)] = outs[static_cast<size_t>(t)] - ys[static_cast<size_t>(t)];
        nn::LstmState d_handoff;
        decoder.backward(dc, d_out, &d_handoff);
        std::vector<Mat> no_top(static_cast<size_t>(Te));
        encoder.backward(ec, no_top, nullptr, &d_handoff);
    };
    auto rep = nn::grad_check(reg, loss_fn, grad_fn);
    if (!rep.pass) why = "encoder-decoder grad rel err " + fmt(rep.max_rel_err) + " at " + rep.worst_param;
    return rep.pass;
}

bool grad_drqn(std::string& why) {
    Rng rng(31);
    DrqnNet eval(3, 2, 2, 2, 2, 2, 77);
    nn::ParamRegistry reg = eval.params();
    // Keep the narrow ReLU layers away from the kink, where finite
    // differences are legitimately one-sided.
    for (auto& p : reg) {
        if (p.name == "d1.bias" || p.name == "d2.bias" || p.name == "d3.bias") {
            p.value->setConstant(0.1);
        }
    }

    const int T = 3, B = 2;
    ReplayBuffer::SeqBatch batch;
    batch.steps = T;
    batch.batch = B;
    for (int st = 0; st < T; ++st) {
        batch.states.push_back(randn(3, B, rng));
        batch.next_states.push_back(Mat::Zero(3, B));
        batch.actions.push_back({1 + static_cast<int>(rng.uniform_int(2)),
                                 1 + static_cast<int>(rng.uniform_int(2))});
        batch.rewards.push_back({rng.normal(), rng.normal()});
        batch.done.push_back({0, 0});
        batch.mask.push_back({1, 1});
    }
    batch.mask[0][0] = 0;
    std::vector<std::vector<double>> y(static_cast<size_t>(T),
                                       std::vector<double>(static_cast<size_t>(B)));
    for (auto& row : y)
        for (auto& v : row) v = rng.normal();
    int n_live = 0;
    for (int st = 0; st < T; ++st)
        for (int col = 0; col < B; ++col)
            if (batch.mask[static_cast<size_t>(st)][static_cast<size_t>(col)]) ++n_live;

    auto loss_fn = [&]() {
        std::vector<Mat> q = eval.forward(batch.states, nullptr);
        double loss = 0.0;
        for (int st = 0; st < T; ++st)
            for (int col = 0; col < B; ++col) {
                if (!batch.mask[static_cast<size_t>(st)][static_cast<size_t>(col)]) continue;
                const double qa = q[static_cast<size_t>(st)](
                    batch.actions[static_cast<size_t>(st)][static_cast<size_t>(col)] - 1, col);
                const double diff = qa - y[static_cast<size_t>(st)][static_cast<size_t>(col)];
                loss += diff * diff;
            }
        return loss / n_live;
    };
    auto grad_fn = [&]() {
        nn::zero_grads(reg);
        DrqnNet::Cache cache;
        std::vector<Mat> q = eval.forward(batch.states, &cache);
        std::vector<Mat> d_q(static_cast<size_t>(T), Mat::Zero(2, B));
        for (int st = 0; st < T; ++st)
            for (int col = 0; col < B; ++col) {
                if (!batch.mask[static_cast<size_t>(st)][static_cast<size_t>(col)]) continue;
                const int a = batch.actions[static_cast<size_t>(st)][static_cast<size_t>(col)] - 1;
                d_q[static_cast<size_t>(st)](a, col) =
                    2.0 *
                    (q[static_cast<size_t>(st)](a, col) -
                     y[static_cast<size_t>(st)][static_cast<size_t>(col)]) /
                    n_live;
            }
        eval.backward(cache, d_q);
    };
    auto rep = nn::grad_check(reg, loss_fn, grad_fn);
    if (!rep.pass) why = "drqn grad rel err " + fmt(rep.max_rel_err) + " at " + rep.worst_param;
    return rep.pass;
}

bool grad_estimator(std::string& why) {
    // The refinement net is a per-step-head sequence model whose loss covers
    // only part of the unrolled steps; checked at toy size.
    Rng rng(17);
    nn::SequenceNet net(2, 4, 2, 1, rng);
    nn::ParamRegistry reg;
    net.register_params(reg, "est");
    const int T = 5, B = 2, kFrom = 2;
    std::vector<Mat> xs, ys;
    for (int t = 0; t < T; ++t) {
        xs.push_back(randn(2, B, rng));
        ys.push_back(randn(1, B, rng));
    }
    auto loss_fn = [&]() {
        nn::StackCache c;
        std::vector<Mat> outs = net.forward(xs, nullptr, c);
        double loss = 0.0;
        for (int t = kFrom; t < T; ++t)
            loss += 0.5 * (outs[static_cast<size_t>(t)] - ys[static_cast<size_t>(t)]).squaredNorm();
        return loss;
    };
    auto grad_fn = [&]() {
        nn::zero_grads(reg);
        nn::StackCache c;
        std::vector<Mat> outs = net.forward(xs, nullptr, c);
        std::vector<Mat> d_out(static_cast<size_t>(T));
        for (int t = kFrom; t < T; ++t)
            d_out[static_cast<size_t>(t)] = outs[static_cast<size_t>(t)] - ys[static_cast<size_t>(t)];
        net.backward(c, d_out, nullptr);
    };
    auto rep = nn::grad_check(reg, loss_fn, grad_fn);
    if (!rep.pass) why = "estimator grad rel err " + fmt(rep.max_rel_err) + " at " + rep.worst_param;
    return rep.pass;
}

bool dtw_vs_enumeration(std::string& why) {
    std::vector<std::vector<double>> seqs;
    for (int len = 1; len <= 5; ++len) {
        auto s = oracles::all_sequences({0.0, 1.0, 2.0}, len);
        seqs.insert(seqs.end(), s.begin(), s.end());
    }
    for (const auto& a : seqs) {
        for (const auto& b : seqs) {
            const double got = dtw_distance(a, b);
            const double want = oracles::dtw_exhaustive(a, b);
            if (std::abs(got - want) > 1e-12) {
                why = "dtw mismatch " + fmt(got) + " vs enumerated " + fmt(want);
                return false;
            }
        }
    }
    return true;
}

bool kalman_vs_recurrence(std::string& why) {
    // The filter run open loop must agree with iterating the fitted AR
    // recursion directly from the history tail.
    std::vector<double> hist(static_cast<size_t>(kHistoryLen));
    Rng rng(5);
    double z1 = 0.05, z2 = -0.02, z3 = 0.03, z4 = 0.01;
    const std::array<double, 4> phi = {0.9, -0.2, 0.15, 0.05};
    for (int i = 0; i < kHistoryLen; ++i) {
        const double z = phi[0] * z1 + phi[1] * z2 + phi[2] * z3 + phi[3] * z4 +
                         rng.normal(0.0, 0.01);
        z4 = z3;
        z3 = z2;
        z2 = z1;
        z1 = z;
        hist[static_cast<size_t>(i)] = 0.4 + z;
    }
    ArKalmanModel m = ar_fit(hist);
    // call k advances the state to F^k z0 and returns phi . F^k z0 + mean
    std::array<double, 4> buf = {hist[47] - m.mean, hist[46] - m.mean, hist[45] - m.mean,
                                 hist[44] - m.mean};
    for (int k = 1; k <= 50; ++k) {
        const double nz =
            m.phi(0) * buf[0] + m.phi(1) * buf[1] + m.phi(2) * buf[2] + m.phi(3) * buf[3];
        buf = {nz, buf[0], buf[1], buf[2]};
        const double want = m.phi(0) * buf[0] + m.phi(1) * buf[1] + m.phi(2) * buf[2] +
                            m.phi(3) * buf[3] + m.mean;
        const double filtered = kalman_step(m, std::nullopt);
        if (std::abs(filtered - want) > 1e-8 * std::max(1.0, std::abs(want))) {
            why = "kalman step " + std::to_string(k) + ": " + fmt(filtered) + " vs " + fmt(want);
            return false;
        }
    }
    return true;
}

bool normalization_roundtrip(std::string& why) {
    Normalizer norm{0.0037, 0.8122};
    Rng rng(29);
    for (int i = 0; i < 100000; ++i) {
        const double x = norm.min + (norm.max - norm.min) * (1.5 * rng.uniform() - 0.25);
        const double back = norm.invert(norm.apply(x));
        if (std::abs(back - x) > 1e-9) {
            why = "round-trip error " + fmt(std::abs(back - x)) + " at x=" + fmt(x);
            return false;
        }
    }
    return true;
}

bool budget_ledger(std::string& why) {
    DrqnNet net(kStateDim, 6, 6, 6, 6, kActionCount, 21);
    Rng data_rng(99);
    EpisodeConfig cfg;
    for (int rep = 0; rep < 1000; ++rep) {
        EpisodeInstance ep;
        for (double& v : ep.history) v = data_rng.uniform();
        for (double& v : ep.target) v = data_rng.uniform();
        ep.hour_of_day_offset = static_cast<int>(data_rng.uniform_int(24));
        std::array<double, kTargetLen> script;
        for (double& v : script) v = data_rng.uniform();
        ScriptSession session(script);

        PolicySpec pol;
        pol.kind = PolicySpec::Kind::Drqn;
        pol.net = &net;
        pol.epsilon = 1.0;
        Rng rng(derive_seed(777, "acceptance-ledger", rep));
        EpisodeLog log = run_episode(ep, session, pol, cfg, rng, rep);

        const int n_obs = static_cast<int>(log.observation_times.size());
        auto fail = [&](const std::string& msg) {
            why = "episode " + std::to_string(rep) + ": " + msg;
            return false;
        };
        if (n_obs < 1 || n_obs > cfg.budget) return fail("observation count " + std::to_string(n_obs));
        if (log.observation_times.front() != 0) return fail("first observation not at t=0");
        if (log.waste != cfg.budget - n_obs) return fail("waste ledger off");
        if (log.profile.observation_count() != n_obs) return fail("profile flag count off");
        for (int t = 0; t < kTargetLen; ++t) {
            const double v = log.profile.values[static_cast<size_t>(t)];
            if (!std::isfinite(v)) return fail("profile hole at t=" + std::to_string(t));
            if (log.profile.observed[static_cast<size_t>(t)] &&
                v != ep.target[static_cast<size_t>(t)])
                return fail("observed value mismatch");
        }
        double sum = 0.0;
        for (double r : log.rewards) sum += r;
        if (std::abs(sum - log.total_return) > 1e-9 * std::max(1.0, std::abs(sum)))
            return fail("return does not equal the reward sum");
        if (log.transitions.empty() || !log.transitions.back().done)
            return fail("no terminal transition");
    }
    return true;
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string why;
    bool ok = grad_encoder_decoder(why) && grad_drqn(why) && grad_estimator(why) &&
              dtw_vs_enumeration(why) && kalman_vs_recurrence(why) &&
              normalization_roundtrip(why) && budget_ledger(why);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && secs >= 300.0) {
        ok = false;
        why = "suite exceeded the 5 minute budget";
    }
    report(1, ok,
           ok ? "gradients, dtw enumeration, kalman recurrence, normalization, budget "
                "ledger all pass in " + fmt(secs) + " s"
              : why);
}

// ---------------------------------------------------------------- criterion 2

void criterion_2() {
    Rng data_rng(202);
    EpisodeConfig cfg;
    PolicySpec pol;  // uniform, interval 6
    for (int rep = 0; rep < 500; ++rep) {
        EpisodeInstance ep;
        for (double& v : ep.history) v = data_rng.uniform();
        for (double& v : ep.target) v = data_rng.uniform();
        ep.hour_of_day_offset = static_cast<int>(data_rng.uniform_int(24));
        std::array<double, kTargetLen> script;
        for (double& v : script) v = data_rng.uniform();
        ScriptSession session(script);
        Rng rng(derive_seed(99, "acceptance-uniform", rep));
        EpisodeLog log = run_episode(ep, session, pol, cfg, rng, rep);
        if (log.observation_times.size() != 28 || log.waste != 0) {
            report(2, false,
                   "episode " + std::to_string(rep) + " observed " +
                       std::to_string(log.observation_times.size()) + " times, waste " +
                       std::to_string(log.waste));
            return;
        }
        for (int k = 0; k < 28; ++k) {
            if (log.observation_times[static_cast<size_t>(k)] != 6 * k) {
                report(2, false, "observation grid broken at slot " + std::to_string(k));
                return;
            }
        }
    }
    report(2, true, "uniform policy observes {0,6,...,162} with zero waste on 500 episodes");
}

// ------------------------------------------------------- desk pipeline matrix

struct MatrixResults {
    // label -> per-seed results, seeds in fixed order
    std::map<std::string, std::vector<RunResult>> runs;
    std::vector<uint64_t> seeds;
    fs::path run_root;
    std::string data_path;
};

ExperimentConfig desk_config(const std::string& data, const fs::path& out, uint64_t seed,
                             const std::string& predictor, const std::string& policy,
                             const std::string& estimator) {
    ExperimentConfig cfg;
    apply_preset(cfg, "desk");
    cfg.preset = "desk";
    cfg.data_path = data;
    cfg.out_dir = out.string();
    cfg.seed = seed;
    cfg.predictor = predictor;
    cfg.policy = policy;
    cfg.estimator = estimator;
    return cfg;
}

std::string label_of(const std::array<std::string, 3>& combo) {
    return combo[0] + "+" + combo[1] + "+" + combo[2];
}

MatrixResults run_matrix(const fs::path& scratch) {
    MatrixResults m;
    m.seeds = {1, 2, 3};
    m.run_root = scratch / "runs";
    fs::create_directories(m.run_root);

    m.data_path = (scratch / "data.csv").string();
    SynthConfig sc;  // 80 locations split 56/16/8 by the default ratios
    sc.seed = 7;
    write_synthetic_csv(m.data_path, sc);

    const std::vector<std::array<std::string, 3>> combos = {
        {"lstm", "uniform", "none"}, {"lstm", "drqn", "none"},
        {"lstm", "drqn", "lstm"},    {"lstm", "uniform", "lstm"},
        {"none", "uniform", "gpr"},
    };
    for (uint64_t seed : m.seeds) {
        ComponentCache cache;
        for (const auto& combo : combos) {
            const std::string label = label_of(combo);
            const fs::path dir = m.run_root / ("s" + std::to_string(seed) + "_" + label);
            ExperimentConfig cfg =
                desk_config(m.data_path, dir, seed, combo[0], combo[1], combo[2]);
            const auto t0 = std::chrono::steady_clock::now();
            RunResult r = run_experiment(cfg, &cache);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::fprintf(stderr, "[matrix] seed %llu %-22s rmse %.6f coverage %.4f (%.0f s)\n",
                         static_cast<unsigned long long>(seed), label.c_str(), r.report.rmse,
                         r.report.coverage, secs);
            m.runs[label].push_back(r);
        }
    }
    return m;
}

double mean_rmse(const MatrixResults& m, const std::string& label) {
    const auto& v = m.runs.at(label);
    double s = 0.0;
    for (const RunResult& r : v) s += r.report.rmse;
    return s / static_cast<double>(v.size());
}

double mean_coverage(const MatrixResults& m, const std::string& label) {
    const auto& v = m.runs.at(label);
    double s = 0.0;
    for (const RunResult& r : v) s += r.report.coverage;
    return s / static_cast<double>(v.size());
}

void criterion_3(const MatrixResults& m) {
    const double full = mean_rmse(m, "lstm+drqn+lstm");
    const double base = mean_rmse(m, "none+uniform+gpr");
    const double rel = (base - full) / base * 100.0;
    report(3, full <= 0.9 * base,
           "3-seed rmse lstm+drqn+lstm " + fmt(full) + " vs uniform+gpr " + fmt(base) +
               " (" + fmt(rel) + "% better, >=10% required)");
}

void criterion_4(const MatrixResults& m) {
    const double r_drqn = mean_rmse(m, "lstm+drqn+none");
    const double r_unif = mean_rmse(m, "lstm+uniform+none");
    const double c_drqn = mean_coverage(m, "lstm+drqn+none");
    const double c_unif = mean_coverage(m, "lstm+uniform+none");
    report(4, r_drqn < r_unif && c_drqn > c_unif,
           "drqn vs uniform under the same predictor: rmse " + fmt(r_drqn) + " vs " +
               fmt(r_unif) + ", coverage " + fmt(c_drqn) + " vs " + fmt(c_unif));
}

void criterion_5(const MatrixResults& m) {
    const double drqn_with = mean_rmse(m, "lstm+drqn+lstm");
    const double drqn_without = mean_rmse(m, "lstm+drqn+none");
    const double unif_with = mean_rmse(m, "lstm+uniform+lstm");
    const double unif_without = mean_rmse(m, "lstm+uniform+none");
    report(5, drqn_with < drqn_without && unif_with < unif_without,
           "estimator shifts rmse drqn " + fmt(drqn_without) + "->" + fmt(drqn_with) +
               ", uniform " + fmt(unif_without) + "->" + fmt(unif_with));
}

// ---------------------------------------------------------------- criterion 6

void criterion_6(const MatrixResults& m) {
    // Exponential-growth history: the least-squares AR(4) reproduces the
    // geometric law exactly, so its free-run forecast explodes, while the
    // trained network is clamped by construction.
    EpisodeInstance ep;
    for (int i = 0; i < kHistoryLen; ++i)
        ep.history[static_cast<size_t>(i)] = 0.01 * std::pow(1.12, i);
    for (int t = 0; t < kTargetLen; ++t)
        ep.target[static_cast<size_t>(t)] = 0.01 * std::pow(1.12, kHistoryLen + t);
    ep.hour_of_day_offset = 0;

    auto ar = make_ar_session(ep);
    const std::vector<double> arf = ar->lookahead(kTargetLen);
    double ar_max = 0.0;
    for (double v : arf) ar_max = std::max(ar_max, std::abs(v));

    const fs::path ckpt =
        m.run_root / "s1_lstm+uniform+none" / "predictor.ckpt";
    ExperimentConfig desk = desk_config(m.data_path, "unused", 1, "lstm", "uniform", "none");
    Seq2SeqPredictor lstm(desk.predictor_hidden, desk.predictor_layers, 1);
    lstm.load(ckpt.string());
    auto session = lstm.make_session(ep);
    const std::vector<double> lf = session->lookahead(kTargetLen);
    bool bounded = true;
    for (double v : lf)
        bounded = bounded && std::isfinite(v) && v >= kClampLo && v <= kClampHi;

    report(6, ar_max > kClampHi && bounded,
           "ar(4) free run peaks at " + fmt(ar_max) + " (clamp bound " + fmt(kClampHi) +
               "), trained network output stays finite in [" + fmt(kClampLo) + ", " +
               fmt(kClampHi) + "]");
}

// ---------------------------------------------------------------- criterion 7

void criterion_7(const MatrixResults& m) {
    double day1 = 0.0, day7 = 0.0;
    for (uint64_t seed : m.seeds) {
        const fs::path hist =
            m.run_root / ("s" + std::to_string(seed) + "_lstm+drqn+none") /
            "action_histogram.csv";
        if (!fs::exists(hist)) {
            report(7, false, "missing artifact " + hist.string());
            return;
        }
        std::istringstream f(slurp(hist));
        std::string line;
        while (std::getline(f, line)) {
            if (line.rfind("day,1,", 0) == 0) day1 += std::stod(line.substr(6));
            if (line.rfind("day,7,", 0) == 0) day7 += std::stod(line.substr(6));
        }
    }
    day1 /= static_cast<double>(m.seeds.size());
    day7 /= static_cast<double>(m.seeds.size());
    report(7, day1 > day7,
           "observation histogram written for all seeds; day-1 average " + fmt(day1) +
               " vs day-7 " + fmt(day7));
}

// ---------------------------------------------------------------- criterion 8

void criterion_8(const MatrixResults& m) {
    // Retrain the all-components configuration from scratch (no shared cache)
    // and require byte-identical metrics.
    const std::string label = "lstm+drqn+lstm";
    const fs::path orig = m.run_root / ("s1_" + label);
    const fs::path redo = m.run_root / ("redo_s1_" + label);
    ExperimentConfig cfg = desk_config(m.data_path, redo, 1, "lstm", "drqn", "lstm");
    run_experiment(cfg);  // fresh training, no cache
    const std::string a = slurp(orig / "metrics.csv");
    const std::string b = slurp(redo / "metrics.csv");
    report(8, !a.empty() && a == b,
           a == b ? "independent retrain reproduced metrics.csv byte-for-byte"
                  : "metrics.csv differs between identical runs");
}

}  // namespace

int main() {
    const fs::path scratch = fs::temp_directory_path() / "sampling_acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    try {
        criterion_1();
        criterion_2();
        const MatrixResults m = run_matrix(scratch);
        criterion_3(m);
        criterion_4(m);
        criterion_5(m);
        criterion_6(m);
        criterion_7(m);
        criterion_8(m);
    } catch (const std::exception& e) {
        std::printf("ACCEPTANCE ABORTED — %s\n", e.what());
        return 99;
    }
    return g_failures;
}
