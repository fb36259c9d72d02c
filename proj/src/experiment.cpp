#include "sampling/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sampling/dataset.hpp"
#include "sampling/errors.hpp"
#include "sampling/estimator.hpp"
#include "sampling/predictor.hpp"
#include "sampling/rng.hpp"

namespace fs = std::filesystem;

namespace sampling {
namespace {

std::string fmt10(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.10g", v);
    return b;
}

std::string fmt17(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        int out = std::stoi(v, &pos);
        if (pos == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw UsageError("config key '" + key + "' expects an integer, got '" + v + "'");
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    // stoull silently wraps negative inputs, so screen the sign ourselves
    if (v.find('-') == std::string::npos) {
        try {
            size_t pos = 0;
            unsigned long long out = std::stoull(v, &pos);
            if (pos == v.size()) return out;
        } catch (const std::exception&) {
        }
    }
    throw UsageError("config key '" + key + "' expects an unsigned integer, got '" + v + "'");
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double out = std::stod(v, &pos);
        if (pos == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw UsageError("config key '" + key + "' expects a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key '" + key + "' expects true/false, got '" + v + "'");
}

struct Field {
    const char* name;
    std::string (*get)(const ExperimentConfig&);
    void (*set)(ExperimentConfig&, const std::string&);
};

#define FIELD_STR(f) \
    {#f, [](const ExperimentConfig& c) { return c.f; }, \
     [](ExperimentConfig& c, const std::string& v) { c.f = v; }}
#define FIELD_INT(f) \
    {#f, [](const ExperimentConfig& c) { return std::to_string(c.f); }, \
     [](ExperimentConfig& c, const std::string& v) { c.f = to_int(#f, v); }}
#define FIELD_U64(f) \
    {#f, [](const ExperimentConfig& c) { return std::to_string(c.f); }, \
     [](ExperimentConfig& c, const std::string& v) { c.f = to_u64(#f, v); }}
#define FIELD_DBL(f) \
    {#f, [](const ExperimentConfig& c) { return fmt10(c.f); }, \
     [](ExperimentConfig& c, const std::string& v) { c.f = to_double(#f, v); }}
#define FIELD_BOOL(f) \
    {#f, [](const ExperimentConfig& c) { return std::string(c.f ? "true" : "false"); }, \
     [](ExperimentConfig& c, const std::string& v) { c.f = to_bool(#f, v); }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        FIELD_STR(data_path),
        FIELD_DBL(train_ratio),
        FIELD_DBL(val_ratio),
        FIELD_DBL(test_ratio),
        FIELD_INT(max_windows_per_location),
        FIELD_INT(max_locations_train),
        FIELD_INT(max_locations_val),
        FIELD_INT(max_locations_test),
        FIELD_U64(seed),
        FIELD_STR(out_dir),
        FIELD_STR(preset),
        FIELD_STR(predictor),
        FIELD_STR(policy),
        FIELD_STR(estimator),
        FIELD_INT(predictor_hidden),
        FIELD_INT(predictor_layers),
        FIELD_INT(predictor_epochs),
        FIELD_INT(predictor_batch),
        FIELD_DBL(predictor_lr),
        FIELD_INT(horizon),
        FIELD_INT(budget),
        FIELD_INT(window),
        FIELD_DBL(w1),
        FIELD_DBL(w2),
        FIELD_INT(uniform_interval),
        FIELD_INT(drqn_episodes),
        FIELD_INT(drqn_batch),
        FIELD_INT(seq_len),
        FIELD_INT(buffer_capacity),
        FIELD_DBL(gamma),
        FIELD_DBL(drqn_lr),
        FIELD_INT(sync_every),
        FIELD_DBL(eps_start),
        FIELD_DBL(eps_final),
        FIELD_DBL(eps_decay_frac),
        FIELD_INT(estimator_hidden),
        FIELD_INT(estimator_layers),
        FIELD_INT(estimator_epochs),
        FIELD_INT(estimator_batch),
        FIELD_DBL(estimator_lr),
        FIELD_BOOL(estimator_use_mask),
        FIELD_DBL(gpr_length_scale),
        FIELD_DBL(gpr_noise),
    };
    return table;
}

#undef FIELD_STR
#undef FIELD_INT
#undef FIELD_U64
#undef FIELD_DBL
#undef FIELD_BOOL

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot write " + p.string());
    f << body;
    if (!f) throw DataError("short write to " + p.string());
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot read " + p.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

struct PreparedData {
    std::vector<EpisodeInstance> train, val, test;
    Normalizer norm;
};

void cap_locations(RawDataset& ds, int cap) {
    if (cap > 0 && static_cast<int>(ds.locations()) > cap) {
        ds.location_ids.resize(static_cast<size_t>(cap));
        ds.series.resize(static_cast<size_t>(cap));
    }
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    RawDataset raw = load_csv(cfg.data_path);
    SplitSpec spec;
    spec.train_ratio = cfg.train_ratio;
    spec.val_ratio = cfg.val_ratio;
    spec.test_ratio = cfg.test_ratio;
    spec.seed = cfg.seed;
    auto [tr, va, te] = split_locations(raw, spec);
    cap_locations(tr, cfg.max_locations_train);
    cap_locations(va, cfg.max_locations_val);
    cap_locations(te, cfg.max_locations_test);

    PreparedData d;
    d.norm = fit_normalizer(tr);
    d.train = make_episodes(tr, cfg.max_windows_per_location);
    d.val = make_episodes(va, cfg.max_windows_per_location);
    d.test = make_episodes(te, cfg.max_windows_per_location);
    if (d.train.empty() || d.val.empty() || d.test.empty())
        throw DataError("dataset too small: train/val/test episode counts " +
                        std::to_string(d.train.size()) + "/" + std::to_string(d.val.size()) +
                        "/" + std::to_string(d.test.size()));
    for (auto* set : {&d.train, &d.val, &d.test}) {
        for (auto& ep : *set) {
            for (double& x : ep.history) x = d.norm.apply(x);
            for (double& x : ep.target) x = d.norm.apply(x);
        }
    }
    return d;
}

std::string data_key(const ExperimentConfig& c) {
    std::ostringstream o;
    o << std::setprecision(17) << c.data_path << '|' << c.train_ratio << '|' << c.val_ratio
      << '|' << c.test_ratio << '|' << c.max_windows_per_location << '|' << c.max_locations_train
      << '|' << c.max_locations_val << '|' << c.max_locations_test << '|' << c.seed;
    return o.str();
}

std::string env_key(const ExperimentConfig& c) {
    std::ostringstream o;
    o << std::setprecision(17) << c.horizon << '|' << c.budget << '|' << c.window << '|' << c.w1
      << '|' << c.w2;
    return o.str();
}

std::string predictor_key(const ExperimentConfig& c) {
    if (c.predictor != "lstm") return data_key(c) + "|" + c.predictor;
    std::ostringstream o;
    o << std::setprecision(17) << data_key(c) << "|lstm|" << c.predictor_hidden << '|'
      << c.predictor_layers << '|' << c.predictor_epochs << '|' << c.predictor_batch << '|'
      << c.predictor_lr;
    return o.str();
}

std::string agent_key(const ExperimentConfig& c) {
    std::ostringstream o;
    o << std::setprecision(17) << predictor_key(c) << '|' << env_key(c) << "|drqn|"
      << c.drqn_episodes << '|' << c.drqn_batch << '|' << c.seq_len << '|' << c.buffer_capacity
      << '|' << c.gamma << '|' << c.drqn_lr << '|' << c.sync_every << '|' << c.eps_start << '|'
      << c.eps_final << '|' << c.eps_decay_frac;
    return o.str();
}

std::string estimator_key(const ExperimentConfig& c) {
    std::ostringstream o;
    o << std::setprecision(17);
    if (c.policy == "drqn")
        o << agent_key(c);
    else
        o << predictor_key(c) << '|' << env_key(c) << "|uniform|" << c.uniform_interval;
    o << "|est|" << c.estimator_hidden << '|' << c.estimator_layers << '|' << c.estimator_epochs
      << '|' << c.estimator_batch << '|' << c.estimator_lr << '|' << c.estimator_use_mask;
    return o.str();
}

EpisodeConfig episode_config(const ExperimentConfig& c) {
    EpisodeConfig e;
    e.horizon = c.horizon;
    e.budget = c.budget;
    e.window = c.window;
    e.w1 = c.w1;
    e.w2 = c.w2;
    return e;
}

PolicySpec eval_policy(const ExperimentConfig& c, const DrqnNet* net) {
    PolicySpec p;
    if (c.policy == "drqn") {
        p.kind = PolicySpec::Kind::Drqn;
        p.net = net;
        p.epsilon = 0.0;
        p.history_window = c.seq_len;
    } else {
        p.kind = PolicySpec::Kind::Uniform;
        p.uniform_interval = c.uniform_interval;
    }
    return p;
}

SessionFactory make_sessions(const ExperimentConfig& cfg,
                             std::shared_ptr<Seq2SeqPredictor> pred) {
    if (cfg.predictor == "lstm") {
        return [pred](const EpisodeInstance& ep) { return pred->make_session(ep); };
    }
    if (cfg.predictor == "ar4_kalman") {
        return [](const EpisodeInstance& ep) { return make_ar_session(ep); };
    }
    return [](const EpisodeInstance&) { return make_zero_session(); };
}

TrainedPredictor get_predictor(const ExperimentConfig& cfg, const PreparedData& data,
                               ComponentCache* cache) {
    const std::string key = predictor_key(cfg);
    if (cache) {
        auto it = cache->predictors.find(key);
        if (it != cache->predictors.end()) return it->second;
    }
    TrainedPredictor out;
    out.net = std::make_shared<Seq2SeqPredictor>(cfg.predictor_hidden, cfg.predictor_layers,
                                                 cfg.seed);
    PredictorTrainConfig tc;
    tc.epochs = cfg.predictor_epochs;
    tc.batch = cfg.predictor_batch;
    tc.learning_rate = cfg.predictor_lr;
    tc.seed = cfg.seed;
    out.log = train_predictor(*out.net, data.train, data.val, tc);
    if (cache) cache->predictors.emplace(key, out);
    return out;
}

TrainedAgent get_agent(const ExperimentConfig& cfg, const PreparedData& data,
                       const SessionFactory& sessions, ComponentCache* cache) {
    const std::string key = agent_key(cfg);
    if (cache) {
        auto it = cache->agents.find(key);
        if (it != cache->agents.end()) return it->second;
    }
    TrainedAgent out;
    out.net = std::make_shared<DrqnNet>(DrqnNet::standard(derive_seed(cfg.seed, "drqn-eval")));
    DrqnNet target = DrqnNet::standard(derive_seed(cfg.seed, "drqn-target"));
    TrainingConfig tc;
    tc.episodes = cfg.drqn_episodes;
    tc.batch = cfg.drqn_batch;
    tc.seq_len = cfg.seq_len;
    tc.buffer_capacity = cfg.buffer_capacity;
    tc.gamma = cfg.gamma;
    tc.learning_rate = cfg.drqn_lr;
    tc.sync_every = cfg.sync_every;
    tc.eps_start = cfg.eps_start;
    tc.eps_final = cfg.eps_final;
    tc.eps_decay_frac = cfg.eps_decay_frac;
    tc.seed = cfg.seed;
    out.log = run_training(*out.net, target, data.train, sessions, episode_config(cfg), tc);
    if (cache) cache->agents.emplace(key, out);
    return out;
}

TrainedEstimator get_estimator(const ExperimentConfig& cfg, const PreparedData& data,
                               const SessionFactory& sessions, const DrqnNet* agent,
                               ComponentCache* cache) {
    const std::string key = estimator_key(cfg);
    if (cache) {
        auto it = cache->estimators.find(key);
        if (it != cache->estimators.end()) return it->second;
    }
    const PolicySpec pol = eval_policy(cfg, agent);
    const EpisodeConfig ec = episode_config(cfg);
    std::vector<EstimatorSample> train_samples =
        collect_profiles(data.train, sessions, pol, ec, derive_seed(cfg.seed, "est-profiles-train"));
    std::vector<EstimatorSample> val_samples =
        collect_profiles(data.val, sessions, pol, ec, derive_seed(cfg.seed, "est-profiles-val"));

    TrainedEstimator out;
    out.net = std::make_shared<EstimatorNet>(cfg.estimator_hidden, cfg.estimator_layers,
                                             cfg.estimator_use_mask, cfg.seed);
    EstimatorTrainConfig tc;
    tc.epochs = cfg.estimator_epochs;
    tc.batch = cfg.estimator_batch;
    tc.learning_rate = cfg.estimator_lr;
    tc.seed = cfg.seed;
    out.log = train_estimator(*out.net, train_samples, val_samples, tc);
    if (cache) cache->estimators.emplace(key, out);
    return out;
}

std::string pipeline_label(const ExperimentConfig& cfg) {
    return cfg.predictor + "+" + cfg.policy + "+" + cfg.estimator;
}

void write_fit_log_csv(const fs::path& p, const nn::FitLog& log) {
    std::string body = "epoch,train_loss,val_rmse\n";
    for (size_t i = 0; i < log.train_loss.size(); ++i) {
        body += std::to_string(i) + "," + fmt10(log.train_loss[i]) + "," +
                fmt10(i < log.val_rmse.size() ? log.val_rmse[i] : 0.0) + "\n";
    }
    write_text(p, body);
}

void write_artifacts(const ExperimentConfig& cfg, const PreparedData& data,
                     const TrainedPredictor& pred, const TrainedAgent& agent,
                     const TrainedEstimator& est, const EvalOutput& ev) {
    const fs::path out = cfg.out_dir;

    write_text(out / "metrics.csv",
               MetricReport::csv_header() + "\n" + ev.report.to_csv_row() + "\n");

    {
        std::string body = ev.report.to_kv();
        if (!body.empty() && body.back() != '\n') body += "\n";
        body += "mean_return=" + fmt10(ev.mean_return) + "\n";
        body += "test_episodes=" + std::to_string(ev.logs.size()) + "\n";
        body += "pipeline=" + pipeline_label(cfg) + "\n";
        if (cfg.predictor == "lstm")
            body += "predictor_best_epoch=" + std::to_string(pred.log.best_epoch) + "\n";
        if (cfg.estimator == "lstm")
            body += "estimator_best_epoch=" + std::to_string(est.log.best_epoch) + "\n";
        write_text(out / "metrics.txt", body);
    }

    {
        std::string body = "episode,t,gt,value,forecast,observed,reward\n";
        for (size_t i = 0; i < ev.logs.size(); ++i) {
            const EpisodeLog& log = ev.logs[i];
            std::array<double, kTargetLen> reward_at{};
            for (size_t k = 0; k < log.rewards.size(); ++k)
                reward_at[static_cast<size_t>(log.observation_times[k])] = log.rewards[k];
            for (int t = 0; t < kTargetLen; ++t) {
                body += std::to_string(i) + "," + std::to_string(t) + "," +
                        fmt17(data.test[i].target[static_cast<size_t>(t)]) + "," +
                        fmt17(log.profile.values[static_cast<size_t>(t)]) + "," +
                        fmt17(log.forecast[static_cast<size_t>(t)]) + "," +
                        std::to_string(static_cast<int>(log.profile.observed[static_cast<size_t>(t)])) +
                        "," + fmt17(reward_at[static_cast<size_t>(t)]) + "\n";
            }
        }
        write_text(out / "episode_logs.csv", body);
    }

    {
        std::string body = "episode,location,window,observations,waste,return\n";
        for (size_t i = 0; i < ev.logs.size(); ++i) {
            const EpisodeLog& log = ev.logs[i];
            body += std::to_string(i) + "," + data.test[i].location_id + "," +
                    std::to_string(data.test[i].window_index) + "," +
                    std::to_string(log.observation_times.size()) + "," +
                    std::to_string(log.waste) + "," + fmt10(log.total_return) + "\n";
        }
        write_text(out / "episodes.csv", body);
    }

    {
        std::string body = "episode";
        for (int t = 0; t < kTargetLen; ++t) body += ",e" + std::to_string(t);
        body += "\n";
        for (size_t i = 0; i < ev.estimates.size(); ++i) {
            body += std::to_string(i);
            for (int t = 0; t < kTargetLen; ++t)
                body += "," + fmt17(ev.estimates[i][static_cast<size_t>(t)]);
            body += "\n";
        }
        write_text(out / "estimates.csv", body);
    }

    {
        std::array<long, 7> day_counts{};
        std::array<long, 24> hour_counts{};
        for (size_t i = 0; i < ev.logs.size(); ++i) {
            for (int t : ev.logs[i].observation_times) {
                day_counts[static_cast<size_t>(t / 24)]++;
                hour_counts[static_cast<size_t>((data.test[i].hour_of_day_offset + t) % 24)]++;
            }
        }
        std::string body = "kind,bin,count\n";
        for (int d = 0; d < 7; ++d)
            body += "day," + std::to_string(d + 1) + "," + std::to_string(day_counts[static_cast<size_t>(d)]) + "\n";
        for (int h = 0; h < 24; ++h)
            body += "hour," + std::to_string(h) + "," + std::to_string(hour_counts[static_cast<size_t>(h)]) + "\n";
        write_text(out / "action_histogram.csv", body);
    }

    if (cfg.predictor == "lstm") {
        write_fit_log_csv(out / "predictor_training.csv", pred.log);
        pred.net->save((out / "predictor.ckpt").string());
    }
    if (cfg.policy == "drqn") {
        std::string body = "episode,total_return,mean_loss,epsilon,observations\n";
        for (const TrainingCurvePoint& pt : agent.log.curve) {
            body += std::to_string(pt.episode) + "," + fmt10(pt.total_return) + "," +
                    fmt10(pt.mean_loss) + "," + fmt10(pt.epsilon) + "," +
                    std::to_string(pt.observations) + "\n";
        }
        write_text(out / "training_curve.csv", body);
        nn::ParamRegistry reg = agent.net->params();
        nn::save_checkpoint((out / "agent.ckpt").string(), reg);
    }
    if (cfg.estimator == "lstm") {
        write_fit_log_csv(out / "estimator_training.csv", est.log);
        est.net->save((out / "estimator.ckpt").string());
    }
}

}  // namespace

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    if (name == "full") {
        cfg.max_windows_per_location = 0;
        cfg.max_locations_train = 0;
        cfg.max_locations_val = 0;
        cfg.max_locations_test = 0;
        cfg.predictor_epochs = 60;
        cfg.predictor_batch = 32;
        cfg.predictor_lr = 1e-4;
        cfg.drqn_episodes = 3000;
        cfg.drqn_lr = 1e-4;
        cfg.estimator_epochs = 10;
        cfg.estimator_lr = 1e-4;
    } else if (name == "desk") {
        cfg.max_windows_per_location = 30;
        cfg.max_locations_train = 30;
        cfg.max_locations_val = 8;
        cfg.max_locations_test = 8;
        cfg.predictor_epochs = 60;
        cfg.predictor_batch = 16;
        cfg.predictor_lr = 1e-3;
        cfg.drqn_episodes = 800;
        cfg.drqn_lr = 1e-3;
        cfg.estimator_epochs = 8;
        cfg.estimator_lr = 1e-3;
    } else {
        throw UsageError("unknown preset '" + name + "' (expected desk or full)");
    }
    cfg.preset = name;
}

void set_config_field(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const Field& f : fields()) {
        if (key == f.name) {
            f.set(cfg, value);
            return;
        }
    }
    throw UsageError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open config file '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        set_config_field(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const Field& f : fields()) {
        out += f.name;
        out += '=';
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& msg) { throw UsageError("invalid config: " + msg); };
    if (cfg.data_path.empty()) fail("data_path is required");
    if (cfg.out_dir.empty()) fail("out_dir is required");
    if (cfg.predictor != "lstm" && cfg.predictor != "ar4_kalman" && cfg.predictor != "none")
        fail("predictor must be lstm, ar4_kalman or none (got '" + cfg.predictor + "')");
    if (cfg.policy != "drqn" && cfg.policy != "uniform")
        fail("policy must be drqn or uniform (got '" + cfg.policy + "')");
    if (cfg.estimator != "lstm" && cfg.estimator != "gpr" && cfg.estimator != "none")
        fail("estimator must be lstm, gpr or none (got '" + cfg.estimator + "')");
    if (!(cfg.train_ratio > 0 && cfg.val_ratio > 0 && cfg.test_ratio > 0))
        fail("split ratios must be positive");
    if (cfg.train_ratio + cfg.val_ratio + cfg.test_ratio > 1.0 + 1e-9)
        fail("split ratios sum to more than 1");
    if (cfg.max_windows_per_location < 0 || cfg.max_locations_train < 0 ||
        cfg.max_locations_val < 0 || cfg.max_locations_test < 0)
        fail("location/window caps must be >= 0");
    if (cfg.horizon != kTargetLen)
        fail("horizon must be " + std::to_string(kTargetLen));
    if (cfg.budget < 1 || cfg.budget > cfg.horizon) fail("budget must be in [1, horizon]");
    if (cfg.window < 1 || cfg.window > kActionCount)
        fail("window must be in [1, " + std::to_string(kActionCount) + "]");
    if (cfg.policy == "drqn" && cfg.window != kActionCount)
        fail("drqn policy requires window == " + std::to_string(kActionCount));
    if (cfg.uniform_interval < 1 || cfg.uniform_interval > cfg.horizon)
        fail("uniform_interval must be in [1, horizon]");
    if (cfg.w1 < 0 || cfg.w2 < 0) fail("reward weights must be >= 0");
    if (cfg.predictor_hidden < 1 || cfg.predictor_layers < 1)
        fail("predictor size must be positive");
    if (cfg.predictor_epochs < 0) fail("predictor_epochs must be >= 0");
    if (cfg.predictor_batch < 1) fail("predictor_batch must be >= 1");
    if (cfg.predictor_lr <= 0) fail("predictor_lr must be > 0");
    if (cfg.drqn_episodes < 0) fail("drqn_episodes must be >= 0");
    if (cfg.drqn_batch < 1) fail("drqn_batch must be >= 1");
    if (cfg.seq_len < 1) fail("seq_len must be >= 1");
    if (cfg.buffer_capacity < cfg.drqn_batch) fail("buffer_capacity must be >= drqn_batch");
    if (!(cfg.gamma > 0 && cfg.gamma <= 1)) fail("gamma must be in (0, 1]");
    if (cfg.drqn_lr <= 0) fail("drqn_lr must be > 0");
    if (cfg.sync_every < 1) fail("sync_every must be >= 1");
    if (cfg.eps_start < 0 || cfg.eps_start > 1 || cfg.eps_final < 0 || cfg.eps_final > 1 ||
        cfg.eps_start < cfg.eps_final)
        fail("epsilon schedule must satisfy 0 <= eps_final <= eps_start <= 1");
    if (cfg.eps_decay_frac < 0 || cfg.eps_decay_frac > 1)
        fail("eps_decay_frac must be in [0, 1]");
    if (cfg.estimator_hidden < 1 || cfg.estimator_layers < 1)
        fail("estimator size must be positive");
    if (cfg.estimator_epochs < 0) fail("estimator_epochs must be >= 0");
    if (cfg.estimator_batch < 1) fail("estimator_batch must be >= 1");
    if (cfg.estimator_lr <= 0) fail("estimator_lr must be > 0");
    if (cfg.gpr_length_scale <= 0) fail("gpr_length_scale must be > 0");
    if (cfg.gpr_noise <= 0) fail("gpr_noise must be > 0");
}

RunResult run_experiment(const ExperimentConfig& cfg, ComponentCache* cache) {
    validate_config(cfg);
    PreparedData data = prepare_data(cfg);

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "config.txt", serialize_config(cfg));

    TrainedPredictor pred;
    if (cfg.predictor == "lstm") pred = get_predictor(cfg, data, cache);
    SessionFactory sessions = make_sessions(cfg, pred.net);

    TrainedAgent agent;
    if (cfg.policy == "drqn") agent = get_agent(cfg, data, sessions, cache);

    TrainedEstimator est;
    if (cfg.estimator == "lstm")
        est = get_estimator(cfg, data, sessions, agent.net.get(), cache);

    GprConfig gpr;
    gpr.length_scale = cfg.gpr_length_scale;
    gpr.noise_var = cfg.gpr_noise;

    EvalOutput ev = evaluate_configuration(data.test, sessions, eval_policy(cfg, agent.net.get()),
                                           est.net.get(), cfg.estimator == "gpr" ? &gpr : nullptr,
                                           episode_config(cfg), data.norm, cfg.seed);

    write_artifacts(cfg, data, pred, agent, est, ev);

    RunResult res;
    res.report = ev.report;
    res.mean_return = ev.mean_return;
    res.out_dir = cfg.out_dir;
    return res;
}

std::string compare_runs(const std::vector<std::string>& run_dirs) {
    if (run_dirs.empty()) throw UsageError("compare needs at least one run directory");

    struct Row {
        std::string dir, label;
        MetricReport report;
    };
    std::vector<Row> rows;
    for (const std::string& dir : run_dirs) {
        Row r;
        r.dir = dir;

        const std::string metrics = read_text(fs::path(dir) / "metrics.csv");
        std::istringstream ms(metrics);
        std::string header, values;
        if (!std::getline(ms, header) || !std::getline(ms, values))
            throw DataError(dir + ": metrics.csv is truncated");
        if (trim(header) != MetricReport::csv_header())
            throw DataError(dir + ": unexpected metrics.csv header '" + trim(header) + "'");
        std::vector<std::string> cells = split_csv_line(trim(values));
        if (cells.size() != 4) throw DataError(dir + ": metrics.csv row has wrong arity");
        r.report.rmse = to_double("rmse", cells[0]);
        r.report.mae = to_double("mae", cells[1]);
        r.report.mape_pct = to_double("mape_pct", cells[2]);
        r.report.coverage = to_double("coverage", cells[3]);

        ExperimentConfig snap;
        std::istringstream cs(read_text(fs::path(dir) / "config.txt"));
        std::string line;
        while (std::getline(cs, line)) {
            std::string s = trim(line);
            if (s.empty()) continue;
            size_t eq = s.find('=');
            if (eq == std::string::npos) continue;
            set_config_field(snap, s.substr(0, eq), s.substr(eq + 1));
        }
        r.label = pipeline_label(snap);
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.label, a.dir) < std::tie(b.label, b.dir);
    });

    std::ostringstream out;
    out << "runs:\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        out << "  [" << i + 1 << "] " << rows[i].label << "  (" << rows[i].dir << ")\n";
    }
    out << "\n";

    auto metric = [](const MetricReport& m, int k) {
        switch (k) {
            case 0: return m.rmse;
            case 1: return m.mae;
            case 2: return m.mape_pct;
            default: return m.coverage;
        }
    };
    static const char* names[4] = {"rmse", "mae", "mape_pct", "coverage"};

    out << std::left << std::setw(10) << "metric";
    for (size_t i = 0; i < rows.size(); ++i) {
        char head[32];
        std::snprintf(head, sizeof head, "[%zu]", i + 1);
        out << std::right << std::setw(i == 0 ? 14 : 26) << head;
    }
    out << "\n";
    for (int k = 0; k < 4; ++k) {
        out << std::left << std::setw(10) << names[k];
        const double base = metric(rows[0].report, k);
        for (size_t i = 0; i < rows.size(); ++i) {
            const double v = metric(rows[i].report, k);
            char cell[64];
            if (i == 0) {
                std::snprintf(cell, sizeof cell, "%.6g", v);
                out << std::right << std::setw(14) << cell;
            } else if (base == 0.0) {
                std::snprintf(cell, sizeof cell, "%.6g (n/a)", v);
                out << std::right << std::setw(26) << cell;
            } else {
                std::snprintf(cell, sizeof cell, "%.6g (%+.2f%%)", v,
                              (v - base) / std::abs(base) * 100.0);
                out << std::right << std::setw(26) << cell;
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string plot_episode(const std::string& run_dir, int episode_index) {
    if (episode_index < 0) throw UsageError("episode index must be >= 0");
    const fs::path dir(run_dir);

    std::array<double, kTargetLen> gt{}, value{}, estimate{};
    std::array<int, kTargetLen> observed{};
    int found = 0;
    {
        std::istringstream f(read_text(dir / "episode_logs.csv"));
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            std::vector<std::string> cells = split_csv_line(trim(line));
            if (cells.size() != 7) continue;
            if (to_int("episode", cells[0]) != episode_index) continue;
            int t = to_int("t", cells[1]);
            if (t < 0 || t >= kTargetLen)
                throw DataError("episode_logs.csv: step index out of range");
            gt[static_cast<size_t>(t)] = to_double("gt", cells[2]);
            value[static_cast<size_t>(t)] = to_double("value", cells[3]);
            observed[static_cast<size_t>(t)] = to_int("observed", cells[5]);
            ++found;
        }
    }
    if (found != kTargetLen)
        throw DataError("run has no complete episode " + std::to_string(episode_index) + " (" +
                        std::to_string(found) + " rows)");
    {
        std::istringstream f(read_text(dir / "estimates.csv"));
        std::string line;
        std::getline(f, line);  // header
        bool have = false;
        while (std::getline(f, line)) {
            std::vector<std::string> cells = split_csv_line(trim(line));
            if (cells.size() != kTargetLen + 1) continue;
            if (to_int("episode", cells[0]) != episode_index) continue;
            for (int t = 0; t < kTargetLen; ++t)
                estimate[static_cast<size_t>(t)] =
                    to_double("estimate", cells[static_cast<size_t>(t) + 1]);
            have = true;
            break;
        }
        if (!have)
            throw DataError("estimates.csv has no row for episode " +
                            std::to_string(episode_index));
    }

    std::string body = "t,gt,profile,estimate,observed_flag\n";
    for (int t = 0; t < kTargetLen; ++t) {
        body += std::to_string(t) + "," + fmt17(gt[static_cast<size_t>(t)]) + "," +
                fmt17(value[static_cast<size_t>(t)]) + "," +
                fmt17(estimate[static_cast<size_t>(t)]) + "," +
                std::to_string(observed[static_cast<size_t>(t)]) + "\n";
    }
    const fs::path out = dir / ("plot_episode_" + std::to_string(episode_index) + ".csv");
    write_text(out, body);
    return out.string();
}

}  // namespace sampling
