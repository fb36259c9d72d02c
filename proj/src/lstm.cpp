#include "sampling/lstm.hpp"

#include <stdexcept>

#include "sampling/errors.hpp"
#include "sampling/rng.hpp"

namespace sampling::nn {

namespace {

// In-place gate activations on a stacked [i; f; g; o] pre-activation matrix.
void activate_gates(Mat& a, int hidden) {
    const int H = hidden;
    a.topRows(H) = (1.0 / (1.0 + (-a.topRows(H).array()).exp())).matrix();
    a.middleRows(H, H) = (1.0 / (1.0 + (-a.middleRows(H, H).array()).exp())).matrix();
    a.middleRows(2 * H, H) = a.middleRows(2 * H, H).array().tanh().matrix();
    a.middleRows(3 * H, H) = (1.0 / (1.0 + (-a.middleRows(3 * H, H).array()).exp())).matrix();
}

}  // namespace

LstmCellParams::LstmCellParams(int input_dim, int hidden_dim, Rng& rng)
    : input_dim(input_dim), hidden_dim(hidden_dim) {
    w_input.resize(4 * hidden_dim, input_dim);
    w_hidden.resize(4 * hidden_dim, hidden_dim);
    bias = Mat::Zero(4 * hidden_dim, 1);
    xavier_uniform(w_input, rng, input_dim, hidden_dim);
    xavier_uniform(w_hidden, rng, hidden_dim, hidden_dim);
    bias.block(hidden_dim, 0, hidden_dim, 1).setConstant(1.0);  // forget gate open at start
    g_w_input = Mat::Zero(w_input.rows(), w_input.cols());
    g_w_hidden = Mat::Zero(w_hidden.rows(), w_hidden.cols());
    g_bias = Mat::Zero(bias.rows(), bias.cols());
}

void LstmCellParams::register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + ".w_input", &w_input, &g_w_input});
    reg.push_back({prefix + ".w_hidden", &w_hidden, &g_w_hidden});
    reg.push_back({prefix + ".bias", &bias, &g_bias});
}

DenseParams::DenseParams(int input_dim, int output_dim, Rng& rng, bool zero_init) {
    weight.resize(output_dim, input_dim);
    bias = Mat::Zero(output_dim, 1);
    if (zero_init) {
        weight.setZero();
    } else {
        xavier_uniform(weight, rng, input_dim, output_dim);
    }
    g_weight = Mat::Zero(output_dim, input_dim);
    g_bias = Mat::Zero(output_dim, 1);
}

void DenseParams::register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + ".weight", &weight, &g_weight});
    reg.push_back({prefix + ".bias", &bias, &g_bias});
}

Mat DenseParams::forward(const Mat& x) const {
    Mat out = weight * x;
    out.colwise() += bias.col(0);
    return out;
}

Mat DenseParams::backward(const Mat& x, const Mat& d_out) {
    g_weight += d_out * x.transpose();
    g_bias += d_out.rowwise().sum();
    return weight.transpose() * d_out;
}

void lstm_step(const LstmCellParams& p, const Vec& x, Vec& h, Vec& c) {
    const int H = p.hidden_dim;
    if (x.size() != p.input_dim || h.size() != H || c.size() != H) {
        throw DimensionError("lstm_step: state/input size mismatch");
    }
    Mat a = p.w_input * x + p.w_hidden * h + p.bias;
    activate_gates(a, H);
    const auto i = a.col(0).segment(0, H).array();
    const auto f = a.col(0).segment(H, H).array();
    const auto g = a.col(0).segment(2 * H, H).array();
    const auto o = a.col(0).segment(3 * H, H).array();
    c = (f * c.array() + i * g).matrix();
    h = (o * c.array().tanh()).matrix();
}

LstmStack::LstmStack(int input_dim, int hidden_dim, int layers, Rng& rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
    cells_.reserve(layers);
    for (int l = 0; l < layers; ++l) {
        cells_.emplace_back(l == 0 ? input_dim : hidden_dim, hidden_dim, rng);
    }
}

void LstmStack::register_params(ParamRegistry& reg, const std::string& prefix) {
    for (size_t l = 0; l < cells_.size(); ++l) {
        cells_[l].register_params(reg, prefix + ".l" + std::to_string(l));
    }
}

LstmState LstmStack::zero_state(int batch) const {
    LstmState s;
    s.h.assign(cells_.size(), Mat::Zero(hidden_dim_, batch));
    s.c.assign(cells_.size(), Mat::Zero(hidden_dim_, batch));
    return s;
}

LstmState StackCache::final_state() const {
    if (steps == 0) return initial;
    LstmState s;
    const size_t L = hidden.size();
    s.h.resize(L);
    s.c.resize(L);
    for (size_t l = 0; l < L; ++l) {
        s.h[l] = hidden[l].back();
        s.c[l] = cell[l].back();
    }
    return s;
}

void LstmStack::begin(StackCache& cache, const LstmState* initial, int batch) const {
    const int L = layers();
    cache.steps = 0;
    cache.batch = batch;
    cache.inputs.clear();
    cache.initial = initial ? *initial : zero_state(batch);
    if (static_cast<int>(cache.initial.h.size()) != L ||
        cache.initial.h[0].cols() != batch || cache.initial.h[0].rows() != hidden_dim_) {
        throw DimensionError("LstmStack::begin: initial state shape mismatch");
    }
    cache.gates.assign(L, {});
    cache.cell.assign(L, {});
    cache.hidden.assign(L, {});
}

const Mat& LstmStack::forward_step(const Mat& x, StackCache& cache) const {
    const int L = layers();
    const int H = hidden_dim_;
    const int t = cache.steps;
    if (x.rows() != input_dim_ || x.cols() != cache.batch) {
        throw DimensionError("LstmStack::forward_step: input shape mismatch");
    }
    cache.inputs.push_back(x);
    for (int l = 0; l < L; ++l) {
        const Mat& in = l == 0 ? cache.inputs.back() : cache.hidden[l - 1][t];
        const Mat& h_prev = t == 0 ? cache.initial.h[l] : cache.hidden[l][t - 1];
        const Mat& c_prev = t == 0 ? cache.initial.c[l] : cache.cell[l][t - 1];
        Mat a = cells_[l].w_input * in + cells_[l].w_hidden * h_prev;
        a.colwise() += cells_[l].bias.col(0);
        activate_gates(a, H);
        Mat c = (a.middleRows(H, H).array() * c_prev.array() +
                 a.topRows(H).array() * a.middleRows(2 * H, H).array())
                    .matrix();
        Mat h = (a.middleRows(3 * H, H).array() * c.array().tanh()).matrix();
        cache.gates[l].push_back(std::move(a));
        cache.cell[l].push_back(std::move(c));
        cache.hidden[l].push_back(std::move(h));
    }
    ++cache.steps;
    return cache.hidden[L - 1][t];
}

void LstmStack::forward(const std::vector<Mat>& xs, const LstmState* initial,
                        StackCache& cache) const {
    if (xs.empty()) throw DimensionError("LstmStack::forward: empty sequence");
    begin(cache, initial, static_cast<int>(xs[0].cols()));
    for (const Mat& x : xs) forward_step(x, cache);
}

std::vector<Mat> LstmStack::backward(const StackCache& cache, const std::vector<Mat>& d_top,
                                     LstmState* d_initial, const LstmState* d_final) {
    const int L = layers();
    const int T = cache.steps;
    const int B = cache.batch;
    const int H = hidden_dim_;
    if (static_cast<int>(d_top.size()) != T) {
        throw DimensionError("LstmStack::backward: gradient count mismatch");
    }
    if (d_initial) {
        d_initial->h.assign(L, Mat());
        d_initial->c.assign(L, Mat());
    }

    // Per-step gradients flowing into the current layer's hidden outputs;
    // starts as the caller's top-layer grads, becomes input grads layer by layer.
    std::vector<Mat> d_stream = d_top;
    for (int l = L - 1; l >= 0; --l) {
        LstmCellParams& cell = cells_[l];
        std::vector<Mat> d_x(T);
        Mat dh_rec = d_final ? d_final->h[l] : Mat::Zero(H, B);
        Mat dc_rec = d_final ? d_final->c[l] : Mat::Zero(H, B);
        for (int t = T - 1; t >= 0; --t) {
            Eigen::ArrayXXd dh = dh_rec.array();
            if (d_stream[t].size() != 0) dh += d_stream[t].array();

            const Mat& gates = cache.gates[l][t];
            const auto i = gates.topRows(H).array();
            const auto f = gates.middleRows(H, H).array();
            const auto g = gates.middleRows(2 * H, H).array();
            const auto o = gates.middleRows(3 * H, H).array();
            const Mat& c_prev = t == 0 ? cache.initial.c[l] : cache.cell[l][t - 1];
            const Mat& h_prev = t == 0 ? cache.initial.h[l] : cache.hidden[l][t - 1];
            const Mat& x = l == 0 ? cache.inputs[t] : cache.hidden[l - 1][t];

            Eigen::ArrayXXd tc = cache.cell[l][t].array().tanh();
            Eigen::ArrayXXd dc = dh * o * (1.0 - tc.square()) + dc_rec.array();

            Mat da(4 * H, B);
            da.topRows(H) = (dc * g * i * (1.0 - i)).matrix();
            da.middleRows(H, H) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
            da.middleRows(2 * H, H) = (dc * i * (1.0 - g.square())).matrix();
            da.middleRows(3 * H, H) = (dh * tc * o * (1.0 - o)).matrix();

            cell.g_w_input.noalias() += da * x.transpose();
            cell.g_w_hidden.noalias() += da * h_prev.transpose();
            cell.g_bias += da.rowwise().sum();

            d_x[t].noalias() = cell.w_input.transpose() * da;
            dh_rec.noalias() = cell.w_hidden.transpose() * da;
            dc_rec = (dc * f).matrix();
        }
        if (d_initial) {
            d_initial->h[l] = dh_rec;
            d_initial->c[l] = dc_rec;
        }
        d_stream = std::move(d_x);
    }
    return d_stream;
}

void LstmStack::step(const Mat& x, LstmState& state) const {
    const int L = layers();
    const int H = hidden_dim_;
    if (static_cast<int>(state.h.size()) != L) {
        throw DimensionError("LstmStack::step: state layer count mismatch");
    }
    Mat cur = x;
    for (int l = 0; l < L; ++l) {
        Mat a = cells_[l].w_input * cur + cells_[l].w_hidden * state.h[l];
        a.colwise() += cells_[l].bias.col(0);
        activate_gates(a, H);
        state.c[l] = (a.middleRows(H, H).array() * state.c[l].array() +
                      a.topRows(H).array() * a.middleRows(2 * H, H).array())
                         .matrix();
        state.h[l] = (a.middleRows(3 * H, H).array() * state.c[l].array().tanh()).matrix();
        cur = state.h[l];
    }
}

SequenceNet::SequenceNet(int input_dim, int hidden_dim, int layers, int output_dim, Rng& rng,
                         bool zero_init_head)
    : stack_(input_dim, hidden_dim, layers, rng),
      head_(hidden_dim, output_dim, rng, zero_init_head) {}

void SequenceNet::register_params(ParamRegistry& reg, const std::string& prefix) {
    stack_.register_params(reg, prefix + ".lstm");
    head_.register_params(reg, prefix + ".head");
}

ParamRegistry SequenceNet::params() {
    ParamRegistry reg;
    register_params(reg, "net");
    return reg;
}

std::vector<Mat> SequenceNet::forward(const std::vector<Mat>& xs, const LstmState* initial,
                                      StackCache& cache) const {
    stack_.forward(xs, initial, cache);
    std::vector<Mat> outs(cache.steps);
    const auto& top = cache.hidden.back();
    for (int t = 0; t < cache.steps; ++t) outs[t] = head_.forward(top[t]);
    return outs;
}

std::vector<Mat> SequenceNet::backward(const StackCache& cache, const std::vector<Mat>& d_outputs,
                                       LstmState* d_initial) {
    if (static_cast<int>(d_outputs.size()) != cache.steps) {
        throw DimensionError("SequenceNet::backward: gradient count mismatch");
    }
    std::vector<Mat> d_top(cache.steps);
    const auto& top = cache.hidden.back();
    for (int t = 0; t < cache.steps; ++t) {
        if (d_outputs[t].size() != 0) d_top[t] = head_.backward(top[t], d_outputs[t]);
    }
    return stack_.backward(cache, d_top, d_initial);
}

}  // namespace sampling::nn
