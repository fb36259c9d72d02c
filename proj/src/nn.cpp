#include "sampling/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "sampling/errors.hpp"
#include "sampling/rng.hpp"

namespace sampling::nn {

size_t param_count(const ParamRegistry& params) {
    size_t n = 0;
    for (const auto& p : params) n += static_cast<size_t>(p.value->size());
    return n;
}

void zero_grads(const ParamRegistry& params) {
    for (const auto& p : params) p.grad->setZero();
}

double clip_grad_norm(const ParamRegistry& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) sq += p.grad->squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (const auto& p : params) *p.grad *= scale;
    }
    return norm;
}

bool all_finite(const Mat& m) { return m.allFinite(); }

void check_finite(const ParamRegistry& params, const std::string& context) {
    for (const auto& p : params) {
        if (!p.value->allFinite()) {
            throw NumericError(context + ": non-finite values in parameter '" + p.name + "'");
        }
    }
}

void xavier_uniform(Mat& m, Rng& rng, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
        }
    }
}

void Adam::step(const ParamRegistry& params) {
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto& p : params) {
            m_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
            v_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
        }
    }
    if (m_.size() != params.size()) {
        throw DimensionError("adam state does not match parameter registry");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (size_t i = 0; i < params.size(); ++i) {
        const Mat& g = *params[i].grad;
        if (g.rows() != m_[i].rows() || g.cols() != m_[i].cols()) {
            throw DimensionError("gradient shape mismatch for '" + params[i].name + "'");
        }
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        const Mat m_hat = m_[i] / bc1;
        const Mat v_hat = v_[i] / bc2;
        *params[i].value -=
            lr_ * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
    }
}

namespace {
constexpr char kMagic[8] = {'N', 'N', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamRegistry& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, static_cast<uint32_t>(params.size()));
    for (const auto& p : params) {
        write_pod(out, static_cast<uint16_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_pod(out, static_cast<uint32_t>(p.value->rows()));
        write_pod(out, static_cast<uint32_t>(p.value->cols()));
        out.write(reinterpret_cast<const char*>(p.value->data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(p.value->size())));
    }
    if (!out) throw DataError("short write on checkpoint: " + path);
}

void load_checkpoint(const std::string& path, const ParamRegistry& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError("bad checkpoint magic in " + path);
    }
    uint32_t count = 0;
    read_pod(in, count);
    if (count != params.size()) {
        throw DataError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                        std::to_string(params.size()));
    }
    for (const auto& p : params) {
        uint16_t name_len = 0;
        read_pod(in, name_len);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        uint32_t rows = 0;
        uint32_t cols = 0;
        read_pod(in, rows);
        read_pod(in, cols);
        if (name != p.name || rows != static_cast<uint32_t>(p.value->rows()) ||
            cols != static_cast<uint32_t>(p.value->cols())) {
            throw DataError("checkpoint tensor '" + name + "' does not match expected '" + p.name +
                            "' in " + path);
        }
        in.read(reinterpret_cast<char*>(p.value->data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(p.value->size())));
        if (!in) throw DataError("truncated checkpoint: " + path);
    }
}

}  // namespace sampling::nn
