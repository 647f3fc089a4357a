#include "neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

namespace smfc::neural {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
    // Box-Muller; discard the second deviate to stay stateless.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

LstmWeights::LstmWeights(const ModelConfig& config) : config_(config) {
    if (config.input_size < 1 || config.hidden_size < 1 || config.output_size < 1 ||
        config.sequence_length < 1)
        throw std::runtime_error("model sizes must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw std::runtime_error("quantile alpha must lie strictly inside (0, 1)");

    const std::size_t h = static_cast<std::size_t>(config.hidden_size);
    const std::size_t in = static_cast<std::size_t>(config.input_size);
    const std::size_t out = static_cast<std::size_t>(config.output_size);
    std::size_t off = 0;
    for (int g = 0; g < 4; ++g) {
        w_off_[g] = off;
        off += h * in;
        u_off_[g] = off;
        off += h * h;
        b_off_[g] = off;
        off += h;
    }
    wy_off_ = off;
    off += out * h;
    by_off_ = off;
    off += out;
    params_.assign(off, 0.0);
}

std::span<double> LstmWeights::w(int gate) {
    return {params_.data() + w_off_[gate],
            static_cast<std::size_t>(config_.hidden_size * config_.input_size)};
}
std::span<double> LstmWeights::u(int gate) {
    return {params_.data() + u_off_[gate],
            static_cast<std::size_t>(config_.hidden_size * config_.hidden_size)};
}
std::span<double> LstmWeights::b(int gate) {
    return {params_.data() + b_off_[gate], static_cast<std::size_t>(config_.hidden_size)};
}
std::span<double> LstmWeights::head_weight() {
    return {params_.data() + wy_off_,
            static_cast<std::size_t>(config_.output_size * config_.hidden_size)};
}
std::span<double> LstmWeights::head_bias() {
    return {params_.data() + by_off_, static_cast<std::size_t>(config_.output_size)};
}
std::span<const double> LstmWeights::w(int gate) const {
    return {params_.data() + w_off_[gate],
            static_cast<std::size_t>(config_.hidden_size * config_.input_size)};
}
std::span<const double> LstmWeights::u(int gate) const {
    return {params_.data() + u_off_[gate],
            static_cast<std::size_t>(config_.hidden_size * config_.hidden_size)};
}
std::span<const double> LstmWeights::b(int gate) const {
    return {params_.data() + b_off_[gate], static_cast<std::size_t>(config_.hidden_size)};
}
std::span<const double> LstmWeights::head_weight() const {
    return {params_.data() + wy_off_,
            static_cast<std::size_t>(config_.output_size * config_.hidden_size)};
}
std::span<const double> LstmWeights::head_bias() const {
    return {params_.data() + by_off_, static_cast<std::size_t>(config_.output_size)};
}

bool LstmWeights::finite() const {
    for (double p : params_)
        if (!std::isfinite(p)) return false;
    return true;
}

namespace {

constexpr int kGateInput = 0;
constexpr int kGateForget = 1;
constexpr int kGateCandidate = 2;
constexpr int kGateOutput = 3;

LstmWeights init_weights(const ModelConfig& config) {
    LstmWeights weights(config);
    Rng rng(config.seed);
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(config.input_size));
    const double hid_scale = 1.0 / std::sqrt(static_cast<double>(config.hidden_size));
    for (int g = 0; g < 4; ++g) {
        for (auto& p : weights.w(g)) p = rng.uniform(-in_scale, in_scale);
        for (auto& p : weights.u(g)) p = rng.uniform(-hid_scale, hid_scale);
    }
    for (auto& p : weights.head_weight()) p = rng.uniform(-hid_scale, hid_scale);
    // forget gate starts open
    for (auto& p : weights.b(kGateForget)) p = 1.0;
    return weights;
}

}  // namespace

void forward(const LstmWeights& weights, std::span<const double> sequence, ForwardCache& cache) {
    const auto& cfg = weights.config();
    const std::size_t seq = static_cast<std::size_t>(cfg.sequence_length);
    const std::size_t in = static_cast<std::size_t>(cfg.input_size);
    const std::size_t h = static_cast<std::size_t>(cfg.hidden_size);
    const std::size_t out = static_cast<std::size_t>(cfg.output_size);
    if (sequence.size() != seq * in) throw std::runtime_error("sequence shape mismatch");
    for (double x : sequence)
        if (!std::isfinite(x)) throw std::runtime_error("non-finite feature");

    cache.inputs.assign(sequence.begin(), sequence.end());
    cache.gate_i.assign(seq * h, 0.0);
    cache.gate_f.assign(seq * h, 0.0);
    cache.gate_g.assign(seq * h, 0.0);
    cache.gate_o.assign(seq * h, 0.0);
    cache.cell.assign(seq * h, 0.0);
    cache.hidden.assign(seq * h, 0.0);
    cache.cell_tanh.assign(seq * h, 0.0);
    cache.outputs.assign(out, 0.0);

    std::vector<double> pre(4 * h);
    for (std::size_t t = 0; t < seq; ++t) {
        const double* x = sequence.data() + t * in;
        const double* h_prev = t > 0 ? cache.hidden.data() + (t - 1) * h : nullptr;
        for (int g = 0; g < 4; ++g) {
            const auto wg = weights.w(g);
            const auto ug = weights.u(g);
            const auto bg = weights.b(g);
            for (std::size_t j = 0; j < h; ++j) {
                double a = bg[j];
                const double* wr = wg.data() + j * in;
                for (std::size_t k = 0; k < in; ++k) a += wr[k] * x[k];
                if (h_prev) {
                    const double* ur = ug.data() + j * h;
                    for (std::size_t k = 0; k < h; ++k) a += ur[k] * h_prev[k];
                }
                pre[static_cast<std::size_t>(g) * h + j] = a;
            }
        }
        for (std::size_t j = 0; j < h; ++j) {
            const double gi = sigmoid(pre[kGateInput * h + j]);
            const double gf = sigmoid(pre[kGateForget * h + j]);
            const double gg = std::tanh(pre[kGateCandidate * h + j]);
            const double go = sigmoid(pre[kGateOutput * h + j]);
            const double c_prev = t > 0 ? cache.cell[(t - 1) * h + j] : 0.0;
            const double c = gf * c_prev + gi * gg;
            const double ct = std::tanh(c);
            cache.gate_i[t * h + j] = gi;
            cache.gate_f[t * h + j] = gf;
            cache.gate_g[t * h + j] = gg;
            cache.gate_o[t * h + j] = go;
            cache.cell[t * h + j] = c;
            cache.cell_tanh[t * h + j] = ct;
            cache.hidden[t * h + j] = go * ct;
        }
    }

    const auto wy = weights.head_weight();
    const auto by = weights.head_bias();
    const double* h_last = cache.hidden.data() + (seq - 1) * h;
    for (std::size_t k = 0; k < out; ++k) {
        double y = by[k];
        const double* wr = wy.data() + k * h;
        for (std::size_t j = 0; j < h; ++j) y += wr[j] * h_last[j];
        cache.outputs[k] = y;
    }
}

double pinball_loss(std::span<const double> predicted, std::span<const double> actual,
                    double alpha) {
    double total = 0.0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const double diff = actual[k] - predicted[k];
        total += diff >= 0.0 ? alpha * diff : (1.0 - alpha) * (-diff);
    }
    return total / static_cast<double>(predicted.size());
}

void backward(const LstmWeights& weights, const ForwardCache& cache,
              std::span<const double> actual, double alpha, std::vector<double>& grad) {
    const auto& cfg = weights.config();
    const std::size_t seq = static_cast<std::size_t>(cfg.sequence_length);
    const std::size_t in = static_cast<std::size_t>(cfg.input_size);
    const std::size_t h = static_cast<std::size_t>(cfg.hidden_size);
    const std::size_t out = static_cast<std::size_t>(cfg.output_size);
    if (grad.size() != weights.size()) grad.assign(weights.size(), 0.0);

    LstmWeights layout(cfg);
    layout.flat() = std::move(grad);

    // d(mean pinball)/d(predicted_k); at an exact tie the predicted<=actual
    // branch applies, giving -alpha.
    std::vector<double> dy(out);
    for (std::size_t k = 0; k < out; ++k) {
        const double residual = actual[k] - cache.outputs[k];
        dy[k] = (residual >= 0.0 ? -alpha : (1.0 - alpha)) / static_cast<double>(out);
    }

    const auto wy = weights.head_weight();
    auto gwy = layout.head_weight();
    auto gby = layout.head_bias();
    std::vector<double> dh(h, 0.0), dc(h, 0.0);
    const double* h_last = cache.hidden.data() + (seq - 1) * h;
    for (std::size_t k = 0; k < out; ++k) {
        gby[k] += dy[k];
        for (std::size_t j = 0; j < h; ++j) {
            gwy[k * h + j] += dy[k] * h_last[j];
            dh[j] += wy[k * h + j] * dy[k];
        }
    }

    std::vector<double> da(4 * h), dh_prev(h), dc_prev(h);
    for (std::size_t tt = seq; tt-- > 0;) {
        const double* gi = cache.gate_i.data() + tt * h;
        const double* gf = cache.gate_f.data() + tt * h;
        const double* gg = cache.gate_g.data() + tt * h;
        const double* go = cache.gate_o.data() + tt * h;
        const double* ct = cache.cell_tanh.data() + tt * h;
        const double* c_prev = tt > 0 ? cache.cell.data() + (tt - 1) * h : nullptr;
        const double* h_prev = tt > 0 ? cache.hidden.data() + (tt - 1) * h : nullptr;
        const double* x = cache.inputs.data() + tt * in;

        for (std::size_t j = 0; j < h; ++j) {
            const double d_out = dh[j] * ct[j];
            const double d_cell = dc[j] + dh[j] * go[j] * (1.0 - ct[j] * ct[j]);
            const double d_i = d_cell * gg[j];
            const double d_f = d_cell * (c_prev ? c_prev[j] : 0.0);
            const double d_g = d_cell * gi[j];
            da[kGateInput * h + j] = d_i * gi[j] * (1.0 - gi[j]);
            da[kGateForget * h + j] = d_f * gf[j] * (1.0 - gf[j]);
            da[kGateCandidate * h + j] = d_g * (1.0 - gg[j] * gg[j]);
            da[kGateOutput * h + j] = d_out * go[j] * (1.0 - go[j]);
            dc_prev[j] = d_cell * gf[j];
        }

        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (int g = 0; g < 4; ++g) {
            auto gw = layout.w(g);
            auto gu = layout.u(g);
            auto gb = layout.b(g);
            const auto ug = weights.u(g);
            const double* dag = da.data() + static_cast<std::size_t>(g) * h;
            for (std::size_t j = 0; j < h; ++j) {
                const double d = dag[j];
                gb[j] += d;
                double* gwr = gw.data() + j * in;
                for (std::size_t k = 0; k < in; ++k) gwr[k] += d * x[k];
                if (h_prev) {
                    double* gur = gu.data() + j * h;
                    const double* urow = ug.data() + j * h;
                    for (std::size_t k = 0; k < h; ++k) {
                        gur[k] += d * h_prev[k];
                        dh_prev[k] += urow[k] * d;
                    }
                }
            }
        }
        dh = dh_prev;
        dc = dc_prev;
    }
    grad = std::move(layout.flat());
}

std::size_t default_batch_size(double horizon) {
    if (horizon == 180) return 300;
    if (horizon == 300) return 150;
    if (horizon == 900) return 50;
    if (horizon == 1800) return 20;
    if (horizon == 3600) return 8;
    throw std::runtime_error("no default batch size for this horizon");
}

void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               double lr, double beta1, double beta2, double epsilon) {
    if (grad.size() != params.size() || state.m.size() != params.size())
        throw std::runtime_error("adam state shape mismatch");
    ++state.t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

namespace {

double mean_pinball(const LstmWeights& weights, const SupervisedDataset& set, double alpha,
                    ForwardCache& cache) {
    double total = 0.0;
    for (const auto& w : set.windows) {
        forward(weights, {&w.input[0][0], static_cast<std::size_t>(kSequenceLength * kFeatureCount)},
                cache);
        total += pinball_loss(cache.outputs, {w.target, kTargetCount}, alpha);
    }
    return total / static_cast<double>(set.windows.size());
}

}  // namespace

TrainedModel train(const SupervisedDataset& train_set, const SupervisedDataset& val_set,
                   const ModelConfig& model_config, const TrainConfig& train_config) {
    if (train_set.windows.empty()) throw std::runtime_error("empty training split");
    if (val_set.windows.empty()) throw std::runtime_error("empty validation split");
    if (train_config.batch_size < 1) throw std::runtime_error("batch size must be >= 1");
    if (train_config.patience >= train_config.max_epochs)
        throw std::runtime_error("patience must be smaller than max epochs");

    LstmWeights weights = init_weights(model_config);
    AdamState adam(weights.size());
    std::vector<double> grad(weights.size());
    std::vector<double> sample_grad(weights.size());
    ForwardCache cache;

    const std::size_t n = train_set.windows.size();
    const std::size_t batch = std::min(train_config.batch_size, n);

    TrainedModel best;
    best.config = model_config;
    best.weights = weights;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int stale = 0;
    double epoch_loss = 0.0;

    int epoch = 1;
    for (; epoch <= train_config.max_epochs; ++epoch) {
        epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += batch, ++batch_index) {
            const std::size_t end = std::min(start + batch, n);
            const double count = static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < end; ++i) {
                const auto& w = train_set.windows[i];
                forward(weights,
                        {&w.input[0][0],
                         static_cast<std::size_t>(kSequenceLength * kFeatureCount)},
                        cache);
                const double loss =
                    pinball_loss(cache.outputs, {w.target, kTargetCount}, model_config.alpha);
                if (!std::isfinite(loss))
                    throw std::runtime_error("training diverged at epoch " +
                                             std::to_string(epoch) + ", batch " +
                                             std::to_string(batch_index));
                epoch_loss += loss;
                std::fill(sample_grad.begin(), sample_grad.end(), 0.0);
                backward(weights, cache, {w.target, kTargetCount}, model_config.alpha,
                         sample_grad);
                for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += sample_grad[p];
            }
            double norm_sq = 0.0;
            for (std::size_t p = 0; p < grad.size(); ++p) {
                grad[p] /= count;
                norm_sq += grad[p] * grad[p];
            }
            const double norm = std::sqrt(norm_sq);
            if (norm > train_config.grad_clip_norm && norm > 0.0) {
                const double scale = train_config.grad_clip_norm / norm;
                for (auto& g : grad) g *= scale;
            }
            adam_step(weights.flat(), grad, adam, train_config.learning_rate, train_config.beta1,
                      train_config.beta2, train_config.epsilon);
        }
        epoch_loss /= static_cast<double>(n);

        const double val_loss = mean_pinball(weights, val_set, model_config.alpha, cache);
        if (!std::isfinite(val_loss))
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                     " (validation)");
        if (val_loss < best_val) {
            best_val = val_loss;
            best.weights = weights;
            best_epoch = epoch;
            stale = 0;
        } else if (++stale >= train_config.patience) {
            break;
        }
    }

    best.summary.epochs_run = std::min(epoch, train_config.max_epochs);
    best.summary.best_epoch = best_epoch;
    best.summary.final_train_loss = epoch_loss;
    best.summary.best_val_loss = best_val;
    return best;
}

void predict(const TrainedModel& model, const SupervisedWindow& window,
             double out[kTargetCount]) {
    if (model.config.input_size != kFeatureCount ||
        model.config.sequence_length != kSequenceLength ||
        model.config.output_size != kTargetCount)
        throw std::runtime_error("window shape does not match model config");
    ForwardCache cache;
    forward(model.weights,
            {&window.input[0][0], static_cast<std::size_t>(kSequenceLength * kFeatureCount)},
            cache);
    for (int k = 0; k < kTargetCount; ++k) out[k] = cache.outputs[k];
}

GradCheckReport grad_check(const ModelConfig& config, int n_points, std::uint64_t seed) {
    if (n_points < 1) throw std::runtime_error("grad_check needs at least one point");
    GradCheckReport report;
    Rng rng(seed);
    const std::size_t seq_len =
        static_cast<std::size_t>(config.sequence_length * config.input_size);

    for (int point = 0; point < n_points; ++point) {
        ModelConfig cfg = config;
        cfg.seed = rng.next();
        LstmWeights weights = init_weights(cfg);
        std::vector<double> sequence(seq_len);
        for (auto& x : sequence) x = rng.uniform(-1.0, 1.0);
        std::vector<double> actual(static_cast<std::size_t>(cfg.output_size));
        for (auto& a : actual) a = rng.uniform(-1.0, 1.0);

        ForwardCache cache;
        forward(weights, sequence, cache);
        bool near_kink = false;
        for (std::size_t k = 0; k < actual.size(); ++k)
            if (std::abs(actual[k] - cache.outputs[k]) < 1e-3) near_kink = true;
        if (near_kink) {
            ++report.points_skipped;
            continue;
        }

        std::vector<double> analytic(weights.size(), 0.0);
        backward(weights, cache, actual, cfg.alpha, analytic);

        for (std::size_t p = 0; p < weights.size(); ++p) {
            const double orig = weights.flat()[p];
            const double h = 1e-5 * std::max(1.0, std::abs(orig));
            weights.flat()[p] = orig + h;
            forward(weights, sequence, cache);
            const double lp = pinball_loss(cache.outputs, actual, cfg.alpha);
            weights.flat()[p] = orig - h;
            forward(weights, sequence, cache);
            const double lm = pinball_loss(cache.outputs, actual, cfg.alpha);
            weights.flat()[p] = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[p]), 1e-8});
            const double rel = std::abs(numeric - analytic[p]) / denom;
            report.max_rel_error = std::max(report.max_rel_error, rel);
        }
        ++report.points_tested;
    }
    return report;
}

}  // namespace smfc::neural
