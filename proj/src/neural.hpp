#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dataset.hpp"

namespace smfc::neural {

struct ModelConfig {
    int input_size = kFeatureCount;
    int hidden_size = 32;
    int output_size = kTargetCount;
    int sequence_length = kSequenceLength;
    double alpha = 0.5;  // target quantile
    std::uint64_t seed = 0;
};

// All parameters live in one flat vector; the named spans view into it.
// Gate order: input, forget, candidate, output.
class LstmWeights {
public:
    LstmWeights() = default;
    explicit LstmWeights(const ModelConfig& config);

    std::span<double> w(int gate);        // hidden x input
    std::span<double> u(int gate);        // hidden x hidden
    std::span<double> b(int gate);        // hidden
    std::span<double> head_weight();      // output x hidden
    std::span<double> head_bias();        // output
    std::span<const double> w(int gate) const;
    std::span<const double> u(int gate) const;
    std::span<const double> b(int gate) const;
    std::span<const double> head_weight() const;
    std::span<const double> head_bias() const;

    std::vector<double>& flat() { return params_; }
    const std::vector<double>& flat() const { return params_; }
    std::size_t size() const { return params_.size(); }
    const ModelConfig& config() const { return config_; }

    bool finite() const;

private:
    ModelConfig config_;
    std::vector<double> params_;
    std::size_t w_off_[4] = {}, u_off_[4] = {}, b_off_[4] = {};
    std::size_t wy_off_ = 0, by_off_ = 0;
};

// Per-timestep activations retained for backpropagation.
struct ForwardCache {
    std::vector<double> inputs;   // seq x input
    std::vector<double> gate_i, gate_f, gate_g, gate_o;  // seq x hidden
    std::vector<double> cell, hidden, cell_tanh;         // seq x hidden
    std::vector<double> outputs;  // output_size
};

void forward(const LstmWeights& weights, std::span<const double> sequence, ForwardCache& cache);

double pinball_loss(std::span<const double> predicted, std::span<const double> actual,
                    double alpha);

// Gradients of the mean pinball loss over the three outputs, accumulated
// into grad (same flat layout as the weights).
void backward(const LstmWeights& weights, const ForwardCache& cache,
              std::span<const double> actual, double alpha, std::vector<double>& grad);

struct AdamState {
    std::vector<double> m, v;
    std::uint64_t t = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 300;
    int max_epochs = 200;
    int patience = 20;
    double grad_clip_norm = 5.0;
};

// Batch size defaults from the per-horizon schedule
// (180s->300, 300s->150, 900s->50, 1800s->20, 3600s->8).
std::size_t default_batch_size(double horizon);

void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               double lr, double beta1, double beta2, double epsilon);

struct TrainSummary {
    int epochs_run = 0;
    int best_epoch = 0;
    double final_train_loss = 0.0;
    double best_val_loss = 0.0;
};

struct TrainedModel {
    ModelConfig config;
    LstmWeights weights;
    TrainSummary summary;
};

TrainedModel train(const SupervisedDataset& train_set, const SupervisedDataset& val_set,
                   const ModelConfig& model_config, const TrainConfig& train_config);

void predict(const TrainedModel& model, const SupervisedWindow& window, double out[kTargetCount]);

struct GradCheckReport {
    double max_rel_error = 0.0;
    int points_tested = 0;
    int points_skipped = 0;
};

// Central finite differences against the analytic gradients at random
// weights/inputs. Points with any residual inside the pinball kink zone
// (|residual| < 1e-3) are skipped.
GradCheckReport grad_check(const ModelConfig& config, int n_points, std::uint64_t seed);

// Deterministic uniform double in [0,1); used everywhere randomness is
// needed so results do not depend on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    double gaussian();                       // standard normal
    std::uint64_t next();

private:
    std::uint64_t state_[4];
};

}  // namespace smfc::neural
