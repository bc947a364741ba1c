#ifndef CORRNET_TRAINING_HPP_
#define CORRNET_TRAINING_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "corrnet/dataio.hpp"
#include "corrnet/model.hpp"
#include "corrnet/rng.hpp"

namespace corrnet {

enum class LossMode { softmax_ce, sigmoid_bce };

LossMode loss_mode_from_string(const std::string& name);
std::string to_string(LossMode mode);

struct TrainConfig {
    std::size_t batch_size = 8;
    std::size_t epochs = 200;
    double learning_rate = 0.001;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    std::size_t segments = 3;  // K, used by segment-aware sampling
    LossMode loss_mode = LossMode::softmax_ce;
    double eps = kDefaultNormEps;
    bool row_normalize = true;
    // Default training draws one random frame per modality per clip; this
    // switches to one random frame per segment, scores averaged.
    bool segment_sampling = false;

    void validate() const;
};

void save_train_config(const TrainConfig& config, const std::string& path);
TrainConfig load_train_config(const std::string& path);

// Momentum buffers mirroring every parameter tensor.
struct OptimizerState {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
    Matrix w3;
    Vector b3;
};

OptimizerState zero_state(const CorrnetParams& params);

struct EpochStats {
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double total_seconds = 0.0;
    std::string params_path;  // filled by the CLI after saving

    void write_csv(const std::string& path) const;
};

// Loss and its logit gradient. softmax_ce expects exactly one label;
// sigmoid_bce treats the labels as a multi-hot set and averages the per-class
// binary cross-entropies.
std::pair<double, Vector> corrnet_loss(const Vector& z_logits,
                                       const std::vector<int>& labels,
                                       LossMode mode);

// One uniformly random frame per modality, drawn independently (no temporal
// alignment between the streams).
std::pair<Vector, Vector> sample_training_pair(const ClipRecord& spatial,
                                               const ClipRecord& temporal, Rng& rng);

// Classical momentum: vel = momentum * vel - lr * grad; param += vel.
void sgd_momentum_step(CorrnetParams& params, const CorrnetGradients& grads,
                       OptimizerState& state, double lr, double momentum);

// Full training loop over the paired dataset; deterministic given the seed.
std::pair<CorrnetParams, TrainReport> train(const PairedDataset& dataset,
                                            CorrnetParams params,
                                            const TrainConfig& config);

}  // namespace corrnet

#endif  // CORRNET_TRAINING_HPP_
