#ifndef CORRNET_FUSION_HPP_
#define CORRNET_FUSION_HPP_

#include <string>
#include <utility>
#include <vector>

#include "corrnet/dataio.hpp"
#include "corrnet/model.hpp"
#include "corrnet/tensor.hpp"

namespace corrnet {

enum class FusionStrategy { sum, avg, max, multiply, corrnet, corrnet_shannon };

FusionStrategy fusion_strategy_from_string(const std::string& name);
std::string to_string(FusionStrategy strategy);

struct FusionConfig {
    FusionStrategy strategy = FusionStrategy::corrnet_shannon;
    double stream_weight = 1.0;   // multiplier on (u + v); 0.5 for the averaged variant
    double corrnet_weight = 1.0;  // multiplier on the head logits, e.g. 0.01 to
                                  // rein in large-magnitude backbones
    double th = 1.0;              // Shannon gate threshold, bits
    double eps = kDefaultNormEps;
    bool row_normalize = true;
    // When set, the gate entropy is computed from corrnet_weight-scaled head
    // logits instead of the raw ones.
    bool gate_scaled_corrnet = false;
};

// Key-value config file round trip (keys: strategy, stream_weight,
// corrnet_weight, th, eps, row_normalize, gate_scaled_corrnet).
void save_fusion_config(const FusionConfig& config, const std::string& path);
FusionConfig load_fusion_config(const std::string& path);

struct FusionDecision {
    Vector fused_probs;
    bool corrnet_included = false;
    double gate_entropy = 0.0;  // bits
};

// Elementwise u+v, (u+v)/2, max(u,v), u*v. Raw scores, not probabilities.
Vector fuse_baseline(const Vector& u, const Vector& v, FusionStrategy strategy);

// softmax(corrnet_weight * z + stream_weight * (u + v)).
Vector fuse_corrnet(const Vector& z_logits, const Vector& u, const Vector& v,
                    double stream_weight, double corrnet_weight);

// Entropy of softmax(z + u + v - min(z) - min(u+v)). Subtracting each part's
// minimum shifts its lowest entry to zero; softmax is shift-invariant, so the
// subtractions cannot change the result (asserted by a regression test).
double gate_entropy(const Vector& z_logits, const Vector& u, const Vector& v,
                    const FusionConfig& config);

// Include the head's logits in the fusion only when the combined distribution
// is confident (entropy below config.th); otherwise fall back to the plain
// two-stream softmax.
FusionDecision shannon_gate(const Vector& z_logits, const Vector& u, const Vector& v,
                            const FusionConfig& config);

// Gated top-1 accuracy of a dataset under a fixed threshold (test_all
// sampling); shared by search_threshold and the evaluation module.
double gated_accuracy(const CorrnetParams& params, const PairedDataset& dataset,
                      const FusionConfig& config);

// Grid-search th over [0, log2 B] maximizing sub-validation accuracy of the
// gated fusion; ties resolve to the smaller threshold.
double search_threshold(const CorrnetParams& params, const PairedDataset& sub_train,
                        const PairedDataset& sub_val, std::size_t grid_steps,
                        const FusionConfig& config,
                        std::vector<std::pair<double, double>>* grid_out = nullptr);

}  // namespace corrnet

#endif  // CORRNET_FUSION_HPP_
