#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sdmscr/embedding.hpp"
#include "sdmscr/encoder.hpp"
#include "sdmscr/graph.hpp"
#include "sdmscr/objectives.hpp"

namespace sdmscr {

struct TrainConfig {
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    double lambda = 0.8;
    double tau = 0.5;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 1e-5;
    EncoderDims dims;
    bool identity_encoder = false;
    NegativeSampling negatives;

    void validate() const;
};

struct AdamState {
    std::size_t step = 0;
    EncoderGradients m;
    EncoderGradients v;

    static AdamState zeros_like(const EncoderParams& p);
};

/// One bias-corrected Adam update with decoupled weight decay:
/// w -= lr·(m̂/(√v̂ + eps) + weight_decay·w).
void adam_step(EncoderParams& params, const EncoderGradients& grads, AdamState& state,
               const TrainConfig& cfg);

class NonFiniteLossError : public std::runtime_error {
public:
    NonFiniteLossError(std::size_t epoch, const std::string& what)
        : std::runtime_error(what), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

/// Encoded views and parameter gradient of the combined loss for one step.
struct StepResult {
    CombinedLoss loss;
    EncoderGradients grads;
};

/// Forward of all three views through the same `params` over the same Â,
/// combined loss, and backward through all three paths.
StepResult combined_step(const EncoderParams& params, const NormalizedAdjacency& adj,
                         const TextAttributedGraph& g, const ViewTriple& views, double lambda,
                         double tau, const NegativeSampling& sampling = {});

struct TrainResult {
    EncoderParams params;
    std::vector<LossReport> history;
};

/// Full-batch training under the combined objective. With identity_encoder
/// set, nothing is trained and one report of the raw views' loss is returned.
TrainResult train(const TextAttributedGraph& g, const ViewTriple& views, const TrainConfig& cfg);

/// Encodes X with the trained encoder, or passes it through in identity mode.
Matrix encode(const TrainConfig& cfg, const EncoderParams& params, const NormalizedAdjacency& adj,
              const Matrix& x);

struct BaselineConfig {
    double p_edge_drop = 0.2;
    double p_feat_mask = 0.2;
};

/// Random-augmentation contrastive baseline: each epoch draws two
/// augmentations of x and minimizes symmetric InfoNCE between their encodings.
TrainResult train_augmentation_baseline(const TextAttributedGraph& g, const Matrix& x,
                                        const TrainConfig& cfg, const BaselineConfig& aug);

}  // namespace sdmscr
