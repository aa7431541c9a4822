#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "sdmscr/graph.hpp"
#include "sdmscr/matrix.hpp"

namespace sdmscr {

struct EncoderDims {
    std::size_t in = 64;
    std::size_t hidden = 128;
    std::size_t out = 64;
};

/// Two-layer graph convolution Z = Â·relu(Â·X·W1)·W2, no biases.
struct EncoderParams {
    Matrix w1;  // in x hidden
    Matrix w2;  // hidden x out

    EncoderDims dims() const { return {w1.rows(), w1.cols(), w2.cols()}; }
};

struct EncoderGradients {
    Matrix dw1;
    Matrix dw2;

    static EncoderGradients zeros_like(const EncoderParams& p);
    /// this += s·other
    void add_scaled(double s, const EncoderGradients& other);
};

/// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)).
EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed);

/// Intermediates kept by forward for the backward pass.
struct EncoderTape {
    const NormalizedAdjacency* adj = nullptr;
    const EncoderParams* params = nullptr;
    Matrix ax;   // Â·X
    Matrix pre;  // Â·X·W1
    Matrix ah;   // Â·relu(pre)
};

struct EncoderOutput {
    Matrix z;
    EncoderTape tape;
};

/// The tape refers to `adj` and `params`; both must outlive it.
EncoderOutput forward(const EncoderParams& params, const NormalizedAdjacency& adj, const Matrix& x);

struct EncoderBackward {
    EncoderGradients grads;
    Matrix dx;
};

/// Reverse-mode gradients of forward's composition, relying on Â = Âᵀ.
EncoderBackward backward(const EncoderTape& tape, const Matrix& dz);

/// Checkpoint: <prefix>.W1.emb1, <prefix>.W2.emb1 and a <prefix>.json sidecar.
struct CheckpointMeta {
    EncoderDims dims;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
};

void save_checkpoint(const EncoderParams& params, const CheckpointMeta& meta,
                     const std::filesystem::path& prefix);
EncoderParams load_checkpoint(const std::filesystem::path& prefix, CheckpointMeta* meta = nullptr);

}  // namespace sdmscr
