#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "sdmscr/graph.hpp"
#include "sdmscr/matrix.hpp"

namespace sdmscr {

/// ⟨a,b⟩ / max(‖a‖·‖b‖, 1e-12); 0 when either vector is zero.
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// Optional uniform subsampling of negatives for large graphs. Off unless
/// max_negatives > 0 and the graph has more than min_nodes nodes.
struct NegativeSampling {
    std::size_t max_negatives = 0;
    std::size_t min_nodes = 2000;
    std::uint64_t seed = 0;
};

struct SdmLoss {
    double loss = 0.0;
    Matrix d_ori;
    Matrix d_rel;
    Matrix d_irr;
};

/// Asymmetric contrastive loss: for anchor i the positive is
/// sim(ori_i, rel_i)/τ and the negatives are sim(ori_i, irr_k)/τ for k ≠ i.
/// Averaged over anchors; gradients are w.r.t. all three inputs.
SdmLoss sdm_loss(const Matrix& z_ori, const Matrix& z_rel, const Matrix& z_irr, double tau,
                 const NegativeSampling& sampling = {});

struct ScrLoss {
    double loss = 0.0;
    Matrix d_rel;
};

/// Neighborhood cosine smoothness of the relevant view:
/// (1/N) Σ_i (1/|N(i)|) Σ_{j∈N(i)} (1 − sim(rel_i, rel_j)); isolated nodes add 0.
ScrLoss scr_loss(const Matrix& z_rel, const TextAttributedGraph& g);

struct LossReport {
    double l_sdm = 0.0;
    double l_scr = 0.0;
    double l_total = 0.0;
    double lambda = 0.0;
    double tau = 0.0;
};

struct CombinedLoss {
    LossReport report;
    Matrix d_ori;
    Matrix d_rel;
    Matrix d_irr;
};

/// λ·SDM + (1−λ)·SCR. A term whose weight is exactly zero is not evaluated
/// and reports 0.
CombinedLoss combined_loss(const Matrix& z_ori, const Matrix& z_rel, const Matrix& z_irr,
                           const TextAttributedGraph& g, double lambda, double tau,
                           const NegativeSampling& sampling = {});

/// mean_i |sim(rel_i, irr_i)|
double orthogonality_metric(const Matrix& z_rel, const Matrix& z_irr);

struct PairLoss {
    double loss = 0.0;
    Matrix d_u;
    Matrix d_v;
};

/// Symmetric two-view InfoNCE with inter- and intra-view negatives, the
/// objective of the random-augmentation baseline.
PairLoss symmetric_infonce(const Matrix& u, const Matrix& v, double tau);

}  // namespace sdmscr
