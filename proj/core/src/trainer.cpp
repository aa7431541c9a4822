#include "sdmscr/trainer.hpp"

#include <cmath>
#include <string>

#include "sdmscr/random.hpp"
#include "sdmscr/synthetic.hpp"

namespace sdmscr {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
}

AdamState AdamState::zeros_like(const EncoderParams& p) {
    return {0, EncoderGradients::zeros_like(p), EncoderGradients::zeros_like(p)};
}

void adam_step(EncoderParams& params, const EncoderGradients& grads, AdamState& state,
               const TrainConfig& cfg) {
    require_same_shape(params.w1, grads.dw1, "adam_step W1");
    require_same_shape(params.w2, grads.dw2, "adam_step W2");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    auto update = [&](Matrix& w, const Matrix& g, Matrix& m, Matrix& v) {
        auto wv = w.values();
        auto gv = g.values();
        auto mv = m.values();
        auto vv = v.values();
        for (std::size_t i = 0; i < wv.size(); ++i) {
            mv[i] = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gv[i];
            vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gv[i] * gv[i];
            const double m_hat = mv[i] / bc1;
            const double v_hat = vv[i] / bc2;
            wv[i] -= cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + cfg.adam_eps) +
                                          cfg.weight_decay * wv[i]);
        }
    };
    update(params.w1, grads.dw1, state.m.dw1, state.v.dw1);
    update(params.w2, grads.dw2, state.m.dw2, state.v.dw2);
}

StepResult combined_step(const EncoderParams& params, const NormalizedAdjacency& adj,
                         const TextAttributedGraph& g, const ViewTriple& views, double lambda,
                         double tau, const NegativeSampling& sampling) {
    // One parameter object encodes every view.
    const auto ori = forward(params, adj, views.ori);
    const auto rel = forward(params, adj, views.rel);
    const auto irr = forward(params, adj, views.irr);

    StepResult step{combined_loss(ori.z, rel.z, irr.z, g, lambda, tau, sampling),
                    EncoderGradients::zeros_like(params)};
    step.grads.add_scaled(1.0, backward(ori.tape, step.loss.d_ori).grads);
    step.grads.add_scaled(1.0, backward(rel.tape, step.loss.d_rel).grads);
    step.grads.add_scaled(1.0, backward(irr.tape, step.loss.d_irr).grads);
    return step;
}

namespace {

void check_finite(const LossReport& r, std::size_t epoch) {
    if (!std::isfinite(r.l_total) || !std::isfinite(r.l_sdm) || !std::isfinite(r.l_scr)) {
        throw NonFiniteLossError(epoch, "non-finite loss at epoch " + std::to_string(epoch));
    }
}

}  // namespace

TrainResult train(const TextAttributedGraph& g, const ViewTriple& views, const TrainConfig& cfg) {
    cfg.validate();
    views.validate();
    if (views.num_nodes() != g.num_nodes()) throw ShapeError("views and graph disagree on node count");

    TrainResult result;
    if (cfg.identity_encoder) {
        auto loss = combined_loss(views.ori, views.rel, views.irr, g, cfg.lambda, cfg.tau, cfg.negatives);
        check_finite(loss.report, 0);
        result.history.push_back(loss.report);
        return result;
    }
    if (views.dim() != cfg.dims.in) throw ShapeError("views dim != encoder input dim");

    const NormalizedAdjacency adj(g);
    result.params = init_params(cfg.dims, cfg.seed);
    AdamState state = AdamState::zeros_like(result.params);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        NegativeSampling sampling = cfg.negatives;
        sampling.seed = derive_seed(cfg.seed, 1000 + epoch);
        auto step = combined_step(result.params, adj, g, views, cfg.lambda, cfg.tau, sampling);
        check_finite(step.loss.report, epoch);
        result.history.push_back(step.loss.report);
        adam_step(result.params, step.grads, state, cfg);
    }
    return result;
}

Matrix encode(const TrainConfig& cfg, const EncoderParams& params, const NormalizedAdjacency& adj,
              const Matrix& x) {
    if (cfg.identity_encoder) return x;
    return forward(params, adj, x).z;
}

TrainResult train_augmentation_baseline(const TextAttributedGraph& g, const Matrix& x,
                                        const TrainConfig& cfg, const BaselineConfig& aug) {
    cfg.validate();
    if (x.rows() != g.num_nodes()) throw ShapeError("baseline: x rows != node count");
    if (x.cols() != cfg.dims.in) throw ShapeError("baseline: x cols != encoder input dim");

    TrainResult result;
    result.params = init_params(cfg.dims, cfg.seed);
    AdamState state = AdamState::zeros_like(result.params);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto a = random_augment(x, g, aug.p_edge_drop, aug.p_feat_mask,
                                      derive_seed(cfg.seed, 2 * epoch + 7));
        const auto b = random_augment(x, g, aug.p_edge_drop, aug.p_feat_mask,
                                      derive_seed(cfg.seed, 2 * epoch + 8));
        const auto ga = with_edges(g, a.edges);
        const auto gb = with_edges(g, b.edges);
        const NormalizedAdjacency adj_a(ga), adj_b(gb);
        const auto fa = forward(result.params, adj_a, a.x);
        const auto fb = forward(result.params, adj_b, b.x);
        const auto loss = symmetric_infonce(fa.z, fb.z, cfg.tau);
        LossReport report{loss.loss, 0.0, loss.loss, 1.0, cfg.tau};
        check_finite(report, epoch);
        result.history.push_back(report);

        auto grads = backward(fa.tape, loss.d_u).grads;
        grads.add_scaled(1.0, backward(fb.tape, loss.d_v).grads);
        adam_step(result.params, grads, state, cfg);
    }
    return result;
}

}  // namespace sdmscr
