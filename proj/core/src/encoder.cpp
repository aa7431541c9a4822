#include "sdmscr/encoder.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "sdmscr/embedding.hpp"
#include "sdmscr/random.hpp"

namespace sdmscr {

EncoderGradients EncoderGradients::zeros_like(const EncoderParams& p) {
    return {Matrix(p.w1.rows(), p.w1.cols()), Matrix(p.w2.rows(), p.w2.cols())};
}

void EncoderGradients::add_scaled(double s, const EncoderGradients& other) {
    axpy(s, other.dw1, dw1);
    axpy(s, other.dw2, dw2);
}

EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed) {
    if (dims.in < 1 || dims.hidden < 1 || dims.out < 1) {
        throw std::invalid_argument("encoder dimensions must be >= 1");
    }
    auto glorot = [](std::size_t fan_in, std::size_t fan_out, Rng& rng) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> u(-bound, bound);
        Matrix w(fan_in, fan_out);
        for (double& x : w.values()) x = u(rng);
        return w;
    };
    Rng rng = make_rng(seed, 0x5eed);
    EncoderParams p;
    p.w1 = glorot(dims.in, dims.hidden, rng);
    p.w2 = glorot(dims.hidden, dims.out, rng);
    return p;
}

EncoderOutput forward(const EncoderParams& params, const NormalizedAdjacency& adj, const Matrix& x) {
    if (x.rows() != adj.num_nodes()) throw ShapeError("encoder forward: X rows != node count");
    if (x.cols() != params.w1.rows()) throw ShapeError("encoder forward: X cols != W1 rows");
    if (params.w1.cols() != params.w2.rows()) throw ShapeError("encoder forward: W1/W2 mismatch");

    EncoderOutput out;
    out.tape.adj = &adj;
    out.tape.params = &params;
    out.tape.ax = adj.apply(x);
    out.tape.pre = matmul(out.tape.ax, params.w1);
    Matrix h = out.tape.pre;
    for (double& v : h.values()) v = v > 0.0 ? v : 0.0;
    out.tape.ah = adj.apply(h);
    out.z = matmul(out.tape.ah, params.w2);
    return out;
}

EncoderBackward backward(const EncoderTape& tape, const Matrix& dz) {
    if (tape.adj == nullptr || tape.params == nullptr) throw std::logic_error("empty encoder tape");
    const auto& p = *tape.params;
    if (dz.rows() != tape.ah.rows() || dz.cols() != p.w2.cols()) {
        throw ShapeError("encoder backward: dZ shape mismatch");
    }
    EncoderBackward b;
    b.grads.dw2 = matmul_tn(tape.ah, dz);
    // d(ÂH) = dZ·W2ᵀ; dH = Âᵀ·d(ÂH) = Â·d(ÂH)
    Matrix dpre = tape.adj->apply(matmul_nt(dz, p.w2));
    auto pre = tape.pre.values();
    auto g = dpre.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (pre[i] <= 0.0) g[i] = 0.0;
    }
    b.grads.dw1 = matmul_tn(tape.ax, dpre);
    b.dx = tape.adj->apply(matmul_nt(dpre, p.w1));
    return b;
}

void save_checkpoint(const EncoderParams& params, const CheckpointMeta& meta,
                     const std::filesystem::path& prefix) {
    save_matrix(params.w1, prefix.string() + ".W1.emb1");
    save_matrix(params.w2, prefix.string() + ".W2.emb1");
    const nlohmann::json side = {{"d", meta.dims.in},
                                 {"h", meta.dims.hidden},
                                 {"o", meta.dims.out},
                                 {"seed", meta.seed},
                                 {"epoch", meta.epoch}};
    std::ofstream out(prefix.string() + ".json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint sidecar for " + prefix.string());
    out << side.dump(2) << '\n';
}

EncoderParams load_checkpoint(const std::filesystem::path& prefix, CheckpointMeta* meta) {
    std::ifstream in(prefix.string() + ".json");
    if (!in) throw std::runtime_error("cannot open checkpoint sidecar " + prefix.string() + ".json");
    const auto side = nlohmann::json::parse(in);
    EncoderParams p;
    p.w1 = load_matrix(prefix.string() + ".W1.emb1");
    p.w2 = load_matrix(prefix.string() + ".W2.emb1");
    const EncoderDims dims{side.at("d").get<std::size_t>(), side.at("h").get<std::size_t>(),
                           side.at("o").get<std::size_t>()};
    if (p.w1.rows() != dims.in || p.w1.cols() != dims.hidden || p.w2.rows() != dims.hidden ||
        p.w2.cols() != dims.out) {
        throw ShapeError("checkpoint weights disagree with sidecar dimensions");
    }
    if (meta) *meta = {dims, side.at("seed").get<std::uint64_t>(), side.at("epoch").get<std::size_t>()};
    return p;
}

}  // namespace sdmscr
