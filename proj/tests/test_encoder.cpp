#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sdmscr/encoder.hpp"

using namespace sdmscr;
using oracle::max_relative_error;
using oracle::numeric_gradient;
using oracle::random_matrix;

namespace {

TextAttributedGraph graph(std::size_t n, std::vector<Edge> edges) {
    return build_graph(n, std::move(edges), std::vector<std::string>(n), std::vector<int>(n, 0));
}

// Naive dense composition, independent of the library kernels.
Matrix dense_forward(const Matrix& a, const Matrix& x, const Matrix& w1, const Matrix& w2) {
    auto mul = [](const Matrix& l, const Matrix& r) {
        Matrix o(l.rows(), r.cols());
        for (std::size_t i = 0; i < l.rows(); ++i)
            for (std::size_t j = 0; j < r.cols(); ++j)
                for (std::size_t k = 0; k < l.cols(); ++k) o(i, j) += l(i, k) * r(k, j);
        return o;
    };
    Matrix h = mul(mul(a, x), w1);
    for (double& v : h.values()) v = std::max(v, 0.0);
    return mul(mul(a, h), w2);
}

double weighted_sum(const Matrix& z, const Matrix& g) {
    double s = 0.0;
    for (std::size_t k = 0; k < z.values().size(); ++k) s += z.values()[k] * g.values()[k];
    return s;
}

}  // namespace

TEST(Init, SeededAndBounded) {
    EncoderDims dims{10, 20, 5};
    auto a = init_params(dims, 3);
    auto b = init_params(dims, 3);
    auto c = init_params(dims, 4);
    EXPECT_EQ(a.w1, b.w1);
    EXPECT_EQ(a.w2, b.w2);
    EXPECT_NE(a.w1, c.w1);
    EXPECT_EQ(a.w1.rows(), 10u);
    EXPECT_EQ(a.w1.cols(), 20u);
    EXPECT_EQ(a.w2.rows(), 20u);
    EXPECT_EQ(a.w2.cols(), 5u);
    EXPECT_LE(max_abs(a.w1), std::sqrt(6.0 / 30.0));
    EXPECT_LE(max_abs(a.w2), std::sqrt(6.0 / 25.0));
    EXPECT_GT(max_abs(a.w1), 0.5 * std::sqrt(6.0 / 30.0));
    auto d = a.dims();
    EXPECT_EQ(d.in, 10u);
    EXPECT_EQ(d.hidden, 20u);
    EXPECT_EQ(d.out, 5u);
}

TEST(Forward, SingleNodeIdentityWeightsIsIdentity) {
    auto g = graph(1, {});
    NormalizedAdjacency adj(g);
    EncoderParams p{identity(3), identity(3)};
    Matrix x{{0.5, 2.0, 0.0}};
    EXPECT_EQ(forward(p, adj, x).z, x);
}

TEST(Forward, ZeroInputGivesZero) {
    auto g = graph(4, {{0, 1}, {1, 2}, {2, 3}});
    NormalizedAdjacency adj(g);
    auto p = init_params({3, 5, 2}, 1);
    EXPECT_EQ(max_abs(forward(p, adj, Matrix(4, 3)).z), 0.0);
}

TEST(Forward, SymmetricNodesShareOutputs) {
    auto g = graph(3, {{0, 1}, {1, 2}});
    NormalizedAdjacency adj(g);
    auto p = init_params({2, 6, 3}, 2);
    Matrix x{{0.3, -1.0}, {2.0, 0.5}, {0.3, -1.0}};
    auto z = forward(p, adj, x).z;
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(z(0, j), z(2, j));
}

TEST(Forward, MatchesDenseComposition) {
    std::mt19937_64 rng(5);
    auto g = graph(6, {{0, 1}, {0, 2}, {1, 3}, {3, 4}, {2, 5}});
    NormalizedAdjacency adj(g);
    auto p = init_params({4, 7, 3}, 9);
    auto x = random_matrix(6, 4, rng);
    auto z = forward(p, adj, x).z;
    auto expect = dense_forward(adj.dense(), x, p.w1, p.w2);
    for (std::size_t k = 0; k < z.values().size(); ++k) EXPECT_NEAR(z.values()[k], expect.values()[k], 1e-12);
    EXPECT_THROW(forward(p, adj, Matrix(5, 4)), ShapeError);
    EXPECT_THROW(forward(p, adj, Matrix(6, 3)), ShapeError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    std::mt19937_64 rng(6);
    auto g = graph(3, {{0, 1}});
    NormalizedAdjacency adj(g);
    auto p = init_params({2, 3, 2}, 1);
    auto out = forward(p, adj, random_matrix(3, 2, rng));
    auto b = backward(out.tape, Matrix(3, 2));
    EXPECT_EQ(max_abs(b.grads.dw1), 0.0);
    EXPECT_EQ(max_abs(b.grads.dw2), 0.0);
    EXPECT_EQ(max_abs(b.dx), 0.0);
}

TEST(Backward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    auto g = graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
    NormalizedAdjacency adj(g);
    auto p = init_params({4, 5, 3}, 11);
    auto x = random_matrix(6, 4, rng);
    auto weights = random_matrix(6, 3, rng);

    auto out = forward(p, adj, x);
    auto b = backward(out.tape, weights);

    auto via_w1 = [&](const Matrix& w1) { return weighted_sum(forward({w1, p.w2}, adj, x).z, weights); };
    auto via_w2 = [&](const Matrix& w2) { return weighted_sum(forward({p.w1, w2}, adj, x).z, weights); };
    auto via_x = [&](const Matrix& xx) { return weighted_sum(forward(p, adj, xx).z, weights); };
    EXPECT_LT(max_relative_error(b.grads.dw1, numeric_gradient(via_w1, p.w1)), 1e-5);
    EXPECT_LT(max_relative_error(b.grads.dw2, numeric_gradient(via_w2, p.w2)), 1e-5);
    EXPECT_LT(max_relative_error(b.dx, numeric_gradient(via_x, x)), 1e-5);
}

TEST(Backward, LinearInUpstream) {
    std::mt19937_64 rng(8);
    auto g = graph(5, {{0, 1}, {1, 2}, {3, 4}});
    NormalizedAdjacency adj(g);
    auto p = init_params({3, 4, 2}, 3);
    auto out = forward(p, adj, random_matrix(5, 3, rng));
    auto d1 = random_matrix(5, 2, rng), d2 = random_matrix(5, 2, rng);
    auto b1 = backward(out.tape, d1), b2 = backward(out.tape, d2);
    auto b12 = backward(out.tape, 2.0 * d1 + (-3.0) * d2);
    auto combo = EncoderGradients::zeros_like(p);
    combo.add_scaled(2.0, b1.grads);
    combo.add_scaled(-3.0, b2.grads);
    for (std::size_t k = 0; k < combo.dw1.values().size(); ++k)
        EXPECT_NEAR(combo.dw1.values()[k], b12.grads.dw1.values()[k], 1e-12);
    for (std::size_t k = 0; k < combo.dw2.values().size(); ++k)
        EXPECT_NEAR(combo.dw2.values()[k], b12.grads.dw2.values()[k], 1e-12);
}

TEST(Checkpoint, RoundTripsWithinFloatPrecision) {
    oracle::TempDir dir("ckpt");
    auto p = init_params({3, 4, 2}, 21);
    save_checkpoint(p, {{3, 4, 2}, 21, 7}, dir / "model");
    CheckpointMeta meta;
    auto q = load_checkpoint(dir / "model", &meta);
    EXPECT_EQ(meta.seed, 21u);
    EXPECT_EQ(meta.epoch, 7u);
    EXPECT_EQ(meta.dims.hidden, 4u);
    for (std::size_t k = 0; k < p.w1.values().size(); ++k)
        EXPECT_EQ(q.w1.values()[k], static_cast<double>(static_cast<float>(p.w1.values()[k])));
    EXPECT_EQ(q.w2.rows(), 4u);
    EXPECT_ANY_THROW(load_checkpoint(dir / "absent"));
}
