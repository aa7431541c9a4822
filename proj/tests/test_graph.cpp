#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "sdmscr/graph.hpp"

using namespace sdmscr;
using oracle::TempDir;

namespace {

TextAttributedGraph unlabeled(std::size_t n, std::vector<Edge> edges) {
    return build_graph(n, std::move(edges), std::vector<std::string>(n, "t"), std::vector<int>(n, 0));
}

TextAttributedGraph path3() { return unlabeled(3, {{0, 1}, {1, 2}}); }

template <class F>
GraphError::Kind kind_of(F&& f) {
    try {
        f();
    } catch (const GraphError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no GraphError thrown";
    return GraphError::Kind::Io;
}

}  // namespace

TEST(BuildGraph, TwoNodesAreMutualNeighbors) {
    const auto g = unlabeled(2, {{0, 1}});
    ASSERT_EQ(g.neighbors(0).size(), 1u);
    ASSERT_EQ(g.neighbors(1).size(), 1u);
    EXPECT_EQ(g.neighbors(0)[0], 1u);
    EXPECT_EQ(g.neighbors(1)[0], 0u);
}

TEST(BuildGraph, IsolatedNodeHasNoNeighbors) {
    const auto g = unlabeled(1, {});
    EXPECT_TRUE(g.neighbors(0).empty());
    EXPECT_EQ(g.degree(0), 0u);
}

TEST(BuildGraph, PathDegreeSequence) {
    const auto g = path3();
    EXPECT_EQ(g.degree(0), 1u);
    EXPECT_EQ(g.degree(1), 2u);
    EXPECT_EQ(g.degree(2), 1u);
}

TEST(BuildGraph, OrientationIsCanonicalized) {
    const auto g = unlabeled(3, {{2, 1}, {1, 0}});
    EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
    EXPECT_EQ(g, path3());
}

TEST(BuildGraph, RejectsBadInput) {
    using K = GraphError::Kind;
    EXPECT_EQ(kind_of([] { unlabeled(2, {{0, 0}}); }), K::SelfLoop);
    EXPECT_EQ(kind_of([] { unlabeled(2, {{0, 2}}); }), K::OutOfRange);
    EXPECT_EQ(kind_of([] { unlabeled(3, {{0, 1}, {1, 0}}); }), K::DuplicateEdge);
    EXPECT_EQ(kind_of([] { build_graph(2, {}, {"a"}, {0, 0}); }), K::LengthMismatch);
    EXPECT_EQ(kind_of([] { build_graph(2, {}, {"a", "b"}, {0, -1}); }), K::Schema);
    // Without an explicit class count, labels must cover [0, C) densely.
    EXPECT_EQ(kind_of([] { build_graph(2, {}, {"a", "b"}, {0, 2}); }), K::Schema);
    EXPECT_EQ(kind_of([] { build_graph(2, {}, {"a", "b"}, {0, 3}, 3); }), K::Schema);
    EXPECT_NO_THROW(build_graph(2, {}, {"a", "b"}, {0, 2}, 3));
}

TEST(BuildGraph, NeighborListsAreSortedAndSymmetric) {
    const auto g = unlabeled(5, {{3, 0}, {0, 1}, {4, 0}, {2, 3}, {1, 4}});
    for (NodeId u = 0; u < 5; ++u) {
        const auto nb = g.neighbors(u);
        EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
        for (NodeId v : nb) {
            const auto back = g.neighbors(v);
            EXPECT_NE(std::find(back.begin(), back.end(), u), back.end());
        }
    }
}

TEST(NormalizedAdjacency, SingleEdgeIsAllHalves) {
    const auto a = NormalizedAdjacency(unlabeled(2, {{0, 1}})).dense();
    EXPECT_EQ(a, (Matrix{{0.5, 0.5}, {0.5, 0.5}}));
}

TEST(NormalizedAdjacency, SingleNodeIsOne) {
    EXPECT_EQ(NormalizedAdjacency(unlabeled(1, {})).dense(), (Matrix{{1.0}}));
}

TEST(NormalizedAdjacency, PathClosedForm) {
    // Degrees with self-loops: 2, 3, 2.
    const auto a = NormalizedAdjacency(path3()).dense();
    EXPECT_NEAR(a(0, 1), 1.0 / std::sqrt(2.0 * 3.0), 1e-15);
    EXPECT_NEAR(a(1, 1), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(a(0, 0), 0.5, 1e-15);
    EXPECT_EQ(a(0, 2), 0.0);
}

TEST(NormalizedAdjacency, SparseApplyMatchesDense) {
    std::mt19937_64 rng(1);
    const auto g = unlabeled(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
    const NormalizedAdjacency adj(g);
    const Matrix x = oracle::random_matrix(6, 3, rng);
    const Matrix sparse = adj.apply(x);
    const Matrix dense = matmul(adj.dense(), x);
    for (std::size_t i = 0; i < sparse.size(); ++i) EXPECT_NEAR(sparse.values()[i], dense.values()[i], 1e-14);
}

TEST(NormalizedAdjacency, DenseIsRefusedForLargeGraphs) {
    const std::size_t n = NormalizedAdjacency::kDenseLimit + 1;
    const auto g = unlabeled(n, {});
    EXPECT_THROW(NormalizedAdjacency(g).dense(), std::length_error);
}

TEST(GraphIo, RoundTripPreservesGraph) {
    TempDir dir("graph");
    const auto g = build_graph(3, {{0, 1}, {1, 2}}, {"alpha", "be\"ta\n", "γ"}, {0, 1, 0});
    save_graph(g, dir / "g.json");
    const auto back = load_graph(dir / "g.json");
    EXPECT_EQ(back, g);
    for (NodeId u = 0; u < 3; ++u) {
        EXPECT_TRUE(std::equal(back.neighbors(u).begin(), back.neighbors(u).end(), g.neighbors(u).begin(),
                               g.neighbors(u).end()));
    }
}

TEST(GraphIo, RejectsSelfLoopInFile) {
    const std::string text = R"({"num_nodes":2,"edges":[[0,0]],"labels":[0,0],"texts":["a","b"]})";
    EXPECT_EQ(kind_of([&] { graph_from_json_text(text); }), GraphError::Kind::SelfLoop);
}

TEST(GraphIo, RejectsLabelOutsideClassCount) {
    const std::string implicit = R"({"num_nodes":2,"edges":[],"labels":[0,5],"texts":["a","b"]})";
    const std::string declared = R"({"num_nodes":2,"num_classes":2,"edges":[],"labels":[0,2],"texts":["a","b"]})";
    EXPECT_EQ(kind_of([&] { graph_from_json_text(implicit); }), GraphError::Kind::Schema);
    EXPECT_EQ(kind_of([&] { graph_from_json_text(declared); }), GraphError::Kind::Schema);
}

TEST(GraphIo, RejectsMalformedDocuments) {
    using K = GraphError::Kind;
    EXPECT_EQ(kind_of([] { graph_from_json_text("{not json"); }), K::Malformed);
    EXPECT_EQ(kind_of([] { graph_from_json_text("[]"); }), K::Schema);
    EXPECT_EQ(kind_of([] { graph_from_json_text(R"({"num_nodes":1,"edges":[],"labels":[0]})"); }), K::Schema);
    EXPECT_EQ(kind_of([] { graph_from_json_text(R"({"num_nodes":2,"edges":[[1,0]],"labels":[0,0],"texts":["a","b"]})"); }),
              K::Schema);
    EXPECT_EQ(kind_of([] { graph_from_json_text(R"({"num_nodes":2,"edges":[[0,7]],"labels":[0,0],"texts":["a","b"]})"); }),
              K::OutOfRange);
    EXPECT_EQ(kind_of([] { load_graph("/nonexistent/graph.json"); }), K::Io);
}

TEST(GraphIo, WithEdgesKeepsTextsAndLabels) {
    const auto g = build_graph(3, {{0, 1}}, {"a", "b", "c"}, {0, 1, 1});
    const auto h = with_edges(g, {{1, 2}});
    EXPECT_EQ(h.texts(), g.texts());
    EXPECT_EQ(h.labels(), g.labels());
    EXPECT_EQ(h.edges(), (std::vector<Edge>{{1, 2}}));
}
