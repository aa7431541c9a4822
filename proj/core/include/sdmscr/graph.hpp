#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdmscr/matrix.hpp"

namespace sdmscr {

using NodeId = std::uint32_t;

struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    bool operator==(const Edge&) const = default;
    auto operator<=>(const Edge&) const = default;
};

class GraphError : public std::runtime_error {
public:
    enum class Kind { OutOfRange, LengthMismatch, SelfLoop, DuplicateEdge, Schema, Malformed, Io };

    GraphError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Undirected simple graph with a text and a class label per node.
/// Immutable once built; neighbor lists are sorted and symmetric.
class TextAttributedGraph {
public:
    TextAttributedGraph() = default;

    std::size_t num_nodes() const { return texts_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    std::size_t num_classes() const { return num_classes_; }

    /// Canonical edge list: u < v, sorted lexicographically.
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::string>& texts() const { return texts_; }
    const std::vector<int>& labels() const { return labels_; }

    std::span<const NodeId> neighbors(NodeId u) const {
        return {adjacency_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
    }
    std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }

    bool operator==(const TextAttributedGraph&) const = default;

    friend TextAttributedGraph build_graph(std::size_t, std::vector<Edge>, std::vector<std::string>,
                                           std::vector<int>, std::size_t);

private:
    std::size_t num_classes_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::string> texts_;
    std::vector<int> labels_;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> adjacency_;
};

/// Validates and builds a graph. Edge orientation is free; (u, v) and (v, u)
/// are the same undirected edge and listing both is a duplicate.
/// `num_classes` of 0 means "number of distinct labels", in which case labels
/// must cover [0, C) without gaps.
TextAttributedGraph build_graph(std::size_t num_nodes, std::vector<Edge> edges,
                                std::vector<std::string> texts, std::vector<int> labels,
                                std::size_t num_classes = 0);

/// Sparse Â = D̃^{-1/2}(A+I)D̃^{-1/2}, stored as CSR including the diagonal.
class NormalizedAdjacency {
public:
    static constexpr std::size_t kDenseLimit = 4000;

    explicit NormalizedAdjacency(const TextAttributedGraph& g);

    std::size_t num_nodes() const { return offsets_.size() - 1; }

    /// Â·M
    Matrix apply(const Matrix& m) const;
    /// Dense copy; refused above kDenseLimit nodes.
    Matrix dense() const;

    std::span<const NodeId> row_columns(NodeId i) const {
        return {columns_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::span<const double> row_values(NodeId i) const {
        return {values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> columns_;
    std::vector<double> values_;
};

NormalizedAdjacency normalized_adjacency(const TextAttributedGraph& g);

/// Returns a copy of `g` with a different edge set (texts and labels kept).
TextAttributedGraph with_edges(const TextAttributedGraph& g, std::vector<Edge> edges);

TextAttributedGraph load_graph(const std::filesystem::path& path);
void save_graph(const TextAttributedGraph& g, const std::filesystem::path& path);

TextAttributedGraph graph_from_json_text(const std::string& text);
std::string graph_to_json_text(const TextAttributedGraph& g);

}  // namespace sdmscr
