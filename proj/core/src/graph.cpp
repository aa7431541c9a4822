#include "sdmscr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sdmscr {

namespace {

using json = nlohmann::json;

std::string edge_str(std::size_t u, std::size_t v) {
    return "(" + std::to_string(u) + "," + std::to_string(v) + ")";
}

}  // namespace

TextAttributedGraph build_graph(std::size_t num_nodes, std::vector<Edge> edges,
                                std::vector<std::string> texts, std::vector<int> labels,
                                std::size_t num_classes) {
    using K = GraphError::Kind;
    if (texts.size() != num_nodes || labels.size() != num_nodes) {
        throw GraphError(K::LengthMismatch, "texts/labels length must equal num_nodes (" +
                                                std::to_string(num_nodes) + ")");
    }
    if (num_nodes > std::numeric_limits<NodeId>::max()) {
        throw GraphError(K::OutOfRange, "too many nodes");
    }

    std::set<int> distinct;
    for (int l : labels) {
        if (l < 0) throw GraphError(K::Schema, "negative label " + std::to_string(l));
        distinct.insert(l);
    }
    const std::size_t classes = num_classes ? num_classes : distinct.size();
    for (int l : labels) {
        if (static_cast<std::size_t>(l) >= classes) {
            throw GraphError(K::Schema, "label " + std::to_string(l) + " outside [0, " +
                                            std::to_string(classes) + ")");
        }
    }

    for (auto& e : edges) {
        if (e.u >= num_nodes || e.v >= num_nodes) {
            throw GraphError(K::OutOfRange, "edge endpoint out of range " + edge_str(e.u, e.v));
        }
        if (e.u == e.v) throw GraphError(K::SelfLoop, "self-loop at node " + std::to_string(e.u));
        if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end());
    if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
        throw GraphError(K::DuplicateEdge, "duplicate undirected edge " + edge_str(dup->u, dup->v));
    }

    TextAttributedGraph g;
    g.num_classes_ = classes;
    g.texts_ = std::move(texts);
    g.labels_ = std::move(labels);

    std::vector<std::size_t> degree(num_nodes, 0);
    for (const auto& e : edges) {
        ++degree[e.u];
        ++degree[e.v];
    }
    g.offsets_.assign(num_nodes + 1, 0);
    for (std::size_t i = 0; i < num_nodes; ++i) g.offsets_[i + 1] = g.offsets_[i] + degree[i];
    g.adjacency_.resize(g.offsets_.back());
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& e : edges) {
        g.adjacency_[cursor[e.u]++] = e.v;
        g.adjacency_[cursor[e.v]++] = e.u;
    }
    for (std::size_t i = 0; i < num_nodes; ++i) {
        std::sort(g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
                  g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
    }
    g.edges_ = std::move(edges);
    return g;
}

TextAttributedGraph with_edges(const TextAttributedGraph& g, std::vector<Edge> edges) {
    return build_graph(g.num_nodes(), std::move(edges), g.texts(), g.labels(), g.num_classes());
}

NormalizedAdjacency::NormalizedAdjacency(const TextAttributedGraph& g) {
    const std::size_t n = g.num_nodes();
    // Degrees including the self-loop.
    std::vector<double> deg(n);
    for (std::size_t i = 0; i < n; ++i) deg[i] = static_cast<double>(g.degree(static_cast<NodeId>(i)) + 1);
    offsets_.assign(n + 1, 0);
    columns_.reserve(2 * g.num_edges() + n);
    values_.reserve(2 * g.num_edges() + n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto nbrs = g.neighbors(static_cast<NodeId>(i));
        bool diag_done = false;
        auto push_diag = [&] {
            columns_.push_back(static_cast<NodeId>(i));
            values_.push_back(1.0 / deg[i]);
            diag_done = true;
        };
        for (NodeId j : nbrs) {
            if (!diag_done && j > i) push_diag();
            columns_.push_back(j);
            values_.push_back(1.0 / std::sqrt(deg[i] * deg[j]));
        }
        if (!diag_done) push_diag();
        offsets_[i + 1] = columns_.size();
    }
}

Matrix NormalizedAdjacency::apply(const Matrix& m) const {
    if (m.rows() != num_nodes()) throw ShapeError("NormalizedAdjacency::apply: row count mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < num_nodes(); ++i) {
        double* __restrict o = out.row(i).data();
        const auto cols = row_columns(static_cast<NodeId>(i));
        const auto vals = row_values(static_cast<NodeId>(i));
        const std::size_t width = m.cols();
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double* __restrict src = m.row(cols[k]).data();
            const double w = vals[k];
            for (std::size_t c = 0; c < width; ++c) o[c] += w * src[c];
        }
    }
    return out;
}

Matrix NormalizedAdjacency::dense() const {
    const std::size_t n = num_nodes();
    if (n > kDenseLimit) {
        throw std::length_error("dense adjacency refused above " + std::to_string(kDenseLimit) +
                                " nodes");
    }
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cols = row_columns(static_cast<NodeId>(i));
        const auto vals = row_values(static_cast<NodeId>(i));
        for (std::size_t k = 0; k < cols.size(); ++k) d(i, cols[k]) = vals[k];
    }
    return d;
}

NormalizedAdjacency normalized_adjacency(const TextAttributedGraph& g) {
    return NormalizedAdjacency(g);
}

TextAttributedGraph graph_from_json_text(const std::string& text) {
    using K = GraphError::Kind;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw GraphError(K::Malformed, std::string("graph file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw GraphError(K::Schema, "graph file must hold a JSON object");
    for (const char* key : {"num_nodes", "edges", "labels", "texts"}) {
        if (!doc.contains(key)) throw GraphError(K::Schema, std::string("missing key '") + key + "'");
    }
    if (!doc["num_nodes"].is_number_unsigned()) {
        throw GraphError(K::Schema, "num_nodes must be a non-negative integer");
    }
    const auto n = doc["num_nodes"].get<std::size_t>();

    std::vector<Edge> edges;
    if (!doc["edges"].is_array()) throw GraphError(K::Schema, "edges must be an array");
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            throw GraphError(K::Schema, "each edge must be a pair of integers");
        }
        const auto u = e[0].get<std::int64_t>();
        const auto v = e[1].get<std::int64_t>();
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
            throw GraphError(K::OutOfRange, "edge endpoint out of range " + edge_str(u, v));
        }
        if (u == v) throw GraphError(K::SelfLoop, "self-loop at node " + std::to_string(u));
        if (u > v) {
            throw GraphError(K::Schema, "edge " + edge_str(u, v) + " must be listed with u < v");
        }
        edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }

    std::vector<int> labels;
    if (!doc["labels"].is_array()) throw GraphError(K::Schema, "labels must be an array");
    for (const auto& l : doc["labels"]) {
        if (!l.is_number_integer()) throw GraphError(K::Schema, "labels must be integers");
        labels.push_back(l.get<int>());
    }
    std::vector<std::string> texts;
    if (!doc["texts"].is_array()) throw GraphError(K::Schema, "texts must be an array");
    for (const auto& t : doc["texts"]) {
        if (!t.is_string()) throw GraphError(K::Schema, "texts must be strings");
        texts.push_back(t.get<std::string>());
    }
    std::size_t num_classes = 0;
    if (doc.contains("num_classes")) {
        if (!doc["num_classes"].is_number_unsigned() || doc["num_classes"].get<std::size_t>() == 0) {
            throw GraphError(K::Schema, "num_classes must be a positive integer");
        }
        num_classes = doc["num_classes"].get<std::size_t>();
    }
    return build_graph(n, std::move(edges), std::move(texts), std::move(labels), num_classes);
}

std::string graph_to_json_text(const TextAttributedGraph& g) {
    json doc;
    doc["num_nodes"] = g.num_nodes();
    doc["num_classes"] = g.num_classes();
    json edges = json::array();
    for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
    doc["edges"] = std::move(edges);
    doc["labels"] = g.labels();
    doc["texts"] = g.texts();
    return doc.dump() + "\n";
}

TextAttributedGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphError(GraphError::Kind::Io, "cannot open graph file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return graph_from_json_text(buf.str());
}

void save_graph(const TextAttributedGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw GraphError(GraphError::Kind::Io, "cannot write graph file " + path.string());
    out << graph_to_json_text(g);
    if (!out) throw GraphError(GraphError::Kind::Io, "write failed for " + path.string());
}

}  // namespace sdmscr
