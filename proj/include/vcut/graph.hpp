#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcut/bits.hpp"

namespace vcut {

using Vertex = std::int32_t;
inline constexpr Vertex kNone = -1;

struct Edge {
    Vertex u = 0;
    Vertex v = 0;
    auto operator<=>(const Edge&) const = default;
};

inline Edge canonical(Vertex a, Vertex b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Simple undirected graph on dense ids with sorted adjacency.
class Graph {
public:
    Graph() = default;

    int n() const { return static_cast<int>(adj_.size()); }
    std::size_t m() const { return edges_.size(); }
    std::span<const Vertex> adj(Vertex v) const { return adj_[static_cast<std::size_t>(v)]; }
    const std::vector<Edge>& edges() const { return edges_; }
    int degree(Vertex v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }
    int max_degree() const;
    bool has_edge(Vertex a, Vertex b) const;
    // Index of {a,b} in edges(), or -1.
    int edge_index(Vertex a, Vertex b) const;
    // Edge index of the k-th neighbor of v.
    int edge_at(Vertex v, std::size_t k) const { return adj_edge_[static_cast<std::size_t>(v)][k]; }
    bool connected() const;
    // Word size used for congestion accounting.
    int word() const { return word_bits(n()); }

    friend Graph make_graph(int n, std::vector<Edge> edges, bool require_connected);

private:
    std::vector<std::vector<Vertex>> adj_;
    std::vector<std::vector<int>> adj_edge_;
    std::vector<Edge> edges_;
};

// Builds a canonical graph; n = 0 infers the vertex count from the largest id.
Graph make_graph(int n, std::vector<Edge> edges, bool require_connected = true);
Graph load_graph(std::span<const Edge> edges, bool require_connected = true);

// Edge-list text (`u v` per line, `#` comments) or JSON {n, edges}.
Graph parse_graph_text(const std::string& text, bool require_connected = true);
Graph read_graph_file(const std::string& path, bool require_connected = true);
std::string graph_to_json(const Graph& g);
std::uint64_t graph_fingerprint(const Graph& g);

struct BfsTree {
    Vertex root = 0;
    std::vector<Vertex> parent;
    std::vector<int> depth;
    std::vector<std::vector<Vertex>> children;
    std::vector<Vertex> order;  // BFS visiting order

    int n() const { return static_cast<int>(parent.size()); }
    int height() const;
};

BfsTree bfs_tree(const Graph& g, Vertex s);

struct HeavyLight {
    std::vector<Vertex> heavy_child;
    std::vector<char> is_heavy;
    std::vector<int> subtree_size;
};

HeavyLight heavy_light(const BfsTree& t);

// One light vertex on a compressed path plus the number of heavy vertices that
// follow it before the next light vertex (or the path end, inclusive).
struct PathEntry {
    Vertex vertex = kNone;
    int gap = 0;
    auto operator<=>(const PathEntry&) const = default;
};

// Compressed root path. The first entry is the start vertex (s for T-labels).
struct AncLabel {
    std::vector<PathEntry> entries;

    bool empty() const { return entries.empty(); }
    Vertex start() const { return entries.front().vertex; }
    // Number of edges from the start vertex to the labelled vertex.
    int length() const;
    bool operator==(const AncLabel&) const = default;
};

AncLabel anc_label(const BfsTree& t, const HeavyLight& hl, Vertex v);
bool is_ancestor(const AncLabel& a, const AncLabel& b);
// Label of the deepest common vertex; requires a common start.
AncLabel lca_label(const AncLabel& a, const AncLabel& b);
// Extends a label by one step to a child classified heavy or light.
AncLabel extend_label(const AncLabel& parent, Vertex child, bool child_is_heavy);
// Joins `head` (ending at vertex z) with `tail`, a compressed path that starts at z.
AncLabel concat_labels(const AncLabel& head, const AncLabel& tail);

// For a proper ancestor a of b: the light child of a toward b, or kNone if the
// step from a toward b goes to a's heavy child.
Vertex light_child_toward(const AncLabel& a, const AncLabel& b);

int label_bits(int capacity, int word);
void encode_label(BitVec& out, const AncLabel& label, int capacity, int word);
AncLabel decode_label(BitReader& in, int capacity, int word);
int light_capacity(int n);

int edge_depth(const BfsTree& t, Edge e);

// Vertices on the tree path from the root to v, root first.
std::vector<Vertex> root_path(const BfsTree& t, Vertex v);

}  // namespace vcut
