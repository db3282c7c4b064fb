#pragma once

#include <set>
#include <utility>
#include <vector>

#include "vcut/graph.hpp"

namespace vcut::oracle {

using VertexPair = std::pair<Vertex, Vertex>;

struct Components {
    // Component index per vertex; -1 for removed vertices.
    std::vector<int> label;
    int count = 0;
};

// Connected components of G minus `removed`.
Components components_minus(const Graph& g, std::span<const Vertex> removed);
bool connected_minus(const Graph& g, std::span<const Vertex> removed);

std::set<Vertex> all_cut_vertices(const Graph& g);
std::set<VertexPair> all_cut_pairs(const Graph& g);

// Second witness for articulation points via DFS low-points.
std::set<Vertex> articulation_points_lowpoint(const Graph& g);

// Components of the subgraph induced by `members`; label -1 outside.
Components induced_components(const Graph& g, std::span<const char> members);

// Naive LCA by walking parent pointers.
Vertex naive_lca(const BfsTree& t, Vertex a, Vertex b);
bool on_root_path(const BfsTree& t, Vertex a, Vertex b);

}  // namespace vcut::oracle
