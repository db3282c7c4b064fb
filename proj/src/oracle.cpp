#include "vcut/oracle.hpp"

#include <algorithm>
#include <functional>

namespace vcut::oracle {

Components induced_components(const Graph& g, std::span<const char> members) {
    Components c;
    c.label.assign(static_cast<std::size_t>(g.n()), -1);
    std::vector<Vertex> stack;
    for (Vertex s = 0; s < g.n(); ++s) {
        if (!members[static_cast<std::size_t>(s)] || c.label[static_cast<std::size_t>(s)] >= 0) continue;
        c.label[static_cast<std::size_t>(s)] = c.count;
        stack.push_back(s);
        while (!stack.empty()) {
            Vertex v = stack.back();
            stack.pop_back();
            for (Vertex w : g.adj(v)) {
                if (members[static_cast<std::size_t>(w)] && c.label[static_cast<std::size_t>(w)] < 0) {
                    c.label[static_cast<std::size_t>(w)] = c.count;
                    stack.push_back(w);
                }
            }
        }
        ++c.count;
    }
    return c;
}

Components components_minus(const Graph& g, std::span<const Vertex> removed) {
    std::vector<char> members(static_cast<std::size_t>(g.n()), 1);
    for (Vertex r : removed) members[static_cast<std::size_t>(r)] = 0;
    return induced_components(g, members);
}

bool connected_minus(const Graph& g, std::span<const Vertex> removed) { return components_minus(g, removed).count <= 1; }

std::set<Vertex> all_cut_vertices(const Graph& g) {
    std::set<Vertex> out;
    for (Vertex x = 0; x < g.n(); ++x) {
        Vertex removed[] = {x};
        if (!connected_minus(g, removed)) out.insert(x);
    }
    return out;
}

std::set<VertexPair> all_cut_pairs(const Graph& g) {
    std::set<VertexPair> out;
    for (Vertex x = 0; x < g.n(); ++x) {
        for (Vertex y = x + 1; y < g.n(); ++y) {
            Vertex removed[] = {x, y};
            if (!connected_minus(g, removed)) out.insert({x, y});
        }
    }
    return out;
}

std::set<Vertex> articulation_points_lowpoint(const Graph& g) {
    auto n = static_cast<std::size_t>(g.n());
    std::vector<int> disc(n, -1), low(n, 0);
    std::set<Vertex> out;
    int timer = 0;
    std::function<void(Vertex, Vertex)> dfs = [&](Vertex v, Vertex parent) {
        disc[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = timer++;
        int kids = 0;
        for (Vertex w : g.adj(v)) {
            if (w == parent) continue;
            if (disc[static_cast<std::size_t>(w)] >= 0) {
                low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], disc[static_cast<std::size_t>(w)]);
                continue;
            }
            ++kids;
            dfs(w, v);
            low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], low[static_cast<std::size_t>(w)]);
            if (parent != kNone && low[static_cast<std::size_t>(w)] >= disc[static_cast<std::size_t>(v)]) out.insert(v);
        }
        if (parent == kNone && kids > 1) out.insert(v);
    };
    for (Vertex v = 0; v < g.n(); ++v)
        if (disc[static_cast<std::size_t>(v)] < 0) dfs(v, kNone);
    return out;
}

Vertex naive_lca(const BfsTree& t, Vertex a, Vertex b) {
    auto pa = root_path(t, a), pb = root_path(t, b);
    Vertex lca = kNone;
    for (std::size_t i = 0; i < std::min(pa.size(), pb.size()) && pa[i] == pb[i]; ++i) lca = pa[i];
    return lca;
}

bool on_root_path(const BfsTree& t, Vertex a, Vertex b) {
    for (Vertex w = b; w != kNone; w = t.parent[static_cast<std::size_t>(w)])
        if (w == a) return true;
    return false;
}

}  // namespace vcut::oracle
