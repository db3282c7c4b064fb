#include "vcut/graph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "vcut/error.hpp"

namespace vcut {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DuplicateEdge: return "DuplicateEdge";
        case ErrorKind::SelfLoop: return "SelfLoop";
        case ErrorKind::Disconnected: return "Disconnected";
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::InvalidParams: return "InvalidParams";
        case ErrorKind::TagMismatch: return "TagMismatch";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::NonTermination: return "NonTermination";
        case ErrorKind::NotANeighbor: return "NotANeighbor";
        case ErrorKind::FootprintViolation: return "FootprintViolation";
        case ErrorKind::ExtractionExhausted: return "ExtractionExhausted";
        case ErrorKind::NotSpanning: return "NotSpanning";
        case ErrorKind::Precondition: return "Precondition";
    }
    return "Unknown";
}

int Graph::max_degree() const {
    int best = 0;
    for (const auto& a : adj_) best = std::max(best, static_cast<int>(a.size()));
    return best;
}

bool Graph::has_edge(Vertex a, Vertex b) const { return edge_index(a, b) >= 0; }

int Graph::edge_index(Vertex a, Vertex b) const {
    if (a < 0 || b < 0 || a >= n() || b >= n()) return -1;
    const auto& row = adj_[static_cast<std::size_t>(a)];
    auto it = std::lower_bound(row.begin(), row.end(), b);
    if (it == row.end() || *it != b) return -1;
    return adj_edge_[static_cast<std::size_t>(a)][static_cast<std::size_t>(it - row.begin())];
}

bool Graph::connected() const {
    if (n() <= 1) return true;
    std::vector<char> seen(static_cast<std::size_t>(n()), 0);
    std::vector<Vertex> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        for (Vertex w : adj(v)) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == n();
}

Graph make_graph(int n, std::vector<Edge> edges, bool require_connected) {
    int max_id = -1;
    for (auto& e : edges) {
        if (e.u < 0 || e.v < 0) throw Error(ErrorKind::InvalidInput, "negative vertex id");
        if (e.u == e.v) throw Error(ErrorKind::SelfLoop, "self-loop at " + std::to_string(e.u));
        e = canonical(e.u, e.v);
        max_id = std::max(max_id, e.v);
    }
    if (n <= 0) n = max_id + 1;
    if (max_id >= n) throw Error(ErrorKind::InvalidInput, "vertex id " + std::to_string(max_id) + " out of range");
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (edges[i] == edges[i - 1])
            throw Error(ErrorKind::DuplicateEdge, "edge (" + std::to_string(edges[i].u) + "," + std::to_string(edges[i].v) + ")");
    }
    Graph g;
    g.adj_.assign(static_cast<std::size_t>(n), {});
    g.adj_edge_.assign(static_cast<std::size_t>(n), {});
    for (const auto& e : edges) {
        g.adj_[static_cast<std::size_t>(e.u)].push_back(e.v);
        g.adj_[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    for (auto& row : g.adj_) std::sort(row.begin(), row.end());
    g.edges_ = std::move(edges);
    for (Vertex v = 0; v < n; ++v) {
        auto& ids = g.adj_edge_[static_cast<std::size_t>(v)];
        for (Vertex w : g.adj_[static_cast<std::size_t>(v)]) {
            Edge e = canonical(v, w);
            auto it = std::lower_bound(g.edges_.begin(), g.edges_.end(), e);
            ids.push_back(static_cast<int>(it - g.edges_.begin()));
        }
    }
    if (require_connected && !g.connected()) throw Error(ErrorKind::Disconnected, "graph is not connected");
    return g;
}

Graph load_graph(std::span<const Edge> edges, bool require_connected) {
    return make_graph(0, std::vector<Edge>(edges.begin(), edges.end()), require_connected);
}

Graph parse_graph_text(const std::string& text, bool require_connected) {
    auto first = std::find_if(text.begin(), text.end(), [](unsigned char c) { return !std::isspace(c); });
    if (first != text.end() && *first == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorKind::InvalidInput, ex.what());
        }
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) edges.push_back({e.at(0).get<Vertex>(), e.at(1).get<Vertex>()});
        int n = j.value("n", 0);
        return make_graph(n, std::move(edges), require_connected);
    }
    std::vector<Edge> edges;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        long long u = 0, v = 0;
        if (!(ls >> u)) continue;
        if (!(ls >> v)) throw Error(ErrorKind::InvalidInput, "line " + std::to_string(lineno) + ": expected `u v`");
        edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v)});
    }
    return make_graph(0, std::move(edges), require_connected);
}

Graph read_graph_file(const std::string& path, bool require_connected) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_graph_text(buf.str(), require_connected);
}

std::string graph_to_json(const Graph& g) {
    nlohmann::json j;
    j["n"] = g.n();
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
    return j.dump();
}

std::uint64_t graph_fingerprint(const Graph& g) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(g.n()));
    for (const auto& e : g.edges()) {
        mix(static_cast<std::uint64_t>(e.u));
        mix(static_cast<std::uint64_t>(e.v));
    }
    return h;
}

int BfsTree::height() const {
    int h = 0;
    for (int d : depth) h = std::max(h, d);
    return h;
}

BfsTree bfs_tree(const Graph& g, Vertex s) {
    auto n = static_cast<std::size_t>(g.n());
    BfsTree t;
    t.root = s;
    t.parent.assign(n, kNone);
    t.depth.assign(n, -1);
    t.children.assign(n, {});
    std::queue<Vertex> q;
    q.push(s);
    t.depth[static_cast<std::size_t>(s)] = 0;
    while (!q.empty()) {
        Vertex v = q.front();
        q.pop();
        t.order.push_back(v);
        for (Vertex w : g.adj(v)) {
            if (t.depth[static_cast<std::size_t>(w)] < 0) {
                t.depth[static_cast<std::size_t>(w)] = t.depth[static_cast<std::size_t>(v)] + 1;
                q.push(w);
            }
        }
    }
    if (t.order.size() != n) throw Error(ErrorKind::Disconnected, "bfs_tree on a disconnected graph");
    // parent: the smallest-id neighbor one level up
    for (Vertex v : t.order) {
        if (v == s) continue;
        for (Vertex w : g.adj(v)) {
            if (t.depth[static_cast<std::size_t>(w)] + 1 == t.depth[static_cast<std::size_t>(v)]) {
                t.parent[static_cast<std::size_t>(v)] = w;
                break;
            }
        }
    }
    for (Vertex v = 0; v < g.n(); ++v)
        if (v != s) t.children[static_cast<std::size_t>(t.parent[static_cast<std::size_t>(v)])].push_back(v);
    return t;
}

HeavyLight heavy_light(const BfsTree& t) {
    auto n = static_cast<std::size_t>(t.n());
    HeavyLight hl;
    hl.heavy_child.assign(n, kNone);
    hl.is_heavy.assign(n, 0);
    hl.subtree_size.assign(n, 1);
    for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
        Vertex v = *it;
        int best = 0;
        for (Vertex c : t.children[static_cast<std::size_t>(v)]) {
            int sz = hl.subtree_size[static_cast<std::size_t>(c)];
            hl.subtree_size[static_cast<std::size_t>(v)] += sz;
            // children are sorted, so strict comparison keeps the smallest id on ties
            if (sz > best) {
                best = sz;
                hl.heavy_child[static_cast<std::size_t>(v)] = c;
            }
        }
        if (hl.heavy_child[static_cast<std::size_t>(v)] != kNone) hl.is_heavy[static_cast<std::size_t>(hl.heavy_child[static_cast<std::size_t>(v)])] = 1;
    }
    return hl;
}

int AncLabel::length() const {
    int len = -1;
    for (const auto& e : entries) len += 1 + e.gap;
    return len;
}

std::vector<Vertex> root_path(const BfsTree& t, Vertex v) {
    std::vector<Vertex> path;
    for (Vertex w = v; w != kNone; w = t.parent[static_cast<std::size_t>(w)]) path.push_back(w);
    std::reverse(path.begin(), path.end());
    return path;
}

AncLabel anc_label(const BfsTree& t, const HeavyLight& hl, Vertex v) {
    AncLabel label;
    for (Vertex w : root_path(t, v)) {
        if (w == t.root || !hl.is_heavy[static_cast<std::size_t>(w)])
            label.entries.push_back({w, 0});
        else
            ++label.entries.back().gap;
    }
    return label;
}

bool is_ancestor(const AncLabel& a, const AncLabel& b) {
    if (a.empty() || b.empty()) return false;
    std::size_t p = a.entries.size() - 1;
    if (p >= b.entries.size()) return false;
    for (std::size_t i = 0; i <= p; ++i) {
        if (a.entries[i].vertex != b.entries[i].vertex) return false;
        if (i < p && a.entries[i].gap != b.entries[i].gap) return false;
    }
    return a.entries[p].gap <= b.entries[p].gap;
}

AncLabel lca_label(const AncLabel& a, const AncLabel& b) {
    AncLabel out;
    std::size_t limit = std::min(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (a.entries[i].vertex != b.entries[i].vertex) break;
        int ga = a.entries[i].gap, gb = b.entries[i].gap;
        out.entries.push_back({a.entries[i].vertex, std::min(ga, gb)});
        if (ga != gb) break;
    }
    return out;
}

AncLabel extend_label(const AncLabel& parent, Vertex child, bool child_is_heavy) {
    AncLabel out = parent;
    if (child_is_heavy && !out.empty())
        ++out.entries.back().gap;
    else
        out.entries.push_back({child, 0});
    return out;
}

AncLabel concat_labels(const AncLabel& head, const AncLabel& tail) {
    if (head.empty()) return tail;
    if (tail.empty()) return head;
    AncLabel out = head;
    out.entries.back().gap += tail.entries.front().gap;
    out.entries.insert(out.entries.end(), tail.entries.begin() + 1, tail.entries.end());
    return out;
}

Vertex light_child_toward(const AncLabel& a, const AncLabel& b) {
    std::size_t p = a.entries.size() - 1;
    if (b.entries[p].gap > a.entries[p].gap) return kNone;
    return b.entries[p + 1].vertex;
}

int light_capacity(int n) { return static_cast<int>(std::bit_width(static_cast<unsigned>(std::max(n, 1)))); }

int label_bits(int capacity, int word) { return width_for(static_cast<std::uint64_t>(capacity)) + capacity * 2 * word; }

void encode_label(BitVec& out, const AncLabel& label, int capacity, int word) {
    if (static_cast<int>(label.entries.size()) > capacity) throw Error(ErrorKind::Precondition, "label exceeds light capacity");
    out.push(label.entries.size(), width_for(static_cast<std::uint64_t>(capacity)));
    for (int i = 0; i < capacity; ++i) {
        if (i < static_cast<int>(label.entries.size())) {
            out.push(static_cast<std::uint64_t>(label.entries[static_cast<std::size_t>(i)].vertex), word);
            out.push(static_cast<std::uint64_t>(label.entries[static_cast<std::size_t>(i)].gap), word);
        } else {
            out.push(0, 2 * word);
        }
    }
}

AncLabel decode_label(BitReader& in, int capacity, int word) {
    AncLabel label;
    auto count = static_cast<int>(in.read(width_for(static_cast<std::uint64_t>(capacity))));
    for (int i = 0; i < capacity; ++i) {
        auto v = static_cast<Vertex>(in.read(word));
        auto g = static_cast<int>(in.read(word));
        if (i < count) label.entries.push_back({v, g});
    }
    return label;
}

int edge_depth(const BfsTree& t, Edge e) {
    Vertex a = e.u, b = e.v;
    while (t.depth[static_cast<std::size_t>(a)] > t.depth[static_cast<std::size_t>(b)]) a = t.parent[static_cast<std::size_t>(a)];
    while (t.depth[static_cast<std::size_t>(b)] > t.depth[static_cast<std::size_t>(a)]) b = t.parent[static_cast<std::size_t>(b)];
    while (a != b) {
        a = t.parent[static_cast<std::size_t>(a)];
        b = t.parent[static_cast<std::size_t>(b)];
    }
    return t.depth[static_cast<std::size_t>(a)];
}

}  // namespace vcut
