#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <queue>
#include <random>

#include "vcut/cut_pairs_dep.hpp"
#include "vcut/error.hpp"
#include "vcut/generators.hpp"
#include "vcut/oracle.hpp"

using namespace vcut;

namespace {

std::size_t sz(Vertex v) { return static_cast<std::size_t>(v); }

struct Pipeline {
    Graph g;
    Net net;
    CutVertexResult cv;
    DependentResult dep;

    Pipeline(Graph graph, std::uint64_t seed = 5) : g(std::move(graph)), net(g, NetConfig{}) {
        CutVertexOptions opt;
        opt.master_seed = seed;
        cv = detect_cut_vertices(net, opt);
        dep = detect_dependent_pairs(net, cv.pre);
    }
};

std::set<oracle::VertexPair> dependent_oracle(const Graph& g, const BfsTree& t) {
    std::set<oracle::VertexPair> out;
    for (auto [x, y] : oracle::all_cut_pairs(g))
        if (oracle::on_root_path(t, x, y) || oracle::on_root_path(t, y, x)) out.insert({x, y});
    return out;
}

std::set<oracle::VertexPair> found(const DependentResult& r) {
    std::set<oracle::VertexPair> out;
    for (auto [x, y] : r.pairs) out.insert({std::min(x, y), std::max(x, y)});
    return out;
}

// Centralized twin: BFS over (T \ {y}) plus Ẽ(y) from the new root.
struct Twin {
    std::vector<Vertex> parent;
    std::vector<int> size;
};

Twin twin_tree(const Preprocessed& pre, const DependentRun& run) {
    int n = pre.n();
    std::vector<std::vector<Vertex>> adj(sz(n));
    for (Vertex v = 0; v < n; ++v) {
        Vertex p = pre[v].parent;
        if (p == kNone || p == run.y || v == run.y) continue;
        adj[sz(v)].push_back(p);
        adj[sz(p)].push_back(v);
    }
    for (const auto& e : pre[run.y].spanning_edges) {
        adj[sz(e.u)].push_back(e.v);
        adj[sz(e.v)].push_back(e.u);
    }
    Vertex root = run.ct.has_outside ? pre.root : run.ct.inner[sz(run.ct.root)];
    Twin t;
    t.parent.assign(sz(n), kNone);
    t.size.assign(sz(n), 1);
    std::vector<char> seen(sz(n), 0);
    std::vector<Vertex> order{root};
    seen[sz(root)] = 1;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (Vertex w : adj[sz(order[i])])
            if (!seen[sz(w)]) {
                seen[sz(w)] = 1;
                t.parent[sz(w)] = order[i];
                order.push_back(w);
            }
    REQUIRE(static_cast<int>(order.size()) == n - 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (t.parent[sz(*it)] != kNone) t.size[sz(t.parent[sz(*it)])] += t.size[sz(*it)];
    return t;
}

bool twin_ancestor(const Twin& t, Vertex a, Vertex b) {
    for (Vertex w = b; w != kNone; w = t.parent[sz(w)])
        if (w == a) return true;
    return false;
}

Graph ladder_with_tail_cycle() { return gen::ladder(6); }

}  // namespace

TEST_CASE("component tree examples") {
    auto g = gen::cycle(6);
    Net net(g, NetConfig{});
    auto cv = detect_cut_vertices(net, CutVertexOptions{});
    SUBCASE("a leaf has only the outside component") {
        Vertex leaf = kNone;
        for (Vertex v = 0; v < g.n(); ++v)
            if (cv.pre[v].children.empty()) leaf = v;
        auto ct = build_component_tree(cv.pre, leaf);
        CHECK(ct.count() == 1);
        CHECK(ct.has_outside);
    }
    SUBCASE("root of a cycle") {
        auto ct = build_component_tree(cv.pre, 0);
        CHECK_FALSE(ct.has_outside);
        CHECK(ct.count() == 3);
        CHECK(ct.inner[sz(ct.root)] == ct.head[sz(ct.root)]);
        CHECK(ct.tilde_size[sz(ct.root)] == 5);
    }
    SUBCASE("cut vertices are rejected") {
        auto p = gen::path(4);
        Net pn(p, NetConfig{});
        auto pcv = detect_cut_vertices(pn, CutVertexOptions{});
        try {
            (void)build_component_tree(pcv.pre, 1);
            FAIL("expected NotSpanning");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NotSpanning);
        }
    }
}

TEST_CASE("dependent examples") {
    SUBCASE("C4: root and opposite vertex") {
        Pipeline p(gen::cycle(4));
        CHECK(found(p.dep) == std::set<oracle::VertexPair>{{0, 2}});
        bool seen = false;
        for (const auto& run : p.dep.runs)
            if (run.y == 0) {
                CHECK(run[2].paired);
                seen = true;
            }
        CHECK(seen);
    }
    SUBCASE("C5") {
        Pipeline p(gen::cycle(5));
        CHECK(found(p.dep) == dependent_oracle(p.g, p.cv.pre.tree));
        CHECK_FALSE(found(p.dep).empty());
    }
    SUBCASE("K4") {
        Pipeline p(gen::complete(4));
        CHECK(p.dep.pairs.empty());
    }
    SUBCASE("ladder") {
        Pipeline p(ladder_with_tail_cycle());
        CHECK(found(p.dep) == dependent_oracle(p.g, p.cv.pre.tree));
    }
}

TEST_CASE("oracle cross-check with the centralized twin") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 60; ++i) {
        int n = 6 + static_cast<int>(rng() % 27);
        auto g = gen::biconnected_random(n, rng());
        Pipeline p(g, rng());
        const auto& pre = p.cv.pre;
        CHECK(found(p.dep) == dependent_oracle(g, pre.tree));
        for (const auto& run : p.dep.runs) {
            auto t = twin_tree(pre, run);
            for (const auto& [v, st] : run.at) {
                CHECK(st.parent == t.parent[sz(v)]);
                CHECK(st.subtree_size == t.size[sz(v)]);
                Vertex tp = st.parent;
                bool tree_edge = pre[v].parent == tp || (tp != kNone && pre[tp].parent == v);
                bool joining = false;
                for (const auto& e : pre[run.y].spanning_edges) joining |= canonical(v, tp) == e.edge();
                if (tp != kNone) CHECK((tree_edge || joining));
                std::vector<Vertex> removed{v, run.y};
                CHECK(st.paired == !oracle::connected_minus(g, removed));
            }
            // ancestry over hybrid labels equals ancestry in the twin, for every pair of vertices other than y
            for (Vertex a = 0; a < n; ++a)
                for (Vertex b = 0; b < n; ++b) {
                    if (a == run.y || b == run.y) continue;
                    CHECK(is_ancestor(run.label_of(pre, a), run.label_of(pre, b)) == twin_ancestor(t, a, b));
                }
            // outside vertices keep their T-labels, also as seen by their neighbors inside
            for (const auto& [v, st] : run.at)
                for (const auto& [u, label] : st.neighbor_label)
                    if (!run.in_subtree[sz(u)]) CHECK(label == pre[u].label);
        }
    }
}

TEST_CASE("subtree sketches match a centralized recomputation") {
    auto g = gen::biconnected_random(24, 9);
    Pipeline p(g, 3);
    const auto& pre = p.cv.pre;
    int cap = 2 * pre.label_capacity;
    for (const auto& run : p.dep.runs) {
        auto t = twin_tree(pre, run);
        Sketch all(p.dep.params, run[run.at.begin()->first].own_sketch.tag());
        for (const auto& [x, st] : run.at) {
            Sketch expect(p.dep.params, st.own_sketch.tag());
            for (Vertex v = 0; v < g.n(); ++v) {
                if (v == run.y || !twin_ancestor(t, x, v)) continue;
                for (Vertex u : g.adj(v)) {
                    if (u == run.y) continue;
                    auto eid = encode_eid(p.dep.params, run.seeds, v, u, label_annotation(run.label_of(pre, v), cap, pre.word), label_annotation(run.label_of(pre, u), cap, pre.word));
                    expect.toggle_edge(run.seeds, v, u, eid);
                }
            }
            CHECK(st.subtree_sketch == expect);
            if (st.children.empty()) CHECK(st.subtree_sketch == st.own_sketch);
            all ^= st.own_sketch;
        }
        // inside sketches plus the outside portion cancel
        for (Vertex v = 0; v < g.n(); ++v) {
            if (v == run.y || run.in_subtree[sz(v)]) continue;
            for (Vertex u : g.adj(v)) {
                if (u == run.y) continue;
                auto eid = encode_eid(p.dep.params, run.seeds, v, u, label_annotation(run.label_of(pre, v), cap, pre.word), label_annotation(run.label_of(pre, u), cap, pre.word));
                all.toggle_edge(run.seeds, v, u, eid);
            }
        }
        CHECK(all.is_zero());
    }
}

TEST_CASE("footprints and per-edge overlap") {
    auto g = gen::biconnected_random(40, 21);
    Pipeline p(g, 8);
    const auto& stages = p.net.stages();
    const StageReport* dep = nullptr;
    for (const auto& s : stages)
        if (s.name == "dependent-pairs") dep = &s;
    REQUIRE(dep != nullptr);
    CHECK(dep->parallel);
    CHECK(dep->groups == static_cast<int>(p.dep.runs.size()));
    const auto& t = p.cv.pre.tree;
    for (std::size_t e = 0; e < g.m(); ++e) {
        auto [u, v] = g.edges()[e];
        CHECK(dep->edge_groups[e] <= t.depth[sz(u)] + t.depth[sz(v)] + 2);
    }
    CHECK(dep->rounds == dep->dilation + dep->congestion);
}
