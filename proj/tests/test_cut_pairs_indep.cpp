#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "vcut/cut_pairs_dep.hpp"
#include "vcut/cut_pairs_indep.hpp"
#include "vcut/error.hpp"
#include "vcut/generators.hpp"
#include "vcut/oracle.hpp"

using namespace vcut;
using namespace vcut::gen;

namespace {

std::size_t sz(Vertex v) { return static_cast<std::size_t>(v); }

struct Pipeline {
    Graph g;
    Net net;
    CutVertexResult cv;
    IndependentResult ind;

    explicit Pipeline(Graph graph, std::uint64_t seed = 5, int check_runs = 0) : g(std::move(graph)), net(g, NetConfig{}) {
        CutVertexOptions opt;
        opt.master_seed = seed;
        cv = detect_cut_vertices(net, opt);
        IndependentOptions io;
        io.check_runs = check_runs;
        ind = detect_independent_pairs(net, cv.pre, io);
    }
    const Preprocessed& pre() const { return cv.pre; }
    const IndependentState& st() const { return ind.state; }
};

bool dependent_pair(const BfsTree& t, Vertex x, Vertex y) { return oracle::on_root_path(t, x, y) || oracle::on_root_path(t, y, x); }

std::set<oracle::VertexPair> independent_oracle(const Graph& g, const BfsTree& t) {
    std::set<oracle::VertexPair> out;
    for (auto [x, y] : oracle::all_cut_pairs(g))
        if (!dependent_pair(t, x, y)) out.insert({x, y});
    return out;
}

std::set<oracle::VertexPair> found(const IndependentResult& r) {
    std::set<oracle::VertexPair> out;
    for (const auto& p : r.pairs) out.insert({p.x, p.y});
    return out;
}

// Vertices of T_x other than x.
std::vector<char> below(const Preprocessed& pre, Vertex x) {
    std::vector<char> out(sz(pre.n()), 0);
    for (Vertex v = 0; v < pre.n(); ++v)
        if (v != x && is_ancestor(pre[x].label, pre[v].label)) out[sz(v)] = 1;
    return out;
}

bool on_path(const HatComponent& c, Vertex y) { return std::find(c.path.begin(), c.path.end(), y) != c.path.end(); }

// Definition of the classes, evaluated from the trees alone.
Sensitivity central_sensitivity(const Preprocessed& pre, const IndependentState& st, Vertex x, int k, Vertex y) {
    const auto& c = st[x].tree.components[sz(k)];
    auto it = std::find(c.path.begin(), c.path.end(), y);
    if (it == c.path.end()) return Sensitivity::Non;
    if (y == c.u) return Sensitivity::Fully;
    Vertex next = *(it + 1);
    const auto& ty = st[y].tree;
    const auto& cy = ty.components[sz(ty.index_of_child(next))];
    return std::find(cy.path.begin(), cy.path.end(), x) != cy.path.end() ? Sensitivity::Fully : Sensitivity::Pseudo;
}

bool central_light(const Preprocessed& pre, const IndependentState& st, Vertex x, Vertex y) {
    const auto& tree = st[x].tree;
    for (std::size_t k = 0; k < tree.components.size(); ++k) {
        const auto& c = tree.components[k];
        if (central_sensitivity(pre, st, x, static_cast<int>(k), y) != Sensitivity::Fully) continue;
        if (y == c.u) return true;
        auto it = std::find(c.path.begin(), c.path.end(), y);
        if (*(it + 1) != pre[y].heavy_child) return true;
    }
    return false;
}

Vertex central_r(const Graph& g, const Preprocessed& pre, const IndependentState& st, Vertex x) {
    const auto& tree = st[x].tree;
    if (tree.heavy < 0 || x == pre.root) return kNone;
    std::vector<char> in_heavy(sz(pre.n()), 0);
    for (Vertex v = 0; v < pre.n(); ++v)
        for (Vertex c : tree.components[sz(tree.heavy)].children)
            if (is_ancestor(pre[c].label, pre[v].label)) in_heavy[sz(v)] = 1;
    auto inside = below(pre, x);
    std::optional<Vertex> acc;
    for (Vertex v = 0; v < pre.n(); ++v) {
        if (inside[sz(v)] || v == x) continue;
        bool touches = false;
        for (Vertex u : g.adj(v)) touches |= in_heavy[sz(u)] != 0;
        if (touches) acc = acc ? oracle::naive_lca(pre.tree, *acc, v) : v;
    }
    return acc.value_or(kNone);
}

std::vector<Graph> small_corpus() {
    std::vector<Graph> out{cycle(4), cycle(5), cycle(8), complete(4), ladder(4), ladder(7)};
    for (std::uint64_t seed = 1; seed <= 12; ++seed) out.push_back(biconnected_random(8 + static_cast<int>(seed * 3 % 40), seed));
    return out;
}

}  // namespace

TEST_CASE("K4 has no independent cut pairs") {
    Pipeline p(complete(4));
    CHECK(p.ind.pairs.empty());
}

TEST_CASE("C5 independent pairs match the oracle") {
    Pipeline p(cycle(5));
    CHECK(found(p.ind) == independent_oracle(p.g, p.pre().tree));
}

TEST_CASE("C4 opposite pair is disconnected") {
    Pipeline p(cycle(4));
    auto want = independent_oracle(p.g, p.pre().tree);
    CHECK(found(p.ind) == want);
    for (const auto& r : p.ind.runs) CHECK(r.disconnected == want.count({std::min(r.x, r.y), std::max(r.x, r.y)}) > 0);
}

TEST_CASE("leaves have empty connectivity trees") {
    Pipeline p(biconnected_random(20, 3));
    for (Vertex x = 0; x < p.g.n(); ++x)
        if (p.pre()[x].children.empty()) CHECK(p.st()[x].tree.empty());
}

TEST_CASE("component ids equal the induced components below every vertex") {
    for (const auto& g : small_corpus()) {
        Pipeline p(g);
        for (Vertex x = 0; x < g.n(); ++x) {
            auto comps = oracle::induced_components(g, below(p.pre(), x));
            const auto& tree = p.st()[x].tree;
            for (Vertex a : p.pre()[x].children)
                for (Vertex b : p.pre()[x].children) {
                    bool same = comps.label[sz(a)] == comps.label[sz(b)];
                    CHECK(same == (tree.index_of_child(a) == tree.index_of_child(b)));
                }
            for (const auto& c : tree.components) CHECK(c.id == c.children.back());
        }
    }
}

TEST_CASE("connectivity tree paths pass the edge-list audit") {
    for (const auto& g : small_corpus()) {
        Pipeline p(g);
        const auto& pre = p.pre();
        for (Vertex x = 0; x < g.n(); ++x) {
            if (x == pre.root) continue;
            for (const auto& c : p.st()[x].tree.components) {
                CHECK(g.has_edge(c.u, c.v));
                CHECK_FALSE(is_ancestor(pre[x].label, pre[c.u].label));
                CHECK(is_ancestor(pre[x].label, pre[c.v].label));
                CHECK(std::find(c.children.begin(), c.children.end(), pre.root) == c.children.end());
                CHECK_FALSE(on_path(c, x));
                REQUIRE_FALSE(c.path.empty());
                CHECK(c.path.front() == pre.root);
                CHECK(c.path.back() == c.u);
                for (std::size_t i = 0; i + 1 < c.path.size(); ++i) CHECK(pre[c.path[i + 1]].parent == c.path[i]);
                CHECK(c.u_label == pre[c.u].label);
                bool in_comp = false;
                for (Vertex ch : c.children) in_comp |= is_ancestor(pre[ch].label, pre[c.v].label);
                CHECK(in_comp);
            }
        }
    }
}

TEST_CASE("C4 tree holds the two-edge detour") {
    Pipeline p(cycle(4));
    const auto& pre = p.pre();
    for (Vertex x = 0; x < 4; ++x) {
        if (x == pre.root || pre[x].children.empty()) continue;
        const auto& tree = p.st()[x].tree;
        REQUIRE(tree.components.size() == 1);
        CHECK(tree.components[0].path.size() == 2);
    }
}

TEST_CASE("r(x) is the LCA of the outside neighbors of the heavy component") {
    for (const auto& g : small_corpus()) {
        Pipeline p(g);
        for (Vertex x = 0; x < g.n(); ++x) {
            Vertex want = central_r(g, p.pre(), p.st(), x);
            CHECK(p.st()[x].r == want);
            if (want == kNone) continue;
            const auto& h = p.st()[x].tree.components[sz(p.st()[x].tree.heavy)];
            CHECK(on_path(h, want));
        }
    }
}

TEST_CASE("sensitivity and light classification match the definitions") {
    for (const auto& g : small_corpus()) {
        Pipeline p(g);
        const auto& pre = p.pre();
        const auto& st = p.st();
        std::set<std::pair<Vertex, Vertex>> light(p.ind.ordered_light.begin(), p.ind.ordered_light.end());
        for (Vertex x = 0; x < g.n(); ++x)
            for (Vertex y = 0; y < g.n(); ++y) {
                if (!independent(pre, x, y)) continue;
                for (std::size_t k = 0; k < st[x].tree.components.size(); ++k) {
                    auto s = component_sensitivity(pre, st, x, static_cast<int>(k), y);
                    auto want = central_sensitivity(pre, st, x, static_cast<int>(k), y);
                    if (s == Sensitivity::Unknown) {
                        CHECK(static_cast<int>(k) == st[x].tree.heavy);
                        CHECK(want != Sensitivity::Non);
                    } else {
                        CHECK(s == want);
                    }
                }
                CHECK(light.count({x, y}) == (central_light(pre, st, x, y) ? 1U : 0U));
            }
    }
}

TEST_CASE("non-fully-sensitive components reach s without x and y") {
    for (const auto& g : small_corpus()) {
        Pipeline p(g);
        const auto& pre = p.pre();
        const auto& st = p.st();
        for (Vertex x = 0; x < g.n(); ++x)
            for (Vertex y = 0; y < g.n(); ++y) {
                if (!independent(pre, x, y)) continue;
                std::vector<Vertex> removed{x, y};
                auto comps = oracle::components_minus(g, removed);
                for (std::size_t k = 0; k < st[x].tree.components.size(); ++k) {
                    if (central_sensitivity(pre, st, x, static_cast<int>(k), y) == Sensitivity::Fully) continue;
                    Vertex c = st[x].tree.components[k].children.front();
                    CHECK(comps.label[sz(c)] == comps.label[sz(pre.root)]);
                }
            }
    }
}

TEST_CASE("pair connectivity agrees with the oracle and keeps its invariants") {
    int checked = 0;
    for (const auto& g : small_corpus()) {
        Pipeline p(g, 7, 1000);
        for (const auto& r : p.ind.runs) {
            std::vector<Vertex> removed{r.x, r.y};
            CHECK(r.disconnected == !oracle::connected_minus(g, removed));
            CHECK(r.checked);
            CHECK(r.violations.empty());
            for (const auto& v : r.violations) MESSAGE(v);
            checked += r.invariant_checks;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("non-mutual decisions agree with the oracle") {
    for (const auto& g : small_corpus()) {
        Pipeline p(g);
        for (const auto& d : p.ind.nonmutual) {
            std::vector<Vertex> removed{d.x, d.y};
            CHECK(d.disconnected == !oracle::connected_minus(g, removed));
        }
    }
}

TEST_CASE("mutual pairs form a matching") {
    for (const auto& g : small_corpus()) {
        Pipeline p(g);
        std::map<Vertex, int> seen;
        for (auto [x, y] : p.ind.mutual) {
            CHECK(x < y);
            CHECK(++seen[x] == 1);
            CHECK(++seen[y] == 1);
        }
    }
}

TEST_CASE("cases partition the independent cut pairs on biconnected graphs") {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        int n = 8 + static_cast<int>(seed * 7 % 41);
        Pipeline p(biconnected_random(n, seed), seed);
        auto want = independent_oracle(p.g, p.pre().tree);
        std::map<oracle::VertexPair, int> cases;
        for (const auto& q : p.ind.pairs) ++cases[{q.x, q.y}];
        for (const auto& [pair, count] : cases) CHECK(count == 1);
        CHECK(found(p.ind) == want);
        CHECK(p.ind.realized_misses == 0);
    }
}

TEST_CASE("graphs with cut vertices are refused") {
    Graph g = path(4);
    Net net(g, NetConfig{});
    auto cv = detect_cut_vertices(net, CutVertexOptions{});
    CHECK_THROWS_AS(detect_independent_pairs(net, cv.pre), Error);
}
