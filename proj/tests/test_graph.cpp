#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vcut/error.hpp"
#include "vcut/generators.hpp"
#include "vcut/graph.hpp"
#include "vcut/oracle.hpp"

using namespace vcut;

namespace {

std::vector<Graph> small_corpus() {
    std::vector<Graph> out;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        int n = 4 + static_cast<int>(seed % 29);
        double p = (seed % 3 == 0) ? 0.1 : (seed % 3 == 1 ? 0.2 : 0.4);
        out.push_back(gen::random_connected(n, p, seed));
    }
    for (int n = 3; n <= 32; n += 7) out.push_back(gen::cycle(n));
    out.push_back(gen::star_of_paths(5, 3));
    out.push_back(gen::path_of_cliques(3, 5));
    out.push_back(gen::ladder(6));
    return out;
}

}  // namespace

TEST_CASE("load_graph builds canonical graphs and rejects malformed input") {
    std::vector<Edge> p3 = {{0, 1}, {1, 2}};
    auto g = load_graph(p3);
    CHECK(g.n() == 3);
    CHECK(g.m() == 2);
    CHECK(g.adj(1).size() == 2);

    std::vector<Edge> k3 = {{0, 1}, {1, 2}, {2, 0}};
    auto tri = load_graph(k3);
    CHECK(tri.m() == 3);
    CHECK(tri.has_edge(0, 2));
    CHECK(tri.has_edge(2, 0));

    std::vector<Edge> dup = {{0, 1}, {0, 1}};
    try {
        load_graph(dup);
        FAIL("expected DuplicateEdge");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DuplicateEdge);
    }
    std::vector<Edge> loop = {{0, 0}};
    CHECK_THROWS_AS(load_graph(loop), Error);
    std::vector<Edge> split = {{0, 1}, {2, 3}};
    try {
        load_graph(split);
        FAIL("expected Disconnected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Disconnected);
    }
    CHECK(load_graph(split, false).n() == 4);
}

TEST_CASE("edge-list and json readers agree") {
    auto a = parse_graph_text("# triangle\n0 1\n1 2\n\n2 0 # closing edge\n");
    auto b = parse_graph_text(R"({"n": 3, "edges": [[0,1],[1,2],[0,2]]})");
    CHECK(a.edges() == b.edges());
    CHECK(graph_fingerprint(a) == graph_fingerprint(b));
    auto c = parse_graph_text(graph_to_json(a));
    CHECK(c.edges() == a.edges());
}

TEST_CASE("bfs_tree depths") {
    auto k3 = gen::complete(3);
    auto t = bfs_tree(k3, 0);
    CHECK(t.depth[1] == 1);
    CHECK(t.depth[2] == 1);
    auto c4 = gen::cycle(4);
    CHECK(bfs_tree(c4, 0).depth[2] == 2);
    auto p3 = gen::path(3);
    auto tp = bfs_tree(p3, 1);
    CHECK(tp.depth[0] == 1);
    CHECK(tp.depth[2] == 1);
}

TEST_CASE("bfs_tree is deterministic and matches graph distances") {
    for (const auto& g : small_corpus()) {
        auto t1 = bfs_tree(g, 0);
        auto t2 = bfs_tree(g, 0);
        CHECK(t1.parent == t2.parent);
        CHECK(t1.children == t2.children);
        for (Vertex v = 0; v < g.n(); ++v) {
            if (v == 0) continue;
            CHECK(g.has_edge(v, t1.parent[v]));
            CHECK(t1.depth[v] == t1.depth[t1.parent[v]] + 1);
            for (Vertex w : g.adj(v)) CHECK(std::abs(t1.depth[v] - t1.depth[w]) <= 1);
            CHECK(std::is_sorted(t1.children[v].begin(), t1.children[v].end()));
        }
    }
}

TEST_CASE("heavy_light examples") {
    auto p = gen::path(3);
    auto t = bfs_tree(p, 0);
    auto hl = heavy_light(t);
    CHECK(hl.heavy_child[0] == 1);
    CHECK(hl.heavy_child[1] == 2);

    auto star = gen::star_of_paths(3, 1);
    auto ts = bfs_tree(star, 0);
    auto hs = heavy_light(ts);
    CHECK(hs.heavy_child[0] == 1);
    CHECK_FALSE(hs.is_heavy[2]);
    CHECK_FALSE(hs.is_heavy[3]);
    CHECK_FALSE(hs.is_heavy[0]);
}

TEST_CASE("heavy_light sizes and light-edge bound on the corpus") {
    for (const auto& g : small_corpus()) {
        auto t = bfs_tree(g, 0);
        auto hl = heavy_light(t);
        int bound = static_cast<int>(std::bit_width(static_cast<unsigned>(g.n()))) - 1;
        for (Vertex v = 0; v < g.n(); ++v) {
            int sum = 1;
            for (Vertex c : t.children[v]) sum += hl.subtree_size[c];
            CHECK(hl.subtree_size[v] == sum);
            int light = 0;
            for (Vertex w = v; w != t.root; w = t.parent[w]) light += hl.is_heavy[w] ? 0 : 1;
            CHECK(light <= bound);
        }
    }
}

TEST_CASE("anc_label examples") {
    auto p = gen::path(3);
    auto t = bfs_tree(p, 0);
    auto hl = heavy_light(t);
    auto root = anc_label(t, hl, 0);
    REQUIRE(root.entries.size() == 1);
    CHECK(root.entries[0] == PathEntry{0, 0});
    auto leaf = anc_label(t, hl, 2);
    REQUIRE(leaf.entries.size() == 1);
    CHECK(leaf.entries[0] == PathEntry{0, 2});
    CHECK(leaf.length() == 2);
}

TEST_CASE("is_ancestor, lca and edge_depth match path enumeration") {
    for (const auto& g : small_corpus()) {
        auto t = bfs_tree(g, 0);
        auto hl = heavy_light(t);
        std::vector<AncLabel> labels;
        for (Vertex v = 0; v < g.n(); ++v) labels.push_back(anc_label(t, hl, v));
        for (Vertex a = 0; a < g.n(); ++a) {
            CHECK(is_ancestor(labels[0], labels[a]));
            CHECK(labels[a].length() == t.depth[a]);
            for (Vertex b = 0; b < g.n(); ++b) {
                CHECK(is_ancestor(labels[a], labels[b]) == oracle::on_root_path(t, a, b));
                Vertex lca = oracle::naive_lca(t, a, b);
                CHECK(lca_label(labels[a], labels[b]) == labels[lca]);
                if (a != b && oracle::on_root_path(t, a, b)) {
                    auto path = root_path(t, b);
                    Vertex next = path[static_cast<std::size_t>(t.depth[a] + 1)];
                    Vertex expect = hl.heavy_child[a] == next ? kNone : next;
                    CHECK(light_child_toward(labels[a], labels[b]) == expect);
                }
            }
        }
        for (const auto& e : g.edges()) CHECK(edge_depth(t, e) == t.depth[oracle::naive_lca(t, e.u, e.v)]);
    }
}

TEST_CASE("is_ancestor is a partial order") {
    auto g = gen::random_connected(24, 0.15, 7);
    auto t = bfs_tree(g, 0);
    auto hl = heavy_light(t);
    std::vector<AncLabel> labels;
    for (Vertex v = 0; v < g.n(); ++v) labels.push_back(anc_label(t, hl, v));
    for (Vertex a = 0; a < g.n(); ++a) {
        CHECK(is_ancestor(labels[a], labels[a]));
        for (Vertex b = 0; b < g.n(); ++b) {
            if (a != b) CHECK_FALSE((is_ancestor(labels[a], labels[b]) && is_ancestor(labels[b], labels[a])));
            for (Vertex c = 0; c < g.n(); ++c)
                if (is_ancestor(labels[a], labels[b]) && is_ancestor(labels[b], labels[c])) CHECK(is_ancestor(labels[a], labels[c]));
        }
    }
}

TEST_CASE("sibling leaves are not ancestors of each other") {
    auto star = gen::star_of_paths(3, 1);
    auto t = bfs_tree(star, 0);
    auto hl = heavy_light(t);
    CHECK_FALSE(is_ancestor(anc_label(t, hl, 2), anc_label(t, hl, 3)));
    CHECK_FALSE(is_ancestor(anc_label(t, hl, 3), anc_label(t, hl, 2)));
    Edge e{1, 2};
    auto tri = gen::complete(3);
    CHECK(edge_depth(bfs_tree(tri, 0), e) == 0);
}

TEST_CASE("label wire format round-trips") {
    auto g = gen::random_connected(40, 0.08, 3);
    auto t = bfs_tree(g, 0);
    auto hl = heavy_light(t);
    int cap = light_capacity(g.n());
    for (Vertex v = 0; v < g.n(); ++v) {
        auto label = anc_label(t, hl, v);
        BitVec bits;
        encode_label(bits, label, cap, g.word());
        CHECK(static_cast<int>(bits.size()) == label_bits(cap, g.word()));
        BitReader in(bits);
        CHECK(decode_label(in, cap, g.word()) == label);
    }
}

TEST_CASE("extend and concat rebuild labels") {
    auto g = gen::random_connected(30, 0.1, 11);
    auto t = bfs_tree(g, 0);
    auto hl = heavy_light(t);
    for (Vertex v = 1; v < g.n(); ++v) {
        auto parent = anc_label(t, hl, t.parent[v]);
        CHECK(extend_label(parent, v, hl.is_heavy[v]) == anc_label(t, hl, v));
    }
}

TEST_CASE("oracle basics") {
    auto k3 = gen::complete(3);
    Vertex two[] = {0, 1};
    CHECK(oracle::connected_minus(k3, two));
    auto p3 = gen::path(3);
    Vertex mid[] = {1};
    CHECK_FALSE(oracle::connected_minus(p3, mid));
    auto c4 = gen::cycle(4);
    Vertex opp[] = {0, 2};
    CHECK(oracle::components_minus(c4, opp).count == 2);

    auto c5 = gen::cycle(5);
    CHECK(oracle::all_cut_vertices(c5).empty());
    std::set<oracle::VertexPair> expect = {{0, 2}, {0, 3}, {1, 3}, {1, 4}, {2, 4}};
    CHECK(oracle::all_cut_pairs(c5) == expect);

    auto k4 = gen::complete(4);
    CHECK(oracle::all_cut_vertices(k4).empty());
    CHECK(oracle::all_cut_pairs(k4).empty());

    auto tree = gen::star_of_paths(3, 2);
    std::set<Vertex> internal;
    for (Vertex v = 0; v < tree.n(); ++v)
        if (tree.degree(v) > 1) internal.insert(v);
    CHECK(oracle::all_cut_vertices(tree) == internal);
}

TEST_CASE("articulation witnesses agree") {
    for (const auto& g : small_corpus()) CHECK(oracle::all_cut_vertices(g) == oracle::articulation_points_lowpoint(g));
}

TEST_CASE("generators") {
    auto c5 = gen::cycle(5);
    CHECK(c5.n() == 5);
    CHECK(c5.m() == 5);
    auto poc = gen::path_of_cliques(2, 8);
    auto t = bfs_tree(poc, 0);
    CHECK(t.height() >= 2);
    CHECK(poc.max_degree() >= 7);
    CHECK(poc.max_degree() <= 9);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto b = gen::biconnected_random(32, seed);
        CHECK(b.n() == 32);
        CHECK(oracle::all_cut_vertices(b).empty());
    }
    CHECK_THROWS_AS(gen::generate({.family = "nope"}), Error);
}
