#include "vcut/generators.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "vcut/error.hpp"

namespace vcut::gen {

namespace {

// Portable draws; std distributions differ between standard libraries.
std::uint64_t below(std::mt19937_64& rng, std::uint64_t k) { return rng() % k; }
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

std::vector<Vertex> permutation(int n, std::mt19937_64& rng) {
    std::vector<Vertex> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[below(rng, i)]);
    return perm;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidParams, what);
}

}  // namespace

Graph random_connected(int n, double p, std::uint64_t seed) {
    require(n >= 1, "random-connected needs n >= 1");
    require(p >= 0.0 && p <= 1.0, "edge probability must lie in [0,1]");
    std::mt19937_64 rng(seed);
    auto perm = permutation(n, rng);
    std::set<Edge> edges;
    for (std::size_t i = 1; i < perm.size(); ++i) edges.insert(canonical(perm[i], perm[below(rng, i)]));
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v)
            if (unit(rng) < p) edges.insert({u, v});
    return make_graph(n, {edges.begin(), edges.end()});
}

Graph path_of_cliques(int cliques, int clique_size) {
    require(cliques >= 1, "path-of-cliques needs at least one clique");
    require(clique_size >= 4 || cliques == 1, "linked cliques need at least 4 vertices");
    std::vector<Edge> edges;
    auto at = [clique_size](int c, int i) { return static_cast<Vertex>(c * clique_size + i); };
    for (int c = 0; c < cliques; ++c) {
        for (int i = 0; i < clique_size; ++i)
            for (int j = i + 1; j < clique_size; ++j) edges.push_back({at(c, i), at(c, j)});
        if (c + 1 < cliques) {
            edges.push_back({at(c, clique_size - 2), at(c + 1, 0)});
            edges.push_back({at(c, clique_size - 1), at(c + 1, 1)});
        }
    }
    return make_graph(cliques * clique_size, std::move(edges));
}

Graph star_of_paths(int spokes, int spoke_length) {
    require(spokes >= 1 && spoke_length >= 1, "star-of-paths needs positive sizes");
    std::vector<Edge> edges;
    Vertex next = 1;
    for (int s = 0; s < spokes; ++s) {
        Vertex prev = 0;
        for (int i = 0; i < spoke_length; ++i) {
            edges.push_back({prev, next});
            prev = next++;
        }
    }
    return make_graph(next, std::move(edges));
}

Graph biconnected_random(int n, std::uint64_t seed) {
    require(n >= 3, "biconnected-random needs n >= 3");
    std::mt19937_64 rng(seed);
    auto perm = permutation(n, rng);
    int base = std::max(3, n / 4);
    std::set<Edge> edges;
    for (int i = 0; i < base; ++i) edges.insert(canonical(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>((i + 1) % base)]));
    int used = base;
    while (used < n) {
        Vertex a = perm[below(rng, static_cast<std::uint64_t>(used))];
        Vertex b = perm[below(rng, static_cast<std::uint64_t>(used))];
        if (a == b) continue;
        int len = 1 + static_cast<int>(below(rng, 3));
        len = std::min(len, n - used);
        Vertex prev = a;
        for (int i = 0; i < len; ++i) {
            Vertex v = perm[static_cast<std::size_t>(used++)];
            edges.insert(canonical(prev, v));
            prev = v;
        }
        edges.insert(canonical(prev, b));
    }
    for (int i = 0; i < n / 8; ++i) {
        Vertex a = static_cast<Vertex>(below(rng, static_cast<std::uint64_t>(n)));
        Vertex b = static_cast<Vertex>(below(rng, static_cast<std::uint64_t>(n)));
        if (a != b) edges.insert(canonical(a, b));
    }
    return make_graph(n, {edges.begin(), edges.end()});
}

Graph ladder(int rungs) {
    require(rungs >= 2, "ladder needs at least two rungs");
    std::vector<Edge> edges;
    for (int i = 0; i < rungs; ++i) {
        edges.push_back({2 * i, 2 * i + 1});
        if (i + 1 < rungs) {
            edges.push_back({2 * i, 2 * i + 2});
            edges.push_back({2 * i + 1, 2 * i + 3});
        }
    }
    return make_graph(2 * rungs, std::move(edges));
}

Graph cycle(int n) {
    require(n >= 3, "cycle needs n >= 3");
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) edges.push_back(canonical(i, (i + 1) % n));
    return make_graph(n, std::move(edges));
}

Graph path(int n) {
    require(n >= 1, "path needs n >= 1");
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
    return make_graph(n, std::move(edges));
}

Graph complete(int n) {
    require(n >= 1, "complete graph needs n >= 1");
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
    return make_graph(n, std::move(edges));
}

Graph generate(const FamilySpec& spec) {
    const auto& f = spec.family;
    if (f == "random-connected") return random_connected(spec.n, spec.p, spec.seed);
    if (f == "path-of-cliques") return path_of_cliques(std::max(2, spec.diameter / 2), spec.clique_size);
    if (f == "star-of-paths") return star_of_paths(spec.max_degree, std::max(1, spec.diameter / 2));
    if (f == "biconnected-random") return biconnected_random(spec.n, spec.seed);
    if (f == "ladder") return ladder(std::max(2, spec.n / 2));
    if (f == "cycle") return cycle(spec.n);
    if (f == "path") return path(spec.n);
    if (f == "complete") return complete(spec.n);
    throw Error(ErrorKind::InvalidParams, "unknown family '" + f + "'");
}

}  // namespace vcut::gen
