#pragma once

#include <cstdint>
#include <string>

#include "vcut/graph.hpp"

namespace vcut::gen {

// Random spanning tree plus independent G(n,p) edges.
Graph random_connected(int n, double p, std::uint64_t seed);
// `cliques` cliques of `clique_size` vertices in a row, neighbours joined by two disjoint edges.
Graph path_of_cliques(int cliques, int clique_size);
// Center 0 with `spokes` paths of `spoke_length` vertices each.
Graph star_of_paths(int spokes, int spoke_length);
// Cycle with random ears and extra chords; never has a cut vertex.
Graph biconnected_random(int n, std::uint64_t seed);
Graph ladder(int rungs);
Graph cycle(int n);
Graph path(int n);
Graph complete(int n);

struct FamilySpec {
    std::string family;
    int n = 16;
    int diameter = 4;
    int max_degree = 8;
    int clique_size = 6;
    double p = 0.2;
    std::uint64_t seed = 1;
};

// Dispatches on `spec.family`; throws InvalidParams on unknown names or bad sizes.
Graph generate(const FamilySpec& spec);

}  // namespace vcut::gen
