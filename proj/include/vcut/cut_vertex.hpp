#pragma once

#include <map>
#include <vector>

#include "vcut/boruvka.hpp"
#include "vcut/net.hpp"
#include "vcut/stage.hpp"

namespace vcut {

// Everything one vertex knows after the preprocessing broadcasts and convergecasts.
struct VertexState {
    Vertex parent = kNone;
    std::vector<Vertex> children;
    int depth = 0;
    int subtree_size = 0;
    std::map<Vertex, int> child_size;
    bool heavy = false;  // heavy child of its parent
    Vertex heavy_child = kNone;
    AncLabel label;
    std::map<Vertex, AncLabel> neighbor_label;
    std::map<Vertex, BitVec> eid;  // incident edge identifiers, by neighbor
    Sketch own_sketch;
    Sketch subtree_sketch;
    std::map<Vertex, Sketch> child_sketch;
    // Non-tree edges joining the pieces of T \ {v} into a spanning forest of G \ {v}.
    std::vector<ExtEdgeId> spanning_edges;
    bool cut = false;
    int phases = 0;
    std::vector<int> growable;
};

struct CutVertexOptions {
    Vertex root = 0;
    std::uint64_t master_seed = 1;
    double sketch_c = kDefaultSketchConstant;
    int max_retries = 3;
};

struct Preprocessed {
    CutVertexOptions options;
    Vertex root = 0;
    int word = 1;
    int label_capacity = 0;
    SketchParams params;
    SeedPack seeds;
    std::vector<VertexState> at;
    // Assembled from the per-vertex parent pointers and classifications.
    BfsTree tree;
    HeavyLight hl;

    const VertexState& operator[](Vertex v) const { return at[static_cast<std::size_t>(v)]; }
    int n() const { return static_cast<int>(at.size()); }
    AncLabel decode(const BitVec& annotation) const { return annotation_label(annotation, label_capacity, word); }
};

// Preprocessing steps, run on the open stage of `net`: BFS tree, subtree sizes,
// heavy/light classes, ancestry labels, seeds, label exchange and subtree sketches.
Preprocessed preprocess(Net& net, const CutVertexOptions& options, std::uint64_t epoch = 0);
// Recomputes only the seed-dependent part (seeds, sketches) for a new epoch.
void refresh_sketches(Net& net, Preprocessed& pre, std::uint64_t epoch);

// Local Borůvka at x over the parts of T \ {x}.
BoruvkaOutcome decide_cut_vertex(const Preprocessed& pre, Vertex x);

struct CutVertexResult {
    Preprocessed pre;
    std::vector<Vertex> cut_vertices;  // as collected at the root
    int retries = 0;
};

CutVertexResult detect_cut_vertices(Net& net, const CutVertexOptions& options);

}  // namespace vcut
