#pragma once

#include <map>
#include <vector>

#include "vcut/cut_vertex.hpp"

namespace vcut {

// Components of T \ {y} joined by the edges of Ẽ(y). Index 0 is the component
// above y (absent when y is the root); index i >= 1 is the subtree of the i-th child.
struct ComponentTree {
    Vertex y = kNone;
    bool has_outside = false;
    int root = 0;
    std::vector<Vertex> head;        // child of y heading the component; kNone for 0
    std::vector<int> size;           // vertex count; 0 for the outside component
    std::vector<int> parent;         // parent component, -1 at the root
    std::vector<Vertex> inner;       // r_i: endpoint of the parent edge inside the component
    std::vector<Vertex> outer;       // p_i: endpoint of the parent edge in the parent component
    std::vector<std::vector<int>> children;
    std::vector<int> tilde_size;     // vertex count of the re-rooted subtree below r_i

    int count() const { return static_cast<int>(head.size()); }
    // Component containing the vertex with T-label `label` (y itself excluded).
    int component_of(const Preprocessed& pre, const AncLabel& label) const;
};

// Local at y. Throws NotSpanning when Ẽ(y) does not join the components into a tree.
ComponentTree build_component_tree(const Preprocessed& pre, Vertex y);

// What a vertex of T_y \ {y} knows inside 𝒜_y.
struct TildeState {
    int component = 0;
    Vertex parent = kNone;              // parent in the new spanning tree
    std::vector<Vertex> children;       // in-component children followed by attached connectors
    int subtree_size = 0;
    std::map<Vertex, int> child_size;
    Vertex heavy_child = kNone;
    bool heavy = false;
    AncLabel local_path;                // compressed path from the component's connector
    AncLabel label;                     // hybrid ancestry label
    std::map<Vertex, AncLabel> neighbor_label;
    std::map<Vertex, BitVec> eid;
    Sketch own_sketch;
    Sketch subtree_sketch;
    std::map<Vertex, Sketch> child_sketch;
    bool paired = false;                // {x, y} separates G
};

struct DependentRun {
    Vertex y = kNone;
    ComponentTree ct;
    std::vector<char> in_subtree;       // membership in V(T_y)
    std::map<Vertex, TildeState> at;    // keyed by the vertices of T_y \ {y}
    SeedPack seeds;
    int retries = 0;

    const TildeState& operator[](Vertex v) const { return at.at(v); }
    // Hybrid label of any vertex other than y.
    AncLabel label_of(const Preprocessed& pre, Vertex v) const;
};

struct DependentOptions {
    int max_retries = 3;
};

struct DependentResult {
    std::vector<DependentRun> runs;                     // one per non-leaf y
    std::vector<std::pair<Vertex, Vertex>> pairs;       // (x, y), x a descendant of y, as collected at the root
    SketchParams params;
};

// Sketch epoch of 𝒜_y for a given attempt.
std::uint64_t dependent_epoch(Vertex y, int attempt);

// Runs every 𝒜_y as one group of the parallel stage "dependent-pairs" and then
// reports the pairs to the root in stage "dependent-report".
DependentResult detect_dependent_pairs(Net& net, const Preprocessed& pre, const DependentOptions& options = {});

// Local Borůvka at x over the parts of the new spanning tree minus x.
BoruvkaOutcome decide_dependent(const Preprocessed& pre, const SketchParams& params, const DependentRun& run, Vertex x);

}  // namespace vcut
