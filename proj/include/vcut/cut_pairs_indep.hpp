#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcut/cut_vertex.hpp"

namespace vcut {

// π*(s,u) followed by the edge (u,v).
struct CompressedPath {
    AncLabel u_label;
    Vertex u = kNone;
    Vertex v = kNone;
    bool operator==(const CompressedPath&) const = default;
};

// One component of G[V_x] together with the path that connects it to s in G \ {x}.
struct HatComponent {
    Vertex id = kNone;             // largest child id
    std::vector<Vertex> children;  // children of x inside, ascending
    bool heavy = false;            // holds the heavy child of x
    Vertex u = kNone;              // outside T_x
    Vertex v = kNone;              // inside the component
    AncLabel u_label;
    std::vector<Vertex> path;      // π(s,u), s first

    CompressedPath compressed() const { return {u_label, u, v}; }
};

struct ConnectivityTree {
    std::vector<HatComponent> components;  // ascending by id
    int heavy = -1;                        // index of H_x; -1 for leaves

    int index_of_child(Vertex child) const;
    int index_of_id(Vertex id) const;
    bool empty() const { return components.empty(); }
};

// What u learns from its strict ancestor x about the component C_{x,u}.
struct AncestorItem {
    Vertex comp = kNone;
    bool heavy_comp = false;
    bool has_path = false;     // false when x is the root
    CompressedPath cpath;
    bool light = false;        // u lies below a light child of x
    std::vector<Vertex> full_path;  // π(s,u_C), light ancestors only
};

// r(y), π*_y(s,H_y) and the id of H_y, as carried in augmented edge identifiers.
struct HeavyRecord {
    bool present = false;
    AncLabel r_label;
    CompressedPath heavy_path;
    Vertex heavy_id = kNone;
    bool operator==(const HeavyRecord&) const = default;
};

struct IndepVertex {
    std::vector<Vertex> root_path;  // s first, self last
    std::map<Vertex, std::vector<Vertex>> neighbor_root_path;
    ConnectivityTree tree;
    std::vector<AncestorItem> items;  // indexed by ancestor depth
    std::map<Vertex, std::vector<AncestorItem>> neighbor_items;
    // Per component: y on its path -> π*_y(s,C_{y,y'}) for the next vertex y'.
    std::vector<std::map<Vertex, CompressedPath>> escape;
    // Neighbor u -> every x with u in LDS(x, self).
    std::map<Vertex, std::vector<Vertex>> lds_markers;
    Vertex r = kNone;  // LCA of the outside neighbors of H_self
    AncLabel r_label;
    HeavyRecord record;
    std::vector<HeavyRecord> ancestor_records;  // by ancestor depth, self included
    std::map<Vertex, HeavyRecord> path_records;  // y -> record, y on some π(s,u_C)
    // Decision-family sketches over G.
    Sketch decision_own;
    std::map<Vertex, Sketch> decision_child;
    // Light child c -> column j: subtree sketch of c without the edges to the j-th vertex of π(s,u_C).
    std::map<Vertex, std::vector<Sketch>> decision_row;
    Sketch heavy_minus;  // sketch_{G \ {self}}(H_self)
    std::vector<Sketch> ancestor_heavy_minus;  // by ancestor depth
    std::map<Vertex, Sketch> fetched;  // y -> sketch_{G \ {y}}(H_y)
};

struct IndependentState {
    int height = 0;
    int max_light = 0;  // most light ancestors of any vertex
    SketchParams depth_params;
    SketchParams path_params;
    SketchParams decision_params;
    SeedPack depth_seeds;
    SeedPack path_seeds;
    SeedPack decision_seeds;
    std::vector<IndepVertex> at;
    int depth_retries = 0;
    int path_retries = 0;

    const IndepVertex& operator[](Vertex v) const { return at[static_cast<std::size_t>(v)]; }
    int n() const { return static_cast<int>(at.size()); }
};

struct IndependentOptions {
    int max_retries = 3;
    // Number of 𝒜^P runs whose phase boundaries are checked against central part sets.
    int check_runs = 0;
    double path_sketch_c = 2.0;
    double decision_sketch_c = 4.0;
};

// Prestep on the open stage of `net`: root paths, component ids at every depth,
// connectivity trees, path distribution, escape records, LDS markers, r(x),
// decision sketches and heavy records.
IndependentState build_independent_state(Net& net, const Preprocessed& pre, const IndependentOptions& options = {});

enum class Sensitivity { Non, Pseudo, Fully, Unknown };
std::string to_string(Sensitivity s);

bool independent(const Preprocessed& pre, Vertex a, Vertex b);
// Local at x. Unknown only for H_x when the step after y on π_x(s,H_x) is heavy.
Sensitivity component_sensitivity(const Preprocessed& pre, const IndependentState& st, Vertex x, int comp, Vertex y);
// Vertices of T̂_x other than s-side ancestors of x that are independent of x.
std::vector<Vertex> tree_candidates(const Preprocessed& pre, const IndependentState& st, Vertex x);
// Index of C^⟨x,y⟩ (lowest id among the witnesses), if ⟨x,y⟩ is ordered light.
std::optional<int> light_witness(const Preprocessed& pre, const IndependentState& st, Vertex x, Vertex y);
// Membership of LDS(x,y), as defined by the connectivity trees.
std::vector<char> lds_members(const Preprocessed& pre, const IndependentState& st, Vertex x, Vertex y);
// π(x,v_C) ∘ (v_C,u_C) ∘ π(u_C,y) for a component C of x with y an ancestor of u_C.
std::vector<Vertex> component_channel(const Preprocessed& pre, const IndependentState& st, Vertex x, int comp, Vertex y);

enum class PairCase { Dependent, Light, Mutual, NonMutual };
std::string to_string(PairCase c);

struct PairRequest {
    Vertex x = kNone;
    Vertex y = kNone;
    std::vector<Vertex> channel;  // x first, y last
    PairCase kind = PairCase::Light;
};

// Part of the joint partition, as held by its owner.
enum class PartKind : unsigned { Light = 0, SPart = 1, XHeavy = 2, YHeavy = 4 };

struct PairRun {
    Vertex x = kNone;
    Vertex y = kNone;
    PairCase kind = PairCase::Light;
    std::vector<Vertex> channel;
    bool disconnected = false;
    int phases = 0;
    int retries = 0;
    std::vector<int> part_counts;  // at each phase boundary
    bool checked = false;
    int invariant_checks = 0;
    std::vector<std::string> violations;
};

struct PairOptions {
    int max_retries = 3;
    int check_runs = 0;  // the first this many requests are checked at every phase boundary
};

// Runs 𝒜^P for every request as one group each of the open parallel stage.
std::vector<PairRun> run_pair_connectivity(Net& net, const Preprocessed& pre, const IndependentState& st, const std::vector<PairRequest>& requests, const PairOptions& options = {});

struct NonMutualDecision {
    Vertex x = kNone;
    Vertex y = kNone;
    bool by_sketch = false;
    bool disconnected = false;
    bool miss = false;  // nonzero sketch without an extractable edge
};

// Local at x for a heavy, non-mutual pair with y on π_x(s,H_x) and y != r(x).
NonMutualDecision decide_nonmutual(const Preprocessed& pre, const IndependentState& st, Vertex x, Vertex y);

struct IndependentPair {
    Vertex x = kNone;  // x < y
    Vertex y = kNone;
    PairCase kind = PairCase::Light;
    auto operator<=>(const IndependentPair&) const = default;
};

struct IndependentResult {
    IndependentState state;
    std::vector<std::pair<Vertex, Vertex>> ordered_light;  // ⟨x,y⟩
    std::vector<std::pair<Vertex, Vertex>> mutual;         // x < y
    std::vector<PairRun> runs;
    std::vector<NonMutualDecision> nonmutual;
    std::vector<IndependentPair> pairs;  // as collected at the root
    int max_channel_load = 0;  // light channels through one edge
    int max_lds_load = 0;      // LDS sets containing one vertex
    int realized_misses = 0;
};

// Stages "independent-pre", "independent-pairs" (parallel) and "independent-report".
IndependentResult detect_independent_pairs(Net& net, const Preprocessed& pre, const IndependentOptions& options = {});

}  // namespace vcut
