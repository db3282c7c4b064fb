#pragma once

#include <functional>
#include <vector>

#include "vcut/sketch.hpp"

namespace vcut {

// One connected vertex set with its sketch over the current edge universe.
struct Part {
    Sketch sketch;
    Vertex leader = kNone;
};

// Maps an edge endpoint to the index of its initial part, or -1 when the
// endpoint is outside every part.
using EndpointClassifier = std::function<int(Vertex v, const BitVec& annotation)>;

struct BoruvkaOutcome {
    std::vector<int> component;  // per initial part, index of its final component
    std::vector<Part> final_parts;
    std::vector<ExtEdgeId> merge_edges;
    std::vector<int> growable;   // growable parts at the start of each phase run
    int phases = 0;
    bool exhausted = false;      // a part was still growable after the last phase
    bool inconsistent = false;   // an extracted edge could not be classified

    int count() const { return static_cast<int>(final_parts.size()); }
};

// Merges parts along sampled outgoing edges. Phase i only reads the unit stripe
// assigned to it, so every phase sees fresh randomness.
BoruvkaOutcome local_boruvka(std::vector<Part> parts, const SeedPack& seeds, const EndpointClassifier& classify, int phases = 0);

}  // namespace vcut
