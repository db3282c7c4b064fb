#pragma once

#include <algorithm>
#include <cstdint>

#include "vcut/bits.hpp"
#include "vcut/graph.hpp"
#include "vcut/sketch.hpp"

namespace vcut {

// Algorithm families used in AlgoId::family.
namespace family {
inline constexpr std::uint32_t kCutVertex = 1;
inline constexpr std::uint32_t kReport = 2;
inline constexpr std::uint32_t kDependent = 3;
inline constexpr std::uint32_t kIndependentPre = 4;
inline constexpr std::uint32_t kPairConnectivity = 5;
inline constexpr std::uint32_t kChannelSetup = 6;
}  // namespace family

// Tree and universe ids used in sketch tags. Universe ids for G \ {y} and
// G \ {x, y} are derived from the removed vertices.
namespace tags {
inline constexpr std::uint64_t kTreeT = 1;
inline constexpr std::uint64_t kUniverseG = 1;
inline SketchTag base() { return {kTreeT, kUniverseG}; }
inline std::uint64_t minus_one(Vertex y) { return 0x100000000ULL | static_cast<std::uint32_t>(y); }
inline std::uint64_t tilde_tree(Vertex y) { return 0x200000000ULL | static_cast<std::uint32_t>(y); }
inline std::uint64_t depth_universe(int d) { return 0x300000000ULL | static_cast<std::uint32_t>(d); }
inline std::uint64_t minus_two(Vertex x, Vertex y) {
    auto a = static_cast<std::uint64_t>(std::min(x, y)), b = static_cast<std::uint64_t>(std::max(x, y));
    return 0x400000000000ULL | (a << 20) | b;
}
}  // namespace tags

// Fixed-width ancestry-label annotation used inside edge identifiers.
inline BitVec label_annotation(const AncLabel& label, int capacity, int word) {
    BitVec out;
    encode_label(out, label, capacity, word);
    return out;
}

inline AncLabel annotation_label(const BitVec& annotation, int capacity, int word) {
    BitReader in(annotation);
    return decode_label(in, capacity, word);
}

// Appends `tail` (rooted at a child-side vertex reached by a non-tree step) to `head`.
inline AncLabel join_labels(const AncLabel& head, const AncLabel& tail) {
    AncLabel out = head;
    out.entries.insert(out.entries.end(), tail.entries.begin(), tail.entries.end());
    return out;
}

}  // namespace vcut
