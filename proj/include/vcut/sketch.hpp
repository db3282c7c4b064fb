#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vcut/bits.hpp"
#include "vcut/graph.hpp"

namespace vcut {

inline constexpr std::uint64_t kMersenne61 = (1ULL << 61) - 1;

// Field widths shared by every sketch of one family. Each vertex contributes a
// fixed-width annotation (labels, root paths) to the identifiers of its edges.
struct SketchParams {
    int n = 0;
    int word = 1;
    int units = 0;
    int log_pairs = 0;  // ceil(log2 C(n,2))
    int uid_bits = 24;
    int annotation_bits = 0;

    int levels() const { return log_pairs + 1; }
    int eid_bits() const { return uid_bits + 2 * word + 2 * annotation_bits; }
    std::size_t eid_words() const { return (static_cast<std::size_t>(eid_bits()) + 63) / 64; }
    std::size_t packed_bits() const { return static_cast<std::size_t>(units) * static_cast<std::size_t>(levels()) * static_cast<std::size_t>(eid_bits()); }
    bool operator==(const SketchParams&) const = default;
};

inline constexpr double kDefaultSketchConstant = 8.0;

SketchParams make_sketch_params(int n, int annotation_bits, double c = kDefaultSketchConstant);

struct HashPair {
    std::uint64_t a = 1;
    std::uint64_t b = 0;
    bool operator==(const HashPair&) const = default;
};

// Identifier polynomial (fixed per master seed) plus one hash function per unit
// (fresh per epoch).
class SeedPack {
public:
    SeedPack() = default;
    static SeedPack generate(std::uint64_t master, int units, std::uint64_t epoch = 0);

    SeedPack with_epoch(std::uint64_t epoch) const { return generate(master_, static_cast<int>(hash_.size()), epoch); }
    std::uint64_t master() const { return master_; }
    std::uint64_t epoch() const { return epoch_; }
    int units() const { return static_cast<int>(hash_.size()); }
    const std::array<std::uint64_t, 8>& id_poly() const { return id_poly_; }
    std::span<const HashPair> hashes() const { return hash_; }

    std::uint64_t uid(Vertex u, Vertex v, int uid_bits) const;
    std::uint64_t hash(int unit, Vertex u, Vertex v, int n, int log_pairs) const;
    // Deepest level that samples {u,v} in `unit`.
    int top_level(int unit, Vertex u, Vertex v, int n, int log_pairs) const;

    // Wire form: identifier coefficients then per-unit (a,b), 61 bits each.
    BitVec serialize() const;
    static SeedPack deserialize(const BitVec& bits, std::uint64_t master, std::uint64_t epoch);

    bool operator==(const SeedPack&) const = default;

private:
    std::uint64_t master_ = 0;
    std::uint64_t epoch_ = 0;
    std::array<std::uint64_t, 8> id_poly_{};
    std::vector<HashPair> hash_;
};

// Extended identifier of an edge; endpoints canonical (u < v).
struct ExtEdgeId {
    std::uint64_t uid = 0;
    Vertex u = kNone;
    Vertex v = kNone;
    BitVec annotation_u;
    BitVec annotation_v;

    Edge edge() const { return {u, v}; }
    bool operator==(const ExtEdgeId&) const = default;
};

BitVec encode_eid(const SketchParams& p, const SeedPack& seeds, Vertex a, Vertex b, const BitVec& annotation_a, const BitVec& annotation_b);
ExtEdgeId decode_eid(const SketchParams& p, const BitVec& eid);

// What the embedded identifiers refer to and which edge set is summarized.
struct SketchTag {
    std::uint64_t tree = 0;
    std::uint64_t universe = 0;
    bool operator==(const SketchTag&) const = default;
};

// Universe marker for correction sketches that may be folded into any universe.
inline constexpr std::uint64_t kDeltaUniverse = ~0ULL;

class Sketch {
public:
    Sketch() = default;
    Sketch(const SketchParams& params, SketchTag tag);

    const SketchParams& params() const { return params_; }
    SketchTag tag() const { return tag_; }
    void retag(SketchTag tag) { tag_ = tag; }

    // XORs an encoded edge identifier into every level of every unit that samples it.
    void toggle_edge(const SeedPack& seeds, const BitVec& eid);
    void toggle_edge(const SeedPack& seeds, Vertex u, Vertex v, const BitVec& eid);

    Sketch& operator^=(const Sketch& other);
    friend Sketch operator^(Sketch a, const Sketch& b) { return a ^= b; }
    bool is_zero() const;
    bool unit_is_zero(int unit) const;
    bool operator==(const Sketch& other) const { return params_ == other.params_ && tag_ == other.tag_ && data_ == other.data_; }

    BitVec accumulator(int unit, int level) const;

    BitVec pack() const;
    static Sketch unpack(const SketchParams& params, SketchTag tag, const BitVec& bits);

private:
    std::uint64_t* slot(int unit, int level);
    const std::uint64_t* slot(int unit, int level) const;

    SketchParams params_;
    SketchTag tag_;
    std::vector<std::uint64_t> data_;
};

// Sketch of a single vertex from the encoded identifiers of its incident edges.
Sketch vertex_sketch(const SketchParams& params, SketchTag tag, const SeedPack& seeds, std::span<const BitVec> incident_eids);
// Correction sketch for a set of known outgoing edges.
Sketch cancellation_sketch(const SketchParams& params, const SeedPack& seeds, std::span<const BitVec> eids);

// Decodes an outgoing edge from one unit, scanning levels deepest first.
std::optional<ExtEdgeId> extract_outgoing(const Sketch& sketch, int unit, const SeedPack& seeds);
// First success over `count` consecutive units starting at `first` (mod units).
std::optional<ExtEdgeId> extract_from_units(const Sketch& sketch, int first, int count, const SeedPack& seeds);

// Units available to Borůvka phase `phase` out of `phases` total.
struct UnitStripe {
    int first = 0;
    int count = 1;
};
UnitStripe phase_stripe(int units, int phases, int phase, int offset = 0);
int boruvka_phases(int n);

}  // namespace vcut
