#pragma once

// Wire formats and small helpers shared by the independent-pair sources.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "vcut/cut_pairs_indep.hpp"
#include "vcut/error.hpp"
#include "vcut/primitives.hpp"

namespace vcut::indep {

inline std::size_t sz(Vertex v) { return static_cast<std::size_t>(v); }

inline std::uint64_t depth_epoch(int attempt) { return (2ULL << 40) | static_cast<std::uint64_t>(attempt); }
inline std::uint64_t path_epoch(int attempt) { return (3ULL << 40) | static_cast<std::uint64_t>(attempt); }
inline std::uint64_t decision_epoch() { return 4ULL << 40; }

inline SketchTag depth_tag(int d) { return {tags::kTreeT, tags::depth_universe(d)}; }
inline SketchTag path_tag() { return {tags::kTreeT, tags::kUniverseG | (1ULL << 60)}; }
inline SketchTag decision_tag() { return {tags::kTreeT, tags::kUniverseG | (2ULL << 60)}; }

// Field widths of one network.
struct Codec {
    int n = 0;
    int w = 1;
    int cap = 0;
    int lb = 0;        // label bits
    int count_bits = 1;

    Codec() = default;
    Codec(const Preprocessed& pre, int height)
        : n(pre.n()), w(pre.word), cap(pre.label_capacity), lb(label_bits(pre.label_capacity, pre.word)), count_bits(width_for(static_cast<std::uint64_t>(std::max(height + 1, pre.n())))) {}

    void vertex(BitVec& out, Vertex v) const { out.push(static_cast<std::uint64_t>(v), w); }
    Vertex vertex(BitReader& in) const { return static_cast<Vertex>(in.read(w)); }
    void opt_vertex(BitVec& out, Vertex v) const {
        out.push(v == kNone ? 0 : 1, 1);
        out.push(v == kNone ? 0 : static_cast<std::uint64_t>(v), w);
    }
    Vertex opt_vertex(BitReader& in) const {
        bool has = in.read(1) == 1;
        auto v = static_cast<Vertex>(in.read(w));
        return has ? v : kNone;
    }
    void count(BitVec& out, std::size_t c) const { out.push(c, count_bits); }
    std::size_t count(BitReader& in) const { return static_cast<std::size_t>(in.read(count_bits)); }
    void label(BitVec& out, const AncLabel& l) const { encode_label(out, l, cap, w); }
    AncLabel label(BitReader& in) const { return decode_label(in, cap, w); }

    void cpath(BitVec& out, const CompressedPath& p) const {
        label(out, p.u_label);
        opt_vertex(out, p.u);
        opt_vertex(out, p.v);
    }
    CompressedPath cpath(BitReader& in) const {
        CompressedPath p;
        p.u_label = label(in);
        p.u = opt_vertex(in);
        p.v = opt_vertex(in);
        return p;
    }
    int cpath_bits() const { return lb + 2 * (w + 1); }

    void path(BitVec& out, const std::vector<Vertex>& p) const {
        count(out, p.size());
        for (Vertex v : p) vertex(out, v);
    }
    std::vector<Vertex> path(BitReader& in) const {
        std::vector<Vertex> p(count(in));
        for (auto& v : p) v = vertex(in);
        return p;
    }

    void record(BitVec& out, const HeavyRecord& r) const {
        out.push(r.present ? 1 : 0, 1);
        label(out, r.r_label);
        cpath(out, r.heavy_path);
        opt_vertex(out, r.heavy_id);
    }
    HeavyRecord record(BitReader& in) const {
        HeavyRecord r;
        r.present = in.read(1) == 1;
        r.r_label = label(in);
        r.heavy_path = cpath(in);
        r.heavy_id = opt_vertex(in);
        return r;
    }
    // The part of a record carried inside augmented edge identifiers.
    void brief(BitVec& out, const HeavyRecord& r) const {
        out.push(r.present ? 1 : 0, 1);
        label(out, r.r_label);
        opt_vertex(out, r.heavy_id);
    }
    HeavyRecord brief(BitReader& in) const {
        HeavyRecord r;
        r.present = in.read(1) == 1;
        r.r_label = label(in);
        r.heavy_id = opt_vertex(in);
        return r;
    }
    int brief_bits() const { return 1 + lb + w + 1; }

    void item(BitVec& out, const AncestorItem& it) const {
        opt_vertex(out, it.comp);
        out.push(it.heavy_comp ? 1 : 0, 1);
        out.push(it.has_path ? 1 : 0, 1);
        if (it.has_path) cpath(out, it.cpath);
        out.push(it.light ? 1 : 0, 1);
        if (it.light) path(out, it.full_path);
    }
    AncestorItem item(BitReader& in) const {
        AncestorItem it;
        it.comp = opt_vertex(in);
        it.heavy_comp = in.read(1) == 1;
        it.has_path = in.read(1) == 1;
        if (it.has_path) it.cpath = cpath(in);
        it.light = in.read(1) == 1;
        if (it.light) it.full_path = path(in);
        return it;
    }

    void sketch(BitVec& out, const Sketch& s) const { out.append(s.pack()); }
    Sketch sketch(BitReader& in, const SketchParams& p, SketchTag tag) const {
        BitVec bits(p.packed_bits());
        std::size_t done = 0;
        auto words = bits.mutable_words();
        for (std::size_t k = 0; done < p.packed_bits(); ++k) {
            int take = static_cast<int>(std::min<std::size_t>(64, p.packed_bits() - done));
            words[k] = in.read(take);
            done += static_cast<std::size_t>(take);
        }
        return Sketch::unpack(p, tag, bits);
    }
};

// Label of the ancestor at depth `d` of the vertex labelled `label`.
inline AncLabel label_prefix(const AncLabel& label, int d) {
    AncLabel out;
    int start = 0;
    for (const auto& e : label.entries) {
        if (d <= start + e.gap) {
            out.entries.push_back({e.vertex, d - start});
            return out;
        }
        out.entries.push_back(e);
        start += 1 + e.gap;
    }
    throw Error(ErrorKind::Precondition, "label prefix deeper than the label");
}

// Whether the vertex at depth d >= 1 on the labelled root path is a light child.
inline bool light_at(const AncLabel& label, int d) {
    int start = 0;
    for (const auto& e : label.entries) {
        if (start == d) return true;
        start += 1 + e.gap;
        if (start > d) return false;
    }
    return false;
}

// T-path from `top` down to its descendant `bottom`, top first.
inline std::vector<Vertex> down_path(const Preprocessed& pre, Vertex top, Vertex bottom) {
    std::vector<Vertex> path;
    for (Vertex w = bottom; w != top; w = pre[w].parent) {
        if (w == kNone) throw Error(ErrorKind::Precondition, "vertex is not a descendant");
        path.push_back(w);
    }
    path.push_back(top);
    std::reverse(path.begin(), path.end());
    return path;
}

inline std::vector<Vertex> up_path(const Preprocessed& pre, Vertex bottom, Vertex top) {
    auto p = down_path(pre, top, bottom);
    std::reverse(p.begin(), p.end());
    return p;
}

inline bool is_ancestor_of(const Preprocessed& pre, Vertex a, Vertex b) { return is_ancestor(pre[a].label, pre[b].label); }

inline Forest tree_forest(const Preprocessed& pre) {
    Forest f(pre.n());
    for (Vertex v = 0; v < pre.n(); ++v) {
        f.member[sz(v)] = 1;
        f.parent[sz(v)] = pre[v].parent;
        f.children[sz(v)] = pre[v].children;
    }
    return f;
}

}  // namespace vcut::indep
