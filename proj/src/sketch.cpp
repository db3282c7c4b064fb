#include "vcut/sketch.hpp"

#include <algorithm>
#include <cmath>

#include "vcut/error.hpp"

namespace vcut {

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t draw_mod_p(std::uint64_t& state) {
    for (;;) {
        std::uint64_t x = splitmix(state) >> 3;
        if (x < kMersenne61) return x;
    }
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
    unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    std::uint64_t lo = static_cast<std::uint64_t>(prod & kMersenne61);
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t r = lo + hi;
    if (r >= kMersenne61) r -= kMersenne61;
    return r;
}

std::uint64_t addmod(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = a + b;
    if (r >= kMersenne61) r -= kMersenne61;
    return r;
}

std::uint64_t low_bits(std::uint64_t x, int width) { return width >= 64 ? x : (x & ((1ULL << width) - 1)); }

}  // namespace

SketchParams make_sketch_params(int n, int annotation_bits, double c) {
    if (n < 2) throw Error(ErrorKind::InvalidParams, "sketches need n >= 2");
    if (!(c > 0)) throw Error(ErrorKind::InvalidParams, "sketch constant must be positive");
    SketchParams p;
    p.n = n;
    p.word = word_bits(n);
    p.units = std::max(1, static_cast<int>(std::ceil(c * p.word)));
    auto pairs = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
    p.log_pairs = ceil_log2(pairs);
    p.uid_bits = std::clamp(10 * p.word, 24, 60);
    p.annotation_bits = annotation_bits;
    return p;
}

SeedPack SeedPack::generate(std::uint64_t master, int units, std::uint64_t epoch) {
    SeedPack s;
    s.master_ = master;
    s.epoch_ = epoch;
    std::uint64_t id_state = master ^ 0x5eed1d5eed1dULL;
    for (auto& c : s.id_poly_) c = draw_mod_p(id_state);
    std::uint64_t h_state = master ^ (0xa5a5a5a5ULL + epoch * 0x9e3779b97f4a7c15ULL);
    splitmix(h_state);
    s.hash_.resize(static_cast<std::size_t>(std::max(units, 0)));
    for (auto& h : s.hash_) {
        do h.a = draw_mod_p(h_state);
        while (h.a == 0);
        h.b = draw_mod_p(h_state);
    }
    return s;
}

std::uint64_t SeedPack::uid(Vertex u, Vertex v, int uid_bits) const {
    if (u > v) std::swap(u, v);
    std::uint64_t x = ((static_cast<std::uint64_t>(u) << 31) | static_cast<std::uint64_t>(v)) + 1;
    std::uint64_t acc = 0;
    for (auto c : id_poly_) acc = addmod(mulmod(acc, x), c);
    return low_bits(acc, uid_bits);
}

std::uint64_t SeedPack::hash(int unit, Vertex u, Vertex v, int n, int log_pairs) const {
    if (u > v) std::swap(u, v);
    std::uint64_t x = static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(v);
    const auto& h = hash_[static_cast<std::size_t>(unit)];
    return low_bits(addmod(mulmod(h.a, x), h.b), log_pairs);
}

int SeedPack::top_level(int unit, Vertex u, Vertex v, int n, int log_pairs) const {
    return log_pairs - static_cast<int>(std::bit_width(hash(unit, u, v, n, log_pairs)));
}

BitVec SeedPack::serialize() const {
    BitVec out;
    for (auto c : id_poly_) out.push(c, 61);
    for (const auto& h : hash_) {
        out.push(h.a, 61);
        out.push(h.b, 61);
    }
    return out;
}

SeedPack SeedPack::deserialize(const BitVec& bits, std::uint64_t master, std::uint64_t epoch) {
    SeedPack s;
    s.master_ = master;
    s.epoch_ = epoch;
    BitReader in(bits);
    for (auto& c : s.id_poly_) c = in.read(61);
    while (in.remaining() >= 122) {
        HashPair h;
        h.a = in.read(61);
        h.b = in.read(61);
        s.hash_.push_back(h);
    }
    return s;
}

BitVec encode_eid(const SketchParams& p, const SeedPack& seeds, Vertex a, Vertex b, const BitVec& annotation_a, const BitVec& annotation_b) {
    const BitVec* ann_u = &annotation_a;
    const BitVec* ann_v = &annotation_b;
    if (a > b) {
        std::swap(a, b);
        std::swap(ann_u, ann_v);
    }
    if (static_cast<int>(ann_u->size()) != p.annotation_bits || static_cast<int>(ann_v->size()) != p.annotation_bits)
        throw Error(ErrorKind::Precondition, "annotation width mismatch");
    BitVec eid;
    eid.push(seeds.uid(a, b, p.uid_bits), p.uid_bits);
    eid.push(static_cast<std::uint64_t>(a), p.word);
    eid.push(static_cast<std::uint64_t>(b), p.word);
    eid.append(*ann_u);
    eid.append(*ann_v);
    return eid;
}

ExtEdgeId decode_eid(const SketchParams& p, const BitVec& eid) {
    ExtEdgeId out;
    BitReader in(eid);
    out.uid = in.read(p.uid_bits);
    out.u = static_cast<Vertex>(in.read(p.word));
    out.v = static_cast<Vertex>(in.read(p.word));
    auto base = static_cast<std::size_t>(p.uid_bits + 2 * p.word);
    out.annotation_u = eid.slice(base, static_cast<std::size_t>(p.annotation_bits));
    out.annotation_v = eid.slice(base + static_cast<std::size_t>(p.annotation_bits), static_cast<std::size_t>(p.annotation_bits));
    return out;
}

Sketch::Sketch(const SketchParams& params, SketchTag tag)
    : params_(params), tag_(tag), data_(static_cast<std::size_t>(params.units) * static_cast<std::size_t>(params.levels()) * params.eid_words(), 0) {}

std::uint64_t* Sketch::slot(int unit, int level) {
    return data_.data() + (static_cast<std::size_t>(unit) * static_cast<std::size_t>(params_.levels()) + static_cast<std::size_t>(level)) * params_.eid_words();
}

const std::uint64_t* Sketch::slot(int unit, int level) const {
    return data_.data() + (static_cast<std::size_t>(unit) * static_cast<std::size_t>(params_.levels()) + static_cast<std::size_t>(level)) * params_.eid_words();
}

void Sketch::toggle_edge(const SeedPack& seeds, const BitVec& eid) {
    auto u = static_cast<Vertex>(eid.get(static_cast<std::size_t>(params_.uid_bits), params_.word));
    auto v = static_cast<Vertex>(eid.get(static_cast<std::size_t>(params_.uid_bits + params_.word), params_.word));
    toggle_edge(seeds, u, v, eid);
}

void Sketch::toggle_edge(const SeedPack& seeds, Vertex u, Vertex v, const BitVec& eid) {
    if (static_cast<int>(eid.size()) != params_.eid_bits()) throw Error(ErrorKind::Precondition, "eid width mismatch");
    auto words = eid.words();
    std::size_t nw = params_.eid_words();
    for (int unit = 0; unit < params_.units; ++unit) {
        int top = seeds.top_level(unit, u, v, params_.n, params_.log_pairs);
        for (int level = 0; level <= top; ++level) {
            std::uint64_t* dst = slot(unit, level);
            for (std::size_t i = 0; i < nw; ++i) dst[i] ^= words[i];
        }
    }
}

Sketch& Sketch::operator^=(const Sketch& other) {
    if (!(params_ == other.params_)) throw Error(ErrorKind::TagMismatch, "sketch shapes differ");
    bool compatible = tag_ == other.tag_ || (tag_.tree == other.tag_.tree && (other.tag_.universe == kDeltaUniverse || tag_.universe == kDeltaUniverse));
    if (!compatible) throw Error(ErrorKind::TagMismatch, "sketch tags differ");
    if (tag_.universe == kDeltaUniverse) tag_.universe = other.tag_.universe;
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] ^= other.data_[i];
    return *this;
}

bool Sketch::is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](std::uint64_t w) { return w == 0; });
}

bool Sketch::unit_is_zero(int unit) const {
    const std::uint64_t* first = slot(unit, 0);
    const std::uint64_t* last = first + static_cast<std::size_t>(params_.levels()) * params_.eid_words();
    return std::all_of(first, last, [](std::uint64_t w) { return w == 0; });
}

BitVec Sketch::accumulator(int unit, int level) const {
    BitVec out(static_cast<std::size_t>(params_.eid_bits()));
    auto dst = out.mutable_words();
    const std::uint64_t* src = slot(unit, level);
    std::copy(src, src + params_.eid_words(), dst.begin());
    return out;
}

BitVec Sketch::pack() const {
    BitVec out;
    int full = params_.eid_bits() / 64;
    int rest = params_.eid_bits() % 64;
    for (int unit = 0; unit < params_.units; ++unit) {
        for (int level = 0; level < params_.levels(); ++level) {
            const std::uint64_t* src = slot(unit, level);
            for (int i = 0; i < full; ++i) out.push(src[i], 64);
            if (rest) out.push(src[full], rest);
        }
    }
    return out;
}

Sketch Sketch::unpack(const SketchParams& params, SketchTag tag, const BitVec& bits) {
    Sketch s(params, tag);
    if (bits.size() != params.packed_bits()) throw Error(ErrorKind::Precondition, "packed sketch has wrong size");
    BitReader in(bits);
    int full = params.eid_bits() / 64;
    int rest = params.eid_bits() % 64;
    for (int unit = 0; unit < params.units; ++unit) {
        for (int level = 0; level < params.levels(); ++level) {
            std::uint64_t* dst = s.slot(unit, level);
            for (int i = 0; i < full; ++i) dst[i] = in.read(64);
            if (rest) dst[full] = in.read(rest);
        }
    }
    return s;
}

Sketch vertex_sketch(const SketchParams& params, SketchTag tag, const SeedPack& seeds, std::span<const BitVec> incident_eids) {
    Sketch s(params, tag);
    for (const auto& eid : incident_eids) s.toggle_edge(seeds, eid);
    return s;
}

Sketch cancellation_sketch(const SketchParams& params, const SeedPack& seeds, std::span<const BitVec> eids) {
    return vertex_sketch(params, SketchTag{0, kDeltaUniverse}, seeds, eids);
}

std::optional<ExtEdgeId> extract_outgoing(const Sketch& sketch, int unit, const SeedPack& seeds) {
    const auto& p = sketch.params();
    for (int level = p.levels() - 1; level >= 0; --level) {
        BitVec acc = sketch.accumulator(unit, level);
        if (acc.is_zero()) continue;
        std::uint64_t uid = acc.get(0, p.uid_bits);
        auto u = static_cast<Vertex>(acc.get(static_cast<std::size_t>(p.uid_bits), p.word));
        auto v = static_cast<Vertex>(acc.get(static_cast<std::size_t>(p.uid_bits + p.word), p.word));
        if (!(u < v && v < p.n)) continue;
        if (seeds.uid(u, v, p.uid_bits) != uid) continue;
        if (seeds.top_level(unit, u, v, p.n, p.log_pairs) < level) continue;
        return decode_eid(p, acc);
    }
    return std::nullopt;
}

std::optional<ExtEdgeId> extract_from_units(const Sketch& sketch, int first, int count, const SeedPack& seeds) {
    int units = sketch.params().units;
    for (int i = 0; i < count; ++i) {
        if (auto e = extract_outgoing(sketch, (first + i) % units, seeds)) return e;
    }
    return std::nullopt;
}

UnitStripe phase_stripe(int units, int phases, int phase, int offset) {
    int width = std::max(1, units / std::max(phases, 1));
    return {((phase * width + offset) % units + units) % units, std::min(width, units)};
}

int boruvka_phases(int n) { return std::max(1, static_cast<int>(std::ceil(4.0 * std::log2(std::max(n, 2))))); }

}  // namespace vcut
