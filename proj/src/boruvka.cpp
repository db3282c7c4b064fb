#include "vcut/boruvka.hpp"

#include <algorithm>
#include <numeric>

namespace vcut {

namespace {

struct UnionFind {
    std::vector<int> up;
    explicit UnionFind(int n) : up(static_cast<std::size_t>(n)) { std::iota(up.begin(), up.end(), 0); }
    int find(int a) {
        while (up[static_cast<std::size_t>(a)] != a) a = up[static_cast<std::size_t>(a)] = up[static_cast<std::size_t>(up[static_cast<std::size_t>(a)])];
        return a;
    }
};

}  // namespace

BoruvkaOutcome local_boruvka(std::vector<Part> parts, const SeedPack& seeds, const EndpointClassifier& classify, int phases) {
    BoruvkaOutcome out;
    int count = static_cast<int>(parts.size());
    if (count == 0) return out;
    const SketchParams params = parts.front().sketch.params();
    if (phases <= 0) phases = boruvka_phases(params.n);
    UnionFind uf(count);
    // sketches and leaders live at the union-find representative
    for (int phase = 0; phase < phases; ++phase) {
        std::vector<int> growable;
        for (int i = 0; i < count; ++i)
            if (uf.find(i) == i && !parts[static_cast<std::size_t>(i)].sketch.is_zero()) growable.push_back(i);
        if (growable.empty()) break;
        out.growable.push_back(static_cast<int>(growable.size()));
        out.phases = phase + 1;
        auto stripe = phase_stripe(params.units, phases, phase);
        std::vector<std::pair<int, ExtEdgeId>> found;
        for (int p : growable) {
            auto e = extract_from_units(parts[static_cast<std::size_t>(p)].sketch, stripe.first, stripe.count, seeds);
            if (e) found.push_back({p, std::move(*e)});
        }
        for (auto& [p, e] : found) {
            int a = classify(e.u, e.annotation_u);
            int b = classify(e.v, e.annotation_v);
            if (a < 0 || b < 0) {
                out.inconsistent = true;
                continue;
            }
            int ra = uf.find(a), rb = uf.find(b), rp = uf.find(p);
            if (ra != rp && rb != rp) {
                out.inconsistent = true;
                continue;
            }
            if (ra == rb) continue;  // an earlier merge in this phase already joined them
            int keep = std::min(ra, rb), drop = std::max(ra, rb);
            auto& kp = parts[static_cast<std::size_t>(keep)];
            auto& dp = parts[static_cast<std::size_t>(drop)];
            kp.sketch ^= dp.sketch;
            kp.leader = std::max(kp.leader, dp.leader);
            uf.up[static_cast<std::size_t>(drop)] = keep;
            out.merge_edges.push_back(std::move(e));
        }
    }
    for (int i = 0; i < count; ++i)
        if (uf.find(i) == i && !parts[static_cast<std::size_t>(i)].sketch.is_zero()) out.exhausted = true;
    std::vector<int> index(static_cast<std::size_t>(count), -1);
    for (int i = 0; i < count; ++i) {
        int r = uf.find(i);
        if (index[static_cast<std::size_t>(r)] < 0) {
            index[static_cast<std::size_t>(r)] = out.count();
            out.final_parts.push_back(parts[static_cast<std::size_t>(r)]);
        }
        out.component.push_back(index[static_cast<std::size_t>(r)]);
    }
    return out;
}

}  // namespace vcut
