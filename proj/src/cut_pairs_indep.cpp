#include "vcut/cut_pairs_indep.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>

#include "indep_codec.hpp"
#include "vcut/primitives.hpp"

namespace vcut {

using indep::sz;

std::string to_string(Sensitivity s) {
    switch (s) {
        case Sensitivity::Non: return "non";
        case Sensitivity::Pseudo: return "pseudo";
        case Sensitivity::Fully: return "fully";
        case Sensitivity::Unknown: return "unknown";
    }
    return "?";
}

std::string to_string(PairCase c) {
    switch (c) {
        case PairCase::Dependent: return "dependent";
        case PairCase::Light: return "light";
        case PairCase::Mutual: return "mutual";
        case PairCase::NonMutual: return "nonmutual";
    }
    return "?";
}

bool independent(const Preprocessed& pre, Vertex a, Vertex b) {
    return a != b && !indep::is_ancestor_of(pre, a, b) && !indep::is_ancestor_of(pre, b, a);
}

namespace {

int position_on(const HatComponent& comp, Vertex y) {
    auto it = std::find(comp.path.begin(), comp.path.end(), y);
    return it == comp.path.end() ? -1 : static_cast<int>(it - comp.path.begin());
}

// (y, y_h) lies on π_x(s,C), with y at index pos.
bool heavy_step_after(const HatComponent& comp, int pos) {
    return pos >= 0 && comp.path[sz(pos)] != comp.u && !indep::light_at(comp.u_label, pos + 1);
}

}  // namespace

Sensitivity component_sensitivity(const Preprocessed& pre, const IndependentState& st, Vertex x, int comp, Vertex y) {
    const auto& xv = st[x];
    const auto& c = xv.tree.components.at(sz(comp));
    int pos = position_on(c, y);
    if (pos < 0) return Sensitivity::Non;
    if (y == c.u) return Sensitivity::Fully;
    const auto& escapes = xv.escape.at(sz(comp));
    if (auto it = escapes.find(y); it != escapes.end())
        return is_ancestor(pre[x].label, it->second.u_label) ? Sensitivity::Fully : Sensitivity::Pseudo;
    if (c.heavy && heavy_step_after(c, pos)) return Sensitivity::Unknown;
    throw Error(ErrorKind::Precondition, "no escape record for " + std::to_string(y) + " at " + std::to_string(x));
}

std::vector<Vertex> tree_candidates(const Preprocessed& pre, const IndependentState& st, Vertex x) {
    std::set<Vertex> out;
    for (const auto& comp : st[x].tree.components)
        for (Vertex y : comp.path)
            if (independent(pre, x, y)) out.insert(y);
    return {out.begin(), out.end()};
}

std::optional<int> light_witness(const Preprocessed& pre, const IndependentState& st, Vertex x, Vertex y) {
    if (!independent(pre, x, y)) return std::nullopt;
    const auto& tree = st[x].tree;
    for (std::size_t k = 0; k < tree.components.size(); ++k) {
        const auto& c = tree.components[k];
        int pos = position_on(c, y);
        if (pos < 0 || component_sensitivity(pre, st, x, static_cast<int>(k), y) != Sensitivity::Fully) continue;
        if (y == c.u || !heavy_step_after(c, pos)) return static_cast<int>(k);
    }
    return std::nullopt;
}

std::vector<char> lds_members(const Preprocessed& pre, const IndependentState& st, Vertex x, Vertex y) {
    std::vector<char> out(sz(pre.n()), 0);
    if (x == pre.root) return out;
    const auto& tree = st[x].tree;
    for (Vertex c : pre[x].children) {
        if (c == pre[x].heavy_child) continue;
        const auto& comp = tree.components.at(sz(tree.index_of_child(c)));
        if (position_on(comp, y) < 0) continue;
        std::vector<Vertex> stack{c};
        while (!stack.empty()) {
            Vertex v = stack.back();
            stack.pop_back();
            out[sz(v)] = 1;
            for (Vertex w : pre[v].children) stack.push_back(w);
        }
    }
    return out;
}

std::vector<Vertex> component_channel(const Preprocessed& pre, const IndependentState& st, Vertex x, int comp, Vertex y) {
    const auto& c = st[x].tree.components.at(sz(comp));
    auto path = indep::down_path(pre, x, c.v);
    auto up = indep::up_path(pre, c.u, y);
    path.insert(path.end(), up.begin(), up.end());
    return path;
}

NonMutualDecision decide_nonmutual(const Preprocessed& pre, const IndependentState& st, Vertex x, Vertex y) {
    NonMutualDecision d{x, y, false, false, false};
    const auto& xv = st[x];
    if (xv.tree.heavy < 0 || x == pre.root) throw Error(ErrorKind::Precondition, "non-mutual decision needs a heavy component");
    const auto& heavy = xv.tree.components[sz(xv.tree.heavy)];
    int pos = position_on(heavy, y);
    if (pos < 0 || y == xv.r) throw Error(ErrorKind::Precondition, "non-mutual decision needs y on the heavy path above or below r(x)");
    // Below r(x), or the path leaves y through a light child: H_x reaches s.
    if (pos > xv.r_label.length() || !heavy_step_after(heavy, pos)) return d;

    d.by_sketch = true;
    const auto& params = st.decision_params;
    const auto& seeds = st.decision_seeds;
    const auto& xs = pre[x];
    auto cancel_into = [&](Sketch& s, auto&& inside) {
        for (const auto& [u, label] : xs.neighbor_label)
            if (inside(u, label)) s.toggle_edge(seeds, x, u, encode_eid(params, seeds, x, u, {}, {}));
    };
    Sketch sum = xv.heavy_minus;
    for (std::size_t k = 0; k < xv.tree.components.size(); ++k) {
        const auto& comp = xv.tree.components[k];
        if (static_cast<int>(k) == xv.tree.heavy || !heavy_step_after(comp, position_on(comp, y))) continue;
        for (Vertex c : comp.children) {
            sum ^= xv.decision_row.at(c).at(sz(pos));
            const auto& lc = xs.neighbor_label.at(c);
            cancel_into(sum, [&](Vertex, const AncLabel& l) { return is_ancestor(lc, l); });
        }
    }
    auto fetched = xv.fetched.find(y);
    if (fetched == xv.fetched.end()) throw Error(ErrorKind::Precondition, "sketch of H_y was not fetched");
    Sketch hy = fetched->second;
    Vertex heavy_id = xv.path_records.at(y).heavy_id;
    int dy = pre[y].depth;
    cancel_into(hy, [&](Vertex u, const AncLabel& l) {
        return is_ancestor(pre[y].label, l) && l != pre[y].label && xv.neighbor_items.at(u).at(sz(dy)).comp == heavy_id;
    });
    sum ^= hy;
    auto e = extract_from_units(sum, 0, params.units, seeds);
    d.disconnected = !e.has_value();
    d.miss = !e && !sum.is_zero();
    return d;
}

namespace {

struct ChannelPlan {
    Vertex x = kNone;
    Vertex y = kNone;
    int comp = -1;
    PairCase kind = PairCase::Light;
    std::vector<Vertex> path;
};

ProgramSpec single(std::uint32_t fam, std::uint32_t id, ProgramFactory factory) {
    ProgramSpec spec;
    spec.id = AlgoId{fam, id, 0, 0};
    spec.factory = std::move(factory);
    return spec;
}

}  // namespace

IndependentResult detect_independent_pairs(Net& net, const Preprocessed& pre, const IndependentOptions& options) {
    IndependentResult result;
    const int n = pre.n();
    const int w = pre.word;
    std::vector<ChannelPlan> plans;  // ordered light first, then mutual
    std::vector<std::pair<Vertex, Vertex>> fetches;

    net.begin_stage("independent-pre");
    try {
        result.state = build_independent_state(net, pre, options);
        auto& st = result.state;

        // Every x picks C^⟨x,y⟩ for its ordered light pairs and sends I_⟨x,y⟩ along the channel.
        for (Vertex x = 0; x < n; ++x)
            for (Vertex y : tree_candidates(pre, st, x))
                if (auto k = light_witness(pre, st, x, y)) {
                    result.ordered_light.push_back({x, y});
                    plans.push_back({x, y, *k, PairCase::Light, component_channel(pre, st, x, *k, y)});
                }
        std::set<std::pair<Vertex, Vertex>> light(result.ordered_light.begin(), result.ordered_light.end());
        auto heavy_pair = [&](Vertex a, Vertex b) { return !light.count({a, b}) && !light.count({b, a}); };

        // Mutual pairs: r(x) = y and r(y) = x, seen from both sides.
        for (Vertex x = 0; x < n; ++x) {
            const auto& xv = st[x];
            Vertex y = xv.r;
            if (y == kNone || y < x || !independent(pre, x, y) || !heavy_pair(x, y)) continue;
            auto rec = xv.path_records.find(y);
            if (rec == xv.path_records.end() || !rec->second.present || rec->second.r_label != pre[x].label) continue;
            if (st[y].r != x) throw Error(ErrorKind::Precondition, "mutual records disagree");
            result.mutual.push_back({x, y});
            plans.push_back({x, y, xv.tree.heavy, PairCase::Mutual, component_channel(pre, st, x, xv.tree.heavy, y)});
        }

        auto setup = std::make_shared<RouteJob>();
        setup->outgoing.assign(sz(n), {});
        for (std::size_t i = 0; i < plans.size(); ++i) {
            const auto& p = plans[i];
            const auto& comp = st[p.x].tree.components[sz(p.comp)];
            BitVec body;
            body.push(static_cast<std::uint64_t>(p.x), w);
            body.push(static_cast<std::uint64_t>(p.y), w);
            body.push(static_cast<std::uint64_t>(comp.v), w);
            body.push(static_cast<std::uint64_t>(comp.u), w);
            body.push(p.kind == PairCase::Mutual ? 1 : 0, 1);
            setup->paths.push_back(p.path);
            setup->outgoing[sz(p.x)].push_back({static_cast<int>(i), body});
        }
        net.run_step(single(family::kChannelSetup, 1, route_program(setup)));
        std::set<std::pair<Vertex, Vertex>> told;
        for (Vertex y = 0; y < n; ++y)
            for (const auto& packet : setup->delivered[sz(y)]) {
                const auto& p = plans[sz(packet.path)];
                BitReader in(packet.body);
                Vertex x = static_cast<Vertex>(in.read(w));
                Vertex to = static_cast<Vertex>(in.read(w));
                Vertex v = static_cast<Vertex>(in.read(w));
                Vertex u = static_cast<Vertex>(in.read(w));
                if (x != p.x || to != y || p.y != y) throw Error(ErrorKind::Precondition, "channel setup misdelivered");
                auto rebuilt = indep::down_path(pre, x, v);
                auto up = indep::up_path(pre, u, y);
                rebuilt.insert(rebuilt.end(), up.begin(), up.end());
                if (rebuilt != p.path) throw Error(ErrorKind::Precondition, "endpoints disagree on a channel");
                told.insert({x, y});
            }
        if (told.size() != plans.size()) throw Error(ErrorKind::Precondition, "channel setup lost a packet");

        // x fetches sketch_{G\{y}}(H_y) from the heavy mates it has to decide by sketch.
        for (Vertex x = 0; x < n; ++x) {
            const auto& xv = st[x];
            if (x == pre.root || xv.tree.heavy < 0) continue;
            const auto& heavy = xv.tree.components[sz(xv.tree.heavy)];
            for (std::size_t pos = 0; pos < heavy.path.size(); ++pos) {
                Vertex y = heavy.path[pos];
                if (y == xv.r || !independent(pre, x, y) || !heavy_pair(x, y)) continue;
                if (static_cast<int>(pos) > xv.r_label.length() || !heavy_step_after(heavy, static_cast<int>(pos))) continue;
                fetches.push_back({x, y});
            }
        }
        auto request = std::make_shared<RouteJob>();
        request->outgoing.assign(sz(n), {});
        for (std::size_t i = 0; i < fetches.size(); ++i) {
            auto [x, y] = fetches[i];
            request->paths.push_back(component_channel(pre, st, x, st[x].tree.heavy, y));
            BitVec body;
            body.push(static_cast<std::uint64_t>(x), w);
            request->outgoing[sz(x)].push_back({static_cast<int>(i), body});
        }
        net.run_step(single(family::kChannelSetup, 2, route_program(request)));
        auto reply = std::make_shared<RouteJob>();
        reply->outgoing.assign(sz(n), {});
        for (Vertex y = 0; y < n; ++y)
            for (const auto& packet : request->delivered[sz(y)]) {
                auto path = request->paths[sz(packet.path)];
                std::reverse(path.begin(), path.end());
                reply->paths.push_back(std::move(path));
                reply->outgoing[sz(y)].push_back({static_cast<int>(reply->paths.size()) - 1, st[y].heavy_minus.pack()});
            }
        net.run_step(single(family::kChannelSetup, 3, route_program(reply)));
        for (Vertex x = 0; x < n; ++x)
            for (const auto& packet : reply->delivered[sz(x)]) {
                Vertex y = reply->paths[sz(packet.path)].front();
                st.at[sz(x)].fetched[y] = Sketch::unpack(st.decision_params, indep::decision_tag(), packet.body);
            }
    } catch (...) {
        net.end_stage();
        throw;
    }
    net.end_stage();
    const auto& st = result.state;

    // One run per unordered light pair, plus the mutual pairs.
    std::vector<PairRequest> requests;
    std::set<std::pair<Vertex, Vertex>> light(result.ordered_light.begin(), result.ordered_light.end());
    for (const auto& p : plans) {
        if (p.kind == PairCase::Light && p.x > p.y && light.count({p.y, p.x})) continue;
        requests.push_back({p.x, p.y, p.path, p.kind});
    }
    net.begin_stage("independent-pairs", true);
    try {
        PairOptions po;
        po.max_retries = options.max_retries;
        po.check_runs = options.check_runs;
        result.runs = run_pair_connectivity(net, pre, st, requests, po);
    } catch (...) {
        net.end_stage();
        throw;
    }
    net.end_stage();

    for (const auto& [x, y] : fetches) {
        result.nonmutual.push_back(decide_nonmutual(pre, st, x, y));
        if (result.nonmutual.back().miss) ++result.realized_misses;
    }

    // Channel and LDS loads.
    std::map<Edge, int> on_edge;
    for (const auto& p : plans) {
        if (p.kind != PairCase::Light) continue;
        for (std::size_t i = 0; i + 1 < p.path.size(); ++i) result.max_channel_load = std::max(result.max_channel_load, ++on_edge[canonical(p.path[i], p.path[i + 1])]);
    }
    std::vector<int> lds_load(sz(n), 0);
    for (Vertex x = 0; x < n; ++x)
        for (Vertex y : tree_candidates(pre, st, x)) {
            auto members = lds_members(pre, st, x, y);
            for (Vertex v = 0; v < n; ++v) lds_load[sz(v)] += members[sz(v)];
        }
    result.max_lds_load = lds_load.empty() ? 0 : *std::max_element(lds_load.begin(), lds_load.end());

    // Deciders report their cut mates to s.
    std::map<Vertex, std::vector<std::pair<Vertex, PairCase>>> found;
    for (const auto& r : result.runs)
        if (r.disconnected) found[r.x].push_back({r.y, r.kind});
    for (const auto& d : result.nonmutual)
        if (d.disconnected) found[d.x].push_back({d.y, PairCase::NonMutual});
    net.begin_stage("independent-report");
    auto route = std::make_shared<RouteJob>();
    route->outgoing.assign(sz(n), {});
    int count_bits = width_for(static_cast<std::uint64_t>(n));
    for (const auto& [x, list] : found) {
        BitVec body;
        body.push(list.size(), count_bits);
        for (const auto& [y, kind] : list) {
            body.push(static_cast<std::uint64_t>(y), w);
            body.push(static_cast<std::uint64_t>(kind), 2);
        }
        route->paths.push_back(indep::up_path(pre, x, pre.root));
        route->outgoing[sz(x)].push_back({static_cast<int>(route->paths.size()) - 1, body});
    }
    net.run_step(single(family::kReport, 3, route_program(route)));
    net.end_stage();
    std::set<IndependentPair> pairs;
    for (const auto& packet : route->delivered[sz(pre.root)]) {
        Vertex x = route->paths[sz(packet.path)].front();
        BitReader in(packet.body);
        auto count = in.read(count_bits);
        for (std::uint64_t i = 0; i < count; ++i) {
            auto y = static_cast<Vertex>(in.read(w));
            auto kind = static_cast<PairCase>(in.read(2));
            pairs.insert({std::min(x, y), std::max(x, y), kind});
        }
    }
    result.pairs.assign(pairs.begin(), pairs.end());
    return result;
}

}  // namespace vcut
