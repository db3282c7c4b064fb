#include <algorithm>
#include <memory>

#include "indep_codec.hpp"
#include "vcut/primitives.hpp"

namespace vcut {

using indep::sz;

int ConnectivityTree::index_of_child(Vertex child) const {
    for (std::size_t i = 0; i < components.size(); ++i)
        if (std::binary_search(components[i].children.begin(), components[i].children.end(), child)) return static_cast<int>(i);
    return -1;
}

int ConnectivityTree::index_of_id(Vertex id) const {
    for (std::size_t i = 0; i < components.size(); ++i)
        if (components[i].id == id) return static_cast<int>(i);
    return -1;
}

namespace {

struct DecodedAnnotation {
    AncLabel label;
    std::vector<Vertex> path;
    std::vector<HeavyRecord> records;
};

struct Env {
    Net& net;
    const Preprocessed& pre;
    const IndependentOptions& options;
    IndependentState& st;
    int n = 0;
    std::shared_ptr<const Forest> tree;
    indep::Codec codec;
    std::vector<BitVec> annotation;
    std::vector<std::map<Vertex, BitVec>> neighbor_annotation;

    Env(Net& net_, const Preprocessed& pre_, const IndependentOptions& options_, IndependentState& st_)
        : net(net_), pre(pre_), options(options_), st(st_), n(pre_.n()), tree(std::make_shared<const Forest>(indep::tree_forest(pre_))) {}

    void step(int id, int attempt, ProgramFactory factory) {
        ProgramSpec spec;
        spec.id = AlgoId{family::kIndependentPre, id, attempt, 0};
        spec.factory = std::move(factory);
        net.run_step(std::move(spec));
    }
    int depth(Vertex v) const { return pre[v].depth; }
    IndepVertex& at(Vertex v) { return st.at[sz(v)]; }
    bool in_subtree(Vertex top, const AncLabel& label) const { return is_ancestor(pre[top].label, label); }

    int annotation_bits() const { return codec.lb + codec.count_bits + (st.height + 1) * (codec.w + codec.brief_bits()); }

    BitVec make_annotation(const AncLabel& label, const std::vector<Vertex>& path, const std::vector<HeavyRecord>& records) const {
        BitVec out;
        codec.label(out, label);
        codec.count(out, path.size());
        for (int i = 0; i <= st.height; ++i) codec.vertex(out, sz(i) < path.size() ? path[sz(i)] : 0);
        for (int i = 0; i <= st.height; ++i) codec.brief(out, sz(i) < records.size() ? records[sz(i)] : HeavyRecord{});
        return out;
    }

    DecodedAnnotation read_annotation(const BitVec& bits) const {
        DecodedAnnotation d;
        BitReader in(bits);
        d.label = codec.label(in);
        std::size_t count = codec.count(in);
        for (int i = 0; i <= st.height; ++i) {
            Vertex v = codec.vertex(in);
            if (sz(i) < count) d.path.push_back(v);
        }
        for (int i = 0; i <= st.height; ++i) {
            auto r = codec.brief(in);
            if (sz(i) < count) d.records.push_back(r);
        }
        return d;
    }
};

BitVec number(std::uint64_t value, int width) {
    BitVec out;
    out.push(value, width);
    return out;
}

// Height and the largest number of light ancestors, aggregated at s and broadcast.
void tree_shape(Env& env) {
    const auto& pre = env.pre;
    int bits = width_for(static_cast<std::uint64_t>(env.n));
    auto job = make_converge_job(env.tree, {bits, bits});
    job->kind = CombineKind::Custom;
    job->combine = [bits](int, BitVec& acc, const BitVec& in) { acc.set(0, std::max(acc.get(0, bits), in.get(0, bits)), bits); };
    for (Vertex v = 0; v < env.n; ++v) {
        job->entries[sz(v)][0] = number(static_cast<std::uint64_t>(pre[v].depth), bits);
        job->entries[sz(v)][1] = number(pre[v].label.entries.size() - 1, bits);
    }
    env.step(1, 0, converge_program(job));
    auto cast = std::make_shared<BroadcastJob>();
    cast->forest = env.tree;
    cast->value.assign(sz(env.n), {});
    cast->known_bits = static_cast<std::size_t>(2 * bits);
    BitVec both = job->result[sz(pre.root)][0];
    both.append(job->result[sz(pre.root)][1]);
    cast->value[sz(pre.root)] = both;
    env.step(2, 0, broadcast_program(cast));
    for (Vertex v = 0; v < env.n; ++v)
        if (cast->value[sz(v)] != both) throw Error(ErrorKind::Precondition, "height broadcast incomplete");
    env.st.height = static_cast<int>(both.get(0, bits));
    env.st.max_light = static_cast<int>(both.get(static_cast<std::size_t>(bits), bits));
}

// Components of G[V_x] for every x from sketches restricted by LCA depth.
bool component_ids(Env& env, int attempt) {
    const auto& pre = env.pre;
    auto& st = env.st;
    int H = st.height;
    st.depth_params = pre.params;
    st.depth_seeds = pre.seeds.with_epoch(indep::depth_epoch(attempt));
    const auto& seeds = st.depth_seeds;
    auto bits = static_cast<int>(st.depth_params.packed_bits());
    auto job = make_converge_job(env.tree, std::vector<int>(sz(H + 1), bits));
    job->keep_children = true;
    for (Vertex v = 0; v < env.n; ++v) {
        const auto& vs = pre[v];
        job->up_count[sz(v)] = vs.depth;
        for (Vertex c : vs.children) job->child_up[sz(v)][c] = pre[c].depth;
        if (vs.depth == 0) continue;
        std::vector<std::vector<Vertex>> by_depth(sz(vs.depth));
        for (const auto& [u, eid] : vs.eid) {
            int l = lca_label(vs.label, vs.neighbor_label.at(u)).length();
            by_depth[sz(std::min(l, vs.depth - 1))].push_back(u);
        }
        Sketch acc(st.depth_params, indep::depth_tag(0));
        for (int d = vs.depth - 1; d >= 0; --d) {
            for (Vertex u : by_depth[sz(d)]) acc.toggle_edge(seeds, v, u, vs.eid.at(u));
            job->entries[sz(v)][sz(d)] = acc.pack();
        }
    }
    env.step(3, attempt, converge_program(job));

    for (Vertex x = 0; x < env.n; ++x) {
        const auto& xs = pre[x];
        auto& tree = env.at(x).tree;
        tree = {};
        if (xs.children.empty()) continue;
        int dx = xs.depth;
        std::vector<Part> parts;
        std::vector<AncLabel> child_labels;
        for (Vertex c : xs.children) {
            parts.push_back({Sketch::unpack(st.depth_params, indep::depth_tag(dx), job->from_child[sz(x)].at(c)[sz(dx)]), c});
            child_labels.push_back(xs.neighbor_label.at(c));
        }
        auto child_of = [&](const AncLabel& label) -> int {
            for (std::size_t i = 0; i < child_labels.size(); ++i)
                if (is_ancestor(child_labels[i], label)) return static_cast<int>(i);
            return -1;
        };
        for (const auto& [u, eid] : xs.eid) {
            int i = child_of(xs.neighbor_label.at(u));
            if (i >= 0) parts[sz(i)].sketch.toggle_edge(seeds, x, u, eid);
        }
        auto o = local_boruvka(std::move(parts), seeds, [&](Vertex, const BitVec& a) { return child_of(pre.decode(a)); });
        if (o.exhausted || o.inconsistent) return false;
        std::map<int, HatComponent> grouped;
        for (std::size_t i = 0; i < xs.children.size(); ++i) grouped[o.component[i]].children.push_back(xs.children[i]);
        for (auto& [k, comp] : grouped) {
            std::sort(comp.children.begin(), comp.children.end());
            comp.id = comp.children.back();
            comp.heavy = std::binary_search(comp.children.begin(), comp.children.end(), xs.heavy_child);
            tree.components.push_back(std::move(comp));
        }
        std::sort(tree.components.begin(), tree.components.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        for (std::size_t i = 0; i < tree.components.size(); ++i)
            if (tree.components[i].heavy) tree.heavy = static_cast<int>(i);
    }
    return true;
}

// Entry d at a: presence bit and the LCA label of the neighbors of a outside
// the subtree of a's ancestor at depth d.
void outside_lca(Env& env) {
    const auto& pre = env.pre;
    const auto& codec = env.codec;
    int H = env.st.height;
    int bits = 1 + codec.lb;
    auto encode = [&codec](const AncLabel* label) {
        BitVec out;
        out.push(label ? 1 : 0, 1);
        codec.label(out, label ? *label : AncLabel{});
        return out;
    };
    auto job = make_converge_job(env.tree, std::vector<int>(sz(H + 1), bits));
    job->kind = CombineKind::Custom;
    job->combine = [&codec, encode](int, BitVec& acc, const BitVec& in) {
        if (in.get(0, 1) == 0) return;
        BitReader rin(in, 1);
        AncLabel b = codec.label(rin);
        if (acc.get(0, 1) == 0) {
            acc = encode(&b);
            return;
        }
        BitReader racc(acc, 1);
        AncLabel a = codec.label(racc);
        auto l = lca_label(a, b);
        acc = encode(&l);
    };
    job->keep_children = true;
    for (Vertex v = 0; v < env.n; ++v) {
        const auto& vs = pre[v];
        job->up_count[sz(v)] = vs.depth;
        for (Vertex c : vs.children) job->child_up[sz(v)][c] = pre[c].depth;
        for (int d = 0; d < vs.depth; ++d) {
            std::optional<AncLabel> acc;
            for (const auto& [u, label] : vs.neighbor_label) {
                if (lca_label(vs.label, label).length() >= d) continue;
                acc = acc ? lca_label(*acc, label) : label;
            }
            job->entries[sz(v)][sz(d)] = encode(acc ? &*acc : nullptr);
        }
    }
    env.step(4, 0, converge_program(job));

    for (Vertex x = 0; x < env.n; ++x) {
        auto& xv = env.at(x);
        xv.record = {};
        xv.r_label = {};
        if (x == pre.root || xv.tree.heavy < 0) continue;
        const auto& heavy = xv.tree.components[sz(xv.tree.heavy)];
        std::optional<AncLabel> acc;
        int dx = pre[x].depth;
        for (Vertex c : heavy.children) {
            const BitVec& got = job->from_child[sz(x)].at(c)[sz(dx)];
            if (got.get(0, 1) == 0) continue;
            BitReader in(got, 1);
            AncLabel l = codec.label(in);
            acc = acc ? lca_label(*acc, l) : l;
        }
        if (!acc) throw Error(ErrorKind::NotSpanning, "heavy component of " + std::to_string(x) + " has no outside neighbor");
        xv.r_label = *acc;
        xv.record.present = true;
        xv.record.r_label = *acc;
        xv.record.heavy_id = heavy.id;
    }
}

// Root paths and ancestor records streamed down T, then exchanged with neighbors.
void root_paths(Env& env) {
    const auto& pre = env.pre;
    const auto& codec = env.codec;
    auto down = std::make_shared<StreamDownJob>();
    down->forest = env.tree;
    down->own_items = [&env, &codec](Vertex self, Vertex) {
        BitVec b;
        codec.vertex(b, self);
        codec.brief(b, env.at(self).record);
        return std::vector<BitVec>{b};
    };
    env.step(5, 0, stream_down_program(down));
    for (Vertex v = 0; v < env.n; ++v) {
        auto& vv = env.at(v);
        vv.root_path.clear();
        vv.ancestor_records.clear();
        const auto& got = down->received[sz(v)];
        for (auto it = got.rbegin(); it != got.rend(); ++it) {
            BitReader in(*it);
            vv.root_path.push_back(codec.vertex(in));
            vv.ancestor_records.push_back(codec.brief(in));
        }
        vv.root_path.push_back(v);
        vv.ancestor_records.push_back(vv.record);
        if (static_cast<int>(vv.root_path.size()) != pre[v].depth + 1 || vv.root_path.front() != pre.root)
            throw Error(ErrorKind::Precondition, "root path stream incomplete");
    }

    auto ex = std::make_shared<ExchangeJob>();
    ex->member.assign(sz(env.n), 1);
    ex->allowed = [](Vertex, Vertex) { return true; };
    ex->payload = [&env, &codec](Vertex self, Vertex) {
        const auto& vv = env.at(self);
        BitVec b;
        codec.path(b, vv.root_path);
        for (const auto& r : vv.ancestor_records) codec.brief(b, r);
        return b;
    };
    env.step(6, 0, exchange_program(ex));
    env.annotation.assign(sz(env.n), {});
    env.neighbor_annotation.assign(sz(env.n), {});
    for (Vertex v = 0; v < env.n; ++v) {
        auto& vv = env.at(v);
        env.annotation[sz(v)] = env.make_annotation(pre[v].label, vv.root_path, vv.ancestor_records);
        vv.neighbor_root_path.clear();
        for (const auto& [u, bits] : ex->inbox[sz(v)]) {
            BitReader in(bits);
            auto path = codec.path(in);
            std::vector<HeavyRecord> records;
            for (std::size_t i = 0; i < path.size(); ++i) records.push_back(codec.brief(in));
            env.neighbor_annotation[sz(v)][u] = env.make_annotation(pre[v].neighbor_label.at(u), path, records);
            vv.neighbor_root_path[u] = std::move(path);
        }
    }
}

// Path sketches over G with root paths and records in the identifiers; x
// extracts one edge leaving each component of G[V_x] to the rest of G \ {x}.
bool connectivity_trees(Env& env, int attempt) {
    const auto& pre = env.pre;
    auto& st = env.st;
    st.path_params = make_sketch_params(env.n, env.annotation_bits(), env.options.path_sketch_c);
    st.path_seeds = SeedPack::generate(pre.options.master_seed, st.path_params.units, indep::path_epoch(attempt));
    const auto& params = st.path_params;
    const auto& seeds = st.path_seeds;
    std::vector<std::map<Vertex, BitVec>> eids(sz(env.n));
    auto job = make_converge_job(env.tree, {static_cast<int>(params.packed_bits())});
    job->keep_children = true;
    for (Vertex v = 0; v < env.n; ++v) {
        std::vector<BitVec> incident;
        for (const auto& [u, other] : env.neighbor_annotation[sz(v)]) {
            auto eid = encode_eid(params, seeds, v, u, env.annotation[sz(v)], other);
            incident.push_back(eid);
            eids[sz(v)][u] = std::move(eid);
        }
        job->entries[sz(v)][0] = vertex_sketch(params, indep::path_tag(), seeds, incident).pack();
    }
    env.step(7, attempt, converge_program(job));

    for (Vertex x = 0; x < env.n; ++x) {
        auto& xv = env.at(x);
        xv.path_records.clear();
        if (x == pre.root) continue;
        const auto& xs = pre[x];
        for (auto& comp : xv.tree.components) {
            Sketch s(params, indep::path_tag());
            std::vector<AncLabel> labels;
            for (Vertex c : comp.children) {
                s ^= Sketch::unpack(params, indep::path_tag(), job->from_child[sz(x)].at(c)[0]);
                labels.push_back(xs.neighbor_label.at(c));
            }
            auto inside = [&](const AncLabel& l) {
                return std::any_of(labels.begin(), labels.end(), [&](const AncLabel& c) { return is_ancestor(c, l); });
            };
            for (const auto& [u, eid] : eids[sz(x)])
                if (inside(xs.neighbor_label.at(u))) s.toggle_edge(seeds, x, u, eid);
            auto e = extract_from_units(s, 0, params.units, seeds);
            if (!e) return false;
            auto a = env.read_annotation(e->annotation_u);
            auto b = env.read_annotation(e->annotation_v);
            Vertex in_v = e->u, out_v = e->v;
            if (!inside(a.label)) {
                std::swap(a, b);
                std::swap(in_v, out_v);
            }
            if (!inside(a.label) || inside(b.label) || env.in_subtree(x, b.label)) return false;
            if (std::find(b.path.begin(), b.path.end(), x) != b.path.end() || b.path.empty() || b.path.back() != out_v) return false;
            comp.u = out_v;
            comp.v = in_v;
            comp.u_label = b.label;
            comp.path = b.path;
            for (std::size_t d = 0; d < b.path.size(); ++d) xv.path_records[b.path[d]] = b.records[d];
        }
        if (xv.tree.heavy >= 0) {
            const auto& heavy = xv.tree.components[sz(xv.tree.heavy)];
            int len = xv.r_label.length();
            if (len < 0 || len >= static_cast<int>(heavy.path.size()) || indep::label_prefix(heavy.u_label, len) != xv.r_label)
                throw Error(ErrorKind::Precondition, "r(x) off the path of the heavy component");
            xv.r = heavy.path[sz(len)];
            xv.record.heavy_path = heavy.compressed();
        }
    }
    return true;
}

AncestorItem item_for(const Env& env, Vertex x, Vertex child) {
    const auto& xv = env.st[x];
    AncestorItem it;
    int i = xv.tree.index_of_child(child);
    const auto& comp = xv.tree.components[sz(i)];
    it.comp = comp.id;
    it.heavy_comp = comp.heavy;
    it.has_path = x != env.pre.root;
    if (it.has_path) it.cpath = comp.compressed();
    it.light = !env.pre[child].heavy;
    if (it.light && it.has_path) it.full_path = comp.path;
    return it;
}

// Every u learns its component and path at each ancestor; neighbors exchange them.
void distribute_paths(Env& env) {
    const auto& pre = env.pre;
    const auto& codec = env.codec;
    auto down = std::make_shared<StreamDownJob>();
    down->forest = env.tree;
    down->own_items = [&env, &codec](Vertex self, Vertex child) {
        BitVec b;
        codec.item(b, item_for(env, self, child));
        return std::vector<BitVec>{b};
    };
    env.step(8, 0, stream_down_program(down));
    for (Vertex v = 0; v < env.n; ++v) {
        auto& vv = env.at(v);
        vv.items.clear();
        const auto& got = down->received[sz(v)];
        for (auto it = got.rbegin(); it != got.rend(); ++it) {
            BitReader in(*it);
            vv.items.push_back(codec.item(in));
        }
        if (static_cast<int>(vv.items.size()) != pre[v].depth) throw Error(ErrorKind::Precondition, "path stream incomplete");
    }

    auto ex = std::make_shared<ExchangeJob>();
    ex->member.assign(sz(env.n), 1);
    ex->allowed = [](Vertex, Vertex) { return true; };
    ex->payload = [&env, &codec](Vertex self, Vertex) {
        BitVec b;
        for (const auto& it : env.at(self).items) codec.item(b, it);
        return b;
    };
    env.step(9, 0, exchange_program(ex));
    for (Vertex v = 0; v < env.n; ++v) {
        auto& vv = env.at(v);
        vv.neighbor_items.clear();
        for (const auto& [u, bits] : ex->inbox[sz(v)]) {
            BitReader in(bits);
            auto& list = vv.neighbor_items[u];
            for (int d = 0; d < pre[u].depth; ++d) list.push_back(codec.item(in));
        }
    }
}

// v_C reports to x, for the vertices y on π(s,u_C), the path u_C holds for
// C_{y,u_C}. For the heavy component only steps into light children are sent.
void escape_routes(Env& env) {
    const auto& pre = env.pre;
    const auto& codec = env.codec;
    auto route = std::make_shared<RouteJob>();
    route->outgoing.assign(sz(env.n), {});
    for (Vertex v = 0; v < env.n; ++v) {
        const auto& vv = env.st[v];
        for (int dx = 1; dx < pre[v].depth; ++dx) {
            const auto& it = vv.items[sz(dx)];
            if (!it.has_path || it.cpath.v != v) continue;
            Vertex u = it.cpath.u;
            const auto& theirs = vv.neighbor_items.at(u);
            BitVec body;
            std::vector<std::pair<int, CompressedPath>> entries;
            for (int d = 0; d < pre[u].depth; ++d) {
                if (!theirs[sz(d)].has_path) continue;
                if (it.heavy_comp && !indep::light_at(it.cpath.u_label, d + 1)) continue;
                entries.push_back({d, theirs[sz(d)].cpath});
            }
            codec.count(body, entries.size());
            for (const auto& [d, p] : entries) {
                codec.count(body, sz(d));
                codec.cpath(body, p);
            }
            route->paths.push_back(indep::up_path(pre, v, vv.root_path[sz(dx)]));
            route->outgoing[sz(v)].push_back({static_cast<int>(route->paths.size()) - 1, body});
        }
    }
    env.step(10, 0, route_program(route));
    for (Vertex x = 0; x < env.n; ++x) {
        auto& xv = env.at(x);
        xv.escape.assign(xv.tree.components.size(), {});
        for (const auto& packet : route->delivered[sz(x)]) {
            Vertex from = route->paths[sz(packet.path)].front();
            int k = -1;
            for (std::size_t i = 0; i < xv.tree.components.size(); ++i)
                if (xv.tree.components[i].v == from) k = static_cast<int>(i);
            if (k < 0) throw Error(ErrorKind::Precondition, "escape report from an unknown endpoint");
            const auto& comp = xv.tree.components[sz(k)];
            BitReader in(packet.body);
            std::size_t count = codec.count(in);
            for (std::size_t i = 0; i < count; ++i) {
                auto d = codec.count(in);
                xv.escape[sz(k)][comp.path.at(d)] = codec.cpath(in);
            }
        }
    }
}

// Each v tells each neighbor y the x's with v in LDS(x,y).
void lds_markers(Env& env) {
    const auto& pre = env.pre;
    const auto& codec = env.codec;
    auto marks = std::make_shared<std::vector<std::map<Vertex, std::vector<Vertex>>>>(sz(env.n));
    for (Vertex v = 0; v < env.n; ++v) {
        const auto& vv = env.st[v];
        for (int dx = 1; dx < pre[v].depth; ++dx) {
            const auto& it = vv.items[sz(dx)];
            if (!it.light || !it.has_path) continue;
            Vertex x = vv.root_path[sz(dx)];
            AncLabel xl = indep::label_prefix(pre[v].label, dx);
            for (Vertex y : it.full_path) {
                if (!pre.at[sz(v)].neighbor_label.count(y)) continue;
                const auto& yl = pre[v].neighbor_label.at(y);
                if (is_ancestor(xl, yl) || is_ancestor(yl, xl)) continue;
                (*marks)[sz(v)][y].push_back(x);
            }
        }
    }
    auto ex = std::make_shared<ExchangeJob>();
    ex->member.assign(sz(env.n), 1);
    ex->allowed = [marks](Vertex self, Vertex other) { return (*marks)[sz(self)].count(other) > 0; };
    ex->payload = [marks, &codec](Vertex self, Vertex other) {
        BitVec b;
        codec.path(b, (*marks)[sz(self)].at(other));
        return b;
    };
    env.step(11, 0, exchange_program(ex));
    for (Vertex y = 0; y < env.n; ++y) {
        auto& yv = env.at(y);
        yv.lds_markers.clear();
        for (const auto& [u, bits] : ex->inbox[sz(y)]) {
            BitReader in(bits);
            yv.lds_markers[u] = codec.path(in);
        }
    }
}

// Decision-family sketches: own subtree sums, and for every light ancestor the
// subtree sums without the edges to each vertex of its component's path.
void decision_sketches(Env& env) {
    const auto& pre = env.pre;
    auto& st = env.st;
    st.decision_params = make_sketch_params(env.n, 0, env.options.decision_sketch_c);
    st.decision_seeds = SeedPack::generate(pre.options.master_seed, st.decision_params.units, indep::decision_epoch());
    const auto& params = st.decision_params;
    const auto& seeds = st.decision_seeds;
    int cols = st.height + 1;
    int entries = 1 + st.max_light * cols;
    auto bits = static_cast<int>(params.packed_bits());
    auto light_count = [&](Vertex v) { return static_cast<int>(pre[v].label.entries.size()) - 1; };
    auto job = make_converge_job(env.tree, std::vector<int>(sz(entries), bits));
    job->keep_children = true;
    for (Vertex v = 0; v < env.n; ++v) {
        const auto& vs = pre[v];
        auto& vv = env.at(v);
        job->up_count[sz(v)] = 1 + light_count(v) * cols;
        for (Vertex c : vs.children) job->child_up[sz(v)][c] = 1 + light_count(c) * cols;
        std::map<Vertex, BitVec> eid;
        std::vector<BitVec> incident;
        for (const auto& [u, label] : vs.neighbor_label) {
            eid[u] = encode_eid(params, seeds, v, u, {}, {});
            incident.push_back(eid[u]);
        }
        vv.decision_own = vertex_sketch(params, indep::decision_tag(), seeds, incident);
        job->entries[sz(v)][0] = vv.decision_own.pack();
        for (int i = 0; i < light_count(v); ++i) {
            Vertex light_vertex = vs.label.entries[sz(i + 1)].vertex;
            int dx = pre[light_vertex].depth - 1;
            const auto& path = vv.items[sz(dx)].full_path;
            for (int j = 0; j < cols; ++j) {
                Sketch s = vv.decision_own;
                if (sz(j) < path.size() && eid.count(path[sz(j)])) s.toggle_edge(seeds, v, path[sz(j)], eid.at(path[sz(j)]));
                job->entries[sz(v)][sz(1 + i * cols + j)] = s.pack();
            }
        }
    }
    env.step(12, 0, converge_program(job));
    for (Vertex x = 0; x < env.n; ++x) {
        const auto& xs = pre[x];
        auto& xv = env.at(x);
        xv.decision_child.clear();
        xv.decision_row.clear();
        xv.heavy_minus = Sketch(params, indep::decision_tag());
        for (Vertex c : xs.children) {
            const auto& got = job->from_child[sz(x)].at(c);
            xv.decision_child[c] = Sketch::unpack(params, indep::decision_tag(), got[0]);
            if (xs.heavy_child == c || x == pre.root) continue;
            int row = light_count(c) - 1;
            const auto& comp = xv.tree.components[sz(xv.tree.index_of_child(c))];
            auto& cells = xv.decision_row[c];
            for (std::size_t j = 0; j < comp.path.size(); ++j) cells.push_back(Sketch::unpack(params, indep::decision_tag(), got[sz(1 + row * cols) + j]));
        }
        if (xv.tree.heavy < 0 || x == pre.root) continue;
        const auto& heavy = xv.tree.components[sz(xv.tree.heavy)];
        std::vector<AncLabel> labels;
        for (Vertex c : heavy.children) {
            xv.heavy_minus ^= xv.decision_child.at(c);
            labels.push_back(xs.neighbor_label.at(c));
        }
        for (const auto& [u, label] : xs.neighbor_label)
            if (std::any_of(labels.begin(), labels.end(), [&](const AncLabel& c) { return is_ancestor(c, label); }))
                xv.heavy_minus.toggle_edge(seeds, x, u, encode_eid(params, seeds, x, u, {}, {}));
    }
}

// Every vertex learns sketch_{G \ {y}}(H_y) of each ancestor y.
void stream_heavy_sketches(Env& env) {
    const auto& params = env.st.decision_params;
    auto down = std::make_shared<StreamDownJob>();
    down->forest = env.tree;
    down->own_items = [&env](Vertex self, Vertex) {
        const auto& vv = env.at(self);
        BitVec b;
        b.push(vv.record.present ? 1 : 0, 1);
        if (vv.record.present) b.append(vv.heavy_minus.pack());
        return std::vector<BitVec>{b};
    };
    env.step(13, 0, stream_down_program(down));
    for (Vertex v = 0; v < env.n; ++v) {
        auto& vv = env.at(v);
        vv.ancestor_heavy_minus.clear();
        const auto& got = down->received[sz(v)];
        for (auto it = got.rbegin(); it != got.rend(); ++it) {
            if (it->get(0, 1) == 0)
                vv.ancestor_heavy_minus.emplace_back(params, indep::decision_tag());
            else
                vv.ancestor_heavy_minus.push_back(Sketch::unpack(params, indep::decision_tag(), it->slice(1, it->size() - 1)));
        }
    }
}

}  // namespace

IndependentState build_independent_state(Net& net, const Preprocessed& pre, const IndependentOptions& options) {
    IndependentState st;
    st.at.assign(sz(pre.n()), {});
    Env env(net, pre, options, st);
    for (Vertex v = 0; v < pre.n(); ++v)
        if (pre[v].cut) throw Error(ErrorKind::NotSpanning, "pair detection needs a graph without cut vertices");
    tree_shape(env);
    env.codec = indep::Codec(pre, st.height);
    for (int attempt = 0; !component_ids(env, attempt); ++attempt) {
        if (attempt >= options.max_retries) throw Error(ErrorKind::ExtractionExhausted, "component ids still growable after all retries");
        ++st.depth_retries;
    }
    outside_lca(env);
    root_paths(env);
    for (int attempt = 0; !connectivity_trees(env, attempt); ++attempt) {
        if (attempt >= options.max_retries) throw Error(ErrorKind::ExtractionExhausted, "path sketch extraction failed after all retries");
        ++st.path_retries;
    }
    distribute_paths(env);
    escape_routes(env);
    lds_markers(env);
    decision_sketches(env);
    stream_heavy_sketches(env);
    return st;
}

}  // namespace vcut
