#include "vcut/cut_vertex.hpp"

#include <algorithm>
#include <memory>

#include "vcut/error.hpp"
#include "vcut/primitives.hpp"

namespace vcut {

namespace {

std::size_t sz(Vertex v) { return static_cast<std::size_t>(v); }

ProgramSpec step_spec(int step, ProgramFactory factory) {
    ProgramSpec spec;
    spec.id = AlgoId{family::kCutVertex, step, 0, 0};
    spec.factory = std::move(factory);
    return spec;
}

BitVec number(std::uint64_t value, int width) {
    BitVec out;
    out.push(value, width);
    return out;
}

void assemble_tree(Preprocessed& pre) {
    int n = pre.n();
    BfsTree& t = pre.tree;
    t.root = pre.root;
    t.parent.assign(sz(n), kNone);
    t.depth.assign(sz(n), 0);
    t.children.assign(sz(n), {});
    t.order.clear();
    for (Vertex v = 0; v < n; ++v) {
        t.parent[sz(v)] = pre[v].parent;
        t.depth[sz(v)] = pre[v].depth;
        t.children[sz(v)] = pre[v].children;
        t.order.push_back(v);
    }
    std::stable_sort(t.order.begin(), t.order.end(), [&](Vertex a, Vertex b) { return t.depth[sz(a)] < t.depth[sz(b)]; });
    HeavyLight& hl = pre.hl;
    hl.heavy_child.assign(sz(n), kNone);
    hl.is_heavy.assign(sz(n), 0);
    hl.subtree_size.assign(sz(n), 0);
    for (Vertex v = 0; v < n; ++v) {
        hl.heavy_child[sz(v)] = pre[v].heavy_child;
        hl.is_heavy[sz(v)] = pre[v].heavy ? 1 : 0;
        hl.subtree_size[sz(v)] = pre[v].subtree_size;
    }
}

}  // namespace

Preprocessed preprocess(Net& net, const CutVertexOptions& options, std::uint64_t epoch) {
    const Graph& g = net.graph();
    int n = g.n();
    Preprocessed pre;
    pre.options = options;
    pre.root = options.root;
    pre.word = g.word();
    pre.label_capacity = light_capacity(n);
    pre.at.assign(sz(n), {});
    auto& at = pre.at;

    auto flood = make_flood_job(n);
    flood->source[sz(options.root)] = 1;
    net.run_step(step_spec(1, flood_program(flood)));
    auto forest = std::make_shared<const Forest>(forest_from_flood(*flood));
    for (Vertex v = 0; v < n; ++v) {
        if (flood->depth[sz(v)] < 0) throw Error(ErrorKind::Disconnected, "BFS did not reach every vertex");
        at[sz(v)].parent = flood->parent[sz(v)];
        at[sz(v)].children = flood->children[sz(v)];
        at[sz(v)].depth = flood->depth[sz(v)];
    }

    int size_bits = width_for(static_cast<std::uint64_t>(n));
    auto sizes = make_converge_job(forest, {size_bits});
    sizes->kind = CombineKind::Custom;
    sizes->combine = [size_bits](int, BitVec& acc, const BitVec& in) { acc.set(0, acc.get(0, size_bits) + in.get(0, size_bits), size_bits); };
    sizes->keep_children = true;
    for (Vertex v = 0; v < n; ++v) sizes->entries[sz(v)][0] = number(1, size_bits);
    net.run_step(step_spec(2, converge_program(sizes)));
    for (Vertex v = 0; v < n; ++v) {
        auto& st = at[sz(v)];
        st.subtree_size = static_cast<int>(sizes->result[sz(v)][0].get(0, size_bits));
        int best = -1;
        for (Vertex c : st.children) {
            int s = static_cast<int>(sizes->from_child[sz(v)].at(c)[0].get(0, size_bits));
            st.child_size[c] = s;
            if (s > best) best = s, st.heavy_child = c;
        }
    }

    auto notices = std::make_shared<ExchangeJob>();
    notices->member.assign(sz(n), 1);
    notices->allowed = [&at](Vertex self, Vertex other) { return at[sz(other)].parent == self; };
    notices->payload = [&at](Vertex self, Vertex other) { return number(at[sz(self)].heavy_child == other ? 1 : 0, 1); };
    net.run_step(step_spec(3, exchange_program(notices)));
    for (Vertex v = 0; v < n; ++v)
        if (at[sz(v)].parent != kNone) at[sz(v)].heavy = notices->inbox[sz(v)].at(at[sz(v)].parent).get(0, 1) == 1;

    int cap = pre.label_capacity, w = pre.word;
    auto labels = std::make_shared<DowncastJob>();
    labels->forest = forest;
    labels->value.assign(sz(n), {});
    labels->value[sz(options.root)] = label_annotation(AncLabel{{{options.root, 0}}}, cap, w);
    labels->for_child = [&at, cap, w](Vertex self, Vertex child, const BitVec& mine) {
        return label_annotation(extend_label(annotation_label(mine, cap, w), child, at[sz(self)].heavy_child == child), cap, w);
    };
    net.run_step(step_spec(4, downcast_program(labels)));
    for (Vertex v = 0; v < n; ++v) at[sz(v)].label = annotation_label(labels->value[sz(v)], cap, w);

    auto exchange = std::make_shared<ExchangeJob>();
    exchange->member.assign(sz(n), 1);
    exchange->allowed = [](Vertex, Vertex) { return true; };
    exchange->payload = [&labels](Vertex self, Vertex) { return labels->value[sz(self)]; };
    net.run_step(step_spec(5, exchange_program(exchange)));
    for (Vertex v = 0; v < n; ++v)
        for (const auto& [u, bits] : exchange->inbox[sz(v)]) at[sz(v)].neighbor_label[u] = annotation_label(bits, cap, w);

    assemble_tree(pre);
    pre.params = make_sketch_params(n, label_bits(cap, w), options.sketch_c);
    refresh_sketches(net, pre, epoch);
    return pre;
}

void refresh_sketches(Net& net, Preprocessed& pre, std::uint64_t epoch) {
    int n = pre.n();
    auto& at = pre.at;
    auto forest = std::make_shared<Forest>(n);
    for (Vertex v = 0; v < n; ++v) {
        forest->member[sz(v)] = 1;
        forest->parent[sz(v)] = at[sz(v)].parent;
        forest->children[sz(v)] = at[sz(v)].children;
    }

    auto fresh = SeedPack::generate(pre.options.master_seed, pre.params.units, epoch);
    auto seeds = std::make_shared<BroadcastJob>();
    seeds->forest = forest;
    seeds->value.assign(sz(n), {});
    BitVec packed;
    packed.push(pre.options.master_seed, 64);
    packed.push(epoch, 16);
    packed.append(fresh.serialize());
    seeds->known_bits = packed.size();
    seeds->value[sz(pre.root)] = packed;
    net.run_step(step_spec(6, broadcast_program(seeds)));
    for (Vertex v = 0; v < n; ++v) {
        const BitVec& got = seeds->value[sz(v)];
        if (got != packed) throw Error(ErrorKind::Precondition, "seed broadcast incomplete");
    }
    BitReader in(packed);
    auto master = in.read(64);
    auto ep = in.read(16);
    pre.seeds = SeedPack::deserialize(packed.slice(80, packed.size() - 80), master, ep);

    int cap = pre.label_capacity, w = pre.word;
    auto sketches = make_converge_job(forest, {static_cast<int>(pre.params.packed_bits())});
    sketches->keep_children = true;
    for (Vertex v = 0; v < n; ++v) {
        auto& st = at[sz(v)];
        st.eid.clear();
        std::vector<BitVec> incident;
        auto own = label_annotation(st.label, cap, w);
        for (const auto& [u, label] : st.neighbor_label) {
            auto eid = encode_eid(pre.params, pre.seeds, v, u, own, label_annotation(label, cap, w));
            incident.push_back(eid);
            st.eid[u] = std::move(eid);
        }
        st.own_sketch = vertex_sketch(pre.params, tags::base(), pre.seeds, incident);
        sketches->entries[sz(v)][0] = st.own_sketch.pack();
    }
    net.run_step(step_spec(7, converge_program(sketches)));
    for (Vertex v = 0; v < n; ++v) {
        auto& st = at[sz(v)];
        st.subtree_sketch = Sketch::unpack(pre.params, tags::base(), sketches->result[sz(v)][0]);
        st.child_sketch.clear();
        for (const auto& [c, values] : sketches->from_child[sz(v)]) st.child_sketch[c] = Sketch::unpack(pre.params, tags::base(), values[0]);
    }
}

BoruvkaOutcome decide_cut_vertex(const Preprocessed& pre, Vertex x) {
    const auto& st = pre[x];
    std::vector<Part> parts;
    std::vector<std::pair<Vertex, AncLabel>> child_labels;
    for (Vertex c : st.children) {
        parts.push_back({st.child_sketch.at(c), c});
        child_labels.push_back({c, st.neighbor_label.at(c)});
    }
    int outside = -1;
    if (x != pre.root) {
        // sketch(V) is all zeros, so sketch(V \ V(T_x)) = sketch(V(T_x))
        outside = static_cast<int>(parts.size());
        parts.push_back({st.subtree_sketch, pre.root});
    }
    auto part_of = [&](Vertex v, const AncLabel& label) -> int {
        if (v == x) return -1;
        if (!is_ancestor(st.label, label)) return outside;
        for (std::size_t i = 0; i < child_labels.size(); ++i)
            if (is_ancestor(child_labels[i].second, label)) return static_cast<int>(i);
        return -1;
    };
    for (const auto& [u, eid] : st.eid) {
        int p = part_of(u, st.neighbor_label.at(u));
        if (p < 0) throw Error(ErrorKind::Precondition, "neighbor outside every part");
        parts[sz(p)].sketch.toggle_edge(pre.seeds, x, u, eid);
    }
    EndpointClassifier classify = [&](Vertex v, const BitVec& annotation) { return part_of(v, pre.decode(annotation)); };
    return local_boruvka(std::move(parts), pre.seeds, classify);
}

CutVertexResult detect_cut_vertices(Net& net, const CutVertexOptions& options) {
    CutVertexResult result;
    int n = net.graph().n();
    net.begin_stage("cut-vertex");
    try {
        result.pre = preprocess(net, options, 0);
        for (std::uint64_t epoch = 0;; ++epoch) {
            bool failed = false;
            std::vector<BoruvkaOutcome> outcomes;
            for (Vertex x = 0; x < n && !failed; ++x) {
                outcomes.push_back(decide_cut_vertex(result.pre, x));
                failed = outcomes.back().exhausted || outcomes.back().inconsistent;
            }
            if (!failed) {
                for (Vertex x = 0; x < n; ++x) {
                    auto& st = result.pre.at[sz(x)];
                    auto& o = outcomes[sz(x)];
                    st.cut = o.count() > 1;
                    st.phases = o.phases;
                    st.growable = o.growable;
                    st.spanning_edges = std::move(o.merge_edges);
                }
                break;
            }
            if (result.retries >= options.max_retries) throw Error(ErrorKind::ExtractionExhausted, "local Borůvka still growable after all retries");
            ++result.retries;
            refresh_sketches(net, result.pre, epoch + 1);
        }
    } catch (...) {
        net.end_stage();
        throw;
    }
    net.end_stage();

    net.begin_stage("cut-vertex-report");
    auto forest = std::make_shared<Forest>(n);
    for (Vertex v = 0; v < n; ++v) {
        forest->member[sz(v)] = 1;
        forest->parent[sz(v)] = result.pre[v].parent;
        forest->children[sz(v)] = result.pre[v].children;
    }
    auto report = make_converge_job(forest, {n});
    for (Vertex v = 0; v < n; ++v)
        if (result.pre[v].cut) report->entries[sz(v)][0].set(sz(v), 1, 1);
    ProgramSpec spec;
    spec.id = AlgoId{family::kReport, 1, 0, 0};
    spec.factory = converge_program(report);
    net.run_step(std::move(spec));
    net.end_stage();
    const BitVec& bitmap = report->result[sz(options.root)][0];
    for (Vertex v = 0; v < n; ++v)
        if (bitmap.get(sz(v), 1)) result.cut_vertices.push_back(v);
    return result;
}

}  // namespace vcut
