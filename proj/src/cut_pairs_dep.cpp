#include "vcut/cut_pairs_dep.hpp"

#include <algorithm>
#include <memory>
#include <queue>

#include "vcut/error.hpp"
#include "vcut/primitives.hpp"

namespace vcut {

namespace {

std::size_t sz(Vertex v) { return static_cast<std::size_t>(v); }

int hybrid_capacity(const Preprocessed& pre) { return 2 * pre.label_capacity; }

BitVec encode_hybrid(const Preprocessed& pre, const AncLabel& label) { return label_annotation(label, hybrid_capacity(pre), pre.word); }

AncLabel decode_hybrid(const Preprocessed& pre, const BitVec& bits) { return annotation_label(bits, hybrid_capacity(pre), pre.word); }

SketchTag dependent_tag(Vertex y) { return {tags::tilde_tree(y), tags::minus_one(y)}; }

// Tree path from y down to v, y first.
std::vector<Vertex> path_from(const Preprocessed& pre, Vertex y, Vertex v) {
    std::vector<Vertex> path;
    for (Vertex w = v; w != y; w = pre[w].parent) {
        if (w == kNone) throw Error(ErrorKind::Precondition, "vertex outside the subtree");
        path.push_back(w);
    }
    path.push_back(y);
    std::reverse(path.begin(), path.end());
    return path;
}

// One run's per-step job bookkeeping.
struct RunContext {
    DependentRun* run = nullptr;
    std::shared_ptr<const std::vector<char>> footprint_members;
    std::shared_ptr<Forest> subtree;   // T_y rooted at y
    std::shared_ptr<Forest> tilde;     // re-rooted component trees
    std::map<Vertex, std::vector<int>> attached;  // p -> components hanging below it
    std::map<Vertex, int> connector_of;           // r_i -> i
};

GroupSpec group_spec(const RunContext& rc, int step, ProgramFactory factory) {
    GroupSpec g;
    g.group = rc.run->y;
    g.spec.id = AlgoId{family::kDependent, rc.run->y, step, 0};
    g.spec.factory = std::move(factory);
    auto in = rc.footprint_members;
    g.spec.footprint = [in](Vertex a, Vertex b) { return (*in)[sz(a)] || (*in)[sz(b)]; };
    return g;
}

bool in_tilde(const DependentRun& run, Vertex v) { return run.in_subtree[sz(v)] && v != run.y; }

void run_sketch_steps(Net& net, const Preprocessed& pre, const SketchParams& params, std::vector<RunContext*> active, int attempt) {
    int n = pre.n();
    std::vector<GroupSpec> specs;
    // Local: identifiers over G \ {y} with hybrid labels, own sketches.
    std::vector<std::shared_ptr<ConvergeJob>> components;
    for (auto* rc : active) {
        auto& run = *rc->run;
        run.seeds = SeedPack::generate(pre.options.master_seed, params.units, dependent_epoch(run.y, attempt));
        auto job = make_converge_job(rc->subtree, {static_cast<int>(params.packed_bits())});
        job->keep_children = true;
        job->entries[sz(run.y)][0] = Sketch(params, dependent_tag(run.y)).pack();
        for (auto& [v, st] : run.at) {
            st.eid.clear();
            std::vector<BitVec> incident;
            auto own = encode_hybrid(pre, st.label);
            for (const auto& [u, label] : st.neighbor_label) {
                auto eid = encode_eid(params, run.seeds, v, u, own, encode_hybrid(pre, label));
                incident.push_back(eid);
                st.eid[u] = std::move(eid);
            }
            st.own_sketch = vertex_sketch(params, dependent_tag(run.y), run.seeds, incident);
            job->entries[sz(v)][0] = st.own_sketch.pack();
        }
        specs.push_back(group_spec(*rc, 12, converge_program(job)));
        components.push_back(job);
    }
    net.run_step(std::move(specs));

    // y combines component sketches along the component tree and routes them to the connectors.
    std::vector<std::shared_ptr<RouteJob>> routes;
    specs.clear();
    for (std::size_t a = 0; a < active.size(); ++a) {
        auto& run = *active[a]->run;
        const auto& ct = run.ct;
        std::vector<Sketch> comp(sz(ct.count()), Sketch(params, dependent_tag(run.y)));
        for (int i = 1; i < ct.count(); ++i) comp[sz(i)] = Sketch::unpack(params, dependent_tag(run.y), components[a]->from_child[sz(run.y)].at(ct.head[sz(i)])[0]);
        // children before parents: reverse BFS order over the component tree
        std::vector<int> order{ct.root};
        for (std::size_t k = 0; k < order.size(); ++k)
            for (int c : ct.children[sz(order[k])]) order.push_back(c);
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if (ct.parent[sz(*it)] > 0) comp[sz(ct.parent[sz(*it)])] ^= comp[sz(*it)];
        auto route = std::make_shared<RouteJob>();
        route->outgoing.assign(sz(n), {});
        for (int i = 1; i < ct.count(); ++i) {
            route->paths.push_back(path_from(pre, run.y, ct.inner[sz(i)]));
            route->outgoing[sz(run.y)].push_back({static_cast<int>(route->paths.size()) - 1, comp[sz(i)].pack()});
        }
        specs.push_back(group_spec(*active[a], 13, route_program(route)));
        routes.push_back(route);
    }
    net.run_step(std::move(specs));

    std::vector<std::shared_ptr<ExchangeJob>> handoffs;
    specs.clear();
    for (std::size_t a = 0; a < active.size(); ++a) {
        auto* rc = active[a];
        auto& run = *rc->run;
        std::map<Vertex, BitVec> received;
        for (Vertex v = 0; v < n; ++v)
            for (const auto& packet : routes[a]->delivered[sz(v)]) received[v] = packet.body;
        for (auto& [v, st] : run.at) {
            if (!rc->connector_of.count(v)) continue;
            if (!received.count(v)) throw Error(ErrorKind::Precondition, "connector sketch not delivered");
            st.subtree_sketch = Sketch::unpack(params, dependent_tag(run.y), received.at(v));
        }
        auto ex = std::make_shared<ExchangeJob>();
        ex->member.assign(sz(n), 0);
        for (const auto& [v, st] : run.at) ex->member[sz(v)] = 1;
        const DependentRun* rp = &run;
        const RunContext* ctx = rc;
        ex->allowed = [ctx, rp](Vertex self, Vertex other) {
            auto it = ctx->connector_of.find(self);
            return it != ctx->connector_of.end() && rp->ct.outer[sz(it->second)] == other;
        };
        ex->payload = [rp](Vertex self, Vertex) { return rp->at.at(self).subtree_sketch.pack(); };
        specs.push_back(group_spec(*rc, 14, exchange_program(ex)));
        handoffs.push_back(ex);
    }
    net.run_step(std::move(specs));

    std::vector<std::shared_ptr<ConvergeJob>> betas;
    specs.clear();
    for (std::size_t a = 0; a < active.size(); ++a) {
        auto* rc = active[a];
        auto& run = *rc->run;
        auto job = make_converge_job(rc->tilde, {static_cast<int>(params.packed_bits())});
        job->keep_children = true;
        for (auto& [v, st] : run.at) {
            Sketch beta = st.own_sketch;
            st.child_sketch.clear();
            for (const auto& [r, bits] : handoffs[a]->inbox[sz(v)]) {
                auto s = Sketch::unpack(params, dependent_tag(run.y), bits);
                beta ^= s;
                st.child_sketch[r] = std::move(s);
            }
            job->entries[sz(v)][0] = beta.pack();
        }
        specs.push_back(group_spec(*rc, 15, converge_program(job)));
        betas.push_back(job);
    }
    net.run_step(std::move(specs));

    for (std::size_t a = 0; a < active.size(); ++a) {
        auto& run = *active[a]->run;
        for (auto& [v, st] : run.at) {
            auto total = Sketch::unpack(params, dependent_tag(run.y), betas[a]->result[sz(v)][0]);
            if (active[a]->connector_of.count(v) && !(total == st.subtree_sketch))
                throw Error(ErrorKind::Precondition, "re-rooted subtree sketch disagrees with the coordinator");
            st.subtree_sketch = std::move(total);
            for (const auto& [c, values] : betas[a]->from_child[sz(v)]) st.child_sketch[c] = Sketch::unpack(params, dependent_tag(run.y), values[0]);
        }
    }
}

}  // namespace

int ComponentTree::component_of(const Preprocessed& pre, const AncLabel& label) const {
    if (!is_ancestor(pre[y].label, label)) return 0;
    for (int i = 1; i < count(); ++i)
        if (is_ancestor(pre[y].neighbor_label.at(head[sz(i)]), label)) return i;
    return -1;
}

ComponentTree build_component_tree(const Preprocessed& pre, Vertex y) {
    const auto& st = pre[y];
    if (st.cut) throw Error(ErrorKind::NotSpanning, "vertex " + std::to_string(y) + " is a cut vertex");
    ComponentTree ct;
    ct.y = y;
    ct.has_outside = y != pre.root;
    ct.head.push_back(kNone);
    ct.size.push_back(0);
    for (Vertex c : st.children) {
        ct.head.push_back(c);
        ct.size.push_back(st.child_size.at(c));
    }
    int k = ct.count();
    ct.parent.assign(sz(k), -1);
    ct.inner.assign(sz(k), kNone);
    ct.outer.assign(sz(k), kNone);
    ct.children.assign(sz(k), {});
    ct.tilde_size.assign(sz(k), 0);
    if (ct.has_outside) {
        ct.root = 0;
    } else {
        // no component above the root: the component headed by the smallest child id is the new root
        ct.root = 1;
        for (int i = 2; i < k; ++i)
            if (ct.head[sz(i)] < ct.head[sz(ct.root)]) ct.root = i;
        if (k > 1) ct.inner[sz(ct.root)] = ct.head[sz(ct.root)];
    }
    int present = ct.has_outside ? k : k - 1;
    if (static_cast<int>(st.spanning_edges.size()) != std::max(0, present - 1))
        throw Error(ErrorKind::NotSpanning, "joining edge count does not match the component count");

    std::vector<std::vector<std::pair<int, std::size_t>>> adj(sz(k));
    std::vector<std::pair<int, int>> ends;
    for (std::size_t e = 0; e < st.spanning_edges.size(); ++e) {
        const auto& edge = st.spanning_edges[e];
        int a = ct.component_of(pre, pre.decode(edge.annotation_u));
        int b = ct.component_of(pre, pre.decode(edge.annotation_v));
        if (a < 0 || b < 0 || a == b || (!ct.has_outside && (a == 0 || b == 0)))
            throw Error(ErrorKind::NotSpanning, "joining edge does not connect two components");
        ends.push_back({a, b});
        adj[sz(a)].push_back({b, e});
        adj[sz(b)].push_back({a, e});
    }
    if (k == 1 || (!ct.has_outside && k == 1)) return ct;
    std::vector<char> seen(sz(k), 0);
    std::queue<int> q;
    q.push(ct.root);
    seen[sz(ct.root)] = 1;
    int reached = 1;
    while (!q.empty()) {
        int c = q.front();
        q.pop();
        for (auto [d, e] : adj[sz(c)]) {
            if (seen[sz(d)]) continue;
            seen[sz(d)] = 1;
            ++reached;
            ct.parent[sz(d)] = c;
            ct.children[sz(c)].push_back(d);
            const auto& edge = st.spanning_edges[e];
            bool u_inside = ends[e].first == d;
            ct.inner[sz(d)] = u_inside ? edge.u : edge.v;
            ct.outer[sz(d)] = u_inside ? edge.v : edge.u;
            q.push(d);
        }
    }
    if (reached != present) throw Error(ErrorKind::NotSpanning, "joining edges leave a component unreached");
    std::vector<int> order{ct.root};
    for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : ct.children[sz(order[i])]) order.push_back(c);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        ct.tilde_size[sz(*it)] += ct.size[sz(*it)];
        if (ct.parent[sz(*it)] >= 0) ct.tilde_size[sz(ct.parent[sz(*it)])] += ct.tilde_size[sz(*it)];
    }
    return ct;
}

AncLabel DependentRun::label_of(const Preprocessed& pre, Vertex v) const {
    auto it = at.find(v);
    if (it != at.end()) return it->second.label;
    return pre[v].label;
}

std::uint64_t dependent_epoch(Vertex y, int attempt) { return (1ULL << 40) | (static_cast<std::uint64_t>(y) << 8) | static_cast<std::uint64_t>(attempt); }

BoruvkaOutcome decide_dependent(const Preprocessed& pre, const SketchParams& params, const DependentRun& run, Vertex x) {
    (void)params;
    const auto& st = run[x];
    std::vector<Part> parts;
    std::vector<AncLabel> child_labels;
    for (Vertex c : st.children) {
        parts.push_back({st.child_sketch.at(c), c});
        child_labels.push_back(st.neighbor_label.at(c));
    }
    int outside = -1;
    if (st.parent != kNone) {
        // the sketch of V \ {y} is all zeros
        outside = static_cast<int>(parts.size());
        parts.push_back({st.subtree_sketch, run.ct.has_outside ? pre.root : run.ct.inner[sz(run.ct.root)]});
    }
    auto part_of = [&](Vertex v, const AncLabel& label) -> int {
        if (v == x || v == run.y) return -1;
        if (!is_ancestor(st.label, label)) return outside;
        for (std::size_t i = 0; i < child_labels.size(); ++i)
            if (is_ancestor(child_labels[i], label)) return static_cast<int>(i);
        return -1;
    };
    for (const auto& [u, eid] : st.eid) {
        int p = part_of(u, st.neighbor_label.at(u));
        if (p < 0) throw Error(ErrorKind::Precondition, "neighbor outside every part");
        parts[sz(p)].sketch.toggle_edge(run.seeds, x, u, eid);
    }
    int cap = hybrid_capacity(pre);
    EndpointClassifier classify = [&](Vertex v, const BitVec& annotation) { return part_of(v, annotation_label(annotation, cap, pre.word)); };
    return local_boruvka(std::move(parts), run.seeds, classify);
}


DependentResult detect_dependent_pairs(Net& net, const Preprocessed& pre, const DependentOptions& options) {
    const Graph& g = net.graph();
    int n = g.n();
    int w = pre.word;
    int size_bits = width_for(static_cast<std::uint64_t>(n));
    int hcap = hybrid_capacity(pre);
    DependentResult result;
    result.params = make_sketch_params(n, label_bits(hcap, w), pre.options.sketch_c);
    const SketchParams& params = result.params;

    for (Vertex y = 0; y < n; ++y) {
        if (pre[y].children.empty()) continue;
        DependentRun run;
        run.y = y;
        run.ct = build_component_tree(pre, y);
        run.in_subtree.assign(sz(n), 0);
        for (Vertex v = 0; v < n; ++v) run.in_subtree[sz(v)] = is_ancestor(pre[y].label, pre[v].label) ? 1 : 0;
        result.runs.push_back(std::move(run));
    }

    std::vector<RunContext> contexts(result.runs.size());
    for (std::size_t a = 0; a < result.runs.size(); ++a) {
        auto& rc = contexts[a];
        auto& run = result.runs[a];
        rc.run = &run;
        rc.footprint_members = std::make_shared<const std::vector<char>>(run.in_subtree);
        rc.subtree = std::make_shared<Forest>(n);
        for (Vertex v = 0; v < n; ++v) {
            if (!run.in_subtree[sz(v)]) continue;
            rc.subtree->member[sz(v)] = 1;
            rc.subtree->parent[sz(v)] = v == run.y ? kNone : pre[v].parent;
            rc.subtree->children[sz(v)] = pre[v].children;
            if (v != run.y) run.at[v].component = run.ct.component_of(pre, pre[v].label);
        }
        for (int i = 1; i < run.ct.count(); ++i) {
            rc.connector_of[run.ct.inner[sz(i)]] = i;
            if (run.ct.outer[sz(i)] != kNone) rc.attached[run.ct.outer[sz(i)]].push_back(i);
        }
    }
    auto each = [&](int step, const std::function<ProgramFactory(RunContext&)>& make) {
        std::vector<GroupSpec> specs;
        for (auto& rc : contexts) specs.push_back(group_spec(rc, step, make(rc)));
        net.run_step(std::move(specs));
    };

    net.begin_stage("dependent-pairs", true);
    try {
        // 1. y routes (p_i, subtree size) to each connector r_i.
        std::vector<std::shared_ptr<RouteJob>> intro(contexts.size());
        each(1, [&](RunContext& rc) {
            auto& ct = rc.run->ct;
            auto job = std::make_shared<RouteJob>();
            job->outgoing.assign(sz(n), {});
            for (int i = 1; i < ct.count(); ++i) {
                BitVec body;
                body.push(ct.outer[sz(i)] == kNone ? 0 : 1, 1);
                body.push(ct.outer[sz(i)] == kNone ? 0 : static_cast<std::uint64_t>(ct.outer[sz(i)]), w);
                body.push(static_cast<std::uint64_t>(ct.tilde_size[sz(i)]), size_bits);
                job->paths.push_back(path_from(pre, rc.run->y, ct.inner[sz(i)]));
                job->outgoing[sz(rc.run->y)].push_back({static_cast<int>(job->paths.size()) - 1, body});
            }
            intro[static_cast<std::size_t>(&rc - contexts.data())] = job;
            return route_program(job);
        });
        std::vector<std::map<Vertex, int>> known_size(contexts.size());
        for (std::size_t a = 0; a < contexts.size(); ++a)
            for (Vertex v = 0; v < n; ++v)
                for (const auto& packet : intro[a]->delivered[sz(v)]) {
                    BitReader in(packet.body);
                    bool has_parent = in.read(1) == 1;
                    auto p = static_cast<Vertex>(in.read(w));
                    known_size[a][v] = static_cast<int>(in.read(size_bits));
                    contexts[a].run->at.at(v).parent = has_parent ? p : kNone;
                }

        // 2. BFS from every connector inside its component, over tree edges.
        std::vector<std::shared_ptr<FloodJob>> floods(contexts.size());
        each(2, [&](RunContext& rc) {
            auto job = make_flood_job(n);
            for (Vertex v = 0; v < n; ++v) {
                job->member[sz(v)] = in_tilde(*rc.run, v) ? 1 : 0;
                job->source[sz(v)] = rc.connector_of.count(v) ? 1 : 0;
            }
            job->allowed = [&pre](Vertex self, Vertex other) { return pre[self].parent == other || pre[other].parent == self; };
            floods[static_cast<std::size_t>(&rc - contexts.data())] = job;
            return flood_program(job);
        });
        for (std::size_t a = 0; a < contexts.size(); ++a) {
            auto& rc = contexts[a];
            rc.tilde = std::make_shared<Forest>(forest_from_flood(*floods[a]));
            for (auto& [v, st] : rc.run->at) {
                if (floods[a]->depth[sz(v)] < 0) throw Error(ErrorKind::Precondition, "component BFS missed a vertex");
                if (!rc.connector_of.count(v)) st.parent = floods[a]->parent[sz(v)];
                st.children = floods[a]->children[sz(v)];
            }
        }

        // 3. Each r_j hands its subtree size to p_j.
        std::vector<std::shared_ptr<ExchangeJob>> sizes_up(contexts.size());
        each(3, [&](RunContext& rc) {
            auto job = std::make_shared<ExchangeJob>();
            job->member.assign(sz(n), 0);
            for (const auto& [v, st] : rc.run->at) job->member[sz(v)] = 1;
            const RunContext* ctx = &rc;
            job->allowed = [ctx](Vertex self, Vertex other) {
                auto it = ctx->connector_of.find(self);
                return it != ctx->connector_of.end() && ctx->run->ct.outer[sz(it->second)] == other;
            };
            auto a = static_cast<std::size_t>(&rc - contexts.data());
            job->payload = [&known_size, a, size_bits](Vertex self, Vertex) {
                BitVec b;
                b.push(static_cast<std::uint64_t>(known_size[a].at(self)), size_bits);
                return b;
            };
            sizes_up[a] = job;
            return exchange_program(job);
        });

        // 4. Bottom-up sums of alpha inside each component.
        std::vector<std::shared_ptr<ConvergeJob>> alphas(contexts.size());
        each(4, [&](RunContext& rc) {
            auto a = static_cast<std::size_t>(&rc - contexts.data());
            auto job = make_converge_job(rc.tilde, {size_bits});
            job->kind = CombineKind::Custom;
            job->combine = [size_bits](int, BitVec& acc, const BitVec& in) { acc.set(0, acc.get(0, size_bits) + in.get(0, size_bits), size_bits); };
            job->keep_children = true;
            for (const auto& [v, st] : rc.run->at) {
                std::uint64_t alpha = 1;
                for (const auto& [r, bits] : sizes_up[a]->inbox[sz(v)]) alpha += bits.get(0, size_bits);
                BitVec b;
                b.push(alpha, size_bits);
                job->entries[sz(v)][0] = b;
            }
            alphas[a] = job;
            return converge_program(job);
        });
        for (std::size_t a = 0; a < contexts.size(); ++a) {
            for (auto& [v, st] : contexts[a].run->at) {
                st.subtree_size = static_cast<int>(alphas[a]->result[sz(v)][0].get(0, size_bits));
                st.child_size.clear();
                for (const auto& [c, values] : alphas[a]->from_child[sz(v)]) st.child_size[c] = static_cast<int>(values[0].get(0, size_bits));
                for (const auto& [r, bits] : sizes_up[a]->inbox[sz(v)]) {
                    st.child_size[r] = static_cast<int>(bits.get(0, size_bits));
                    st.children.push_back(r);
                }
                int best = -1;
                st.heavy_child = kNone;
                for (const auto& [c, s] : st.child_size)
                    if (s > best) best = s, st.heavy_child = c;
                if (contexts[a].connector_of.count(v) && known_size[a].at(v) != st.subtree_size)
                    throw Error(ErrorKind::Precondition, "re-rooted subtree size disagrees with the coordinator");
            }
        }

        // 5. Parents tell their children whether they are heavy.
        std::vector<std::shared_ptr<ExchangeJob>> notices(contexts.size());
        each(5, [&](RunContext& rc) {
            auto job = std::make_shared<ExchangeJob>();
            job->member.assign(sz(n), 0);
            for (const auto& [v, st] : rc.run->at) job->member[sz(v)] = 1;
            const DependentRun* rp = rc.run;
            job->allowed = [rp](Vertex self, Vertex other) {
                const auto& kids = rp->at.at(self).children;
                return std::find(kids.begin(), kids.end(), other) != kids.end();
            };
            job->payload = [rp](Vertex self, Vertex other) {
                BitVec b;
                b.push(rp->at.at(self).heavy_child == other ? 1 : 0, 1);
                return b;
            };
            notices[static_cast<std::size_t>(&rc - contexts.data())] = job;
            return exchange_program(job);
        });
        for (std::size_t a = 0; a < contexts.size(); ++a)
            for (auto& [v, st] : contexts[a].run->at) {
                auto it = notices[a]->inbox[sz(v)].find(st.parent);
                st.heavy = it != notices[a]->inbox[sz(v)].end() && it->second.get(0, 1) == 1;
            }

        // 6. Compressed paths from the connectors, top-down inside each component.
        std::vector<std::shared_ptr<DowncastJob>> paths(contexts.size());
        each(6, [&](RunContext& rc) {
            auto job = std::make_shared<DowncastJob>();
            job->forest = rc.tilde;
            job->value.assign(sz(n), {});
            for (const auto& [r, i] : rc.connector_of) job->value[sz(r)] = encode_hybrid(pre, AncLabel{{{r, 0}}});
            const DependentRun* rp = rc.run;
            job->for_child = [rp, &pre](Vertex self, Vertex child, const BitVec& mine) {
                return encode_hybrid(pre, extend_label(decode_hybrid(pre, mine), child, rp->at.at(self).heavy_child == child));
            };
            paths[static_cast<std::size_t>(&rc - contexts.data())] = job;
            return downcast_program(job);
        });
        for (std::size_t a = 0; a < contexts.size(); ++a)
            for (auto& [v, st] : contexts[a].run->at) st.local_path = decode_hybrid(pre, paths[a]->value[sz(v)]);

        // 7. p_j hands its path (its T-label when it lies above y) to r_j.
        std::vector<std::shared_ptr<ExchangeJob>> handback(contexts.size());
        each(7, [&](RunContext& rc) {
            auto job = std::make_shared<ExchangeJob>();
            job->member.assign(sz(n), 0);
            for (const auto& [v, st] : rc.run->at) job->member[sz(v)] = 1;
            for (const auto& [p, comps] : rc.attached) job->member[sz(p)] = 1;
            const RunContext* ctx = &rc;
            job->allowed = [ctx](Vertex self, Vertex other) {
                auto it = ctx->connector_of.find(other);
                return it != ctx->connector_of.end() && ctx->run->ct.outer[sz(it->second)] == self;
            };
            job->payload = [ctx, &pre](Vertex self, Vertex) {
                auto it = ctx->run->at.find(self);
                return encode_hybrid(pre, it != ctx->run->at.end() ? it->second.local_path : pre[self].label);
            };
            handback[static_cast<std::size_t>(&rc - contexts.data())] = job;
            return exchange_program(job);
        });

        // 8. r_j forwards that path and its heavy bit to y.
        std::vector<std::shared_ptr<RouteJob>> reports(contexts.size());
        each(8, [&](RunContext& rc) {
            auto a = static_cast<std::size_t>(&rc - contexts.data());
            auto job = std::make_shared<RouteJob>();
            job->outgoing.assign(sz(n), {});
            for (const auto& [r, i] : rc.connector_of) {
                if (rc.run->ct.outer[sz(i)] == kNone) continue;
                BitVec body = handback[a]->inbox[sz(r)].at(rc.run->ct.outer[sz(i)]);
                body.push(rc.run->at.at(r).heavy ? 1 : 0, 1);
                auto path = path_from(pre, rc.run->y, r);
                std::reverse(path.begin(), path.end());
                job->paths.push_back(std::move(path));
                job->outgoing[sz(r)].push_back({static_cast<int>(job->paths.size()) - 1, body});
            }
            reports[a] = job;
            return route_program(job);
        });

        // y assembles the connector labels along the component tree, then routes them back.
        std::vector<std::shared_ptr<RouteJob>> heads(contexts.size());
        each(9, [&](RunContext& rc) {
            auto a = static_cast<std::size_t>(&rc - contexts.data());
            const auto& ct = rc.run->ct;
            std::map<Vertex, std::pair<AncLabel, bool>> from_connector;
            for (const auto& packet : reports[a]->delivered[sz(rc.run->y)]) {
                Vertex r = reports[a]->paths[sz(packet.path)].front();
                std::size_t lb = static_cast<std::size_t>(label_bits(hcap, w));
                from_connector[r] = {decode_hybrid(pre, packet.body.slice(0, lb)), packet.body.get(lb, 1) == 1};
            }
            std::vector<AncLabel> head_label(sz(ct.count()));
            std::vector<int> order{ct.root};
            for (std::size_t k = 0; k < order.size(); ++k)
                for (int c : ct.children[sz(order[k])]) order.push_back(c);
            for (int i : order) {
                if (i == 0) continue;
                Vertex r = ct.inner[sz(i)];
                int q = ct.parent[sz(i)];
                if (q < 0) {
                    head_label[sz(i)] = AncLabel{{{r, 0}}};
                } else {
                    const auto& [path, heavy] = from_connector.at(r);
                    if (q == 0)
                        head_label[sz(i)] = join_labels(path, AncLabel{{{r, 0}}});
                    else
                        head_label[sz(i)] = extend_label(concat_labels(head_label[sz(q)], path), r, heavy);
                }
            }
            auto job = std::make_shared<RouteJob>();
            job->outgoing.assign(sz(n), {});
            for (int i = 1; i < ct.count(); ++i) {
                job->paths.push_back(path_from(pre, rc.run->y, ct.inner[sz(i)]));
                job->outgoing[sz(rc.run->y)].push_back({static_cast<int>(job->paths.size()) - 1, encode_hybrid(pre, head_label[sz(i)])});
            }
            heads[a] = job;
            return route_program(job);
        });

        // 10. Connector labels broadcast inside each component.
        std::vector<std::shared_ptr<BroadcastJob>> casts(contexts.size());
        each(10, [&](RunContext& rc) {
            auto a = static_cast<std::size_t>(&rc - contexts.data());
            auto job = std::make_shared<BroadcastJob>();
            job->forest = rc.tilde;
            job->value.assign(sz(n), {});
            job->known_bits = static_cast<std::size_t>(label_bits(hcap, w));
            for (Vertex v = 0; v < n; ++v)
                for (const auto& packet : heads[a]->delivered[sz(v)]) job->value[sz(v)] = packet.body;
            casts[a] = job;
            return broadcast_program(job);
        });
        for (std::size_t a = 0; a < contexts.size(); ++a)
            for (auto& [v, st] : contexts[a].run->at) st.label = concat_labels(decode_hybrid(pre, casts[a]->value[sz(v)]), st.local_path);

        // 11. Hybrid labels exchanged inside T_y \ {y}.
        std::vector<std::shared_ptr<ExchangeJob>> labels(contexts.size());
        each(11, [&](RunContext& rc) {
            auto job = std::make_shared<ExchangeJob>();
            job->member.assign(sz(n), 0);
            for (const auto& [v, st] : rc.run->at) job->member[sz(v)] = 1;
            job->allowed = [](Vertex, Vertex) { return true; };
            const DependentRun* rp = rc.run;
            job->payload = [rp, &pre](Vertex self, Vertex) { return encode_hybrid(pre, rp->at.at(self).label); };
            labels[static_cast<std::size_t>(&rc - contexts.data())] = job;
            return exchange_program(job);
        });
        for (std::size_t a = 0; a < contexts.size(); ++a) {
            auto& run = *contexts[a].run;
            for (auto& [v, st] : run.at) {
                st.neighbor_label.clear();
                for (Vertex u : g.adj(v)) {
                    if (u == run.y) continue;
                    auto it = labels[a]->inbox[sz(v)].find(u);
                    st.neighbor_label[u] = it != labels[a]->inbox[sz(v)].end() ? decode_hybrid(pre, it->second) : pre[v].neighbor_label.at(u);
                }
            }
        }

        // 12-15 and the local decisions, retrying failed runs with fresh epochs.
        std::vector<RunContext*> active;
        for (auto& rc : contexts) active.push_back(&rc);
        for (int attempt = 0; !active.empty(); ++attempt) {
            run_sketch_steps(net, pre, params, active, attempt);
            std::vector<RunContext*> failed;
            for (auto* rc : active) {
                auto& run = *rc->run;
                std::map<Vertex, bool> verdict;
                bool ok = true;
                for (const auto& [x, st] : run.at) {
                    auto o = decide_dependent(pre, params, run, x);
                    if (o.exhausted || o.inconsistent) {
                        ok = false;
                        break;
                    }
                    verdict[x] = o.count() > 1;
                }
                if (ok) {
                    for (auto& [x, st] : run.at) st.paired = verdict.at(x);
                    continue;
                }
                if (run.retries >= options.max_retries) throw Error(ErrorKind::ExtractionExhausted, "dependent run for vertex " + std::to_string(run.y) + " still growable after all retries");
                ++run.retries;
                failed.push_back(rc);
            }
            active = std::move(failed);
        }
    } catch (...) {
        net.end_stage();
        throw;
    }
    net.end_stage();

    // Every x reports its partners up the BFS tree.
    net.begin_stage("dependent-report");
    std::map<Vertex, std::vector<Vertex>> partners;
    for (const auto& run : result.runs)
        for (const auto& [x, st] : run.at)
            if (st.paired) partners[x].push_back(run.y);
    auto route = std::make_shared<RouteJob>();
    route->outgoing.assign(sz(n), {});
    for (const auto& [x, ys] : partners) {
        auto path = root_path(pre.tree, x);
        std::reverse(path.begin(), path.end());
        BitVec body;
        body.push(ys.size(), size_bits);
        for (Vertex y : ys) body.push(static_cast<std::uint64_t>(y), w);
        route->paths.push_back(std::move(path));
        route->outgoing[sz(x)].push_back({static_cast<int>(route->paths.size()) - 1, body});
    }
    ProgramSpec spec;
    spec.id = AlgoId{family::kReport, 2, 0, 0};
    spec.factory = route_program(route);
    net.run_step(std::move(spec));
    net.end_stage();
    for (const auto& packet : route->delivered[sz(pre.root)]) {
        Vertex x = route->paths[sz(packet.path)].front();
        BitReader in(packet.body);
        auto count = in.read(size_bits);
        for (std::uint64_t i = 0; i < count; ++i) result.pairs.push_back({x, static_cast<Vertex>(in.read(w))});
    }
    std::sort(result.pairs.begin(), result.pairs.end());
    return result;
}

}  // namespace vcut
