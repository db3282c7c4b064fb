#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "indep_codec.hpp"
#include "vcut/primitives.hpp"

// Joint Borůvka over G \ {x,y} simulated by x and y. Each endpoint owns the
// light parts that meet its own children; the parts holding s or a heavy
// subtree are known to both endpoints. Star merges with public coins.

namespace vcut {

using indep::sz;

namespace {

constexpr unsigned kKindS = static_cast<unsigned>(PartKind::SPart);
constexpr unsigned kKindX = static_cast<unsigned>(PartKind::XHeavy);
constexpr unsigned kKindY = static_cast<unsigned>(PartKind::YHeavy);
enum Home { kHomeU = 0, kHomeX = 1, kHomeY = 2 };

std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Held {
    unsigned kind = 0;
    int owner = 0;
    Sketch sketch;
    bool operator==(const Held&) const = default;
};

struct Side {
    Vertex self = kNone;
    Vertex other = kNone;
    std::vector<char> fs;  // per component of self
    bool heavy_fs = false;
    std::map<Vertex, Vertex> child_part;
    std::map<Vertex, Sketch> light;   // owned light parts
    std::map<Vertex, Held> nonlight;  // this endpoint's copy
    std::array<Vertex, 3> home{kNone, kNone, kNone};
    AncLabel other_label;
    bool other_heavy_present = false;
    CompressedPath other_heavy_path;
};

struct Items {
    std::map<Vertex, Sketch> by_light_child;
    Sketch heavy;
    Sketch rest;
    Sketch outside;
};

struct TailInfo {
    Vertex a = kNone;
    Vertex b = kNone;
    Sketch sketch;
};

struct TailRecord {
    bool present = false;
    Vertex target = kNone;
    bool light = false;
    int home = -1;
};

struct Run {
    const PairRequest* req = nullptr;
    int group = 0;
    PairRun out;
    std::array<Vertex, 2> end{};
    std::array<Side, 2> side;
    std::array<Side, 2> initial;
    std::array<Items, 2> items;
    std::vector<signed char> lds;
    std::array<std::vector<Vertex>, 2> lds_children;
    std::map<Vertex, std::vector<Vertex>> below;  // LDS child -> its subtree
    std::shared_ptr<const std::vector<char>> touch;
    std::shared_ptr<const std::set<Edge>> channel_edges;
    int attempt = 0;
    int phase = -1;
    bool done = false;
    bool restarted = false;
    std::vector<Vertex> truth;
    std::vector<Vertex> initial_truth;
    std::vector<Sketch> minus;

    // Scratch of one phase.
    std::array<bool, 2> grow{};
    std::array<bool, 2> light_tails{};
    std::array<bool, 2> spans{};  // side holds children in light parts of the other side
    std::array<std::map<Vertex, ExtEdgeId>, 2> nl_edge;
    std::array<std::map<Vertex, Vertex>, 2> nl_target;
    std::array<std::map<Vertex, TailInfo>, 2> tails;
    std::array<std::map<Vertex, TailInfo>, 2> foreign;
    std::array<std::map<Vertex, TailRecord>, 2> records;
    std::array<std::map<Vertex, Sketch>, 2> absorbed;
    std::array<std::map<Vertex, Vertex>, 2> merged;
    std::array<std::map<Vertex, Vertex>, 2> relabelled;
    std::vector<Vertex> vpart;
    std::vector<char> vlight;
    std::vector<std::optional<TailInfo>> vtail;
    std::vector<std::map<Vertex, Vertex>> nbr_part;
    std::vector<TailRecord> vrecord;
    std::vector<std::optional<Sketch>> vabsorbed;
    std::vector<std::optional<BitVec>> vcarry;
    std::vector<std::optional<BitVec>> vcrossed;
    bool inconsistent = false;

    Vertex x() const { return end[0]; }
    Vertex y() const { return end[1]; }
    bool light_phase() const { return light_tails[0] || light_tails[1]; }
};

class Driver {
public:
    Driver(Net& net, const Preprocessed& pre, const IndependentState& st, const PairOptions& options)
        : net_(net), pre_(pre), st_(st), options_(options), codec_(pre, st.height), n_(pre.n()), phases_(boruvka_phases(pre.n())) {}

    std::vector<PairRun> run(const std::vector<PairRequest>& requests);

private:
    SketchTag part_tag(const Run& r) const { return {tags::kTreeT, tags::minus_two(r.x(), r.y())}; }
    Sketch delta() const { return Sketch(pre_.params, SketchTag{tags::kTreeT, kDeltaUniverse}); }
    Sketch read_sketch(BitReader& in, SketchTag tag) const { return codec_.sketch(in, pre_.params, tag); }
    std::size_t sketch_bits() const { return pre_.params.packed_bits(); }
    bool is_head(const Run& r, Vertex id) const {
        std::uint64_t pair = (static_cast<std::uint64_t>(r.x()) << 32) | static_cast<std::uint64_t>(r.y());
        std::uint64_t when = (static_cast<std::uint64_t>(r.attempt) << 32) | static_cast<std::uint64_t>(r.phase);
        return (mix(pre_.options.master_seed ^ mix(pair ^ mix(when ^ mix(static_cast<std::uint64_t>(id))))) & 1) == 1;
    }
    bool in_subtree(Vertex top, const AncLabel& label) const { return is_ancestor(pre_[top].label, label); }
    Vertex child_toward(Vertex z, const AncLabel& label) const {
        Vertex c = light_child_toward(pre_[z].label, label);
        return c == kNone ? pre_[z].heavy_child : c;
    }
    // A light part is owned by the endpoint its leader hangs from.
    int light_owner(const Run& r, Vertex id) const { return pre_[id].parent == r.x() ? 0 : 1; }
    bool is_light(const Run& r, int z, Vertex id) const { return r.side[sz(z)].nonlight.count(id) == 0; }
    Vertex part_of_child(const Run& r, int z, Vertex c) const { return r.side[sz(z)].child_part.at(c); }

    void add(Run& r, int step, ProgramFactory factory) {
        GroupSpec g;
        g.group = r.group;
        g.spec.id = AlgoId{family::kPairConnectivity, r.group, (r.phase + 1) * 64 + step, r.attempt};
        g.spec.factory = std::move(factory);
        auto touch = r.touch;
        auto edges = r.channel_edges;
        g.spec.footprint = [touch, edges](Vertex a, Vertex b) { return (*touch)[sz(a)] || (*touch)[sz(b)] || edges->count(canonical(a, b)) > 0; };
        specs_.push_back(std::move(g));
    }
    void flush() {
        if (!specs_.empty()) net_.run_step(std::move(specs_));
        specs_.clear();
    }

    std::shared_ptr<RouteJob> channel(const Run& r, BitVec from_x, BitVec from_y) const {
        auto job = std::make_shared<RouteJob>();
        job->paths.push_back(r.req->channel);
        job->paths.emplace_back(r.req->channel.rbegin(), r.req->channel.rend());
        job->outgoing.assign(sz(n_), {});
        job->outgoing[sz(r.x())].push_back({0, std::move(from_x)});
        job->outgoing[sz(r.y())].push_back({1, std::move(from_y)});
        return job;
    }
    static const BitVec& channel_in(const RouteJob& job, const Run& r, int z) {
        for (const auto& p : job.delivered[sz(r.end[sz(z)])])
            if (p.path == 1 - z) return p.body;
        throw Error(ErrorKind::Precondition, "channel message lost");
    }

    // Roots x and y with the LDS subtrees of the picked children.
    template <class Pick>
    std::shared_ptr<const Forest> lds_forest(const Run& r, Pick pick) const {
        Forest f(n_);
        for (int z = 0; z < 2; ++z) {
            Vertex e = r.end[sz(z)];
            for (Vertex c : r.lds_children[sz(z)]) {
                if (!pick(z, c)) continue;
                f.member[sz(e)] = 1;
                f.children[sz(e)].push_back(c);
                for (Vertex v : r.below.at(c)) {
                    f.member[sz(v)] = 1;
                    f.parent[sz(v)] = pre_[v].parent;
                    f.children[sz(v)] = pre_[v].children;
                }
            }
        }
        return std::make_shared<const Forest>(std::move(f));
    }
    static bool empty_forest(const Forest& f) { return std::none_of(f.member.begin(), f.member.end(), [](char c) { return c != 0; }); }
    std::shared_ptr<ExchangeJob> lds_exchange(const Run& r) const {
        auto ex = std::make_shared<ExchangeJob>();
        ex->member.assign(sz(n_), 0);
        for (Vertex v = 0; v < n_; ++v) ex->member[sz(v)] = r.lds[sz(v)] >= 0 ? 1 : 0;
        return ex;
    }
    bool crosses(const Run& r, Vertex self, Vertex other) const {
        return r.lds[sz(other)] >= 0 && r.lds[sz(other)] != r.lds[sz(self)];
    }
    bool same_part_across(const Run& r, Vertex self, Vertex other) const {
        if (!crosses(r, self, other)) return false;
        auto it = r.nbr_part[sz(self)].find(other);
        return it != r.nbr_part[sz(self)].end() && it->second == r.vpart[sz(self)];
    }

    void put_tail(BitVec& b, const TailInfo& t) const {
        codec_.vertex(b, t.a);
        codec_.vertex(b, t.b);
        codec_.sketch(b, t.sketch);
    }
    TailInfo get_tail(BitReader& in, SketchTag tag) const {
        TailInfo t;
        t.a = codec_.vertex(in);
        t.b = codec_.vertex(in);
        t.sketch = read_sketch(in, tag);
        return t;
    }
    int tail_entry_bits() const { return 1 + 2 * codec_.w + static_cast<int>(sketch_bits()); }
    int record_bits() const { return 1 + codec_.w + 1 + 2; }
    void put_record(BitVec& b, const TailRecord& t) const {
        b.push(t.present ? 1 : 0, 1);
        codec_.vertex(b, t.present && t.home < 0 ? t.target : 0);
        b.push(t.light ? 1 : 0, 1);
        b.push(static_cast<std::uint64_t>(t.home + 1), 2);
    }
    TailRecord get_record(BitReader& in) const {
        TailRecord t;
        t.present = in.read(1) == 1;
        t.target = codec_.vertex(in);
        t.light = in.read(1) == 1;
        t.home = static_cast<int>(in.read(2)) - 1;
        if (!t.present) t = {};
        return t;
    }
    // Gather entry: carried flag, tail record, absorbed sketch.
    int gather_bits() const { return 1 + record_bits() + static_cast<int>(sketch_bits()); }
    BitVec gather_entry(bool carried, const TailRecord& t, const Sketch* s) const {
        BitVec b;
        b.push(carried ? 1 : 0, 1);
        put_record(b, t);
        if (s)
            b.append(s->pack());
        else
            b.append(BitVec(sketch_bits()));
        return b;
    }

    void prepare(Run& r, const PairRequest& req, int index);
    void exchange_heads(const std::vector<Run*>& act);
    void exchange_items(const std::vector<Run*>& act);
    void assemble(const std::vector<Run*>& act);
    void start(Run& r);

    void announce(const std::vector<Run*>& act);
    void light_info(const std::vector<Run*>& act);
    void probe(const std::vector<Run*>& act);
    void gather(const std::vector<Run*>& act);
    void merge(const std::vector<Run*>& act);
    void relabel(const std::vector<Run*>& act);
    void finish_phase(Run& r);
    void finish(Run& r);

    void retry(Run& r);
    void check(Run& r);

    Net& net_;
    const Preprocessed& pre_;
    const IndependentState& st_;
    const PairOptions& options_;
    indep::Codec codec_;
    int n_;
    int phases_;
    std::vector<GroupSpec> specs_;
    std::vector<Run> runs_;
};

void Driver::prepare(Run& r, const PairRequest& req, int index) {
    r.req = &req;
    r.group = index;
    r.end = {req.x, req.y};
    r.out.x = req.x;
    r.out.y = req.y;
    r.out.kind = req.kind;
    r.out.channel = req.channel;
    r.out.checked = index < options_.check_runs;
    if (req.channel.size() < 2 || req.channel.front() != req.x || req.channel.back() != req.y)
        throw Error(ErrorKind::Precondition, "channel must run from x to y");
    if (!independent(pre_, req.x, req.y)) throw Error(ErrorKind::Precondition, "pair connectivity needs independent endpoints");
    r.lds.assign(sz(n_), -1);
    auto touch = std::make_shared<std::vector<char>>(sz(n_), 0);
    for (int z = 0; z < 2; ++z) {
        auto members = lds_members(pre_, st_, r.end[sz(z)], r.end[sz(1 - z)]);
        for (Vertex v = 0; v < n_; ++v)
            if (members[sz(v)]) {
                r.lds[sz(v)] = static_cast<signed char>(z);
                (*touch)[sz(v)] = 1;
            }
        for (Vertex c : pre_[r.end[sz(z)]].children) {
            if (r.lds[sz(c)] != z) continue;
            r.lds_children[sz(z)].push_back(c);
            auto& list = r.below[c];
            std::vector<Vertex> stack{c};
            while (!stack.empty()) {
                Vertex v = stack.back();
                stack.pop_back();
                list.push_back(v);
                for (Vertex w : pre_[v].children) stack.push_back(w);
            }
        }
    }
    r.touch = touch;
    auto edges = std::make_shared<std::set<Edge>>();
    for (std::size_t i = 0; i + 1 < req.channel.size(); ++i) edges->insert(canonical(req.channel[i], req.channel[i + 1]));
    r.channel_edges = edges;
    for (int z = 0; z < 2; ++z) {
        r.side[sz(z)].self = r.end[sz(z)];
        r.side[sz(z)].other = r.end[sz(1 - z)];
    }
}

// Endpoints swap labels and π*(s,H), then classify their components.
void Driver::exchange_heads(const std::vector<Run*>& act) {
    std::vector<std::shared_ptr<RouteJob>> jobs;
    for (auto* r : act) {
        std::array<BitVec, 2> body;
        for (int z = 0; z < 2; ++z) {
            Vertex e = r->end[sz(z)];
            const auto& rec = st_[e].record;
            codec_.label(body[sz(z)], pre_[e].label);
            body[sz(z)].push(rec.present ? 1 : 0, 1);
            if (rec.present) codec_.cpath(body[sz(z)], rec.heavy_path);
        }
        jobs.push_back(channel(*r, body[0], body[1]));
        add(*r, 0, route_program(jobs.back()));
    }
    flush();
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        for (int z = 0; z < 2; ++z) {
            auto& side = r.side[sz(z)];
            BitReader in(channel_in(*jobs[i], r, z));
            side.other_label = codec_.label(in);
            side.other_heavy_present = in.read(1) == 1;
            if (side.other_heavy_present) side.other_heavy_path = codec_.cpath(in);
            const auto& tree = st_[side.self].tree;
            side.fs.assign(tree.components.size(), 0);
            for (std::size_t k = 0; k < tree.components.size(); ++k) {
                auto s = component_sensitivity(pre_, st_, side.self, static_cast<int>(k), side.other);
                if (s == Sensitivity::Unknown)
                    s = side.other_heavy_present && is_ancestor(pre_[side.self].label, side.other_heavy_path.u_label) ? Sensitivity::Fully : Sensitivity::Pseudo;
                side.fs[k] = s == Sensitivity::Fully ? 1 : 0;
            }
            side.heavy_fs = tree.heavy >= 0 && side.fs[sz(tree.heavy)];
        }
    }
}

// Each endpoint reports its own edges into the other's subtree: per light
// child in the LDS set (routed through that subtree), below the heavy child,
// the remaining light descendants, and the rest of U.
void Driver::exchange_items(const std::vector<Run*>& act) {
    std::vector<std::shared_ptr<RouteJob>> jobs;
    for (auto* r : act) {
        auto job = std::make_shared<RouteJob>();
        job->outgoing.assign(sz(n_), {});
        job->paths.push_back(r->req->channel);
        job->paths.emplace_back(r->req->channel.rbegin(), r->req->channel.rend());
        for (int z = 0; z < 2; ++z) {
            const auto& side = r->side[sz(z)];
            Vertex self = side.self, other = side.other;
            const auto& zs = pre_[self];
            const auto& zv = st_[self];
            Sketch heavy = delta(), rest = delta(), outside = delta();
            std::map<Vertex, std::pair<Vertex, Sketch>> lights;
            for (const auto& [u, eid] : zs.eid) {
                if (u == other) continue;
                const auto& lu = zs.neighbor_label.at(u);
                if (is_ancestor(side.other_label, lu)) {
                    Vertex c = light_child_toward(side.other_label, lu);
                    if (c == kNone) {
                        heavy.toggle_edge(pre_.seeds, self, u, eid);
                        continue;
                    }
                    auto mk = zv.lds_markers.find(u);
                    bool marked = mk != zv.lds_markers.end() && std::find(mk->second.begin(), mk->second.end(), other) != mk->second.end();
                    if (!marked) {
                        rest.toggle_edge(pre_.seeds, self, u, eid);
                        continue;
                    }
                    auto it = lights.try_emplace(c, u, delta()).first;
                    it->second.first = std::min(it->second.first, u);
                    it->second.second.toggle_edge(pre_.seeds, self, u, eid);
                    continue;
                }
                if (in_subtree(self, lu)) {
                    int k = zv.tree.index_of_child(child_toward(self, lu));
                    if (side.fs[sz(k)]) continue;
                }
                outside.toggle_edge(pre_.seeds, self, u, eid);
            }
            BitVec body;
            codec_.sketch(body, heavy);
            codec_.sketch(body, rest);
            codec_.sketch(body, outside);
            job->outgoing[sz(self)].push_back({z, body});
            for (const auto& [c, entry] : lights) {
                std::vector<Vertex> path{self};
                auto up = indep::up_path(pre_, entry.first, other);
                path.insert(path.end(), up.begin(), up.end());
                job->paths.push_back(std::move(path));
                BitVec b;
                codec_.vertex(b, c);
                codec_.sketch(b, entry.second);
                job->outgoing[sz(self)].push_back({static_cast<int>(job->paths.size()) - 1, b});
            }
        }
        jobs.push_back(job);
        add(*r, 1, route_program(job));
    }
    flush();
    SketchTag dtag{tags::kTreeT, kDeltaUniverse};
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        for (int z = 0; z < 2; ++z) {
            auto& it = r.items[sz(z)];
            it = {};
            it.heavy = it.rest = it.outside = delta();
            for (const auto& p : jobs[i]->delivered[sz(r.end[sz(z)])]) {
                BitReader in(p.body);
                if (p.path == 1 - z) {
                    it.heavy = read_sketch(in, dtag);
                    it.rest = read_sketch(in, dtag);
                    it.outside = read_sketch(in, dtag);
                } else if (p.path >= 2) {
                    Vertex c = codec_.vertex(in);
                    it.by_light_child.emplace(c, read_sketch(in, dtag));
                }
            }
        }
    }
}

// Initial part sketches over G \ {x,y}. U is assembled from both endpoints'
// brackets (own sketch plus fully sensitive components) and both cancellations.
void Driver::assemble(const std::vector<Run*>& act) {
    std::vector<std::shared_ptr<RouteJob>> jobs;
    std::vector<std::array<Sketch, 2>> brackets, cancels;
    std::vector<std::array<std::optional<Sketch>, 2>> own_heavy;
    for (auto* r : act) {
        std::array<BitVec, 2> body;
        std::array<Sketch, 2> bracket, cancel;
        std::array<std::optional<Sketch>, 2> heavy;
        for (int z = 0; z < 2; ++z) {
            auto& side = r->side[sz(z)];
            Vertex self = side.self;
            const auto& zs = pre_[self];
            const auto& tree = st_[self].tree;
            const auto& items = r->items[sz(z)];
            side.light.clear();
            bracket[sz(z)] = zs.own_sketch;
            cancel[sz(z)] = items.outside ^ items.rest;
            if (zs.heavy_child != kNone && !side.heavy_fs) cancel[sz(z)] ^= items.heavy;
            auto& heavy_part = heavy[sz(z)];
            for (std::size_t k = 0; k < tree.components.size(); ++k) {
                const auto& comp = tree.components[k];
                Sketch g = delta(), cut = delta();
                std::vector<AncLabel> labels;
                for (Vertex c : comp.children) {
                    g ^= zs.child_sketch.at(c);
                    labels.push_back(zs.neighbor_label.at(c));
                }
                for (const auto& [u, eid] : zs.eid) {
                    const auto& lu = zs.neighbor_label.at(u);
                    if (std::any_of(labels.begin(), labels.end(), [&](const AncLabel& l) { return is_ancestor(l, lu); })) cut.toggle_edge(pre_.seeds, self, u, eid);
                }
                if (!side.fs[k]) {
                    for (Vertex c : comp.children)
                        if (auto it = items.by_light_child.find(c); it != items.by_light_child.end()) cancel[sz(z)] ^= it->second;
                    continue;
                }
                bracket[sz(z)] ^= g;
                Sketch part = g ^ cut;
                for (Vertex c : comp.children)
                    if (auto it = items.by_light_child.find(c); it != items.by_light_child.end()) part ^= it->second;
                if (comp.heavy) part ^= items.heavy;
                part.retag(part_tag(*r));
                if (comp.heavy)
                    heavy_part = part;
                else
                    side.light.emplace(comp.id, part);
            }
            codec_.sketch(body[sz(z)], bracket[sz(z)]);
            codec_.sketch(body[sz(z)], cancel[sz(z)]);
            body[sz(z)].push(heavy_part ? 1 : 0, 1);
            if (heavy_part) {
                codec_.vertex(body[sz(z)], tree.components[sz(tree.heavy)].id);
                codec_.sketch(body[sz(z)], *heavy_part);
            }
        }
        brackets.push_back(bracket);
        cancels.push_back(cancel);
        own_heavy.push_back(heavy);
        jobs.push_back(channel(*r, body[0], body[1]));
        add(*r, 2, route_program(jobs.back()));
    }
    flush();
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        Vertex s = pre_.root;
        for (int z = 0; z < 2; ++z) {
            auto& side = r.side[sz(z)];
            BitReader in(channel_in(*jobs[i], r, z));
            Sketch their_bracket = read_sketch(in, tags::base());
            Sketch their_cancel = read_sketch(in, SketchTag{tags::kTreeT, kDeltaUniverse});
            bool their_heavy = in.read(1) == 1;
            Vertex their_heavy_id = kNone;
            std::optional<Sketch> their_part;
            if (their_heavy) {
                their_heavy_id = codec_.vertex(in);
                their_part = read_sketch(in, part_tag(r));
            }
            Sketch u = brackets[i][sz(z)] ^ their_bracket;
            u ^= cancels[i][sz(z)];
            u ^= their_cancel;
            u.retag(part_tag(r));

            const auto& tree = st_[side.self].tree;
            std::array<bool, 2> fs_heavy{}, has_heavy{};
            std::array<Vertex, 2> heavy_id{kNone, kNone};
            fs_heavy[sz(z)] = side.heavy_fs;
            has_heavy[sz(z)] = tree.heavy >= 0;
            if (tree.heavy >= 0) heavy_id[sz(z)] = tree.components[sz(tree.heavy)].id;
            fs_heavy[sz(1 - z)] = their_heavy;
            has_heavy[sz(1 - z)] = side.other_heavy_present || their_heavy;
            heavy_id[sz(1 - z)] = their_heavy_id;

            side.nonlight.clear();
            unsigned u_kind = kKindS;
            if (has_heavy[0] && !fs_heavy[0]) u_kind |= kKindX;
            if (has_heavy[1] && !fs_heavy[1]) u_kind |= kKindY;
            side.nonlight[s] = Held{u_kind, 0, u};
            side.home = {s, has_heavy[0] ? s : kNone, has_heavy[1] ? s : kNone};
            for (int e = 0; e < 2; ++e) {
                if (!fs_heavy[sz(e)]) continue;
                Sketch sk = e == z ? *own_heavy[i][sz(z)] : *their_part;
                side.home[sz(1 + e)] = heavy_id[sz(e)];
                side.nonlight[heavy_id[sz(e)]] = Held{e == 0 ? kKindX : kKindY, e, std::move(sk)};
            }
            side.child_part.clear();
            for (Vertex c : pre_[side.self].children) {
                const auto& comp = tree.components[sz(tree.index_of_child(c))];
                side.child_part[c] = side.fs[sz(tree.index_of_child(c))] ? comp.id : s;
            }
        }
    }
}


void Driver::start(Run& r) {
    r.initial = r.side;
    Vertex s = pre_.root;
    r.truth.assign(sz(n_), kNone);
    for (Vertex v = 0; v < n_; ++v) {
        if (v == r.x() || v == r.y()) continue;
        r.truth[sz(v)] = s;
        for (int z = 0; z < 2; ++z) {
            Vertex e = r.end[sz(z)];
            Vertex c = v;
            while (c != kNone && pre_[c].parent != e) c = pre_[c].parent;
            if (c == kNone) continue;
            const auto& tree = st_[e].tree;
            int k = tree.index_of_child(c);
            if (r.side[sz(z)].fs[sz(k)]) r.truth[sz(v)] = tree.components[sz(k)].id;
        }
    }
    r.initial_truth = r.truth;
    r.phase = 0;
    if (!r.out.checked) return;
    r.minus.clear();
    for (Vertex v = 0; v < n_; ++v) {
        Sketch m = pre_[v].own_sketch;
        for (Vertex e : r.end)
            if (auto it = pre_[v].eid.find(e); it != pre_[v].eid.end()) m.toggle_edge(pre_.seeds, v, e, it->second);
        m.retag(part_tag(r));
        r.minus.push_back(std::move(m));
    }
    check(r);
}

// Growth flags, and the part of every endpoint of a non-light tail edge that
// lies below the sender.
void Driver::announce(const std::vector<Run*>& act) {
    std::vector<std::shared_ptr<RouteJob>> jobs;
    std::vector<std::array<std::map<std::pair<Vertex, Vertex>, Vertex>, 2>> own;
    for (auto* rp : act) {
        auto& r = *rp;
        std::array<BitVec, 2> body;
        std::array<std::map<std::pair<Vertex, Vertex>, Vertex>, 2> resolved;
        auto stripe = phase_stripe(pre_.params.units, phases_, r.phase, r.attempt * 5);
        for (int z = 0; z < 2; ++z) {
            const auto& side = r.side[sz(z)];
            r.tails[sz(z)].clear();
            r.nl_edge[sz(z)].clear();
            r.nl_target[sz(z)].clear();
            r.foreign[sz(z)].clear();
            r.records[sz(z)].clear();
            r.absorbed[sz(z)].clear();
            r.merged[sz(z)].clear();
            r.relabelled[sz(z)].clear();
            bool grow = false;
            for (const auto& [id, s] : side.light) {
                if (s.is_zero()) continue;
                grow = true;
                if (is_head(r, id)) continue;
                if (auto e = extract_from_units(s, stripe.first, stripe.count, pre_.seeds)) r.tails[sz(z)][id] = {e->u, e->v, s};
            }
            for (const auto& [id, h] : side.nonlight) {
                if (h.sketch.is_zero()) continue;
                if (h.owner == z) grow = true;
                if (is_head(r, id)) continue;
                if (auto e = extract_from_units(h.sketch, stripe.first, stripe.count, pre_.seeds)) r.nl_edge[sz(z)][id] = *e;
            }
            bool spans = false;
            for (const auto& [c, p] : side.child_part) spans |= is_light(r, z, p) && light_owner(r, p) != z;
            BitVec& b = body[sz(z)];
            b.push(grow ? 1 : 0, 1);
            b.push(r.tails[sz(z)].empty() ? 0 : 1, 1);
            b.push(spans ? 1 : 0, 1);
            for (const auto& [id, e] : r.nl_edge[sz(z)])
                for (int k = 0; k < 2; ++k) {
                    Vertex w = k == 0 ? e.u : e.v;
                    AncLabel lw = pre_.decode(k == 0 ? e.annotation_u : e.annotation_v);
                    if (w == side.self || !in_subtree(side.self, lw)) continue;
                    resolved[sz(z)][{id, w}] = side.child_part.at(child_toward(side.self, lw));
                }
            codec_.count(b, resolved[sz(z)].size());
            for (const auto& [key, part] : resolved[sz(z)]) {
                codec_.vertex(b, key.first);
                codec_.vertex(b, key.second);
                codec_.vertex(b, part);
            }
        }
        own.push_back(resolved);
        jobs.push_back(channel(r, body[0], body[1]));
        add(r, 3, route_program(jobs.back()));
    }
    flush();
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        for (int z = 0; z < 2; ++z) {
            const auto& side = r.side[sz(z)];
            BitReader in(channel_in(*jobs[i], r, z));
            bool their_grow = in.read(1) == 1;
            bool their_tails = in.read(1) == 1;
            bool their_spans = in.read(1) == 1;
            auto resolved = own[i][sz(z)];
            std::size_t count = codec_.count(in);
            for (std::size_t k = 0; k < count; ++k) {
                Vertex id = codec_.vertex(in);
                Vertex w = codec_.vertex(in);
                resolved[{id, w}] = codec_.vertex(in);
            }
            if (z == 0) {
                r.grow[1] = their_grow;
                r.light_tails[1] = their_tails;
                r.spans[1] = their_spans;
            } else {
                r.grow[0] = their_grow;
                r.light_tails[0] = their_tails;
                r.spans[0] = their_spans;
            }
            for (const auto& [id, e] : r.nl_edge[sz(z)]) {
                auto part_of = [&](Vertex w, const BitVec& annotation) {
                    AncLabel lw = pre_.decode(annotation);
                    if (!in_subtree(r.x(), lw) && !in_subtree(r.y(), lw)) return side.home[kHomeU];
                    auto it = resolved.find({id, w});
                    return it == resolved.end() ? kNone : it->second;
                };
                Vertex pa = part_of(e.u, e.annotation_u), pb = part_of(e.v, e.annotation_v);
                if (pa == kNone || pb == kNone || (pa == id) == (pb == id)) {
                    r.inconsistent = true;
                    continue;
                }
                r.nl_target[sz(z)][id] = pa == id ? pb : pa;
            }
        }
        if (!r.grow[0] && !r.grow[1])
            finish(r);
        else if (r.phase >= phases_ || r.inconsistent)
            retry(r);
    }
}

void Driver::light_info(const std::vector<Run*>& act) {
    // Endpoints push part views into their LDS subtrees.
    std::vector<std::shared_ptr<DowncastJob>> views;
    for (auto* rp : act) {
        auto& r = *rp;
        r.vpart.assign(sz(n_), kNone);
        r.vlight.assign(sz(n_), 0);
        r.vtail.assign(sz(n_), std::nullopt);
        r.nbr_part.assign(sz(n_), {});
        r.vrecord.assign(sz(n_), {});
        r.vabsorbed.assign(sz(n_), std::nullopt);
        r.vcarry.assign(sz(n_), std::nullopt);
        r.vcrossed.assign(sz(n_), std::nullopt);
        auto job = std::make_shared<DowncastJob>();
        job->forest = lds_forest(r, [](int, Vertex) { return true; });
        job->value.assign(sz(n_), {});
        job->for_child = [this, rp](Vertex self, Vertex child, const BitVec& mine) {
            for (int z = 0; z < 2; ++z) {
                if (self != rp->end[sz(z)]) continue;
                const auto& side = rp->side[sz(z)];
                Vertex id = side.child_part.at(child);
                bool light = is_light(*rp, z, id);
                auto t = rp->tails[sz(z)].find(id);
                bool full = light && side.light.count(id) && t != rp->tails[sz(z)].end();
                BitVec b;
                codec_.vertex(b, id);
                b.push(light ? 1 : 0, 1);
                b.push(full ? 1 : 0, 1);
                if (full) put_tail(b, t->second);
                return b;
            }
            return mine;
        };
        views.push_back(job);
        add(r, 4, downcast_program(job));
    }
    flush();
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        for (Vertex v = 0; v < n_; ++v) {
            if (!views[i]->received[sz(v)] || v == r.x() || v == r.y()) continue;
            BitReader in(views[i]->value[sz(v)]);
            r.vpart[sz(v)] = codec_.vertex(in);
            r.vlight[sz(v)] = static_cast<char>(in.read(1));
            if (in.read(1) == 1) r.vtail[sz(v)] = get_tail(in, part_tag(r));
        }
    }

    // Part ids across the x/y boundary, then tail data of owner-side vertices across it.
    std::vector<Run*> both;
    for (auto* r : act)
        if (!r->lds_children[0].empty() && !r->lds_children[1].empty()) both.push_back(r);
    std::vector<std::shared_ptr<ExchangeJob>> ids;
    for (auto* rp : both) {
        auto ex = lds_exchange(*rp);
        ex->allowed = [this, rp](Vertex self, Vertex other) { return crosses(*rp, self, other); };
        ex->payload = [this, rp](Vertex self, Vertex) {
            BitVec b;
            codec_.vertex(b, rp->vpart[sz(self)]);
            return b;
        };
        ids.push_back(ex);
        add(*rp, 5, exchange_program(ex));
    }
    flush();
    for (std::size_t i = 0; i < both.size(); ++i)
        for (Vertex v = 0; v < n_; ++v)
            for (const auto& [u, bits] : ids[i]->inbox[sz(v)]) {
                BitReader in(bits);
                both[i]->nbr_part[sz(v)][u] = codec_.vertex(in);
            }

    std::vector<std::shared_ptr<ExchangeJob>> cross;
    for (auto* rp : both) {
        auto ex = lds_exchange(*rp);
        ex->allowed = [this, rp](Vertex self, Vertex other) {
            const auto& r = *rp;
            return r.vlight[sz(self)] && r.vtail[sz(self)] && light_owner(r, r.vpart[sz(self)]) == r.lds[sz(self)] && same_part_across(r, self, other);
        };
        ex->payload = [this, rp](Vertex self, Vertex) {
            BitVec b;
            put_tail(b, *rp->vtail[sz(self)]);
            return b;
        };
        cross.push_back(ex);
        add(*rp, 6, exchange_program(ex));
    }
    flush();
    std::vector<std::vector<std::optional<TailInfo>>> crossed(act.size(), std::vector<std::optional<TailInfo>>(sz(n_)));
    for (std::size_t i = 0, j = 0; i < act.size(); ++i) {
        if (j >= both.size() || both[j] != act[i]) continue;
        for (Vertex v = 0; v < n_; ++v)
            for (const auto& [u, bits] : cross[j]->inbox[sz(v)]) {
                BitReader in(bits);
                crossed[i][sz(v)] = get_tail(in, part_tag(*act[i]));
            }
        ++j;
    }

    // Non-owner endpoints collect the tail data of spanning parts and push it down.
    std::vector<Run*> spanning;
    std::vector<std::size_t> index;
    std::vector<std::shared_ptr<ConvergeJob>> ups;
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto* rp = act[i];
        auto pick = [this, rp](int z, Vertex c) {
            Vertex id = part_of_child(*rp, z, c);
            return is_light(*rp, z, id) && light_owner(*rp, id) != z && !is_head(*rp, id);
        };
        auto forest = lds_forest(*rp, pick);
        if (empty_forest(*forest)) continue;
        auto job = make_converge_job(forest, {tail_entry_bits()});
        job->kind = CombineKind::Custom;
        job->combine = [](int, BitVec& acc, const BitVec& in) {
            if (acc.get(0, 1) == 0 && in.get(0, 1) == 1) acc = in;
        };
        job->keep_children = true;
        for (Vertex v = 0; v < n_; ++v) {
            if (!forest->member[sz(v)] || !crossed[i][sz(v)]) continue;
            BitVec b;
            b.push(1, 1);
            put_tail(b, *crossed[i][sz(v)]);
            job->entries[sz(v)][0] = b;
        }
        spanning.push_back(rp);
        index.push_back(i);
        ups.push_back(job);
        add(*rp, 7, converge_program(job));
    }
    flush();
    std::vector<std::shared_ptr<DowncastJob>> downs;
    for (std::size_t k = 0; k < spanning.size(); ++k) {
        auto* rp = spanning[k];
        auto& r = *rp;
        for (int z = 0; z < 2; ++z) {
            Vertex e = r.end[sz(z)];
            for (const auto& [c, got] : ups[k]->from_child[sz(e)]) {
                const BitVec& b = got[0];
                if (b.get(0, 1) == 0) continue;
                BitReader in(b, 1);
                r.foreign[sz(z)][part_of_child(r, z, c)] = get_tail(in, part_tag(r));
            }
        }
        auto job = std::make_shared<DowncastJob>();
        job->forest = ups[k]->forest;
        job->value.assign(sz(n_), {});
        job->for_child = [this, rp](Vertex self, Vertex child, const BitVec& mine) {
            for (int z = 0; z < 2; ++z) {
                if (self != rp->end[sz(z)]) continue;
                BitVec b;
                auto it = rp->foreign[sz(z)].find(part_of_child(*rp, z, child));
                b.push(it == rp->foreign[sz(z)].end() ? 0 : 1, 1);
                if (it != rp->foreign[sz(z)].end()) put_tail(b, it->second);
                return b;
            }
            return mine;
        };
        downs.push_back(job);
        add(r, 8, downcast_program(job));
    }
    flush();
    for (std::size_t k = 0; k < spanning.size(); ++k) {
        auto& r = *spanning[k];
        for (Vertex v = 0; v < n_; ++v) {
            if (!downs[k]->received[sz(v)] || v == r.x() || v == r.y()) continue;
            const BitVec& b = downs[k]->value[sz(v)];
            if (b.get(0, 1) == 0) continue;
            BitReader in(b, 1);
            r.vtail[sz(v)] = get_tail(in, part_tag(r));
        }
    }
}

// u_P hands the sketch of its tail part to v_P, which answers with its own part.
void Driver::probe(const std::vector<Run*>& act) {
    std::vector<std::shared_ptr<ExchangeJob>> offers;
    for (auto* rp : act) {
        auto& r = *rp;
        for (Vertex v = 0; v < n_; ++v) {
            if (!r.vlight[sz(v)] || !r.vtail[sz(v)]) continue;
            const auto& t = *r.vtail[sz(v)];
            if (v != t.a && v != t.b) continue;
            Vertex w = v == t.a ? t.b : t.a;
            if (r.lds[sz(w)] >= 0) continue;
            // The far endpoint sits in a non-light part; its neighbor items say which piece.
            int home = kHomeU;
            const auto& lw = pre_[v].neighbor_label.at(w);
            for (int z = 0; z < 2; ++z) {
                Vertex e = r.end[sz(z)];
                if (!in_subtree(e, lw)) continue;
                if (st_[v].neighbor_items.at(w)[sz(pre_[e].depth)].heavy_comp) home = z == 0 ? kHomeX : kHomeY;
            }
            r.vrecord[sz(v)] = {true, kNone, false, home};
        }
        auto ex = lds_exchange(r);
        ex->allowed = [rp](Vertex self, Vertex other) {
            const auto& run = *rp;
            if (!run.vlight[sz(self)] || !run.vtail[sz(self)] || run.lds[sz(other)] < 0) return false;
            const auto& t = *run.vtail[sz(self)];
            return (self == t.a && other == t.b) || (self == t.b && other == t.a);
        };
        ex->payload = [this, rp](Vertex self, Vertex) {
            BitVec b;
            codec_.vertex(b, rp->vpart[sz(self)]);
            codec_.sketch(b, rp->vtail[sz(self)]->sketch);
            return b;
        };
        offers.push_back(ex);
        add(r, 9, exchange_program(ex));
    }
    flush();
    std::vector<std::shared_ptr<ExchangeJob>> replies;
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto* rp = act[i];
        auto& r = *rp;
        for (Vertex v = 0; v < n_; ++v) {
            if (offers[i]->inbox[sz(v)].empty() || !r.vlight[sz(v)] || !is_head(r, r.vpart[sz(v)])) continue;
            Sketch acc = delta();
            for (const auto& [u, bits] : offers[i]->inbox[sz(v)]) {
                BitReader in(bits);
                (void)codec_.vertex(in);
                acc ^= read_sketch(in, part_tag(r));
            }
            r.vabsorbed[sz(v)] = acc;
        }
        auto ex = lds_exchange(r);
        auto inbox = offers[i];
        ex->allowed = [inbox](Vertex self, Vertex other) { return inbox->inbox[sz(self)].count(other) > 0; };
        ex->payload = [this, rp](Vertex self, Vertex) {
            BitVec b;
            codec_.vertex(b, rp->vpart[sz(self)]);
            b.push(rp->vlight[sz(self)] ? 1 : 0, 1);
            return b;
        };
        replies.push_back(ex);
        add(r, 10, exchange_program(ex));
    }
    flush();
    for (std::size_t i = 0; i < act.size(); ++i)
        for (Vertex v = 0; v < n_; ++v)
            for (const auto& [u, bits] : replies[i]->inbox[sz(v)]) {
                BitReader in(bits);
                Vertex target = codec_.vertex(in);
                bool light = in.read(1) == 1;
                act[i]->vrecord[sz(v)] = {true, target, light, -1};
            }
}

// Tail records and absorbed sketches travel to the owner of each light part.
void Driver::gather(const std::vector<Run*>& act) {
    int rb = record_bits();
    auto sb = sketch_bits();
    auto parse = [this, rb, sb](const BitVec& b, const Run& r, TailRecord& rec, Sketch& s) {
        BitReader in(b, 1);
        rec = get_record(in);
        s = Sketch::unpack(pre_.params, part_tag(r), b.slice(static_cast<std::size_t>(1 + rb), sb));
        return b.get(0, 1) == 1;
    };
    std::vector<std::array<std::map<Vertex, TailRecord>, 2>> srec(act.size());
    std::vector<std::array<std::map<Vertex, Sketch>, 2>> sabs(act.size());
    std::vector<std::shared_ptr<ConvergeJob>> ups;
    for (auto* rp : act) {
        auto& r = *rp;
        auto forest = lds_forest(r, [this, rp](int z, Vertex c) { return is_light(*rp, z, part_of_child(*rp, z, c)); });
        auto job = make_converge_job(forest, {gather_bits()});
        job->kind = CombineKind::Custom;
        job->combine = [rb, sb](int, BitVec& acc, const BitVec& in) {
            if (acc.get(1, 1) == 0 && in.get(1, 1) == 1) acc.set(1, in.get(1, rb), rb);
            acc.xor_at(static_cast<std::size_t>(1 + rb), in.slice(static_cast<std::size_t>(1 + rb), sb));
        };
        job->keep_children = true;
        for (Vertex v = 0; v < n_; ++v) {
            if (!forest->member[sz(v)] || v == r.x() || v == r.y()) continue;
            job->entries[sz(v)][0] = gather_entry(false, r.vrecord[sz(v)], r.vabsorbed[sz(v)] ? &*r.vabsorbed[sz(v)] : nullptr);
        }
        ups.push_back(job);
        add(r, 11, converge_program(job));
    }
    flush();
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        for (int z = 0; z < 2; ++z)
            for (const auto& [c, got] : ups[i]->from_child[sz(r.end[sz(z)])]) {
                Vertex id = part_of_child(r, z, c);
                TailRecord rec;
                Sketch s;
                parse(got[0], r, rec, s);
                if (rec.present && !srec[i][sz(z)].count(id)) srec[i][sz(z)][id] = rec;
                auto [it, fresh] = sabs[i][sz(z)].try_emplace(id, s);
                if (!fresh) it->second ^= s;
            }
    }

    // Totals from the non-owner side cross over and climb to the owner.
    std::vector<Run*> spanning;
    std::vector<std::size_t> index;
    std::vector<std::shared_ptr<DowncastJob>> downs;
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto* rp = act[i];
        auto forest = lds_forest(*rp, [this, rp](int z, Vertex c) {
            Vertex id = part_of_child(*rp, z, c);
            return is_light(*rp, z, id) && light_owner(*rp, id) != z;
        });
        if (empty_forest(*forest)) continue;
        auto job = std::make_shared<DowncastJob>();
        job->forest = forest;
        job->value.assign(sz(n_), {});
        auto totals_rec = std::make_shared<std::array<std::map<Vertex, TailRecord>, 2>>(srec[i]);
        auto totals_abs = std::make_shared<std::array<std::map<Vertex, Sketch>, 2>>(sabs[i]);
        job->for_child = [this, rp, totals_rec, totals_abs](Vertex self, Vertex child, const BitVec& mine) {
            for (int z = 0; z < 2; ++z) {
                if (self != rp->end[sz(z)]) continue;
                Vertex id = part_of_child(*rp, z, child);
                TailRecord rec;
                if (auto it = (*totals_rec)[sz(z)].find(id); it != (*totals_rec)[sz(z)].end()) rec = it->second;
                auto it = (*totals_abs)[sz(z)].find(id);
                return gather_entry(true, rec, it == (*totals_abs)[sz(z)].end() ? nullptr : &it->second);
            }
            return mine;
        };
        spanning.push_back(rp);
        index.push_back(i);
        downs.push_back(job);
        add(*rp, 12, downcast_program(job));
    }
    flush();
    std::vector<std::shared_ptr<ExchangeJob>> cross;
    for (std::size_t k = 0; k < spanning.size(); ++k) {
        auto* rp = spanning[k];
        for (Vertex v = 0; v < n_; ++v)
            if (downs[k]->received[sz(v)] && v != rp->x() && v != rp->y()) rp->vcarry[sz(v)] = downs[k]->value[sz(v)];
        auto ex = lds_exchange(*rp);
        ex->allowed = [this, rp](Vertex self, Vertex other) { return rp->vcarry[sz(self)].has_value() && same_part_across(*rp, self, other); };
        ex->payload = [rp](Vertex self, Vertex) { return *rp->vcarry[sz(self)]; };
        cross.push_back(ex);
        add(*rp, 13, exchange_program(ex));
    }
    flush();
    std::vector<std::shared_ptr<ConvergeJob>> owners;
    for (std::size_t k = 0; k < spanning.size(); ++k) {
        auto* rp = spanning[k];
        for (Vertex v = 0; v < n_; ++v)
            for (const auto& [u, bits] : cross[k]->inbox[sz(v)]) rp->vcrossed[sz(v)] = bits;
        auto forest = lds_forest(*rp, [this, rp](int z, Vertex c) {
            Vertex id = part_of_child(*rp, z, c);
            return rp->spans[sz(1 - z)] && is_light(*rp, z, id) && light_owner(*rp, id) == z;
        });
        auto job = make_converge_job(forest, {gather_bits()});
        job->kind = CombineKind::Custom;
        job->combine = [](int, BitVec& acc, const BitVec& in) {
            if (acc.get(0, 1) == 0 && in.get(0, 1) == 1) acc = in;
        };
        job->keep_children = true;
        for (Vertex v = 0; v < n_; ++v)
            if (forest->member[sz(v)] && rp->vcrossed[sz(v)]) job->entries[sz(v)][0] = *rp->vcrossed[sz(v)];
        owners.push_back(job);
        add(*rp, 14, converge_program(job));
    }
    flush();
    std::vector<std::array<std::map<Vertex, TailRecord>, 2>> orec(act.size());
    std::vector<std::array<std::map<Vertex, Sketch>, 2>> oabs(act.size());
    for (std::size_t k = 0; k < spanning.size(); ++k) {
        auto& r = *spanning[k];
        std::size_t i = index[k];
        for (int z = 0; z < 2; ++z)
            for (const auto& [c, got] : owners[k]->from_child[sz(r.end[sz(z)])]) {
                TailRecord rec;
                Sketch s;
                if (!parse(got[0], r, rec, s)) continue;
                Vertex id = part_of_child(r, z, c);
                if (oabs[i][sz(z)].count(id)) continue;
                oabs[i][sz(z)][id] = s;
                if (rec.present) orec[i][sz(z)][id] = rec;
            }
    }
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        for (int z = 0; z < 2; ++z)
            for (const auto& [id, s] : r.side[sz(z)].light) {
                if (auto it = srec[i][sz(z)].find(id); it != srec[i][sz(z)].end())
                    r.records[sz(z)][id] = it->second;
                else if (auto jt = orec[i][sz(z)].find(id); jt != orec[i][sz(z)].end())
                    r.records[sz(z)][id] = jt->second;
                Sketch acc = delta();
                if (auto it = sabs[i][sz(z)].find(id); it != sabs[i][sz(z)].end()) acc ^= it->second;
                if (auto it = oabs[i][sz(z)].find(id); it != oabs[i][sz(z)].end()) acc ^= it->second;
                r.absorbed[sz(z)][id] = acc;
            }
    }
}

// Endpoints settle the star merges: light tails into non-light heads carry
// their sketch, and light heads that swallow non-light tails publish the result.
void Driver::merge(const std::vector<Run*>& act) {
    std::vector<std::shared_ptr<RouteJob>> jobs;
    std::vector<std::array<std::map<Vertex, Vertex>, 2>> light_target(act.size());
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        std::array<BitVec, 2> body;
        for (int z = 0; z < 2; ++z) {
            const auto& side = r.side[sz(z)];
            auto& targets = light_target[i][sz(z)];
            for (const auto& [id, t] : r.tails[sz(z)]) {
                auto it = r.records[sz(z)].find(id);
                if (it == r.records[sz(z)].end() || !it->second.present) {
                    r.inconsistent = true;
                    continue;
                }
                Vertex target = it->second.home >= 0 ? side.home[sz(it->second.home)] : it->second.target;
                if (target == kNone || target == id) {
                    r.inconsistent = true;
                    continue;
                }
                targets[id] = target;
            }
            std::vector<std::pair<Vertex, Vertex>> into_shared;
            for (const auto& [id, target] : targets)
                if (!is_light(r, z, target) && is_head(r, target)) into_shared.push_back({id, target});
            std::vector<std::pair<Vertex, Sketch>> grown;
            for (const auto& [q, s] : side.light) {
                if (!is_head(r, q)) continue;
                Sketch acc = s;
                bool any = false;
                for (const auto& [p, target] : r.nl_target[sz(z)])
                    if (target == q) {
                        acc ^= side.nonlight.at(p).sketch;
                        any = true;
                    }
                if (!any) continue;
                if (auto it = r.absorbed[sz(z)].find(q); it != r.absorbed[sz(z)].end()) acc ^= it->second;
                grown.push_back({q, acc});
            }
            BitVec& b = body[sz(z)];
            codec_.count(b, into_shared.size());
            for (const auto& [p, q] : into_shared) {
                codec_.vertex(b, p);
                codec_.vertex(b, q);
                codec_.sketch(b, side.light.at(p));
            }
            codec_.count(b, grown.size());
            for (const auto& [q, s] : grown) {
                codec_.vertex(b, q);
                codec_.sketch(b, s);
            }
        }
        jobs.push_back(channel(r, body[0], body[1]));
        add(r, 15, route_program(jobs.back()));
    }
    flush();
    for (std::size_t i = 0; i < act.size(); ++i) {
        auto& r = *act[i];
        for (int z = 0; z < 2; ++z) {
            auto& side = r.side[sz(z)];
            BitReader in(channel_in(*jobs[i], r, z));
            std::vector<std::tuple<Vertex, Vertex, Sketch>> their_into;
            std::size_t count = codec_.count(in);
            for (std::size_t k = 0; k < count; ++k) {
                Vertex p = codec_.vertex(in);
                Vertex q = codec_.vertex(in);
                their_into.emplace_back(p, q, read_sketch(in, part_tag(r)));
            }
            std::map<Vertex, Sketch> their_grown;
            count = codec_.count(in);
            for (std::size_t k = 0; k < count; ++k) {
                Vertex q = codec_.vertex(in);
                their_grown.emplace(q, read_sketch(in, part_tag(r)));
            }

            auto& merged = r.merged[sz(z)];
            for (const auto& [p, q] : r.nl_target[sz(z)])
                if (is_head(r, q)) merged[p] = q;
            for (const auto& [p, q] : light_target[i][sz(z)])
                if (is_head(r, q)) merged[p] = q;

            const auto old_nonlight = side.nonlight;
            const auto old_light = side.light;
            std::map<Vertex, unsigned> kinds;
            for (const auto& [p, q] : r.nl_target[sz(z)])
                if (is_head(r, q)) kinds[q] |= old_nonlight.at(p).kind;
            for (const auto& [p, q] : r.nl_target[sz(z)]) {
                if (!is_head(r, q) || !old_nonlight.count(q)) continue;
                auto& head = side.nonlight.at(q);
                head.sketch ^= old_nonlight.at(p).sketch;
                head.kind |= old_nonlight.at(p).kind;
            }
            for (const auto& [p, q] : light_target[i][sz(z)])
                if (is_head(r, q) && old_nonlight.count(q)) side.nonlight.at(q).sketch ^= old_light.at(p);
            for (const auto& [p, q, s] : their_into) {
                if (!old_nonlight.count(q)) {
                    r.inconsistent = true;
                    continue;
                }
                side.nonlight.at(q).sketch ^= s;
            }
            for (const auto& [q, s] : old_light) {
                if (!is_head(r, q)) continue;
                Sketch acc = s;
                if (auto it = r.absorbed[sz(z)].find(q); it != r.absorbed[sz(z)].end()) acc ^= it->second;
                if (!kinds.count(q)) {
                    side.light[q] = acc;
                    continue;
                }
                for (const auto& [p, target] : r.nl_target[sz(z)])
                    if (target == q) acc ^= old_nonlight.at(p).sketch;
                side.light.erase(q);
                side.nonlight[q] = Held{kinds.at(q), z, acc};
            }
            for (const auto& [q, s] : their_grown) side.nonlight[q] = Held{kinds.count(q) ? kinds.at(q) : 0U, 1 - z, s};
            for (const auto& [p, q] : merged) {
                side.nonlight.erase(p);
                side.light.erase(p);
            }
            for (auto& h : side.home)
                if (h != kNone && merged.count(h)) h = merged.at(h);
        }
    }
}

// Children inside a spanning light tail learn the id of the part it joined.
void Driver::relabel(const std::vector<Run*>& act) {
    std::vector<Run*> todo;
    std::vector<std::shared_ptr<DowncastJob>> downs;
    for (auto* rp : act) {
        auto forest = lds_forest(*rp, [this, rp](int z, Vertex c) {
            Vertex id = part_of_child(*rp, z, c);
            return rp->spans[sz(1 - z)] && light_owner(*rp, id) == z && rp->merged[sz(z)].count(id) && !rp->initial[sz(z)].nonlight.count(id) &&
                   !rp->side[sz(z)].nonlight.count(id);
        });
        if (empty_forest(*forest)) continue;
        auto job = std::make_shared<DowncastJob>();
        job->forest = forest;
        job->value.assign(sz(n_), {});
        job->for_child = [this, rp](Vertex self, Vertex child, const BitVec& mine) {
            for (int z = 0; z < 2; ++z) {
                if (self != rp->end[sz(z)]) continue;
                Vertex id = part_of_child(*rp, z, child);
                BitVec b;
                codec_.vertex(b, id);
                codec_.vertex(b, rp->merged[sz(z)].at(id));
                return b;
            }
            return mine;
        };
        todo.push_back(rp);
        downs.push_back(job);
        add(*rp, 16, downcast_program(job));
    }
    flush();
    std::vector<std::shared_ptr<ExchangeJob>> cross;
    std::vector<std::shared_ptr<std::vector<std::optional<std::pair<Vertex, Vertex>>>>> moves;
    for (std::size_t k = 0; k < todo.size(); ++k) {
        auto* rp = todo[k];
        auto move = std::make_shared<std::vector<std::optional<std::pair<Vertex, Vertex>>>>(sz(n_));
        for (Vertex v = 0; v < n_; ++v) {
            if (!downs[k]->received[sz(v)] || v == rp->x() || v == rp->y()) continue;
            BitReader in(downs[k]->value[sz(v)]);
            Vertex from = codec_.vertex(in);
            (*move)[sz(v)] = std::pair{from, codec_.vertex(in)};
        }
        auto ex = lds_exchange(*rp);
        ex->allowed = [this, rp, move](Vertex self, Vertex other) {
            if (!(*move)[sz(self)] || !crosses(*rp, self, other)) return false;
            auto it = rp->nbr_part[sz(self)].find(other);
            return it != rp->nbr_part[sz(self)].end() && it->second == (*move)[sz(self)]->first;
        };
        ex->payload = [this, move](Vertex self, Vertex) {
            BitVec b;
            codec_.vertex(b, (*move)[sz(self)]->first);
            codec_.vertex(b, (*move)[sz(self)]->second);
            return b;
        };
        moves.push_back(move);
        cross.push_back(ex);
        add(*rp, 17, exchange_program(ex));
    }
    flush();
    std::vector<std::shared_ptr<ConvergeJob>> ups;
    for (std::size_t k = 0; k < todo.size(); ++k) {
        auto* rp = todo[k];
        auto forest = lds_forest(*rp, [this, rp](int z, Vertex c) {
            Vertex id = part_of_child(*rp, z, c);
            return is_light(*rp, z, id) && light_owner(*rp, id) != z && !is_head(*rp, id);
        });
        auto job = make_converge_job(forest, {1 + 2 * codec_.w});
        job->kind = CombineKind::Custom;
        job->combine = [](int, BitVec& acc, const BitVec& in) {
            if (acc.get(0, 1) == 0 && in.get(0, 1) == 1) acc = in;
        };
        job->keep_children = true;
        for (Vertex v = 0; v < n_; ++v) {
            if (!forest->member[sz(v)]) continue;
            for (const auto& [u, bits] : cross[k]->inbox[sz(v)]) {
                BitVec b;
                b.push(1, 1);
                b.append(bits);
                job->entries[sz(v)][0] = b;
            }
        }
        ups.push_back(job);
        add(*rp, 18, converge_program(job));
    }
    flush();
    for (std::size_t k = 0; k < todo.size(); ++k) {
        auto& r = *todo[k];
        for (int z = 0; z < 2; ++z)
            for (const auto& [c, got] : ups[k]->from_child[sz(r.end[sz(z)])]) {
                if (got[0].get(0, 1) == 0) continue;
                BitReader in(got[0], 1);
                Vertex from = codec_.vertex(in);
                Vertex to = codec_.vertex(in);
                if (from == part_of_child(r, z, c)) r.relabelled[sz(z)][c] = to;
            }
    }
}

void Driver::finish_phase(Run& r) {
    if (r.inconsistent) {
        retry(r);
        return;
    }
    for (int z = 0; z < 2; ++z) {
        auto& side = r.side[sz(z)];
        for (auto& [c, p] : side.child_part) {
            if (auto it = r.merged[sz(z)].find(p); it != r.merged[sz(z)].end())
                p = it->second;
            else if (auto jt = r.relabelled[sz(z)].find(c); jt != r.relabelled[sz(z)].end())
                p = jt->second;
        }
    }
    std::map<Vertex, Vertex> all = r.merged[0];
    all.insert(r.merged[1].begin(), r.merged[1].end());
    for (auto& t : r.truth)
        if (t != kNone && all.count(t)) t = all.at(t);
    ++r.phase;
    r.out.part_counts.push_back(static_cast<int>(r.side[0].light.size() + r.side[1].light.size() + r.side[0].nonlight.size()));
    if (r.out.checked) check(r);
}

void Driver::finish(Run& r) {
    auto parts = r.side[0].light.size() + r.side[1].light.size() + r.side[0].nonlight.size();
    r.out.disconnected = parts > 1;
    r.out.phases = r.phase;
    r.done = true;
}

void Driver::retry(Run& r) {
    if (r.attempt >= options_.max_retries)
        throw Error(ErrorKind::ExtractionExhausted, "pair connectivity for (" + std::to_string(r.x()) + "," + std::to_string(r.y()) + ") still growable after all retries");
    ++r.attempt;
    ++r.out.retries;
    r.side = r.initial;
    r.truth = r.initial_truth;
    r.phase = 0;
    r.restarted = true;
    r.out.part_counts.clear();
}

// I1-I4 at a phase boundary against the centrally tracked partition.
void Driver::check(Run& r) {
    ++r.out.invariant_checks;
    auto fail = [&r](std::string what) { r.out.violations.push_back("phase " + std::to_string(r.phase) + ": " + std::move(what)); };
    std::set<Vertex> truth_ids, held;
    for (Vertex t : r.truth)
        if (t != kNone) truth_ids.insert(t);
    for (int z = 0; z < 2; ++z) {
        for (const auto& [id, s] : r.side[sz(z)].light) held.insert(id);
        for (const auto& [id, h] : r.side[sz(z)].nonlight) held.insert(id);
    }
    if (truth_ids != held) fail("held part ids differ from the partition");
    if (r.side[0].nonlight != r.side[1].nonlight) fail("endpoints disagree on the shared parts");
    if (r.side[0].home != r.side[1].home) fail("endpoints disagree on the homes");
    auto central = [&](Vertex id) {
        Sketch s(pre_.params, part_tag(r));
        for (Vertex v = 0; v < n_; ++v)
            if (r.truth[sz(v)] == id) s ^= r.minus[sz(v)];
        return s;
    };
    for (int z = 0; z < 2; ++z)
        for (const auto& [id, s] : r.side[sz(z)].light) {
            if (s != central(id)) fail("sketch of light part " + std::to_string(id));
            if (light_owner(r, id) != z) fail("light part " + std::to_string(id) + " held by the wrong endpoint");
            for (Vertex v = 0; v < n_; ++v)
                if (r.truth[sz(v)] == id && r.lds[sz(v)] < 0) fail("light part " + std::to_string(id) + " leaves the LDS sets");
        }
    Vertex s = pre_.root;
    for (const auto& [id, h] : r.side[0].nonlight) {
        if (h.sketch != central(id)) fail("sketch of shared part " + std::to_string(id));
        auto holds = [&](Vertex v) { return v != kNone && r.truth[sz(v)] == id; };
        if (holds(s) != ((h.kind & kKindS) != 0)) fail("s flag of part " + std::to_string(id));
        if (holds(pre_[r.x()].heavy_child) != ((h.kind & kKindX) != 0)) fail("x-heavy flag of part " + std::to_string(id));
        if (holds(pre_[r.y()].heavy_child) != ((h.kind & kKindY) != 0)) fail("y-heavy flag of part " + std::to_string(id));
        if (h.kind == 0) fail("shared part " + std::to_string(id) + " has no kind");
    }
    for (int z = 0; z < 2; ++z)
        for (const auto& [c, p] : r.side[sz(z)].child_part)
            if (r.truth[sz(c)] != p) fail("child " + std::to_string(c) + " mapped to " + std::to_string(p));
    if (r.side[0].home[kHomeU] != r.truth[sz(s)]) fail("home of s");
    for (int z = 0; z < 2; ++z) {
        Vertex h = pre_[r.end[sz(z)]].heavy_child;
        if (h != kNone && r.side[0].home[sz(1 + z)] != r.truth[sz(h)]) fail("home of a heavy child");
    }
}

std::vector<PairRun> Driver::run(const std::vector<PairRequest>& requests) {
    runs_.assign(requests.size(), Run{});
    std::vector<Run*> act;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        prepare(runs_[i], requests[i], static_cast<int>(i));
        act.push_back(&runs_[i]);
    }
    if (act.empty()) return {};
    exchange_heads(act);
    exchange_items(act);
    assemble(act);
    for (auto* r : act) start(*r);
    while (!act.empty()) {
        for (auto* r : act) {
            r->restarted = false;
            r->inconsistent = false;
        }
        announce(act);
        std::vector<Run*> cont, lit;
        for (auto* r : act)
            if (!r->done && !r->restarted) cont.push_back(r);
        for (auto* r : cont)
            if (r->light_phase()) lit.push_back(r);
        if (!lit.empty()) {
            light_info(lit);
            probe(lit);
            gather(lit);
        }
        merge(cont);
        if (!lit.empty()) relabel(lit);
        for (auto* r : cont) finish_phase(*r);
        std::erase_if(act, [](const Run* r) { return r->done; });
    }
    std::vector<PairRun> out;
    for (auto& r : runs_) out.push_back(std::move(r.out));
    return out;
}

}  // namespace

std::vector<PairRun> run_pair_connectivity(Net& net, const Preprocessed& pre, const IndependentState& st, const std::vector<PairRequest>& requests, const PairOptions& options) {
    Driver driver(net, pre, st, options);
    return driver.run(requests);
}

}  // namespace vcut
