#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vcut/error.hpp"
#include "vcut/generators.hpp"
#include "vcut/net.hpp"
#include "vcut/oracle.hpp"
#include "vcut/primitives.hpp"
#include "vcut/sketch.hpp"

using namespace vcut;

namespace {

// Forwards a token along a path of vertices; used for composition tests.
class Relay : public VertexProgram {
public:
    Relay(std::vector<Vertex> path, Vertex self) : path_(std::move(path)), self_(self) {}
    void init(Context& ctx) override {
        if (path_.front() == self_) pass(ctx);
    }
    void on_round(Context& ctx, std::span<const Incoming>) override { pass(ctx); }

private:
    void pass(Context& ctx) {
        for (std::size_t i = 0; i + 1 < path_.size(); ++i)
            if (path_[i] == self_) ctx.send(path_[i + 1], BitVec(1));
    }
    std::vector<Vertex> path_;
    Vertex self_;
};

ProgramFactory relay(std::vector<Vertex> path) {
    return [path](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (std::find(path.begin(), path.end(), v) == path.end()) return nullptr;
        return std::make_unique<Relay>(path, v);
    };
}

class OneShot : public VertexProgram {
public:
    OneShot(Vertex from, Vertex to, Vertex self) : from_(from), to_(to), self_(self) {}
    void init(Context& ctx) override {
        if (self_ == from_) ctx.send(to_, BitVec(1));
    }
    void on_round(Context&, std::span<const Incoming>) override {}

private:
    Vertex from_, to_, self_;
};

ProgramFactory one_shot(Vertex from, Vertex to) {
    return [from, to](Vertex v) { return std::make_unique<OneShot>(from, to, v); };
}

std::shared_ptr<const Forest> tree_forest(const Graph& g, Vertex root) { return std::make_shared<const Forest>(forest_from_tree(bfs_tree(g, root))); }

}  // namespace

TEST_CASE("flooding a token on P3 takes its eccentricity") {
    auto g = gen::path(3);
    auto job = make_flood_job(g.n());
    job->source[0] = 1;
    auto r = run(g, flood_program(job));
    CHECK(job->depth[2] == 2);
    // the child notice from vertex 2 arrives one round after the token
    CHECK(r.rounds == 3);
    auto relay_report = run(g, relay({0, 1, 2}));
    CHECK(relay_report.rounds == 2);
}

TEST_CASE("two algorithms on one link in one round exceed the budget") {
    auto g = gen::path(2);
    std::vector<ProgramSpec> specs = {{AlgoId{1}, one_shot(0, 1), 0, {}}, {AlgoId{2}, one_shot(0, 1), 0, {}}};
    try {
        run_programs(g, specs);
        FAIL("expected BudgetExceeded");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BudgetExceeded);
    }
    EngineConfig queued;
    queued.policy = LinkPolicy::Queue;
    auto r = run_programs(g, specs, queued);
    CHECK(r.rounds == 2);
    CHECK(r.max_congestion == 2);
}

TEST_CASE("programs cannot reach non-neighbors or leave their footprint") {
    auto g = gen::path(3);
    try {
        run(g, one_shot(0, 2));
        FAIL("expected NotANeighbor");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotANeighbor);
    }
    ProgramSpec spec{AlgoId{}, one_shot(1, 2), 0, [](Vertex a, Vertex b) { return std::min(a, b) == 0; }};
    try {
        run_programs(g, {spec});
        FAIL("expected FootprintViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FootprintViolation);
    }
}

TEST_CASE("round cap stops runaway programs") {
    class PingPong : public VertexProgram {
    public:
        void init(Context& ctx) override {
            if (ctx.self() == 0) ctx.send(1, BitVec(1));
        }
        void on_round(Context& ctx, std::span<const Incoming> inbox) override { ctx.send(inbox.front().from, BitVec(1)); }
    };
    auto g = gen::path(2);
    EngineConfig cfg;
    cfg.round_cap = 50;
    try {
        run_programs(g, {{AlgoId{}, [](Vertex) { return std::make_unique<PingPong>(); }, 0, {}}}, cfg);
        FAIL("expected NonTermination");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonTermination);
    }
}

TEST_CASE("distributed BFS matches the centralized tree") {
    for (auto g : {gen::cycle(4), gen::random_connected(30, 0.15, 5), gen::ladder(7)}) {
        auto job = make_flood_job(g.n());
        job->source[0] = 1;
        run(g, flood_program(job));
        auto t = bfs_tree(g, 0);
        CHECK(job->depth == t.depth);
        CHECK(job->parent == t.parent);
        CHECK(job->children == t.children);
    }
}

TEST_CASE("broadcast rounds") {
    auto g = gen::path(3);
    auto job = std::make_shared<BroadcastJob>();
    job->forest = tree_forest(g, 0);
    job->value.assign(3, {});
    job->value[0].push(1, g.word());
    job->known_bits = static_cast<std::size_t>(g.word());
    auto r = run(g, broadcast_program(job));
    CHECK(r.rounds == 2);
    CHECK(job->value[2] == job->value[0]);

    auto empty = std::make_shared<BroadcastJob>();
    empty->forest = job->forest;
    empty->value.assign(3, {});
    CHECK(run(g, broadcast_program(empty)).rounds == 0);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto rg = gen::random_connected(40, 0.05, seed);
        auto t = bfs_tree(rg, 0);
        int k = 50;
        auto bj = std::make_shared<BroadcastJob>();
        bj->forest = tree_forest(rg, 0);
        bj->value.assign(static_cast<std::size_t>(rg.n()), {});
        for (int i = 0; i < k; ++i) bj->value[0].push(static_cast<std::uint64_t>(i), rg.word());
        bj->known_bits = static_cast<std::size_t>(k * rg.word());
        auto rr = run(rg, broadcast_program(bj));
        CHECK(rr.rounds <= t.height() + k);
        for (Vertex v = 0; v < rg.n(); ++v) CHECK(bj->value[static_cast<std::size_t>(v)] == bj->value[0]);
    }
}

TEST_CASE("convergecast of ones counts the vertices") {
    auto g = gen::random_connected(25, 0.1, 9);
    int w = 8;
    auto job = make_converge_job(tree_forest(g, 0), {w});
    job->kind = CombineKind::Custom;
    job->combine = [w](int, BitVec& acc, const BitVec& in) { acc.set(0, acc.get(0, w) + in.get(0, w), w); };
    for (auto& e : job->entries) e[0].set(0, 1, w);
    auto r = run(g, converge_program(job));
    CHECK(job->result[0][0].get(0, w) == 25);
    CHECK(r.rounds <= bfs_tree(g, 0).height() * 2);
}

TEST_CASE("convergecast of vertex sketches on K3 is zero") {
    auto g = gen::complete(3);
    auto params = make_sketch_params(3, 0);
    auto seeds = SeedPack::generate(11, params.units);
    auto job = make_converge_job(tree_forest(g, 0), {static_cast<int>(params.packed_bits())});
    for (Vertex v = 0; v < 3; ++v) {
        std::vector<BitVec> eids;
        for (Vertex w : g.adj(v)) eids.push_back(encode_eid(params, seeds, v, w, {}, {}));
        job->entries[static_cast<std::size_t>(v)][0] = vertex_sketch(params, {}, seeds, eids).pack();
    }
    run(g, converge_program(job));
    CHECK(job->result[0][0].is_zero());
    CHECK_FALSE(job->entries[1][0].is_zero());
}

TEST_CASE("LCA convergecast of labels matches the naive LCA") {
    auto g = gen::random_connected(30, 0.08, 21);
    auto t = bfs_tree(g, 0);
    auto hl = heavy_light(t);
    int cap = light_capacity(g.n());
    int bits = label_bits(cap, g.word()) + 1;
    // Members in `chosen` contribute their label; the flag bit marks "no label yet".
    std::vector<char> chosen(static_cast<std::size_t>(g.n()), 0);
    for (Vertex v = 3; v < g.n(); v += 5) chosen[static_cast<std::size_t>(v)] = 1;
    auto job = make_converge_job(tree_forest(g, 0), {bits});
    job->kind = CombineKind::Custom;
    job->combine = [&](int, BitVec& acc, const BitVec& in) {
        if (!in.get(0, 1)) return;
        if (!acc.get(0, 1)) {
            acc = in;
            return;
        }
        BitReader ra(acc, 1), rb(in, 1);
        auto la = decode_label(ra, cap, g.word());
        auto lb = decode_label(rb, cap, g.word());
        BitVec out;
        out.push(1, 1);
        encode_label(out, lca_label(la, lb), cap, g.word());
        acc = out;
    };
    for (Vertex v = 0; v < g.n(); ++v) {
        BitVec e;
        e.push(chosen[static_cast<std::size_t>(v)], 1);
        encode_label(e, anc_label(t, hl, v), cap, g.word());
        job->entries[static_cast<std::size_t>(v)][0] = e;
    }
    run(g, converge_program(job));
    Vertex expect = kNone;
    for (Vertex v = 0; v < g.n(); ++v)
        if (chosen[static_cast<std::size_t>(v)]) expect = expect == kNone ? v : oracle::naive_lca(t, expect, v);
    BitReader rr(job->result[0][0], 1);
    CHECK(decode_label(rr, cap, g.word()) == anc_label(t, hl, expect));
}

TEST_CASE("pipelined multi-aggregate on a path is linear in D") {
    for (int d : {4, 8, 16, 32}) {
        auto g = gen::path(d + 1);
        auto t = bfs_tree(g, 0);
        int w = g.word();
        std::vector<int> widths(static_cast<std::size_t>(d + 1), w);
        auto job = make_converge_job(tree_forest(g, 0), widths);
        job->kind = CombineKind::Custom;
        job->combine = [w](int, BitVec& acc, const BitVec& in) { acc.set(0, acc.get(0, w) + in.get(0, w), w); };
        for (Vertex v = 0; v <= d; ++v) {
            job->up_count[static_cast<std::size_t>(v)] = t.depth[static_cast<std::size_t>(v)];
            for (Vertex c : t.children[static_cast<std::size_t>(v)]) job->child_up[static_cast<std::size_t>(v)][c] = t.depth[static_cast<std::size_t>(c)];
            for (auto& e : job->entries[static_cast<std::size_t>(v)]) e.set(0, 1, w);
        }
        auto r = run(g, converge_program(job));
        CHECK(r.rounds <= 2 * d + 1);
        // vertex at depth x sees its whole subtree in entry x
        for (Vertex v = 0; v <= d; ++v) CHECK(job->result[static_cast<std::size_t>(v)][static_cast<std::size_t>(v)].get(0, w) == static_cast<std::uint64_t>(d + 1 - v));
    }
}

TEST_CASE("downcast and stream-down deliver ancestor data") {
    auto g = gen::random_connected(30, 0.1, 4);
    auto t = bfs_tree(g, 0);
    auto forest = tree_forest(g, 0);
    auto down = std::make_shared<DowncastJob>();
    down->forest = forest;
    down->value.assign(static_cast<std::size_t>(g.n()), {});
    down->value[0].push(0, 8);
    down->for_child = [](Vertex, Vertex, const BitVec& mine) {
        BitVec out;
        out.push(mine.get(0, 8) + 1, 8);
        return out;
    };
    run(g, downcast_program(down));
    for (Vertex v = 0; v < g.n(); ++v) CHECK(down->value[static_cast<std::size_t>(v)].get(0, 8) == static_cast<std::uint64_t>(t.depth[static_cast<std::size_t>(v)]));

    auto stream = std::make_shared<StreamDownJob>();
    stream->forest = forest;
    stream->own_items = [&](Vertex self, Vertex) {
        BitVec id;
        id.push(static_cast<std::uint64_t>(self), g.word());
        return std::vector<BitVec>{id};
    };
    auto r = run(g, stream_down_program(stream));
    CHECK(r.rounds <= 2 * t.height() + 2);
    for (Vertex v = 0; v < g.n(); ++v) {
        auto path = root_path(t, v);
        const auto& got = stream->received[static_cast<std::size_t>(v)];
        REQUIRE(got.size() + 1 == path.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(static_cast<Vertex>(got[i].get(0, g.word())) == path[path.size() - 2 - i]);
    }
}

TEST_CASE("routing delivers packets along fixed paths") {
    auto g = gen::ladder(6);
    auto job = std::make_shared<RouteJob>();
    job->paths = {{0, 2, 4, 6, 8}, {1, 3, 5, 4, 6}, {9, 8}};
    job->outgoing.assign(static_cast<std::size_t>(g.n()), {});
    BitVec big;
    for (int i = 0; i < 40; ++i) big.push(static_cast<std::uint64_t>(i), 7);
    job->outgoing[0].push_back({0, big});
    job->outgoing[1].push_back({1, big});
    job->outgoing[9].push_back({2, BitVec{}});
    run(g, route_program(job));
    REQUIRE(job->delivered[8].size() == 2);
    REQUIRE(job->delivered[6].size() == 1);
    CHECK(job->delivered[6][0].body == big);
}

TEST_CASE("schedule composes independent algorithms") {
    auto g = gen::path(2);
    auto single = schedule(g, {{AlgoId{1}, relay({0, 1}), 0, {}}}, ScheduleMode::Sequential);
    CHECK(single.report.rounds == 1);
    CHECK(single.dilation == 1);
    CHECK(single.congestion == 1);

    // disjoint token paths: strict rounds stay near the max dilation
    auto ladder = gen::ladder(10);
    std::vector<ProgramSpec> algos;
    for (int side = 0; side < 2; ++side) {
        std::vector<Vertex> path;
        for (int i = 0; i < 10; ++i) path.push_back(2 * i + side);
        algos.push_back({AlgoId{7, side}, relay(path), 0, {}});
    }
    auto strict = schedule(ladder, algos, ScheduleMode::Strict);
    CHECK(strict.dilation == 9);
    CHECK(strict.report.rounds <= strict.dilation + strict.delay_range);
    CHECK(strict.report.rounds < 2 * strict.dilation);
    for (const auto& [id, st] : strict.report.per_algo) CHECK(st.dilation == 9);
}

TEST_CASE("subtree-confined algorithms overlap on O(D) algorithms per edge") {
    // algorithm y sends one word over every edge incident to the subtree of y
    class Shout : public VertexProgram {
    public:
        explicit Shout(bool inside) : inside_(inside) {}
        void init(Context& ctx) override {
            if (!inside_) return;
            for (Vertex w : ctx.neighbors()) ctx.send(w, BitVec(1));
        }
        void on_round(Context&, std::span<const Incoming>) override {}

    private:
        bool inside_;
    };
    auto g = gen::random_connected(40, 0.06, 13);
    auto t = bfs_tree(g, 0);
    std::vector<ProgramSpec> algos;
    for (Vertex y = 0; y < g.n(); ++y) {
        algos.push_back({AlgoId{3, y}, [&t, y](Vertex v) { return std::make_unique<Shout>(oracle::on_root_path(t, y, v)); }, 0, {}});
    }
    auto seq = schedule(g, algos, ScheduleMode::Sequential);
    auto strict = schedule(g, algos, ScheduleMode::Strict);
    CHECK(seq.dilation == 1);
    CHECK(seq.congestion <= 2 * (2 * t.height() + 2));
    CHECK(strict.report.rounds <= seq.composite + strict.delay_range);
}

TEST_CASE("accounting is consistent and deterministic") {
    auto g = gen::random_connected(20, 0.2, 17);
    auto make = [&] {
        auto job = make_converge_job(tree_forest(g, 0), {64});
        for (Vertex v = 0; v < g.n(); ++v) job->entries[static_cast<std::size_t>(v)][0].set(0, static_cast<std::uint64_t>(v) * 977, 64);
        return job;
    };
    EngineConfig cfg;
    cfg.trace = true;
    auto j1 = make();
    auto r1 = run_programs(g, {{AlgoId{}, converge_program(j1), 0, {}}}, cfg);
    auto j2 = make();
    auto r2 = run_programs(g, {{AlgoId{}, converge_program(j2), 0, {}}}, cfg);
    CHECK(r1.rounds == r2.rounds);
    CHECK(r1.edge_traffic == r2.edge_traffic);
    CHECK(j1->result == j2->result);
    std::vector<std::int64_t> from_trace(g.m(), 0);
    for (const auto& row : r1.trace) {
        from_trace[static_cast<std::size_t>(g.edge_index(row.from, row.to))] += row.units;
        CHECK(row.last - row.first + 1 == row.units);
    }
    CHECK(from_trace == r1.edge_traffic);
    // rerunning the same job reproduces its outputs
    run_programs(g, {{AlgoId{}, converge_program(j1), 0, {}}}, cfg);
    CHECK(j1->result == j2->result);
}
