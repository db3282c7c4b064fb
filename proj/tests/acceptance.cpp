// Acceptance run: one PASS/FAIL line per criterion, tolerances frozen below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vcut/cut_pairs_dep.hpp"
#include "vcut/cut_pairs_indep.hpp"
#include "vcut/error.hpp"
#include "vcut/generators.hpp"
#include "vcut/oracle.hpp"
#include "vcut/pipeline.hpp"
#include "vcut/sketch.hpp"

using namespace vcut;

namespace {

// Frozen tolerances and fitted constants.
constexpr double kCutVertexSeconds = 120.0;
constexpr double kCutPairSeconds = 600.0;
constexpr double kFreshFailureRate = 0.01;
constexpr double kDeltaRoundsRatio = 1.5;
// rounds / (D log2^3 n) at D = 4 on path-of-cliques with clique size 8.
constexpr double kCutVertexScale = 52.4;
constexpr double kDependentScale = 874.5;
// independent-pairs congestion / (D log2^3 n) at D = 4.
constexpr double kIndependentScale = 1031.2;
// cut-vertex per-edge words / log2^3 n over the corpus; the maximum sits at n = 5.
constexpr double kCongestionScale = 338.0;
// light channels per edge / (D log2 n).
constexpr double kChannelScale = 1.0;
// Dense cut-pair sets (long cycles) need more than the default cap in one step.
constexpr std::int64_t kCorpusRoundCap = 100'000'000;
constexpr double kFalseEdgeRate = 0.001;
constexpr double kUnitSuccessFloor = 11.0 / 16.0;  // calibrated per-unit success
constexpr int kAlgebraCases = 10000;
constexpr int kExtractionTrials = 100000;
constexpr int kCheckedPairRuns = 50;

std::size_t sz(Vertex v) { return static_cast<std::size_t>(v); }
double log2n(int n) { return std::log2(static_cast<double>(n)); }
double cube(double x) { return x * x * x; }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }

struct Instance {
    Graph g;
    std::uint64_t master = 0;
};

// 200 random connected graphs, n in [8, 64], p cycling through 0.1, 0.2, 0.4.
std::vector<Instance> random_corpus() {
    const double ps[] = {0.1, 0.2, 0.4};
    std::vector<Instance> out;
    for (int i = 0; i < 200; ++i) {
        int n = 8 + (i * 37) % 57;
        out.push_back({gen::random_connected(n, ps[i % 3], 1000 + static_cast<std::uint64_t>(i)), 5000 + static_cast<std::uint64_t>(i)});
    }
    return out;
}

// 200 biconnected graphs, n in [8, 48].
std::vector<Instance> biconnected_corpus() {
    std::vector<Instance> out;
    for (int i = 0; i < 200; ++i) out.push_back({gen::biconnected_random(8 + (i * 29) % 41, 2000 + static_cast<std::uint64_t>(i)), 6000 + static_cast<std::uint64_t>(i)});
    return out;
}

std::vector<Instance> family_corpus() {
    std::vector<Instance> out;
    for (int spokes : {8, 32, 128}) out.push_back({gen::star_of_paths(spokes, 3), 11});
    for (int d : {4, 8, 16}) {
        gen::FamilySpec spec;
        spec.family = "path-of-cliques";
        spec.diameter = d;
        spec.clique_size = 8;
        out.push_back({gen::generate(spec), 12});
    }
    for (int r : {4, 8, 16}) out.push_back({gen::ladder(r), 13});
    for (int n : {5, 16, 40}) out.push_back({gen::cycle(n), 14});
    out.push_back({gen::complete(6), 15});
    return out;
}

std::vector<Instance> full_corpus() {
    auto out = random_corpus();
    for (auto& i : biconnected_corpus()) out.push_back(std::move(i));
    for (auto& i : family_corpus()) out.push_back(std::move(i));
    return out;
}

const StageReport* find_stage(const std::vector<StageReport>& stages, const std::string& name) {
    for (const auto& s : stages)
        if (s.name == name) return &s;
    return nullptr;
}

std::vector<Vertex> detect_once(const Graph& g, std::uint64_t master) {
    Net net(g, NetConfig{});
    CutVertexOptions opt;
    opt.master_seed = master;
    auto r = detect_cut_vertices(net, opt);
    std::sort(r.cut_vertices.begin(), r.cut_vertices.end());
    return r.cut_vertices;
}

Outcome cut_vertex_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    auto corpus = random_corpus();
    std::vector<std::vector<Vertex>> truth;
    int frozen_bad = 0;
    for (const auto& inst : corpus) {
        auto want = oracle::all_cut_vertices(inst.g);
        truth.emplace_back(want.begin(), want.end());
        if (detect_once(inst.g, inst.master) != truth.back()) ++frozen_bad;
    }
    std::mt19937_64 fresh(20261016);
    int runs = 0, fresh_bad = 0;
    for (int s = 0; s < 20; ++s) {
        std::uint64_t master = fresh();
        for (std::size_t i = 0; i < corpus.size(); ++i, ++runs)
            if (detect_once(corpus[i].g, master ^ i) != truth[i]) ++fresh_bad;
    }
    double secs = seconds_since(t0);
    double rate = static_cast<double>(fresh_bad) / runs;
    return {frozen_bad == 0 && rate < kFreshFailureRate && secs < kCutVertexSeconds,
            fmt("frozen mismatches %d/200, fresh failure rate %.4f over %d runs, %.1fs", frozen_bad, rate, runs, secs)};
}

// Everything observed on one biconnected instance.
struct PairObservation {
    bool exact = false;
    bool partition = false;
    std::string error;
    int max_channel_load = 0;
    double channel_bound = 0;
    int light_edge_excess = 0;
    int c0_label_mismatches = 0;
    int checked_runs = 0;
    int invariant_checks = 0;
    int violations = 0;
    bool mutual_matching = true;
};

PairObservation observe_pairs(const Instance& inst, int check_runs) {
    PairObservation ob;
    const Graph& g = inst.g;
    try {
        Net net(g, NetConfig{});
        CutVertexOptions opt;
        opt.master_seed = inst.master;
        auto cv = detect_cut_vertices(net, opt);
        if (!cv.cut_vertices.empty()) {
            ob.error = "unexpected cut vertices";
            return ob;
        }
        auto dep = detect_dependent_pairs(net, cv.pre);
        IndependentOptions io;
        io.check_runs = check_runs;
        auto ind = detect_independent_pairs(net, cv.pre, io);

        std::set<oracle::VertexPair> dep_set, ind_set;
        for (auto [x, y] : dep.pairs) dep_set.insert({std::min(x, y), std::max(x, y)});
        std::map<oracle::VertexPair, std::set<PairCase>> kinds;
        for (const auto& p : ind.pairs) {
            ind_set.insert({p.x, p.y});
            kinds[{p.x, p.y}].insert(p.kind);
        }
        std::set<oracle::VertexPair> both;
        std::set_intersection(dep_set.begin(), dep_set.end(), ind_set.begin(), ind_set.end(), std::inserter(both, both.begin()));
        std::set<oracle::VertexPair> all = dep_set;
        all.insert(ind_set.begin(), ind_set.end());
        std::set<oracle::VertexPair> want;
        for (auto [x, y] : oracle::all_cut_pairs(g)) want.insert({std::min(x, y), std::max(x, y)});
        ob.exact = all == want;
        ob.partition = both.empty() && std::all_of(kinds.begin(), kinds.end(), [](const auto& kv) { return kv.second.size() == 1; });

        const auto& pre = cv.pre;
        int height = std::max(1, pre.tree.height());
        ob.max_channel_load = ind.max_channel_load;
        ob.channel_bound = height * log2n(g.n());

        int bound = static_cast<int>(std::floor(log2n(g.n())));
        for (Vertex v = 0; v < g.n(); ++v) {
            int light = 0;
            for (Vertex w = v; w != pre.tree.root; w = pre.tree.parent[sz(w)]) light += pre.hl.is_heavy[sz(w)] ? 0 : 1;
            ob.light_edge_excess = std::max(ob.light_edge_excess, light - bound);
        }

        for (const auto& run : dep.runs) {
            if (!run.ct.has_outside) continue;
            for (Vertex a = 0; a < g.n(); ++a)
                for (Vertex b = 0; b < g.n(); ++b) {
                    if (a == run.y || b == run.y || run.in_subtree[sz(a)] || run.in_subtree[sz(b)]) continue;
                    if (is_ancestor(run.label_of(pre, a), run.label_of(pre, b)) != is_ancestor(pre[a].label, pre[b].label)) ++ob.c0_label_mismatches;
                }
        }

        for (const auto& r : ind.runs) {
            if (!r.checked) continue;
            ++ob.checked_runs;
            ob.invariant_checks += r.invariant_checks;
            ob.violations += static_cast<int>(r.violations.size());
        }
        std::set<Vertex> matched;
        for (auto [x, y] : ind.mutual) ob.mutual_matching &= matched.insert(x).second && matched.insert(y).second;
    } catch (const Error& e) {
        ob.error = e.what();
    }
    return ob;
}

struct PairSweep {
    std::vector<PairObservation> obs;
    double seconds = 0;
};

PairSweep sweep_pairs() {
    PairSweep sweep;
    auto t0 = std::chrono::steady_clock::now();
    int i = 0;
    for (const auto& inst : biconnected_corpus()) sweep.obs.push_back(observe_pairs(inst, i++ < 20 ? 5 : 0));
    sweep.seconds = seconds_since(t0);
    return sweep;
}

Outcome cut_pair_equivalence(const PairSweep& sweep) {
    int inexact = 0, overlapping = 0, errors = 0;
    for (const auto& ob : sweep.obs) {
        errors += !ob.error.empty();
        inexact += ob.error.empty() && !ob.exact;
        overlapping += ob.error.empty() && !ob.partition;
    }
    return {inexact == 0 && overlapping == 0 && errors == 0 && sweep.seconds < kCutPairSeconds,
            fmt("mismatched instances %d/200, case overlaps %d, stage errors %d, %.1fs", inexact, overlapping, errors, sweep.seconds)};
}

std::int64_t full_cut_vertex_rounds(const std::vector<StageReport>& stages) {
    std::int64_t total = 0;
    for (const char* name : {"cut-vertex", "cut-vertex-report"})
        if (const auto* s = find_stage(stages, name)) total += s->rounds;
    return total;
}

Outcome delta_independence() {
    std::vector<std::int64_t> rounds;
    std::vector<double> normalized;
    std::string detail;
    for (int spokes : {8, 32, 128}) {
        gen::FamilySpec spec;
        spec.family = "star-of-paths";
        spec.diameter = 6;
        spec.max_degree = spokes;
        auto g = gen::generate(spec);
        PipelineConfig cfg;
        cfg.master_seed = 31;
        auto report = run_pipeline(g, cfg);
        rounds.push_back(full_cut_vertex_rounds(report.stages));
        normalized.push_back(static_cast<double>(rounds.back()) / cube(log2n(g.n())));
        detail += fmt("Delta=%d n=%d D=%d rounds=%lld; ", g.max_degree(), g.n(), graph_diameter(g), static_cast<long long>(rounds.back()));
    }
    auto [lo, hi] = std::minmax_element(rounds.begin(), rounds.end());
    double ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
    auto [nlo, nhi] = std::minmax_element(normalized.begin(), normalized.end());
    detail += fmt("ratio %.2f (limit %.2f), ratio after dividing by log2^3 n %.2f", ratio, kDeltaRoundsRatio, *nhi / *nlo);
    return {ratio <= kDeltaRoundsRatio, detail};
}

Outcome round_scaling() {
    bool pass = true;
    std::string detail;
    for (int d : {4, 8, 16}) {
        gen::FamilySpec spec;
        spec.family = "path-of-cliques";
        spec.diameter = d;
        spec.clique_size = 8;
        auto g = gen::generate(spec);
        PipelineConfig cfg;
        cfg.master_seed = 41;
        cfg.verify = true;
        auto report = run_pipeline(g, cfg);
        int diam = graph_diameter(g);
        double unit = diam * cube(log2n(g.n()));
        const auto* cv = find_stage(report.stages, "cut-vertex");
        const auto* dep = find_stage(report.stages, "dependent-pairs");
        const auto* ind = find_stage(report.stages, "independent-pairs");
        if (!cv || !dep || !ind || exit_code(report) != 0) {
            pass = false;
            detail += fmt("D=%d: pipeline incomplete or unverified; ", d);
            continue;
        }
        double cv_ratio = static_cast<double>(cv->rounds) / unit;
        double dep_ratio = static_cast<double>(dep->rounds) / unit;
        double ind_ratio = static_cast<double>(ind->congestion) / unit;
        pass &= cv_ratio <= kCutVertexScale && dep_ratio <= kDependentScale && ind_ratio <= kIndependentScale;
        detail += fmt("D=%d n=%d: cut-vertex %.3f, dependent %.3f, independent c=%lld d=%lld c-ratio %.3f; ", diam, g.n(), cv_ratio, dep_ratio,
                      static_cast<long long>(ind->congestion), static_cast<long long>(ind->dilation), ind_ratio);
    }
    detail += fmt("limits %.3f / %.3f / %.3f", kCutVertexScale, kDependentScale, kIndependentScale);
    return {pass, detail};
}

Outcome congestion_bound(const std::vector<Instance>& corpus) {
    double worst = 0;
    int worst_n = 0;
    for (const auto& inst : corpus) {
        Net net(inst.g, NetConfig{});
        CutVertexOptions opt;
        opt.master_seed = inst.master;
        (void)detect_cut_vertices(net, opt);
        const auto* s = find_stage(net.stages(), "cut-vertex");
        std::int64_t peak = s->edge_traffic.empty() ? 0 : *std::max_element(s->edge_traffic.begin(), s->edge_traffic.end());
        double ratio = static_cast<double>(peak) / cube(log2n(inst.g.n()));
        if (ratio > worst) {
            worst = ratio;
            worst_n = inst.g.n();
        }
    }
    return {worst <= kCongestionScale, fmt("max per-edge words / log2^3 n = %.3f (n=%d) over %zu graphs, limit %.3f", worst, worst_n, corpus.size(), kCongestionScale)};
}

struct SketchFixture {
    Graph g;
    SketchParams params;
    SeedPack seeds;
    std::vector<std::vector<BitVec>> eids;
    std::vector<Sketch> vertex;

    SketchFixture(const Graph& graph, std::uint64_t master) : g(graph), params(make_sketch_params(g.n(), 0)), seeds(SeedPack::generate(master, params.units)) {
        eids.resize(sz(g.n()));
        for (const auto& e : g.edges()) {
            auto eid = encode_eid(params, seeds, e.u, e.v, {}, {});
            eids[sz(e.u)].push_back(eid);
            eids[sz(e.v)].push_back(eid);
        }
        for (Vertex v = 0; v < g.n(); ++v) vertex.push_back(vertex_sketch(params, {}, seeds, eids[sz(v)]));
    }
    Sketch of_set(const std::vector<char>& in) const {
        Sketch s(params, {});
        for (Vertex v = 0; v < g.n(); ++v)
            if (in[sz(v)]) s ^= vertex[sz(v)];
        return s;
    }
    Sketch crossing(const std::vector<char>& in, const std::set<Edge>& skip = {}) const {
        Sketch s(params, {});
        for (const auto& e : g.edges())
            if (in[sz(e.u)] != in[sz(e.v)] && !skip.count(e)) s.toggle_edge(seeds, encode_eid(params, seeds, e.u, e.v, {}, {}));
        return s;
    }
};

std::vector<char> random_subset(int n, std::mt19937_64& rng) {
    std::vector<char> in(sz(n), 0);
    for (auto& b : in) b = static_cast<char>(rng() & 1);
    return in;
}

Outcome sketch_algebra(const std::vector<Instance>& corpus) {
    int nonzero_totals = 0;
    for (const auto& inst : corpus) {
        SketchFixture f(inst.g, inst.master);
        std::vector<char> all(sz(inst.g.n()), 1);
        nonzero_totals += !f.of_set(all).is_zero();
    }

    std::mt19937_64 rng(606);
    std::vector<SketchFixture> pool;
    for (int i = 0; i < 16; ++i) pool.emplace_back(gen::random_connected(8 + 2 * i, 0.25, rng()), rng());
    int algebra_failures = 0;
    for (int c = 0; c < kAlgebraCases; ++c) {
        const auto& f = pool[sz(c % 16)];
        auto a = random_subset(f.g.n(), rng);
        auto b = random_subset(f.g.n(), rng);
        std::vector<char> sym(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) sym[i] = static_cast<char>(a[i] ^ b[i]);
        bool ok = (f.of_set(a) ^ f.of_set(b)) == f.of_set(sym);
        std::vector<BitVec> removed_eids;
        std::set<Edge> removed;
        for (const auto& e : f.g.edges())
            if (a[sz(e.u)] != a[sz(e.v)] && (rng() & 1)) {
                removed.insert(e);
                removed_eids.push_back(encode_eid(f.params, f.seeds, e.u, e.v, {}, {}));
            }
        ok &= (f.of_set(a) ^ cancellation_sketch(f.params, f.seeds, removed_eids)) == f.crossing(a, removed);
        algebra_failures += !ok;
    }

    // Per-unit trials on growable sets; seeds are redrawn for every set.
    std::vector<Graph> graphs;
    const double ps[] = {0.05, 0.1, 0.2, 0.4};
    for (int i = 0; i < 8; ++i) graphs.push_back(gen::random_connected(64, ps[i % 4], rng()));
    long trials = 0, hits = 0, returned = 0, false_edges = 0;
    while (trials < kExtractionTrials) {
        const auto& g = graphs[sz(static_cast<Vertex>(rng() % graphs.size()))];
        auto params = make_sketch_params(g.n(), 0);
        auto seeds = SeedPack::generate(rng(), params.units);
        auto in = random_subset(g.n(), rng);
        Sketch s(params, {});
        for (const auto& e : g.edges())
            if (in[sz(e.u)] != in[sz(e.v)]) s.toggle_edge(seeds, encode_eid(params, seeds, e.u, e.v, {}, {}));
        if (s.is_zero()) continue;
        for (int unit = 0; unit < params.units && trials < kExtractionTrials; ++unit, ++trials) {
            auto e = extract_outgoing(s, unit, seeds);
            if (!e) continue;
            ++returned;
            bool sound = g.has_edge(e->u, e->v) && in[sz(e->u)] != in[sz(e->v)];
            false_edges += !sound;
            hits += sound;
        }
    }
    double false_rate = returned ? static_cast<double>(false_edges) / static_cast<double>(returned) : 0.0;
    double success = static_cast<double>(hits) / static_cast<double>(trials);
    return {nonzero_totals == 0 && algebra_failures == 0 && false_rate <= kFalseEdgeRate && success >= kUnitSuccessFloor,
            fmt("nonzero totals %d/%zu, algebra failures %d/%d, false-edge rate %.5f, per-unit success %.4f (floor %.4f) over %ld trials", nonzero_totals,
                corpus.size(), algebra_failures, kAlgebraCases, false_rate, success, kUnitSuccessFloor, trials)};
}

Outcome footprints(const PairSweep& sweep, const std::vector<Instance>& corpus) {
    int violations = 0, other_errors = 0;
    double worst = 0;
    for (const auto& inst : corpus) {
        PipelineConfig cfg;
        cfg.master_seed = inst.master;
        cfg.round_cap = kCorpusRoundCap;
        auto report = run_pipeline(inst.g, cfg);
        if (report.failed_stage.empty()) {
            double bound = std::max(1, bfs_tree(inst.g, 0).height()) * log2n(inst.g.n());
            worst = std::max(worst, report.max_channel_load / bound);
            continue;
        }
        if (report.error.rfind(to_string(ErrorKind::FootprintViolation), 0) == 0) ++violations;
        else ++other_errors;
    }
    for (const auto& ob : sweep.obs)
        if (ob.channel_bound > 0) worst = std::max(worst, ob.max_channel_load / ob.channel_bound);
    return {violations == 0 && other_errors == 0 && worst <= kChannelScale,
            fmt("footprint violations %d, other stage errors %d over %zu graphs, light channels per edge / (D log2 n) = %.3f (limit %.3f)", violations, other_errors,
                corpus.size(), worst, kChannelScale)};
}

Outcome structure(const PairSweep& sweep) {
    int excess = 0, label_mismatches = 0, checked = 0, checks = 0, violations = 0, matching_failures = 0;
    for (const auto& ob : sweep.obs) {
        excess = std::max(excess, ob.light_edge_excess);
        label_mismatches += ob.c0_label_mismatches;
        checked += ob.checked_runs;
        checks += ob.invariant_checks;
        violations += ob.violations;
        matching_failures += !ob.mutual_matching;
    }
    return {excess <= 0 && label_mismatches == 0 && checked >= kCheckedPairRuns && checks > 0 && violations == 0 && matching_failures == 0,
            fmt("light-edge excess %d, label mismatches above y %d, checked pair runs %d (%d boundary checks, %d violations), non-matching mutual sets %d", excess,
                label_mismatches, checked, checks, violations, matching_failures)};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %d %s: %s (%s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    };
    auto corpus = full_corpus();
    PairSweep sweep;
    report(1, "cut vertex oracle equivalence", cut_vertex_equivalence);
    report(2, "cut pair oracle equivalence", [&] {
        sweep = sweep_pairs();
        return cut_pair_equivalence(sweep);
    });
    report(3, "rounds independent of max degree", delta_independence);
    report(4, "round scaling with diameter", round_scaling);
    report(5, "cut vertex congestion", [&] { return congestion_bound(corpus); });
    report(6, "sketch algebra", [&] { return sketch_algebra(corpus); });
    report(7, "footprints", [&] { return footprints(sweep, corpus); });
    report(8, "structural invariants", [&] { return structure(sweep); });
    std::printf("%d of 8 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
