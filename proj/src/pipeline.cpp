#include "vcut/pipeline.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vcut/cut_pairs_dep.hpp"
#include "vcut/error.hpp"
#include "vcut/oracle.hpp"

namespace vcut {

namespace {

std::pair<Vertex, Vertex> ordered(Vertex a, Vertex b) { return {std::min(a, b), std::max(a, b)}; }

void verify(const Graph& g, CutReport& report) {
    Verification v;
    auto want_vertices = oracle::all_cut_vertices(g);
    std::set<Vertex> got_vertices(report.cut_vertices.begin(), report.cut_vertices.end());
    std::set_difference(want_vertices.begin(), want_vertices.end(), got_vertices.begin(), got_vertices.end(), std::back_inserter(v.missing_vertices));
    std::set_difference(got_vertices.begin(), got_vertices.end(), want_vertices.begin(), want_vertices.end(), std::back_inserter(v.extra_vertices));
    if (report.pairs_applicable) {
        v.pairs_checked = true;
        std::set<std::pair<Vertex, Vertex>> want;
        for (const auto& p : oracle::all_cut_pairs(g)) want.insert(ordered(p.first, p.second));
        std::map<std::pair<Vertex, Vertex>, int> seen;
        for (const auto& p : report.cut_pairs) ++seen[{p.x, p.y}];
        for (const auto& [p, count] : seen) {
            if (count > 1) v.repeated_pairs.push_back(p);
            if (!want.count(p)) v.extra_pairs.push_back(p);
        }
        for (const auto& p : want)
            if (!seen.count(p)) v.missing_pairs.push_back(p);
    }
    report.verification = std::move(v);
}

}  // namespace

CutReport run_pipeline(const Graph& g, const PipelineConfig& config) {
    CutReport report;
    report.fingerprint = graph_fingerprint(g);
    report.n = g.n();
    report.m = g.m();
    report.master_seed = config.master_seed;
    report.mode = config.mode == ScheduleMode::Strict ? "strict" : "seq";
    NetConfig nc;
    nc.mode = config.mode;
    nc.trace = config.trace;
    nc.round_cap = config.round_cap;
    Net net(g, nc);
    std::string stage = "cut-vertex";
    try {
        CutVertexOptions cvo;
        cvo.master_seed = config.master_seed;
        cvo.sketch_c = config.sketch_c;
        auto cv = detect_cut_vertices(net, cvo);
        report.cut_vertices = cv.cut_vertices;
        std::sort(report.cut_vertices.begin(), report.cut_vertices.end());
        report.retries.cut_vertex = cv.retries;
        report.pairs_applicable = report.cut_vertices.empty();
        if (report.pairs_applicable) {
            stage = "dependent-pairs";
            auto dep = detect_dependent_pairs(net, cv.pre);
            for (const auto& run : dep.runs) report.retries.dependent += run.retries;
            std::set<ReportedPair> pairs;
            for (auto [x, y] : dep.pairs) pairs.insert({std::min(x, y), std::max(x, y), PairCase::Dependent});

            stage = "independent-pairs";
            IndependentOptions io;
            io.check_runs = config.check_runs;
            auto ind = detect_independent_pairs(net, cv.pre, io);
            for (const auto& p : ind.pairs) pairs.insert({p.x, p.y, p.kind});
            report.cut_pairs.assign(pairs.begin(), pairs.end());
            report.retries.component_ids = ind.state.depth_retries;
            report.retries.path_sketches = ind.state.path_retries;
            report.retries.realized_misses = ind.realized_misses;
            report.max_channel_load = ind.max_channel_load;
            report.max_lds_load = ind.max_lds_load;
            report.pair_runs = static_cast<int>(ind.runs.size());
            for (const auto& r : ind.runs) {
                report.retries.pair_runs += r.retries;
                report.invariant_violations += static_cast<int>(r.violations.size());
                if (config.trace) report.pair_traces.push_back({r.x, r.y, r.kind, r.part_counts});
            }
        }
    } catch (const Error& e) {
        report.failed_stage = stage;
        report.error = e.what();
    }
    report.stages = net.stages();
    if (config.verify && report.failed_stage.empty()) verify(g, report);
    return report;
}

int exit_code(const CutReport& report) {
    if (!report.failed_stage.empty()) return 3;
    if (report.verification && !report.verification->clean()) return 2;
    return 0;
}

std::string report_json(const CutReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    std::ostringstream fp;
    fp << std::hex << report.fingerprint;
    j["schema_version"] = report.schema_version;
    j["fingerprint"] = fp.str();
    j["n"] = report.n;
    j["m"] = report.m;
    j["master_seed"] = report.master_seed;
    j["mode"] = report.mode;
    j["cut_vertices"] = report.cut_vertices;
    j["pair_detection"] = report.pairs_applicable ? "applied" : "not applicable";
    auto pairs = ordered_json::array();
    for (const auto& p : report.cut_pairs) pairs.push_back({{"x", p.x}, {"y", p.y}, {"case", to_string(p.kind)}});
    j["cut_pairs"] = pairs;
    auto stages = ordered_json::array();
    for (const auto& s : report.stages) {
        ordered_json row{{"name", s.name},         {"parallel", s.parallel},         {"rounds", s.rounds},
                         {"dilation", s.dilation}, {"congestion", s.congestion},     {"strict_rounds", s.strict_rounds},
                         {"messages", s.messages}, {"steps", s.steps},               {"groups", s.groups}};
        if (!s.edge_traffic.empty()) row["max_edge_traffic"] = *std::max_element(s.edge_traffic.begin(), s.edge_traffic.end());
        stages.push_back(row);
    }
    j["stages"] = stages;
    const auto& r = report.retries;
    j["retries"] = {{"cut_vertex", r.cut_vertex}, {"dependent", r.dependent},   {"component_ids", r.component_ids},
                    {"path_sketches", r.path_sketches}, {"pair_runs", r.pair_runs}, {"realized_misses", r.realized_misses}};
    j["pairs"] = {{"runs", report.pair_runs}, {"max_channel_load", report.max_channel_load}, {"max_lds_load", report.max_lds_load},
                  {"invariant_violations", report.invariant_violations}};
    if (!report.pair_traces.empty()) {
        auto traces = ordered_json::array();
        for (const auto& t : report.pair_traces) traces.push_back({{"x", t.x}, {"y", t.y}, {"case", to_string(t.kind)}, {"part_counts", t.part_counts}});
        j["pair_traces"] = traces;
    }
    if (report.verification) {
        const auto& v = *report.verification;
        auto pair_list = [](const std::vector<std::pair<Vertex, Vertex>>& ps) {
            auto a = ordered_json::array();
            for (auto [x, y] : ps) a.push_back({x, y});
            return a;
        };
        ordered_json block = ordered_json::object();
        if (!v.missing_vertices.empty()) block["missing_cut_vertices"] = v.missing_vertices;
        if (!v.extra_vertices.empty()) block["extra_cut_vertices"] = v.extra_vertices;
        if (!v.missing_pairs.empty()) block["missing_cut_pairs"] = pair_list(v.missing_pairs);
        if (!v.extra_pairs.empty()) block["extra_cut_pairs"] = pair_list(v.extra_pairs);
        if (!v.repeated_pairs.empty()) block["repeated_cut_pairs"] = pair_list(v.repeated_pairs);
        j["verification"] = block;
        j["verification_pairs_checked"] = v.pairs_checked;
    }
    if (!report.failed_stage.empty()) j["error"] = {{"stage", report.failed_stage}, {"message", report.error}};
    return j.dump(2) + "\n";
}

int graph_diameter(const Graph& g) {
    int best = 0;
    for (Vertex s = 0; s < g.n(); ++s) {
        std::vector<int> dist(static_cast<std::size_t>(g.n()), -1);
        std::queue<Vertex> q;
        dist[static_cast<std::size_t>(s)] = 0;
        q.push(s);
        while (!q.empty()) {
            Vertex v = q.front();
            q.pop();
            for (Vertex w : g.adj(v))
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    best = std::max(best, dist[static_cast<std::size_t>(w)]);
                    q.push(w);
                }
        }
    }
    return best;
}

std::vector<ScalingRow> scaling_rows(const Graph& g, const CutReport& report) {
    std::vector<ScalingRow> rows;
    int d = graph_diameter(g);
    for (const auto& s : report.stages) rows.push_back({g.n(), d, g.max_degree(), s.name, s.rounds, s.congestion});
    return rows;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows) {
    std::ostringstream out;
    out << kScalingHeader << "\n";
    for (const auto& r : rows) out << r.n << "," << r.diameter << "," << r.max_degree << "," << r.stage << "," << r.rounds << "," << r.max_congestion << "\n";
    return out.str();
}

}  // namespace vcut
