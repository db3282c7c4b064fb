#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vcut/cut_pairs_indep.hpp"
#include "vcut/net.hpp"

namespace vcut {

inline constexpr int kReportSchemaVersion = 1;

struct PipelineConfig {
    std::uint64_t master_seed = 1;
    ScheduleMode mode = ScheduleMode::Sequential;
    double sketch_c = kDefaultSketchConstant;
    bool verify = false;
    bool trace = false;
    int check_runs = 0;  // pair runs checked against central part sets
    std::int64_t round_cap = 1'000'000;  // per engine run
};

struct ReportedPair {
    Vertex x = kNone;  // x < y
    Vertex y = kNone;
    PairCase kind = PairCase::Dependent;
    auto operator<=>(const ReportedPair&) const = default;
};

struct Verification {
    std::vector<Vertex> missing_vertices;
    std::vector<Vertex> extra_vertices;
    std::vector<std::pair<Vertex, Vertex>> missing_pairs;
    std::vector<std::pair<Vertex, Vertex>> extra_pairs;
    std::vector<std::pair<Vertex, Vertex>> repeated_pairs;  // found by more than one case
    bool pairs_checked = false;

    bool clean() const {
        return missing_vertices.empty() && extra_vertices.empty() && missing_pairs.empty() && extra_pairs.empty() && repeated_pairs.empty();
    }
};

struct RetryLog {
    int cut_vertex = 0;
    int dependent = 0;
    int component_ids = 0;
    int path_sketches = 0;
    int pair_runs = 0;
    int realized_misses = 0;
};

struct PairTrace {
    Vertex x = kNone;
    Vertex y = kNone;
    PairCase kind = PairCase::Light;
    std::vector<int> part_counts;
};

struct CutReport {
    int schema_version = kReportSchemaVersion;
    std::uint64_t fingerprint = 0;
    int n = 0;
    std::size_t m = 0;
    std::uint64_t master_seed = 0;
    std::string mode;
    std::vector<Vertex> cut_vertices;
    bool pairs_applicable = true;
    std::vector<ReportedPair> cut_pairs;
    std::vector<StageReport> stages;
    RetryLog retries;
    int max_channel_load = 0;
    int max_lds_load = 0;
    int pair_runs = 0;
    int invariant_violations = 0;
    std::vector<PairTrace> pair_traces;  // filled with --trace
    std::optional<Verification> verification;
    std::string failed_stage;  // empty unless a stage threw
    std::string error;
};

// Cut vertices, then dependent and independent pairs when no cut vertex exists.
CutReport run_pipeline(const Graph& g, const PipelineConfig& config);

// 0 success, 2 verification mismatch, 3 stage error.
int exit_code(const CutReport& report);

std::string report_json(const CutReport& report);

struct ScalingRow {
    int n = 0;
    int diameter = 0;
    int max_degree = 0;
    std::string stage;
    std::int64_t rounds = 0;
    std::int64_t max_congestion = 0;
};

int graph_diameter(const Graph& g);
std::vector<ScalingRow> scaling_rows(const Graph& g, const CutReport& report);
inline constexpr const char* kScalingHeader = "n,D,Delta,stage,rounds,max_congestion";
std::string scaling_csv(const std::vector<ScalingRow>& rows);

}  // namespace vcut
