#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vcut/congest.hpp"

namespace vcut {

enum class ScheduleMode {
    Sequential,  // groups run one after another; c and d are measured and combined
    Strict,      // groups of a step share one run with random start delays
};

struct NetConfig {
    ScheduleMode mode = ScheduleMode::Sequential;
    int words_per_round = 1;
    std::int64_t round_cap = 1'000'000;
    double delay_multiplier = 1.0;
    std::uint64_t delay_seed = 0x5eedULL;
    bool trace = false;
};

// A program tagged with the independent sub-algorithm (group) it belongs to.
struct GroupSpec {
    int group = 0;
    ProgramSpec spec;
};

struct StageReport {
    std::string name;
    bool parallel = false;
    std::int64_t rounds = 0;       // measured, or c + d for parallel groups in sequential mode
    std::int64_t dilation = 0;     // largest per-group sum of step dilations
    std::int64_t congestion = 0;   // largest per-edge sum of units over all groups
    std::int64_t strict_rounds = 0;
    std::int64_t messages = 0;
    int steps = 0;
    int groups = 0;
    std::vector<std::int64_t> edge_traffic;
    std::map<int, std::int64_t> group_dilation;
    // Number of groups that sent at least one unit over each edge.
    std::vector<int> edge_groups;
    std::vector<TraceRow> trace;
};

// Runs the steps of each pipeline stage and keeps the round/congestion ledger.
class Net {
public:
    Net(const Graph& g, NetConfig config);

    const Graph& graph() const { return g_; }
    const NetConfig& config() const { return config_; }

    void begin_stage(std::string name, bool parallel_groups = false);
    void run_step(std::vector<GroupSpec> specs);
    void run_step(ProgramSpec spec) { run_step(std::vector<GroupSpec>{GroupSpec{0, std::move(spec)}}); }
    StageReport end_stage();

    const std::vector<StageReport>& stages() const { return done_; }

private:
    RoundReport run_one(std::vector<ProgramSpec> specs, LinkPolicy policy);
    void absorb(int group, const RoundReport& r, std::int64_t offset);

    const Graph& g_;
    NetConfig config_;
    bool open_ = false;
    StageReport cur_;
    std::int64_t step_offset_ = 0;
    std::map<int, std::vector<std::int64_t>> group_edges_;
    std::uint64_t step_counter_ = 0;
    std::vector<StageReport> done_;
};

// Composes independent algorithms per the selected mode and reports the result.
struct ScheduleResult {
    RoundReport report;
    std::int64_t congestion = 0;      // c: per-edge sum over algorithms
    std::int64_t dilation = 0;        // d: max single-algorithm dilation
    std::int64_t composite = 0;       // c + d
    std::int64_t delay_range = 0;
};
ScheduleResult schedule(const Graph& g, std::vector<ProgramSpec> algos, ScheduleMode mode, const NetConfig& config = {});

}  // namespace vcut
