#include "vcut/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vcut/error.hpp"

namespace vcut {

namespace {

std::int64_t delay_range(std::int64_t congestion, int n, double multiplier) {
    double logn = std::max(1.0, std::log2(std::max(n, 2)));
    auto base = static_cast<std::int64_t>(std::ceil(static_cast<double>(congestion) / logn));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(static_cast<double>(std::max<std::int64_t>(1, base)) * multiplier)));
}

}  // namespace

Net::Net(const Graph& g, NetConfig config) : g_(g), config_(config) {}

void Net::begin_stage(std::string name, bool parallel_groups) {
    if (open_) throw Error(ErrorKind::Precondition, "stage already open");
    open_ = true;
    cur_ = StageReport{};
    cur_.name = std::move(name);
    cur_.parallel = parallel_groups;
    cur_.edge_traffic.assign(g_.m(), 0);
    cur_.edge_groups.assign(g_.m(), 0);
    step_offset_ = 0;
    group_edges_.clear();
}

RoundReport Net::run_one(std::vector<ProgramSpec> specs, LinkPolicy policy) {
    EngineConfig ec;
    ec.words_per_round = config_.words_per_round;
    ec.policy = policy;
    ec.round_cap = config_.round_cap;
    ec.trace = config_.trace;
    return run_programs(g_, std::move(specs), ec);
}

void Net::absorb(int group, const RoundReport& r, std::int64_t offset) {
    auto& edges = group_edges_[group];
    if (edges.empty()) edges.assign(g_.m(), 0);
    for (std::size_t e = 0; e < g_.m(); ++e) {
        cur_.edge_traffic[e] += r.edge_traffic[e];
        edges[e] += r.edge_traffic[e];
    }
    cur_.group_dilation[group] += r.rounds;
    for (const auto& [id, st] : r.per_algo) cur_.messages += st.messages;
    if (config_.trace)
        for (auto row : r.trace) {
            row.first += offset;
            row.last += offset;
            cur_.trace.push_back(row);
        }
}

void Net::run_step(std::vector<GroupSpec> specs) {
    if (!open_) throw Error(ErrorKind::Precondition, "no open stage");
    if (specs.empty()) return;
    ++cur_.steps;
    ++step_counter_;
    std::stable_sort(specs.begin(), specs.end(), [](const GroupSpec& a, const GroupSpec& b) { return a.group < b.group; });
    bool single_group = specs.front().group == specs.back().group;
    std::int64_t step_rounds = 0;
    std::int64_t step_congestion = 0;
    if (single_group) {
        std::vector<ProgramSpec> all;
        for (auto& s : specs) all.push_back(s.spec);
        auto r = run_one(std::move(all), LinkPolicy::Reject);
        absorb(specs.front().group, r, step_offset_);
        step_rounds = r.rounds;
        cur_.strict_rounds += r.rounds;
    } else {
        std::vector<std::int64_t> step_edges(g_.m(), 0);
        std::size_t i = 0;
        while (i < specs.size()) {
            std::size_t j = i;
            std::vector<ProgramSpec> group;
            while (j < specs.size() && specs[j].group == specs[i].group) group.push_back(specs[j++].spec);
            auto r = run_one(std::move(group), LinkPolicy::Reject);
            absorb(specs[i].group, r, step_offset_);
            for (std::size_t e = 0; e < g_.m(); ++e) step_edges[e] += r.edge_traffic[e];
            step_rounds = std::max(step_rounds, r.rounds);
            i = j;
        }
        for (auto u : step_edges) step_congestion = std::max(step_congestion, u);
        if (config_.mode == ScheduleMode::Strict) {
            std::mt19937_64 rng(config_.delay_seed ^ (step_counter_ * 0x9e3779b97f4a7c15ULL));
            std::int64_t range = delay_range(step_congestion, g_.n(), config_.delay_multiplier);
            std::map<int, std::int64_t> delay;
            std::vector<ProgramSpec> all;
            for (auto& s : specs) {
                if (!delay.count(s.group)) delay[s.group] = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(range + 1));
                s.spec.start_round = delay[s.group];
                all.push_back(std::move(s.spec));
            }
            auto r = run_one(std::move(all), LinkPolicy::Queue);
            cur_.strict_rounds += r.rounds;
        }
    }
    step_offset_ += step_rounds;
}

StageReport Net::end_stage() {
    if (!open_) throw Error(ErrorKind::Precondition, "no open stage");
    open_ = false;
    cur_.groups = static_cast<int>(group_edges_.size());
    for (auto [g, d] : cur_.group_dilation) cur_.dilation = std::max(cur_.dilation, d);
    for (auto u : cur_.edge_traffic) cur_.congestion = std::max(cur_.congestion, u);
    for (const auto& [g, edges] : group_edges_)
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e] > 0) ++cur_.edge_groups[e];
    if (cur_.parallel && cur_.groups > 1)
        cur_.rounds = config_.mode == ScheduleMode::Strict ? cur_.strict_rounds : cur_.dilation + cur_.congestion;
    else
        cur_.rounds = step_offset_;
    done_.push_back(cur_);
    return cur_;
}

ScheduleResult schedule(const Graph& g, std::vector<ProgramSpec> algos, ScheduleMode mode, const NetConfig& config) {
    ScheduleResult out;
    EngineConfig ec;
    ec.words_per_round = config.words_per_round;
    ec.round_cap = config.round_cap;
    ec.trace = config.trace;
    std::vector<std::int64_t> edges(g.m(), 0);
    for (const auto& a : algos) {
        auto r = run_programs(g, {a}, ec);
        for (std::size_t e = 0; e < g.m(); ++e) edges[e] += r.edge_traffic[e];
        out.dilation = std::max(out.dilation, r.rounds);
        if (mode == ScheduleMode::Sequential && algos.size() == 1) out.report = r;
    }
    for (auto u : edges) out.congestion = std::max(out.congestion, u);
    out.composite = out.congestion + out.dilation;
    if (mode == ScheduleMode::Strict) {
        out.delay_range = delay_range(out.congestion, g.n(), config.delay_multiplier);
        std::mt19937_64 rng(config.delay_seed);
        for (auto& a : algos) a.start_round = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(out.delay_range + 1));
        ec.policy = LinkPolicy::Queue;
        out.report = run_programs(g, std::move(algos), ec);
    } else if (algos.size() != 1) {
        out.report.rounds = out.composite;
        out.report.max_congestion = out.congestion;
        out.report.edge_traffic = std::move(edges);
    }
    return out;
}

}  // namespace vcut
