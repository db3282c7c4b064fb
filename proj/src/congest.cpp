#include "vcut/congest.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "vcut/error.hpp"

namespace vcut {

std::string AlgoId::str() const {
    std::ostringstream os;
    os << family << ':' << a << ':' << b << ':' << c;
    return os.str();
}

std::int64_t message_units(const BitVec& payload, int word) { return units_for_bits(payload.size(), word); }

class Engine {
public:
    Engine(const Graph& g, std::vector<ProgramSpec> specs, const EngineConfig& config) : g_(g), config_(config), word_(g.word()) {
        if (config_.words_per_round < 1) throw Error(ErrorKind::InvalidParams, "words_per_round must be >= 1");
        link_busy_.assign(2 * g.m(), 0);
        link_algo_.assign(2 * g.m(), -1);
        per_vertex_.assign(static_cast<std::size_t>(g.n()), {});
        report_.edge_traffic.assign(g.m(), 0);
        std::sort(specs.begin(), specs.end(), [](const ProgramSpec& x, const ProgramSpec& y) { return x.id < y.id; });
        for (std::size_t i = 0; i < specs.size(); ++i) {
            if (i > 0 && specs[i].id == specs[i - 1].id) throw Error(ErrorKind::InvalidParams, "duplicate algo id " + specs[i].id.str());
            Algo algo;
            algo.id = specs[i].id;
            algo.start = specs[i].start_round;
            algo.footprint = std::move(specs[i].footprint);
            algo.edge_units.assign(g.m(), 0);
            auto index = static_cast<int>(algos_.size());
            for (Vertex v = 0; v < g.n(); ++v) {
                auto prog = specs[i].factory(v);
                if (!prog) continue;
                per_vertex_[static_cast<std::size_t>(v)].push_back({index, static_cast<int>(slots_.size())});
                slots_.push_back({v, index, std::move(prog)});
            }
            algos_.push_back(std::move(algo));
        }
    }

    RoundReport run() {
        std::map<std::int64_t, std::vector<int>> starts;
        for (std::size_t s = 0; s < slots_.size(); ++s) starts[algos_[static_cast<std::size_t>(slots_[s].algo)].start].push_back(static_cast<int>(s));
        auto init_slots = [&](std::int64_t r) {
            auto it = starts.find(r);
            if (it == starts.end()) return;
            round_ = r;
            for (int s : it->second) {
                Slot& slot = slots_[static_cast<std::size_t>(s)];
                Context ctx(*this, slot.vertex, algos_[static_cast<std::size_t>(slot.algo)].id);
                slot.program->init(ctx);
            }
            starts.erase(it);
        };
        init_slots(0);
        for (;;) {
            std::int64_t next = std::numeric_limits<std::int64_t>::max();
            if (!pending_.empty()) next = std::min(next, pending_.top().round);
            if (!wakeups_.empty()) next = std::min(next, std::get<0>(*wakeups_.begin()));
            if (!starts.empty()) next = std::min(next, starts.begin()->first);
            if (next == std::numeric_limits<std::int64_t>::max()) break;
            if (next > config_.round_cap) throw Error(ErrorKind::NonTermination, "round cap " + std::to_string(config_.round_cap) + " reached");
            round_ = next;
            std::map<int, std::vector<std::pair<std::int64_t, Incoming>>> inbox;  // slot -> (seq, msg)
            while (!pending_.empty() && pending_.top().round == next) {
                const Pending& p = pending_.top();
                inbox[p.slot].push_back({p.seq, p.msg});
                pending_.pop();
            }
            while (!wakeups_.empty() && std::get<0>(*wakeups_.begin()) == next) {
                inbox[std::get<1>(*wakeups_.begin())];
                wakeups_.erase(wakeups_.begin());
            }
            init_slots(next);
            round_ = next;
            // slot order follows (algo id, vertex) within each vertex; sort for (vertex, algo) determinism
            std::vector<int> order;
            order.reserve(inbox.size());
            for (auto& [s, _] : inbox) order.push_back(s);
            std::sort(order.begin(), order.end(), [&](int x, int y) {
                const Slot& a = slots_[static_cast<std::size_t>(x)];
                const Slot& b = slots_[static_cast<std::size_t>(y)];
                return std::tie(a.vertex, a.algo) < std::tie(b.vertex, b.algo);
            });
            for (int s : order) {
                auto& msgs = inbox[s];
                std::sort(msgs.begin(), msgs.end(), [](const auto& x, const auto& y) { return std::tie(x.second.from, x.first) < std::tie(y.second.from, y.first); });
                std::vector<Incoming> flat;
                flat.reserve(msgs.size());
                for (auto& m : msgs) flat.push_back(std::move(m.second));
                Slot& slot = slots_[static_cast<std::size_t>(s)];
                Context ctx(*this, slot.vertex, algos_[static_cast<std::size_t>(slot.algo)].id);
                slot.program->on_round(ctx, flat);
            }
        }
        for (auto& algo : algos_) {
            AlgoStats st;
            st.start_round = algo.start;
            st.last_round = algo.last;
            st.dilation = algo.messages ? algo.last - algo.start : 0;
            st.messages = algo.messages;
            st.units = algo.units;
            for (auto u : algo.edge_units) st.congestion = std::max(st.congestion, u);
            report_.per_algo[algo.id] = st;
            report_.algo_edge_traffic[algo.id] = std::move(algo.edge_units);
            report_.rounds = std::max(report_.rounds, algo.last);
        }
        for (auto u : report_.edge_traffic) report_.max_congestion = std::max(report_.max_congestion, u);
        return std::move(report_);
    }

    std::int64_t round() const { return round_; }
    const Graph& graph() const { return g_; }

    void send(Vertex from, AlgoId algo_id, Vertex to, Payload payload) {
        int e = g_.edge_index(from, to);
        if (e < 0) throw Error(ErrorKind::NotANeighbor, std::to_string(from) + " -> " + std::to_string(to) + " in " + algo_id.str());
        int ai = algo_index(algo_id);
        Algo& algo = algos_[static_cast<std::size_t>(ai)];
        if (algo.footprint && !algo.footprint(from, to))
            throw Error(ErrorKind::FootprintViolation, "edge (" + std::to_string(from) + "," + std::to_string(to) + ") outside footprint of " + algo_id.str());
        int target = slot_of(to, ai);
        if (target < 0) throw Error(ErrorKind::Precondition, "vertex " + std::to_string(to) + " does not run " + algo_id.str());
        std::int64_t units = message_units(*payload, word_);
        std::int64_t duration = (units + config_.words_per_round - 1) / config_.words_per_round;
        std::size_t link = 2 * static_cast<std::size_t>(e) + (from < to ? 0 : 1);
        std::int64_t start = round_ + 1;
        if (link_busy_[link] >= start) {
            if (config_.policy == LinkPolicy::Reject && link_algo_[link] != ai)
                throw Error(ErrorKind::BudgetExceeded, "edge (" + std::to_string(from) + "," + std::to_string(to) + ") round " + std::to_string(start) + " algo " + algo_id.str());
            start = link_busy_[link] + 1;
        }
        std::int64_t last = start + duration - 1;
        if (last > config_.round_cap) throw Error(ErrorKind::NonTermination, "round cap " + std::to_string(config_.round_cap) + " reached");
        link_busy_[link] = last;
        link_algo_[link] = ai;
        report_.edge_traffic[static_cast<std::size_t>(e)] += units;
        algo.edge_units[static_cast<std::size_t>(e)] += units;
        algo.messages += 1;
        algo.units += units;
        algo.last = std::max(algo.last, last);
        if (config_.trace) report_.trace.push_back({start, last, from, to, algo_id, units});
        pending_.push({last, seq_++, target, Incoming{from, algo_id, std::move(payload)}});
    }

    void wake(Vertex v, AlgoId algo_id, std::int64_t r) {
        if (r <= round_) throw Error(ErrorKind::Precondition, "wake_at must name a future round");
        if (r > config_.round_cap) throw Error(ErrorKind::NonTermination, "wake-up past round cap");
        wakeups_.insert({r, slot_of(v, algo_index(algo_id))});
    }

private:
    struct Slot {
        Vertex vertex;
        int algo;
        std::unique_ptr<VertexProgram> program;
    };
    struct Algo {
        AlgoId id;
        std::int64_t start = 0;
        std::int64_t last = 0;
        std::int64_t messages = 0;
        std::int64_t units = 0;
        Footprint footprint;
        std::vector<std::int64_t> edge_units;
    };
    struct Pending {
        std::int64_t round;
        std::int64_t seq;
        int slot;
        Incoming msg;
        bool operator>(const Pending& o) const { return std::tie(round, seq) > std::tie(o.round, o.seq); }
    };

    int algo_index(AlgoId id) const {
        auto it = std::lower_bound(algos_.begin(), algos_.end(), id, [](const Algo& a, const AlgoId& key) { return a.id < key; });
        return static_cast<int>(it - algos_.begin());
    }
    int slot_of(Vertex v, int algo) const {
        for (auto [a, s] : per_vertex_[static_cast<std::size_t>(v)])
            if (a == algo) return s;
        return -1;
    }

    const Graph& g_;
    EngineConfig config_;
    int word_;
    std::int64_t round_ = 0;
    std::int64_t seq_ = 0;
    std::vector<Slot> slots_;
    std::vector<Algo> algos_;
    std::vector<std::vector<std::pair<int, int>>> per_vertex_;
    std::vector<std::int64_t> link_busy_;
    std::vector<int> link_algo_;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending_;
    std::set<std::tuple<std::int64_t, int>> wakeups_;
    RoundReport report_;
};

std::int64_t Context::round() const { return engine_->round(); }
int Context::n() const { return engine_->graph().n(); }
int Context::word() const { return engine_->graph().word(); }
std::span<const Vertex> Context::neighbors() const { return engine_->graph().adj(self_); }
bool Context::is_neighbor(Vertex w) const { return engine_->graph().has_edge(self_, w); }
void Context::send(Vertex to, Payload payload) { engine_->send(self_, algo_, to, std::move(payload)); }
void Context::wake_at(std::int64_t round) { engine_->wake(self_, algo_, round); }

RoundReport run_programs(const Graph& g, std::vector<ProgramSpec> programs, const EngineConfig& config) {
    Engine engine(g, std::move(programs), config);
    return engine.run();
}

RoundReport run(const Graph& g, const ProgramFactory& factory, int words_per_round) {
    EngineConfig config;
    config.words_per_round = words_per_round;
    return run_programs(g, {ProgramSpec{AlgoId{}, factory, 0, {}}}, config);
}

std::string RoundReport::to_json() const {
    nlohmann::json j;
    j["rounds"] = rounds;
    j["max_congestion"] = max_congestion;
    auto& algos = j["per_algo"] = nlohmann::json::array();
    for (const auto& [id, st] : per_algo) {
        algos.push_back({{"algo", id.str()}, {"dilation", st.dilation}, {"congestion", st.congestion}, {"messages", st.messages}, {"units", st.units}});
    }
    return j.dump();
}

}  // namespace vcut
