#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vcut/bits.hpp"
#include "vcut/graph.hpp"

namespace vcut {

// Identifies one sub-algorithm instance, e.g. {dependent, y, step}.
struct AlgoId {
    std::uint32_t family = 0;
    std::int32_t a = 0;
    std::int32_t b = 0;
    std::int32_t c = 0;
    auto operator<=>(const AlgoId&) const = default;
    std::string str() const;
};

using Payload = std::shared_ptr<const BitVec>;

inline Payload make_payload(BitVec bits) { return std::make_shared<const BitVec>(std::move(bits)); }

struct Incoming {
    Vertex from = kNone;
    AlgoId algo;
    Payload payload;
};

class Engine;

// The only view a vertex program has of the network.
class Context {
public:
    Vertex self() const { return self_; }
    std::int64_t round() const;
    int n() const;
    int word() const;
    std::span<const Vertex> neighbors() const;
    bool is_neighbor(Vertex w) const;

    void send(Vertex to, Payload payload);
    void send(Vertex to, BitVec payload) { send(to, make_payload(std::move(payload))); }
    // Requests a handler call at `round` even without deliveries.
    void wake_at(std::int64_t round);

private:
    friend class Engine;
    Context(Engine& engine, Vertex self, AlgoId algo) : engine_(&engine), self_(self), algo_(algo) {}
    Engine* engine_;
    Vertex self_;
    AlgoId algo_;
};

class VertexProgram {
public:
    virtual ~VertexProgram() = default;
    virtual void init(Context&) {}
    virtual void on_round(Context& ctx, std::span<const Incoming> inbox) = 0;
};

using ProgramFactory = std::function<std::unique_ptr<VertexProgram>(Vertex)>;
// Edges an algorithm may use; an empty function allows every edge.
using Footprint = std::function<bool(Vertex, Vertex)>;

struct ProgramSpec {
    AlgoId id;
    ProgramFactory factory;
    std::int64_t start_round = 0;
    Footprint footprint;
};

enum class LinkPolicy {
    Reject,  // a link busy with another algorithm's message is a budget violation
    Queue,   // FIFO per directed link
};

struct EngineConfig {
    int words_per_round = 1;
    LinkPolicy policy = LinkPolicy::Reject;
    std::int64_t round_cap = 1'000'000;
    bool trace = false;
};

struct AlgoStats {
    std::int64_t start_round = 0;
    std::int64_t last_round = 0;
    std::int64_t dilation = 0;
    std::int64_t congestion = 0;  // max over undirected edges of units sent
    std::int64_t messages = 0;
    std::int64_t units = 0;
};

// One transmission on a directed link, occupying rounds [first, last].
struct TraceRow {
    std::int64_t first = 0;
    std::int64_t last = 0;
    Vertex from = kNone;
    Vertex to = kNone;
    AlgoId algo;
    std::int64_t units = 0;
};

struct RoundReport {
    std::int64_t rounds = 0;
    std::int64_t max_congestion = 0;
    std::vector<std::int64_t> edge_traffic;  // indexed by Graph::edges()
    std::map<AlgoId, AlgoStats> per_algo;
    std::map<AlgoId, std::vector<std::int64_t>> algo_edge_traffic;
    std::vector<TraceRow> trace;

    std::string to_json() const;
};

std::int64_t message_units(const BitVec& payload, int word);

// Runs all programs to quiescence.
RoundReport run_programs(const Graph& g, std::vector<ProgramSpec> programs, const EngineConfig& config = {});
RoundReport run(const Graph& g, const ProgramFactory& factory, int words_per_round = 1);

}  // namespace vcut
