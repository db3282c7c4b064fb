#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "vcut/congest.hpp"

namespace vcut {

// Rooted forest as known locally: each member knows its parent and children.
struct Forest {
    std::vector<char> member;
    std::vector<Vertex> parent;
    std::vector<std::vector<Vertex>> children;

    explicit Forest(int n = 0) : member(static_cast<std::size_t>(n), 0), parent(static_cast<std::size_t>(n), kNone), children(static_cast<std::size_t>(n)) {}
    int n() const { return static_cast<int>(member.size()); }
    bool is_root(Vertex v) const { return member[static_cast<std::size_t>(v)] && parent[static_cast<std::size_t>(v)] == kNone; }
};

Forest forest_from_tree(const BfsTree& t);

// Block size used to pipeline a payload of `bits` bits.
std::size_t block_bits(std::size_t bits, int word, int max_blocks);
inline constexpr int kDefaultMaxBlocks = 64;

// Roots hold `value`; every member ends holding its root's value. Payloads of
// unknown size carry a 32-bit length header.
struct BroadcastJob {
    std::shared_ptr<const Forest> forest;
    std::vector<BitVec> value;
    std::size_t known_bits = 0;
    int max_blocks = kDefaultMaxBlocks;
};
ProgramFactory broadcast_program(std::shared_ptr<BroadcastJob> job);

enum class CombineKind { Xor, Custom };

// Multi-entry aggregation toward the roots. Each member forwards the prefix
// [0, up_count) of its entries; `result` receives the subtree aggregates.
// All jobs are safe to run twice: programs reset their outputs on creation.
struct ConvergeJob {
    std::shared_ptr<const Forest> forest;
    std::vector<int> entry_bits;
    CombineKind kind = CombineKind::Xor;
    std::function<void(int entry, BitVec& acc, const BitVec& in)> combine;
    std::vector<std::vector<BitVec>> entries;
    std::vector<std::vector<BitVec>> result;
    std::vector<int> up_count;                     // per member, what it forwards
    std::vector<std::map<Vertex, int>> child_up;   // per member, what each child forwards
    bool descending = true;                        // send order of entries
    bool keep_children = false;
    std::vector<std::map<Vertex, std::vector<BitVec>>> from_child;
    int max_blocks = kDefaultMaxBlocks;
};
std::shared_ptr<ConvergeJob> make_converge_job(std::shared_ptr<const Forest> forest, std::vector<int> entry_bits);
ProgramFactory converge_program(std::shared_ptr<ConvergeJob> job);

// Store-and-forward downcast; each member derives a payload per child from its own value.
struct DowncastJob {
    std::shared_ptr<const Forest> forest;
    std::vector<BitVec> value;
    std::function<BitVec(Vertex self, Vertex child, const BitVec& mine)> for_child;
    std::vector<char> received;
};
ProgramFactory downcast_program(std::shared_ptr<DowncastJob> job);

// Every member streams its own items to each child, then relays everything
// arriving from its parent. Members end with all ancestor items, nearest first.
struct StreamDownJob {
    std::shared_ptr<const Forest> forest;
    std::function<std::vector<BitVec>(Vertex self, Vertex child)> own_items;
    std::vector<std::vector<BitVec>> received;
};
ProgramFactory stream_down_program(std::shared_ptr<StreamDownJob> job);

// One payload per (vertex, allowed neighbor).
struct ExchangeJob {
    std::vector<char> member;
    std::function<bool(Vertex self, Vertex other)> allowed;
    std::function<BitVec(Vertex self, Vertex other)> payload;
    std::vector<std::map<Vertex, BitVec>> inbox;
};
ProgramFactory exchange_program(std::shared_ptr<ExchangeJob> job);

// Multi-source BFS over allowed edges; parents are the smallest-id first sender.
struct FloodJob {
    std::vector<char> member;
    std::vector<char> source;
    std::function<bool(Vertex self, Vertex other)> allowed;
    std::vector<Vertex> parent;
    std::vector<int> depth;
    std::vector<std::vector<Vertex>> children;
};
std::shared_ptr<FloodJob> make_flood_job(int n);
ProgramFactory flood_program(std::shared_ptr<FloodJob> job);
Forest forest_from_flood(const FloodJob& job);

// Point-to-point traffic along fixed vertex paths. Every hop knows only the
// next hop for each path id it serves.
struct RouteJob {
    struct Packet {
        int path = 0;
        BitVec body;
    };
    std::vector<std::vector<Vertex>> paths;
    std::vector<std::vector<Packet>> outgoing;     // per source vertex
    std::vector<std::vector<Packet>> delivered;    // per destination vertex
    int max_blocks = kDefaultMaxBlocks;
};
ProgramFactory route_program(std::shared_ptr<RouteJob> job);

}  // namespace vcut
