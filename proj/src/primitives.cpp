#include "vcut/primitives.hpp"

#include <algorithm>
#include <deque>

#include "vcut/error.hpp"

namespace vcut {

namespace {

constexpr int kLengthHeader = 32;

std::vector<BitVec> split(const BitVec& bits, std::size_t chunk) {
    std::vector<BitVec> out;
    for (std::size_t pos = 0; pos < bits.size(); pos += chunk) out.push_back(bits.slice(pos, std::min(chunk, bits.size() - pos)));
    if (out.empty()) out.emplace_back();
    return out;
}

std::size_t sz(Vertex v) { return static_cast<std::size_t>(v); }

}  // namespace

Forest forest_from_tree(const BfsTree& t) {
    Forest f(t.n());
    for (Vertex v = 0; v < t.n(); ++v) {
        f.member[sz(v)] = 1;
        f.parent[sz(v)] = t.parent[sz(v)];
        f.children[sz(v)] = t.children[sz(v)];
    }
    return f;
}

std::size_t block_bits(std::size_t bits, int word, int max_blocks) {
    auto words = static_cast<std::size_t>(units_for_bits(bits, word));
    std::size_t per = (words + static_cast<std::size_t>(max_blocks) - 1) / static_cast<std::size_t>(max_blocks);
    return std::max<std::size_t>(1, per) * static_cast<std::size_t>(word);
}

// ---------------------------------------------------------------- broadcast

namespace {

class BroadcastProgram : public VertexProgram {
public:
    BroadcastProgram(std::shared_ptr<BroadcastJob> job, Vertex self) : job_(std::move(job)), self_(self) {}

    void init(Context& ctx) override {
        const Forest& f = *job_->forest;
        if (!f.is_root(self_)) return;
        const BitVec& value = job_->value[sz(self_)];
        if (value.empty()) return;
        BitVec framed;
        std::size_t header = job_->known_bits ? 0 : kLengthHeader;
        if (header) framed.push(value.size(), kLengthHeader);
        framed.append(value);
        std::size_t chunk = std::max<std::size_t>(block_bits(framed.size(), ctx.word(), job_->max_blocks), header);
        for (auto& block : split(framed, chunk)) {
            auto payload = make_payload(std::move(block));
            for (Vertex c : f.children[sz(self_)]) ctx.send(c, payload);
        }
    }

    void on_round(Context& ctx, std::span<const Incoming> inbox) override {
        const Forest& f = *job_->forest;
        for (const auto& msg : inbox) {
            for (Vertex c : f.children[sz(self_)]) ctx.send(c, msg.payload);
            buffer_.append(*msg.payload);
        }
        if (job_->known_bits) {
            if (buffer_.size() == job_->known_bits) job_->value[sz(self_)] = buffer_;
        } else if (buffer_.size() >= kLengthHeader) {
            auto total = static_cast<std::size_t>(buffer_.get(0, kLengthHeader));
            if (buffer_.size() == kLengthHeader + total) job_->value[sz(self_)] = buffer_.slice(kLengthHeader, total);
        }
    }

private:
    std::shared_ptr<BroadcastJob> job_;
    Vertex self_;
    BitVec buffer_;
};

}  // namespace

ProgramFactory broadcast_program(std::shared_ptr<BroadcastJob> job) {
    return [job](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (!job->forest->member[sz(v)]) return nullptr;
        return std::make_unique<BroadcastProgram>(job, v);
    };
}

// ---------------------------------------------------------------- convergecast

std::shared_ptr<ConvergeJob> make_converge_job(std::shared_ptr<const Forest> forest, std::vector<int> entry_bits) {
    auto job = std::make_shared<ConvergeJob>();
    auto n = static_cast<std::size_t>(forest->n());
    int count = static_cast<int>(entry_bits.size());
    job->forest = std::move(forest);
    job->entry_bits = std::move(entry_bits);
    job->entries.assign(n, {});
    for (auto& e : job->entries)
        for (int i = 0; i < count; ++i) e.emplace_back(static_cast<std::size_t>(job->entry_bits[static_cast<std::size_t>(i)]));
    job->up_count.assign(n, count);
    job->child_up.assign(n, {});
    for (std::size_t v = 0; v < n; ++v)
        for (Vertex c : job->forest->children[v]) job->child_up[v][c] = count;
    job->from_child.assign(n, {});
    job->result.assign(n, {});
    return job;
}

namespace {

class ConvergeProgram : public VertexProgram {
public:
    ConvergeProgram(std::shared_ptr<ConvergeJob> job, Vertex self, int word) : job_(std::move(job)), self_(self) {
        const auto& bits = job_->entry_bits;
        for (int b : bits) {
            std::size_t chunk = job_->kind == CombineKind::Xor ? block_bits(static_cast<std::size_t>(b), word, job_->max_blocks) : std::max<std::size_t>(1, static_cast<std::size_t>(b));
            chunks_.push_back(chunk);
            blocks_.push_back(std::max<std::size_t>(1, (static_cast<std::size_t>(b) + chunk - 1) / chunk));
        }
        const Forest& f = *job_->forest;
        const auto& mine = job_->entries[sz(self_)];
        for (std::size_t e = 0; e < mine.size(); ++e) agg_.push_back(split(mine[e], chunks_[e]));
        job_->result[sz(self_)].clear();
        job_->from_child[sz(self_)].clear();
        for (Vertex c : f.children[sz(self_)]) {
            Child ch;
            ch.id = c;
            ch.sequence = sequence(job_->child_up[sz(self_)].at(c));
            ch.got.assign(bits.size(), 0);
            if (job_->keep_children) ch.parts.assign(bits.size(), {});
            children_.push_back(std::move(ch));
        }
        own_sequence_ = f.parent[sz(self_)] == kNone ? std::vector<std::pair<int, std::size_t>>{} : sequence(job_->up_count[sz(self_)]);
    }

    void init(Context& ctx) override { flush(ctx); finish_if_done(); }

    void on_round(Context& ctx, std::span<const Incoming> inbox) override {
        for (const auto& msg : inbox) {
            auto it = std::find_if(children_.begin(), children_.end(), [&](const Child& c) { return c.id == msg.from; });
            if (it == children_.end()) throw Error(ErrorKind::Precondition, "convergecast message from a non-child");
            Child& ch = *it;
            auto [entry, block] = ch.sequence.at(ch.cursor++);
            auto e = static_cast<std::size_t>(entry);
            if (job_->kind == CombineKind::Xor)
                agg_[e][block].xor_with(*msg.payload);
            else
                job_->combine(entry, agg_[e][0], *msg.payload);
            if (job_->keep_children) ch.parts[e].push_back(*msg.payload);
            ch.got[e] = block + 1;
        }
        flush(ctx);
        finish_if_done();
    }

private:
    struct Child {
        Vertex id = kNone;
        std::vector<std::pair<int, std::size_t>> sequence;
        std::size_t cursor = 0;
        std::vector<std::size_t> got;
        std::vector<std::vector<BitVec>> parts;
    };

    std::vector<std::pair<int, std::size_t>> sequence(int up) const {
        std::vector<std::pair<int, std::size_t>> seq;
        for (int k = 0; k < up; ++k) {
            int e = job_->descending ? up - 1 - k : k;
            for (std::size_t b = 0; b < blocks_[static_cast<std::size_t>(e)]; ++b) seq.push_back({e, b});
        }
        return seq;
    }

    bool ready(int entry, std::size_t block) const {
        for (const auto& ch : children_) {
            if (job_->child_up[sz(self_)].at(ch.id) <= entry) continue;
            if (ch.got[static_cast<std::size_t>(entry)] <= block) return false;
        }
        return true;
    }

    void flush(Context& ctx) {
        const Forest& f = *job_->forest;
        while (sent_ < own_sequence_.size()) {
            auto [entry, block] = own_sequence_[sent_];
            if (!ready(entry, block)) break;
            ctx.send(f.parent[sz(self_)], agg_[static_cast<std::size_t>(entry)][block]);
            ++sent_;
        }
    }

    void finish_if_done() {
        if (done_) return;
        for (const auto& ch : children_)
            if (ch.cursor < ch.sequence.size()) return;
        done_ = true;
        auto& out = job_->result[sz(self_)];
        out.clear();
        for (const auto& blocks : agg_) {
            BitVec joined;
            for (const auto& b : blocks) joined.append(b);
            out.push_back(std::move(joined));
        }
        if (job_->keep_children) {
            for (auto& ch : children_) {
                std::vector<BitVec> values(ch.parts.size());
                for (std::size_t e = 0; e < ch.parts.size(); ++e)
                    for (const auto& b : ch.parts[e]) values[e].append(b);
                job_->from_child[sz(self_)][ch.id] = std::move(values);
            }
        }
    }

    std::shared_ptr<ConvergeJob> job_;
    Vertex self_;
    std::vector<std::size_t> chunks_;
    std::vector<std::size_t> blocks_;
    std::vector<std::vector<BitVec>> agg_;
    std::vector<Child> children_;
    std::vector<std::pair<int, std::size_t>> own_sequence_;
    std::size_t sent_ = 0;
    bool done_ = false;
};

}  // namespace

ProgramFactory converge_program(std::shared_ptr<ConvergeJob> job) {
    return [job](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (!job->forest->member[sz(v)]) return nullptr;
        return std::make_unique<ConvergeProgram>(job, v, word_bits(job->forest->n()));
    };
}

// ---------------------------------------------------------------- downcast

namespace {

class DowncastProgram : public VertexProgram {
public:
    DowncastProgram(std::shared_ptr<DowncastJob> job, Vertex self) : job_(std::move(job)), self_(self) { job_->received[sz(self_)] = 0; }

    void init(Context& ctx) override {
        if (job_->forest->is_root(self_)) forward(ctx);
    }

    void on_round(Context& ctx, std::span<const Incoming> inbox) override {
        for (const auto& msg : inbox) {
            job_->value[sz(self_)] = *msg.payload;
            forward(ctx);
        }
    }

private:
    void forward(Context& ctx) {
        job_->received[sz(self_)] = 1;
        for (Vertex c : job_->forest->children[sz(self_)]) ctx.send(c, job_->for_child(self_, c, job_->value[sz(self_)]));
    }

    std::shared_ptr<DowncastJob> job_;
    Vertex self_;
};

}  // namespace

ProgramFactory downcast_program(std::shared_ptr<DowncastJob> job) {
    job->received.assign(static_cast<std::size_t>(job->forest->n()), 0);
    if (job->value.size() != static_cast<std::size_t>(job->forest->n())) job->value.resize(static_cast<std::size_t>(job->forest->n()));
    return [job](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (!job->forest->member[sz(v)]) return nullptr;
        return std::make_unique<DowncastProgram>(job, v);
    };
}

// ---------------------------------------------------------------- stream down

namespace {

BitVec tagged(bool is_item, const BitVec& body) {
    BitVec out;
    out.push(is_item ? 1 : 0, 1);
    out.append(body);
    return out;
}

class StreamDownProgram : public VertexProgram {
public:
    StreamDownProgram(std::shared_ptr<StreamDownJob> job, Vertex self) : job_(std::move(job)), self_(self) { job_->received[sz(self_)].clear(); }

    void init(Context& ctx) override {
        const Forest& f = *job_->forest;
        for (Vertex c : f.children[sz(self_)])
            for (const auto& item : job_->own_items(self_, c)) ctx.send(c, tagged(true, item));
        if (f.is_root(self_)) close(ctx);
    }

    void on_round(Context& ctx, std::span<const Incoming> inbox) override {
        const Forest& f = *job_->forest;
        for (const auto& msg : inbox) {
            if (msg.payload->get(0, 1) == 0) {
                close(ctx);
                continue;
            }
            job_->received[sz(self_)].push_back(msg.payload->slice(1, msg.payload->size() - 1));
            for (Vertex c : f.children[sz(self_)]) ctx.send(c, msg.payload);
        }
    }

private:
    void close(Context& ctx) {
        auto eos = make_payload(tagged(false, BitVec{}));
        for (Vertex c : job_->forest->children[sz(self_)]) ctx.send(c, eos);
    }

    std::shared_ptr<StreamDownJob> job_;
    Vertex self_;
};

}  // namespace

ProgramFactory stream_down_program(std::shared_ptr<StreamDownJob> job) {
    job->received.assign(static_cast<std::size_t>(job->forest->n()), {});
    return [job](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (!job->forest->member[sz(v)]) return nullptr;
        return std::make_unique<StreamDownProgram>(job, v);
    };
}

// ---------------------------------------------------------------- neighbor exchange

namespace {

class ExchangeProgram : public VertexProgram {
public:
    ExchangeProgram(std::shared_ptr<ExchangeJob> job, Vertex self) : job_(std::move(job)), self_(self) { job_->inbox[sz(self_)].clear(); }

    void init(Context& ctx) override {
        for (Vertex w : ctx.neighbors())
            if (job_->member[sz(w)] && job_->allowed(self_, w)) ctx.send(w, job_->payload(self_, w));
    }

    void on_round(Context&, std::span<const Incoming> inbox) override {
        for (const auto& msg : inbox) job_->inbox[sz(self_)][msg.from] = *msg.payload;
    }

private:
    std::shared_ptr<ExchangeJob> job_;
    Vertex self_;
};

}  // namespace

ProgramFactory exchange_program(std::shared_ptr<ExchangeJob> job) {
    job->inbox.assign(job->member.size(), {});
    return [job](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (!job->member[sz(v)]) return nullptr;
        return std::make_unique<ExchangeProgram>(job, v);
    };
}

// ---------------------------------------------------------------- BFS flood

std::shared_ptr<FloodJob> make_flood_job(int n) {
    auto job = std::make_shared<FloodJob>();
    auto un = static_cast<std::size_t>(n);
    job->member.assign(un, 1);
    job->source.assign(un, 0);
    job->allowed = [](Vertex, Vertex) { return true; };
    job->parent.assign(un, kNone);
    job->depth.assign(un, -1);
    job->children.assign(un, {});
    return job;
}

namespace {

class FloodProgram : public VertexProgram {
public:
    FloodProgram(std::shared_ptr<FloodJob> job, Vertex self) : job_(std::move(job)), self_(self) {
        job_->parent[sz(self_)] = kNone;
        job_->depth[sz(self_)] = -1;
        job_->children[sz(self_)].clear();
    }

    void init(Context& ctx) override {
        if (!job_->source[sz(self_)]) return;
        job_->depth[sz(self_)] = 0;
        BitVec token;
        token.push(0, 1);
        auto payload = make_payload(std::move(token));
        for (Vertex w : ctx.neighbors())
            if (job_->member[sz(w)] && job_->allowed(self_, w)) ctx.send(w, payload);
    }

    void on_round(Context& ctx, std::span<const Incoming> inbox) override {
        std::vector<Vertex> senders;
        for (const auto& msg : inbox) {
            if (msg.payload->get(0, 1) == 1)
                job_->children[sz(self_)].push_back(msg.from);
            else
                senders.push_back(msg.from);
        }
        std::sort(job_->children[sz(self_)].begin(), job_->children[sz(self_)].end());
        if (senders.empty() || job_->depth[sz(self_)] >= 0) return;
        // inbox is sorted by sender, so the first token comes from the smallest id
        Vertex parent = senders.front();
        job_->parent[sz(self_)] = parent;
        job_->depth[sz(self_)] = static_cast<int>(ctx.round());
        BitVec notice;
        notice.push(1, 1);
        ctx.send(parent, std::move(notice));
        BitVec token;
        token.push(0, 1);
        auto payload = make_payload(std::move(token));
        for (Vertex w : ctx.neighbors()) {
            if (!job_->member[sz(w)] || !job_->allowed(self_, w)) continue;
            if (std::find(senders.begin(), senders.end(), w) != senders.end()) continue;
            ctx.send(w, payload);
        }
    }

private:
    std::shared_ptr<FloodJob> job_;
    Vertex self_;
};

}  // namespace

ProgramFactory flood_program(std::shared_ptr<FloodJob> job) {
    return [job](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (!job->member[sz(v)]) return nullptr;
        return std::make_unique<FloodProgram>(job, v);
    };
}

Forest forest_from_flood(const FloodJob& job) {
    Forest f(static_cast<int>(job.member.size()));
    for (std::size_t v = 0; v < job.member.size(); ++v) {
        f.member[v] = job.member[v] && job.depth[v] >= 0;
        f.parent[v] = job.parent[v];
        f.children[v] = job.children[v];
    }
    return f;
}

// ---------------------------------------------------------------- routing

namespace {

class RouteProgram : public VertexProgram {
public:
    RouteProgram(std::shared_ptr<RouteJob> job, Vertex self) : job_(std::move(job)), self_(self) {
        job_->delivered[sz(self_)].clear();
        header_ = width_for(job_->paths.size());
        for (std::size_t p = 0; p < job_->paths.size(); ++p) {
            const auto& path = job_->paths[p];
            for (std::size_t i = 0; i + 1 < path.size(); ++i)
                if (path[i] == self_) next_[static_cast<int>(p)] = path[i + 1];
        }
    }

    void init(Context& ctx) override {
        for (const auto& packet : job_->outgoing[sz(self_)]) {
            const auto& path = job_->paths[static_cast<std::size_t>(packet.path)];
            if (path.front() != self_) throw Error(ErrorKind::Precondition, "packet does not start at its source");
            if (path.size() == 1) {
                job_->delivered[sz(self_)].push_back(packet);
                continue;
            }
            auto blocks = split(packet.body, block_bits(packet.body.size(), ctx.word(), job_->max_blocks));
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                BitVec msg;
                msg.push(static_cast<std::uint64_t>(packet.path), header_);
                msg.push(b + 1 == blocks.size() ? 1 : 0, 1);
                msg.append(blocks[b]);
                ctx.send(path[1], std::move(msg));
            }
        }
    }

    void on_round(Context& ctx, std::span<const Incoming> inbox) override {
        for (const auto& msg : inbox) {
            auto path = static_cast<int>(msg.payload->get(0, header_));
            auto it = next_.find(path);
            if (it != next_.end()) {
                ctx.send(it->second, msg.payload);
                continue;
            }
            bool last = msg.payload->get(static_cast<std::size_t>(header_), 1) == 1;
            auto& buf = partial_[path];
            buf.append(msg.payload->slice(static_cast<std::size_t>(header_) + 1, msg.payload->size() - static_cast<std::size_t>(header_) - 1));
            if (last) {
                job_->delivered[sz(self_)].push_back({path, std::move(buf)});
                partial_.erase(path);
            }
        }
    }

private:
    std::shared_ptr<RouteJob> job_;
    Vertex self_;
    int header_ = 1;
    std::map<int, Vertex> next_;
    std::map<int, BitVec> partial_;
};

}  // namespace

ProgramFactory route_program(std::shared_ptr<RouteJob> job) {
    std::size_t n = job->outgoing.size();
    job->delivered.assign(n, {});
    std::vector<char> involved(n, 0);
    for (const auto& path : job->paths)
        for (Vertex v : path) involved[sz(v)] = 1;
    return [job, involved](Vertex v) -> std::unique_ptr<VertexProgram> {
        if (!involved[sz(v)]) return nullptr;
        return std::make_unique<RouteProgram>(job, v);
    };
}

}  // namespace vcut
