// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace branchsim {

namespace {

void check(bool ok, const char* field, const std::string& msg) {
    if (!ok) {
        throw ConfigError(std::string("engine.") + field, msg);
    }
}

} // namespace

Millis EngineConfig::prefill_cost(Tokens prompt_len) const {
    return std::llround(prefill_ms_per_token * static_cast<double>(prompt_len));
}

double EngineConfig::step_cost(int batch_size) const {
    return step_base_ms + step_per_branch_ms * static_cast<double>(batch_size);
}

Millis EngineConfig::chunk_cost(int batch_size) const {
    return std::llround(static_cast<double>(chunk_steps) * step_cost(batch_size));
}

void EngineConfig::validate() const {
    check(max_batch >= 1, "max_batch", "must be >= 1");
    check(chunk_steps >= 1, "chunk_steps", "must be >= 1");
    check(prefill_ms_per_token >= 0, "prefill_ms_per_token", "must be >= 0");
    check(step_base_ms >= 0, "step_base_ms", "must be >= 0");
    check(step_per_branch_ms >= 0, "step_per_branch_ms", "must be >= 0");
    check(kv_budget >= 1, "kv_budget", "must be >= 1");
    check(prm_eval_ms >= 0, "prm_eval_ms", "must be >= 0");
}

std::string_view to_string(BranchState s) {
    switch (s) {
    case BranchState::Queued: return "queued";
    case BranchState::Running: return "running";
    case BranchState::Completed: return "completed";
    case BranchState::Pruned: return "pruned";
    case BranchState::EarlyStopped: return "early_stopped";
    }
    return "unknown";
}

KvLedger::KvLedger(Tokens budget) : m_budget(budget) {
    require(budget >= 1, "KvLedger: budget must be >= 1");
}

KvLedger::Entry& KvLedger::entry(std::int64_t request_id) {
    auto it = m_entries.find(request_id);
    require(it != m_entries.end(), "KvLedger: unknown request");
    return it->second;
}

const KvLedger::Entry& KvLedger::entry(std::int64_t request_id) const {
    auto it = m_entries.find(request_id);
    require(it != m_entries.end(), "KvLedger: unknown request");
    return it->second;
}

bool KvLedger::has_request(std::int64_t request_id) const {
    return m_entries.count(request_id) != 0;
}

void KvLedger::open_request(std::int64_t request_id, Tokens prefix, int num_branches) {
    require(!has_request(request_id), "KvLedger::open_request: request already prefilled");
    require(prefix >= 0 && num_branches >= 1, "KvLedger::open_request: bad arguments");
    Entry e;
    e.prefix = prefix;
    e.prefix_resident = true;
    e.live = num_branches;
    e.released.assign(static_cast<std::size_t>(num_branches), false);
    e.branch_reserved.assign(static_cast<std::size_t>(num_branches), 0);
    m_entries.emplace(request_id, std::move(e));
    m_resident += prefix;
}

void KvLedger::start_branch(const Branch& branch) {
    Entry& e = entry(branch.request_id);
    const auto slot = static_cast<std::size_t>(branch.index - 1);
    require(slot < e.released.size() && !e.released[slot], "KvLedger::start_branch: bad branch");
    require(e.branch_reserved[slot] == 0, "KvLedger::start_branch: branch already started");
    const Tokens need = branch.remaining();
    e.branch_reserved[slot] = need;
    e.reserved += need;
    m_reserved += need;
}

void KvLedger::add_decoded(const Branch& branch, Tokens tokens) {
    Entry& e = entry(branch.request_id);
    const auto slot = static_cast<std::size_t>(branch.index - 1);
    require(slot < e.released.size() && !e.released[slot], "KvLedger::add_decoded: bad branch");
    require(tokens >= 0 && tokens <= e.branch_reserved[slot],
            "KvLedger::add_decoded: decode exceeds reservation");
    e.branch_reserved[slot] -= tokens;
    e.reserved -= tokens;
    m_reserved -= tokens;
    e.decoded += tokens;
    m_resident += tokens;
}

Tokens KvLedger::release(const Branch& branch) {
    require(branch.terminal(), "release_branch: branch is not terminal");
    Entry& e = entry(branch.request_id);
    const auto slot = static_cast<std::size_t>(branch.index - 1);
    require(slot < e.released.size(), "release_branch: bad branch index");
    require(!e.released[slot], "release_branch: branch already released");
    e.released[slot] = true;

    Tokens freed = branch.tokens_decoded;
    e.decoded -= branch.tokens_decoded;
    e.reserved -= e.branch_reserved[slot];
    m_reserved -= e.branch_reserved[slot];
    e.branch_reserved[slot] = 0;
    e.live -= 1;
    if (e.live == 0 && e.prefix_resident) {
        e.prefix_resident = false;
        freed += e.prefix;
    }
    m_resident -= freed;
    return freed;
}

void KvLedger::accumulate(Millis delta) {
    require(delta >= 0, "KvLedger::accumulate: negative delta");
    if (delta == 0) {
        return;
    }
    for (auto& [id, e] : m_entries) {
        if (e.prefix_resident) {
            e.token_ms += (e.prefix + e.decoded) * delta;
        }
    }
    m_total_token_ms += m_resident * delta;
}

Tokens KvLedger::request_resident(std::int64_t request_id) const {
    const Entry& e = entry(request_id);
    return e.prefix_resident ? e.prefix + e.decoded : 0;
}

std::int64_t KvLedger::request_token_ms(std::int64_t request_id) const {
    return entry(request_id).token_ms;
}

Tokens recompute_resident(std::span<const BranchGroup> groups) {
    Tokens total = 0;
    for (const auto& g : groups) {
        bool any_alive = false;
        for (const auto& b : g.branches) {
            if (!b.terminal()) {
                any_alive = true;
                total += b.tokens_decoded;
            }
        }
        if (any_alive) {
            total += g.prefix;
        }
    }
    return total;
}

std::optional<std::vector<Branch>> charge_prefill(const EngineConfig& cfg, SimClock& clock,
                                                  KvLedger& ledger, const Request& req,
                                                  int num_branches, const BranchSource& source) {
    require(!ledger.has_request(req.id), "charge_prefill: request already prefilled");
    require(num_branches >= 1, "charge_prefill: need at least one branch");
    if (!ledger.can_commit(req.prompt_len)) {
        return std::nullopt;
    }
    const Millis cost = cfg.prefill_cost(req.prompt_len);
    clock.advance(cost);
    ledger.open_request(req.id, req.prompt_len, num_branches);
    ledger.accumulate(cost);

    std::vector<Branch> branches;
    branches.reserve(static_cast<std::size_t>(num_branches));
    for (int j = 1; j <= num_branches; ++j) {
        BranchDraw draw = source(req, j);
        Branch b;
        b.request_id = req.id;
        b.index = j;
        b.outcome = draw.outcome;
        b.trajectory = std::move(draw.trajectory);
        b.state = BranchState::Queued;
        b.enqueue_time = clock.now();
        branches.push_back(std::move(b));
    }
    return branches;
}

ChunkOutcome decode_chunk(const EngineConfig& cfg, SimClock& clock, KvLedger& ledger,
                          std::span<Branch* const> batch) {
    require(!batch.empty(), "decode_chunk: empty batch");
    require(batch.size() <= static_cast<std::size_t>(cfg.max_batch), "decode_chunk: batch exceeds B");
    for (const Branch* b : batch) {
        require(b != nullptr && b->state == BranchState::Running, "decode_chunk: branch not running");
        require(b->remaining() > 0, "decode_chunk: running branch has nothing left to decode");
    }

    ChunkOutcome out;
    out.start_time = clock.now();
    out.batch_size = static_cast<int>(batch.size());
    out.duration = cfg.chunk_cost(out.batch_size);

    for (Branch* b : batch) {
        const Tokens steps = std::min(cfg.chunk_steps, b->remaining());
        b->tokens_decoded += steps;
        ledger.add_decoded(*b, steps);
        if (b->remaining() == 0) {
            out.completions.push_back(Completion{b, steps});
        }
    }
    clock.advance(out.duration);
    ledger.accumulate(out.duration);
    for (auto& c : out.completions) {
        c.branch->state = BranchState::Completed;
        c.branch->end_time = clock.now();
    }
    return out;
}

Tokens release_branch(KvLedger& ledger, const Branch& branch) {
    return ledger.release(branch);
}

} // namespace branchsim
