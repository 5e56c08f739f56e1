// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>

namespace branchsim {

namespace {

class Simulator {
public:
    Simulator(const SimulationConfig& cfg, std::span<const Request> requests,
              const BranchSource& source)
        : m_engine(cfg.engine),
          m_policy(cfg.policy.normalized()),
          m_requests(requests),
          m_source(source),
          m_ledger(cfg.engine.kv_budget) {
        m_engine.validate();
        m_policy.validate();
        for (std::size_t i = 1; i < requests.size(); ++i) {
            require(requests[i - 1].arrival_time <= requests[i].arrival_time,
                    "simulate: requests must be sorted by arrival time");
        }
    }

    SimulationResult run() {
        while (m_finalized < m_requests.size()) {
            fill_batch();
            if (m_batch.empty()) {
                if (!m_branch_queue.empty() || !m_request_queue.empty()) {
                    throw ConfigError("engine.kv_budget",
                                      "too small to admit the next waiting branch or prefix");
                }
                require(m_next_arrival < m_requests.size(), "simulate: idle with no pending work");
                const Millis delta = m_requests[m_next_arrival].arrival_time - m_clock.now();
                m_clock.advance(delta);
                m_ledger.accumulate(delta);
                continue;
            }
            decode_and_bookkeep();
        }
        m_result.end_time = m_clock.now();
        std::sort(m_result.records.begin(), m_result.records.end(),
                  [](const auto& a, const auto& b) { return a.request_id < b.request_id; });
        m_result.occupancy = occupancy_trace(m_result.events);
        return std::move(m_result);
    }

private:
    struct Active {
        const Request* request = nullptr;
        RequestMeta meta;
        std::vector<Branch> branches;
        Millis prefill_start = 0;
        int decode_chunks = 0;
    };

    void emit(EventKind kind, std::int64_t request_id = -1, int branch = 0) {
        SimEvent e;
        e.kind = kind;
        e.time = m_clock.now();
        e.request_id = request_id;
        e.branch = branch;
        m_result.events.push_back(e);
    }

    void pull_arrivals() {
        while (m_next_arrival < m_requests.size() &&
               m_requests[m_next_arrival].arrival_time <= m_clock.now()) {
            m_request_queue.push_back(&m_requests[m_next_arrival]);
            ++m_next_arrival;
        }
    }

    void fill_batch() {
        while (m_batch.size() < static_cast<std::size_t>(m_engine.max_batch)) {
            pull_arrivals();
            if (!m_branch_queue.empty()) {
                Branch* b = m_branch_queue.front();
                if (!m_ledger.can_commit(b->remaining())) {
                    break;
                }
                m_branch_queue.pop_front();
                b->state = BranchState::Running;
                b->start_time = m_clock.now();
                m_ledger.start_branch(*b);
                m_batch.push_back(b);
                emit(EventKind::Admit, b->request_id, b->index);
            } else if (!m_request_queue.empty()) {
                const Request* req = m_request_queue.front();
                const Millis start = m_clock.now();
                auto branches = charge_prefill(m_engine, m_clock, m_ledger, *req, m_policy.N, m_source);
                if (!branches) {
                    break;
                }
                m_request_queue.pop_front();
                SimEvent e;
                e.kind = EventKind::Prefill;
                e.time = start;
                e.request_id = req->id;
                m_result.events.push_back(e);
                m_result.prefill_order.push_back(req->id);

                Active& a = m_active[req->id];
                a.request = req;
                a.meta = RequestMeta::initial(m_policy);
                a.prefill_start = start;
                a.branches = std::move(*branches);
                for (Branch& b : a.branches) {
                    m_branch_queue.push_back(&b);
                }
            } else {
                break;
            }
        }
    }

    void decode_and_bookkeep() {
        const ChunkOutcome chunk = decode_chunk(m_engine, m_clock, m_ledger, m_batch);
        ++m_result.chunks;
        {
            SimEvent e;
            e.kind = EventKind::Chunk;
            e.time = chunk.start_time;
            e.batch_size = chunk.batch_size;
            e.duration = chunk.duration;
            m_result.events.push_back(e);
        }

        std::map<std::int64_t, std::vector<Branch*>> involved;
        for (Branch* b : m_batch) {
            involved[b->request_id].push_back(b);
        }
        std::map<const Branch*, Tokens> completion_step;
        for (const auto& c : chunk.completions) {
            completion_step[c.branch] = c.step;
        }

        Millis extra = 0;
        if (m_policy.prunes() && m_engine.prm_eval_ms > 0) {
            extra = std::llround(m_engine.prm_eval_ms * static_cast<double>(m_batch.size()));
            m_clock.advance(extra);
            m_ledger.accumulate(extra);
        }

        for (auto& [id, batched] : involved) {
            Active& a = m_active.at(id);
            a.decode_chunks += 1;
            std::sort(batched.begin(), batched.end(),
                      [](const Branch* x, const Branch* y) { return x->index < y->index; });

            std::vector<ChunkBranchView> views;
            views.reserve(batched.size());
            for (const Branch* b : batched) {
                ChunkBranchView v;
                v.index = b->index;
                v.completed = b->state == BranchState::Completed;
                v.completion_step = v.completed ? completion_step.at(b) : 0;
                v.final_reward = b->outcome.final_reward;
                v.current_reward = reward_at(b->trajectory, b->tokens_decoded);
                views.push_back(v);
            }

            const ChunkActions actions = on_chunk_end(a.meta, m_policy, views);
            if (actions.new_threshold) {
                emit(EventKind::PhaseSwitch, id);
                m_result.events.back().value = *actions.new_threshold;
            }
            for (int j : actions.completed) {
                Branch& b = a.branches[static_cast<std::size_t>(j - 1)];
                emit(EventKind::Complete, id, j);
                release_branch(m_ledger, b);
            }
            for (int j : actions.pruned) {
                Branch& b = a.branches[static_cast<std::size_t>(j - 1)];
                b.state = BranchState::Pruned;
                b.end_time = m_clock.now();
                emit(EventKind::Prune, id, j);
                m_result.events.back().value = reward_at(b.trajectory, b.tokens_decoded);
                release_branch(m_ledger, b);
            }
            if (actions.finalize) {
                finalize_request(a);
            }
        }

        std::erase_if(m_batch, [](const Branch* b) { return b->terminal(); });
        std::erase_if(m_active, [](const auto& kv) {
            return std::all_of(kv.second.branches.begin(), kv.second.branches.end(),
                               [](const Branch& b) { return b.terminal(); });
        });

        audit();

        SimEvent occ;
        occ.kind = EventKind::Occupancy;
        occ.time = m_clock.now();
        occ.duration = chunk.duration + extra;
        occ.batch_size = static_cast<int>(m_batch.size());
        occ.resident = m_ledger.total_resident();
        m_result.events.push_back(occ);
    }

    void finalize_request(Active& a) {
        const std::int64_t id = a.request->id;
        for (Branch& b : a.branches) {
            if (b.state == BranchState::Running) {
                b.state = BranchState::EarlyStopped;
                b.end_time = m_clock.now();
                emit(EventKind::EarlyStop, id, b.index);
                release_branch(m_ledger, b);
            } else if (b.state == BranchState::Queued) {
                b.state = BranchState::EarlyStopped;
                b.end_time = m_clock.now();
                emit(EventKind::Discard, id, b.index);
                release_branch(m_ledger, b);
            }
        }
        std::erase_if(m_branch_queue, [id](const Branch* b) { return b->request_id == id; });

        std::vector<TerminatedBranch> terminated;
        terminated.reserve(a.branches.size());
        for (const Branch& b : a.branches) {
            const double reward = b.state == BranchState::Completed
                                      ? b.outcome.final_reward
                                      : reward_at(b.trajectory, b.tokens_decoded);
            terminated.push_back(TerminatedBranch{b.index, b.state, b.outcome.answer_label, reward});
        }
        const FinalResponse resp = finalize(m_policy.aggregation, id, terminated, m_clock.now());

        SimEvent e;
        e.kind = EventKind::Finalize;
        e.time = m_clock.now();
        e.request_id = id;
        e.label = resp.label;
        e.correct = resp.is_correct;
        m_result.events.push_back(e);

        RequestRecord rec;
        rec.request_id = id;
        rec.arrival_time = a.request->arrival_time;
        rec.prefill_start = a.prefill_start;
        rec.finalize_time = resp.finalize_time;
        rec.is_correct = resp.is_correct;
        rec.final_label = resp.label;
        rec.chosen_branch = resp.chosen_branch;
        rec.decode_chunks = a.decode_chunks;
        rec.kv_token_ms = m_ledger.request_token_ms(id);
        rec.branches.reserve(a.branches.size());
        for (const Branch& b : a.branches) {
            rec.branches.push_back(BranchRecord{b.index, b.state, b.tokens_decoded,
                                                b.outcome.target_length, b.outcome.answer_label,
                                                b.outcome.final_reward});
        }
        m_result.records.push_back(std::move(rec));
        ++m_finalized;
    }

    void audit() {
        std::vector<BranchGroup> groups;
        groups.reserve(m_active.size());
        for (const auto& [id, a] : m_active) {
            groups.push_back(BranchGroup{a.request->prompt_len, a.branches});
        }
        ++m_result.audit_checks;
        if (recompute_resident(groups) != m_ledger.total_resident()) {
            ++m_result.audit_failures;
        }
    }

    EngineConfig m_engine;
    PolicyConfig m_policy;
    std::span<const Request> m_requests;
    const BranchSource& m_source;

    SimClock m_clock;
    KvLedger m_ledger;
    std::size_t m_next_arrival = 0;
    std::size_t m_finalized = 0;
    std::deque<const Request*> m_request_queue;
    std::deque<Branch*> m_branch_queue;
    std::vector<Branch*> m_batch;
    std::map<std::int64_t, Active> m_active;
    SimulationResult m_result;
};

} // namespace

SimulationResult simulate(const SimulationConfig& cfg, std::span<const Request> requests,
                          const BranchSource& source) {
    return Simulator(cfg, requests, source).run();
}

} // namespace branchsim
