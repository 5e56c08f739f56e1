// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/events.hpp"

#include <sstream>

namespace branchsim {

std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Prefill: return "prefill";
    case EventKind::Admit: return "admit";
    case EventKind::Chunk: return "chunk";
    case EventKind::Complete: return "complete";
    case EventKind::PhaseSwitch: return "phase";
    case EventKind::Prune: return "prune";
    case EventKind::EarlyStop: return "early_stop";
    case EventKind::Discard: return "discard";
    case EventKind::Finalize: return "finalize";
    case EventKind::Occupancy: return "occupancy";
    }
    return "unknown";
}

std::string to_string(const SimEvent& e) {
    std::ostringstream os;
    os << "t=" << e.time << ' ' << to_string(e.kind);
    switch (e.kind) {
    case EventKind::Prefill:
        os << " r" << e.request_id;
        break;
    case EventKind::Admit:
    case EventKind::Complete:
    case EventKind::EarlyStop:
    case EventKind::Discard:
        os << " r" << e.request_id << ".b" << e.branch;
        break;
    case EventKind::Chunk:
        os << " n=" << e.batch_size << " dt=" << e.duration;
        break;
    case EventKind::PhaseSwitch:
        os << " r" << e.request_id << " threshold=" << e.value;
        break;
    case EventKind::Prune:
        os << " r" << e.request_id << ".b" << e.branch << " reward=" << e.value;
        break;
    case EventKind::Finalize:
        os << " r" << e.request_id << " label=" << e.label << (e.correct ? " correct" : " wrong");
        break;
    case EventKind::Occupancy:
        os << " running=" << e.batch_size << " resident=" << e.resident;
        break;
    }
    return os.str();
}

} // namespace branchsim
