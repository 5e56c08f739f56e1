// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/sim_core.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace branchsim {

enum class EventKind {
    Prefill,     // request admitted; time = prefill start
    Admit,       // queued branch moved into the decode batch
    Chunk,       // decode chunk; time = chunk start
    Complete,
    PhaseSwitch, // explore -> exploit; value = new threshold
    Prune,       // value = reward that fell below the threshold
    EarlyStop,   // running branch stopped at finalization
    Discard,     // never-started branch dropped at finalization
    Finalize,
    Occupancy,   // engine state after a chunk's bookkeeping
};

std::string_view to_string(EventKind k);

/// One scheduler or engine action. Unused fields keep their defaults.
struct SimEvent {
    EventKind kind = EventKind::Chunk;
    Millis time = 0;
    std::int64_t request_id = -1;
    int branch = 0;
    int batch_size = 0;
    Millis duration = 0;
    Tokens resident = 0;
    double value = 0.0;
    int label = -1;
    bool correct = false;
};

/// Compact one-line form used by golden traces, e.g. "t=1050 prune r0.b3 reward=0.3".
std::string to_string(const SimEvent& e);

} // namespace branchsim
