// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace branchsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAudit = 3;

/// Entry point of the `branchsim` tool. args[0] is the program name.
/// Returns the process exit code; never calls exit().
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace branchsim::cli
