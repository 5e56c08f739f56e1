// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/sim_core.hpp"
#include "branchsim/workload.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace branchsim {

/// The M-th smallest of N i.i.d. draws, evaluated where the base CDF equals F.
struct OrderStatQuery {
    int M = 1;
    int N = 1;
    double F = 0.0;

    /// Throws std::domain_error unless 1 <= M <= N and F in [0, 1].
    void validate() const;
};

/// P(X_(M) <= x) = sum_{i=M}^{N} C(N,i) F^i (1-F)^(N-i).
double cdf_order_stat(const OrderStatQuery& q);
double cdf_order_stat(int M, int N, double F);

/// cdf_order_stat(M, N+1, F) - cdf_order_stat(M, N, F), evaluated through the
/// closed form C(N, M-1) F^M (1-F)^(N-M+1): the (N+1)-th draw lands below x
/// while exactly M-1 of the first N do. Non-negative by construction.
double monotonicity_gap(int M, int N, double F);

/// Draws one base-distribution sample from a stream. Must not hold state of
/// its own so it can be shared across threads.
using Sampler = std::function<double(RngStream&)>;

Sampler uniform_sampler();
Sampler length_sampler(const LengthParams& params);

/// Fraction of `trials` in which the M-th smallest of N sampler draws is <= x.
/// Trials are grouped in fixed blocks, each with its own stream derived from
/// `seed`, so the result does not depend on how blocks are scheduled.
double monte_carlo_order_stat(int M, int N, const Sampler& sampler, double x, std::int64_t trials,
                              std::uint64_t seed = 0x5eed);

/// Distribution of the decode steps needed before M of N simultaneously
/// started branches have completed, when progress is observed every
/// `chunk_steps` steps and branch lengths follow `params`. Entry k is
/// P(stop <= (k+1) * chunk_steps); the vector ends once it reaches 1.
std::vector<double> stopping_step_cdf(int M, int N, const LengthParams& params, Tokens chunk_steps);

/// E[X_(M)] for N lengths drawn from `params` (sum of the survival function
/// over the integer support).
double expected_order_stat_length(int M, int N, const LengthParams& params);

/// Expected decode steps to M completions with chunked observation:
/// chunk_steps * sum_k (1 - P(X_(M) <= k * chunk_steps)).
double expected_stopping_steps(int M, int N, const LengthParams& params, Tokens chunk_steps);

} // namespace branchsim
