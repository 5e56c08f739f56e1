// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/orderstats.hpp"

#include "branchsim/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace branchsim {

namespace {

// Beyond this N binomial coefficients are no longer exact in a double and the
// terms are evaluated in log space instead.
constexpr int kDirectMaxN = 60;

double binomial(int n, int k) {
    if (k < 0 || k > n) {
        return 0.0;
    }
    k = std::min(k, n - k);
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return c;
}

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// C(n,k) F^a (1-F)^b for F strictly inside (0, 1).
double binomial_term(int n, int k, int a, int b, double F) {
    if (n <= kDirectMaxN) {
        return binomial(n, k) * std::pow(F, a) * std::pow(1.0 - F, b);
    }
    return std::exp(log_binomial(n, k) + a * std::log(F) + b * std::log1p(-F));
}

} // namespace

void OrderStatQuery::validate() const {
    if (N < 1 || M < 1 || M > N) {
        throw std::domain_error("order statistic: need 1 <= M <= N (got M=" + std::to_string(M) +
                                ", N=" + std::to_string(N) + ")");
    }
    if (!(F >= 0.0 && F <= 1.0)) {
        throw std::domain_error("order statistic: F must lie in [0, 1]");
    }
}

double cdf_order_stat(const OrderStatQuery& q) {
    q.validate();
    if (q.F == 0.0) {
        return 0.0;
    }
    if (q.F == 1.0) {
        return 1.0;
    }
    double sum = 0.0;
    for (int i = q.M; i <= q.N; ++i) {
        sum += binomial_term(q.N, i, i, q.N - i, q.F);
    }
    return std::min(sum, 1.0);
}

double cdf_order_stat(int M, int N, double F) {
    return cdf_order_stat(OrderStatQuery{M, N, F});
}

double monotonicity_gap(int M, int N, double F) {
    OrderStatQuery{M, N, F}.validate();
    if (F == 0.0 || F == 1.0) {
        return 0.0;
    }
    return binomial_term(N, M - 1, M, N - M + 1, F);
}

Sampler uniform_sampler() {
    return [](RngStream& rng) { return rng.uniform(); };
}

Sampler length_sampler(const LengthParams& params) {
    return [params](RngStream& rng) { return static_cast<double>(sample_length(params, rng)); };
}

double monte_carlo_order_stat(int M, int N, const Sampler& sampler, double x, std::int64_t trials,
                              std::uint64_t seed) {
    const double xs[] = {x};
    const auto hits = order_stat_hits(M, N, sampler, xs, trials, seed, ExecMode::Parallel);
    return static_cast<double>(hits[0]) / static_cast<double>(trials);
}

std::vector<double> stopping_step_cdf(int M, int N, const LengthParams& params, Tokens chunk_steps) {
    OrderStatQuery{M, N, 0.0}.validate();
    require(chunk_steps >= 1, "stopping_step_cdf: chunk_steps must be >= 1");
    std::vector<double> out;
    for (Tokens k = 1;; ++k) {
        const double g = cdf_order_stat(M, N, length_cdf(params, static_cast<double>(k * chunk_steps)));
        out.push_back(g);
        if (g >= 1.0 || k * chunk_steps >= params.max_len) {
            break;
        }
    }
    return out;
}

double expected_order_stat_length(int M, int N, const LengthParams& params) {
    OrderStatQuery{M, N, 0.0}.validate();
    double sum = 0.0;
    for (Tokens x = 0; x < params.max_len; ++x) {
        sum += 1.0 - cdf_order_stat(M, N, length_cdf(params, static_cast<double>(x)));
    }
    return sum;
}

double expected_stopping_steps(int M, int N, const LengthParams& params, Tokens chunk_steps) {
    OrderStatQuery{M, N, 0.0}.validate();
    require(chunk_steps >= 1, "expected_stopping_steps: chunk_steps must be >= 1");
    double sum = 0.0;
    for (Tokens x = 0; x < params.max_len; x += chunk_steps) {
        sum += 1.0 - cdf_order_stat(M, N, length_cdf(params, static_cast<double>(x)));
    }
    return static_cast<double>(chunk_steps) * sum;
}

} // namespace branchsim
