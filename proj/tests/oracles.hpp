// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Exact-arithmetic reference values for the order-statistic CDF.

#include <boost/multiprecision/cpp_int.hpp>

namespace branchsim::oracle {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

inline Integer choose(int n, int k) {
    Integer c = 1;
    for (int i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
    }
    return c;
}

inline Rational pow(const Rational& x, int e) {
    Rational r = 1;
    for (int i = 0; i < e; ++i) {
        r *= x;
    }
    return r;
}

/// sum_{i=M}^{N} C(N,i) F^i (1-F)^(N-i), exactly.
inline Rational order_stat_cdf(int M, int N, const Rational& F) {
    Rational sum = 0;
    for (int i = M; i <= N; ++i) {
        sum += Rational(choose(N, i)) * pow(F, i) * pow(1 - F, N - i);
    }
    return sum;
}

/// P(X_(M) <= x) for N + 1 draws minus the same for N draws, by differencing.
inline Rational monotonicity_gap(int M, int N, const Rational& F) {
    return order_stat_cdf(M, N + 1, F) - order_stat_cdf(M, N, F);
}

} // namespace branchsim::oracle
