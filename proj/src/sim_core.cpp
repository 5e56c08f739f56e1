// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/sim_core.hpp"

#include <boost/random/beta_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <cmath>

namespace branchsim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x00000100000001b3ull;
    }
    return hash;
}

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream_id) noexcept {
    return splitmix64(root_seed ^ splitmix64(fnv1a64(stream_id)));
}

RngStream::RngStream(std::uint64_t root_seed, std::string stream_id)
    : m_root_seed(root_seed),
      m_id(std::move(stream_id)),
      m_sub_seed(derive_seed(root_seed, m_id)),
      m_engine(m_sub_seed) {}

double RngStream::uniform() {
    // Top 53 bits of the engine output.
    return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
}

double RngStream::normal(double mean, double sd) {
    boost::random::normal_distribution<double> dist(mean, sd);
    return dist(m_engine);
}

double RngStream::lognormal_median(double median, double sigma_log) {
    return median * std::exp(normal(0.0, sigma_log));
}

double RngStream::exponential(double mean) {
    boost::random::exponential_distribution<double> dist(1.0 / mean);
    return dist(m_engine);
}

double RngStream::beta(double a, double b) {
    boost::random::beta_distribution<double> dist(a, b);
    return dist(m_engine);
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
    require(lo <= hi, "RngStream::uniform_int: empty range");
    boost::random::uniform_int_distribution<std::int64_t> dist(lo, hi);
    return dist(m_engine);
}

RngStream split_stream(std::uint64_t root_seed, std::string_view stream_id) {
    return RngStream(root_seed, std::string(stream_id));
}

} // namespace branchsim
