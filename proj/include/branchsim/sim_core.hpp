// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace branchsim {

/// Virtual time in integer milliseconds.
using Millis = std::int64_t;
/// Token counts (lengths, KV residency).
using Tokens = std::int64_t;

/// A broken precondition or invariant inside the simulator. Always a bug in
/// the caller (or in the simulator), never a user input problem.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid user configuration. `field()` names the offending config path,
/// e.g. "policy.M".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), m_field(std::move(field)) {}

    const std::string& field() const noexcept { return m_field; }

private:
    std::string m_field;
};

inline void require(bool cond, const char* what) {
    if (!cond) {
        throw ContractViolation(what);
    }
}

class SimClock {
public:
    SimClock() = default;
    explicit SimClock(Millis now) : m_now(now) {
        require(now >= 0, "SimClock: time must be non-negative");
    }

    Millis now() const noexcept { return m_now; }

    void advance(Millis delta) {
        require(delta >= 0, "SimClock::advance: negative delta");
        m_now += delta;
    }

private:
    Millis m_now = 0;
};

/// Value-returning form of SimClock::advance.
inline SimClock advance(SimClock clock, Millis delta) {
    clock.advance(delta);
    return clock;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Sub-seed for a named stream: splitmix64(root ^ splitmix64(fnv1a64(id))).
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream_id) noexcept;

/// Recorded verbatim in output metadata so traces can be audited.
inline constexpr std::string_view kPrngDescription =
    "std::mt19937_64 per stream; stream seed = splitmix64(root_seed ^ "
    "splitmix64(fnv1a64(stream_id))); distributions from Boost.Random";

/// A named, independently seeded pseudo-random stream. Identical
/// (root seed, stream id) pairs always replay the same sequence.
class RngStream {
public:
    using Engine = std::mt19937_64;

    RngStream(std::uint64_t root_seed, std::string stream_id);

    std::uint64_t root_seed() const noexcept { return m_root_seed; }
    const std::string& id() const noexcept { return m_id; }
    std::uint64_t sub_seed() const noexcept { return m_sub_seed; }

    std::uint64_t next() { return m_engine(); }
    /// Uniform on [0, 1).
    double uniform();
    double normal(double mean, double sd);
    double lognormal_median(double median, double sigma_log);
    double exponential(double mean);
    double beta(double a, double b);
    /// Uniform on the closed range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    Engine& engine() noexcept { return m_engine; }

private:
    std::uint64_t m_root_seed;
    std::string m_id;
    std::uint64_t m_sub_seed;
    Engine m_engine;
};

RngStream split_stream(std::uint64_t root_seed, std::string_view stream_id);

} // namespace branchsim
