// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "shuffledet/tensor.hpp"

namespace shuffledet {

/// Portable deterministic generator.
///
/// The seed is stepped once through SplitMix64
///   z += 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z ^= z >> 31
/// and the result (forced non-zero) seeds an xorshift64* stream:
///   x ^= x >> 12; x ^= x << 25; x ^= x >> 27; out = x * 0x2545F4914F6CDD1D.
/// The stream is identical on every platform for a given seed.
class Prng {
public:
    explicit Prng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform();
    /// Standard normal via Box-Muller; draws come in pairs, the second is cached.
    double normal();

    std::uint64_t state() const { return state_; }

    static std::uint64_t splitmix64(std::uint64_t z);

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Tensor of N(mean, std^2) draws in flat order. std == 0 yields exactly mean.
Tensor seeded_normal(Prng& prng, const Shape& shape, float mean, float std);

} // namespace shuffledet
