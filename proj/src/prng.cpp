// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/prng.hpp"

#include <cmath>
#include <numbers>

namespace shuffledet {

std::uint64_t Prng::splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Prng::Prng(std::uint64_t seed) : state_(splitmix64(seed))
{
    if (state_ == 0)
        state_ = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Prng::next_u64()
{
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
}

double Prng::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Tensor seeded_normal(Prng& prng, const Shape& shape, float mean, float std)
{
    if (!(std >= 0.0f))
        throw ParamError("seeded_normal: std must be >= 0");
    Tensor out(shape, mean);
    if (std == 0.0f)
        return out;
    for (float& v : out.data())
        v = static_cast<float>(static_cast<double>(mean) + static_cast<double>(std) * prng.normal());
    return out;
}

} // namespace shuffledet
