#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>

namespace charc {

/// Seeded 64-bit generator with portable sampling helpers.
///
/// Sampling is done with explicit bit manipulation instead of the standard
/// distributions so that sequences do not depend on the standard library
/// implementation. The engine state can be saved and restored, which the
/// search checkpoint relies on.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    std::string save() const;
    void restore(const std::string& state);

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a salt (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace charc
