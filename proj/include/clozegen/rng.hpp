#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace cloze {

/// Seeded generator with portable bounded draws.
///
/// std::uniform_int_distribution is implementation-defined, so draws are
/// done here by rejection sampling on the raw mt19937_64 stream. The same
/// seed yields the same choices with every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    /// Uniform integer in [0, bound). bound must be positive.
    std::size_t below(std::size_t bound);

    /// Independent stream for sub-task `index`; does not advance this one.
    Rng fork(std::uint64_t index) const;

    /// `count` distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count);

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace cloze
