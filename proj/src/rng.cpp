#include "clozegen/rng.hpp"

#include <limits>
#include <numeric>

#include "clozegen/error.hpp"

namespace cloze {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::size_t Rng::below(std::size_t bound)
{
    if (bound == 0)
        throw Error(Errc::InvalidArgument, "Rng::below requires a positive bound");
    const std::uint64_t b = bound;
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % b + 1) % b;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x > limit);
    return static_cast<std::size_t>(x % b);
}

Rng Rng::fork(std::uint64_t index) const
{
    return Rng(splitmix64(seed_ ^ splitmix64(index + 1)));
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t count)
{
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    if (count > n)
        count = n;
    // partial Fisher-Yates
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace cloze
