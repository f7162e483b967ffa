#include "charc/rng.hpp"

#include <limits>
#include <sstream>

#include "charc/error.hpp"

namespace charc {

std::uint64_t Rng::below(std::uint64_t n)
{
    if (n == 0) throw ConfigError("Rng::below requires n > 0");
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

std::string Rng::save() const
{
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::restore(const std::string& state)
{
    std::istringstream is(state);
    is >> engine_;
    if (!is) throw DataError("corrupt RNG state in checkpoint");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace charc
