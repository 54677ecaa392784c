#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace sparsedet {

/// Seeded generator with counter-based substreams.
///
/// A substream is identified by the master seed plus a path of integers
/// (trial index, node index, purpose tag, ...). Deriving a stream never
/// consumes state from another stream, so simulation results do not depend
/// on evaluation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : engine_(seed)
    {
    }

    static Rng stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path)
    {
        std::uint64_t state = splitmix(master_seed ^ 0x5deece66dULL);
        for (const std::uint64_t step : path) {
            state = splitmix(state ^ splitmix(step + 0x9e3779b97f4a7c15ULL));
        }
        return Rng(state);
    }

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool coin() { return (engine_() >> 63) != 0; }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    static std::uint64_t splitmix(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    // Ziggurat sampler; about twice as fast as the libstdc++ polar method.
    boost::random::normal_distribution<double> normal_;
};

}  // namespace sparsedet
