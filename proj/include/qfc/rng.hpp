// Seeded random streams for reproducible Monte Carlo.
//
// Work is split into fixed-size chunks; every chunk draws from its own engine
// seeded from (master seed, domain tag, chunk index). Results therefore depend
// only on the seed, never on how chunks are scheduled across threads.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace qfc {

enum class RngDomain : std::uint32_t {
    hbt_pulses = 1,
    mzi_pulses = 2,
    tomography_counts = 3,
    bootstrap = 4,
    fit_bootstrap = 5,
    test = 99,
};

class RandomStream {
public:
    using engine_type = std::mt19937_64;

    RandomStream(std::uint64_t seed, RngDomain domain, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        engine_.seed(seq);
    }

    /// Uniform in [0, 1).
    double uniform() { return std::generate_canonical<double, 64>(engine_); }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean, double sigma) {
        return std::normal_distribution<double>(mean, sigma)(engine_);
    }

    std::int64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<std::int64_t>(mean)(engine_);
    }

    /// Bose-Einstein (geometric) photon number with the given mean.
    std::int64_t thermal(double mean) {
        if (mean <= 0.0) return 0;
        return std::geometric_distribution<std::int64_t>(1.0 / (1.0 + mean))(engine_);
    }

    std::int64_t binomial(std::int64_t n, double p) {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        return std::binomial_distribution<std::int64_t>(n, p)(engine_);
    }

    engine_type& engine() { return engine_; }

private:
    engine_type engine_;
};

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Callers write into per-index slots so the merge order is fixed.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace qfc
