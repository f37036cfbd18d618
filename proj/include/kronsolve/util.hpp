#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "kronsolve/types.hpp"

namespace kronsolve {

/// Global cap on worker threads used by parallel kernels (CLI --threads).
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [0, count). Work items must write disjoint state;
/// results are identical for any worker count.
void parallel_for(Index count, const std::function<void(Index)>& fn,
                  int threads = 0);

/// Deterministic uniform RNG. Draws are identical across platforms, unlike
/// std::uniform_real_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

class Stopwatch {
public:
    Stopwatch() : start_(clock::now()) {}
    void reset() { start_ = clock::now(); }
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

}  // namespace kronsolve
