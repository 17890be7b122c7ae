#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "rgtn/tensor.hpp"

namespace rgtn {

/// Seeded generator with platform-independent draws: the engine is fully
/// specified by the standard, and the distributions below are computed here
/// rather than through the implementation-defined std:: distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Box-Muller).
    double normal();
    /// Uniform integer in [0, n).
    Index below(Index n);

    Tensor uniform_tensor(Shape shape, double lo, double hi);
    Tensor normal_tensor(Shape shape, double stddev = 1.0);

    std::string state() const;
    void set_state(const std::string& state);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rgtn
