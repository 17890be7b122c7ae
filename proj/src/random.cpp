#include "rgtn/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rgtn {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Index Rng::below(Index n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<Index>(x % bound);
}

Tensor Rng::uniform_tensor(Shape shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = uniform(lo, hi);
    return t;
}

Tensor Rng::normal_tensor(Shape shape, double stddev) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = stddev * normal();
    return t;
}

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
    os.precision(17);
    os << spare_;
    return os.str();
}

void Rng::set_state(const std::string& state) {
    std::istringstream is(state);
    int spare_flag = 0;
    is >> engine_ >> spare_flag >> spare_;
    if (!is) throw std::invalid_argument("malformed RNG state");
    has_spare_ = spare_flag != 0;
}

}  // namespace rgtn
