#pragma once

#include <cmath>
#include <cstdint>

namespace pinnse {

/// Counter-based splitmix64. Distribution mapping is done by hand so streams
/// are reproducible across standard libraries and platforms.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Integer in [0, n).
    uint64_t below(uint64_t n) { return next_u64() % n; }

    /// Derive an independent stream for a named sub-task.
    Rng fork(uint64_t salt) const {
        uint64_t s = state_ ^ (0xd1342543de82ef95ULL * (salt + 1));
        return Rng(s * 0xaf251af3b0f025b5ULL + 0xb564ef22ec7aece5ULL);
    }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pinnse
