#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sast {

/// Deterministic random stream. std::normal_distribution is
/// implementation-defined, so gaussians use an explicit Box-Muller
/// transform to keep outputs stable across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    /// Derive an independent stream from (seed, stream ids). Used so that
    /// e.g. per-person noise does not depend on how many persons exist.
    static Rng derive(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
        std::seed_seq seq{seed, a, b, c};
        std::mt19937_64 eng(0);
        eng.seed(seq);
        Rng r(0);
        r.engine_ = eng;
        return r;
    }

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(engine_() % static_cast<uint64_t>(n));
    }

    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sast
