#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "aerogrip/geom.hpp"

namespace aerogrip {

/// Deterministic random stream. All variates are derived from the fully
/// specified mt19937_64 sequence with our own transforms, so identical seeds
/// produce identical draws on every platform (std::*_distribution would not
/// guarantee that).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller (one variate per call, no cached state).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double exponential() { return -std::log(1.0 - uniform()); }

    Vec3 gaussian3(double sigma) { return {sigma * normal(), sigma * normal(), sigma * normal()}; }

    /// Categorical draw over non-negative weights (need not be normalized).
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u <= 0.0) return i;
        }
        return weights.size() - 1;
    }

    /// Uniform rotation: normalized 4D Gaussian.
    UnitQuaternion uniform_quaternion() {
        return {normal(), normal(), normal(), normal()};
    }

    /// Draw from the antipodally symmetrized von Mises-Fisher distribution on
    /// S^3 about `mean` with concentration `kappa`, folded to the mean's
    /// hemisphere. Wood's rejection scheme for the cosine marginal.
    UnitQuaternion vmf(const UnitQuaternion& mean, double kappa);

  private:
    double beta_3half_3half();  // Beta(1.5, 1.5)
    std::mt19937_64 gen_;
};

/// Independent substream derived from (seed, a, b) by splitmix-style mixing.
/// Used to keep parallel work (query kernels, annealing chains) reproducible
/// regardless of thread count.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace aerogrip
