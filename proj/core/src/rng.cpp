#include "aerogrip/rng.hpp"

#include <cmath>

namespace aerogrip {

double Rng::beta_3half_3half() {
    // Beta(1.5, 1.5) = X / (X + Y) with X, Y ~ Gamma(1.5, 1),
    // Gamma(1.5) = Gamma(0.5) + Gamma(1) = N^2/2 + Exp.
    const double n1 = normal();
    const double n2 = normal();
    const double x = 0.5 * n1 * n1 + exponential();
    const double y = 0.5 * n2 * n2 + exponential();
    return x / (x + y);
}

UnitQuaternion Rng::vmf(const UnitQuaternion& mean, double kappa) {
    // Wood (1994) rejection sampling of the cosine w against mu, for S^3
    // (ambient dimension p = 4).
    constexpr double p_minus_1 = 3.0;
    const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + p_minus_1 * p_minus_1)) /
                     p_minus_1;
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + p_minus_1 * std::log(1.0 - x0 * x0);

    double w = 1.0;
    for (int iter = 0; iter < 1000; ++iter) {
        const double z = beta_3half_3half();
        const double u = 1.0 - uniform();  // (0, 1]
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if (kappa * w + p_minus_1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }

    // Uniform direction in the 3-space orthogonal to the mean.
    const Eigen::Vector4d mu(mean.w, mean.x, mean.y, mean.z);
    Eigen::Vector4d v(normal(), normal(), normal(), normal());
    v -= v.dot(mu) * mu;
    double vn = v.norm();
    if (vn < 1e-12) {
        v = Eigen::Vector4d(1, 0, 0, 0) - mu(0) * mu;
        vn = v.norm();
    }
    v /= vn;

    Eigen::Vector4d q = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
    if (q.dot(mu) < 0.0) q = -q;  // fold to the mean's hemisphere
    return {q(0), q(1), q(2), q(3)};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace aerogrip
