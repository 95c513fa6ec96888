#include "aerogrip/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aerogrip/errors.hpp"

namespace aerogrip {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log I1(x) for x >= 0, stable across the full range.
double log_bessel_i1(double x) {
    if (x < 1e-8) return std::log(0.5 * x);  // I1(x) ~ x/2
    if (x < 500.0) return std::log(std::cyl_bessel_i(1.0, x));
    // Asymptotic: I1(x) ~ e^x / sqrt(2 pi x) (1 - 3/(8x) - 15/(128 x^2) - ...)
    const double inv = 1.0 / x;
    const double series = 1.0 - 0.375 * inv - 0.1171875 * inv * inv;
    return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(series);
}

double sorted_curvature_diff2(const Curvature2& a, const Curvature2& b) {
    const double d1 = a.r1 - b.r1;
    const double d2 = a.r2 - b.r2;
    return d1 * d1 + d2 * d2;
}

}  // namespace

double log_gaussian_eval(const double* x, const double* mu, double sigma, int dim) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = x[i] - mu[i];
        d2 += d * d;
    }
    return -0.5 * dim * (kLog2Pi + 2.0 * std::log(sigma)) - 0.5 * d2 / (sigma * sigma);
}

double gaussian_eval(const double* x, const double* mu, double sigma, int dim) {
    return std::exp(log_gaussian_eval(x, mu, sigma, dim));
}

double log_vmf_c4(double kappa) {
    // C4(kappa) = kappa / (4 pi^2 I1(kappa)); kappa -> 0 gives the uniform
    // density 1 / (2 pi^2) on S^3.
    if (kappa < 1e-6) return -std::log(2.0 * M_PI * M_PI) - std::log1p(kappa * kappa / 8.0);
    return std::log(kappa) - std::log(4.0 * M_PI * M_PI) - log_bessel_i1(kappa);
}

double log_vmf_antipodal_eval(const UnitQuaternion& q, const UnitQuaternion& mu, double kappa) {
    const double t = std::abs(q.dot(mu));
    // log cosh(kappa t), overflow-safe.
    const double kt = kappa * t;
    const double log_cosh = kt + std::log1p(std::exp(-2.0 * kt)) - std::log(2.0);
    return log_vmf_c4(kappa) + log_cosh;
}

double vmf_antipodal_eval(const UnitQuaternion& q, const UnitQuaternion& mu, double kappa) {
    return std::exp(log_vmf_antipodal_eval(q, mu, kappa));
}

double log_kernel_eval(const SurfaceFeature& s, const FeatureKernel& kernel, const Bandwidths& bw) {
    const double r[2] = {s.curv.r1, s.curv.r2};
    const double mu_r[2] = {kernel.mean.curv.r1, kernel.mean.curv.r2};
    return log_gaussian_eval(s.pose.p.data(), kernel.mean.pose.p.data(), bw.sigma_p, 3) +
           log_vmf_antipodal_eval(s.pose.q, kernel.mean.pose.q, bw.sigma_q) +
           log_gaussian_eval(r, mu_r, bw.sigma_r, 2);
}

double kernel_eval(const SurfaceFeature& s, const FeatureKernel& kernel, const Bandwidths& bw) {
    return std::exp(log_kernel_eval(s, kernel, bw));
}

double logsumexp(const std::vector<double>& v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;  // all -inf (or empty)
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

void MixtureDensity::normalize_weights() {
    double total = 0.0;
    for (const FeatureKernel& k : kernels) total += k.weight;
    if (total <= 0.0) throw DomainError("mixture weights sum to zero");
    for (FeatureKernel& k : kernels) k.weight /= total;
}

double MixtureDensity::log_eval(const SurfaceFeature& s) const {
    std::vector<double> terms;
    terms.reserve(kernels.size());
    for (const FeatureKernel& k : kernels) {
        if (k.weight <= 0.0) continue;
        terms.push_back(std::log(k.weight) + log_kernel_eval(s, k, bw));
    }
    return logsumexp(terms);
}

double MixtureDensity::eval(const SurfaceFeature& s) const { return std::exp(log_eval(s)); }

double MixtureDensity::log_curvature_marginal(const Curvature2& r) const {
    const double norm = -(kLog2Pi + 2.0 * std::log(bw.sigma_r));
    std::vector<double> terms;
    terms.reserve(kernels.size());
    for (const FeatureKernel& k : kernels) {
        if (k.weight <= 0.0) continue;
        terms.push_back(std::log(k.weight) + norm -
                        0.5 * sorted_curvature_diff2(r, k.mean.curv) / (bw.sigma_r * bw.sigma_r));
    }
    return logsumexp(terms);
}

double MixtureDensity::curvature_marginal(const Curvature2& r) const {
    return std::exp(log_curvature_marginal(r));
}

SurfaceFeature MixtureDensity::sample(Rng& rng) const {
    std::vector<double> w(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) w[i] = kernels[i].weight;
    const FeatureKernel& k = kernels[rng.categorical(w)];

    SurfaceFeature s;
    s.pose.p = k.mean.pose.p + rng.gaussian3(bw.sigma_p);
    s.pose.q = rng.vmf(k.mean.pose.q, bw.sigma_q);
    s.curv.r1 = k.mean.curv.r1 + bw.sigma_r * rng.normal();
    s.curv.r2 = k.mean.curv.r2 + bw.sigma_r * rng.normal();
    if (s.curv.r1 < s.curv.r2) std::swap(s.curv.r1, s.curv.r2);  // keep r1 >= r2
    return s;
}

MixtureDensity make_mixture(const std::vector<SurfaceFeature>& features,
                            const std::vector<double>& weights, const Bandwidths& bw) {
    if (features.empty()) throw EmptyInput("mixture needs at least one kernel");
    if (features.size() != weights.size()) throw DimensionMismatch("feature/weight size mismatch");
    MixtureDensity d;
    d.bw = bw;
    d.kernels.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (weights[i] < 0.0) throw DomainError("negative kernel weight");
        d.kernels.push_back({features[i], weights[i]});
    }
    d.normalize_weights();
    return d;
}

}  // namespace aerogrip
