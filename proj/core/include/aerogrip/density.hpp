#pragma once

#include <vector>

#include "aerogrip/cloud.hpp"
#include "aerogrip/geom.hpp"
#include "aerogrip/rng.hpp"

namespace aerogrip {

/// Kernel bandwidths for the three feature channels: sigma_p in meters,
/// sigma_q a unitless rotation concentration (larger = tighter), sigma_r in
/// 1/meters.
struct Bandwidths {
    double sigma_p = 0.01;
    double sigma_q = 100.0;
    double sigma_r = 10.0;
};

/// Isotropic k-variate normal density, including the (2 pi sigma^2)^(-k/2)
/// normalizer.
double gaussian_eval(const double* x, const double* mu, double sigma, int dim);
double log_gaussian_eval(const double* x, const double* mu, double sigma, int dim);

/// log of the antipodal vMF normalizer C4(kappa) = kappa / (4 pi^2 I1(kappa)).
double log_vmf_c4(double kappa);

/// Pair of antipodal von Mises-Fisher distributions on S^3:
///   C4(kappa) * (exp(kappa <q, mu>) + exp(-kappa <q, mu>)) / 2.
/// Invariant under q -> -q and mu -> -mu; integrates to 1 over S^3.
double vmf_antipodal_eval(const UnitQuaternion& q, const UnitQuaternion& mu, double kappa);
double log_vmf_antipodal_eval(const UnitQuaternion& q, const UnitQuaternion& mu, double kappa);

struct FeatureKernel {
    SurfaceFeature mean;
    double weight = 1.0;
};

/// Triple-product surface-feature kernel: N3(position) * Theta(rotation) *
/// N2(curvature).
double kernel_eval(const SurfaceFeature& s, const FeatureKernel& kernel, const Bandwidths& bw);
double log_kernel_eval(const SurfaceFeature& s, const FeatureKernel& kernel, const Bandwidths& bw);

/// Weighted kernel mixture over SE(3) x R^2. Weights sum to 1; immutable
/// after construction, safe for concurrent evaluation.
struct MixtureDensity {
    std::vector<FeatureKernel> kernels;
    Bandwidths bw;

    void normalize_weights();

    double eval(const SurfaceFeature& s) const;
    double log_eval(const SurfaceFeature& s) const;

    /// Curvature marginal: sum_i w_i N2(r | r_i, sigma_r).
    double curvature_marginal(const Curvature2& r) const;
    double log_curvature_marginal(const Curvature2& r) const;

    /// Draw a feature: kernel by categorical weight, then perturb position,
    /// rotation (vMF about the mean), and curvature by the bandwidths.
    SurfaceFeature sample(Rng& rng) const;
};

/// Mixture construction helper; throws EmptyInput on an empty feature list.
MixtureDensity make_mixture(const std::vector<SurfaceFeature>& features,
                            const std::vector<double>& weights, const Bandwidths& bw);

/// Numerically stable log(sum(exp(v))).
double logsumexp(const std::vector<double>& v);

}  // namespace aerogrip
