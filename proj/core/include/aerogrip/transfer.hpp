#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "aerogrip/cloud.hpp"
#include "aerogrip/models.hpp"

namespace aerogrip {

struct QueryKernel {
    Vec3 p = Vec3::Zero();
    UnitQuaternion q;
    double weight = 0.0;      // normalized, sums to 1 per link
    double log_weight = 0.0;  // log of the same
};

/// Per-link mixture of link-pose kernels over the query cloud.
struct QueryDensity {
    std::vector<std::vector<QueryKernel>> links;
    double sigma_p = 0.01;
    double sigma_q = 100.0;

    std::size_t link_count() const { return links.size(); }

    double eval(int link, const Pose& pose) const;
    double log_eval(int link, const Pose& pose) const;

    /// Position marginal (rotation integrated out); used for heatmaps.
    double log_position_marginal(int link, const Vec3& p) const;

    /// Kernel by weight, then position/rotation perturbed by the bandwidths.
    Pose sample(int link, Rng& rng) const;

    /// Kernel by weight, returned unperturbed (annealing anchor points).
    Pose sample_kernel(int link, Rng& rng) const;
};

struct CandidatePair {
    Pose drone;
    Pose link;
    int nearest_point = -1;      // filled by snap_to_surface
    double snap_distance = 0.0;  // displacement applied by snapping
};

struct CandidateGrasp {
    std::vector<CandidatePair> pairs;  // one per contact-model link
    double log_j = -std::numeric_limits<double>::infinity();
    bool feasible = true;
};

struct SaSchedule {
    double t0 = 1.0;            // initial temperature, log-likelihood units
    double cooling = 0.97;      // geometric factor per step
    int steps = 2000;
    double reanchor_prob = 0.25;  // jump a link to a fresh query-kernel draw
};

struct TransferParams {
    int n_i = 500;   // query-cloud contact-surface feature samples
    int n_j = 5;     // query-cloud task feature samples
    int n_q = 1000;  // query-density kernels per link
    SaSchedule sa;
    std::uint64_t seed = 0;
    bool ablate_task = false;     // baseline mode: no task factor, cloud-wide sampling
    double region_radius = 0.1;   // meters around each mapped contact region
    double query_sigma_p = 0.01;  // query-density bandwidths
    double query_sigma_q = 100.0;
    int threads = 1;
    int max_attempts = 50;  // region/feature retries per sample
};

/// Build the per-link query density on a novel cloud:
///  (a) accept n_j task features by the task model's curvature marginal,
///  (b) map every stored contact-to-task offset back through its inverse to
///      candidate contact regions (offsets chosen by curvature match),
///  (c) sample n_i features within region_radius of those regions,
///  (d) place n_q kernels at compose(v_i, u) with u drawn from the contact
///      density,
///  (e) weight each kernel, in log space, by the contact/object curvature
///      factors and the task-support sum, then normalize.
/// In ablate_task mode steps (a)-(b) are skipped, features are sampled
/// cloud-wide and the task factor is dropped (the baseline method).
QueryDensity build_query_density(const ContactModel& contact, const TaskModel& task,
                                 const ObjectModel& object, const SurfaceAnalyzer& analyzer,
                                 const TransferParams& params);

/// log J = sum over pairs of log H(h_i) + log Q(L_i).
double likelihood(const CandidateGrasp& candidate, const QueryDensity& queries,
                  const ConfigurationModel& config);

/// Simulated annealing over the link poses, k independent chains seeded
/// seed + chain index; drone poses follow each link through the demonstrated
/// link-to-drone transform. Returns candidates sorted by descending log J,
/// deduplicated by min_separation. When best_traces is given, it receives the
/// per-chain best-so-far log J after every step.
std::vector<CandidateGrasp> optimize(const QueryDensity& queries, const ConfigurationModel& config,
                                     const TransferParams& params, const PointCloud& cloud, int k,
                                     double min_separation = 0.05,
                                     std::vector<std::vector<double>>* best_traces = nullptr);

/// Flags a candidate infeasible when any link has no surface point within
/// contact_radius, or when the outward surface normal at its nearest point
/// tilts more than max_tilt away from world +z (an upside-down contact).
CandidateGrasp feasibility_filter(const CandidateGrasp& candidate, const SurfaceAnalyzer& analyzer,
                                  double max_tilt, double contact_radius);

/// Projects each link position onto its nearest cloud point, preserving
/// orientation; records the displacement and the point index.
CandidateGrasp snap_to_surface(const CandidateGrasp& candidate, const SurfaceAnalyzer& analyzer);

/// Greedy top-k by descending log J; a candidate is skipped when every link
/// lies within min_separation (pose_distance) of a kept candidate's
/// corresponding link.
std::vector<CandidateGrasp> select_top_k(const std::vector<CandidateGrasp>& candidates, int k,
                                         double min_separation, double rot_weight = 1.0);

}  // namespace aerogrip
