#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aerogrip/cloud.hpp"
#include "aerogrip/density.hpp"
#include "aerogrip/geom.hpp"

namespace aerogrip {

/// One demonstrated drone: body pose b and manipulative-link pose L.
struct PosePair {
    Pose drone;
    Pose link;
};

/// Single-shot training input: the payload cloud plus the demonstrated
/// drone/link poses.
struct DemonstrationRecord {
    PointCloud cloud;
    std::vector<PosePair> links;
    std::string label;
};

/// KDE over surface features sampled near the demonstrated contacts,
/// uniform weights.
struct ObjectModel {
    MixtureDensity density;
};

/// KDE over features sampled across the visible cloud, weighted toward
/// high-curvature (salient) features.
struct TaskModel {
    MixtureDensity density;
};

struct ContactKernel {
    Pose u;        // link pose in the contact feature's frame
    Curvature2 r;  // that feature's curvature
    double weight = 1.0;
};

/// Learned offset from a contact-region feature to a task feature:
/// u = relative_pose(contact feature i, task feature j).
struct TaskOffset {
    int object_kernel = 0;  // index into the object model's kernels
    int task_kernel = 0;    // index into the task model's kernels
    Pose u;
};

/// Per-link density of the link pose relative to contact-region features,
/// with stored contact-to-task offsets used at transfer time.
struct ContactModel {
    std::vector<std::vector<ContactKernel>> links;  // one kernel set per link
    Bandwidths bw;
    std::vector<int> retained;  // object-kernel indices behind links[n][k]
    std::vector<TaskOffset> task_offsets;

    std::size_t link_count() const { return links.size(); }

    /// Joint contact density at (u, r) for one link.
    double eval(int link, const Pose& u, const Curvature2& r) const;
    double log_eval(int link, const Pose& u, const Curvature2& r) const;

    /// Conditional pose density given curvature: log M(u | r).
    double log_conditional_pose(int link, const Pose& u, const Curvature2& r) const;

    /// Curvature marginal: log M_n(r).
    double log_curvature_marginal(int link, const Curvature2& r) const;

    /// Generative draw of a relative link pose from the (joint) density.
    Pose sample_offset(int link, Rng& rng) const;
};

struct ConfigurationKernel {
    Pose drone;
    Pose link;
};

/// Density over demonstrated (drone, link) pose pairs (one kernel per pair).
/// Kernel weights are similarity gates exp(-alpha * d(b, b_i)^2), left
/// unnormalized.
struct ConfigurationModel {
    std::vector<ConfigurationKernel> kernels;
    double alpha = 10.0;     // 1/m^2
    double sigma_p = 0.1;    // meters, link position bandwidth
    double sigma_q = 100.0;  // rotation concentration
    double rot_weight = 1.0; // meters/radian inside the drone-pose metric

    double log_eval_pair(const Pose& drone, const Pose& link) const;

    /// Product over candidate pairs of the per-pair density (linear scale).
    double eval(const std::vector<PosePair>& candidate) const;
    double log_eval(const std::vector<PosePair>& candidate) const;
};

ObjectModel learn_object_model(const std::vector<SurfaceFeature>& contact_features,
                               const Bandwidths& bw);

/// Weights are r1 clamped at zero and normalized by the maximum sampled
/// curvature; falls back to uniform weights when every feature is flat.
TaskModel learn_task_model(const std::vector<SurfaceFeature>& task_features, const Bandwidths& bw);

/// Downsamples n_c object kernels (uniform, without replacement; the same
/// retained set serves every link), stores per-link relative poses
/// u_ni = relative_pose(v_i, L_n) and all contact-to-task offsets
/// u_ij = relative_pose(v_i, v_j).
ContactModel learn_contact_model(const DemonstrationRecord& record, const ObjectModel& object,
                                 const TaskModel& task, int n_c, const Bandwidths& bw_c,
                                 std::uint64_t seed);

ConfigurationModel learn_configuration_model(const std::vector<DemonstrationRecord>& records,
                                             double alpha, double sigma_p, double sigma_q,
                                             double rot_weight = 1.0);

double configuration_eval(const ConfigurationModel& model, const std::vector<PosePair>& candidate);

/// Everything learned from one demonstration, as serialized to disk.
struct ModelBundle {
    std::string label;
    ObjectModel object;
    TaskModel task;
    ContactModel contact;
    ConfigurationModel configuration;
};

inline constexpr int kModelSchemaVersion = 1;

void save_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace aerogrip
