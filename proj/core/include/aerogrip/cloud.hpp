#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aerogrip/geom.hpp"
#include "aerogrip/kdtree.hpp"
#include "aerogrip/rng.hpp"

namespace aerogrip {

struct PointCloud {
    std::vector<Vec3> points;
    std::optional<Vec3> viewpoint;  // sensor origin used for normal orientation

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    Vec3 centroid() const;
};

enum class CloudFormat { PlyAscii, XyzText };

/// Parse a point cloud file. Exact duplicates (within 1e-9 per component) are
/// dropped; input order is otherwise preserved.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format,
                      std::optional<Vec3> viewpoint = std::nullopt);

/// Duplicate removal used by the loaders (exposed for programmatic clouds).
void dedup_points(PointCloud& cloud);

void save_cloud_xyz(const std::filesystem::path& path, const PointCloud& cloud);

/// Principal curvatures at a surface point, 1/meters, ordered r1 >= r2.
/// Sign convention: convex with respect to the oriented normal is positive.
struct Curvature2 {
    double r1 = 0.0;
    double r2 = 0.0;
};

/// A point on the surface with its body-fixed frame and curvature descriptor.
/// The frame's columns are (k1 direction, normal x k1, normal).
struct SurfaceFeature {
    Pose pose;
    Curvature2 curv;
};

/// Per-cloud feature extraction: PCA normals, quadric-fit principal
/// curvatures, and the sampling routines used to learn and transfer models.
/// Builds one k-NN index up front; all queries are const and thread-safe.
class SurfaceAnalyzer {
  public:
    SurfaceAnalyzer(const PointCloud& cloud, int k_neighbors = 30);

    const PointCloud& cloud() const { return cloud_; }
    const KdTree3& tree() const { return tree_; }
    int k_neighbors() const { return k_; }
    const Vec3& centroid() const { return centroid_; }

    /// PCA normal, oriented toward the viewpoint when present, else toward
    /// the +z hemisphere (ties broken toward +x, then +y).
    Vec3 estimate_normal(std::size_t index) const;

    struct Principal {
        Vec3 k1_dir;
        Vec3 k2_dir;
        Curvature2 r;
    };
    Principal principal_curvatures(std::size_t index) const;

    SurfaceFeature surface_feature(std::size_t index) const;

    /// Uniformly sample n features among the points within contact_radius of
    /// the link origin (without replacement when possible).
    std::vector<SurfaceFeature> sample_contact_region(const Pose& link_pose, double contact_radius,
                                                      int n, Rng& rng) const;

    /// n features at uniformly random point indices; degenerate points are
    /// retried a bounded number of times, then skipped with a warning.
    std::vector<SurfaceFeature> sample_task_features(int n, Rng& rng) const;

  private:
    const PointCloud& cloud_;
    KdTree3 tree_;
    int k_;
    Vec3 centroid_;
};

}  // namespace aerogrip
