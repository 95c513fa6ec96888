#pragma once

// Deterministic synthetic clouds and demonstrations used across the test
// suites. Everything here is generated analytically so tests can compare
// against closed-form geometry.

#include <cstdint>

#include "aerogrip/cloud.hpp"
#include "aerogrip/models.hpp"

namespace testsupport {

using aerogrip::PointCloud;
using aerogrip::Pose;
using aerogrip::PosePair;
using aerogrip::UnitQuaternion;
using aerogrip::Vec3;

/// Square grid on the plane z = z0, spacing apart, (nx x ny) points centered
/// on (cx, cy).
PointCloud plane_cloud(int nx, int ny, double spacing, double z0 = 0.0, double cx = 0.0,
                       double cy = 0.0);

/// Deterministic quasi-uniform sphere sampling (Fibonacci spiral).
PointCloud sphere_cloud(double radius, int n, const Vec3& center = Vec3::Zero());

/// Half-cylinder shell (axis z, theta in [-span/2, span/2] about +x),
/// sampled on an (n_theta x n_z) grid, with viewpoint far on +x so normals
/// orient outward.
PointCloud cylinder_cloud(double radius, double height, int n_theta, int n_z,
                          double span_deg = 120.0);

/// Axis-aligned box surface covered by a grid of points.
/// Faces: top (z = cz + h), 4 sides, optional bottom. Centered on (cx, cy),
/// base at z = cz.
PointCloud box_cloud(double wx, double wy, double h, double spacing, bool with_bottom = false,
                     double cx = 0.0, double cy = 0.0, double cz = 0.0);

/// Equilateral-triangle slab (side, thickness) centered at (cx, cy), base at
/// z = 0: top, bottom and side walls.
PointCloud triangle_slab_cloud(double side, double thickness, double spacing, double cx = 0.0,
                               double cy = 0.0);

/// n exactly collinear points along +x.
PointCloud collinear_cloud(int n, double spacing = 0.01);

/// Add deterministic Gaussian jitter (for breaking grid symmetry).
void jitter_cloud(PointCloud& cloud, double sigma, std::uint64_t seed);

/// Single-drone demonstration on the top-center of a box: link at the top
/// face center (identity orientation), drone hovering cable_length above.
PosePair box_top_demo(double h, double cable_length = 0.5, double cx = 0.0, double cy = 0.0);

/// Three-drone triangular demonstration on a triangle slab's top face:
/// links inset from the corners, drones above with cables splayed outward
/// by `splay` meters (cooperative rigs keep the drones apart).
std::vector<PosePair> triangle_demo(double side, double thickness, double inset,
                                    double cable_length = 0.5, double splay = 0.2,
                                    double cx = 0.0, double cy = 0.0);

/// Corner positions of the equilateral triangle used by triangle_slab_cloud.
std::vector<Vec3> triangle_corners(double side, double cx = 0.0, double cy = 0.0);

}  // namespace testsupport
