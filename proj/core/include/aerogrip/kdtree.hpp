#pragma once

#include <cstddef>
#include <vector>

#include "aerogrip/geom.hpp"

namespace aerogrip {

/// Static kd-tree over 3D points. Built once, then queried concurrently.
class KdTree3 {
  public:
    KdTree3() = default;
    explicit KdTree3(const std::vector<Vec3>& points) { build(points); }

    void build(const std::vector<Vec3>& points);

    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }

    /// Indices of the k nearest points to `query` (including exact matches),
    /// ordered by increasing distance.
    std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

    /// Indices of all points within `radius` of `query` (unordered).
    std::vector<std::size_t> radius(const Vec3& query, double r) const;

    /// True if any point lies within `radius` of `query`.
    bool any_within(const Vec3& query, double r) const;

    /// Index of the nearest point; `dist` receives its distance.
    std::size_t nearest(const Vec3& query, double* dist = nullptr) const;

  private:
    struct Node {
        int axis = -1;          // -1 marks a leaf
        double split = 0.0;
        std::size_t begin = 0;  // leaf range into order_
        std::size_t end = 0;
        int left = -1;
        int right = -1;
    };

    int build_node(std::size_t begin, std::size_t end);

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace aerogrip
