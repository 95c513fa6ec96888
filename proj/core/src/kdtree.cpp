#include "aerogrip/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace aerogrip {

namespace {
constexpr std::size_t kLeafSize = 16;
}

void KdTree3::build(const std::vector<Vec3>& points) {
    points_ = points;
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.clear();
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build_node(0, points_.size());
    }
}

int KdTree3::build_node(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const std::size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         return points_[a](axis) < points_[b](axis);
                     });

    nodes_[id].axis = axis;
    nodes_[id].split = points_[order_[mid]](axis);
    const int left = build_node(begin, mid);
    const int right = build_node(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<std::size_t> KdTree3::knn(const Vec3& query, std::size_t k) const {
    k = std::min(k, points_.size());
    if (k == 0) return {};

    // max-heap of (distance^2, index)
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> heap;

    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const double d2 = (points_[idx] - query).squaredNorm();
                if (heap.size() < k) {
                    heap.emplace(d2, idx);
                } else if (d2 < heap.top().first) {
                    heap.pop();
                    heap.emplace(d2, idx);
                }
            }
            return;
        }
        const double delta = query(node.axis) - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (heap.size() < k || delta * delta < heap.top().first) self(self, far);
    };
    visit(visit, 0);

    std::vector<std::size_t> result(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
        result[i] = heap.top().second;
        heap.pop();
    }
    return result;
}

std::vector<std::size_t> KdTree3::radius(const Vec3& query, double r) const {
    std::vector<std::size_t> result;
    if (points_.empty()) return result;
    const double r2 = r * r;

    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if ((points_[idx] - query).squaredNorm() <= r2) result.push_back(idx);
            }
            return;
        }
        const double delta = query(node.axis) - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (delta * delta <= r2) self(self, far);
    };
    visit(visit, 0);
    return result;
}

bool KdTree3::any_within(const Vec3& query, double r) const {
    if (points_.empty()) return false;
    const double r2 = r * r;
    bool found = false;

    auto visit = [&](auto&& self, int node_id) -> void {
        if (found) return;
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end && !found; ++i) {
                if ((points_[order_[i]] - query).squaredNorm() <= r2) found = true;
            }
            return;
        }
        const double delta = query(node.axis) - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (!found && delta * delta <= r2) self(self, far);
    };
    visit(visit, 0);
    return found;
}

std::size_t KdTree3::nearest(const Vec3& query, double* dist) const {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();

    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const double d2 = (points_[idx] - query).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = idx;
                }
            }
            return;
        }
        const double delta = query(node.axis) - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (delta * delta < best_d2) self(self, far);
    };
    if (!points_.empty()) visit(visit, 0);

    if (dist) *dist = std::sqrt(best_d2);
    return best;
}

}  // namespace aerogrip
