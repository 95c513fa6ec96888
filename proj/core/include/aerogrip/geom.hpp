#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

namespace aerogrip {

using Vec3 = Eigen::Vector3d;

/// Unit quaternion representing a rotation in SO(3). q and -q denote the
/// same rotation; on construction the quaternion is normalized and folded
/// to a canonical sign so that equal rotations compare bitwise equal and
/// every downstream computation is independent of the caller's sign choice.
struct UnitQuaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    UnitQuaternion() = default;
    UnitQuaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {
        normalize();
    }

    static UnitQuaternion identity() { return {}; }

    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle) {
        const Vec3 a = axis.normalized();
        const double h = 0.5 * angle;
        const double s = std::sin(h);
        return {std::cos(h), a.x() * s, a.y() * s, a.z() * s};
    }

    static UnitQuaternion from_matrix(const Eigen::Matrix3d& m) {
        Eigen::Quaterniond q(m);
        return {q.w(), q.x(), q.y(), q.z()};
    }

    Eigen::Matrix3d to_matrix() const {
        return Eigen::Quaterniond(w, x, y, z).toRotationMatrix();
    }

    void normalize() {
        const double n2 = w * w + x * x + y * y + z * z;
        if (std::abs(n2 - 1.0) > 1e-12) {
            const double n = std::sqrt(n2);
            w /= n;
            x /= n;
            y /= n;
            z /= n;
        }
        // Canonical sign: first nonzero of (w, x, y, z) is positive.
        if (w < 0.0 || (w == 0.0 && (x < 0.0 || (x == 0.0 && (y < 0.0 || (y == 0.0 && z < 0.0)))))) {
            w = -w;
            x = -x;
            y = -y;
            z = -z;
        }
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    /// Inner product as 4-vectors (sign-sensitive; callers fold as needed).
    double dot(const UnitQuaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

    UnitQuaternion conjugate() const {
        UnitQuaternion q;
        q.w = w;
        q.x = -x;
        q.y = -y;
        q.z = -z;
        q.normalize();
        return q;
    }

    UnitQuaternion inverse() const { return conjugate(); }

    /// Hamilton product, renormalized.
    UnitQuaternion operator*(const UnitQuaternion& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Vec3 rotate(const Vec3& v) const {
        // v' = v + 2 * u x (u x v + w v) with u = (x, y, z)
        const Vec3 u(x, y, z);
        const Vec3 t = 2.0 * u.cross(v);
        return v + w * t + u.cross(t);
    }
};

/// Geodesic angle between two rotations in [0, pi], quaternion sign folded.
/// Chordal atan2 form: exact at zero angle, well conditioned everywhere.
inline double geodesic_angle(const UnitQuaternion& a, const UnitQuaternion& b) {
    const double s = a.dot(b) < 0.0 ? -1.0 : 1.0;
    const double dw = a.w - s * b.w, dx = a.x - s * b.x, dy = a.y - s * b.y, dz = a.z - s * b.z;
    const double sw = a.w + s * b.w, sx = a.x + s * b.x, sy = a.y + s * b.y, sz = a.z + s * b.z;
    const double minus = std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
    const double plus = std::sqrt(sw * sw + sx * sx + sy * sy + sz * sz);
    return 4.0 * std::atan2(minus, plus);
}

/// Rigid transform in SE(3): translation plus rotation.
struct Pose {
    Vec3 p = Vec3::Zero();
    UnitQuaternion q;

    Pose() = default;
    Pose(const Vec3& p_, const UnitQuaternion& q_) : p(p_), q(q_) {}

    static Pose identity() { return {}; }
};

/// Pose composition: apply b in a's frame.
inline Pose compose(const Pose& a, const Pose& b) {
    return {a.p + a.q.rotate(b.p), a.q * b.q};
}

inline Pose inverse(const Pose& a) {
    const UnitQuaternion qi = a.q.inverse();
    return {-qi.rotate(a.p), qi};
}

/// Pose of `target` expressed in `frame`: compose(frame, result) == target.
inline Pose relative_pose(const Pose& frame, const Pose& target) {
    return compose(inverse(frame), target);
}

/// Mixed translation/rotation metric: Euclidean distance plus rot_weight
/// (meters per radian) times the geodesic angle. Zero iff the poses are
/// equal up to quaternion sign.
inline double pose_distance(const Pose& a, const Pose& b, double rot_weight = 1.0) {
    return (a.p - b.p).norm() + rot_weight * geodesic_angle(a.q, b.q);
}

}  // namespace aerogrip
