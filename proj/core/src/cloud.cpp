#include "aerogrip/cloud.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "aerogrip/errors.hpp"

namespace aerogrip {

Vec3 PointCloud::centroid() const {
    Vec3 c = Vec3::Zero();
    for (const Vec3& p : points) c += p;
    return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
}

namespace {

struct QuantizedKey {
    std::int64_t x, y, z;
    bool operator==(const QuantizedKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct QuantizedKeyHash {
    std::size_t operator()(const QuantizedKey& k) const {
        std::size_t h = std::hash<std::int64_t>()(k.x);
        h = h * 0x9e3779b97f4a7c15ULL + std::hash<std::int64_t>()(k.y);
        h = h * 0x9e3779b97f4a7c15ULL + std::hash<std::int64_t>()(k.z);
        return h;
    }
};

QuantizedKey quantize(const Vec3& p) {
    constexpr double inv = 1e9;  // 1e-9 duplicate resolution
    return {static_cast<std::int64_t>(std::llround(p.x() * inv)),
            static_cast<std::int64_t>(std::llround(p.y() * inv)),
            static_cast<std::int64_t>(std::llround(p.z() * inv))};
}

bool finite(const Vec3& p) {
    return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

PointCloud parse_xyz(std::istream& in, const std::string& path) {
    PointCloud cloud;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x)) continue;  // blank / comment-only line
        if (!(ls >> y >> z)) throw ParseError(path, line_no, "expected three coordinates");
        const Vec3 p(x, y, z);
        if (!finite(p)) throw ParseError(path, line_no, "non-finite coordinate");
        double extra;
        if (ls >> extra) throw ParseError(path, line_no, "trailing data after z coordinate");
        cloud.points.push_back(p);
    }
    return cloud;
}

PointCloud parse_ply_ascii(std::istream& in, const std::string& path) {
    std::string line;
    long line_no = 0;

    auto next_line = [&](std::string& out) {
        if (!std::getline(in, out)) return false;
        ++line_no;
        return true;
    };

    if (!next_line(line) || line.substr(0, 3) != "ply")
        throw ParseError(path, line_no, "missing 'ply' magic");

    struct Element {
        std::string name;
        long count = 0;
        std::vector<std::string> properties;
        bool has_list = false;
    };
    std::vector<Element> elements;
    bool format_seen = false;

    while (next_line(line)) {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt != "ascii") throw ParseError(path, line_no, "only 'format ascii 1.0' supported");
            format_seen = true;
        } else if (tok == "element") {
            Element e;
            if (!(ls >> e.name >> e.count)) throw ParseError(path, line_no, "malformed element");
            elements.push_back(e);
        } else if (tok == "property") {
            if (elements.empty()) throw ParseError(path, line_no, "property before element");
            std::string type;
            ls >> type;
            if (type == "list") {
                elements.back().has_list = true;
                elements.back().properties.push_back("<list>");
            } else {
                std::string name;
                ls >> name;
                elements.back().properties.push_back(name);
            }
        } else if (tok == "end_header") {
            break;
        } else {
            throw ParseError(path, line_no, "unknown header keyword '" + tok + "'");
        }
    }
    if (!format_seen) throw ParseError(path, line_no, "missing format line");

    PointCloud cloud;
    for (const Element& e : elements) {
        if (e.name != "vertex") {
            // Skip the data lines of elements we do not use.
            for (long i = 0; i < e.count; ++i) {
                if (!next_line(line)) throw ParseError(path, line_no, "unexpected end of file");
            }
            continue;
        }
        int ix = -1, iy = -1, iz = -1;
        for (std::size_t c = 0; c < e.properties.size(); ++c) {
            if (e.properties[c] == "x") ix = static_cast<int>(c);
            if (e.properties[c] == "y") iy = static_cast<int>(c);
            if (e.properties[c] == "z") iz = static_cast<int>(c);
        }
        if (ix < 0 || iy < 0 || iz < 0)
            throw ParseError(path, line_no, "vertex element lacks x/y/z properties");
        if (e.has_list)
            throw ParseError(path, line_no, "list properties on vertex element unsupported");

        for (long i = 0; i < e.count; ++i) {
            if (!next_line(line))
                throw ParseError(path, line_no, "unexpected end of file in vertex data");
            std::istringstream ls(line);
            std::vector<double> vals(e.properties.size());
            for (std::size_t c = 0; c < e.properties.size(); ++c) {
                if (!(ls >> vals[c]))
                    throw ParseError(path, line_no, "short vertex row");
            }
            const Vec3 p(vals[ix], vals[iy], vals[iz]);
            if (!finite(p)) throw ParseError(path, line_no, "non-finite coordinate");
            cloud.points.push_back(p);
        }
    }
    return cloud;
}

}  // namespace

void dedup_points(PointCloud& cloud) {
    std::unordered_set<QuantizedKey, QuantizedKeyHash> seen;
    seen.reserve(cloud.points.size());
    std::vector<Vec3> unique;
    unique.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) {
        if (seen.insert(quantize(p)).second) unique.push_back(p);
    }
    cloud.points = std::move(unique);
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format,
                      std::optional<Vec3> viewpoint) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cloud file: " + path.string());

    PointCloud cloud = format == CloudFormat::PlyAscii ? parse_ply_ascii(in, path.string())
                                                       : parse_xyz(in, path.string());
    dedup_points(cloud);
    if (cloud.empty()) throw ParseError(path.string(), 0, "empty cloud");
    cloud.viewpoint = viewpoint;
    return cloud;
}

void save_cloud_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write cloud file: " + path.string());
    out.precision(17);
    for (const Vec3& p : cloud.points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
}

SurfaceAnalyzer::SurfaceAnalyzer(const PointCloud& cloud, int k_neighbors)
    : cloud_(cloud), k_(k_neighbors) {
    if (k_ < 3) throw DomainError("k_neighbors must be at least 3");
    if (cloud_.size() < static_cast<std::size_t>(k_) + 1)
        throw DomainError("cloud smaller than k_neighbors + 1");
    tree_.build(cloud_.points);
    centroid_ = cloud_.centroid();
}

Vec3 SurfaceAnalyzer::estimate_normal(std::size_t index) const {
    const Vec3& p0 = cloud_.points[index];
    const auto nn = tree_.knn(p0, static_cast<std::size_t>(k_));

    Vec3 mean = Vec3::Zero();
    for (std::size_t idx : nn) mean += cloud_.points[idx];
    mean /= static_cast<double>(nn.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t idx : nn) {
        const Vec3 d = cloud_.points[idx] - mean;
        cov += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d evals = es.eigenvalues();  // ascending
    if (evals(1) <= 1e-12 * std::max(evals(2), 1e-300))
        throw DegenerateNeighborhood("neighborhood covariance rank < 2");

    Vec3 n = es.eigenvectors().col(0);
    // Orientation: toward the viewpoint if present, else toward the +z
    // hemisphere with +x, then +y tiebreaks.
    if (cloud_.viewpoint) {
        if (n.dot(*cloud_.viewpoint - p0) < 0.0) n = -n;
    } else {
        constexpr double tol = 1e-12;
        if (n.z() < -tol || (std::abs(n.z()) <= tol &&
                             (n.x() < -tol || (std::abs(n.x()) <= tol && n.y() < 0.0)))) {
            n = -n;
        }
    }
    return n.normalized();
}

SurfaceAnalyzer::Principal SurfaceAnalyzer::principal_curvatures(std::size_t index) const {
    if (k_ < 6) throw DomainError("principal curvatures need k_neighbors >= 6");
    const Vec3 n = estimate_normal(index);
    const Vec3& p0 = cloud_.points[index];

    // Tangent basis.
    Vec3 t1 = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    t1 = (t1 - t1.dot(n) * n).normalized();
    const Vec3 t2 = n.cross(t1);

    const auto nn = tree_.knn(p0, static_cast<std::size_t>(k_));

    // Least-squares quadric height field h(a, b) over the tangent plane:
    // h = c20 a^2 + c11 a b + c02 b^2 + c10 a + c01 b + c00.
    Eigen::MatrixXd A(nn.size(), 6);
    Eigen::VectorXd h(nn.size());
    for (std::size_t row = 0; row < nn.size(); ++row) {
        const Vec3 d = cloud_.points[nn[row]] - p0;
        const double a = d.dot(t1);
        const double b = d.dot(t2);
        A(row, 0) = a * a;
        A(row, 1) = a * b;
        A(row, 2) = b * b;
        A(row, 3) = a;
        A(row, 4) = b;
        A(row, 5) = 1.0;
        h(row) = d.dot(n);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < 6) throw FitFailure("ill-conditioned quadric system");
    const Eigen::VectorXd c = qr.solve(h);

    // Weingarten map via the first/second fundamental forms of the Monge
    // patch; solved as the generalized symmetric problem II v = kappa I v.
    const double hu = c(3), hv = c(4);
    const double denom = std::sqrt(1.0 + hu * hu + hv * hv);
    Eigen::Matrix2d II;
    II << 2.0 * c(0), c(1), c(1), 2.0 * c(2);
    II /= denom;
    Eigen::Matrix2d I;
    I << 1.0 + hu * hu, hu * hv, hu * hv, 1.0 + hv * hv;

    // Convex-positive with respect to the oriented normal.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> ges(-II, I);
    if (ges.info() != Eigen::Success) throw FitFailure("curvature eigensolve failed");
    const Eigen::Vector2d kappas = ges.eigenvalues();   // ascending
    const Eigen::Matrix2d dirs = ges.eigenvectors();

    Principal out;
    out.r.r1 = kappas(1);
    out.r.r2 = kappas(0);

    Vec3 k1 = (dirs(0, 1) * t1 + dirs(1, 1) * t2);
    k1 = (k1 - k1.dot(n) * n).normalized();
    // Deterministic sign: non-negative dot with +x, falling back to +y, +z.
    constexpr double tol = 1e-9;
    double s = k1.x();
    if (std::abs(s) <= tol) s = k1.y();
    if (std::abs(s) <= tol) s = k1.z();
    if (s < 0.0) k1 = -k1;

    out.k1_dir = k1;
    out.k2_dir = n.cross(k1);
    return out;
}

SurfaceFeature SurfaceAnalyzer::surface_feature(std::size_t index) const {
    const Vec3 n = estimate_normal(index);
    const Principal pc = principal_curvatures(index);

    Eigen::Matrix3d frame;
    frame.col(0) = pc.k1_dir;
    frame.col(1) = n.cross(pc.k1_dir);
    frame.col(2) = n;

    SurfaceFeature f;
    f.pose.p = cloud_.points[index];
    f.pose.q = UnitQuaternion::from_matrix(frame);
    f.curv = pc.r;
    return f;
}

std::vector<SurfaceFeature> SurfaceAnalyzer::sample_contact_region(const Pose& link_pose,
                                                                   double contact_radius, int n,
                                                                   Rng& rng) const {
    const auto candidates = tree_.radius(link_pose.p, contact_radius);
    if (candidates.empty()) throw NoContact("no cloud point within contact_radius of the link");

    std::vector<std::size_t> chosen;
    chosen.reserve(static_cast<std::size_t>(n));
    if (candidates.size() >= static_cast<std::size_t>(n)) {
        // Partial Fisher-Yates: n distinct picks.
        std::vector<std::size_t> pool = candidates;
        for (int i = 0; i < n; ++i) {
            const std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            chosen.push_back(pool[i]);
        }
    } else {
        for (int i = 0; i < n; ++i) chosen.push_back(candidates[rng.uniform_index(candidates.size())]);
    }

    std::vector<SurfaceFeature> features;
    features.reserve(chosen.size());
    int skipped = 0;
    for (std::size_t idx : chosen) {
        for (int attempt = 0;; ++attempt) {
            try {
                features.push_back(surface_feature(idx));
                break;
            } catch (const DomainError&) {
                if (attempt >= 20) {
                    ++skipped;
                    break;
                }
                idx = candidates[rng.uniform_index(candidates.size())];
            }
        }
    }
    if (skipped > 0)
        std::cerr << "warning: skipped " << skipped << " degenerate contact-region samples\n";
    if (features.empty()) throw NoContact("contact region yielded no valid features");
    return features;
}

std::vector<SurfaceFeature> SurfaceAnalyzer::sample_task_features(int n, Rng& rng) const {
    if (cloud_.empty()) throw EmptyInput("empty cloud");
    std::vector<SurfaceFeature> features;
    features.reserve(static_cast<std::size_t>(n));
    int skipped = 0;
    for (int i = 0; i < n; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
            const std::size_t idx = rng.uniform_index(cloud_.size());
            try {
                features.push_back(surface_feature(idx));
                ok = true;
            } catch (const DomainError&) {
            }
        }
        if (!ok) ++skipped;
    }
    if (skipped > 0)
        std::cerr << "warning: skipped " << skipped << " degenerate task feature samples\n";
    return features;
}

}  // namespace aerogrip
