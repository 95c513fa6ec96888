#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "aerogrip/cloud.hpp"
#include "aerogrip/errors.hpp"
#include "support/synthetic.hpp"

using namespace aerogrip;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("aerogrip_test_" + name);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("xyz loader") {
    const auto path = temp_file("tri.xyz");
    write_file(path, "0 0 0\n1 0 0  # corner\n0 1 0\n\n");
    const PointCloud cloud = load_cloud(path, CloudFormat::XyzText);
    CHECK(cloud.size() == 3);
    CHECK(cloud.points[1].x() == doctest::Approx(1.0));

    SUBCASE("NaN coordinate names the line") {
        write_file(path, "0 0 0\n1 nan 0\n");
        try {
            load_cloud(path, CloudFormat::XyzText);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("short row is rejected") {
        write_file(path, "0 0\n");
        CHECK_THROWS_AS(load_cloud(path, CloudFormat::XyzText), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_cloud(temp_file("nope.xyz"), CloudFormat::XyzText), IoError);
    }
    SUBCASE("empty file") {
        write_file(path, "# only a comment\n");
        CHECK_THROWS_AS(load_cloud(path, CloudFormat::XyzText), ParseError);
    }
    SUBCASE("duplicates are dropped") {
        write_file(path, "0 0 0\n0 0 0\n1 1 1\n");
        CHECK(load_cloud(path, CloudFormat::XyzText).size() == 2);
    }
    fs::remove(path);
}

TEST_CASE("ply loader") {
    const auto path = temp_file("cube.ply");
    write_file(path,
               "ply\n"
               "format ascii 1.0\n"
               "comment unit cube corners\n"
               "element vertex 8\n"
               "property float x\n"
               "property float y\n"
               "property float z\n"
               "end_header\n"
               "0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n");
    const PointCloud cloud = load_cloud(path, CloudFormat::PlyAscii);
    CHECK(cloud.size() == 8);

    SUBCASE("extra properties and elements are ignored") {
        write_file(path,
                   "ply\nformat ascii 1.0\n"
                   "element vertex 2\n"
                   "property float x\nproperty float y\nproperty float z\n"
                   "property uchar red\n"
                   "element face 1\nproperty list uchar int vertex_indices\n"
                   "end_header\n"
                   "0 0 0 255\n1 1 1 0\n"
                   "3 0 1 0\n");
        CHECK(load_cloud(path, CloudFormat::PlyAscii).size() == 2);
    }
    SUBCASE("binary format is rejected") {
        write_file(path, "ply\nformat binary_little_endian 1.0\nend_header\n");
        CHECK_THROWS_AS(load_cloud(path, CloudFormat::PlyAscii), ParseError);
    }
    SUBCASE("short vertex row names the line") {
        write_file(path,
                   "ply\nformat ascii 1.0\nelement vertex 1\n"
                   "property float x\nproperty float y\nproperty float z\nend_header\n"
                   "0 0\n");
        try {
            load_cloud(path, CloudFormat::PlyAscii);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 8);
        }
    }
    fs::remove(path);
}

TEST_CASE("plane normals") {
    const PointCloud cloud = testsupport::plane_cloud(21, 21, 0.01);
    const SurfaceAnalyzer analyzer(cloud, 8);
    const std::size_t center = cloud.size() / 2;
    const Vec3 n = analyzer.estimate_normal(center);
    CHECK(n.z() == doctest::Approx(1.0).epsilon(1e-9));

    SUBCASE("viewpoint flip reverses plane normals") {
        PointCloud below = cloud;
        below.viewpoint = Vec3(0, 0, -1);
        const SurfaceAnalyzer analyzer_below(below, 8);
        for (std::size_t i : {std::size_t{0}, center, cloud.size() - 1}) {
            CHECK(analyzer_below.estimate_normal(i).dot(analyzer.estimate_normal(i)) ==
                  doctest::Approx(-1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("sphere normals are radial") {
    const PointCloud cloud = testsupport::sphere_cloud(1.0, 3000);
    const SurfaceAnalyzer analyzer(cloud, 16);
    // The spiral's first points cluster at the top cap near (0,0,1).
    std::size_t top = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.points[i].z() > cloud.points[top].z()) top = i;
    const Vec3 n = analyzer.estimate_normal(top);
    const double angle = std::acos(std::clamp(n.dot(cloud.points[top].normalized()), -1.0, 1.0));
    CHECK(angle < 2.0 * M_PI / 180.0);
}

TEST_CASE("collinear neighborhood is degenerate") {
    const PointCloud cloud = testsupport::collinear_cloud(20);
    const SurfaceAnalyzer analyzer(cloud, 8);
    CHECK_THROWS_AS(analyzer.estimate_normal(10), DegenerateNeighborhood);
}

TEST_CASE("plane curvature is zero") {
    const PointCloud cloud = testsupport::plane_cloud(25, 25, 0.01);
    const SurfaceAnalyzer analyzer(cloud, 30);
    const auto pc = analyzer.principal_curvatures(cloud.size() / 2);
    CHECK(std::abs(pc.r.r1) < 1e-3);
    CHECK(std::abs(pc.r.r2) < 1e-3);
}

TEST_CASE("cylinder curvature recovers 1/R") {
    // Half shell of radius 0.5: r1 = 2, r2 = 0, k1 perpendicular to the axis.
    const PointCloud cloud = testsupport::cylinder_cloud(0.5, 1.0, 80, 64);
    const SurfaceAnalyzer analyzer(cloud, 30);
    int checked = 0;
    for (std::size_t i = 0; i < cloud.size(); i += 97) {
        const Vec3& p = cloud.points[i];
        if (std::abs(p.z()) > 0.35) continue;  // keep away from the rim
        if (std::atan2(std::abs(p.y()), p.x()) > 40.0 * M_PI / 180.0) continue;
        const auto pc = analyzer.principal_curvatures(i);
        CHECK(pc.r.r1 == doctest::Approx(2.0).epsilon(0.05));
        CHECK(std::abs(pc.r.r2) < 0.1);
        CHECK(std::abs(pc.k1_dir.dot(Vec3(0, 0, 1))) < 0.05);  // k1 perpendicular to axis
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("sphere curvature recovers 1/R") {
    const PointCloud cloud = testsupport::sphere_cloud(1.0, 5000);
    const SurfaceAnalyzer analyzer(cloud, 30);
    int checked = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (cloud.points[i].z() < 0.8) continue;  // top cap: +z orientation = outward
        if (++checked % 7 != 0) continue;
        const auto pc = analyzer.principal_curvatures(i);
        CHECK(pc.r.r1 == doctest::Approx(1.0).epsilon(0.05));
        CHECK(pc.r.r2 == doctest::Approx(1.0).epsilon(0.05));
    }
    CHECK(checked > 50);
}

TEST_CASE("curvature scale law") {
    // Scaling the cloud by c scales curvatures by 1/c.
    const PointCloud base = testsupport::sphere_cloud(1.0, 4000);
    PointCloud scaled = base;
    for (Vec3& p : scaled.points) p *= 2.0;
    const SurfaceAnalyzer a1(base, 30), a2(scaled, 30);
    std::size_t top = 0;
    for (std::size_t i = 0; i < base.size(); ++i)
        if (base.points[i].z() > base.points[top].z()) top = i;
    const auto r1 = a1.principal_curvatures(top).r;
    const auto r2 = a2.principal_curvatures(top).r;
    CHECK(r2.r1 == doctest::Approx(0.5 * r1.r1).epsilon(0.05));
}

TEST_CASE("surface feature frames") {
    const PointCloud plane = testsupport::plane_cloud(25, 25, 0.01);
    const SurfaceAnalyzer analyzer(plane, 30);

    SUBCASE("plane feature at the origin") {
        std::size_t center = 0;
        for (std::size_t i = 0; i < plane.size(); ++i)
            if (plane.points[i].norm() < plane.points[center].norm()) center = i;
        const SurfaceFeature f = analyzer.surface_feature(center);
        CHECK(f.pose.p.norm() < 1e-9);
        const Eigen::Matrix3d R = f.pose.q.to_matrix();
        CHECK((R.col(2) - Vec3(0, 0, 1)).norm() < 1e-6);
        CHECK(std::abs(f.curv.r1) < 1e-3);
    }

    SUBCASE("frames are right-handed orthonormal") {
        PointCloud bumpy = testsupport::sphere_cloud(1.0, 2000);
        const SurfaceAnalyzer sphere_analyzer(bumpy, 30);
        Rng rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t i = rng.uniform_index(bumpy.size());
            SurfaceFeature f;
            try {
                f = sphere_analyzer.surface_feature(i);
            } catch (const DomainError&) {
                continue;
            }
            const Eigen::Matrix3d R = f.pose.q.to_matrix();
            CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-9);
            CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(f.curv.r1 >= f.curv.r2);
            // Frame z-axis is the estimated (radial) normal.
            const Vec3 radial = bumpy.points[i].normalized();
            CHECK(std::abs(R.col(2).dot(radial)) > std::cos(5.0 * M_PI / 180.0));
        }
    }
}

TEST_CASE("sample_contact_region") {
    const PointCloud cloud = testsupport::box_cloud(0.4, 0.4, 0.2, 0.01);
    const SurfaceAnalyzer analyzer(cloud, 30);
    const Pose link(Vec3(0, 0, 0.2), UnitQuaternion::identity());

    SUBCASE("n = 500 on the box top face") {
        Rng rng(3);
        const auto features = analyzer.sample_contact_region(link, 0.05, 500, rng);
        CHECK(features.size() == 500);
        for (const auto& f : features) CHECK((f.pose.p - link.p).norm() <= 0.05 + 1e-12);
    }
    SUBCASE("no point within radius") {
        Rng rng(3);
        const Pose far(Vec3(0, 0, 5.0), UnitQuaternion::identity());
        CHECK_THROWS_AS(analyzer.sample_contact_region(far, 0.05, 10, rng), NoContact);
    }
    SUBCASE("deterministic under a fixed seed") {
        Rng rng_a(42), rng_b(42);
        const auto fa = analyzer.sample_contact_region(link, 0.05, 50, rng_a);
        const auto fb = analyzer.sample_contact_region(link, 0.05, 50, rng_b);
        REQUIRE(fa.size() == fb.size());
        for (std::size_t i = 0; i < fa.size(); ++i) {
            CHECK(fa[i].pose.p == fb[i].pose.p);
            CHECK(fa[i].curv.r1 == fb[i].curv.r1);
        }
    }
}

TEST_CASE("sample_task_features") {
    SUBCASE("single-plane cloud yields a flat feature") {
        const PointCloud plane = testsupport::plane_cloud(15, 15, 0.01);
        const SurfaceAnalyzer analyzer(plane, 12);
        Rng rng(9);
        const auto features = analyzer.sample_task_features(1, rng);
        REQUIRE(features.size() == 1);
        CHECK(std::abs(features[0].curv.r1) < 1e-3);
    }
    SUBCASE("well-conditioned cloud yields exactly n features") {
        const PointCloud cloud = testsupport::sphere_cloud(1.0, 2000);
        const SurfaceAnalyzer analyzer(cloud, 20);
        Rng rng(11);
        CHECK(analyzer.sample_task_features(50, rng).size() == 50);
    }
}

TEST_CASE("analyzer precondition: cloud must exceed k_neighbors") {
    const PointCloud tiny = testsupport::plane_cloud(3, 3, 0.01);
    CHECK_THROWS_AS(SurfaceAnalyzer(tiny, 30), DomainError);
}
