#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "aerogrip/io.hpp"
#include "support/synthetic.hpp"

using namespace aerogrip;
namespace fs = std::filesystem;

namespace {

const char* kCli = AEROGRIP_CLI_PATH;

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("aerogrip_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    fs::path operator/(const std::string& name) const { return dir / name; }
};

int run(const std::string& args) {
    const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

void write_demo_inputs(const Workspace& ws) {
    const PointCloud cloud = testsupport::box_cloud(0.4, 0.4, 0.2, 0.015);
    save_cloud_xyz(ws / "demo.xyz", cloud);
    save_links(ws / "demo.links", {testsupport::box_top_demo(0.2)});
    std::ofstream cfg(ws / "run.cfg");
    cfg << "n-o=200\nn-t=30\nn-c=200\nk-neighbors=20\n"
        << "n-i=150\nn-j=5\nn-q=300\nsa-steps=600\nseed=7\n";
}

}  // namespace

TEST_CASE("version subcommand") { CHECK(run("version") == 0); }

TEST_CASE("usage errors exit with 2") {
    CHECK(run("") == 2);
    CHECK(run("learn") == 2);                      // missing required options
    CHECK(run("unknown-subcommand") == 2);
}

TEST_CASE("learn/infer round trip") {
    Workspace ws;
    write_demo_inputs(ws);
    const std::string common = " --config " + (ws / "run.cfg").string();

    REQUIRE(run("learn --cloud " + (ws / "demo.xyz").string() + " --links " +
                (ws / "demo.links").string() + " --out " + (ws / "model.json").string() +
                common) == 0);
    CHECK(fs::exists(ws / "model.json"));

    SUBCASE("rerun writes a byte-identical model") {
        REQUIRE(run("learn --cloud " + (ws / "demo.xyz").string() + " --links " +
                    (ws / "demo.links").string() + " --out " + (ws / "model2.json").string() +
                    common) == 0);
        CHECK(slurp(ws / "model.json") == slurp(ws / "model2.json"));
    }

    SUBCASE("infer on the training cloud") {
        REQUIRE(run("infer --model " + (ws / "model.json").string() + " --cloud " +
                    (ws / "demo.xyz").string() + " --out " + (ws / "cands.json").string() +
                    " -k 5" + common) == 0);
        const auto candidates = load_candidates(ws / "cands.json");
        REQUIRE(!candidates.empty());
        CHECK(candidates.size() <= 5);
        CHECK(candidates[0].feasible);
        // Self-transfer lands near the demonstrated contact.
        const Vec3 demo(0, 0, 0.2);
        CHECK((candidates[0].pairs[0].link.p - demo).norm() < 0.05);

        SUBCASE("identical seeds give identical candidate files") {
            REQUIRE(run("infer --model " + (ws / "model.json").string() + " --cloud " +
                        (ws / "demo.xyz").string() + " --out " + (ws / "cands2.json").string() +
                        " -k 5" + common) == 0);
            CHECK(slurp(ws / "cands.json") == slurp(ws / "cands2.json"));
        }

        SUBCASE("ablation changes the run") {
            REQUIRE(run("infer --model " + (ws / "model.json").string() + " --cloud " +
                        (ws / "demo.xyz").string() + " --out " + (ws / "ablated.json").string() +
                        " -k 5 --ablate-task" + common) == 0);
            CHECK(slurp(ws / "cands.json") != slurp(ws / "ablated.json"));
        }

        SUBCASE("flag overrides config file") {
            // Different seed on the command line must change the output.
            REQUIRE(run("infer --model " + (ws / "model.json").string() + " --cloud " +
                        (ws / "demo.xyz").string() + " --out " + (ws / "seeded.json").string() +
                        " -k 5 --seed 99" + common) == 0);
            CHECK(slurp(ws / "cands.json") != slurp(ws / "seeded.json"));
        }
    }

    SUBCASE("diagnostics file") {
        REQUIRE(run("infer --model " + (ws / "model.json").string() + " --cloud " +
                    (ws / "demo.xyz").string() + " --out " + (ws / "cands.json").string() +
                    " -k 2 --diagnostics " + (ws / "diag.txt").string() + common) == 0);
        std::ifstream diag(ws / "diag.txt");
        std::string line;
        std::getline(diag, line);  // header
        int rows = 0;
        double x, y, z, logq;
        while (diag >> x >> y >> z >> logq) ++rows;
        CHECK(rows >= 150);  // one row per query kernel
    }

    SUBCASE("eval-density grid") {
        REQUIRE(run("eval-density --model " + (ws / "model.json").string() + " --cloud " +
                    (ws / "demo.xyz").string() + " --grid -0.2:0.2:10,-0.2:0.2:10,0.2:0.2:1 " +
                    " --out " + (ws / "grid.txt").string() + common) == 0);
        std::ifstream grid(ws / "grid.txt");
        std::string line;
        std::getline(grid, line);
        int rows = 0;
        double x, y, z, logq;
        double best = -1e300, bx = 0, by = 0;
        while (grid >> x >> y >> z >> logq) {
            ++rows;
            CHECK(std::isfinite(logq));
            if (logq > best) {
                best = logq;
                bx = x;
                by = y;
            }
        }
        CHECK(rows == 100);
        // Unimodal self-transfer: the hottest cell sits at the plate middle,
        // where the optimizer's top candidate lands too.
        CHECK(std::abs(bx) < 0.1);
        CHECK(std::abs(by) < 0.1);

        SUBCASE("grid outside the cloud stays finite") {
            REQUIRE(run("eval-density --model " + (ws / "model.json").string() + " --cloud " +
                        (ws / "demo.xyz").string() + " --grid 5:6:3,5:6:3,5:5:1 " + " --out " +
                        (ws / "far.txt").string() + common) == 0);
            std::ifstream far(ws / "far.txt");
            std::getline(far, line);
            while (far >> x >> y >> z >> logq) CHECK(std::isfinite(logq));
        }

        SUBCASE("malformed grid spec is a usage error") {
            CHECK(run("eval-density --model " + (ws / "model.json").string() + " --cloud " +
                      (ws / "demo.xyz").string() + " --grid nonsense --out " +
                      (ws / "bad.txt").string() + common) == 2);
        }
    }

    SUBCASE("model schema violations exit with 4") {
        // Corrupt JSON.
        std::ofstream bad(ws / "corrupt.json");
        bad << "{ nope";
        bad.close();
        CHECK(run("infer --model " + (ws / "corrupt.json").string() + " --cloud " +
                  (ws / "demo.xyz").string() + " --out " + (ws / "x.json").string() + common) == 4);

        // Wrong schema version.
        std::string text = slurp(ws / "model.json");
        const auto pos = text.find("\"schema_version\": 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 19, "\"schema_version\": 9");
        std::ofstream ver(ws / "wrong_version.json");
        ver << text;
        ver.close();
        CHECK(run("infer --model " + (ws / "wrong_version.json").string() + " --cloud " +
                  (ws / "demo.xyz").string() + " --out " + (ws / "x.json").string() + common) == 4);
    }
}

TEST_CASE("input parse failures exit with 3") {
    Workspace ws;
    write_demo_inputs(ws);
    const std::string common = " --config " + (ws / "run.cfg").string();

    SUBCASE("missing cloud") {
        CHECK(run("learn --cloud " + (ws / "missing.xyz").string() + " --links " +
                  (ws / "demo.links").string() + " --out " + (ws / "m.json").string() + common) ==
              3);
    }
    SUBCASE("bad cloud line") {
        std::ofstream bad(ws / "bad.xyz");
        bad << "0 0 0\n1 nan 0\n";
        bad.close();
        CHECK(run("learn --cloud " + (ws / "bad.xyz").string() + " --links " +
                  (ws / "demo.links").string() + " --out " + (ws / "m.json").string() + common) ==
              3);
    }
    SUBCASE("links file with zero poses is a usage error") {
        std::ofstream empty(ws / "empty.links");
        empty << "# no poses\n";
        empty.close();
        CHECK(run("learn --cloud " + (ws / "demo.xyz").string() + " --links " +
                  (ws / "empty.links").string() + " --out " + (ws / "m.json").string() + common) ==
              2);
    }
}

TEST_CASE("links file round trip") {
    Workspace ws;
    const auto demo = testsupport::triangle_demo(0.5, 0.06, 0.08);
    save_links(ws / "tri.links", demo);
    const auto loaded = load_links(ws / "tri.links");
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK((loaded[i].drone.p - demo[i].drone.p).norm() < 1e-15);
        CHECK((loaded[i].link.p - demo[i].link.p).norm() < 1e-15);
    }
}
