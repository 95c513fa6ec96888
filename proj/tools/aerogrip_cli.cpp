// aerogrip command-line tool: learn contact models from a single
// demonstration, transfer them to novel point clouds, and export density
// diagnostics.
//
// Exit codes: 0 success, 2 usage, 3 input parse failure, 4 model file
// mismatch, 5 no feasible candidate.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aerogrip/defaults.hpp"
#include "aerogrip/errors.hpp"
#include "aerogrip/io.hpp"
#include "aerogrip/models.hpp"
#include "aerogrip/transfer.hpp"
#include "aerogrip/version.hpp"

namespace {

using namespace aerogrip;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitModelMismatch = 4;
constexpr int kExitNoFeasible = 5;

/// Every tunable in one place; each field has a flag and a config-file key
/// (key=value text, flags override the file).
struct RunConfig {
    // Sample counts
    int n_o = defaults::kObjectFeatures;
    int n_t = defaults::kTaskFeatures;
    int n_c = defaults::kContactKernels;
    int n_i = defaults::kQueryFeatures;
    int n_j = defaults::kQueryTaskFeatures;
    int n_q = defaults::kQueryKernels;

    // Bandwidths
    Bandwidths surface = defaults::kSurfaceBandwidths;
    Bandwidths task = defaults::kTaskBandwidths;
    Bandwidths contact = defaults::kContactBandwidths;
    double query_sigma_p = defaults::kSurfaceBandwidths.sigma_p;
    double query_sigma_q = defaults::kSurfaceBandwidths.sigma_q;

    // Configuration model
    double alpha = defaults::kAlpha;
    double config_sigma_p = defaults::kConfigSigmaP;
    double config_sigma_q = defaults::kConfigSigmaQ;
    double rot_weight = defaults::kRotWeight;

    // Geometry
    double contact_radius = defaults::kContactRadius;
    int k_neighbors = defaults::kNeighbors;
    double region_radius = defaults::kRegionRadius;
    double min_separation = defaults::kMinSeparation;
    double max_tilt_deg = defaults::kMaxTiltDeg;
    std::vector<double> viewpoint;  // empty or 3 values

    // Annealing schedule
    SaSchedule sa;

    std::uint64_t seed = 0;
    bool ablate_task = false;
    int threads = 1;
};

void add_config_options(CLI::App& app, RunConfig& cfg) {
    app.set_config("--config", "", "key=value configuration file (flags override it)");

    app.add_option("--n-o", cfg.n_o, "contact-region features N_O");
    app.add_option("--n-t", cfg.n_t, "task features N_T");
    app.add_option("--n-c", cfg.n_c, "retained contact kernels N_C");
    app.add_option("--n-i", cfg.n_i, "query contact-surface samples N_i");
    app.add_option("--n-j", cfg.n_j, "query task samples N_j");
    app.add_option("--n-q", cfg.n_q, "query-density kernels N_Q");

    app.add_option("--sigma-p", cfg.surface.sigma_p, "surface position bandwidth (m)");
    app.add_option("--sigma-q", cfg.surface.sigma_q, "surface rotation concentration");
    app.add_option("--sigma-r", cfg.surface.sigma_r, "surface curvature bandwidth (1/m)");
    app.add_option("--task-sigma-p", cfg.task.sigma_p, "task position bandwidth (m)");
    app.add_option("--task-sigma-q", cfg.task.sigma_q, "task rotation concentration");
    app.add_option("--task-sigma-r", cfg.task.sigma_r, "task curvature bandwidth (1/m)");
    app.add_option("--contact-sigma-p", cfg.contact.sigma_p, "contact position bandwidth (m)");
    app.add_option("--contact-sigma-q", cfg.contact.sigma_q, "contact rotation concentration");
    app.add_option("--contact-sigma-r", cfg.contact.sigma_r, "contact curvature bandwidth (1/m)");
    app.add_option("--query-sigma-p", cfg.query_sigma_p, "query-density position bandwidth (m)");
    app.add_option("--query-sigma-q", cfg.query_sigma_q, "query-density rotation concentration");

    app.add_option("--alpha", cfg.alpha, "configuration gate exponent (1/m^2)");
    app.add_option("--config-sigma-p", cfg.config_sigma_p, "configuration link bandwidth (m)");
    app.add_option("--config-sigma-q", cfg.config_sigma_q, "configuration rotation concentration");
    app.add_option("--rot-weight", cfg.rot_weight, "meters per radian in pose distances");

    app.add_option("--contact-radius", cfg.contact_radius, "contact patch radius (m)");
    app.add_option("--k-neighbors", cfg.k_neighbors, "k-NN neighborhood size");
    app.add_option("--region-radius", cfg.region_radius, "mapped contact region radius (m)");
    app.add_option("--min-separation", cfg.min_separation, "candidate dedup distance");
    app.add_option("--max-tilt-deg", cfg.max_tilt_deg, "feasibility tilt limit (degrees)");
    app.add_option("--viewpoint", cfg.viewpoint, "sensor origin x y z for normal orientation")
        ->expected(3);

    app.add_option("--sa-t0", cfg.sa.t0, "annealing start temperature");
    app.add_option("--sa-cooling", cfg.sa.cooling, "annealing geometric cooling factor");
    app.add_option("--sa-steps", cfg.sa.steps, "annealing steps per chain");
    app.add_option("--sa-reanchor", cfg.sa.reanchor_prob, "re-anchoring move probability");

    app.add_option("--seed", cfg.seed, "random seed");
    app.add_flag("--ablate-task", cfg.ablate_task, "baseline mode: drop the task model");
    app.add_option("--threads", cfg.threads, "parallelism bound");
}

int check_config(const RunConfig& cfg) {
    const bool counts_ok = cfg.n_o > 0 && cfg.n_t > 0 && cfg.n_c > 0 && cfg.n_i > 0 &&
                           cfg.n_j > 0 && cfg.n_q > 0;
    const bool sa_ok = cfg.sa.cooling > 0.0 && cfg.sa.cooling < 1.0 && cfg.sa.steps > 0;
    if (!counts_ok || !sa_ok) {
        std::cerr << "error: counts must be positive and the cooling factor in (0,1)\n";
        return kExitUsage;
    }
    return kExitOk;
}

std::optional<Vec3> viewpoint_of(const RunConfig& cfg) {
    if (cfg.viewpoint.size() == 3)
        return Vec3(cfg.viewpoint[0], cfg.viewpoint[1], cfg.viewpoint[2]);
    return std::nullopt;
}

CloudFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".ply" ? CloudFormat::PlyAscii : CloudFormat::XyzText;
}

TransferParams transfer_params(const RunConfig& cfg) {
    TransferParams params;
    params.n_i = cfg.n_i;
    params.n_j = cfg.n_j;
    params.n_q = cfg.n_q;
    params.sa = cfg.sa;
    params.seed = cfg.seed;
    params.ablate_task = cfg.ablate_task;
    params.region_radius = cfg.region_radius;
    params.query_sigma_p = cfg.query_sigma_p;
    params.query_sigma_q = cfg.query_sigma_q;
    params.threads = cfg.threads;
    return params;
}

int cmd_learn(const RunConfig& cfg, const std::string& cloud_path, const std::string& links_path,
              const std::string& out_path, const std::string& label) {
    if (int rc = check_config(cfg); rc != kExitOk) return rc;

    PointCloud cloud;
    std::vector<PosePair> links;
    try {
        cloud = load_cloud(cloud_path, format_for(cloud_path), viewpoint_of(cfg));
        links = load_links(links_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    if (links.empty()) {
        std::cerr << "error: links file provides no (b, L) pose pairs\n";
        return kExitUsage;
    }

    try {
        SurfaceAnalyzer analyzer(cloud, cfg.k_neighbors);
        Rng rng(cfg.seed);

        // N_O features total, split across the demonstrated contact patches.
        std::vector<SurfaceFeature> contact_features;
        const int per_link = cfg.n_o / static_cast<int>(links.size());
        for (std::size_t n = 0; n < links.size(); ++n) {
            int want = per_link;
            if (n == 0) want += cfg.n_o - per_link * static_cast<int>(links.size());
            auto feats =
                analyzer.sample_contact_region(links[n].link, cfg.contact_radius, want, rng);
            contact_features.insert(contact_features.end(), feats.begin(), feats.end());
        }

        ModelBundle bundle;
        bundle.label = label;
        bundle.object = learn_object_model(contact_features, cfg.surface);
        const auto task_features = analyzer.sample_task_features(cfg.n_t, rng);
        bundle.task = learn_task_model(task_features, cfg.task);

        DemonstrationRecord record{std::move(cloud), links, label};
        bundle.contact =
            learn_contact_model(record, bundle.object, bundle.task, cfg.n_c, cfg.contact, cfg.seed);
        bundle.configuration = learn_configuration_model(
            {record}, cfg.alpha, cfg.config_sigma_p, cfg.config_sigma_q, cfg.rot_weight);

        save_model(out_path, bundle);

        double w_min = 1.0, w_max = 0.0;
        for (const auto& k : bundle.task.density.kernels) {
            w_min = std::min(w_min, k.weight);
            w_max = std::max(w_max, k.weight);
        }
        std::cout << "learned model '" << label << "'\n"
                  << "  object kernels:        " << bundle.object.density.kernels.size() << "\n"
                  << "  task kernels:          " << bundle.task.density.kernels.size()
                  << " (weights " << w_min << " .. " << w_max << ")\n"
                  << "  contact kernels/link:  " << bundle.contact.links[0].size() << " x "
                  << bundle.contact.links.size() << " links\n"
                  << "  task offsets:          " << bundle.contact.task_offsets.size() << "\n"
                  << "  configuration kernels: " << bundle.configuration.kernels.size() << "\n"
                  << "  written to " << out_path << "\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
}

int cmd_infer(const RunConfig& cfg, const std::string& model_path, const std::string& cloud_path,
              const std::string& out_path, int top_k, const std::string& diagnostics_path) {
    if (int rc = check_config(cfg); rc != kExitOk) return rc;
    if (top_k < 1) {
        std::cerr << "error: -k must be >= 1\n";
        return kExitUsage;
    }

    ModelBundle bundle;
    try {
        bundle = load_model(model_path);
    } catch (const VersionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelMismatch;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelMismatch;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }

    PointCloud cloud;
    try {
        cloud = load_cloud(cloud_path, format_for(cloud_path), viewpoint_of(cfg));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }

    try {
        SurfaceAnalyzer analyzer(cloud, cfg.k_neighbors);
        const TransferParams params = transfer_params(cfg);
        const QueryDensity queries =
            build_query_density(bundle.contact, bundle.task, bundle.object, analyzer, params);

        auto raw = optimize(queries, bundle.configuration, params, cloud, top_k,
                            cfg.min_separation);

        const double max_tilt = cfg.max_tilt_deg * M_PI / 180.0;
        std::vector<CandidateGrasp> feasible, infeasible;
        for (const CandidateGrasp& c : raw) {
            CandidateGrasp snapped = snap_to_surface(c, analyzer);
            snapped.log_j = likelihood(snapped, queries, bundle.configuration);
            snapped = feasibility_filter(snapped, analyzer, max_tilt, cfg.contact_radius);
            (snapped.feasible ? feasible : infeasible).push_back(snapped);
        }

        auto selected = select_top_k(feasible, top_k, cfg.min_separation, cfg.rot_weight);
        std::vector<CandidateGrasp> output = selected;
        for (const CandidateGrasp& c : infeasible) {
            if (static_cast<int>(output.size()) >= top_k) break;
            output.push_back(c);
        }

        save_candidates(out_path, output);

        if (!diagnostics_path.empty()) {
            std::vector<DensitySample> samples;
            for (std::size_t link = 0; link < queries.link_count(); ++link) {
                for (const QueryKernel& k : queries.links[link]) {
                    samples.push_back(
                        {k.p, queries.log_position_marginal(static_cast<int>(link), k.p)});
                }
            }
            save_density_samples(diagnostics_path, samples);
        }

        std::cout << "rank  log_j            feasible\n";
        for (std::size_t i = 0; i < output.size(); ++i) {
            std::cout << (i + 1) << "     " << output[i].log_j << "   "
                      << (output[i].feasible ? "yes" : "no") << "\n";
        }
        std::cout << "wrote " << output.size() << " candidates to " << out_path << "\n";

        if (selected.empty()) {
            std::cerr << "error: no feasible candidate\n";
            return kExitNoFeasible;
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
}

struct GridSpec {
    double x0, x1;
    int nx;
    double y0, y1;
    int ny;
    double z0, z1;
    int nz;
};

bool parse_grid(const std::string& text, GridSpec& grid) {
    // "x0:x1:nx,y0:y1:ny,z0:z1:nz"
    std::array<double*, 3> starts{&grid.x0, &grid.y0, &grid.z0};
    std::array<double*, 3> stops{&grid.x1, &grid.y1, &grid.z1};
    std::array<int*, 3> counts{&grid.nx, &grid.ny, &grid.nz};

    std::istringstream ss(text);
    std::string axis;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, axis, ',')) return false;
        char c1, c2;
        std::istringstream as(axis);
        if (!(as >> *starts[i] >> c1 >> *stops[i] >> c2 >> *counts[i]) || c1 != ':' || c2 != ':')
            return false;
        if (*counts[i] < 1) return false;
    }
    return true;
}

int cmd_eval_density(const RunConfig& cfg, const std::string& model_path,
                     const std::string& cloud_path, const std::string& grid_text,
                     const std::string& out_path, int link) {
    if (int rc = check_config(cfg); rc != kExitOk) return rc;

    GridSpec grid{};
    if (!parse_grid(grid_text, grid)) {
        std::cerr << "error: grid spec must be x0:x1:nx,y0:y1:ny,z0:z1:nz\n";
        return kExitUsage;
    }

    ModelBundle bundle;
    try {
        bundle = load_model(model_path);
    } catch (const VersionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelMismatch;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelMismatch;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }

    try {
        PointCloud cloud = load_cloud(cloud_path, format_for(cloud_path), viewpoint_of(cfg));
        SurfaceAnalyzer analyzer(cloud, cfg.k_neighbors);
        const QueryDensity queries = build_query_density(bundle.contact, bundle.task,
                                                         bundle.object, analyzer,
                                                         transfer_params(cfg));
        if (link < 0 || static_cast<std::size_t>(link) >= queries.link_count()) {
            std::cerr << "error: --link out of range\n";
            return kExitUsage;
        }

        std::vector<DensitySample> samples;
        samples.reserve(static_cast<std::size_t>(grid.nx) * grid.ny * grid.nz);
        auto coord = [](double a, double b, int n, int i) {
            return n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1);
        };
        for (int ix = 0; ix < grid.nx; ++ix) {
            for (int iy = 0; iy < grid.ny; ++iy) {
                for (int iz = 0; iz < grid.nz; ++iz) {
                    const Vec3 p(coord(grid.x0, grid.x1, grid.nx, ix),
                                 coord(grid.y0, grid.y1, grid.ny, iy),
                                 coord(grid.z0, grid.z1, grid.nz, iz));
                    samples.push_back({p, queries.log_position_marginal(link, p)});
                }
            }
        }
        save_density_samples(out_path, samples);
        std::cout << "wrote " << samples.size() << " grid samples to " << out_path << "\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-shot contact model learning and transfer for cable-suspended aerial grippers"};
    app.require_subcommand(1);

    RunConfig cfg;

    auto* learn = app.add_subcommand("learn", "learn a model bundle from one demonstration");
    std::string cloud_path, links_path, model_path, out_path, label = "demo";
    learn->add_option("--cloud", cloud_path, "demonstration point cloud (.ply or .xyz)")
        ->required();
    learn->add_option("--links", links_path, "demonstrated drone/link poses")->required();
    learn->add_option("--out", out_path, "output model bundle path")->required();
    learn->add_option("--label", label, "model label");
    add_config_options(*learn, cfg);

    auto* infer = app.add_subcommand("infer", "transfer contacts to a novel cloud");
    int top_k = 5;
    int link = 0;
    std::string diagnostics_path;
    infer->add_option("--model", model_path, "model bundle path")->required();
    infer->add_option("--cloud", cloud_path, "query point cloud")->required();
    infer->add_option("--out", out_path, "output candidates path")->required();
    infer->add_option("-k,--top-k", top_k, "number of solutions");
    infer->add_option("--diagnostics", diagnostics_path, "write (x y z log_q) samples here");
    add_config_options(*infer, cfg);

    auto* eval = app.add_subcommand("eval-density", "sample the query density on a grid");
    std::string grid_text;
    eval->add_option("--model", model_path, "model bundle path")->required();
    eval->add_option("--cloud", cloud_path, "query point cloud")->required();
    eval->add_option("--grid", grid_text, "x0:x1:nx,y0:y1:ny,z0:z1:nz")->required();
    eval->add_option("--out", out_path, "output samples path")->required();
    eval->add_option("--link", link, "link index");
    add_config_options(*eval, cfg);

    auto* version = app.add_subcommand("version", "print version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    if (version->parsed()) {
        std::cout << "aerogrip " << aerogrip::kVersion << "\n";
        return kExitOk;
    }
    if (learn->parsed()) return cmd_learn(cfg, cloud_path, links_path, out_path, label);
    if (infer->parsed())
        return cmd_infer(cfg, model_path, cloud_path, out_path, top_k, diagnostics_path);
    if (eval->parsed())
        return cmd_eval_density(cfg, model_path, cloud_path, grid_text, out_path, link);
    return kExitUsage;
}
