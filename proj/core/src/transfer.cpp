#include "aerogrip/transfer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iostream>
#include <thread>

#include "aerogrip/errors.hpp"

namespace aerogrip {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gaussian2(const Curvature2& a, const Curvature2& b, double sigma) {
    const double x[2] = {a.r1, a.r2};
    const double mu[2] = {b.r1, b.r2};
    return log_gaussian_eval(x, mu, sigma, 2);
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, threads);
    if (threads == 1 || n < 2 * threads) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

double QueryDensity::log_eval(int link, const Pose& pose) const {
    const auto& kernels = links.at(link);
    std::vector<double> terms;
    terms.reserve(kernels.size());
    for (const QueryKernel& k : kernels) {
        if (k.weight <= 0.0) continue;
        terms.push_back(k.log_weight + log_gaussian_eval(pose.p.data(), k.p.data(), sigma_p, 3) +
                        log_vmf_antipodal_eval(pose.q, k.q, sigma_q));
    }
    return logsumexp(terms);
}

double QueryDensity::eval(int link, const Pose& pose) const { return std::exp(log_eval(link, pose)); }

double QueryDensity::log_position_marginal(int link, const Vec3& p) const {
    const auto& kernels = links.at(link);
    std::vector<double> terms;
    terms.reserve(kernels.size());
    for (const QueryKernel& k : kernels) {
        if (k.weight <= 0.0) continue;
        terms.push_back(k.log_weight + log_gaussian_eval(p.data(), k.p.data(), sigma_p, 3));
    }
    return logsumexp(terms);
}

Pose QueryDensity::sample(int link, Rng& rng) const {
    const auto& kernels = links.at(link);
    std::vector<double> w(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) w[i] = kernels[i].weight;
    const QueryKernel& k = kernels[rng.categorical(w)];
    Pose pose;
    pose.p = k.p + rng.gaussian3(sigma_p);
    pose.q = rng.vmf(k.q, sigma_q);
    return pose;
}

Pose QueryDensity::sample_kernel(int link, Rng& rng) const {
    const auto& kernels = links.at(link);
    std::vector<double> w(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) w[i] = kernels[i].weight;
    const QueryKernel& k = kernels[rng.categorical(w)];
    return {k.p, k.q};
}

namespace {

// One accepted query-cloud task feature with its mapped contact regions.
struct TaskAnchor {
    SurfaceFeature feature;
    double log_t_marginal;             // log T(r) at this feature
    std::vector<Vec3> centers;         // offset-mapped candidate region centers
    std::vector<double> center_weight; // curvature-match selection weight
    KdTree3 center_tree;
};

// Pre-sampled query contact-surface feature with cached weight factors.
struct FeaturePoolEntry {
    SurfaceFeature feature;
    double log_static;  // curvature factors + task support, fixed per feature
};

std::vector<TaskAnchor> sample_task_anchors(const ContactModel& contact, const TaskModel& task,
                                            const SurfaceAnalyzer& analyzer,
                                            const TransferParams& params, Rng& rng) {
    const auto& cloud = analyzer.cloud();
    const auto& task_kernels = task.density.kernels;

    // Acceptance cap: the largest curvature-marginal value attained at the
    // model's own kernels, so acceptance is scale-free.
    double log_cap = kNegInf;
    for (const FeatureKernel& k : task_kernels)
        log_cap = std::max(log_cap, task.density.log_curvature_marginal(k.mean.curv));

    std::vector<TaskAnchor> anchors;
    const int max_attempts = 200 * std::max(1, params.n_j);
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(anchors.size()) < params.n_j;
         ++attempt) {
        const std::size_t idx = rng.uniform_index(cloud.size());
        SurfaceFeature f;
        try {
            f = analyzer.surface_feature(idx);
        } catch (const DomainError&) {
            continue;
        }
        const double log_t = task.density.log_curvature_marginal(f.curv);
        if (std::log(1.0 - rng.uniform() + 1e-300) > log_t - log_cap) continue;

        TaskAnchor anchor;
        anchor.feature = f;
        anchor.log_t_marginal = log_t;
        anchors.push_back(std::move(anchor));
    }
    if (anchors.empty())
        throw AllZeroWeights(
            "task acceptance sampling found no matching features on the query cloud");
    if (static_cast<int>(anchors.size()) < params.n_j)
        std::cerr << "warning: accepted only " << anchors.size() << " of " << params.n_j
                  << " task features\n";

    // Map every stored contact-to-task offset back through its inverse to a
    // candidate contact-region center; selection weights follow the curvature
    // match between the anchor and the offset's source task kernel.
    for (TaskAnchor& anchor : anchors) {
        anchor.centers.reserve(contact.task_offsets.size());
        anchor.center_weight.reserve(contact.task_offsets.size());
        for (const TaskOffset& off : contact.task_offsets) {
            const Pose center = compose(anchor.feature.pose, inverse(off.u));
            anchor.centers.push_back(center.p);
            const Curvature2& src = task_kernels[off.task_kernel].mean.curv;
            anchor.center_weight.push_back(
                std::exp(log_gaussian2(anchor.feature.curv, src, task.density.bw.sigma_r)));
        }
        double total = 0.0;
        for (double w : anchor.center_weight) total += w;
        if (total <= 0.0)
            std::fill(anchor.center_weight.begin(), anchor.center_weight.end(), 1.0);
        anchor.center_tree.build(anchor.centers);
    }
    return anchors;
}

// Task-support factor for a feature at position p: the weighted count of
// anchors with a mapped region within region_radius.
double log_task_support(const std::vector<TaskAnchor>& anchors, const Vec3& p, double radius) {
    std::vector<double> votes;
    for (const TaskAnchor& anchor : anchors) {
        if (anchor.center_tree.any_within(p, radius)) votes.push_back(anchor.log_t_marginal);
    }
    return logsumexp(votes);
}

std::vector<FeaturePoolEntry> build_feature_pool(const ContactModel& contact,
                                                 const ObjectModel& object,
                                                 const std::vector<TaskAnchor>& anchors,
                                                 const SurfaceAnalyzer& analyzer, int link,
                                                 const TransferParams& params, Rng& rng) {
    const auto& cloud = analyzer.cloud();
    std::vector<FeaturePoolEntry> pool;
    pool.reserve(static_cast<std::size_t>(params.n_i));

    const int max_attempts = params.max_attempts * std::max(1, params.n_i);
    for (int attempt = 0;
         attempt < max_attempts && static_cast<int>(pool.size()) < params.n_i; ++attempt) {
        std::size_t idx;
        if (params.ablate_task) {
            idx = rng.uniform_index(cloud.size());
        } else {
            const TaskAnchor& anchor = anchors[rng.uniform_index(anchors.size())];
            const std::size_t off = rng.categorical(anchor.center_weight);
            const auto nearby = analyzer.tree().radius(anchor.centers[off], params.region_radius);
            if (nearby.empty()) continue;
            idx = nearby[rng.uniform_index(nearby.size())];
        }

        FeaturePoolEntry entry;
        try {
            entry.feature = analyzer.surface_feature(idx);
        } catch (const DomainError&) {
            continue;
        }

        entry.log_static = contact.log_curvature_marginal(link, entry.feature.curv) +
                           object.density.log_curvature_marginal(entry.feature.curv);
        if (!params.ablate_task)
            entry.log_static +=
                log_task_support(anchors, entry.feature.pose.p, params.region_radius);
        pool.push_back(std::move(entry));
    }

    if (pool.empty())
        throw AllZeroWeights("no query-cloud features found near any mapped contact region");
    return pool;
}

}  // namespace

QueryDensity build_query_density(const ContactModel& contact, const TaskModel& task,
                                 const ObjectModel& object, const SurfaceAnalyzer& analyzer,
                                 const TransferParams& params) {
    if (analyzer.cloud().empty()) throw NoFeatures("empty query cloud");

    QueryDensity q;
    q.sigma_p = params.query_sigma_p;
    q.sigma_q = params.query_sigma_q;
    q.links.resize(contact.link_count());

    for (std::size_t link = 0; link < contact.link_count(); ++link) {
        Rng setup_rng(mix_seed(params.seed, link, 0x5e7));

        std::vector<TaskAnchor> anchors;
        if (!params.ablate_task)
            anchors = sample_task_anchors(contact, task, analyzer, params, setup_rng);
        const auto pool = build_feature_pool(contact, object, anchors, analyzer,
                                             static_cast<int>(link), params, setup_rng);

        auto& kernels = q.links[link];
        kernels.assign(static_cast<std::size_t>(params.n_q), QueryKernel{});
        std::vector<char> valid(static_cast<std::size_t>(params.n_q), 0);

        parallel_for(params.n_q, params.threads, [&](int k) {
            Rng rng(mix_seed(params.seed, link, static_cast<std::uint64_t>(k) + 1));
            const FeaturePoolEntry& entry = pool[rng.uniform_index(pool.size())];
            const Pose u = contact.sample_offset(static_cast<int>(link), rng);
            const Pose L = compose(entry.feature.pose, u);

            QueryKernel kernel;
            kernel.p = L.p;
            kernel.q = L.q;
            kernel.log_weight =
                entry.log_static +
                contact.log_conditional_pose(static_cast<int>(link), u, entry.feature.curv);
            kernels[k] = kernel;
            valid[k] = 1;
        });

        std::vector<QueryKernel> kept;
        kept.reserve(kernels.size());
        for (std::size_t k = 0; k < kernels.size(); ++k)
            if (valid[k]) kept.push_back(kernels[k]);
        if (kept.empty()) throw AllZeroWeights("query density has no kernels");

        std::vector<double> logs(kept.size());
        for (std::size_t k = 0; k < kept.size(); ++k) logs[k] = kept[k].log_weight;
        const double lse = logsumexp(logs);
        if (!std::isfinite(lse))
            throw AllZeroWeights("all query-density weights are zero: model/payload mismatch");
        for (QueryKernel& kernel : kept) {
            kernel.log_weight -= lse;
            kernel.weight = std::exp(kernel.log_weight);
        }
        q.links[link] = std::move(kept);
    }
    return q;
}

double likelihood(const CandidateGrasp& candidate, const QueryDensity& queries,
                  const ConfigurationModel& config) {
    if (candidate.pairs.size() != queries.link_count())
        throw DimensionMismatch("candidate pair count does not match query link count");
    double log_j = 0.0;
    for (std::size_t n = 0; n < candidate.pairs.size(); ++n) {
        log_j += config.log_eval_pair(candidate.pairs[n].drone, candidate.pairs[n].link);
        log_j += queries.log_eval(static_cast<int>(n), candidate.pairs[n].link);
    }
    return log_j;
}

namespace {

// Relative transform taking a link pose to its drone pose, as demonstrated.
std::vector<Pose> demo_link_to_drone(const ConfigurationModel& config, std::size_t link_count) {
    std::vector<Pose> rel(link_count);
    for (std::size_t n = 0; n < link_count; ++n) {
        const ConfigurationKernel& k = config.kernels[n % config.kernels.size()];
        rel[n] = relative_pose(k.link, k.drone);
    }
    return rel;
}

struct SaState {
    std::vector<Pose> links;
    std::vector<double> per_link;  // cached log H + log Q per link
    double log_j = kNegInf;
};

}  // namespace

std::vector<CandidateGrasp> optimize(const QueryDensity& queries, const ConfigurationModel& config,
                                     const TransferParams& params, const PointCloud& cloud, int k,
                                     double min_separation,
                                     std::vector<std::vector<double>>* best_traces) {
    if (k < 1) throw DomainError("solution count must be >= 1");
    const std::size_t link_count = queries.link_count();
    const auto rel = demo_link_to_drone(config, link_count);

    // Proposals stay inside the query cloud's inflated bounding box.
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const Vec3& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 margin = Vec3::Constant(0.5 + queries.sigma_p * 10.0);
    lo -= margin;
    hi += margin;

    auto link_term = [&](std::size_t n, const Pose& link) {
        const Pose drone = compose(link, rel[n]);
        return config.log_eval_pair(drone, link) + queries.log_eval(static_cast<int>(n), link);
    };
    auto total = [&](SaState& s) {
        s.per_link.resize(link_count);
        double t = 0.0;
        for (std::size_t n = 0; n < link_count; ++n) {
            s.per_link[n] = link_term(n, s.links[n]);
            t += s.per_link[n];
        }
        s.log_j = t;
    };

    std::vector<CandidateGrasp> results(static_cast<std::size_t>(k));
    std::vector<std::vector<double>> traces(static_cast<std::size_t>(k));

    parallel_for(k, params.threads, [&](int chain) {
        Rng rng(params.seed + static_cast<std::uint64_t>(chain));

        SaState state;
        state.links.resize(link_count);
        for (std::size_t n = 0; n < link_count; ++n)
            state.links[n] = queries.sample_kernel(static_cast<int>(n), rng);
        total(state);

        SaState best = state;
        auto& trace = traces[chain];
        trace.reserve(static_cast<std::size_t>(params.sa.steps));

        double temperature = params.sa.t0;
        for (int step = 0; step < params.sa.steps; ++step) {
            // Scale floor keeps late-stage local moves useful for polishing.
            const double scale = std::max(temperature / params.sa.t0, 0.05);
            const double pos_scale = queries.sigma_p * scale;
            const double ang_scale = scale / std::sqrt(std::max(queries.sigma_q, 1.0));

            SaState proposal = state;
            const double move = rng.uniform();
            if (move < params.sa.reanchor_prob) {
                // Jump one link to a fresh query-kernel anchor.
                const std::size_t n = rng.uniform_index(link_count);
                proposal.links[n] = queries.sample_kernel(static_cast<int>(n), rng);
            } else if (move < params.sa.reanchor_prob + 0.5 * (1.0 - params.sa.reanchor_prob) &&
                       link_count > 1) {
                // Rigid perturbation of the whole formation about its centroid.
                Vec3 centroid = Vec3::Zero();
                for (const Pose& L : proposal.links) centroid += L.p;
                centroid /= static_cast<double>(link_count);
                const Vec3 dp = rng.gaussian3(pos_scale);
                const UnitQuaternion dq = UnitQuaternion::from_axis_angle(
                    Vec3(rng.normal(), rng.normal(), rng.normal()), ang_scale * rng.normal());
                for (Pose& L : proposal.links) {
                    L.p = centroid + dp + dq.rotate(L.p - centroid);
                    L.q = dq * L.q;
                }
            } else {
                // Local polish: position-only and rotation-only moves accept
                // independently, which converges faster than joint proposals.
                const std::size_t n = rng.uniform_index(link_count);
                Pose& L = proposal.links[n];
                if (rng.uniform() < 0.5) {
                    L.p += rng.gaussian3(pos_scale);
                } else {
                    L.q = UnitQuaternion::from_axis_angle(
                              Vec3(rng.normal(), rng.normal(), rng.normal()),
                              ang_scale * rng.normal()) *
                          L.q;
                }
            }
            for (Pose& L : proposal.links) L.p = L.p.cwiseMax(lo).cwiseMin(hi);
            total(proposal);

            bool accept;
            if (!std::isfinite(state.log_j) && !std::isfinite(proposal.log_j)) {
                accept = true;  // both lost: move freely
            } else if (!std::isfinite(proposal.log_j)) {
                accept = false;  // never take a zero-likelihood candidate over a finite one
            } else if (proposal.log_j >= state.log_j) {
                accept = true;
            } else {
                accept = rng.uniform() < std::exp((proposal.log_j - state.log_j) / temperature);
            }
            if (accept) state = std::move(proposal);
            if (state.log_j > best.log_j) best = state;
            trace.push_back(best.log_j);
            temperature *= params.sa.cooling;
        }

        CandidateGrasp out;
        out.pairs.resize(link_count);
        for (std::size_t n = 0; n < link_count; ++n) {
            out.pairs[n].link = best.links[n];
            out.pairs[n].drone = compose(best.links[n], rel[n]);
        }
        out.log_j = best.log_j;
        results[chain] = std::move(out);
    });

    if (best_traces) *best_traces = std::move(traces);
    return select_top_k(results, k, min_separation, config.rot_weight);
}

namespace {

// Material within a vertical cylinder on the given side of p: the side a
// descending cable gripper would have to pass through.
bool covered(const SurfaceAnalyzer& analyzer, const Vec3& p, double contact_radius, bool above) {
    const double rho = 0.5 * contact_radius;   // cylinder radius
    const double gap = 0.25 * contact_radius;  // ignore the surface itself
    const double reach = 12.0 * contact_radius;
    for (std::size_t idx : analyzer.tree().radius(p, reach)) {
        const Vec3 d = analyzer.cloud().points[idx] - p;
        if (d.head<2>().norm() > rho) continue;
        if (above ? d.z() >= gap : d.z() <= -gap) return true;
    }
    return false;
}

}  // namespace

CandidateGrasp feasibility_filter(const CandidateGrasp& candidate, const SurfaceAnalyzer& analyzer,
                                  double max_tilt, double contact_radius) {
    CandidateGrasp out = candidate;
    out.feasible = true;
    for (const CandidatePair& pair : out.pairs) {
        double dist = 0.0;
        const std::size_t idx = analyzer.tree().nearest(pair.link.p, &dist);
        if (dist > contact_radius) {
            out.feasible = false;
            break;
        }
        const Vec3& p = analyzer.cloud().points[idx];
        const bool material_above = covered(analyzer, p, contact_radius, true);
        const bool material_below = covered(analyzer, p, contact_radius, false);
        if (material_above && material_below) {
            out.feasible = false;  // slotted or wall contact, unreachable from above
            break;
        }

        // Outward normal: toward the uncovered side; the viewpoint-based
        // estimate decides only when the coverage test is uninformative.
        Vec3 n;
        try {
            n = analyzer.estimate_normal(idx);
        } catch (const DomainError&) {
            out.feasible = false;
            break;
        }
        if (material_above && n.z() > 0.0) n = -n;
        if (material_below && n.z() < 0.0) n = -n;

        const double tilt = std::acos(std::clamp(n.z(), -1.0, 1.0));
        if (tilt > max_tilt) {
            out.feasible = false;
            break;
        }
    }
    return out;
}

CandidateGrasp snap_to_surface(const CandidateGrasp& candidate, const SurfaceAnalyzer& analyzer) {
    if (analyzer.cloud().empty()) throw EmptyInput("empty cloud");
    CandidateGrasp out = candidate;
    for (CandidatePair& pair : out.pairs) {
        double dist = 0.0;
        const std::size_t idx = analyzer.tree().nearest(pair.link.p, &dist);
        pair.nearest_point = static_cast<int>(idx);
        pair.snap_distance = dist;
        pair.link.p = analyzer.cloud().points[idx];
    }
    return out;
}

std::vector<CandidateGrasp> select_top_k(const std::vector<CandidateGrasp>& candidates, int k,
                                         double min_separation, double rot_weight) {
    if (k < 1) throw DomainError("k must be >= 1");
    std::vector<CandidateGrasp> sorted = candidates;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const CandidateGrasp& a, const CandidateGrasp& b) { return a.log_j > b.log_j; });

    std::vector<CandidateGrasp> kept;
    for (const CandidateGrasp& c : sorted) {
        if (static_cast<int>(kept.size()) >= k) break;
        bool duplicate = false;
        for (const CandidateGrasp& prev : kept) {
            if (prev.pairs.size() != c.pairs.size()) continue;
            bool all_close = true;
            for (std::size_t n = 0; n < c.pairs.size() && all_close; ++n) {
                if (pose_distance(c.pairs[n].link, prev.pairs[n].link, rot_weight) >= min_separation)
                    all_close = false;
            }
            if (all_close) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) kept.push_back(c);
    }
    return kept;
}

}  // namespace aerogrip
