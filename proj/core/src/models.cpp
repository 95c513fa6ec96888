#include "aerogrip/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "aerogrip/errors.hpp"
#include "aerogrip/rng.hpp"

namespace aerogrip {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

ObjectModel learn_object_model(const std::vector<SurfaceFeature>& contact_features,
                               const Bandwidths& bw) {
    if (contact_features.empty()) throw EmptyInput("object model needs contact features");
    std::vector<double> w(contact_features.size(), 1.0 / contact_features.size());
    return {make_mixture(contact_features, w, bw)};
}

TaskModel learn_task_model(const std::vector<SurfaceFeature>& task_features, const Bandwidths& bw) {
    if (task_features.empty()) throw EmptyInput("task model needs features");
    double r_max = 0.0;
    for (const SurfaceFeature& f : task_features) r_max = std::max(r_max, f.curv.r1);

    std::vector<double> w(task_features.size());
    if (r_max <= 0.0) {
        // All-flat cloud: no salient features, use uniform weights.
        std::cerr << "warning: task features have no positive curvature; using uniform weights\n";
        std::fill(w.begin(), w.end(), 1.0 / task_features.size());
    } else {
        for (std::size_t j = 0; j < task_features.size(); ++j)
            w[j] = std::max(task_features[j].curv.r1, 0.0) / r_max;
    }
    return {make_mixture(task_features, w, bw)};
}

ContactModel learn_contact_model(const DemonstrationRecord& record, const ObjectModel& object,
                                 const TaskModel& task, int n_c, const Bandwidths& bw_c,
                                 std::uint64_t seed) {
    const auto& object_kernels = object.density.kernels;
    if (record.links.empty()) throw EmptyInput("demonstration has no links");
    if (n_c <= 0 || static_cast<std::size_t>(n_c) > object_kernels.size())
        throw DomainError("downsample-overflow: N_c must be in [1, N_O]");

    ContactModel model;
    model.bw = bw_c;

    // Uniform downsample without replacement; one retained set shared by all
    // links so the stored task offsets apply to each of them.
    Rng rng(seed);
    std::vector<int> indices(object_kernels.size());
    std::iota(indices.begin(), indices.end(), 0);
    for (int i = 0; i < n_c; ++i) {
        const std::size_t j = i + rng.uniform_index(indices.size() - i);
        std::swap(indices[i], indices[j]);
    }
    model.retained.assign(indices.begin(), indices.begin() + n_c);

    model.links.resize(record.links.size());
    for (std::size_t n = 0; n < record.links.size(); ++n) {
        auto& kernels = model.links[n];
        kernels.reserve(model.retained.size());
        for (int idx : model.retained) {
            const SurfaceFeature& feat = object_kernels[idx].mean;
            ContactKernel k;
            k.u = relative_pose(feat.pose, record.links[n].link);
            k.r = feat.curv;
            k.weight = 1.0 / n_c;
            kernels.push_back(k);
        }
    }

    model.task_offsets.reserve(model.retained.size() * task.density.kernels.size());
    for (int idx : model.retained) {
        const SurfaceFeature& feat = object_kernels[idx].mean;
        for (std::size_t j = 0; j < task.density.kernels.size(); ++j) {
            TaskOffset off;
            off.object_kernel = idx;
            off.task_kernel = static_cast<int>(j);
            off.u = relative_pose(feat.pose, task.density.kernels[j].mean.pose);
            model.task_offsets.push_back(off);
        }
    }
    return model;
}

double ContactModel::log_eval(int link, const Pose& u, const Curvature2& r) const {
    const auto& kernels = links.at(link);
    std::vector<double> terms;
    terms.reserve(kernels.size());
    const double r_arr[2] = {r.r1, r.r2};
    for (const ContactKernel& k : kernels) {
        if (k.weight <= 0.0) continue;
        const double mu_r[2] = {k.r.r1, k.r.r2};
        terms.push_back(std::log(k.weight) +
                        log_gaussian_eval(u.p.data(), k.u.p.data(), bw.sigma_p, 3) +
                        log_vmf_antipodal_eval(u.q, k.u.q, bw.sigma_q) +
                        log_gaussian_eval(r_arr, mu_r, bw.sigma_r, 2));
    }
    return logsumexp(terms);
}

double ContactModel::eval(int link, const Pose& u, const Curvature2& r) const {
    return std::exp(log_eval(link, u, r));
}

double ContactModel::log_conditional_pose(int link, const Pose& u, const Curvature2& r) const {
    const auto& kernels = links.at(link);
    const double r_arr[2] = {r.r1, r.r2};
    std::vector<double> joint, marginal;
    joint.reserve(kernels.size());
    marginal.reserve(kernels.size());
    for (const ContactKernel& k : kernels) {
        if (k.weight <= 0.0) continue;
        const double mu_r[2] = {k.r.r1, k.r.r2};
        const double lc = std::log(k.weight) + log_gaussian_eval(r_arr, mu_r, bw.sigma_r, 2);
        marginal.push_back(lc);
        joint.push_back(lc + log_gaussian_eval(u.p.data(), k.u.p.data(), bw.sigma_p, 3) +
                        log_vmf_antipodal_eval(u.q, k.u.q, bw.sigma_q));
    }
    return logsumexp(joint) - logsumexp(marginal);
}

double ContactModel::log_curvature_marginal(int link, const Curvature2& r) const {
    const auto& kernels = links.at(link);
    const double norm = -(kLog2Pi + 2.0 * std::log(bw.sigma_r));
    std::vector<double> terms;
    terms.reserve(kernels.size());
    for (const ContactKernel& k : kernels) {
        if (k.weight <= 0.0) continue;
        const double d1 = r.r1 - k.r.r1;
        const double d2 = r.r2 - k.r.r2;
        terms.push_back(std::log(k.weight) + norm -
                        0.5 * (d1 * d1 + d2 * d2) / (bw.sigma_r * bw.sigma_r));
    }
    return logsumexp(terms);
}

Pose ContactModel::sample_offset(int link, Rng& rng) const {
    const auto& kernels = links.at(link);
    std::vector<double> w(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) w[i] = kernels[i].weight;
    const ContactKernel& k = kernels[rng.categorical(w)];
    Pose u;
    u.p = k.u.p + rng.gaussian3(bw.sigma_p);
    u.q = rng.vmf(k.u.q, bw.sigma_q);
    return u;
}

ConfigurationModel learn_configuration_model(const std::vector<DemonstrationRecord>& records,
                                             double alpha, double sigma_p, double sigma_q,
                                             double rot_weight) {
    if (records.empty()) throw EmptyInput("configuration model needs a demonstration");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite positive");
    ConfigurationModel model;
    model.alpha = alpha;
    model.sigma_p = sigma_p;
    model.sigma_q = sigma_q;
    model.rot_weight = rot_weight;
    for (const DemonstrationRecord& rec : records) {
        for (const PosePair& pair : rec.links) model.kernels.push_back({pair.drone, pair.link});
    }
    if (model.kernels.empty()) throw EmptyInput("demonstrations contain no pose pairs");
    return model;
}

double ConfigurationModel::log_eval_pair(const Pose& drone, const Pose& link) const {
    std::vector<double> terms;
    terms.reserve(kernels.size());
    for (const ConfigurationKernel& k : kernels) {
        const double d = pose_distance(drone, k.drone, rot_weight);
        terms.push_back(-alpha * d * d +
                        log_gaussian_eval(link.p.data(), k.link.p.data(), sigma_p, 3) +
                        log_vmf_antipodal_eval(link.q, k.link.q, sigma_q));
    }
    return logsumexp(terms);
}

double ConfigurationModel::log_eval(const std::vector<PosePair>& candidate) const {
    if (candidate.empty()) throw EmptyInput("empty candidate");
    double total = 0.0;
    for (const PosePair& pair : candidate) total += log_eval_pair(pair.drone, pair.link);
    return total;
}

double ConfigurationModel::eval(const std::vector<PosePair>& candidate) const {
    return std::exp(log_eval(candidate));
}

double configuration_eval(const ConfigurationModel& model, const std::vector<PosePair>& candidate) {
    return model.eval(candidate);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json pose_to_json(const Pose& pose) {
    return json::array(
        {pose.p.x(), pose.p.y(), pose.p.z(), pose.q.w, pose.q.x, pose.q.y, pose.q.z});
}

Pose pose_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 7)
        throw SchemaError("model file: " + where + " must be a 7-element pose array");
    for (const auto& v : j) {
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            throw SchemaError("model file: non-finite number in " + where);
    }
    Pose p;
    p.p = Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    p.q = UnitQuaternion(j[3].get<double>(), j[4].get<double>(), j[5].get<double>(),
                         j[6].get<double>());
    return p;
}

json bandwidths_to_json(const Bandwidths& bw) {
    return {{"sigma_p", bw.sigma_p}, {"sigma_q", bw.sigma_q}, {"sigma_r", bw.sigma_r}};
}

Bandwidths bandwidths_from_json(const json& j, const std::string& where) {
    for (const char* key : {"sigma_p", "sigma_q", "sigma_r"}) {
        if (!j.contains(key)) throw SchemaError("model file: missing " + where + "." + key);
    }
    Bandwidths bw{j.at("sigma_p").get<double>(), j.at("sigma_q").get<double>(),
                  j.at("sigma_r").get<double>()};
    if (!(bw.sigma_p > 0.0 && bw.sigma_q > 0.0 && bw.sigma_r > 0.0))
        throw SchemaError("model file: non-positive bandwidth in " + where);
    return bw;
}

json mixture_to_json(const MixtureDensity& d) {
    json kernels = json::array();
    for (const FeatureKernel& k : d.kernels) {
        kernels.push_back({{"pose", pose_to_json(k.mean.pose)},
                           {"r", json::array({k.mean.curv.r1, k.mean.curv.r2})},
                           {"weight", k.weight}});
    }
    return {{"kernels", kernels}};
}

MixtureDensity mixture_from_json(const json& j, const Bandwidths& bw, const std::string& where) {
    if (!j.contains("kernels") || !j.at("kernels").is_array() || j.at("kernels").empty())
        throw SchemaError("model file: missing or empty " + where + ".kernels");
    MixtureDensity d;
    d.bw = bw;
    for (const auto& jk : j.at("kernels")) {
        FeatureKernel k;
        k.mean.pose = pose_from_json(jk.at("pose"), where + ".kernels[].pose");
        const auto& r = jk.at("r");
        if (!r.is_array() || r.size() != 2)
            throw SchemaError("model file: " + where + ".kernels[].r must have 2 entries");
        k.mean.curv = {r[0].get<double>(), r[1].get<double>()};
        k.weight = jk.at("weight").get<double>();
        d.kernels.push_back(k);
    }
    return d;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelBundle& bundle) {
    json doc;
    doc["schema_version"] = kModelSchemaVersion;
    doc["label"] = bundle.label;
    doc["bandwidths"] = {{"surface", bandwidths_to_json(bundle.object.density.bw)},
                         {"task", bandwidths_to_json(bundle.task.density.bw)},
                         {"contact", bandwidths_to_json(bundle.contact.bw)}};
    doc["object"] = mixture_to_json(bundle.object.density);
    doc["task"] = mixture_to_json(bundle.task.density);

    json links = json::array();
    for (const auto& kernels : bundle.contact.links) {
        json jkernels = json::array();
        for (const ContactKernel& k : kernels) {
            jkernels.push_back({{"u", pose_to_json(k.u)},
                                {"r", json::array({k.r.r1, k.r.r2})},
                                {"weight", k.weight}});
        }
        links.push_back({{"kernels", jkernels}});
    }
    json offsets = json::array();
    for (const TaskOffset& off : bundle.contact.task_offsets) {
        offsets.push_back({{"i", off.object_kernel}, {"j", off.task_kernel},
                           {"u", pose_to_json(off.u)}});
    }
    doc["contact"] = {{"links", links},
                      {"task_offsets", offsets},
                      {"retained", bundle.contact.retained}};

    json config_kernels = json::array();
    for (const ConfigurationKernel& k : bundle.configuration.kernels) {
        config_kernels.push_back({{"b", pose_to_json(k.drone)}, {"L", pose_to_json(k.link)}});
    }
    doc["configuration"] = {{"alpha", bundle.configuration.alpha},
                            {"sigma_p", bundle.configuration.sigma_p},
                            {"sigma_q", bundle.configuration.sigma_q},
                            {"rot_weight", bundle.configuration.rot_weight},
                            {"kernels", config_kernels}};

    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("failed writing model file: " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path.string());

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("model file: corrupt JSON: " + std::string(e.what()));
    }

    if (!doc.contains("schema_version")) throw SchemaError("model file: missing schema_version");
    if (doc.at("schema_version").get<int>() != kModelSchemaVersion)
        throw VersionError("model file: unsupported schema_version " +
                           doc.at("schema_version").dump());

    for (const char* section : {"label", "bandwidths", "object", "task", "contact", "configuration"})
        if (!doc.contains(section))
            throw SchemaError(std::string("model file: missing section '") + section + "'");

    const json& jbw = doc.at("bandwidths");
    for (const char* key : {"surface", "task", "contact"})
        if (!jbw.contains(key))
            throw SchemaError(std::string("model file: missing bandwidths.") + key);

    ModelBundle bundle;
    bundle.label = doc.at("label").get<std::string>();

    const Bandwidths bw_surface = bandwidths_from_json(jbw.at("surface"), "bandwidths.surface");
    const Bandwidths bw_task = bandwidths_from_json(jbw.at("task"), "bandwidths.task");
    const Bandwidths bw_contact = bandwidths_from_json(jbw.at("contact"), "bandwidths.contact");

    bundle.object.density = mixture_from_json(doc.at("object"), bw_surface, "object");
    bundle.task.density = mixture_from_json(doc.at("task"), bw_task, "task");

    const json& jcontact = doc.at("contact");
    if (!jcontact.contains("links") || !jcontact.at("links").is_array() ||
        jcontact.at("links").empty())
        throw SchemaError("model file: missing or empty contact.links");
    bundle.contact.bw = bw_contact;
    for (const auto& jlink : jcontact.at("links")) {
        if (!jlink.contains("kernels") || jlink.at("kernels").empty())
            throw SchemaError("model file: contact link without kernels");
        std::vector<ContactKernel> kernels;
        for (const auto& jk : jlink.at("kernels")) {
            ContactKernel k;
            k.u = pose_from_json(jk.at("u"), "contact.links[].kernels[].u");
            const auto& r = jk.at("r");
            if (!r.is_array() || r.size() != 2)
                throw SchemaError("model file: contact kernel r must have 2 entries");
            k.r = {r[0].get<double>(), r[1].get<double>()};
            k.weight = jk.at("weight").get<double>();
            kernels.push_back(k);
        }
        bundle.contact.links.push_back(std::move(kernels));
    }
    if (!jcontact.contains("task_offsets"))
        throw SchemaError("model file: missing contact.task_offsets");
    for (const auto& joff : jcontact.at("task_offsets")) {
        TaskOffset off;
        off.object_kernel = joff.at("i").get<int>();
        off.task_kernel = joff.at("j").get<int>();
        off.u = pose_from_json(joff.at("u"), "contact.task_offsets[].u");
        if (off.task_kernel < 0 ||
            static_cast<std::size_t>(off.task_kernel) >= bundle.task.density.kernels.size())
            throw SchemaError("model file: task_offset refers to a missing task kernel");
        bundle.contact.task_offsets.push_back(off);
    }
    if (jcontact.contains("retained"))
        bundle.contact.retained = jcontact.at("retained").get<std::vector<int>>();

    const json& jconfig = doc.at("configuration");
    for (const char* key : {"alpha", "sigma_p", "sigma_q", "kernels"})
        if (!jconfig.contains(key))
            throw SchemaError(std::string("model file: missing configuration.") + key);
    bundle.configuration.alpha = jconfig.at("alpha").get<double>();
    bundle.configuration.sigma_p = jconfig.at("sigma_p").get<double>();
    bundle.configuration.sigma_q = jconfig.at("sigma_q").get<double>();
    bundle.configuration.rot_weight = jconfig.value("rot_weight", 1.0);
    if (jconfig.at("kernels").empty())
        throw SchemaError("model file: configuration.kernels is empty");
    for (const auto& jk : jconfig.at("kernels")) {
        ConfigurationKernel k;
        k.drone = pose_from_json(jk.at("b"), "configuration.kernels[].b");
        k.link = pose_from_json(jk.at("L"), "configuration.kernels[].L");
        bundle.configuration.kernels.push_back(k);
    }
    return bundle;
}

}  // namespace aerogrip
