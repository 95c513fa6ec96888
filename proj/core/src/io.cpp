#include "aerogrip/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aerogrip/errors.hpp"

namespace aerogrip {

namespace {

using nlohmann::json;

json pose_to_json(const Pose& pose) {
    return json::array(
        {pose.p.x(), pose.p.y(), pose.p.z(), pose.q.w, pose.q.x, pose.q.y, pose.q.z});
}

Pose pose_from_json(const json& j) {
    if (!j.is_array() || j.size() != 7) throw SchemaError("candidates file: malformed pose");
    return {Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()),
            UnitQuaternion(j[3].get<double>(), j[4].get<double>(), j[5].get<double>(),
                           j[6].get<double>())};
}

}  // namespace

std::vector<PosePair> load_links(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open links file: " + path.string());

    std::vector<PosePair> links;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        double v[14];
        if (!(ls >> v[0])) continue;  // blank line
        for (int i = 1; i < 14; ++i) {
            if (!(ls >> v[i]))
                throw ParseError(path.string(), line_no, "expected 14 reals (b then L poses)");
        }
        double extra;
        if (ls >> extra) throw ParseError(path.string(), line_no, "trailing data after link pose");
        for (double x : v)
            if (!std::isfinite(x)) throw ParseError(path.string(), line_no, "non-finite value");

        PosePair pair;
        pair.drone = {Vec3(v[0], v[1], v[2]), UnitQuaternion(v[3], v[4], v[5], v[6])};
        pair.link = {Vec3(v[7], v[8], v[9]), UnitQuaternion(v[10], v[11], v[12], v[13])};
        links.push_back(pair);
    }
    return links;
}

void save_links(const std::filesystem::path& path, const std::vector<PosePair>& links) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write links file: " + path.string());
    out.precision(17);
    out << "# one drone per line: b(px py pz qw qx qy qz) L(px py pz qw qx qy qz)\n";
    for (const PosePair& pair : links) {
        out << pair.drone.p.x() << " " << pair.drone.p.y() << " " << pair.drone.p.z() << " "
            << pair.drone.q.w << " " << pair.drone.q.x << " " << pair.drone.q.y << " "
            << pair.drone.q.z << " " << pair.link.p.x() << " " << pair.link.p.y() << " "
            << pair.link.p.z() << " " << pair.link.q.w << " " << pair.link.q.x << " "
            << pair.link.q.y << " " << pair.link.q.z << "\n";
    }
}

void save_candidates(const std::filesystem::path& path,
                     const std::vector<CandidateGrasp>& candidates) {
    json doc;
    json arr = json::array();
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
        const CandidateGrasp& c = candidates[rank];
        json drones = json::array();
        for (const CandidatePair& pair : c.pairs) {
            drones.push_back({{"b", pose_to_json(pair.drone)},
                              {"L", pose_to_json(pair.link)},
                              {"nearest_point", pair.nearest_point},
                              {"snap_distance", pair.snap_distance}});
        }
        arr.push_back({{"rank", rank + 1},
                       {"log_j", c.log_j},
                       {"feasible", c.feasible},
                       {"drones", drones}});
    }
    doc["candidates"] = arr;

    std::ofstream out(path);
    if (!out) throw IoError("cannot write candidates file: " + path.string());
    out << doc.dump(2) << "\n";
}

std::vector<CandidateGrasp> load_candidates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open candidates file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("candidates file: corrupt JSON: " + std::string(e.what()));
    }
    std::vector<CandidateGrasp> out;
    for (const auto& jc : doc.at("candidates")) {
        CandidateGrasp c;
        c.log_j = jc.at("log_j").is_null() ? -std::numeric_limits<double>::infinity()
                                           : jc.at("log_j").get<double>();
        c.feasible = jc.at("feasible").get<bool>();
        for (const auto& jd : jc.at("drones")) {
            CandidatePair pair;
            pair.drone = pose_from_json(jd.at("b"));
            pair.link = pose_from_json(jd.at("L"));
            pair.nearest_point = jd.at("nearest_point").get<int>();
            pair.snap_distance = jd.at("snap_distance").get<double>();
            c.pairs.push_back(pair);
        }
        out.push_back(std::move(c));
    }
    return out;
}

void save_density_samples(const std::filesystem::path& path,
                          const std::vector<DensitySample>& samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write density samples: " + path.string());
    out.precision(17);
    out << "# x y z log_q\n";
    for (const DensitySample& s : samples)
        out << s.p.x() << " " << s.p.y() << " " << s.p.z() << " " << s.log_q << "\n";
}

}  // namespace aerogrip
