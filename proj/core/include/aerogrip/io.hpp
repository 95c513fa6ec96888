#pragma once

#include <filesystem>
#include <vector>

#include "aerogrip/models.hpp"
#include "aerogrip/transfer.hpp"

namespace aerogrip {

/// Links file: one drone per line, 14 whitespace-separated reals
/// (b then L, each as px py pz qw qx qy qz). `#` starts a comment.
std::vector<PosePair> load_links(const std::filesystem::path& path);
void save_links(const std::filesystem::path& path, const std::vector<PosePair>& links);

/// Candidate output: JSON document with rank, log J, feasibility and per
/// drone the 7-real b and L poses plus the nearest surface point index.
void save_candidates(const std::filesystem::path& path,
                     const std::vector<CandidateGrasp>& candidates);
std::vector<CandidateGrasp> load_candidates(const std::filesystem::path& path);

/// Density diagnostics: text rows "x y z log_q" for external plotting.
struct DensitySample {
    Vec3 p;
    double log_q;
};
void save_density_samples(const std::filesystem::path& path,
                          const std::vector<DensitySample>& samples);

}  // namespace aerogrip
