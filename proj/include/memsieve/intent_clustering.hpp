#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "memsieve/core.hpp"
#include "memsieve/gating.hpp"

// Offline intent-scene joint clustering: build the binary affinity matrix,
// factor it with a truncated SVD whose rank is the smallest one covering the
// required fraction of ones after reconstruction, cluster intents by feature
// distance, group the leftovers by dominant feature coordinate, and merge
// clusters covering identical scene sets.

namespace memsieve::clustering {

struct AffinityMatrix {
    std::vector<std::string> intent_ids;  // n rows
    std::vector<std::string> scene_ids;   // m columns
    Eigen::MatrixXd values;               // entries in {0, 1}

    std::optional<std::size_t> intent_index(const std::string& id) const;
    std::optional<std::size_t> scene_index(const std::string& id) const;
};

struct EvidencePair {
    std::string intent_id;
    std::string scene_id;
};

struct SvdModel {
    Eigen::MatrixXd u;      // n x r
    Eigen::VectorXd sigma;  // r, descending, strictly positive
    Eigen::MatrixXd v;      // m x r
    int rank = 0;
    double sigma_threshold = 0.5;
    double coverage_ratio = 0.0;  // achieved at the selected rank
};

struct FeatureMatrix {
    std::vector<std::string> intent_ids;
    Eigen::MatrixXd rows;  // n x r
};

struct DistanceMatrix {
    Eigen::MatrixXd values;  // n x n, symmetric, zero diagonal
};

struct IntentCluster {
    std::string id;
    std::vector<std::string> intent_ids;  // ordered by affinity row index
    std::string origin;                   // "primary" | "residual" | "merged"
};

struct MergeEvent {
    std::string kept;
    std::vector<std::string> absorbed;
    std::vector<std::string> scene_ids;  // the shared coverage
};

struct IntentClustering {
    std::vector<IntentCluster> clusters;
    std::vector<MergeEvent> merge_report;
};

struct ClusteringConfig {
    double sigma = 0.5;
    double coverage = 0.9;
    std::optional<double> epsilon;  // default: 25th percentile of off-diagonal distances
    int min_support = 1;
    // Literal reading of "more than two intents"; set 2 for the >= 2 reading.
    std::size_t min_primary_cluster_size = 3;
};

// E[i][j] = 1 iff (intent i, scene j) appears in evidence >= min_support times.
AffinityMatrix build_affinity_matrix(const std::vector<core::Intent>& intents,
                                     const std::vector<core::MemoryScene>& scenes,
                                     const std::vector<EvidencePair>& evidence,
                                     int min_support = 1);

// Minimal rank whose reconstruction E' = U_r S_r V_r^T satisfies
// |{E'_ij > sigma and E_ij = 1}| / |{E_ij = 1}| >= coverage.
// Singular values below 1e-10 * sigma_max are discarded first.
SvdModel decompose_and_select_rank(const AffinityMatrix& affinity, double sigma_threshold,
                                   double coverage);

// Coverage ratio of the rank-r reconstruction (r <= stored singular values).
double coverage_at_rank(const Eigen::MatrixXd& original, const Eigen::MatrixXd& u,
                        const Eigen::VectorXd& sigma, const Eigen::MatrixXd& v, int rank,
                        double sigma_threshold);

// Row i = sqrt(S_r) * V_r^T * E_i^T: existing intents mapped by the same
// transform used for new intents, so both live in one feature space.
FeatureMatrix intent_features(const SvdModel& model, const AffinityMatrix& affinity);

// Feature vector for an arbitrary binary scene vector x (length m).
Eigen::VectorXd feature_vector(const SvdModel& model, const Eigen::VectorXd& x);

// Raw inner-product matrix F * F^T, exposed for inspection.
Eigen::MatrixXd gram_matrix(const FeatureMatrix& features);

// Cosine distance 1 - cos(f_u, f_v); cos with a zero vector is 0 by
// convention, and the diagonal is structurally zero.
DistanceMatrix pairwise_distances(const FeatureMatrix& features);

// Median of row u excluding the diagonal entry.
double row_median_offdiag(const DistanceMatrix& distances, std::size_t row);

// 25th percentile of the off-diagonal distances (the epsilon default).
double default_epsilon(const DistanceMatrix& distances);

struct PrimaryClusters {
    std::vector<std::vector<std::size_t>> clusters;  // member row indices
    std::vector<std::size_t> remaining;
};

// Greedy agglomeration over pairs satisfying
//   D[u][v] <= min(median(D_u), eps) in both directions,
// ascending by distance; clusters smaller than min_size fall back to the
// residual pool. Deterministic for fixed input.
PrimaryClusters form_primary_clusters(const DistanceMatrix& distances, double epsilon,
                                      std::size_t min_size = 3);

// Group the remaining intents by argmax feature coordinate (ties -> lowest
// index). Returned pairs are (argmax index, member row indices).
std::vector<std::pair<int, std::vector<std::size_t>>> form_residual_clusters(
    const FeatureMatrix& features, const std::vector<std::size_t>& remaining);

// Merge clusters whose covered scene sets are identical; validates that the
// result partitions the intent set. The manual verification step of the
// paper-scale workflow becomes the auditable merge_report.
IntentClustering merge_clusterings(const PrimaryClusters& primary,
                                   const std::vector<std::pair<int, std::vector<std::size_t>>>& residual,
                                   const AffinityMatrix& affinity);

struct ClusteringResult {
    SvdModel model;
    FeatureMatrix features;
    DistanceMatrix distances;
    IntentClustering clustering;
    double epsilon_used = 0.0;
    ClusteringConfig config;
};

// The full offline pipeline: SVD + rank selection, features, distances,
// primary + residual clustering, merge.
ClusteringResult cluster_intents(const AffinityMatrix& affinity, const ClusteringConfig& config);

struct NewIntentAssignment {
    std::string cluster_id;
    double confidence = 0.0;
    bool recommend_new_cluster = false;
};

// Route a new intent's binary scene vector to the cluster of its nearest
// existing intent; confidence is max softmax over per-cluster similarity.
NewIntentAssignment assign_new_intent(const SvdModel& model, const IntentClustering& clustering,
                                      const FeatureMatrix& features,
                                      const std::vector<int>& scene_vector);

struct CandidateIntent {
    std::string intent_id;
    double score = 0.0;
};

// Candidate intents for a text without an intent label: scenes matched by
// the identifier vote through the affinity matrix; top-k by score, ties by
// intent id.
std::vector<CandidateIntent> infer_candidate_intents(const gating::Identifier& identifier,
                                                     const AffinityMatrix& affinity,
                                                     std::string_view sentence, std::size_t k);

// Affinity file: {intents:[ids], scenes:[ids], rows:[[0/1,...]]}.
AffinityMatrix load_affinity(const std::filesystem::path& path);
void save_affinity(const AffinityMatrix& affinity, const std::filesystem::path& path);

// Clustering file: {clusters:[...], config:{sigma,coverage,epsilon}, merge_report:[...]}.
IntentClustering load_clustering(const std::filesystem::path& path);
nlohmann::ordered_json clustering_to_json(const ClusteringResult& result);
void save_clustering(const ClusteringResult& result, const std::filesystem::path& path);

}  // namespace memsieve::clustering
