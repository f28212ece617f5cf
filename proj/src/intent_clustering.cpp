#include "memsieve/intent_clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <Eigen/SVD>

#include "memsieve/errors.hpp"
#include "memsieve/io.hpp"

namespace memsieve::clustering {

using io::ordered_json;
using json = io::json;

std::optional<std::size_t> AffinityMatrix::intent_index(const std::string& id) const {
    for (std::size_t i = 0; i < intent_ids.size(); ++i)
        if (intent_ids[i] == id) return i;
    return std::nullopt;
}

std::optional<std::size_t> AffinityMatrix::scene_index(const std::string& id) const {
    for (std::size_t j = 0; j < scene_ids.size(); ++j)
        if (scene_ids[j] == id) return j;
    return std::nullopt;
}

AffinityMatrix build_affinity_matrix(const std::vector<core::Intent>& intents,
                                     const std::vector<core::MemoryScene>& scenes,
                                     const std::vector<EvidencePair>& evidence,
                                     int min_support) {
    AffinityMatrix out;
    std::map<std::string, std::size_t> intent_at, scene_at;
    for (const auto& i : intents) {
        if (intent_at.count(i.id)) throw Error("duplicate intent id " + i.id);
        intent_at[i.id] = out.intent_ids.size();
        out.intent_ids.push_back(i.id);
    }
    for (const auto& s : scenes) {
        if (scene_at.count(s.id)) throw Error("duplicate scene id " + s.id);
        scene_at[s.id] = out.scene_ids.size();
        out.scene_ids.push_back(s.id);
    }
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(intents.size()),
                                                   static_cast<Eigen::Index>(scenes.size()));
    for (const auto& pair : evidence) {
        auto it = intent_at.find(pair.intent_id);
        if (it == intent_at.end()) throw Error("evidence references unknown intent " + pair.intent_id);
        auto st = scene_at.find(pair.scene_id);
        if (st == scene_at.end()) throw Error("evidence references unknown scene " + pair.scene_id);
        counts(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(st->second)) += 1;
    }
    out.values = (counts.array() >= min_support).cast<double>();
    return out;
}

double coverage_at_rank(const Eigen::MatrixXd& original, const Eigen::MatrixXd& u,
                        const Eigen::VectorXd& sigma, const Eigen::MatrixXd& v, int rank,
                        double sigma_threshold) {
    Eigen::MatrixXd recon = u.leftCols(rank) * sigma.head(rank).asDiagonal() *
                            v.leftCols(rank).transpose();
    std::size_t ones = 0, covered = 0;
    for (Eigen::Index i = 0; i < original.rows(); ++i) {
        for (Eigen::Index j = 0; j < original.cols(); ++j) {
            if (original(i, j) == 1.0) {
                ++ones;
                if (recon(i, j) > sigma_threshold) ++covered;
            }
        }
    }
    if (ones == 0) throw Error("coverage undefined: affinity matrix has no ones");
    return static_cast<double>(covered) / static_cast<double>(ones);
}

SvdModel decompose_and_select_rank(const AffinityMatrix& affinity, double sigma_threshold,
                                   double coverage) {
    if (affinity.values.size() == 0) throw Error("empty affinity matrix");
    if (!(coverage > 0.0 && coverage <= 1.0)) throw Error("coverage must be in (0, 1]");
    if (sigma_threshold < 0.0) throw Error("sigma threshold must be >= 0");
    if ((affinity.values.array() == 1.0).count() == 0) {
        throw Error("affinity matrix is all-zero; coverage ratio is undefined");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(affinity.values,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& all_sigma = svd.singularValues();
    double sigma_max = all_sigma.size() > 0 ? all_sigma(0) : 0.0;
    int usable = 0;
    for (Eigen::Index i = 0; i < all_sigma.size(); ++i) {
        if (all_sigma(i) > 1e-10 * sigma_max) ++usable;
    }
    if (usable == 0) throw Error("affinity matrix has no usable singular values");

    SvdModel model;
    model.u = svd.matrixU().leftCols(usable);
    model.sigma = all_sigma.head(usable);
    model.v = svd.matrixV().leftCols(usable);
    model.sigma_threshold = sigma_threshold;

    // Incremental reconstruction: add one rank-1 term per step.
    Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(affinity.values.rows(), affinity.values.cols());
    const auto ones = (affinity.values.array() == 1.0).count();
    for (int r = 1; r <= usable; ++r) {
        recon.noalias() += model.sigma(r - 1) * model.u.col(r - 1) * model.v.col(r - 1).transpose();
        std::size_t covered = 0;
        for (Eigen::Index i = 0; i < recon.rows(); ++i) {
            for (Eigen::Index j = 0; j < recon.cols(); ++j) {
                if (affinity.values(i, j) == 1.0 && recon(i, j) > sigma_threshold) ++covered;
            }
        }
        double ratio = static_cast<double>(covered) / static_cast<double>(ones);
        if (ratio >= coverage) {
            model.rank = r;
            model.coverage_ratio = ratio;
            model.u = model.u.leftCols(r).eval();
            model.sigma = model.sigma.head(r).eval();
            model.v = model.v.leftCols(r).eval();
            return model;
        }
    }
    throw Error("no rank reaches the required coverage at the given sigma threshold");
}

Eigen::VectorXd feature_vector(const SvdModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.v.rows()) {
        throw Error("scene vector length " + std::to_string(x.size()) + " != " +
                    std::to_string(model.v.rows()));
    }
    return model.sigma.array().sqrt().matrix().asDiagonal() * (model.v.transpose() * x);
}

FeatureMatrix intent_features(const SvdModel& model, const AffinityMatrix& affinity) {
    FeatureMatrix out;
    out.intent_ids = affinity.intent_ids;
    // F = E * V_r * sqrt(S_r), row i equals sqrt(S_r) V_r^T E_i^T.
    out.rows = affinity.values * model.v * model.sigma.array().sqrt().matrix().asDiagonal();
    return out;
}

Eigen::MatrixXd gram_matrix(const FeatureMatrix& features) {
    return features.rows * features.rows.transpose();
}

namespace {

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 1.0;  // cos with a zero vector is 0
    double c = a.dot(b) / (na * nb);
    c = std::clamp(c, -1.0, 1.0);
    return 1.0 - c;
}

}  // namespace

DistanceMatrix pairwise_distances(const FeatureMatrix& features) {
    const Eigen::Index n = features.rows.rows();
    DistanceMatrix out;
    out.values = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index u = 0; u < n; ++u) {
        for (Eigen::Index v = u + 1; v < n; ++v) {
            double d = cosine_distance(features.rows.row(u), features.rows.row(v));
            out.values(u, v) = d;
            out.values(v, u) = d;
        }
    }
    return out;
}

double row_median_offdiag(const DistanceMatrix& distances, std::size_t row) {
    const Eigen::Index n = distances.values.rows();
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(n) - 1);
    for (Eigen::Index v = 0; v < n; ++v) {
        if (static_cast<std::size_t>(v) != row) vals.push_back(distances.values(row, v));
    }
    if (vals.empty()) return 0.0;
    std::sort(vals.begin(), vals.end());
    std::size_t mid = vals.size() / 2;
    if (vals.size() % 2 == 1) return vals[mid];
    return 0.5 * (vals[mid - 1] + vals[mid]);
}

double default_epsilon(const DistanceMatrix& distances) {
    const Eigen::Index n = distances.values.rows();
    std::vector<double> vals;
    for (Eigen::Index u = 0; u < n; ++u)
        for (Eigen::Index v = u + 1; v < n; ++v) vals.push_back(distances.values(u, v));
    if (vals.empty()) return 0.0;
    std::sort(vals.begin(), vals.end());
    std::size_t at = (vals.size() - 1) / 4;  // nearest-rank 25th percentile
    return vals[at];
}

PrimaryClusters form_primary_clusters(const DistanceMatrix& distances, double epsilon,
                                      std::size_t min_size) {
    if (!(epsilon > 0.0)) throw Error("epsilon must be > 0");
    const std::size_t n = static_cast<std::size_t>(distances.values.rows());
    std::vector<double> medians(n);
    for (std::size_t u = 0; u < n; ++u) medians[u] = row_median_offdiag(distances, u);

    auto pair_ok = [&](std::size_t u, std::size_t v) {
        double d = distances.values(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
        return d <= std::min(medians[u], epsilon) && d <= std::min(medians[v], epsilon);
    };

    struct PairEntry {
        double d;
        std::size_t u, v;
    };
    std::vector<PairEntry> pairs;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            if (pair_ok(u, v)) {
                pairs.push_back({distances.values(static_cast<Eigen::Index>(u),
                                                  static_cast<Eigen::Index>(v)),
                                 u, v});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairEntry& a, const PairEntry& b) {
        return std::tie(a.d, a.u, a.v) < std::tie(b.d, b.u, b.v);
    });

    constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> assigned(n, kUnassigned);
    std::vector<std::vector<std::size_t>> clusters;

    auto joins_ok = [&](std::size_t member, std::size_t cluster) {
        for (std::size_t other : clusters[cluster]) {
            if (!pair_ok(member, other)) return false;
        }
        return true;
    };

    for (const auto& p : pairs) {
        bool u_free = assigned[p.u] == kUnassigned;
        bool v_free = assigned[p.v] == kUnassigned;
        if (u_free && v_free) {
            assigned[p.u] = assigned[p.v] = clusters.size();
            clusters.push_back({p.u, p.v});
        } else if (u_free && !v_free) {
            if (joins_ok(p.u, assigned[p.v])) {
                assigned[p.u] = assigned[p.v];
                clusters[assigned[p.v]].push_back(p.u);
            }
        } else if (!u_free && v_free) {
            if (joins_ok(p.v, assigned[p.u])) {
                assigned[p.v] = assigned[p.u];
                clusters[assigned[p.u]].push_back(p.v);
            }
        }
    }

    PrimaryClusters out;
    std::vector<bool> placed(n, false);
    for (auto& members : clusters) {
        if (members.size() >= min_size) {
            std::sort(members.begin(), members.end());
            for (std::size_t m : members) placed[m] = true;
            out.clusters.push_back(std::move(members));
        }
    }
    // Deterministic order: by smallest member index.
    std::sort(out.clusters.begin(), out.clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (std::size_t u = 0; u < n; ++u) {
        if (!placed[u]) out.remaining.push_back(u);
    }
    return out;
}

std::vector<std::pair<int, std::vector<std::size_t>>> form_residual_clusters(
    const FeatureMatrix& features, const std::vector<std::size_t>& remaining) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t row : remaining) {
        if (row >= static_cast<std::size_t>(features.rows.rows())) {
            throw Error("residual intent index out of range");
        }
        int best = 0;
        double best_val = features.rows(static_cast<Eigen::Index>(row), 0);
        for (Eigen::Index j = 1; j < features.rows.cols(); ++j) {
            double v = features.rows(static_cast<Eigen::Index>(row), j);
            if (v > best_val) {  // ties keep the lowest coordinate index
                best_val = v;
                best = static_cast<int>(j);
            }
        }
        groups[best].push_back(row);
    }
    std::vector<std::pair<int, std::vector<std::size_t>>> out;
    for (auto& [index, members] : groups) {
        std::sort(members.begin(), members.end());
        out.emplace_back(index, std::move(members));
    }
    return out;
}

namespace {

std::set<std::size_t> covered_scenes(const AffinityMatrix& affinity,
                                     const std::vector<std::size_t>& members) {
    std::set<std::size_t> scenes;
    for (std::size_t row : members) {
        for (Eigen::Index j = 0; j < affinity.values.cols(); ++j) {
            if (affinity.values(static_cast<Eigen::Index>(row), j) >= 1.0) {
                scenes.insert(static_cast<std::size_t>(j));
            }
        }
    }
    return scenes;
}

}  // namespace

IntentClustering merge_clusterings(
    const PrimaryClusters& primary,
    const std::vector<std::pair<int, std::vector<std::size_t>>>& residual,
    const AffinityMatrix& affinity) {
    const std::size_t n = affinity.intent_ids.size();

    struct Working {
        std::vector<std::size_t> members;
        std::string origin;
    };
    std::vector<Working> work;
    for (const auto& members : primary.clusters) work.push_back({members, "primary"});
    for (const auto& [index, members] : residual) {
        (void)index;
        work.push_back({members, "residual"});
    }

    std::vector<int> seen(n, 0);
    for (const auto& w : work) {
        for (std::size_t row : w.members) {
            if (row >= n) throw Error("cluster member index out of range");
            if (seen[row]++) {
                throw Error("intent " + affinity.intent_ids[row] +
                            " appears in more than one cluster");
            }
        }
    }
    for (std::size_t row = 0; row < n; ++row) {
        if (!seen[row]) {
            throw Error("intent " + affinity.intent_ids[row] + " is missing from the clustering");
        }
    }

    // Merge clusters with identical covered-scene sets.
    std::map<std::set<std::size_t>, std::vector<std::size_t>> by_coverage;  // -> work indices
    for (std::size_t w = 0; w < work.size(); ++w) {
        by_coverage[covered_scenes(affinity, work[w].members)].push_back(w);
    }

    struct Final {
        std::vector<std::size_t> members;
        std::string origin;
        std::vector<std::size_t> sources;
        std::set<std::size_t> scenes;
    };
    std::vector<Final> finals;
    for (const auto& [scenes, indices] : by_coverage) {
        Final f;
        f.sources = indices;
        f.scenes = scenes;
        for (std::size_t w : indices) {
            f.members.insert(f.members.end(), work[w].members.begin(), work[w].members.end());
        }
        std::sort(f.members.begin(), f.members.end());
        f.origin = indices.size() > 1 ? "merged" : work[indices.front()].origin;
        finals.push_back(std::move(f));
    }
    std::sort(finals.begin(), finals.end(),
              [](const Final& a, const Final& b) { return a.members.front() < b.members.front(); });

    IntentClustering out;
    std::size_t counter = 0;
    for (const auto& f : finals) {
        IntentCluster cluster;
        cluster.id = "c" + std::to_string(++counter);
        cluster.origin = f.origin;
        for (std::size_t row : f.members) cluster.intent_ids.push_back(affinity.intent_ids[row]);
        if (f.sources.size() > 1) {
            MergeEvent event;
            event.kept = cluster.id;
            for (std::size_t w : f.sources) {
                std::string tag = work[w].origin + "[" + affinity.intent_ids[work[w].members.front()];
                for (std::size_t i = 1; i < work[w].members.size(); ++i) {
                    tag += "," + affinity.intent_ids[work[w].members[i]];
                }
                tag += "]";
                event.absorbed.push_back(tag);
            }
            for (std::size_t j : f.scenes) event.scene_ids.push_back(affinity.scene_ids[j]);
            out.merge_report.push_back(std::move(event));
        }
        out.clusters.push_back(std::move(cluster));
    }
    return out;
}

ClusteringResult cluster_intents(const AffinityMatrix& affinity, const ClusteringConfig& config) {
    ClusteringResult result;
    result.config = config;
    result.model = decompose_and_select_rank(affinity, config.sigma, config.coverage);
    result.features = intent_features(result.model, affinity);
    result.distances = pairwise_distances(result.features);
    result.epsilon_used = config.epsilon.value_or(default_epsilon(result.distances));
    PrimaryClusters primary =
        form_primary_clusters(result.distances, result.epsilon_used,
                              config.min_primary_cluster_size);
    auto residual = form_residual_clusters(result.features, primary.remaining);
    result.clustering = merge_clusterings(primary, residual, affinity);
    return result;
}

namespace {

std::vector<double> softmax(const std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

}  // namespace

NewIntentAssignment assign_new_intent(const SvdModel& model, const IntentClustering& clustering,
                                      const FeatureMatrix& features,
                                      const std::vector<int>& scene_vector) {
    if (clustering.clusters.empty()) throw Error("clustering has no clusters");
    if (static_cast<Eigen::Index>(scene_vector.size()) != model.v.rows()) {
        throw Error("scene vector length " + std::to_string(scene_vector.size()) + " != " +
                    std::to_string(model.v.rows()));
    }
    Eigen::VectorXd x(scene_vector.size());
    bool any_scene = false;
    for (std::size_t j = 0; j < scene_vector.size(); ++j) {
        x(static_cast<Eigen::Index>(j)) = scene_vector[j] ? 1.0 : 0.0;
        if (scene_vector[j]) any_scene = true;
    }
    Eigen::VectorXd f = feature_vector(model, x);

    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < features.intent_ids.size(); ++i) row_of[features.intent_ids[i]] = i;

    NewIntentAssignment out;
    double best_distance = 0.0;
    bool have_best = false;
    std::vector<double> cluster_similarity;
    cluster_similarity.reserve(clustering.clusters.size());
    for (const auto& cluster : clustering.clusters) {
        double min_d = 2.0;
        for (const auto& intent_id : cluster.intent_ids) {
            auto it = row_of.find(intent_id);
            if (it == row_of.end()) throw Error("clustering references unknown intent " + intent_id);
            double d = cosine_distance(f, features.rows.row(static_cast<Eigen::Index>(it->second)));
            min_d = std::min(min_d, d);
        }
        cluster_similarity.push_back(1.0 - min_d);
        if (!have_best || min_d < best_distance) {
            have_best = true;
            best_distance = min_d;
            out.cluster_id = cluster.id;
        }
    }
    std::vector<double> probs = softmax(cluster_similarity);
    out.confidence = *std::max_element(probs.begin(), probs.end());
    out.recommend_new_cluster =
        !any_scene || out.confidence < 1.5 / static_cast<double>(clustering.clusters.size());
    return out;
}

std::vector<CandidateIntent> infer_candidate_intents(const gating::Identifier& identifier,
                                                     const AffinityMatrix& affinity,
                                                     std::string_view sentence, std::size_t k) {
    if (k < 1) throw Error("candidate count k must be >= 1");
    gating::MatchResult match = identifier.match(sentence);
    if (match.matched_scene_ids.empty()) return {};

    std::vector<std::size_t> scene_cols;
    for (const auto& scene_id : match.matched_scene_ids) {
        if (auto j = affinity.scene_index(scene_id)) scene_cols.push_back(*j);
    }
    std::vector<CandidateIntent> scored;
    for (std::size_t i = 0; i < affinity.intent_ids.size(); ++i) {
        double score = 0.0;
        for (std::size_t j : scene_cols) {
            score += affinity.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        if (score > 0.0) scored.push_back({affinity.intent_ids[i], score});
    }
    std::sort(scored.begin(), scored.end(), [](const CandidateIntent& a, const CandidateIntent& b) {
        return std::tie(b.score, a.intent_id) < std::tie(a.score, b.intent_id);
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

// ---------------------------------------------------------------------------
// Serialization

AffinityMatrix load_affinity(const std::filesystem::path& path) {
    json doc = io::parse_json_file(path);
    AffinityMatrix out;
    out.intent_ids = doc.at("intents").get<std::vector<std::string>>();
    out.scene_ids = doc.at("scenes").get<std::vector<std::string>>();
    const auto& rows = doc.at("rows");
    if (rows.size() != out.intent_ids.size()) {
        throw Error(path.string() + ": rows count != intents count");
    }
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.intent_ids.size()),
                                       static_cast<Eigen::Index>(out.scene_ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != out.scene_ids.size()) {
            throw Error(path.string() + ": row " + std::to_string(i) + " has wrong length");
        }
        for (std::size_t j = 0; j < out.scene_ids.size(); ++j) {
            int v = rows[i][j].get<int>();
            if (v != 0 && v != 1) throw Error(path.string() + ": affinity entries must be 0/1");
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return out;
}

void save_affinity(const AffinityMatrix& affinity, const std::filesystem::path& path) {
    ordered_json doc;
    doc["intents"] = affinity.intent_ids;
    doc["scenes"] = affinity.scene_ids;
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < affinity.values.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < affinity.values.cols(); ++j) {
            row.push_back(static_cast<int>(affinity.values(i, j)));
        }
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    io::write_json_file(path, doc);
}

ordered_json clustering_to_json(const ClusteringResult& result) {
    ordered_json doc;
    ordered_json clusters = ordered_json::array();
    for (const auto& c : result.clustering.clusters) {
        ordered_json rec;
        rec["id"] = c.id;
        rec["intents"] = c.intent_ids;
        rec["origin"] = c.origin;
        clusters.push_back(std::move(rec));
    }
    doc["clusters"] = std::move(clusters);
    doc["config"] = {{"sigma", result.config.sigma},
                     {"coverage", result.config.coverage},
                     {"epsilon", result.epsilon_used},
                     {"min_support", result.config.min_support},
                     {"min_primary_cluster_size", result.config.min_primary_cluster_size}};
    doc["merge_report"] = ordered_json::array();
    for (const auto& e : result.clustering.merge_report) {
        ordered_json rec;
        rec["kept"] = e.kept;
        rec["absorbed"] = e.absorbed;
        rec["scenes"] = e.scene_ids;
        doc["merge_report"].push_back(std::move(rec));
    }
    doc["svd"] = {{"rank", result.model.rank},
                  {"coverage_ratio", result.model.coverage_ratio}};
    return doc;
}

void save_clustering(const ClusteringResult& result, const std::filesystem::path& path) {
    io::write_json_file(path, clustering_to_json(result));
}

IntentClustering load_clustering(const std::filesystem::path& path) {
    json doc = io::parse_json_file(path);
    IntentClustering out;
    for (const auto& rec : doc.at("clusters")) {
        IntentCluster c;
        c.id = rec.at("id").get<std::string>();
        c.intent_ids = rec.at("intents").get<std::vector<std::string>>();
        c.origin = rec.value("origin", std::string("primary"));
        if (c.intent_ids.empty()) throw Error(path.string() + ": cluster with no intents");
        out.clusters.push_back(std::move(c));
    }
    return out;
}

}  // namespace memsieve::clustering
