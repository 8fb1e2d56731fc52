#pragma once
// Clustering Evaluation Protocol.
//
// K-means over the embeddings of one target entity type; cluster quality is
// the share of each cluster taken by its predominant ground-truth label,
// aggregated as an arithmetic mean over clusters (aMean) and a mean weighted
// by predominant-label counts (wMean).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kge/kg.hpp"
#include "kge/matrix.hpp"
#include "kge/model.hpp"

namespace kge {

enum class KMeansInit { kmeanspp, random_points };

const char* kmeans_init_name(KMeansInit i);
KMeansInit kmeans_init_from_name(std::string_view name);

struct ClusterConfig {
    int multiplier = 4;  // K = multiplier * L; one of {1, 2, 4}
    int max_iterations = 100;
    std::uint64_t seed = 0;
    KMeansInit init = KMeansInit::kmeanspp;
    int threads = 0;

    void validate() const;
};

struct KMeansResult {
    std::vector<int> assignment;  // point -> cluster
    Matrix centers;               // K x dim
    int iterations = 0;
    std::vector<double> wcss;     // objective after each iteration
};

// Lloyd iterations with squared-Euclidean distance. Stops when assignments
// stop changing or at max_iterations. An emptied cluster is reseeded with
// the point farthest from its current center.
KMeansResult kmeans(const Matrix& points, int K, const ClusterConfig& config);

struct ClusterAccuracy {
    int cluster = 0;
    int size = 0;               // points in the cluster
    int labelled = 0;           // of which carry a label
    int predominant_label = 0;
    int t_k = 0;                // count of the predominant label
    double acc = 0.0;           // t_k / labelled
    std::vector<int> label_counts;  // per-label histogram, size L
};

// Per-cluster predominant-label accuracy. `point_labels[i]` is a label id or
// -1 for unlabelled; clusters with no labelled member are dropped. Ties on
// the modal label go to the smallest label id.
std::vector<ClusterAccuracy> cluster_accuracy(const std::vector<int>& assignment, int K,
                                              const std::vector<int>& point_labels,
                                              int label_count);

double a_mean(std::span<const double> accs);

// Weighted mean per the protocol's two algebraic forms; both are computed and
// must agree to 1e-12 (the labelled total cancels).
double w_mean(std::span<const double> accs, std::span<const int> t_counts,
              int labelled_total);

struct ClusterReport {
    int K = 0;
    int N = 0;          // non-empty labelled clusters
    int L = 0;          // distinct labels
    int labelled_total = 0;
    std::vector<ClusterAccuracy> clusters;
    double a_mean = 0.0;
    double w_mean = 0.0;
    std::string target_relation;
    std::vector<std::string> label_names;
};

// Clusters the embeddings of the labelled entities (unlabelled target-type
// entities are excluded) with K = multiplier * L.
ClusterReport evaluate_cep(const EmbeddingModel& model, const LabelMap& labels,
                           const ClusterConfig& config,
                           const std::string& target_relation = "");

nlohmann::ordered_json cluster_report_json(const ClusterReport& report);

// One CSV line: config hash, K, N, aMean, wMean.
std::string cluster_report_csv_header();
std::string cluster_report_csv_row(const ClusterReport& report);

// Per-cluster label histogram (cluster rows, label columns).
std::string cluster_histogram_csv(const ClusterReport& report);

} // namespace kge
