#include "kge/cep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kge/error.hpp"
#include "kge/hashing.hpp"
#include "kge/parallel.hpp"
#include "kge/rng.hpp"

namespace kge {

const char* kmeans_init_name(KMeansInit i) {
    return i == KMeansInit::kmeanspp ? "kmeans++" : "random-points";
}

KMeansInit kmeans_init_from_name(std::string_view name) {
    if (name == "kmeans++") return KMeansInit::kmeanspp;
    if (name == "random-points") return KMeansInit::random_points;
    throw DataError("unknown kmeans init `" + std::string(name) +
                    "` (kmeans++|random-points)");
}

void ClusterConfig::validate() const {
    if (multiplier != 1 && multiplier != 2 && multiplier != 4)
        throw DataError("cep: multiplier must be 1, 2 or 4");
    if (max_iterations < 1) throw DataError("cep: max iterations must be positive");
}

namespace {

// Nearest center, ties to the lowest index.
int nearest_center(std::span<const double> p, const Matrix& centers) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        double d = squared_distance(p, centers.row(c));
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

Matrix init_centers(const Matrix& points, int K, const ClusterConfig& config, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centers(static_cast<std::size_t>(K), points.cols());

    if (config.init == KMeansInit::random_points) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        for (int c = 0; c < K; ++c) {
            auto src = points.row(idx[static_cast<std::size_t>(c)]);
            std::copy(src.begin(), src.end(), centers.row(static_cast<std::size_t>(c)).begin());
        }
        return centers;
    }

    // kmeans++: first center uniform, then D^2-weighted draws.
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
    for (int c = 1; c < K; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = squared_distance(points.row(i),
                                        centers.row(static_cast<std::size_t>(c - 1)));
            d2[i] = std::min(d2[i], d);
            total += d2[i];
        }
        std::size_t chosen;
        if (total > 0.0) {
            double target = rng.uniform01() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<std::size_t>(rng.below(n));  // all points coincide
        }
        std::copy(points.row(chosen).begin(), points.row(chosen).end(),
                  centers.row(static_cast<std::size_t>(c)).begin());
    }
    return centers;
}

} // namespace

KMeansResult kmeans(const Matrix& points, int K, const ClusterConfig& config) {
    config.validate();
    const std::size_t n = points.rows();
    if (K < 1) throw DataError("kmeans: K must be >= 1");
    if (n < static_cast<std::size_t>(K))
        throw DataError("kmeans: " + std::to_string(n) + " points cannot fill " +
                        std::to_string(K) + " clusters");
    for (double v : points.data())
        if (!std::isfinite(v)) throw DataError("kmeans: non-finite input point");

    Rng rng(mix_seed(config.seed, 2));
    Matrix centers = init_centers(points, K, config, rng);

    KMeansResult res;
    res.assignment.resize(n);
    std::vector<int> sizes(static_cast<std::size_t>(K));

    auto assign = [&](std::vector<int>& out) {
        parallel_for(n, config.threads,
                     [&](std::size_t i) { out[i] = nearest_center(points.row(i), centers); });
    };
    auto objective = [&](const std::vector<int>& a) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += squared_distance(points.row(i), centers.row(static_cast<std::size_t>(a[i])));
        return s;
    };

    assign(res.assignment);
    res.wcss.push_back(objective(res.assignment));

    std::vector<int> next(n);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        // Means in point-index order; deterministic reduction.
        std::fill(centers.data().begin(), centers.data().end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = centers.row(static_cast<std::size_t>(res.assignment[i]));
            auto p = points.row(i);
            for (std::size_t d = 0; d < p.size(); ++d) c[d] += p[d];
            ++sizes[static_cast<std::size_t>(res.assignment[i])];
        }
        for (int c = 0; c < K; ++c) {
            if (sizes[static_cast<std::size_t>(c)] == 0) continue;
            auto row = centers.row(static_cast<std::size_t>(c));
            for (double& v : row) v /= sizes[static_cast<std::size_t>(c)];
        }
        // Reseed empties with the farthest point whose donor keeps >= 2 members.
        for (int c = 0; c < K; ++c) {
            if (sizes[static_cast<std::size_t>(c)] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[static_cast<std::size_t>(res.assignment[i])] < 2) continue;
                double d = squared_distance(
                    points.row(i), centers.row(static_cast<std::size_t>(res.assignment[i])));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) continue;  // nothing stealable
            --sizes[static_cast<std::size_t>(res.assignment[far])];
            res.assignment[far] = c;
            sizes[static_cast<std::size_t>(c)] = 1;
            auto src = points.row(far);
            std::copy(src.begin(), src.end(), centers.row(static_cast<std::size_t>(c)).begin());
        }

        res.iterations = iter + 1;
        assign(next);
        res.wcss.push_back(objective(next));
        if (next == res.assignment) break;  // converged
        std::swap(res.assignment, next);
    }
    res.centers = std::move(centers);
    return res;
}

std::vector<ClusterAccuracy> cluster_accuracy(const std::vector<int>& assignment, int K,
                                              const std::vector<int>& point_labels,
                                              int label_count) {
    if (assignment.size() != point_labels.size())
        throw DataError("cluster_accuracy: assignment/label size mismatch");

    std::vector<ClusterAccuracy> out;
    std::vector<std::vector<int>> counts(static_cast<std::size_t>(K),
                                         std::vector<int>(static_cast<std::size_t>(label_count), 0));
    std::vector<int> sizes(static_cast<std::size_t>(K), 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        int c = assignment[i];
        if (c < 0 || c >= K) throw DataError("cluster_accuracy: cluster id out of range");
        ++sizes[static_cast<std::size_t>(c)];
        int label = point_labels[i];
        if (label < 0) continue;
        if (label >= label_count)
            throw DataError("cluster_accuracy: label id out of range");
        ++counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(label)];
    }

    for (int c = 0; c < K; ++c) {
        const auto& hist = counts[static_cast<std::size_t>(c)];
        int labelled = 0, best_label = -1, best_count = 0;
        for (int l = 0; l < label_count; ++l) {
            int v = hist[static_cast<std::size_t>(l)];
            labelled += v;
            if (v > best_count) {  // strict: ties keep the smallest label id
                best_count = v;
                best_label = l;
            }
        }
        if (labelled == 0) continue;
        ClusterAccuracy a;
        a.cluster = c;
        a.size = sizes[static_cast<std::size_t>(c)];
        a.labelled = labelled;
        a.predominant_label = best_label;
        a.t_k = best_count;
        a.acc = static_cast<double>(best_count) / static_cast<double>(labelled);
        a.label_counts = hist;
        out.push_back(std::move(a));
    }
    return out;
}

double a_mean(std::span<const double> accs) {
    if (accs.empty()) throw DataError("a_mean: empty accuracy list");
    double s = 0.0;
    for (double a : accs) s += a;
    return s / static_cast<double>(accs.size());
}

double w_mean(std::span<const double> accs, std::span<const int> t_counts,
              int labelled_total) {
    if (accs.empty() || accs.size() != t_counts.size())
        throw DataError("w_mean: empty or mismatched inputs");
    if (labelled_total <= 0) throw DataError("w_mean: labelled total must be positive");

    const double L = static_cast<double>(labelled_total);
    double num_frac = 0.0, den_frac = 0.0;  // with T_k / L weights, as written
    double num_count = 0.0, den_count = 0.0;  // with raw counts, L cancelled
    for (std::size_t i = 0; i < accs.size(); ++i) {
        double t = static_cast<double>(t_counts[i]);
        num_frac += accs[i] * (t / L);
        den_frac += t / L;
        num_count += accs[i] * t;
        den_count += t;
    }
    if (den_count == 0.0) throw DataError("w_mean: all predominant counts are zero");
    double with_l = num_frac / den_frac;
    double cancelled = num_count / den_count;
    if (std::abs(with_l - cancelled) > 1e-12)
        throw NumericError("w_mean: algebraic forms disagree beyond 1e-12");
    return with_l;
}

ClusterReport evaluate_cep(const EmbeddingModel& model, const LabelMap& labels,
                           const ClusterConfig& config, const std::string& target_relation) {
    config.validate();
    if (labels.labels.empty()) throw DataError("cep: label map is empty");
    const int L = labels.label_count;
    const int K = config.multiplier * L;
    const std::size_t n = labels.labels.size();
    if (n < static_cast<std::size_t>(K))
        throw DataError("cep: " + std::to_string(n) + " labelled entities cannot fill K=" +
                        std::to_string(K) + " clusters");

    Matrix points(n, static_cast<std::size_t>(model.k));
    std::vector<int> point_labels(n);
    std::size_t i = 0;
    for (const auto& [entity, label] : labels.labels) {  // ascending entity id
        if (entity < 0 || static_cast<std::size_t>(entity) >= model.entities.rows())
            throw DataError("cep: model has no vector for entity id " +
                            std::to_string(entity));
        auto src = model.entities.row(static_cast<std::size_t>(entity));
        std::copy(src.begin(), src.end(), points.row(i).begin());
        point_labels[i] = label;
        ++i;
    }

    KMeansResult km = kmeans(points, K, config);
    std::vector<ClusterAccuracy> clusters = cluster_accuracy(km.assignment, K, point_labels, L);

    std::vector<double> accs;
    std::vector<int> ts;
    for (const auto& c : clusters) {
        accs.push_back(c.acc);
        ts.push_back(c.t_k);
    }

    ClusterReport report;
    report.K = K;
    report.N = static_cast<int>(clusters.size());
    report.L = L;
    report.labelled_total = static_cast<int>(n);
    report.clusters = std::move(clusters);
    report.a_mean = a_mean(accs);
    report.w_mean = w_mean(accs, ts, report.labelled_total);
    report.target_relation = target_relation;
    report.label_names = labels.label_names;
    return report;
}

namespace {

std::uint64_t report_config_hash(const ClusterReport& r) {
    Fnv1a h;
    h.update(r.target_relation);
    h.update(r.K);
    h.update(r.L);
    return h.digest();
}

} // namespace

nlohmann::ordered_json cluster_report_json(const ClusterReport& report) {
    nlohmann::ordered_json j;
    j["target_relation"] = report.target_relation;
    j["K"] = report.K;
    j["N"] = report.N;
    j["L"] = report.L;
    j["labelled_total"] = report.labelled_total;
    j["a_mean"] = report.a_mean;
    j["w_mean"] = report.w_mean;
    j["label_names"] = report.label_names;
    nlohmann::ordered_json clusters = nlohmann::ordered_json::array();
    for (const auto& c : report.clusters) {
        nlohmann::ordered_json cj;
        cj["cluster"] = c.cluster;
        cj["size"] = c.size;
        cj["labelled"] = c.labelled;
        cj["predominant_label"] = c.predominant_label;
        if (c.predominant_label >= 0 &&
            static_cast<std::size_t>(c.predominant_label) < report.label_names.size())
            cj["predominant_name"] = report.label_names[static_cast<std::size_t>(c.predominant_label)];
        cj["t_k"] = c.t_k;
        cj["acc"] = c.acc;
        cj["label_counts"] = c.label_counts;
        clusters.push_back(std::move(cj));
    }
    j["clusters"] = clusters;
    return j;
}

std::string cluster_report_csv_header() { return "config_hash,K,N,a_mean,w_mean"; }

std::string cluster_report_csv_row(const ClusterReport& report) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f",
                  hex64(report_config_hash(report)).c_str(), report.K, report.N,
                  report.a_mean, report.w_mean);
    return buf;
}

std::string cluster_histogram_csv(const ClusterReport& report) {
    std::ostringstream out;
    out << "cluster,size,predominant,acc";
    for (const auto& name : report.label_names) out << ',' << name;
    out << '\n';
    for (const auto& c : report.clusters) {
        char acc[32];
        std::snprintf(acc, sizeof acc, "%.6f", c.acc);
        out << c.cluster << ',' << c.size << ','
            << (static_cast<std::size_t>(c.predominant_label) < report.label_names.size()
                    ? report.label_names[static_cast<std::size_t>(c.predominant_label)]
                    : std::to_string(c.predominant_label))
            << ',' << acc;
        for (int v : c.label_counts) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

} // namespace kge
