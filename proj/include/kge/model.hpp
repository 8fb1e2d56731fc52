#pragma once
// Translational embedding models and their trainer.
//
// Both scores are squared-L2 dissimilarities (0 is perfect):
//   transE   f(h,r,t) = |h + r - t|^2
//   transH   f(h,r,t) = |h_perp + r - t_perp|^2,  x_perp = x - (w.x) w
// with w the relation's unit hyperplane normal.
//
// Training is margin-ranking SGD: for every LRN triple a corrupted
// counterpart is drawn (head or tail replaced, uniform side), and the hinge
// max(0, gamma + f(pos) - f(neg)) is minimised with a constant learning
// rate. Entity rows are clipped back into the unit ball after every epoch;
// normals are renormalised on every touch. Of `replicas` independently
// initialised runs, the one with the best TUN MRR is returned.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kge/kg.hpp"
#include "kge/matrix.hpp"
#include "kge/rng.hpp"

namespace kge {

enum class ModelKind { transE, transH };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(std::string_view name);

struct TrainConfig {
    int k = 32;
    double gamma = 2.0;
    double learning_rate = 0.01;
    int max_epochs = 1000;
    int replicas = 1;
    std::uint64_t seed = 0;
    ModelKind kind = ModelKind::transE;
    bool typed = true;
    int eval_every = 25;  // TUN MRR cadence, 0 disables interim evals
    int threads = 0;      // replica parallelism; 0 = default

    void validate() const;
};

struct EmbeddingModel {
    int k = 0;
    ModelKind kind = ModelKind::transE;
    bool typed = true;
    Matrix entities;   // |E| x k
    Matrix relations;  // |R| x k
    Matrix normals;    // |R| x k, transH only

    double score(const Triple& t) const;
    bool finite() const;
};

// Entries uniform in [-6/sqrt(k), 6/sqrt(k)]; entity rows scaled to unit
// norm, transH normals normalised. Identical replica seeds give identical
// matrices.
EmbeddingModel init_model(const TypedDictionary& dict, const TrainConfig& config,
                          std::uint64_t replica_seed);

double score_transe(const EmbeddingModel& m, const Triple& t);
double score_transh(const EmbeddingModel& m, const Triple& t);

enum class TripleSide { head, tail };

struct CorruptResult {
    Triple triple;
    bool clean = true;  // false: retry budget spent, LRN exclusion not verified
};

// Draws corrupted triples. Owns the type pools and the LRN membership set so
// per-draw work is O(retries).
class NegativeSampler {
public:
    explicit NegativeSampler(const KnowledgeGraph& kg);

    // Pool the replaced entity is drawn from (excluding the original).
    std::size_t pool_size(const Triple& t, TripleSide side, bool typed) const;

    CorruptResult corrupt(const Triple& t, TripleSide side, bool typed, Rng& rng) const;

private:
    const KnowledgeGraph& kg_;
    TripleSet lrn_;
    std::vector<int> all_entities_;
};

// Per-pair hinge gradients, written into caller-owned scratch. `active` is
// false (and gradients zero) when the margin is satisfied.
struct PairGrads {
    bool active = false;
    double loss = 0.0;
    std::vector<double> pos_head, pos_tail; // d loss / d entity row
    std::vector<double> neg_head, neg_tail;
    std::vector<double> relation;
    std::vector<double> normal;             // transH only

    void resize(int k);
};

void hinge_pair_grads(const EmbeddingModel& m, const Triple& pos, const Triple& neg,
                      double gamma, PairGrads& out);

struct EpochStat {
    int epoch = 0;
    double mean_loss = 0.0;
};

struct TunEval {
    int epoch = 0;
    double mrr = 0.0;
};

struct ReplicaLog {
    std::uint64_t replica_seed = 0;
    std::vector<EpochStat> epochs;
    std::vector<TunEval> tun_evals;
    double final_tun_mrr = 0.0;
};

struct TrainLog {
    std::vector<ReplicaLog> replicas;
    int selected_replica = 0;
};

struct TrainResult {
    EmbeddingModel model;
    TrainLog log;
};

// Progress lines go to `progress` when non-null (one line per epoch chunk).
TrainResult train(const KnowledgeGraph& kg, const TrainConfig& config,
                  std::ostream* progress = nullptr);

// ---- persistence ----
// Binary: magic/version header, dims, then row-major little-endian f64
// matrices. A JSON sidecar (<path>.json) stores the TrainConfig and the
// dictionary hash the model was trained against.

void save_model(const EmbeddingModel& m, const TrainConfig& config,
                std::uint64_t dict_hash, const std::filesystem::path& path);

struct LoadedModel {
    EmbeddingModel model;
    TrainConfig config;
    std::uint64_t dict_hash = 0;
};

LoadedModel load_model(const std::filesystem::path& path);

} // namespace kge
