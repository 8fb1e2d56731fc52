#include "kge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "kge/error.hpp"
#include "kge/hashing.hpp"
#include "kge/lp.hpp"
#include "kge/parallel.hpp"

namespace kge {

const char* model_kind_name(ModelKind k) {
    return k == ModelKind::transE ? "transe" : "transh";
}

ModelKind model_kind_from_name(std::string_view name) {
    if (name == "transe") return ModelKind::transE;
    if (name == "transh") return ModelKind::transH;
    throw DataError("unknown model kind `" + std::string(name) + "` (transe|transh)");
}

void TrainConfig::validate() const {
    if (k < 1) throw DataError("train: k must be positive");
    if (gamma <= 0.0) throw DataError("train: gamma must be positive");
    if (learning_rate <= 0.0) throw DataError("train: learning rate must be positive");
    if (max_epochs < 1) throw DataError("train: max epochs must be positive");
    if (replicas < 1) throw DataError("train: replicas must be >= 1");
    if (eval_every < 0) throw DataError("train: eval cadence must be >= 0");
}

double EmbeddingModel::score(const Triple& t) const {
    return kind == ModelKind::transE ? score_transe(*this, t) : score_transh(*this, t);
}

bool EmbeddingModel::finite() const {
    auto ok = [](const Matrix& m) {
        for (double v : m.data())
            if (!std::isfinite(v)) return false;
        return true;
    };
    return ok(entities) && ok(relations) && ok(normals);
}

EmbeddingModel init_model(const TypedDictionary& dict, const TrainConfig& config,
                          std::uint64_t replica_seed) {
    config.validate();
    EmbeddingModel m;
    m.k = config.k;
    m.kind = config.kind;
    m.typed = config.typed;
    const std::size_t k = static_cast<std::size_t>(config.k);
    m.entities = Matrix(static_cast<std::size_t>(dict.entity_count()), k);
    m.relations = Matrix(static_cast<std::size_t>(dict.relation_count()), k);

    Rng rng(mix_seed(replica_seed, 0));
    const double bound = 6.0 / std::sqrt(static_cast<double>(config.k));
    for (double& v : m.entities.data()) v = rng.uniform(-bound, bound);
    for (double& v : m.relations.data()) v = rng.uniform(-bound, bound);
    for (std::size_t i = 0; i < m.entities.rows(); ++i) normalize(m.entities.row(i));
    if (config.kind == ModelKind::transH) {
        m.normals = Matrix(static_cast<std::size_t>(dict.relation_count()), k);
        for (double& v : m.normals.data()) v = rng.uniform(-bound, bound);
        for (std::size_t i = 0; i < m.normals.rows(); ++i) normalize(m.normals.row(i));
    }
    return m;
}

double score_transe(const EmbeddingModel& m, const Triple& t) {
    auto h = m.entities.row(static_cast<std::size_t>(t.head));
    auto r = m.relations.row(static_cast<std::size_t>(t.relation));
    auto tl = m.entities.row(static_cast<std::size_t>(t.tail));
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        double d = h[i] + r[i] - tl[i];
        s += d * d;
    }
    return s;
}

double score_transh(const EmbeddingModel& m, const Triple& t) {
    auto h = m.entities.row(static_cast<std::size_t>(t.head));
    auto r = m.relations.row(static_cast<std::size_t>(t.relation));
    auto tl = m.entities.row(static_cast<std::size_t>(t.tail));
    auto w = m.normals.row(static_cast<std::size_t>(t.relation));
    double wh = dot(w, h);
    double wt = dot(w, tl);
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        double hp = h[i] - wh * w[i];
        double tp = tl[i] - wt * w[i];
        double d = hp + r[i] - tp;
        s += d * d;
    }
    return s;
}

NegativeSampler::NegativeSampler(const KnowledgeGraph& kg) : kg_(kg) {
    const auto& lrn = kg.split(Split::LRN);
    lrn_.reserve(lrn.size() * 2);
    for (const Triple& t : lrn) lrn_.insert(t);
    all_entities_.resize(static_cast<std::size_t>(kg.dict.entity_count()));
    for (int e = 0; e < kg.dict.entity_count(); ++e)
        all_entities_[static_cast<std::size_t>(e)] = e;
}

std::size_t NegativeSampler::pool_size(const Triple& t, TripleSide side, bool typed) const {
    if (!typed) return all_entities_.size() - 1;
    int original = side == TripleSide::head ? t.head : t.tail;
    int type = kg_.dict.entity(original).type_id;
    return kg_.dict.entities_of_type(type).size() - 1;
}

CorruptResult NegativeSampler::corrupt(const Triple& t, TripleSide side, bool typed,
                                       Rng& rng) const {
    const int original = side == TripleSide::head ? t.head : t.tail;
    const std::vector<int>& pool =
        typed ? kg_.dict.entities_of_type(kg_.dict.entity(original).type_id)
              : all_entities_;
    if (pool.size() < 2)
        throw DataError("corrupt_triple: no replacement candidates for entity `" +
                        kg_.dict.entity(original).name + "`");

    constexpr int kMaxLrnRetries = 32;
    Triple candidate = t;
    for (int attempt = 0;; ++attempt) {
        // Uniform over pool minus the original: draw from the first size-1
        // slots and remap a hit on the original to the last slot.
        std::size_t j = static_cast<std::size_t>(rng.below(pool.size() - 1));
        int replacement = pool[j] == original ? pool.back() : pool[j];
        (side == TripleSide::head ? candidate.head : candidate.tail) = replacement;
        if (!lrn_.contains(candidate)) return {candidate, true};
        if (attempt >= kMaxLrnRetries) return {candidate, false};
    }
}

void PairGrads::resize(int k) {
    const std::size_t n = static_cast<std::size_t>(k);
    pos_head.assign(n, 0.0);
    pos_tail.assign(n, 0.0);
    neg_head.assign(n, 0.0);
    neg_tail.assign(n, 0.0);
    relation.assign(n, 0.0);
    normal.assign(n, 0.0);
}

namespace {

// d = (h - t) - (w.(h - t)) w + r for transH; d = h + r - t for transE.
void score_residual(const EmbeddingModel& m, const Triple& t, std::span<double> d) {
    auto h = m.entities.row(static_cast<std::size_t>(t.head));
    auto r = m.relations.row(static_cast<std::size_t>(t.relation));
    auto tl = m.entities.row(static_cast<std::size_t>(t.tail));
    if (m.kind == ModelKind::transE) {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = h[i] + r[i] - tl[i];
        return;
    }
    auto w = m.normals.row(static_cast<std::size_t>(t.relation));
    double alpha = dot(w, h) - dot(w, tl);
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = (h[i] - tl[i]) - alpha * w[i] + r[i];
}

} // namespace

void hinge_pair_grads(const EmbeddingModel& m, const Triple& pos, const Triple& neg,
                      double gamma, PairGrads& out) {
    const std::size_t k = static_cast<std::size_t>(m.k);
    out.resize(m.k);

    std::vector<double> dp(k), dn(k);
    score_residual(m, pos, dp);
    score_residual(m, neg, dn);
    double f_pos = squared_l2(dp);
    double f_neg = squared_l2(dn);
    double loss = gamma + f_pos - f_neg;
    if (loss <= 0.0) {
        out.active = false;
        out.loss = 0.0;
        return;
    }
    out.active = true;
    out.loss = loss;

    if (m.kind == ModelKind::transE) {
        for (std::size_t i = 0; i < k; ++i) {
            out.pos_head[i] = 2.0 * dp[i];
            out.pos_tail[i] = -2.0 * dp[i];
            out.neg_head[i] = -2.0 * dn[i];
            out.neg_tail[i] = 2.0 * dn[i];
            out.relation[i] = 2.0 * (dp[i] - dn[i]);
        }
        return;
    }

    auto w = m.normals.row(static_cast<std::size_t>(pos.relation));
    auto hp = m.entities.row(static_cast<std::size_t>(pos.head));
    auto tp = m.entities.row(static_cast<std::size_t>(pos.tail));
    auto hn = m.entities.row(static_cast<std::size_t>(neg.head));
    auto tn = m.entities.row(static_cast<std::size_t>(neg.tail));

    // Entity gradient lives in the hyperplane: 2 (I - w w^T) d.
    double wdp = dot(w, dp);
    double wdn = dot(w, dn);
    for (std::size_t i = 0; i < k; ++i) {
        double gp = 2.0 * (dp[i] - wdp * w[i]);
        double gn = 2.0 * (dn[i] - wdn * w[i]);
        out.pos_head[i] = gp;
        out.pos_tail[i] = -gp;
        out.neg_head[i] = -gn;
        out.neg_tail[i] = gn;
        out.relation[i] = 2.0 * (dp[i] - dn[i]);
    }
    // d f / d w = -2 [ (d.w) u + (w.u) d ],  u = h - t  (unconstrained; the
    // unit-norm constraint is reimposed after the update).
    double alpha_p = dot(w, hp) - dot(w, tp);
    double alpha_n = dot(w, hn) - dot(w, tn);
    for (std::size_t i = 0; i < k; ++i) {
        double up = hp[i] - tp[i];
        double un = hn[i] - tn[i];
        out.normal[i] = -2.0 * (wdp * up + alpha_p * dp[i]) +
                        2.0 * (wdn * un + alpha_n * dn[i]);
    }
}

namespace {

void axpy(std::span<double> row, std::span<const double> grad, double scale) {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] += scale * grad[i];
}

struct ReplicaOutcome {
    EmbeddingModel model;
    ReplicaLog log;
};

ReplicaOutcome run_replica(const KnowledgeGraph& kg, const TrainConfig& cfg,
                           const NegativeSampler& sampler, std::uint64_t replica_seed,
                           int replica_index, std::ostream* progress, std::mutex* io_mutex) {
    const auto& lrn = kg.split(Split::LRN);
    ReplicaOutcome out;
    out.model = init_model(kg.dict, cfg, replica_seed);
    out.log.replica_seed = replica_seed;

    EmbeddingModel& m = out.model;
    Rng rng(mix_seed(replica_seed, 1));
    std::vector<std::size_t> order(lrn.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    LPConfig tun_cfg;
    tun_cfg.hits_levels = {10};
    tun_cfg.threads = 1;
    auto tun_mrr = [&] { return evaluate_lp(m, kg, Split::TUN, tun_cfg).overall.mrr; };

    PairGrads g;
    g.resize(cfg.k);
    const double lr = cfg.learning_rate;
    const int log_stride = std::max(1, cfg.max_epochs / 10);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const Triple& pos = lrn[idx];
            TripleSide side = rng.below(2) == 0 ? TripleSide::head : TripleSide::tail;
            if (sampler.pool_size(pos, side, cfg.typed) == 0) {
                side = side == TripleSide::head ? TripleSide::tail : TripleSide::head;
                if (sampler.pool_size(pos, side, cfg.typed) == 0)
                    throw DataError("train: neither side of a triple has corruption "
                                    "candidates (single-entity types on both sides)");
            }
            Triple neg = sampler.corrupt(pos, side, cfg.typed, rng).triple;

            hinge_pair_grads(m, pos, neg, cfg.gamma, g);
            if (!g.active) continue;
            loss_sum += g.loss;

            axpy(m.entities.row(static_cast<std::size_t>(pos.head)), g.pos_head, -lr);
            axpy(m.entities.row(static_cast<std::size_t>(pos.tail)), g.pos_tail, -lr);
            axpy(m.entities.row(static_cast<std::size_t>(neg.head)), g.neg_head, -lr);
            axpy(m.entities.row(static_cast<std::size_t>(neg.tail)), g.neg_tail, -lr);
            axpy(m.relations.row(static_cast<std::size_t>(pos.relation)), g.relation, -lr);
            if (m.kind == ModelKind::transH) {
                auto w = m.normals.row(static_cast<std::size_t>(pos.relation));
                axpy(w, g.normal, -lr);
                normalize(w);
            }
        }
        double mean_loss = loss_sum / static_cast<double>(lrn.size());
        if (!std::isfinite(mean_loss))
            throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                               " (learning rate " + std::to_string(lr) + " too high?)");
        for (std::size_t e = 0; e < m.entities.rows(); ++e)
            clip_to_unit_ball(m.entities.row(e));
        out.log.epochs.push_back({epoch + 1, mean_loss});

        bool last = epoch + 1 == cfg.max_epochs;
        if (cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || last)) {
            double mrr = tun_mrr();
            out.log.tun_evals.push_back({epoch + 1, mrr});
            if (last) out.log.final_tun_mrr = mrr;
        } else if (last) {
            out.log.final_tun_mrr = tun_mrr();
        }
        if (progress && ((epoch + 1) % log_stride == 0 || last)) {
            std::lock_guard<std::mutex> lock(*io_mutex);
            *progress << "replica " << replica_index << " epoch " << epoch + 1 << "/"
                      << cfg.max_epochs << " mean_loss " << mean_loss;
            if (!out.log.tun_evals.empty() &&
                out.log.tun_evals.back().epoch == epoch + 1)
                *progress << " tun_mrr " << out.log.tun_evals.back().mrr;
            *progress << '\n';
        }
    }
    if (!m.finite()) throw NumericError("train: non-finite parameters after training");
    return out;
}

} // namespace

TrainResult train(const KnowledgeGraph& kg, const TrainConfig& config,
                  std::ostream* progress) {
    config.validate();
    if (kg.split(Split::LRN).empty()) throw DataError("train: LRN split is empty");
    if (kg.split(Split::TUN).empty()) throw DataError("train: TUN split is empty");

    NegativeSampler sampler(kg);
    const int n = config.replicas;
    std::vector<ReplicaOutcome> outcomes(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::mutex io_mutex;

    int workers = std::min(resolve_threads(config.threads), n);
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
        try {
            outcomes[i] = run_replica(kg, config, sampler, config.seed + i,
                                      static_cast<int>(i), progress, &io_mutex);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Best TUN MRR wins; ties go to the lowest replica index.
    int best = 0;
    for (int i = 1; i < n; ++i) {
        if (outcomes[static_cast<std::size_t>(i)].log.final_tun_mrr >
            outcomes[static_cast<std::size_t>(best)].log.final_tun_mrr)
            best = i;
    }

    TrainResult result;
    result.model = std::move(outcomes[static_cast<std::size_t>(best)].model);
    result.log.selected_replica = best;
    for (auto& o : outcomes) result.log.replicas.push_back(std::move(o.log));
    return result;
}

namespace {

constexpr char kModelMagic[4] = {'K', 'G', 'E', 'M'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

nlohmann::ordered_json config_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["k"] = c.k;
    j["gamma"] = c.gamma;
    j["learning_rate"] = c.learning_rate;
    j["max_epochs"] = c.max_epochs;
    j["replicas"] = c.replicas;
    j["seed"] = c.seed;
    j["kind"] = model_kind_name(c.kind);
    j["typed"] = c.typed;
    j["eval_every"] = c.eval_every;
    return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.k = j.at("k").get<int>();
    c.gamma = j.at("gamma").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.replicas = j.at("replicas").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.kind = model_kind_from_name(j.at("kind").get<std::string>());
    c.typed = j.at("typed").get<bool>();
    c.eval_every = j.value("eval_every", 25);
    return c;
}

} // namespace

void save_model(const EmbeddingModel& m, const TrainConfig& config,
                std::uint64_t dict_hash, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kModelMagic, 4);
    write_raw(out, kModelVersion);
    write_raw(out, static_cast<std::uint8_t>(m.kind));
    write_raw(out, static_cast<std::uint8_t>(m.typed ? 1 : 0));
    write_raw(out, static_cast<std::uint16_t>(0));
    write_raw(out, static_cast<std::uint32_t>(m.k));
    write_raw(out, static_cast<std::uint64_t>(m.entities.rows()));
    write_raw(out, static_cast<std::uint64_t>(m.relations.rows()));
    auto write_matrix = [&](const Matrix& mat) {
        out.write(reinterpret_cast<const char*>(mat.data().data()),
                  static_cast<std::streamsize>(mat.data().size() * sizeof(double)));
    };
    write_matrix(m.entities);
    write_matrix(m.relations);
    if (m.kind == ModelKind::transH) write_matrix(m.normals);
    if (!out) throw DataError("short write to " + path.string());

    nlohmann::ordered_json sidecar;
    sidecar["config"] = config_json(config);
    sidecar["dictionary_hash"] = hex64(dict_hash);
    std::ofstream jf(path.string() + ".json");
    if (!jf) throw DataError("cannot write " + path.string() + ".json");
    jf << sidecar.dump(2) << '\n';
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
        throw DataError(path.string() + ": not a model file");
    auto version = read_raw<std::uint32_t>(in);
    if (version != kModelVersion)
        throw DataError(path.string() + ": unsupported model version " +
                        std::to_string(version));
    auto kind = static_cast<ModelKind>(read_raw<std::uint8_t>(in));
    bool typed = read_raw<std::uint8_t>(in) != 0;
    read_raw<std::uint16_t>(in);
    auto k = read_raw<std::uint32_t>(in);
    auto num_entities = read_raw<std::uint64_t>(in);
    auto num_relations = read_raw<std::uint64_t>(in);
    if (!in) throw DataError(path.string() + ": truncated header");

    LoadedModel loaded;
    EmbeddingModel& m = loaded.model;
    m.k = static_cast<int>(k);
    m.kind = kind;
    m.typed = typed;
    auto read_matrix = [&](std::size_t rows) {
        Matrix mat(rows, k);
        in.read(reinterpret_cast<char*>(mat.data().data()),
                static_cast<std::streamsize>(mat.data().size() * sizeof(double)));
        if (!in) throw DataError(path.string() + ": truncated matrix data");
        return mat;
    };
    m.entities = read_matrix(num_entities);
    m.relations = read_matrix(num_relations);
    if (kind == ModelKind::transH) m.normals = read_matrix(num_relations);

    std::ifstream jf(path.string() + ".json");
    if (!jf) throw DataError("cannot read " + path.string() + ".json");
    nlohmann::json sidecar = nlohmann::json::parse(jf, nullptr, true, true);
    loaded.config = config_from_json(sidecar.at("config"));
    loaded.dict_hash =
        std::stoull(sidecar.at("dictionary_hash").get<std::string>(), nullptr, 16);
    return loaded;
}

} // namespace kge
