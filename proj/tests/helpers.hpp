#pragma once
// Shared test utilities: scratch directories, small KG builders, and the
// independent oracles the suites check against. Oracle code here must stay
// decoupled from the library's evaluation paths: it reads model matrices and
// KG contents but does its own scoring, pooling, filtering and aggregation.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kge/kg.hpp"
#include "kge/lp.hpp"
#include "kge/model.hpp"
#include "kge/rng.hpp"

namespace kgetest {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("kge-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline kge::ParsedTriples parse_text(const std::string& text) {
    std::istringstream in(text);
    return kge::parse_triples(in, kge::DictionaryMode::build);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream out;
    out << f.rdbuf();
    return out.str();
}

// KG with every triple in LRN plus chosen evaluation triples; callers keep
// the invariants themselves.
inline kge::KnowledgeGraph kg_from_splits(kge::TypedDictionary dict,
                                          std::vector<kge::Triple> lrn,
                                          std::vector<kge::Triple> vld = {},
                                          std::vector<kge::Triple> tun = {},
                                          std::vector<kge::Triple> tst = {}) {
    kge::KnowledgeGraph kg;
    kg.dict = std::move(dict);
    kg.split(kge::Split::LRN) = std::move(lrn);
    kg.split(kge::Split::VLD) = std::move(vld);
    kg.split(kge::Split::TUN) = std::move(tun);
    kg.split(kge::Split::TST) = std::move(tst);
    return kg;
}

// ---- independent scoring (direct formulas, own loops) ----

inline double oracle_score(const kge::EmbeddingModel& m, const kge::Triple& t) {
    const std::size_t k = static_cast<std::size_t>(m.k);
    double s = 0.0;
    if (m.kind == kge::ModelKind::transE) {
        for (std::size_t i = 0; i < k; ++i) {
            double d = m.entities.row(t.head)[i] + m.relations.row(t.relation)[i] -
                       m.entities.row(t.tail)[i];
            s += d * d;
        }
        return s;
    }
    double wh = 0.0, wt = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        wh += m.normals.row(t.relation)[i] * m.entities.row(t.head)[i];
        wt += m.normals.row(t.relation)[i] * m.entities.row(t.tail)[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
        double hp = m.entities.row(t.head)[i] - wh * m.normals.row(t.relation)[i];
        double tp = m.entities.row(t.tail)[i] - wt * m.normals.row(t.relation)[i];
        double d = hp + m.relations.row(t.relation)[i] - tp;
        s += d * d;
    }
    return s;
}

// ---- exhaustive-enumeration LP oracle ----

struct OracleStats {
    double mrank = 0.0;
    double mrr = 0.0;
    std::map<int, double> hits;
    long count = 0;
};

struct OracleReport {
    OracleStats overall;
    std::map<std::string, OracleStats> per_relation;
    std::vector<int> ranks;  // task order: triple-major, head side before tail
};

inline OracleReport lp_oracle(const kge::EmbeddingModel& m, const kge::KnowledgeGraph& kg,
                              kge::Split split, kge::CandidateScope scope,
                              kge::FilterMode filter, const std::vector<int>& hits_levels) {
    std::vector<kge::Triple> known;
    for (kge::Split s : kge::all_splits)
        for (const kge::Triple& t : kg.split(s)) known.push_back(t);
    auto is_known = [&](const kge::Triple& t) {
        for (const kge::Triple& k : known)
            if (k == t) return true;
        return false;
    };

    OracleReport report;
    struct Sums {
        double rank = 0.0, rr = 0.0;
        std::map<int, long> hit;
        long count = 0;
    };
    Sums overall;
    std::map<std::string, Sums> per_rel;

    for (const kge::Triple& t : kg.split(split)) {
        for (int side = 0; side < 2; ++side) {  // 0 = head, 1 = tail
            const int original = side == 0 ? t.head : t.tail;
            const double true_score = oracle_score(m, t);
            int rank = 1;
            for (int e = 0; e < kg.dict.entity_count(); ++e) {
                if (e == original) continue;
                if (scope == kge::CandidateScope::typed &&
                    kg.dict.entity(e).type_id != kg.dict.entity(original).type_id)
                    continue;
                kge::Triple cand = t;
                (side == 0 ? cand.head : cand.tail) = e;
                if (filter == kge::FilterMode::filtered && is_known(cand)) continue;
                if (oracle_score(m, cand) <= true_score) ++rank;
            }
            report.ranks.push_back(rank);
            const std::string& rel = kg.dict.relation(t.relation).name;
            for (Sums* s : {&overall, &per_rel[rel]}) {
                s->rank += rank;
                s->rr += 1.0 / rank;
                for (int n : hits_levels)
                    if (rank <= n) ++s->hit[n];
                ++s->count;
            }
        }
    }

    auto finish = [&](const Sums& s) {
        OracleStats out;
        out.count = s.count;
        out.mrank = s.rank / static_cast<double>(s.count);
        out.mrr = s.rr / static_cast<double>(s.count);
        for (int n : hits_levels) {
            long c = s.hit.contains(n) ? s.hit.at(n) : 0;
            out.hits[n] = static_cast<double>(c) / static_cast<double>(s.count);
        }
        return out;
    };
    report.overall = finish(overall);
    for (const auto& [name, sums] : per_rel) report.per_relation[name] = finish(sums);
    return report;
}

// ---- random well-formed instances for oracle equivalence ----

struct RandomCase {
    kge::KnowledgeGraph kg;
    kge::EmbeddingModel model;
    kge::CandidateScope scope = kge::CandidateScope::global;
    kge::FilterMode filter = kge::FilterMode::raw;
    kge::Split split = kge::Split::TST;
};

// <= 10 entities, 1-3 types, 1-3 relations, valid typing, LRN covers every
// evaluated entity, at least one triple in the evaluated split.
inline RandomCase random_case(kge::Rng& rng) {
    for (;;) {
        kge::TypedDictionary dict;
        int n_types = 1 + static_cast<int>(rng.below(3));
        for (int t = 0; t < n_types; ++t) dict.add_type("T" + std::to_string(t));
        int n_entities = 4 + static_cast<int>(rng.below(7));
        for (int e = 0; e < n_entities; ++e)
            dict.add_entity("e" + std::to_string(e), static_cast<int>(rng.below(n_types)));
        int n_relations = 1 + static_cast<int>(rng.below(3));
        bool ok = true;
        for (int r = 0; r < n_relations; ++r) {
            int dom = static_cast<int>(rng.below(n_types));
            int rng_t = static_cast<int>(rng.below(n_types));
            if (dict.entities_of_type(dom).empty() || dict.entities_of_type(rng_t).empty()) {
                ok = false;
                break;
            }
            dict.add_relation("r" + std::to_string(r), dom, rng_t);
        }
        if (!ok) continue;

        std::vector<kge::Triple> triples;
        int target = 5 + static_cast<int>(rng.below(11));
        for (int attempt = 0; attempt < 200 && static_cast<int>(triples.size()) < target;
             ++attempt) {
            int r = static_cast<int>(rng.below(n_relations));
            const auto& heads = dict.entities_of_type(dict.relation(r).domain_type);
            const auto& tails = dict.entities_of_type(dict.relation(r).range_type);
            kge::Triple t{heads[rng.below(heads.size())], r, tails[rng.below(tails.size())]};
            if (std::find(triples.begin(), triples.end(), t) == triples.end())
                triples.push_back(t);
        }
        if (triples.size() < 5) continue;

        kge::KnowledgeGraph kg;
        kg.dict = std::move(dict);
        std::vector<char> covered(static_cast<std::size_t>(n_entities), 0);
        for (const kge::Triple& t : triples) {
            kge::Split s = static_cast<kge::Split>(rng.below(4));
            if (!covered[t.head] || !covered[t.tail]) s = kge::Split::LRN;
            if (s == kge::Split::LRN) {
                covered[t.head] = 1;
                covered[t.tail] = 1;
            }
            kg.split(s).push_back(t);
        }

        kge::Split split = static_cast<kge::Split>(1 + rng.below(3));
        if (kg.split(split).empty()) continue;
        kg.validate();

        RandomCase out;
        out.kg = std::move(kg);
        out.split = split;
        out.scope = rng.below(2) == 0 ? kge::CandidateScope::global
                                      : kge::CandidateScope::typed;
        out.filter = rng.below(2) == 0 ? kge::FilterMode::raw : kge::FilterMode::filtered;

        kge::EmbeddingModel& m = out.model;
        m.k = 2 + static_cast<int>(rng.below(4));
        m.kind = rng.below(2) == 0 ? kge::ModelKind::transE : kge::ModelKind::transH;
        m.typed = out.scope == kge::CandidateScope::typed;
        m.entities = kge::Matrix(static_cast<std::size_t>(n_entities),
                                 static_cast<std::size_t>(m.k));
        m.relations = kge::Matrix(static_cast<std::size_t>(n_relations),
                                  static_cast<std::size_t>(m.k));
        for (double& v : m.entities.data()) v = rng.uniform(-1.0, 1.0);
        for (double& v : m.relations.data()) v = rng.uniform(-1.0, 1.0);
        if (m.kind == kge::ModelKind::transH) {
            m.normals = kge::Matrix(static_cast<std::size_t>(n_relations),
                                    static_cast<std::size_t>(m.k));
            for (double& v : m.normals.data()) v = rng.uniform(-1.0, 1.0);
            for (std::size_t i = 0; i < m.normals.rows(); ++i)
                kge::normalize(m.normals.row(i));
        }
        return out;
    }
}

// ---- gradient check harness ----

// Flattened analytic gradient over all parameters, accumulated by row so
// shared rows (uncorrupted side, relation) sum their contributions.
inline std::vector<double> analytic_gradient(const kge::EmbeddingModel& m,
                                             const kge::Triple& pos, const kge::Triple& neg,
                                             double gamma) {
    kge::PairGrads g;
    kge::hinge_pair_grads(m, pos, neg, gamma, g);
    const std::size_t k = static_cast<std::size_t>(m.k);
    const std::size_t ne = m.entities.rows(), nr = m.relations.rows();
    std::vector<double> grad(ne * k + nr * k + m.normals.data().size(), 0.0);
    if (!g.active) return grad;
    auto add_entity = [&](int row, const std::vector<double>& src) {
        for (std::size_t i = 0; i < k; ++i) grad[row * k + i] += src[i];
    };
    add_entity(pos.head, g.pos_head);
    add_entity(pos.tail, g.pos_tail);
    add_entity(neg.head, g.neg_head);
    add_entity(neg.tail, g.neg_tail);
    for (std::size_t i = 0; i < k; ++i)
        grad[ne * k + pos.relation * k + i] += g.relation[i];
    if (m.kind == kge::ModelKind::transH)
        for (std::size_t i = 0; i < k; ++i)
            grad[ne * k + nr * k + pos.relation * k + i] += g.normal[i];
    return grad;
}

inline double hinge_loss_value(const kge::EmbeddingModel& m, const kge::Triple& pos,
                               const kge::Triple& neg, double gamma) {
    double v = gamma + m.score(pos) - m.score(neg);
    return v > 0.0 ? v : 0.0;
}

inline double* model_param_at(kge::EmbeddingModel& m, std::size_t flat) {
    if (flat < m.entities.data().size()) return &m.entities.data()[flat];
    flat -= m.entities.data().size();
    if (flat < m.relations.data().size()) return &m.relations.data()[flat];
    flat -= m.relations.data().size();
    return &m.normals.data()[flat];
}

// Max relative error between the analytic and central-difference gradients
// at one random active point; -1 when the draw landed in the inactive region
// or too close to the hinge kink for finite differences.
inline double gradient_check(kge::ModelKind kind, std::uint64_t seed) {
    kge::Rng rng(seed);
    kge::EmbeddingModel m;
    m.k = 6;
    m.kind = kind;
    m.entities = kge::Matrix(5, 6);
    m.relations = kge::Matrix(2, 6);
    for (double& v : m.entities.data()) v = rng.uniform(-0.8, 0.8);
    for (double& v : m.relations.data()) v = rng.uniform(-0.8, 0.8);
    if (kind == kge::ModelKind::transH) {
        m.normals = kge::Matrix(2, 6);
        for (double& v : m.normals.data()) v = rng.uniform(-1.0, 1.0);
        for (std::size_t r = 0; r < m.normals.rows(); ++r) kge::normalize(m.normals.row(r));
    }
    int rel = static_cast<int>(rng.below(2));
    kge::Triple pos{static_cast<int>(rng.below(5)), rel, static_cast<int>(rng.below(5))};
    kge::Triple neg = pos;
    if (rng.below(2) == 0) neg.head = (pos.head + 1 + static_cast<int>(rng.below(4))) % 5;
    else neg.tail = (pos.tail + 1 + static_cast<int>(rng.below(4))) % 5;

    double gamma = 1.0 + rng.uniform01() * 3.0;
    if (gamma + m.score(pos) - m.score(neg) < 1e-3) return -1.0;

    std::vector<double> analytic = analytic_gradient(m, pos, neg, gamma);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double* p = model_param_at(m, i);
        double saved = *p;
        *p = saved + h;
        double up = hinge_loss_value(m, pos, neg, gamma);
        *p = saved - h;
        double down = hinge_loss_value(m, pos, neg, gamma);
        *p = saved;
        double fd = (up - down) / (2 * h);
        double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1.0});
        worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
    }
    return worst;
}

// ---- definitional correlation oracles ----

inline double pearson_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    double cov = sxy / n - (sx / n) * (sy / n);
    double vx = sxx / n - (sx / n) * (sx / n);
    double vy = syy / n - (sy / n) * (sy / n);
    return cov / std::sqrt(vx * vy);
}

inline std::vector<double> ranks_bruteforce(const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        int less = 0, equal = 0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (x[j] < x[i]) ++less;
            if (x[j] == x[i]) ++equal;
        }
        // average rank of the tie block [less+1, less+equal]
        out[i] = less + (equal + 1) / 2.0;
    }
    return out;
}

} // namespace kgetest
