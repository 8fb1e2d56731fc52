#include "kge/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kge/error.hpp"
#include "kge/hashing.hpp"
#include "kge/parallel.hpp"

namespace kge {

namespace {

const char* scope_name(CandidateScope s) {
    return s == CandidateScope::global ? "global" : "typed";
}

const char* filter_name(FilterMode f) { return f == FilterMode::raw ? "raw" : "filtered"; }

const char* sides_name(EvalSides s) {
    switch (s) {
        case EvalSides::head: return "head";
        case EvalSides::tail: return "tail";
        default: return "both";
    }
}

} // namespace

void LPConfig::validate() const {
    if (hits_levels.empty()) throw DataError("lp: hits levels must be nonempty");
    for (int n : hits_levels)
        if (n < 1) throw DataError("lp: hits level must be >= 1");
}

int rank_from_scores(double true_score, std::span<const double> other_scores) {
    int rank = 1;
    for (double s : other_scores) {
        if (s <= true_score) ++rank;  // strictly better or tied, both count
    }
    return rank;
}

LPEvaluator::LPEvaluator(const EmbeddingModel& model, const KnowledgeGraph& kg,
                         LPConfig config)
    : model_(model), kg_(kg), config_(std::move(config)) {
    config_.validate();
    scope_ = config_.scope.value_or(model.typed ? CandidateScope::typed
                                                : CandidateScope::global);
    all_entities_.resize(static_cast<std::size_t>(kg.dict.entity_count()));
    for (int e = 0; e < kg.dict.entity_count(); ++e)
        all_entities_[static_cast<std::size_t>(e)] = e;
    if (config_.filter == FilterMode::filtered) {
        for (Split s : all_splits)
            for (const Triple& t : kg.split(s)) known_.insert(t);
    }
}

std::span<const int> LPEvaluator::candidates(const Triple& t, TripleSide side) const {
    if (scope_ == CandidateScope::global) return all_entities_;
    int original = side == TripleSide::head ? t.head : t.tail;
    return kg_.dict.entities_of_type(kg_.dict.entity(original).type_id);
}

int LPEvaluator::rank_triple(const Triple& t, TripleSide side) const {
    std::span<const int> pool = candidates(t, side);
    if (pool.empty()) throw DataError("lp: empty candidate pool");

    const int original = side == TripleSide::head ? t.head : t.tail;
    const double true_score = model_.score(t);
    int rank = 1;
    Triple candidate = t;
    for (int e : pool) {
        if (e == original) continue;
        (side == TripleSide::head ? candidate.head : candidate.tail) = e;
        if (config_.filter == FilterMode::filtered && known_.contains(candidate)) continue;
        if (model_.score(candidate) <= true_score) ++rank;
    }
    return rank;
}

LPReport LPEvaluator::evaluate(Split split) const {
    const auto& triples = kg_.split(split);
    if (triples.empty())
        throw DataError(std::string("lp: split ") + split_name(split) + " is empty");

    std::vector<TripleSide> sides;
    if (config_.sides != EvalSides::tail) sides.push_back(TripleSide::head);
    if (config_.sides != EvalSides::head) sides.push_back(TripleSide::tail);

    const std::size_t per_triple = sides.size();
    std::vector<int> ranks(triples.size() * per_triple);
    parallel_for(ranks.size(), config_.threads, [&](std::size_t i) {
        const Triple& t = triples[i / per_triple];
        ranks[i] = rank_triple(t, sides[i % per_triple]);
    });

    // Fixed-order reduction: sums run in task index order whatever the
    // worker count was.
    struct Accum {
        double rank_sum = 0.0, rr_sum = 0.0;
        std::map<int, std::int64_t> hits;
        std::int64_t count = 0;
    };
    auto add = [&](Accum& a, int rank) {
        a.rank_sum += rank;
        a.rr_sum += 1.0 / rank;
        for (int n : config_.hits_levels)
            if (rank <= n) ++a.hits[n];
        ++a.count;
    };
    auto finish = [&](const Accum& a) {
        LPStats s;
        s.count = a.count;
        s.mrank = a.rank_sum / static_cast<double>(a.count);
        s.mrr = a.rr_sum / static_cast<double>(a.count);
        for (int n : config_.hits_levels) {
            auto it = a.hits.find(n);
            std::int64_t c = it == a.hits.end() ? 0 : it->second;
            s.hits[n] = static_cast<double>(c) / static_cast<double>(a.count);
        }
        return s;
    };

    Accum overall;
    std::map<std::string, Accum> per_relation;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        const Triple& t = triples[i / per_triple];
        add(overall, ranks[i]);
        add(per_relation[kg_.dict.relation(t.relation).name], ranks[i]);
    }

    LPReport report;
    report.overall = finish(overall);
    for (const auto& [name, acc] : per_relation) report.per_relation[name] = finish(acc);
    report.split = split_name(split);
    report.scope = scope_;
    report.filter = config_.filter;
    report.sides = config_.sides;
    return report;
}

int rank_triple(const EmbeddingModel& model, const KnowledgeGraph& kg, const Triple& t,
                TripleSide side, const LPConfig& config) {
    return LPEvaluator(model, kg, config).rank_triple(t, side);
}

LPReport evaluate_lp(const EmbeddingModel& model, const KnowledgeGraph& kg, Split split,
                     const LPConfig& config) {
    return LPEvaluator(model, kg, config).evaluate(split);
}

namespace {

nlohmann::ordered_json stats_json(const LPStats& s) {
    nlohmann::ordered_json j;
    j["mrank"] = s.mrank;
    j["mrr"] = s.mrr;
    nlohmann::ordered_json hits;
    for (const auto& [n, frac] : s.hits) hits[std::to_string(n)] = frac;
    j["hits"] = hits;
    j["count"] = s.count;
    return j;
}

std::uint64_t report_config_hash(const LPReport& r) {
    Fnv1a h;
    h.update(r.split);
    h.update(scope_name(r.scope));
    h.update(filter_name(r.filter));
    h.update(sides_name(r.sides));
    for (const auto& [n, _] : r.overall.hits) h.update(n);
    return h.digest();
}

} // namespace

nlohmann::ordered_json lp_report_json(const LPReport& report) {
    nlohmann::ordered_json j;
    j["split"] = report.split;
    j["scope"] = scope_name(report.scope);
    j["filter"] = filter_name(report.filter);
    j["sides"] = sides_name(report.sides);
    j["evaluated_count"] = report.overall.count;
    j["mrank"] = report.overall.mrank;
    j["mrr"] = report.overall.mrr;
    nlohmann::ordered_json hits;
    for (const auto& [n, frac] : report.overall.hits) hits[std::to_string(n)] = frac;
    j["hits"] = hits;
    nlohmann::ordered_json per_rel;
    for (const auto& [name, stats] : report.per_relation) per_rel[name] = stats_json(stats);
    j["per_relation"] = per_rel;
    return j;
}

std::string lp_report_csv_header() { return "config_hash,mrank,mrr,hits10"; }

std::string lp_report_csv_row(const LPReport& report) {
    const auto& hits = report.overall.hits;
    auto it = hits.find(10);
    double h10 = it != hits.end() ? it->second : hits.begin()->second;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f",
                  hex64(report_config_hash(report)).c_str(), report.overall.mrank,
                  report.overall.mrr, h10);
    return buf;
}

} // namespace kge
