#pragma once
// Link Prediction evaluation.
//
// Each evaluated triple is ranked against corrupted candidates on the chosen
// side(s). Rank counts strictly better candidates plus every tied one: a
// constant model ranks last within its tie group, never first.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kge/kg.hpp"
#include "kge/model.hpp"

namespace kge {

enum class CandidateScope { global, typed };
enum class FilterMode { raw, filtered };
enum class EvalSides { head, tail, both };

struct LPConfig {
    // nullopt: typed when the model was trained typed, global otherwise.
    std::optional<CandidateScope> scope;
    FilterMode filter = FilterMode::raw;
    EvalSides sides = EvalSides::both;
    std::vector<int> hits_levels{10};
    int threads = 0;

    void validate() const;
};

struct LPStats {
    double mrank = 0.0;
    double mrr = 0.0;
    std::map<int, double> hits;  // N -> fraction of ranks <= N
    std::int64_t count = 0;      // ranks aggregated
};

struct LPReport {
    LPStats overall;
    std::map<std::string, LPStats> per_relation;
    std::string split;
    CandidateScope scope = CandidateScope::global;
    FilterMode filter = FilterMode::raw;
    EvalSides sides = EvalSides::both;
};

// Pessimistic rank of `true_score` against other candidates' scores:
// 1 + #(strictly lower) + #(tied).
int rank_from_scores(double true_score, std::span<const double> other_scores);

// Precomputes candidate pools and (in filtered mode) the known-triple set.
class LPEvaluator {
public:
    LPEvaluator(const EmbeddingModel& model, const KnowledgeGraph& kg, LPConfig config);

    int rank_triple(const Triple& t, TripleSide side) const;
    LPReport evaluate(Split split) const;

    CandidateScope scope() const { return scope_; }
    std::span<const int> candidates(const Triple& t, TripleSide side) const;

private:
    const EmbeddingModel& model_;
    const KnowledgeGraph& kg_;
    LPConfig config_;
    CandidateScope scope_;
    std::vector<int> all_entities_;
    TripleSet known_;  // filtered mode only
};

int rank_triple(const EmbeddingModel& model, const KnowledgeGraph& kg, const Triple& t,
                TripleSide side, const LPConfig& config);

LPReport evaluate_lp(const EmbeddingModel& model, const KnowledgeGraph& kg, Split split,
                     const LPConfig& config);

nlohmann::ordered_json lp_report_json(const LPReport& report);

// One CSV line: config hash, mrank, mrr, hits@10.
std::string lp_report_csv_header();
std::string lp_report_csv_row(const LPReport& report);

} // namespace kge
