#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kge/error.hpp"
#include "kge/lp.hpp"

using namespace kge;

TEST_CASE("rank_from_scores counts strictly better plus tied candidates") {
    std::vector<double> others{0.1, 0.5, 0.9};
    CHECK(rank_from_scores(0.2, others) == 2);
    CHECK(rank_from_scores(0.05, others) == 1);
    std::vector<double> tied{0.3, 0.3, 0.3, 0.3};
    CHECK(rank_from_scores(0.3, tied) == 5);  // pessimistic tie handling
    CHECK(rank_from_scores(1.0, {}) == 1);    // pool of one
}

TEST_CASE("rank_from_scores: adding a candidate never decreases the rank") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> others;
        for (int i = 0; i < 8; ++i) others.push_back(rng.uniform(0, 4));
        double true_score = rng.uniform(0, 4);
        int before = rank_from_scores(true_score, others);
        others.push_back(rng.uniform(0, 4));
        CHECK(rank_from_scores(true_score, others) >= before);
    }
}

TEST_CASE("rank_from_scores is invariant under strictly increasing transforms") {
    Rng rng(22);
    auto apply = [](const std::vector<double>& v, auto f) {
        std::vector<double> out;
        for (double x : v) out.push_back(f(x));
        return out;
    };
    for (int trial = 0; trial < 200; ++trial) {
        // integer-grid scores so transforms preserve ties exactly
        std::vector<double> others;
        for (int i = 0; i < 10; ++i) others.push_back(static_cast<double>(rng.below(8)));
        double true_score = static_cast<double>(rng.below(8));
        int baseline = rank_from_scores(true_score, others);

        auto affine = [](double x) { return 2.0 * x + 1.0; };
        auto expish = [](double x) { return std::exp(x); };
        CHECK(rank_from_scores(affine(true_score), apply(others, affine)) == baseline);
        CHECK(rank_from_scores(expish(true_score), apply(others, expish)) == baseline);
    }
}

namespace {

// 5 entities of one type on a line (k=1), relation vector 0: score of
// (h, r, t) is (h - t)^2, so ranks are hand-computable.
struct LineFixture {
    KnowledgeGraph kg;
    EmbeddingModel model;
};

LineFixture line_fixture() {
    LineFixture f;
    int type = f.kg.dict.add_type("T");
    for (int i = 0; i < 5; ++i) f.kg.dict.add_entity("e" + std::to_string(i), type);
    f.kg.dict.add_relation("r", type, type);
    f.kg.split(Split::LRN) = {{3, 0, 0}, {1, 0, 2}};
    f.kg.split(Split::TST) = {{0, 0, 0}, {0, 0, 3}};

    f.model.k = 1;
    f.model.kind = ModelKind::transE;
    f.model.typed = false;
    f.model.entities = Matrix(5, 1);
    f.model.relations = Matrix(1, 1);
    const double values[5] = {0, 1, 2, 3, 10};
    for (int i = 0; i < 5; ++i) f.model.entities.row(i)[0] = values[i];
    return f;
}

} // namespace

TEST_CASE("evaluate_lp aggregates hand-computed ranks") {
    LineFixture f = line_fixture();
    LPConfig cfg;
    cfg.sides = EvalSides::tail;
    cfg.hits_levels = {1, 3, 10};
    cfg.threads = 1;

    // (e0,r,e0): true score 0, no candidate beats or ties it -> rank 1
    // (e0,r,e3): score 9; candidates e0(0), e1(1), e2(4) are lower -> rank 4
    LPReport report = evaluate_lp(f.model, f.kg, Split::TST, cfg);
    CHECK(report.overall.count == 2);
    CHECK(report.overall.mrank == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(report.overall.mrr == doctest::Approx(0.625).epsilon(1e-15));
    CHECK(report.overall.hits.at(1) == doctest::Approx(0.5));
    CHECK(report.overall.hits.at(3) == doctest::Approx(0.5));
    CHECK(report.overall.hits.at(10) == doctest::Approx(1.0));
}

TEST_CASE("a perfect predictor gives mrank 1, mrr 1, full hits") {
    LineFixture f = line_fixture();
    f.kg.split(Split::TST) = {{0, 0, 0}};  // only the self-translation triple
    LPConfig cfg;
    cfg.sides = EvalSides::tail;
    cfg.threads = 1;
    LPReport report = evaluate_lp(f.model, f.kg, Split::TST, cfg);
    CHECK(report.overall.mrank == 1.0);
    CHECK(report.overall.mrr == 1.0);
    CHECK(report.overall.hits.at(10) == 1.0);
}

TEST_CASE("a collapsed model ranks last in its tie group") {
    LineFixture f = line_fixture();
    for (double& v : f.model.entities.data()) v = 0.25;  // constant embedding
    LPConfig cfg;
    cfg.sides = EvalSides::tail;
    cfg.threads = 1;
    int rank = LPEvaluator(f.model, f.kg, cfg).rank_triple(f.kg.split(Split::TST)[0],
                                                           TripleSide::tail);
    CHECK(rank == 5);  // all five candidates tie
}

TEST_CASE("a pool of size one forces rank 1") {
    auto parsed = kgetest::parse_text("a:P\tr\tx:G\nb:P\tr2\ta:P\nb:P\tr\tx:G\n");
    KnowledgeGraph kg = kgetest::kg_from_splits(
        parsed.dict, {parsed.triples[0], parsed.triples[1]}, {}, {}, {parsed.triples[2]});
    kg.validate();
    EmbeddingModel m;
    m.k = 2;
    m.kind = ModelKind::transE;
    m.typed = true;
    m.entities = Matrix(3, 2);
    m.relations = Matrix(2, 2);
    LPConfig cfg;
    cfg.scope = CandidateScope::typed;
    cfg.threads = 1;
    // tail type G has exactly one entity: the true tail itself
    CHECK(LPEvaluator(m, kg, cfg).rank_triple(kg.split(Split::TST)[0], TripleSide::tail) ==
          1);
}

TEST_CASE("typed scope only scores candidates of the replaced side's type") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        kgetest::RandomCase rc = kgetest::random_case(rng);
        LPConfig cfg;
        cfg.scope = CandidateScope::typed;
        cfg.threads = 1;
        LPEvaluator eval(rc.model, rc.kg, cfg);
        const Triple& t = rc.kg.split(rc.split)[0];
        for (TripleSide side : {TripleSide::head, TripleSide::tail}) {
            int original = side == TripleSide::head ? t.head : t.tail;
            for (int e : eval.candidates(t, side))
                CHECK(rc.kg.dict.entity(e).type_id == rc.kg.dict.entity(original).type_id);
        }
    }
}

TEST_CASE("filtered rank never exceeds raw rank") {
    Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        kgetest::RandomCase rc = kgetest::random_case(rng);
        LPConfig raw, filtered;
        raw.scope = filtered.scope = rc.scope;
        raw.filter = FilterMode::raw;
        filtered.filter = FilterMode::filtered;
        raw.threads = filtered.threads = 1;
        LPEvaluator raw_eval(rc.model, rc.kg, raw);
        LPEvaluator flt_eval(rc.model, rc.kg, filtered);
        for (const Triple& t : rc.kg.split(rc.split)) {
            for (TripleSide side : {TripleSide::head, TripleSide::tail})
                CHECK(flt_eval.rank_triple(t, side) <= raw_eval.rank_triple(t, side));
        }
    }
}

TEST_CASE("evaluate_lp equals the exhaustive oracle on random small instances") {
    Rng rng(33);
    for (int trial = 0; trial < 25; ++trial) {
        kgetest::RandomCase rc = kgetest::random_case(rng);
        LPConfig cfg;
        cfg.scope = rc.scope;
        cfg.filter = rc.filter;
        cfg.hits_levels = {1, 2, 3, 10};
        cfg.threads = 1;

        kgetest::OracleReport expected = kgetest::lp_oracle(
            rc.model, rc.kg, rc.split, rc.scope, rc.filter, cfg.hits_levels);
        LPReport actual = evaluate_lp(rc.model, rc.kg, rc.split, cfg);

        LPEvaluator eval(rc.model, rc.kg, cfg);
        std::size_t task = 0;
        for (const Triple& t : rc.kg.split(rc.split)) {
            CHECK(eval.rank_triple(t, TripleSide::head) == expected.ranks[task++]);
            CHECK(eval.rank_triple(t, TripleSide::tail) == expected.ranks[task++]);
        }
        CHECK(actual.overall.count == expected.overall.count);
        CHECK(actual.overall.mrank ==
              doctest::Approx(expected.overall.mrank).epsilon(1e-13));
        CHECK(actual.overall.mrr == doctest::Approx(expected.overall.mrr).epsilon(1e-13));
        for (int n : cfg.hits_levels)
            CHECK(actual.overall.hits.at(n) ==
                  doctest::Approx(expected.overall.hits.at(n)).epsilon(1e-13));
        for (const auto& [rel, stats] : expected.per_relation) {
            REQUIRE(actual.per_relation.contains(rel));
            CHECK(actual.per_relation.at(rel).mrank ==
                  doctest::Approx(stats.mrank).epsilon(1e-13));
        }
    }
}

TEST_CASE("report invariants: hits non-decreasing in N, mrank >= 1, mrr <= 1") {
    Rng rng(34);
    for (int trial = 0; trial < 20; ++trial) {
        kgetest::RandomCase rc = kgetest::random_case(rng);
        LPConfig cfg;
        cfg.scope = rc.scope;
        cfg.hits_levels = {1, 2, 3, 5, 10};
        cfg.threads = 1;
        LPReport report = evaluate_lp(rc.model, rc.kg, rc.split, cfg);
        CHECK(report.overall.mrank >= 1.0);
        CHECK(report.overall.mrr <= 1.0 + 1e-12);
        double prev = 0.0;
        for (const auto& [n, frac] : report.overall.hits) {
            CHECK(frac >= prev);
            prev = frac;
        }
    }
}

TEST_CASE("evaluate_lp is deterministic across thread counts") {
    Rng rng(35);
    kgetest::RandomCase rc = kgetest::random_case(rng);
    LPConfig one, many;
    one.scope = many.scope = rc.scope;
    one.threads = 1;
    many.threads = 4;
    LPReport a = evaluate_lp(rc.model, rc.kg, rc.split, one);
    LPReport b = evaluate_lp(rc.model, rc.kg, rc.split, many);
    CHECK(a.overall.mrank == b.overall.mrank);
    CHECK(a.overall.mrr == b.overall.mrr);
}

TEST_CASE("scope defaults to the model's training hypothesis space") {
    Rng rng(36);
    kgetest::RandomCase rc = kgetest::random_case(rng);
    LPConfig cfg;  // scope unset
    cfg.threads = 1;
    rc.model.typed = true;
    CHECK(LPEvaluator(rc.model, rc.kg, cfg).scope() == CandidateScope::typed);
    rc.model.typed = false;
    CHECK(LPEvaluator(rc.model, rc.kg, cfg).scope() == CandidateScope::global);
}

TEST_CASE("evaluate_lp rejects an empty split and empty hits levels") {
    LineFixture f = line_fixture();
    LPConfig cfg;
    CHECK_THROWS_AS(evaluate_lp(f.model, f.kg, Split::VLD, cfg), DataError);
    cfg.hits_levels.clear();
    CHECK_THROWS_AS(evaluate_lp(f.model, f.kg, Split::TST, cfg), DataError);
}

TEST_CASE("lp report serializes to JSON and a CSV row") {
    LineFixture f = line_fixture();
    LPConfig cfg;
    cfg.sides = EvalSides::tail;
    cfg.threads = 1;
    LPReport report = evaluate_lp(f.model, f.kg, Split::TST, cfg);
    auto j = lp_report_json(report);
    CHECK(j.at("mrank").get<double>() == doctest::Approx(2.5));
    CHECK(j.at("split").get<std::string>() == "TST");
    CHECK(j.at("per_relation").contains("r"));
    std::string row = lp_report_csv_row(report);
    CHECK(row.find("2.500000") != std::string::npos);
    CHECK(row.find("0.625000") != std::string::npos);
}
