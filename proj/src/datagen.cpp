#include "kge/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "kge/error.hpp"
#include "kge/rng.hpp"

namespace kge {

namespace {

const std::array<const char*, 3> kOntologyLevels{"PGroup", "PSubgroup", "POrgForm"};

std::string level_name(int level) {
    if (level < 3) return kOntologyLevels[static_cast<std::size_t>(level)];
    return "PLevel" + std::to_string(level + 1);
}

std::string numbered(const std::string& prefix, int i, int width) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix.c_str(), width, i);
    return buf;
}

// Exact total of llround(density * subjects): every subject gets
// floor(density) partners and the first `extra` subjects one more.
std::vector<int> partner_counts(int subjects, double density) {
    long long total = std::llround(density * subjects);
    int base = static_cast<int>(total / subjects);
    int extra = static_cast<int>(total - static_cast<long long>(base) * subjects);
    std::vector<int> counts(static_cast<std::size_t>(subjects), base);
    for (int i = 0; i < extra; ++i) ++counts[static_cast<std::size_t>(i)];
    return counts;
}

// Draw `count` distinct partners; biased towards `pool` with probability
// 1 - noise. Falls back to an ascending scan when rejection stalls.
std::vector<int> draw_partners(const std::vector<int>& pool, const std::vector<int>& all,
                               int count, double noise, Rng& rng,
                               std::vector<char>& used_scratch) {
    std::fill(used_scratch.begin(), used_scratch.end(), 0);
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        int picked = -1;
        for (int attempt = 0; attempt < 64; ++attempt) {
            const std::vector<int>& src = rng.uniform01() < noise ? all : pool;
            int cand = src[static_cast<std::size_t>(rng.below(src.size()))];
            if (!used_scratch[static_cast<std::size_t>(cand)]) {
                picked = cand;
                break;
            }
        }
        if (picked < 0) {
            for (int cand : all) {
                if (!used_scratch[static_cast<std::size_t>(cand)]) {
                    picked = cand;
                    break;
                }
            }
        }
        if (picked < 0) throw DataError("datagen: not enough distinct partners");
        used_scratch[static_cast<std::size_t>(picked)] = 1;
        chosen.push_back(picked);
    }
    return chosen;
}

} // namespace

const char* shape_name(Shape s) {
    return s == Shape::ontology_like ? "ontology-like" : "ehr-like";
}

Shape shape_from_name(std::string_view name) {
    if (name == "ontology-like" || name == "ontology") return Shape::ontology_like;
    if (name == "ehr-like" || name == "ehr") return Shape::ehr_like;
    throw DataError("unknown shape `" + std::string(name) + "` (ontology|ehr)");
}

ShapeSpec ShapeSpec::ontology_defaults() {
    ShapeSpec s;
    s.shape = Shape::ontology_like;
    s.subjects = 500;
    s.partners = 48;
    s.hierarchy_depth = 3;
    s.label_cardinalities = {8, 59, 118};
    s.many_to_many_density = 2.0;
    return s;
}

ShapeSpec ShapeSpec::ehr_defaults() {
    ShapeSpec s;
    s.shape = Shape::ehr_like;
    s.subjects = 300;
    s.partners = 60;
    s.hierarchy_depth = 0;
    s.label_cardinalities = {2, 6};
    s.many_to_many_density = 6.0;
    return s;
}

ShapeSpec ShapeSpec::defaults(Shape shape) {
    return shape == Shape::ontology_like ? ontology_defaults() : ehr_defaults();
}

void ShapeSpec::validate() const {
    if (subjects < 1) throw DataError("datagen: subjects must be >= 1");
    if (many_to_many_density < 0.0) throw DataError("datagen: density must be >= 0");
    if (noise_rate < 0.0 || noise_rate >= 1.0)
        throw DataError("datagen: noise rate must be in [0, 1)");
    if (shape == Shape::ontology_like) {
        if (hierarchy_depth < 1) throw DataError("datagen: hierarchy depth must be >= 1");
        if (static_cast<int>(label_cardinalities.size()) != hierarchy_depth)
            throw DataError("datagen: need one cardinality per hierarchy level");
    } else {
        if (label_cardinalities.size() != 2)
            throw DataError("datagen: ehr shape takes exactly 2 cardinalities (flag, stage)");
    }
    for (int c : label_cardinalities) {
        if (c < 1) throw DataError("datagen: cardinalities must be >= 1");
        if (c > subjects)
            throw DataError("datagen: cardinality " + std::to_string(c) +
                            " exceeds subject count " + std::to_string(subjects));
    }
    if (many_to_many_density > 0.0) {
        if (partners < 1) throw DataError("datagen: partners must be >= 1 with density > 0");
        int bias_classes = shape == Shape::ontology_like
                               ? label_cardinalities.front()
                               : label_cardinalities.back();
        if (partners < bias_classes)
            throw DataError("datagen: need at least one partner per class for the bias pools");
        int per_subject =
            static_cast<int>(std::llround(many_to_many_density * subjects) / subjects) + 1;
        if (per_subject > partners)
            throw DataError("datagen: density requires more distinct partners than exist");
    }
}

nlohmann::ordered_json ShapeSpec::to_json() const {
    nlohmann::ordered_json j;
    j["shape"] = shape_name(shape);
    j["subjects"] = subjects;
    j["partners"] = partners;
    j["hierarchy_depth"] = hierarchy_depth;
    j["label_cardinalities"] = label_cardinalities;
    j["many_to_many_density"] = many_to_many_density;
    j["noise_rate"] = noise_rate;
    j["seed"] = seed;
    j["split_ratios"] = split_ratios;
    return j;
}

ShapeSpec ShapeSpec::from_json(const nlohmann::json& j) {
    ShapeSpec s = defaults(shape_from_name(j.at("shape").get<std::string>()));
    s.subjects = j.value("subjects", s.subjects);
    s.partners = j.value("partners", s.partners);
    s.hierarchy_depth = j.value("hierarchy_depth", s.hierarchy_depth);
    if (j.contains("label_cardinalities"))
        s.label_cardinalities = j.at("label_cardinalities").get<std::vector<int>>();
    s.many_to_many_density = j.value("many_to_many_density", s.many_to_many_density);
    s.noise_rate = j.value("noise_rate", s.noise_rate);
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("split_ratios"))
        s.split_ratios = j.at("split_ratios").get<std::array<double, 4>>();
    return s;
}

GeneratedKg gen_ontology_like(const ShapeSpec& spec) {
    if (spec.shape != Shape::ontology_like)
        throw DataError("gen_ontology_like: spec has a different shape");
    spec.validate();

    const int depth = spec.hierarchy_depth;
    const auto& cards = spec.label_cardinalities;
    TypedDictionary dict;

    // Class entities first so derived label ids line up with class indexes.
    std::vector<std::vector<int>> level_entities(static_cast<std::size_t>(depth));
    for (int lv = 0; lv < depth; ++lv) {
        int type = dict.add_type(level_name(lv));
        for (int i = 0; i < cards[static_cast<std::size_t>(lv)]; ++i)
            level_entities[static_cast<std::size_t>(lv)].push_back(
                dict.add_entity(numbered(level_name(lv), i, 3), type));
    }

    const long long total_m2m = std::llround(spec.many_to_many_density * spec.subjects);
    std::vector<int> partner_entities;
    if (total_m2m > 0) {
        int type = dict.add_type("Restriction");
        for (int i = 0; i < spec.partners; ++i)
            partner_entities.push_back(dict.add_entity(numbered("R", i, 3), type));
    }

    int subject_type = dict.add_type("Procedure");
    std::vector<int> subject_entities;
    for (int i = 0; i < spec.subjects; ++i)
        subject_entities.push_back(dict.add_entity(numbered("P", i, 4), subject_type));

    std::vector<int> level_relations(static_cast<std::size_t>(depth));
    for (int lv = 0; lv < depth; ++lv)
        level_relations[static_cast<std::size_t>(lv)] =
            dict.add_relation(level_name(lv), subject_type, dict.find_type(level_name(lv)).value());
    int m2m_relation = -1;
    if (total_m2m > 0)
        m2m_relation = dict.add_relation("isRestrictedBy", subject_type,
                                         dict.find_type("Restriction").value());

    // parent of child c at level lv is c * cards[lv-1] / cards[lv] (block
    // partition), so chains stay consistent across levels.
    auto parent_of = [&](int lv, int child) {
        return static_cast<int>(static_cast<long long>(child) *
                                cards[static_cast<std::size_t>(lv - 1)] /
                                cards[static_cast<std::size_t>(lv)]);
    };

    Rng rng(mix_seed(spec.seed, 3));
    GeneratedKg out;
    out.spec = spec;
    for (int lv = 0; lv < depth; ++lv) {
        std::vector<std::string> names;
        for (int e : level_entities[static_cast<std::size_t>(lv)])
            names.push_back(dict.entity(e).name);
        out.class_names[level_name(lv)] = std::move(names);
    }

    // Pools are keyed by the deepest hierarchy level the partner count can
    // cover; nesting keeps them correlated with the top-level class either
    // way. More partners means a finer-grained signal.
    int bias_level = 0;
    for (int lv = 1; lv < depth; ++lv)
        if (cards[static_cast<std::size_t>(lv)] <= spec.partners) bias_level = lv;
    const int bias_classes = cards[static_cast<std::size_t>(bias_level)];
    std::vector<std::vector<int>> pools;
    if (total_m2m > 0) {
        pools.resize(static_cast<std::size_t>(bias_classes));
        for (int j = 0; j < spec.partners; ++j)
            pools[static_cast<std::size_t>(j % bias_classes)].push_back(partner_entities[static_cast<std::size_t>(j)]);
    }
    std::vector<int> counts = total_m2m > 0 ? partner_counts(spec.subjects, spec.many_to_many_density)
                                            : std::vector<int>();
    std::vector<char> used(static_cast<std::size_t>(dict.entity_count()), 0);

    std::vector<Triple> triples;
    for (int p = 0; p < spec.subjects; ++p) {
        // Intended chain: uniform leaf, parents derived upwards.
        std::vector<int> chain(static_cast<std::size_t>(depth));
        chain[static_cast<std::size_t>(depth - 1)] =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(cards[static_cast<std::size_t>(depth - 1)])));
        for (int lv = depth - 1; lv > 0; --lv)
            chain[static_cast<std::size_t>(lv - 1)] = parent_of(lv, chain[static_cast<std::size_t>(lv)]);

        int subject = subject_entities[static_cast<std::size_t>(p)];
        for (int lv = 0; lv < depth; ++lv) {
            out.ground_truth[level_name(lv)][subject] = chain[static_cast<std::size_t>(lv)];
            int emitted = chain[static_cast<std::size_t>(lv)];
            if (rng.uniform01() < spec.noise_rate)
                emitted = static_cast<int>(rng.below(static_cast<std::uint64_t>(cards[static_cast<std::size_t>(lv)])));
            triples.push_back({subject, level_relations[static_cast<std::size_t>(lv)],
                               level_entities[static_cast<std::size_t>(lv)][static_cast<std::size_t>(emitted)]});
        }
        if (total_m2m > 0 && counts[static_cast<std::size_t>(p)] > 0) {
            const auto& pool = pools[static_cast<std::size_t>(chain[static_cast<std::size_t>(bias_level)])];
            for (int partner : draw_partners(pool, partner_entities,
                                             counts[static_cast<std::size_t>(p)],
                                             spec.noise_rate, rng, used))
                triples.push_back({subject, m2m_relation, partner});
        }
    }

    out.kg = split_dataset(std::move(dict), std::move(triples), spec.split_ratios, spec.seed);
    out.kg.validate();
    return out;
}

GeneratedKg gen_ehr_like(const ShapeSpec& spec) {
    if (spec.shape != Shape::ehr_like)
        throw DataError("gen_ehr_like: spec has a different shape");
    spec.validate();

    const int flags = spec.label_cardinalities[0];
    const int stages = spec.label_cardinalities[1];
    TypedDictionary dict;

    int flag_type = dict.add_type("EventFlag");
    std::vector<int> flag_entities;
    for (int i = 0; i < flags; ++i)
        flag_entities.push_back(dict.add_entity(numbered("EventFlag", i, 1), flag_type));
    int stage_type = dict.add_type("AgeStage");
    std::vector<int> stage_entities;
    for (int i = 0; i < stages; ++i)
        stage_entities.push_back(dict.add_entity(numbered("AgeStage", i, 2), stage_type));

    const long long total_m2m = std::llround(spec.many_to_many_density * spec.subjects);
    std::vector<int> partner_entities;
    if (total_m2m > 0) {
        int type = dict.add_type("Code");
        for (int i = 0; i < spec.partners; ++i)
            partner_entities.push_back(dict.add_entity(numbered("C", i, 3), type));
    }

    int subject_type = dict.add_type("Patient");
    std::vector<int> subject_entities;
    for (int i = 0; i < spec.subjects; ++i)
        subject_entities.push_back(dict.add_entity(numbered("PT", i, 4), subject_type));

    int flag_relation = dict.add_relation("hadEvent", subject_type, flag_type);
    int stage_relation = dict.add_relation("ageStage", subject_type, stage_type);
    int m2m_relation = -1;
    if (total_m2m > 0)
        m2m_relation = dict.add_relation("hasCode", subject_type, dict.find_type("Code").value());

    Rng rng(mix_seed(spec.seed, 3));
    GeneratedKg out;
    out.spec = spec;
    for (int e : flag_entities) out.class_names["hadEvent"].push_back(dict.entity(e).name);
    for (int e : stage_entities) out.class_names["ageStage"].push_back(dict.entity(e).name);

    // Code pools keyed by the ageStage class: that's the signal CEP chases.
    std::vector<std::vector<int>> pools;
    if (total_m2m > 0) {
        pools.resize(static_cast<std::size_t>(stages));
        for (int j = 0; j < spec.partners; ++j)
            pools[static_cast<std::size_t>(j % stages)].push_back(partner_entities[static_cast<std::size_t>(j)]);
    }
    std::vector<int> counts = total_m2m > 0 ? partner_counts(spec.subjects, spec.many_to_many_density)
                                            : std::vector<int>();
    std::vector<char> used(static_cast<std::size_t>(dict.entity_count()), 0);

    std::vector<Triple> triples;
    for (int p = 0; p < spec.subjects; ++p) {
        int subject = subject_entities[static_cast<std::size_t>(p)];
        int flag = static_cast<int>(rng.below(static_cast<std::uint64_t>(flags)));
        int stage = static_cast<int>(rng.below(static_cast<std::uint64_t>(stages)));
        out.ground_truth["hadEvent"][subject] = flag;
        out.ground_truth["ageStage"][subject] = stage;

        int emitted_flag = rng.uniform01() < spec.noise_rate
                               ? static_cast<int>(rng.below(static_cast<std::uint64_t>(flags)))
                               : flag;
        int emitted_stage = rng.uniform01() < spec.noise_rate
                                ? static_cast<int>(rng.below(static_cast<std::uint64_t>(stages)))
                                : stage;
        triples.push_back({subject, flag_relation, flag_entities[static_cast<std::size_t>(emitted_flag)]});
        triples.push_back({subject, stage_relation, stage_entities[static_cast<std::size_t>(emitted_stage)]});

        if (total_m2m > 0 && counts[static_cast<std::size_t>(p)] > 0) {
            for (int partner : draw_partners(pools[static_cast<std::size_t>(stage)], partner_entities,
                                             counts[static_cast<std::size_t>(p)],
                                             spec.noise_rate, rng, used))
                triples.push_back({subject, m2m_relation, partner});
        }
    }

    out.kg = split_dataset(std::move(dict), std::move(triples), spec.split_ratios, spec.seed);
    out.kg.validate();
    return out;
}

GeneratedKg generate(const ShapeSpec& spec) {
    return spec.shape == Shape::ontology_like ? gen_ontology_like(spec) : gen_ehr_like(spec);
}

void save_generated(const GeneratedKg& gen, const std::filesystem::path& dir) {
    KgManifest manifest;
    manifest.name = shape_name(gen.spec.shape);
    manifest.seed = gen.spec.seed;
    manifest.ratios = gen.spec.split_ratios;
    save_kg(gen.kg, dir, manifest);

    for (const auto& [relation, truth] : gen.ground_truth) {
        std::ofstream f(dir / ("labels-" + relation + ".tsv"));
        if (!f) throw DataError("cannot write label file for " + relation);
        const auto& names = gen.class_names.at(relation);
        for (const auto& [entity, label] : truth)
            f << gen.kg.dict.entity(entity).name << '\t'
              << names[static_cast<std::size_t>(label)] << '\n';
    }
    std::ofstream f(dir / "spec.json");
    if (!f) throw DataError("cannot write spec.json");
    f << gen.spec.to_json().dump(2) << '\n';
}

} // namespace kge
