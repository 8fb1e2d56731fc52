#pragma once
// Synthetic dataset generator.
//
// Two relational shapes:
//   ontology-like  subjects hang off a nested many-to-one hierarchy
//                  (PGroup / PSubgroup / POrgForm ...) plus a many-to-many
//                  partner relation whose partners are biased towards the
//                  subject's top-level class.
//   ehr-like       subjects carry two many-to-one attributes (hadEvent,
//                  ageStage) and a dominant many-to-many code relation biased
//                  towards the ageStage class.
//
// The bias is the clustering signal: subjects sharing a class draw from a
// shared partner pool with probability 1 - noise_rate.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kge/kg.hpp"

namespace kge {

enum class Shape { ontology_like, ehr_like };

const char* shape_name(Shape s);
Shape shape_from_name(std::string_view name);

struct ShapeSpec {
    Shape shape = Shape::ontology_like;
    int subjects = 500;   // procedures / patients
    int partners = 48;    // restriction / code entities
    int hierarchy_depth = 3;                    // ontology-like
    std::vector<int> label_cardinalities;       // per level (ontology) or {flag, stage} (ehr)
    double many_to_many_density = 2.0;          // mean partner triples per subject
    double noise_rate = 0.0;
    std::uint64_t seed = 0;
    std::array<double, 4> split_ratios{0.90, 0.033, 0.033, 0.034};

    static ShapeSpec ontology_defaults();
    static ShapeSpec ehr_defaults();
    static ShapeSpec defaults(Shape shape);

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static ShapeSpec from_json(const nlohmann::json& j);
};

struct GeneratedKg {
    KnowledgeGraph kg;
    // relation name -> subject entity id -> intended class index. This is the
    // pre-noise assignment; the emitted triples may disagree on a noise_rate
    // fraction.
    std::map<std::string, std::map<int, int>> ground_truth;
    // relation name -> class index -> class entity name
    std::map<std::string, std::vector<std::string>> class_names;
    ShapeSpec spec;
};

GeneratedKg gen_ontology_like(const ShapeSpec& spec);
GeneratedKg gen_ehr_like(const ShapeSpec& spec);
GeneratedKg generate(const ShapeSpec& spec);

// Dataset directory plus ground-truth `labels-<relation>.tsv` files and a
// spec.json echo.
void save_generated(const GeneratedKg& gen, const std::filesystem::path& dir);

} // namespace kge
