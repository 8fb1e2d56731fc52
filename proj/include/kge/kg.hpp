#pragma once
// Typed multi-relational data model: dictionary, triples, splits, labels.
//
// Every entity carries exactly one type. Relations declare a (domain, range)
// type pair on first use and every later triple must agree, so a triple list
// is well-typed by construction once it parses.
//
// On-disk layout of a dataset directory:
//   lrn.tsv vld.tsv tun.tsv tst.tsv   head<TAB>relation<TAB>tail, name:Type tokens
//   entities.tsv                       entity<TAB>Type sidecar (strict reloads)
//   manifest.json                      counts, seed, ratios

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kge {

enum class Split { LRN = 0, VLD = 1, TUN = 2, TST = 3 };

constexpr std::array<Split, 4> all_splits{Split::LRN, Split::VLD, Split::TUN, Split::TST};

const char* split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

struct Triple {
    int head = 0;
    int relation = 0;
    int tail = 0;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t h = static_cast<std::uint64_t>(t.head);
        h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(t.relation);
        h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(t.tail);
        h ^= h >> 32;
        return static_cast<std::size_t>(h);
    }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

struct EntityDef {
    std::string name;
    int type_id = 0;
};

struct RelationDef {
    std::string name;
    int domain_type = 0;
    int range_type = 0;
};

// Dense-id namespace for entities, relations and types. Ids are assigned in
// insertion order starting at 0; names are unique within their namespace.
class TypedDictionary {
public:
    int add_type(const std::string& name);
    int add_entity(const std::string& name, int type_id);
    int add_relation(const std::string& name, int domain_type, int range_type);

    std::optional<int> find_type(std::string_view name) const;
    std::optional<int> find_entity(std::string_view name) const;
    std::optional<int> find_relation(std::string_view name) const;

    const std::string& type_name(int id) const { return types_[static_cast<std::size_t>(id)]; }
    const EntityDef& entity(int id) const { return entities_[static_cast<std::size_t>(id)]; }
    const RelationDef& relation(int id) const { return relations_[static_cast<std::size_t>(id)]; }

    int type_count() const { return static_cast<int>(types_.size()); }
    int entity_count() const { return static_cast<int>(entities_.size()); }
    int relation_count() const { return static_cast<int>(relations_.size()); }

    // Entity ids of one type, ascending.
    const std::vector<int>& entities_of_type(int type_id) const {
        return by_type_[static_cast<std::size_t>(type_id)];
    }

    // Stable content hash over names, types and relation signatures.
    std::uint64_t content_hash() const;

private:
    std::vector<std::string> types_;
    std::vector<EntityDef> entities_;
    std::vector<RelationDef> relations_;
    std::vector<std::vector<int>> by_type_;
    std::unordered_map<std::string, int> type_ids_;
    std::unordered_map<std::string, int> entity_ids_;
    std::unordered_map<std::string, int> relation_ids_;
};

struct KnowledgeGraph {
    TypedDictionary dict;
    std::array<std::vector<Triple>, 4> splits;

    std::vector<Triple>& split(Split s) { return splits[static_cast<std::size_t>(s)]; }
    const std::vector<Triple>& split(Split s) const {
        return splits[static_cast<std::size_t>(s)];
    }

    std::vector<Triple> all_triples() const;
    std::uint64_t content_hash() const;

    // Throws DataError on the first violated invariant: ill-typed triple,
    // duplicate within a split, overlap across splits, or an evaluation-split
    // entity that never occurs in LRN.
    void validate() const;
};

enum class DictionaryMode { build, strict };

struct ParsedTriples {
    TypedDictionary dict;
    std::vector<Triple> triples;
};

// Parses `head<TAB>relation<TAB>tail` lines. In build mode entity tokens are
// `name:Type` and unseen names extend the dictionary; in strict mode entity
// tokens must already exist in `base` (a bare name, or name:Type which is
// checked against the recorded type). Relations are recorded on first use in
// either mode. Errors carry 1-based line numbers.
ParsedTriples parse_triples(std::istream& in, DictionaryMode mode,
                            TypedDictionary base = {});

// Seeded shuffle, then cuts VLD/TUN/TST to rounded ratio sizes with LRN
// absorbing the remainder. Evaluation triples whose head or tail never occurs
// in LRN are promoted into LRN until the no-unseen-entity invariant holds.
KnowledgeGraph split_dataset(TypedDictionary dict, std::vector<Triple> triples,
                             const std::array<double, 4>& ratios, std::uint64_t seed);

struct LabelMap {
    int target_type = 0;
    int source_relation = 0;
    std::map<int, int> labels;             // entity id -> dense label id
    int label_count = 0;                   // L
    std::vector<std::string> label_names;  // label id -> tail entity name
};

// Reads the many-to-one `relation` off the whole KG: label ids are a dense
// re-encoding of the distinct tail entities (ascending tail id). A head with
// two distinct tails via `relation` is an error.
LabelMap derive_labels(const KnowledgeGraph& kg, int relation);

// ---- persistence ----

struct KgManifest {
    std::string name = "dataset";
    std::uint64_t seed = 0;
    std::array<double, 4> ratios{1.0, 0.0, 0.0, 0.0};
};

void serialize_triples(const TypedDictionary& dict, const std::vector<Triple>& triples,
                       std::ostream& out);

void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& dir,
             const KgManifest& manifest);

KnowledgeGraph load_kg(const std::filesystem::path& dir);
KgManifest load_manifest(const std::filesystem::path& dir);

} // namespace kge
