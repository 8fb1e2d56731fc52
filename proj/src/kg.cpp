#include "kge/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "kge/error.hpp"
#include "kge/hashing.hpp"
#include "kge/rng.hpp"

namespace kge {

namespace {

constexpr std::array<const char*, 4> kSplitNames{"LRN", "VLD", "TUN", "TST"};
constexpr std::array<const char*, 4> kSplitFiles{"lrn.tsv", "vld.tsv", "tun.tsv", "tst.tsv"};

std::string line_err(std::size_t line_no, const std::string& msg) {
    return "line " + std::to_string(line_no) + ": " + msg;
}

} // namespace

const char* split_name(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }

std::optional<Split> split_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kSplitNames.size(); ++i) {
        if (name == kSplitNames[i]) return static_cast<Split>(i);
    }
    return std::nullopt;
}

int TypedDictionary::add_type(const std::string& name) {
    if (name.empty()) throw DataError("empty type name");
    if (auto it = type_ids_.find(name); it != type_ids_.end()) return it->second;
    int id = static_cast<int>(types_.size());
    types_.push_back(name);
    by_type_.emplace_back();
    type_ids_.emplace(name, id);
    return id;
}

int TypedDictionary::add_entity(const std::string& name, int type_id) {
    if (name.empty()) throw DataError("empty entity name");
    if (type_id < 0 || type_id >= type_count())
        throw DataError("entity `" + name + "`: unknown type id");
    if (auto it = entity_ids_.find(name); it != entity_ids_.end()) {
        int existing = entities_[static_cast<std::size_t>(it->second)].type_id;
        if (existing != type_id) {
            throw DataError("entity `" + name + "` re-declared with conflicting type `" +
                            type_name(type_id) + "` (was `" + type_name(existing) + "`)");
        }
        return it->second;
    }
    int id = static_cast<int>(entities_.size());
    entities_.push_back({name, type_id});
    by_type_[static_cast<std::size_t>(type_id)].push_back(id);
    entity_ids_.emplace(name, id);
    return id;
}

int TypedDictionary::add_relation(const std::string& name, int domain_type, int range_type) {
    if (name.empty()) throw DataError("empty relation name");
    if (domain_type < 0 || domain_type >= type_count() || range_type < 0 ||
        range_type >= type_count())
        throw DataError("relation `" + name + "`: unknown domain/range type id");
    if (auto it = relation_ids_.find(name); it != relation_ids_.end()) {
        const RelationDef& def = relations_[static_cast<std::size_t>(it->second)];
        if (def.domain_type != domain_type || def.range_type != range_type) {
            throw DataError("relation `" + name + "` re-declared with conflicting signature " +
                            type_name(domain_type) + " -> " + type_name(range_type) +
                            " (was " + type_name(def.domain_type) + " -> " +
                            type_name(def.range_type) + ")");
        }
        return it->second;
    }
    int id = static_cast<int>(relations_.size());
    relations_.push_back({name, domain_type, range_type});
    relation_ids_.emplace(name, id);
    return id;
}

std::optional<int> TypedDictionary::find_type(std::string_view name) const {
    auto it = type_ids_.find(std::string(name));
    if (it == type_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> TypedDictionary::find_entity(std::string_view name) const {
    auto it = entity_ids_.find(std::string(name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> TypedDictionary::find_relation(std::string_view name) const {
    auto it = relation_ids_.find(std::string(name));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t TypedDictionary::content_hash() const {
    Fnv1a h;
    h.update(static_cast<std::uint64_t>(types_.size()));
    for (const auto& t : types_) {
        h.update(t);
        h.update("\x1f");
    }
    h.update(static_cast<std::uint64_t>(entities_.size()));
    for (const auto& e : entities_) {
        h.update(e.name);
        h.update(e.type_id);
    }
    h.update(static_cast<std::uint64_t>(relations_.size()));
    for (const auto& r : relations_) {
        h.update(r.name);
        h.update(r.domain_type);
        h.update(r.range_type);
    }
    return h.digest();
}

std::vector<Triple> KnowledgeGraph::all_triples() const {
    std::vector<Triple> out;
    std::size_t n = 0;
    for (const auto& s : splits) n += s.size();
    out.reserve(n);
    for (const auto& s : splits) out.insert(out.end(), s.begin(), s.end());
    return out;
}

std::uint64_t KnowledgeGraph::content_hash() const {
    Fnv1a h;
    h.update(dict.content_hash());
    for (const auto& s : splits) {
        h.update(static_cast<std::uint64_t>(s.size()));
        for (const Triple& t : s) {
            h.update(t.head);
            h.update(t.relation);
            h.update(t.tail);
        }
    }
    return h.digest();
}

void KnowledgeGraph::validate() const {
    TripleSet seen;
    for (Split s : all_splits) {
        TripleSet in_split;
        for (const Triple& t : split(s)) {
            if (t.head < 0 || t.head >= dict.entity_count() || t.tail < 0 ||
                t.tail >= dict.entity_count() || t.relation < 0 ||
                t.relation >= dict.relation_count())
                throw DataError(std::string(split_name(s)) + ": triple id out of range");
            const RelationDef& rel = dict.relation(t.relation);
            if (dict.entity(t.head).type_id != rel.domain_type)
                throw DataError(std::string(split_name(s)) + ": head `" +
                                dict.entity(t.head).name + "` violates domain of `" +
                                rel.name + "`");
            if (dict.entity(t.tail).type_id != rel.range_type)
                throw DataError(std::string(split_name(s)) + ": tail `" +
                                dict.entity(t.tail).name + "` violates range of `" +
                                rel.name + "`");
            if (!in_split.insert(t).second)
                throw DataError(std::string(split_name(s)) + ": duplicate triple `" +
                                dict.entity(t.head).name + " " + rel.name + " " +
                                dict.entity(t.tail).name + "`");
            if (seen.contains(t))
                throw DataError("triple `" + dict.entity(t.head).name + " " + rel.name +
                                " " + dict.entity(t.tail).name +
                                "` appears in more than one split");
        }
        for (const Triple& t : split(s)) seen.insert(t);
    }
    std::vector<char> in_lrn(static_cast<std::size_t>(dict.entity_count()), 0);
    for (const Triple& t : split(Split::LRN)) {
        in_lrn[static_cast<std::size_t>(t.head)] = 1;
        in_lrn[static_cast<std::size_t>(t.tail)] = 1;
    }
    for (Split s : {Split::VLD, Split::TUN, Split::TST}) {
        for (const Triple& t : split(s)) {
            for (int e : {t.head, t.tail}) {
                if (!in_lrn[static_cast<std::size_t>(e)])
                    throw DataError("entity `" + dict.entity(e).name + "` appears in " +
                                    split_name(s) + " but never in LRN");
            }
        }
    }
}

namespace {

// `name:Type` -> (name, Type); the last colon separates, so names may
// themselves contain colons. Types may not.
std::pair<std::string, std::string> split_entity_token(const std::string& token) {
    auto pos = token.rfind(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 == token.size()) return {token, ""};
    return {token.substr(0, pos), token.substr(pos + 1)};
}

int resolve_entity(TypedDictionary& dict, const std::string& token, DictionaryMode mode,
                   std::size_t line_no) {
    auto [name, type] = split_entity_token(token);
    if (mode == DictionaryMode::build) {
        if (type.empty())
            throw DataError(line_err(line_no, "entity token `" + token +
                                                  "` is not of the form name:Type"));
        return dict.add_entity(name, dict.add_type(type));
    }
    // strict: the full token may be a known bare name; otherwise strip the
    // type suffix, require the name to exist and the type to match.
    if (auto id = dict.find_entity(token)) return *id;
    if (!type.empty()) {
        if (auto id = dict.find_entity(name)) {
            auto tid = dict.find_type(type);
            if (!tid || dict.entity(*id).type_id != *tid)
                throw DataError(line_err(line_no, "entity `" + name +
                                                      "` declared with conflicting type `" +
                                                      type + "`"));
            return *id;
        }
    }
    throw DataError(line_err(line_no, "unknown entity `" + token + "` in strict mode"));
}

} // namespace

ParsedTriples parse_triples(std::istream& in, DictionaryMode mode, TypedDictionary base) {
    ParsedTriples out;
    out.dict = std::move(base);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab1 = line.find('\t');
        auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos)
            throw DataError(line_err(line_no, "expected head<TAB>relation<TAB>tail"));
        std::string head_tok = line.substr(0, tab1);
        std::string rel_tok = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::string tail_tok = line.substr(tab2 + 1);
        if (head_tok.empty() || rel_tok.empty() || tail_tok.empty())
            throw DataError(line_err(line_no, "empty field"));

        int head, tail;
        try {
            head = resolve_entity(out.dict, head_tok, mode, line_no);
            tail = resolve_entity(out.dict, tail_tok, mode, line_no);
        } catch (const DataError& e) {
            // add_entity conflicts carry no line number of their own
            std::string what = e.what();
            if (what.rfind("line ", 0) == 0) throw;
            throw DataError(line_err(line_no, what));
        }
        int domain = out.dict.entity(head).type_id;
        int range = out.dict.entity(tail).type_id;
        int rel;
        try {
            rel = out.dict.add_relation(rel_tok, domain, range);
        } catch (const DataError& e) {
            throw DataError(line_err(line_no, e.what()));
        }
        out.triples.push_back({head, rel, tail});
    }
    return out;
}

KnowledgeGraph split_dataset(TypedDictionary dict, std::vector<Triple> triples,
                             const std::array<double, 4>& ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2] + ratios[3];
    if (std::abs(sum - 1.0) > 1e-9)
        throw DataError("split ratios must sum to 1, got " + std::to_string(sum));
    for (double r : ratios) {
        if (r < 0.0) throw DataError("split ratios must be non-negative");
    }
    if (triples.size() < 4)
        throw DataError("need at least 4 triples to populate all splits, got " +
                        std::to_string(triples.size()));

    const std::size_t n = triples.size();
    Rng rng(mix_seed(seed, 0));
    rng.shuffle(triples);

    // VLD/TUN/TST sizes round their ratios; LRN takes whatever is left.
    std::array<std::size_t, 4> sizes{};
    std::size_t eval_total = 0;
    for (std::size_t s = 1; s < 4; ++s) {
        sizes[s] = static_cast<std::size_t>(
            std::llround(ratios[s] * static_cast<double>(n)));
        eval_total += sizes[s];
    }
    if (eval_total > n)
        throw DataError("evaluation split ratios leave no training triples");
    sizes[0] = n - eval_total;

    KnowledgeGraph kg;
    kg.dict = std::move(dict);
    std::size_t offset = 0;
    for (std::size_t s = 0; s < 4; ++s) {
        kg.splits[s].assign(triples.begin() + static_cast<std::ptrdiff_t>(offset),
                            triples.begin() + static_cast<std::ptrdiff_t>(offset + sizes[s]));
        offset += sizes[s];
    }

    // Promote evaluation triples whose head or tail is not yet covered by LRN.
    // Each promotion only adds coverage, so scanning to a fixpoint terminates.
    std::vector<char> covered(static_cast<std::size_t>(kg.dict.entity_count()), 0);
    for (const Triple& t : kg.split(Split::LRN)) {
        covered[static_cast<std::size_t>(t.head)] = 1;
        covered[static_cast<std::size_t>(t.tail)] = 1;
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (Split s : {Split::VLD, Split::TUN, Split::TST}) {
            auto& list = kg.split(s);
            auto keep = list.begin();
            for (auto it = list.begin(); it != list.end(); ++it) {
                bool uncovered = !covered[static_cast<std::size_t>(it->head)] ||
                                 !covered[static_cast<std::size_t>(it->tail)];
                if (uncovered) {
                    kg.split(Split::LRN).push_back(*it);
                    covered[static_cast<std::size_t>(it->head)] = 1;
                    covered[static_cast<std::size_t>(it->tail)] = 1;
                    changed = true;
                } else {
                    *keep++ = *it;
                }
            }
            list.erase(keep, list.end());
        }
    }
    return kg;
}

LabelMap derive_labels(const KnowledgeGraph& kg, int relation) {
    if (relation < 0 || relation >= kg.dict.relation_count())
        throw DataError("derive_labels: unknown relation id");
    const RelationDef& rel = kg.dict.relation(relation);

    std::map<int, int> head_to_tail;
    for (Split s : all_splits) {
        for (const Triple& t : kg.split(s)) {
            if (t.relation != relation) continue;
            auto [it, inserted] = head_to_tail.emplace(t.head, t.tail);
            if (!inserted && it->second != t.tail)
                throw DataError("relation `" + rel.name + "` is not many-to-one: head `" +
                                kg.dict.entity(t.head).name + "` has tails `" +
                                kg.dict.entity(it->second).name + "` and `" +
                                kg.dict.entity(t.tail).name + "`");
        }
    }

    std::vector<int> tails;
    for (const auto& [head, tail] : head_to_tail) tails.push_back(tail);
    std::sort(tails.begin(), tails.end());
    tails.erase(std::unique(tails.begin(), tails.end()), tails.end());

    LabelMap out;
    out.target_type = rel.domain_type;
    out.source_relation = relation;
    out.label_count = static_cast<int>(tails.size());
    std::unordered_map<int, int> tail_to_label;
    for (std::size_t i = 0; i < tails.size(); ++i) {
        tail_to_label.emplace(tails[i], static_cast<int>(i));
        out.label_names.push_back(kg.dict.entity(tails[i]).name);
    }
    for (const auto& [head, tail] : head_to_tail) out.labels.emplace(head, tail_to_label.at(tail));
    return out;
}

void serialize_triples(const TypedDictionary& dict, const std::vector<Triple>& triples,
                       std::ostream& out) {
    for (const Triple& t : triples) {
        const EntityDef& h = dict.entity(t.head);
        const EntityDef& tl = dict.entity(t.tail);
        out << h.name << ':' << dict.type_name(h.type_id) << '\t'
            << dict.relation(t.relation).name << '\t' << tl.name << ':'
            << dict.type_name(tl.type_id) << '\n';
    }
}

void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& dir,
             const KgManifest& manifest) {
    std::filesystem::create_directories(dir);
    for (std::size_t s = 0; s < 4; ++s) {
        std::ofstream f(dir / kSplitFiles[s]);
        if (!f) throw DataError("cannot write " + (dir / kSplitFiles[s]).string());
        serialize_triples(kg.dict, kg.splits[s], f);
    }
    {
        std::ofstream f(dir / "entities.tsv");
        if (!f) throw DataError("cannot write " + (dir / "entities.tsv").string());
        for (int e = 0; e < kg.dict.entity_count(); ++e) {
            const EntityDef& def = kg.dict.entity(e);
            f << def.name << '\t' << kg.dict.type_name(def.type_id) << '\n';
        }
    }
    nlohmann::ordered_json j;
    j["name"] = manifest.name;
    j["seed"] = manifest.seed;
    j["ratios"] = manifest.ratios;
    j["entities"] = kg.dict.entity_count();
    j["relations"] = kg.dict.relation_count();
    j["types"] = kg.dict.type_count();
    nlohmann::ordered_json counts;
    for (Split s : all_splits)
        counts[split_name(s)] = kg.split(s).size();
    j["triples"] = counts;
    j["dictionary_hash"] = hex64(kg.dict.content_hash());
    std::ofstream f(dir / "manifest.json");
    if (!f) throw DataError("cannot write " + (dir / "manifest.json").string());
    f << j.dump(2) << '\n';
}

KnowledgeGraph load_kg(const std::filesystem::path& dir) {
    std::ifstream sidecar(dir / "entities.tsv");
    if (!sidecar) throw DataError("cannot read " + (dir / "entities.tsv").string());
    TypedDictionary dict;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(sidecar, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            throw DataError("entities.tsv " +
                            line_err(line_no, "expected entity<TAB>Type"));
        dict.add_entity(line.substr(0, tab), dict.add_type(line.substr(tab + 1)));
    }

    KnowledgeGraph kg;
    for (std::size_t s = 0; s < 4; ++s) {
        std::ifstream f(dir / kSplitFiles[s]);
        if (!f) throw DataError("cannot read " + (dir / kSplitFiles[s]).string());
        try {
            ParsedTriples parsed = parse_triples(f, DictionaryMode::strict, std::move(dict));
            dict = std::move(parsed.dict);
            kg.splits[s] = std::move(parsed.triples);
        } catch (const DataError& e) {
            throw DataError(std::string(kSplitFiles[s]) + " " + e.what());
        }
    }
    kg.dict = std::move(dict);
    kg.validate();
    return kg;
}

KgManifest load_manifest(const std::filesystem::path& dir) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw DataError("cannot read " + (dir / "manifest.json").string());
    nlohmann::json j = nlohmann::json::parse(f, nullptr, true, true);
    KgManifest m;
    m.name = j.value("name", std::string("dataset"));
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("ratios")) m.ratios = j.at("ratios").get<std::array<double, 4>>();
    return m;
}

} // namespace kge
