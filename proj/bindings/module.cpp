#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include <json.hpp>

#include "kge/cep.hpp"
#include "kge/datagen.hpp"
#include "kge/error.hpp"
#include "kge/lp.hpp"
#include "kge/model.hpp"
#include "kge/stats.hpp"
#include "kge/sweep.hpp"

namespace py = pybind11;
using namespace kge;

namespace {

py::object json_to_py(const nlohmann::ordered_json& j) {
    switch (j.type()) {
        case nlohmann::ordered_json::value_t::null: return py::none();
        case nlohmann::ordered_json::value_t::boolean: return py::bool_(j.get<bool>());
        case nlohmann::ordered_json::value_t::number_integer:
            return py::int_(j.get<std::int64_t>());
        case nlohmann::ordered_json::value_t::number_unsigned:
            return py::int_(j.get<std::uint64_t>());
        case nlohmann::ordered_json::value_t::number_float:
            return py::float_(j.get<double>());
        case nlohmann::ordered_json::value_t::string: return py::str(j.get<std::string>());
        case nlohmann::ordered_json::value_t::array: {
            py::list out;
            for (const auto& item : j) out.append(json_to_py(item));
            return out;
        }
        case nlohmann::ordered_json::value_t::object: {
            py::dict out;
            for (const auto& [key, value] : j.items())
                out[py::str(key)] = json_to_py(value);
            return out;
        }
        default: return py::none();
    }
}

// Trained model plus everything needed to persist and sanity-check it.
struct PyModel {
    EmbeddingModel model;
    TrainConfig config;
    std::uint64_t dict_hash = 0;
};

LPConfig make_lp_config(const std::string& scope, const std::string& filter,
                        const std::string& sides, const std::vector<int>& hits,
                        int threads) {
    LPConfig cfg;
    if (scope == "auto") cfg.scope.reset();
    else if (scope == "typed") cfg.scope = CandidateScope::typed;
    else if (scope == "global") cfg.scope = CandidateScope::global;
    else throw DataError("scope: auto|typed|global");
    if (filter == "raw") cfg.filter = FilterMode::raw;
    else if (filter == "filtered") cfg.filter = FilterMode::filtered;
    else throw DataError("filter: raw|filtered");
    if (sides == "both") cfg.sides = EvalSides::both;
    else if (sides == "head") cfg.sides = EvalSides::head;
    else if (sides == "tail") cfg.sides = EvalSides::tail;
    else throw DataError("sides: both|head|tail");
    if (!hits.empty()) cfg.hits_levels = hits;
    cfg.threads = threads;
    return cfg;
}

Split split_arg(const std::string& name) {
    auto s = split_from_name(name);
    if (!s) throw DataError("split: LRN|VLD|TUN|TST");
    return *s;
}

int relation_arg(const KnowledgeGraph& kg, const std::string& name) {
    auto rel = kg.dict.find_relation(name);
    if (!rel) throw DataError("unknown relation `" + name + "`");
    return *rel;
}

} // namespace

PYBIND11_MODULE(_kge, m) {
    m.doc() = "typed knowledge-graph embeddings: training, link prediction, "
              "clustering evaluation, correlation";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
        .def_property_readonly(
            "entity_count", [](const KnowledgeGraph& kg) { return kg.dict.entity_count(); })
        .def_property_readonly(
            "relation_count",
            [](const KnowledgeGraph& kg) { return kg.dict.relation_count(); })
        .def_property_readonly(
            "type_count", [](const KnowledgeGraph& kg) { return kg.dict.type_count(); })
        .def("split_sizes",
             [](const KnowledgeGraph& kg) {
                 py::dict out;
                 for (Split s : all_splits)
                     out[split_name(s)] = kg.split(s).size();
                 return out;
             })
        .def("relations",
             [](const KnowledgeGraph& kg) {
                 std::vector<std::string> out;
                 for (int r = 0; r < kg.dict.relation_count(); ++r)
                     out.push_back(kg.dict.relation(r).name);
                 return out;
             })
        .def("entity_id",
             [](const KnowledgeGraph& kg, const std::string& name) {
                 auto id = kg.dict.find_entity(name);
                 if (!id) throw DataError("unknown entity `" + name + "`");
                 return *id;
             })
        .def("entity_name",
             [](const KnowledgeGraph& kg, int id) { return kg.dict.entity(id).name; })
        .def("validate", &KnowledgeGraph::validate)
        .def("save",
             [](const KnowledgeGraph& kg, const std::filesystem::path& dir,
                const std::string& name, std::uint64_t seed) {
                 KgManifest manifest;
                 manifest.name = name;
                 manifest.seed = seed;
                 save_kg(kg, dir, manifest);
             },
             py::arg("dir"), py::arg("name") = "dataset", py::arg("seed") = 0)
        .def("__repr__", [](const KnowledgeGraph& kg) {
            std::ostringstream s;
            s << "KnowledgeGraph(entities=" << kg.dict.entity_count()
              << ", relations=" << kg.dict.relation_count()
              << ", types=" << kg.dict.type_count() << ")";
            return s.str();
        });

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("k", [](const PyModel& pm) { return pm.model.k; })
        .def_property_readonly(
            "kind", [](const PyModel& pm) { return model_kind_name(pm.model.kind); })
        .def_property_readonly("typed", [](const PyModel& pm) { return pm.model.typed; })
        .def("entity_vectors",
             [](const PyModel& pm) {
                 const Matrix& e = pm.model.entities;
                 py::array_t<double> out({e.rows(), e.cols()});
                 std::copy(e.data().begin(), e.data().end(), out.mutable_data());
                 return out;
             })
        .def("score",
             [](const PyModel& pm, const KnowledgeGraph& kg, const std::string& head,
                const std::string& relation, const std::string& tail) {
                 auto h = kg.dict.find_entity(head);
                 auto t = kg.dict.find_entity(tail);
                 if (!h || !t) throw DataError("unknown entity name");
                 return pm.model.score({*h, relation_arg(kg, relation), *t});
             })
        .def("save",
             [](const PyModel& pm, const std::filesystem::path& path) {
                 save_model(pm.model, pm.config, pm.dict_hash, path);
             })
        .def("__repr__", [](const PyModel& pm) {
            std::ostringstream s;
            s << "Model(kind=" << model_kind_name(pm.model.kind) << ", k=" << pm.model.k
              << ", typed=" << (pm.model.typed ? "True" : "False") << ")";
            return s.str();
        });

    m.def(
        "generate",
        [](const std::string& shape, std::uint64_t seed, int subjects, int partners,
           double density, double noise, const std::vector<int>& cardinalities) {
            ShapeSpec spec = ShapeSpec::defaults(shape_from_name(shape));
            spec.seed = seed;
            if (subjects > 0) spec.subjects = subjects;
            if (partners > 0) spec.partners = partners;
            if (density >= 0.0) spec.many_to_many_density = density;
            if (noise >= 0.0) spec.noise_rate = noise;
            if (!cardinalities.empty()) {
                spec.label_cardinalities = cardinalities;
                if (spec.shape == Shape::ontology_like)
                    spec.hierarchy_depth = static_cast<int>(cardinalities.size());
            }
            return generate(spec).kg;
        },
        py::arg("shape") = "ontology", py::arg("seed") = 0, py::arg("subjects") = 0,
        py::arg("partners") = 0, py::arg("density") = -1.0, py::arg("noise") = -1.0,
        py::arg("cardinalities") = std::vector<int>{});

    m.def("load_kg", [](const std::filesystem::path& dir) { return load_kg(dir); });

    m.def(
        "parse_and_split",
        [](const std::string& text, const std::array<double, 4>& ratios,
           std::uint64_t seed) {
            std::istringstream in(text);
            ParsedTriples parsed = parse_triples(in, DictionaryMode::build);
            return split_dataset(std::move(parsed.dict), std::move(parsed.triples), ratios,
                                 seed);
        },
        py::arg("text"), py::arg("ratios") = std::array<double, 4>{0.90, 0.033, 0.033, 0.034},
        py::arg("seed") = 0);

    m.def(
        "derive_labels",
        [](const KnowledgeGraph& kg, const std::string& relation) {
            LabelMap labels = derive_labels(kg, relation_arg(kg, relation));
            py::dict by_name;
            for (const auto& [entity, label] : labels.labels)
                by_name[py::str(kg.dict.entity(entity).name)] =
                    labels.label_names[static_cast<std::size_t>(label)];
            py::dict out;
            out["L"] = labels.label_count;
            out["target_type"] = kg.dict.type_name(labels.target_type);
            out["labels"] = by_name;
            return out;
        },
        py::arg("kg"), py::arg("relation"));

    m.def(
        "train",
        [](const KnowledgeGraph& kg, int k, double gamma, double lr, int epochs,
           int replicas, std::uint64_t seed, const std::string& kind, bool typed,
           int eval_every, int threads) {
            TrainConfig cfg;
            cfg.k = k;
            cfg.gamma = gamma;
            cfg.learning_rate = lr;
            cfg.max_epochs = epochs;
            cfg.replicas = replicas;
            cfg.seed = seed;
            cfg.kind = model_kind_from_name(kind);
            cfg.typed = typed;
            cfg.eval_every = eval_every;
            cfg.threads = threads;
            TrainResult result = train(kg, cfg);
            return PyModel{std::move(result.model), cfg, kg.dict.content_hash()};
        },
        py::arg("kg"), py::arg("k") = 32, py::arg("gamma") = 1.0, py::arg("lr") = 0.01,
        py::arg("epochs") = 100, py::arg("replicas") = 1, py::arg("seed") = 0,
        py::arg("kind") = "transe", py::arg("typed") = true, py::arg("eval_every") = 0,
        py::arg("threads") = 0);

    m.def(
        "init_model",
        [](const KnowledgeGraph& kg, int k, const std::string& kind, bool typed,
           std::uint64_t seed) {
            TrainConfig cfg;
            cfg.k = k;
            cfg.kind = model_kind_from_name(kind);
            cfg.typed = typed;
            cfg.seed = seed;
            return PyModel{init_model(kg.dict, cfg, seed), cfg, kg.dict.content_hash()};
        },
        py::arg("kg"), py::arg("k") = 32, py::arg("kind") = "transe",
        py::arg("typed") = true, py::arg("seed") = 0);

    m.def("load_model", [](const std::filesystem::path& path) {
        LoadedModel loaded = load_model(path);
        return PyModel{std::move(loaded.model), loaded.config, loaded.dict_hash};
    });

    m.def(
        "evaluate_lp",
        [](const PyModel& pm, const KnowledgeGraph& kg, const std::string& split,
           const std::string& scope, const std::string& filter, const std::string& sides,
           const std::vector<int>& hits, int threads) {
            LPConfig cfg = make_lp_config(scope, filter, sides, hits, threads);
            LPReport report = evaluate_lp(pm.model, kg, split_arg(split), cfg);
            return json_to_py(lp_report_json(report));
        },
        py::arg("model"), py::arg("kg"), py::arg("split") = "TST",
        py::arg("scope") = "auto", py::arg("filter") = "raw", py::arg("sides") = "both",
        py::arg("hits") = std::vector<int>{10}, py::arg("threads") = 0);

    m.def(
        "evaluate_cep",
        [](const PyModel& pm, const KnowledgeGraph& kg, const std::string& relation,
           int multiplier, std::uint64_t seed, const std::string& init, int max_iterations,
           int threads) {
            LabelMap labels = derive_labels(kg, relation_arg(kg, relation));
            ClusterConfig cfg;
            cfg.multiplier = multiplier;
            cfg.seed = seed;
            cfg.init = kmeans_init_from_name(init);
            cfg.max_iterations = max_iterations;
            cfg.threads = threads;
            ClusterReport report = evaluate_cep(pm.model, labels, cfg, relation);
            return json_to_py(cluster_report_json(report));
        },
        py::arg("model"), py::arg("kg"), py::arg("relation"), py::arg("multiplier") = 4,
        py::arg("seed") = 0, py::arg("init") = "kmeans++", py::arg("max_iterations") = 100,
        py::arg("threads") = 0);

    m.def(
        "kmeans",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points, int K,
           std::uint64_t seed, const std::string& init, int max_iterations) {
            if (points.ndim() != 2) throw DataError("kmeans: points must be 2-D");
            Matrix mat(static_cast<std::size_t>(points.shape(0)),
                       static_cast<std::size_t>(points.shape(1)));
            std::copy(points.data(), points.data() + points.size(), mat.data().begin());
            ClusterConfig cfg;
            cfg.seed = seed;
            cfg.init = kmeans_init_from_name(init);
            cfg.max_iterations = max_iterations;
            KMeansResult res = kmeans(mat, K, cfg);
            py::array_t<int> assignment(static_cast<py::ssize_t>(res.assignment.size()));
            std::copy(res.assignment.begin(), res.assignment.end(),
                      assignment.mutable_data());
            py::array_t<double> centers({res.centers.rows(), res.centers.cols()});
            std::copy(res.centers.data().begin(), res.centers.data().end(),
                      centers.mutable_data());
            return py::make_tuple(assignment, centers, res.wcss);
        },
        py::arg("points"), py::arg("K"), py::arg("seed") = 0, py::arg("init") = "kmeans++",
        py::arg("max_iterations") = 100);

    m.def(
        "pearson",
        [](const std::vector<double>& x, const std::vector<double>& y) -> py::object {
            auto r = pearson(x, y);
            return r ? py::cast(*r) : py::none();
        },
        py::arg("x"), py::arg("y"));

    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) -> py::object {
            auto r = spearman(x, y);
            return r ? py::cast(*r) : py::none();
        },
        py::arg("x"), py::arg("y"));

    m.def(
        "run_sweep",
        [](const std::filesystem::path& spec_path, int threads) {
            SweepSpec spec = SweepSpec::from_ini(IniFile::load(spec_path));
            if (threads > 0) spec.threads = threads;
            SweepTable table = run_sweep(spec);
            emit_reports(table, spec.out);
            std::size_t failed = 0;
            for (const auto& row : table.rows)
                if (!row.ok) ++failed;
            py::dict out;
            out["rows"] = table.rows.size();
            out["failed"] = failed;
            out["out"] = spec.out.string();
            return out;
        },
        py::arg("spec_path"), py::arg("threads") = 0);

    m.attr("__version__") = "0.1.0";
}
