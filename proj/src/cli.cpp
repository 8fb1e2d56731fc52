#include "kge/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "kge/cep.hpp"
#include "kge/datagen.hpp"
#include "kge/error.hpp"
#include "kge/hashing.hpp"
#include "kge/lp.hpp"
#include "kge/model.hpp"
#include "kge/sweep.hpp"

namespace kge::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw DataError("cannot write " + out_path);
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
}

struct GenArgs {
    std::string shape = "ontology";
    std::string out;
    std::uint64_t seed = 0;
    int subjects = 0;
    int partners = 0;
    int depth = 0;
    std::vector<int> cardinalities;
    double density = -1.0;
    double noise = -1.0;
    std::vector<double> ratios;
    bool quiet = false;
};

int run_gen(const GenArgs& a) {
    ShapeSpec spec = ShapeSpec::defaults(shape_from_name(a.shape));
    spec.seed = a.seed;
    if (a.subjects > 0) spec.subjects = a.subjects;
    if (a.partners > 0) spec.partners = a.partners;
    if (a.depth > 0) spec.hierarchy_depth = a.depth;
    if (!a.cardinalities.empty()) {
        spec.label_cardinalities = a.cardinalities;
        if (spec.shape == Shape::ontology_like)
            spec.hierarchy_depth = static_cast<int>(a.cardinalities.size());
    }
    if (a.density >= 0.0) spec.many_to_many_density = a.density;
    if (a.noise >= 0.0) spec.noise_rate = a.noise;
    if (!a.ratios.empty()) {
        if (a.ratios.size() != 4) throw DataError("--ratios takes four values");
        for (std::size_t i = 0; i < 4; ++i) spec.split_ratios[i] = a.ratios[i];
    }

    GeneratedKg gen = generate(spec);
    save_generated(gen, a.out);
    if (!a.quiet) {
        std::cerr << "wrote " << shape_name(spec.shape) << " dataset to " << a.out << " ("
                  << gen.kg.dict.entity_count() << " entities, "
                  << gen.kg.all_triples().size() << " triples)\n";
    }
    return kExitOk;
}

LPConfig lp_config_from(const std::string& scope, const std::string& filter,
                        const std::string& sides, const std::vector<int>& hits,
                        int threads) {
    LPConfig cfg;
    if (scope == "auto") cfg.scope.reset();
    else if (scope == "typed") cfg.scope = CandidateScope::typed;
    else if (scope == "global") cfg.scope = CandidateScope::global;
    else throw DataError("--scope: auto|typed|global");
    if (filter == "raw") cfg.filter = FilterMode::raw;
    else if (filter == "filtered") cfg.filter = FilterMode::filtered;
    else throw DataError("--filter: raw|filtered");
    if (sides == "both") cfg.sides = EvalSides::both;
    else if (sides == "head") cfg.sides = EvalSides::head;
    else if (sides == "tail") cfg.sides = EvalSides::tail;
    else throw DataError("--sides: both|head|tail");
    if (!hits.empty()) cfg.hits_levels = hits;
    cfg.threads = threads;
    return cfg;
}

LoadedModel load_checked_model(const std::string& path, const KnowledgeGraph& kg) {
    LoadedModel loaded = load_model(path);
    if (loaded.dict_hash != kg.dict.content_hash())
        throw DataError("model " + path + " was trained against a different dictionary "
                        "(hash mismatch); refusing to evaluate");
    if (loaded.model.entities.rows() != static_cast<std::size_t>(kg.dict.entity_count()))
        throw DataError("model entity count does not match the dataset");
    return loaded;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"typed knowledge-graph embedding workbench: train translational "
                 "models, evaluate link prediction and clustering, correlate both"};
    app.name("kge");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    // ---- gen ----
    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
    gen_cmd->add_option("--shape", gen.shape, "dataset shape (ontology|ehr)");
    gen_cmd->add_option("--out", gen.out, "output dataset directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--subjects", gen.subjects, "subject entity count (0 = default)");
    gen_cmd->add_option("--partners", gen.partners,
                        "many-to-many partner entity count (0 = default)");
    gen_cmd->add_option("--depth", gen.depth, "hierarchy depth (ontology, 0 = default)");
    gen_cmd->add_option("--cardinalities", gen.cardinalities,
                        "class counts per level, comma separated")
        ->delimiter(',');
    gen_cmd->add_option("--density", gen.density,
                        "mean many-to-many triples per subject (-1 = default)");
    gen_cmd->add_option("--noise", gen.noise, "label-inconsistent fraction (-1 = default)");
    gen_cmd->add_option("--ratios", gen.ratios, "LRN,VLD,TUN,TST split ratios")
        ->delimiter(',');
    gen_cmd->add_flag("--quiet", gen.quiet, "suppress progress output");

    // ---- split ----
    std::string split_in, split_out, split_name_opt = "dataset";
    std::vector<double> split_ratios{0.90, 0.033, 0.033, 0.034};
    std::uint64_t split_seed = 0;
    bool split_quiet = false;
    CLI::App* split_cmd =
        app.add_subcommand("split", "split a triple TSV into LRN/VLD/TUN/TST");
    split_cmd->add_option("--in", split_in, "input TSV (name:Type tokens)")->required();
    split_cmd->add_option("--out", split_out, "output dataset directory")->required();
    split_cmd->add_option("--ratios", split_ratios, "LRN,VLD,TUN,TST ratios")->delimiter(',');
    split_cmd->add_option("--seed", split_seed, "shuffle seed");
    split_cmd->add_option("--name", split_name_opt, "dataset name for the manifest");
    split_cmd->add_flag("--quiet", split_quiet, "suppress progress output");

    // ---- train ----
    std::string train_kg, train_out, train_model = "transe";
    TrainConfig train_cfg;
    bool train_untyped = false, train_quiet = false;
    CLI::App* train_cmd = app.add_subcommand("train", "train an embedding model");
    train_cmd->add_option("--kg", train_kg, "dataset directory")->required();
    train_cmd->add_option("--out", train_out, "output model file")->required();
    train_cmd->add_option("--model", train_model, "model kind (transe|transh)");
    train_cmd->add_option("--k", train_cfg.k, "embedding dimension");
    train_cmd->add_option("--gamma", train_cfg.gamma, "hinge margin");
    train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
    train_cmd->add_option("--epochs", train_cfg.max_epochs, "training epochs");
    train_cmd->add_option("--replicas", train_cfg.replicas, "independent replicas");
    train_cmd->add_option("--seed", train_cfg.seed, "base seed");
    train_cmd->add_option("--eval-every", train_cfg.eval_every,
                          "TUN MRR cadence in epochs (0 = final only)");
    train_cmd->add_option("--threads", train_cfg.threads, "replica parallelism (0 = auto)");
    train_cmd->add_flag("--untyped", train_untyped,
                        "corrupt against all entities instead of same-type pools");
    train_cmd->add_flag("--quiet", train_quiet, "suppress progress output");

    // ---- eval-lp ----
    std::string lp_model, lp_kg, lp_split = "TST", lp_scope = "auto", lp_filter = "raw",
                lp_sides = "both", lp_format = "json", lp_out;
    std::vector<int> lp_hits;
    int lp_threads = 0;
    CLI::App* lp_cmd = app.add_subcommand("eval-lp", "link prediction evaluation");
    lp_cmd->add_option("--model", lp_model, "model file")->required();
    lp_cmd->add_option("--kg", lp_kg, "dataset directory")->required();
    lp_cmd->add_option("--split", lp_split, "split to evaluate (LRN|VLD|TUN|TST)");
    lp_cmd->add_option("--scope", lp_scope, "candidate scope (auto|typed|global)");
    lp_cmd->add_option("--filter", lp_filter, "candidate filtering (raw|filtered)");
    lp_cmd->add_option("--sides", lp_sides, "sides to rank (both|head|tail)");
    lp_cmd->add_option("--hits", lp_hits, "hits@N levels, comma separated")->delimiter(',');
    lp_cmd->add_option("--format", lp_format, "output format (json|csv)");
    lp_cmd->add_option("--out", lp_out, "write output to file instead of stdout");
    lp_cmd->add_option("--threads", lp_threads, "ranking parallelism (0 = auto)");

    // ---- eval-cep ----
    std::string cep_model, cep_kg, cep_relation, cep_init = "kmeans++",
                cep_format = "json", cep_out, cep_histogram;
    int cep_multiplier = 4, cep_max_iter = 100, cep_threads = 0;
    std::uint64_t cep_seed = 0;
    CLI::App* cep_cmd = app.add_subcommand("eval-cep", "clustering evaluation");
    cep_cmd->add_option("--model", cep_model, "model file")->required();
    cep_cmd->add_option("--kg", cep_kg, "dataset directory")->required();
    cep_cmd->add_option("--relation", cep_relation, "many-to-one target relation")
        ->required();
    cep_cmd->add_option("--multiplier", cep_multiplier, "K = multiplier * L (1|2|4)");
    cep_cmd->add_option("--seed", cep_seed, "kmeans seed");
    cep_cmd->add_option("--init", cep_init, "center init (kmeans++|random-points)");
    cep_cmd->add_option("--max-iterations", cep_max_iter, "Lloyd iteration cap");
    cep_cmd->add_option("--format", cep_format, "output format (json|csv)");
    cep_cmd->add_option("--out", cep_out, "write output to file instead of stdout");
    cep_cmd->add_option("--histogram", cep_histogram,
                        "also write a per-cluster label histogram CSV here");
    cep_cmd->add_option("--threads", cep_threads, "distance parallelism (0 = auto)");

    // ---- correlate ----
    std::string cor_sweep, cor_out, cor_lp_metric, cor_cep_metric, cor_target;
    CLI::App* cor_cmd =
        app.add_subcommand("correlate", "correlate LP and CEP metrics over a sweep");
    cor_cmd->add_option("--sweep", cor_sweep, "sweep.json bundle")->required();
    cor_cmd->add_option("--out", cor_out, "write output to file instead of stdout");
    cor_cmd->add_option("--lp-metric", cor_lp_metric, "single cell: MRR|MRank");
    cor_cmd->add_option("--cep-metric", cor_cep_metric, "single cell: aMean|wMean");
    cor_cmd->add_option("--target", cor_target, "single cell: target relation");

    // ---- sweep ----
    std::string sweep_spec_path;
    int sweep_threads = 0;
    bool sweep_quiet = false;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a hyperparameter sweep");
    sweep_cmd->add_option("--spec", sweep_spec_path, "sweep spec file (ini)")->required();
    sweep_cmd->add_option("--threads", sweep_threads, "grid parallelism (0 = auto)");
    sweep_cmd->add_flag("--quiet", sweep_quiet, "suppress progress output");

    std::vector<std::string> argv_like;
    argv_like.push_back("kge");
    argv_like.insert(argv_like.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_like) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen_cmd) return run_gen(gen);

        if (*split_cmd) {
            if (split_ratios.size() != 4) throw DataError("--ratios takes four values");
            std::ifstream f(split_in);
            if (!f) throw DataError("cannot read " + split_in);
            ParsedTriples parsed = parse_triples(f, DictionaryMode::build);
            std::array<double, 4> ratios;
            std::copy(split_ratios.begin(), split_ratios.end(), ratios.begin());
            KnowledgeGraph kg =
                split_dataset(std::move(parsed.dict), std::move(parsed.triples), ratios,
                              split_seed);
            KgManifest manifest;
            manifest.name = split_name_opt;
            manifest.seed = split_seed;
            manifest.ratios = ratios;
            save_kg(kg, split_out, manifest);
            if (!split_quiet) {
                std::cerr << "wrote dataset to " << split_out << " (LRN "
                          << kg.split(Split::LRN).size() << ", VLD "
                          << kg.split(Split::VLD).size() << ", TUN "
                          << kg.split(Split::TUN).size() << ", TST "
                          << kg.split(Split::TST).size() << ")\n";
            }
            return kExitOk;
        }

        if (*train_cmd) {
            train_cfg.kind = model_kind_from_name(train_model);
            train_cfg.typed = !train_untyped;
            KnowledgeGraph kg = load_kg(train_kg);
            TrainResult result = train(kg, train_cfg, train_quiet ? nullptr : &std::cerr);
            save_model(result.model, train_cfg, kg.dict.content_hash(), train_out);
            if (!train_quiet) {
                const ReplicaLog& log =
                    result.log.replicas[static_cast<std::size_t>(result.log.selected_replica)];
                std::cerr << "selected replica " << result.log.selected_replica
                          << " (tun mrr " << log.final_tun_mrr << "); model written to "
                          << train_out << '\n';
            }
            return kExitOk;
        }

        if (*lp_cmd) {
            KnowledgeGraph kg = load_kg(lp_kg);
            LoadedModel loaded = load_checked_model(lp_model, kg);
            auto split = split_from_name(lp_split);
            if (!split) throw DataError("--split: LRN|VLD|TUN|TST");
            LPConfig cfg = lp_config_from(lp_scope, lp_filter, lp_sides, lp_hits, lp_threads);
            LPReport report = evaluate_lp(loaded.model, kg, *split, cfg);
            if (lp_format == "json") emit(lp_report_json(report).dump(2), lp_out);
            else if (lp_format == "csv")
                emit(lp_report_csv_header() + "\n" + lp_report_csv_row(report), lp_out);
            else throw DataError("--format: json|csv");
            return kExitOk;
        }

        if (*cep_cmd) {
            KnowledgeGraph kg = load_kg(cep_kg);
            LoadedModel loaded = load_checked_model(cep_model, kg);
            auto rel = kg.dict.find_relation(cep_relation);
            if (!rel) throw DataError("unknown relation `" + cep_relation + "`");
            LabelMap labels = derive_labels(kg, *rel);
            ClusterConfig cfg;
            cfg.multiplier = cep_multiplier;
            cfg.max_iterations = cep_max_iter;
            cfg.seed = cep_seed;
            cfg.init = kmeans_init_from_name(cep_init);
            cfg.threads = cep_threads;
            ClusterReport report = evaluate_cep(loaded.model, labels, cfg, cep_relation);
            if (cep_format == "json") emit(cluster_report_json(report).dump(2), cep_out);
            else if (cep_format == "csv")
                emit(cluster_report_csv_header() + "\n" + cluster_report_csv_row(report),
                     cep_out);
            else throw DataError("--format: json|csv");
            if (!cep_histogram.empty()) {
                std::ofstream f(cep_histogram);
                if (!f) throw DataError("cannot write " + cep_histogram);
                f << cluster_histogram_csv(report);
            }
            return kExitOk;
        }

        if (*cor_cmd) {
            std::ifstream f(cor_sweep);
            if (!f) throw DataError("cannot read " + cor_sweep);
            SweepTable table = sweep_table_from_json(nlohmann::json::parse(f));
            bool single = !cor_lp_metric.empty() || !cor_cep_metric.empty() ||
                          !cor_target.empty();
            if (single) {
                if (cor_lp_metric.empty() || cor_cep_metric.empty() || cor_target.empty())
                    throw DataError(
                        "single-cell mode needs --lp-metric, --cep-metric and --target");
                CorrelationCell cell =
                    correlate_reports(table, cor_target, lp_metric_from_name(cor_lp_metric),
                                      cep_metric_from_name(cor_cep_metric));
                nlohmann::ordered_json j;
                j["target"] = cor_target;
                j["lp_metric"] = cor_lp_metric;
                j["cep_metric"] = cor_cep_metric;
                j["pearson"] = cell.pearson ? nlohmann::ordered_json(*cell.pearson)
                                            : nlohmann::ordered_json(nullptr);
                j["spearman"] = cell.spearman ? nlohmann::ordered_json(*cell.spearman)
                                              : nlohmann::ordered_json(nullptr);
                emit(j.dump(2), cor_out);
            } else {
                emit(correlations_csv(table), cor_out);
            }
            return kExitOk;
        }

        if (*sweep_cmd) {
            SweepSpec spec = SweepSpec::from_ini(IniFile::load(sweep_spec_path));
            if (sweep_threads > 0) spec.threads = sweep_threads;
            SweepTable table = run_sweep(spec, sweep_quiet ? nullptr : &std::cerr);
            emit_reports(table, spec.out);
            if (!sweep_quiet) {
                std::size_t failed = 0;
                for (const auto& row : table.rows)
                    if (!row.ok) ++failed;
                std::cerr << "sweep finished: " << table.rows.size() << " rows (" << failed
                          << " failed); reports under " << spec.out.string() << '\n';
            }
            return kExitOk;
        }
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;  // unreachable with require_subcommand(1)
}

} // namespace kge::cli
