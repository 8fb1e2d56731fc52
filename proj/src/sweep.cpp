#include "kge/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "kge/error.hpp"
#include "kge/hashing.hpp"
#include "kge/parallel.hpp"

namespace kge {

namespace {

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string canonical_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* scope_token(const std::optional<CandidateScope>& s) {
    if (!s) return "auto";
    return *s == CandidateScope::typed ? "typed" : "global";
}

std::string now_utc_iso() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

const char* lp_metric_name(LpMetric m) { return m == LpMetric::MRR ? "MRR" : "MRank"; }
const char* cep_metric_name(CepMetric m) { return m == CepMetric::aMean ? "aMean" : "wMean"; }

LpMetric lp_metric_from_name(std::string_view name) {
    if (name == "MRR" || name == "mrr") return LpMetric::MRR;
    if (name == "MRank" || name == "mrank") return LpMetric::MRank;
    throw DataError("unknown LP metric `" + std::string(name) + "` (MRR|MRank)");
}

CepMetric cep_metric_from_name(std::string_view name) {
    if (name == "aMean" || name == "amean") return CepMetric::aMean;
    if (name == "wMean" || name == "wmean") return CepMetric::wMean;
    throw DataError("unknown CEP metric `" + std::string(name) + "` (aMean|wMean)");
}

SweepSpec SweepSpec::from_ini(const IniFile& ini) {
    SweepSpec s;
    s.dataset = ini.require("", "dataset");
    s.out = ini.require("", "out");
    s.threads = ini.get_int("", "threads", 0);
    s.keep_models = ini.get_bool("", "keep_models", true);

    if (ini.has("grid", "k")) s.grid.k = ini.get_int_list("grid", "k");
    if (ini.has("grid", "gamma")) s.grid.gamma = ini.get_double_list("grid", "gamma");
    if (ini.has("grid", "model")) {
        s.grid.kinds.clear();
        for (const auto& name : ini.get_list("grid", "model"))
            s.grid.kinds.push_back(model_kind_from_name(name));
    }
    if (ini.has("grid", "typed")) {
        s.grid.typed.clear();
        for (const auto& tok : ini.get_list("grid", "typed")) {
            if (tok == "true" || tok == "1") s.grid.typed.push_back(1);
            else if (tok == "false" || tok == "0") s.grid.typed.push_back(0);
            else throw DataError("grid typed: not a boolean: " + tok);
        }
    }
    if (ini.has("grid", "lr")) s.grid.learning_rates = ini.get_double_list("grid", "lr");
    if (ini.has("grid", "seed")) {
        s.grid.seeds.clear();
        for (int v : ini.get_int_list("grid", "seed"))
            s.grid.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    s.grid.replicas = ini.get_int("grid", "replicas", s.grid.replicas);
    s.grid.epochs = ini.get_int("grid", "epochs", s.grid.epochs);

    std::string scope = ini.get_or("lp", "scope", "auto");
    if (scope == "auto") s.lp.scope.reset();
    else if (scope == "typed") s.lp.scope = CandidateScope::typed;
    else if (scope == "global") s.lp.scope = CandidateScope::global;
    else throw DataError("lp scope: auto|typed|global, got " + scope);
    std::string filter = ini.get_or("lp", "filter", "raw");
    if (filter == "raw") s.lp.filter = FilterMode::raw;
    else if (filter == "filtered") s.lp.filter = FilterMode::filtered;
    else throw DataError("lp filter: raw|filtered, got " + filter);
    std::string sides = ini.get_or("lp", "sides", "both");
    if (sides == "both") s.lp.sides = EvalSides::both;
    else if (sides == "head") s.lp.sides = EvalSides::head;
    else if (sides == "tail") s.lp.sides = EvalSides::tail;
    else throw DataError("lp sides: both|head|tail, got " + sides);
    if (ini.has("lp", "hits")) s.lp.hits_levels = ini.get_int_list("lp", "hits");
    std::string split = ini.get_or("lp", "split", "TST");
    auto sp = split_from_name(split);
    if (!sp) throw DataError("lp split: LRN|VLD|TUN|TST, got " + split);
    s.lp_split = *sp;

    s.cep_targets = ini.get_list("cep", "targets");
    s.cep_multiplier = ini.get_int("cep", "multiplier", s.cep_multiplier);
    s.cep_seed = static_cast<std::uint64_t>(ini.get_int("cep", "seed", 0));
    s.cep_init = kmeans_init_from_name(ini.get_or("cep", "init", "kmeans++"));
    s.cep_max_iterations = ini.get_int("cep", "max_iterations", s.cep_max_iterations);
    return s;
}

void SweepSpec::validate() const {
    if (grid.size() == 0) throw DataError("sweep: empty grid");
    if (grid.k.empty() || grid.gamma.empty() || grid.kinds.empty() || grid.typed.empty() ||
        grid.learning_rates.empty() || grid.seeds.empty())
        throw DataError("sweep: every grid axis needs at least one value");
    if (grid.replicas < 1 || grid.epochs < 1)
        throw DataError("sweep: replicas and epochs must be positive");
    if (cep_targets.empty()) throw DataError("sweep: no cep targets configured");
    lp.validate();
    if (cep_multiplier != 1 && cep_multiplier != 2 && cep_multiplier != 4)
        throw DataError("sweep: cep multiplier must be 1, 2 or 4");
}

std::uint64_t SweepSpec::content_hash(std::uint64_t dataset_hash) const {
    Fnv1a h;
    h.update(dataset_hash);
    for (int v : grid.k) h.update(v);
    for (double v : grid.gamma) h.update(canonical_double(v));
    for (ModelKind m : grid.kinds) h.update(model_kind_name(m));
    for (char t : grid.typed) h.update(static_cast<int>(t));
    for (double v : grid.learning_rates) h.update(canonical_double(v));
    for (std::uint64_t v : grid.seeds) h.update(v);
    h.update(grid.replicas);
    h.update(grid.epochs);
    h.update(scope_token(lp.scope));
    h.update(lp.filter == FilterMode::raw ? "raw" : "filtered");
    h.update(static_cast<int>(lp.sides));
    for (int n : lp.hits_levels) h.update(n);
    h.update(split_name(lp_split));
    for (const auto& t : cep_targets) h.update(t);
    h.update(cep_multiplier);
    h.update(cep_seed);
    h.update(kmeans_init_name(cep_init));
    h.update(cep_max_iterations);
    return h.digest();
}

namespace {

std::string row_model_id(const RowConfig& rc, const SweepSpec& spec,
                         std::uint64_t dataset_hash) {
    Fnv1a h;
    h.update(dataset_hash);
    h.update(spec.content_hash(dataset_hash));
    h.update(rc.k);
    h.update(canonical_double(rc.gamma));
    h.update(model_kind_name(rc.kind));
    h.update(rc.typed ? 1 : 0);
    h.update(canonical_double(rc.learning_rate));
    h.update(rc.seed);
    h.update(rc.replicas);
    h.update(rc.epochs);
    return hex64(h.digest());
}

std::vector<RowConfig> enumerate_grid(const GridAxes& g) {
    std::vector<RowConfig> out;
    out.reserve(g.size());
    for (int k : g.k)
        for (double gamma : g.gamma)
            for (ModelKind kind : g.kinds)
                for (char typed : g.typed)
                    for (double lr : g.learning_rates)
                        for (std::uint64_t seed : g.seeds) {
                            RowConfig rc;
                            rc.k = k;
                            rc.gamma = gamma;
                            rc.kind = kind;
                            rc.typed = typed != 0;
                            rc.learning_rate = lr;
                            rc.seed = seed;
                            rc.replicas = g.replicas;
                            rc.epochs = g.epochs;
                            out.push_back(rc);
                        }
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw DataError("cannot write " + tmp.string());
        f << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

nlohmann::ordered_json sweep_row_json(const SweepRow& row) {
    nlohmann::ordered_json j;
    j["model_id"] = row.model_id;
    nlohmann::ordered_json c;
    c["k"] = row.config.k;
    c["gamma"] = row.config.gamma;
    c["kind"] = model_kind_name(row.config.kind);
    c["typed"] = row.config.typed;
    c["learning_rate"] = row.config.learning_rate;
    c["seed"] = row.config.seed;
    c["replicas"] = row.config.replicas;
    c["epochs"] = row.config.epochs;
    j["config"] = c;
    j["status"] = row.ok ? "ok" : "failed";
    if (!row.ok) {
        j["error"] = row.error;
        return j;
    }
    j["mrank"] = row.mrank;
    j["mrr"] = row.mrr;
    nlohmann::ordered_json hits;
    for (const auto& [n, v] : row.hits) hits[std::to_string(n)] = v;
    j["hits"] = hits;
    nlohmann::ordered_json cep;
    for (const auto& [target, s] : row.cep) {
        nlohmann::ordered_json t;
        t["K"] = s.K;
        t["N"] = s.N;
        t["a_mean"] = s.a_mean;
        t["w_mean"] = s.w_mean;
        cep[target] = t;
    }
    j["cep"] = cep;
    return j;
}

SweepRow sweep_row_from_json(const nlohmann::json& j) {
    SweepRow row;
    row.model_id = j.at("model_id").get<std::string>();
    const auto& c = j.at("config");
    row.config.k = c.at("k").get<int>();
    row.config.gamma = c.at("gamma").get<double>();
    row.config.kind = model_kind_from_name(c.at("kind").get<std::string>());
    row.config.typed = c.at("typed").get<bool>();
    row.config.learning_rate = c.at("learning_rate").get<double>();
    row.config.seed = c.at("seed").get<std::uint64_t>();
    row.config.replicas = c.at("replicas").get<int>();
    row.config.epochs = c.at("epochs").get<int>();
    row.ok = j.at("status").get<std::string>() == "ok";
    if (!row.ok) {
        row.error = j.value("error", std::string());
        return row;
    }
    row.mrank = j.at("mrank").get<double>();
    row.mrr = j.at("mrr").get<double>();
    for (const auto& [key, v] : j.at("hits").items())
        row.hits[std::stoi(key)] = v.get<double>();
    for (const auto& [target, t] : j.at("cep").items()) {
        CepSummary s;
        s.K = t.at("K").get<int>();
        s.N = t.at("N").get<int>();
        s.a_mean = t.at("a_mean").get<double>();
        s.w_mean = t.at("w_mean").get<double>();
        row.cep[target] = s;
    }
    return row;
}

SweepTable run_sweep(const SweepSpec& spec, std::ostream* progress) {
    spec.validate();

    KnowledgeGraph kg = load_kg(spec.dataset);
    KgManifest manifest = load_manifest(spec.dataset);
    const std::uint64_t dataset_hash = kg.content_hash();

    std::map<std::string, LabelMap> labels;
    for (const auto& target : spec.cep_targets) {
        auto rel = kg.dict.find_relation(target);
        if (!rel) throw DataError("sweep: cep target relation `" + target + "` not found");
        labels.emplace(target, derive_labels(kg, *rel));
    }

    std::filesystem::create_directories(spec.out / "reports");
    std::filesystem::create_directories(spec.out / "models");

    std::vector<RowConfig> grid = enumerate_grid(spec.grid);
    SweepTable table;
    table.dataset_name = manifest.name;
    table.dataset_hash = dataset_hash;
    table.spec_hash = spec.content_hash(dataset_hash);
    table.created = now_utc_iso();
    table.cep_targets = spec.cep_targets;
    table.hits_levels = spec.lp.hits_levels;
    table.rows.resize(grid.size());

    std::mutex io_mutex;
    std::vector<std::exception_ptr> fatal(grid.size());

    parallel_for(grid.size(), spec.threads, [&](std::size_t i) {
        try {
            const RowConfig& rc = grid[i];
            SweepRow row;
            row.model_id = row_model_id(rc, spec, dataset_hash);
            row.config = rc;

            std::filesystem::path row_path = spec.out / "reports" / (row.model_id + ".json");
            if (std::filesystem::exists(row_path)) {
                try {
                    std::ifstream f(row_path);
                    nlohmann::json j = nlohmann::json::parse(f);
                    SweepRow cached = sweep_row_from_json(j);
                    if (cached.model_id == row.model_id) {
                        table.rows[i] = std::move(cached);
                        if (progress) {
                            std::lock_guard<std::mutex> lock(io_mutex);
                            *progress << "row " << i + 1 << "/" << grid.size() << " "
                                      << row.model_id << " reused\n";
                        }
                        return;
                    }
                } catch (const std::exception&) {
                    // unreadable cache entry; recompute
                }
            }

            try {
                TrainConfig tc;
                tc.k = rc.k;
                tc.gamma = rc.gamma;
                tc.learning_rate = rc.learning_rate;
                tc.max_epochs = rc.epochs;
                tc.replicas = rc.replicas;
                tc.seed = rc.seed;
                tc.kind = rc.kind;
                tc.typed = rc.typed;
                tc.eval_every = 0;  // replica selection still evaluates at the end
                tc.threads = 1;
                TrainResult trained = train(kg, tc);

                if (spec.keep_models)
                    save_model(trained.model, tc, kg.dict.content_hash(),
                               spec.out / "models" / (row.model_id + ".bin"));

                LPConfig lp = spec.lp;
                lp.threads = 1;
                LPReport rep = evaluate_lp(trained.model, kg, spec.lp_split, lp);
                row.mrank = rep.overall.mrank;
                row.mrr = rep.overall.mrr;
                row.hits = rep.overall.hits;

                ClusterConfig cc;
                cc.multiplier = spec.cep_multiplier;
                cc.max_iterations = spec.cep_max_iterations;
                cc.seed = spec.cep_seed;
                cc.init = spec.cep_init;
                cc.threads = 1;
                for (const auto& target : spec.cep_targets) {
                    ClusterReport cr = evaluate_cep(trained.model, labels.at(target), cc, target);
                    row.cep[target] = {cr.K, cr.N, cr.a_mean, cr.w_mean};
                }
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
                row.hits.clear();
                row.cep.clear();
            }

            write_atomic(row_path, sweep_row_json(row).dump(2) + "\n");
            if (progress) {
                std::lock_guard<std::mutex> lock(io_mutex);
                *progress << "row " << i + 1 << "/" << grid.size() << " " << row.model_id
                          << (row.ok ? " ok mrr=" + fmt_metric(row.mrr)
                                     : " failed: " + row.error)
                          << '\n';
            }
            table.rows[i] = std::move(row);
        } catch (...) {
            fatal[i] = std::current_exception();
        }
    });
    for (const auto& e : fatal)
        if (e) std::rethrow_exception(e);

    return table;
}

CorrelationCell correlate_reports(const SweepTable& table, const std::string& target,
                                  LpMetric lp_metric, CepMetric cep_metric) {
    std::vector<double> x, y;
    for (const SweepRow& row : table.rows) {
        if (!row.ok) continue;
        auto it = row.cep.find(target);
        if (it == row.cep.end()) continue;
        x.push_back(lp_metric == LpMetric::MRR ? row.mrr : row.mrank);
        y.push_back(cep_metric == CepMetric::aMean ? it->second.a_mean
                                                   : it->second.w_mean);
    }
    if (x.size() < 2)
        throw DataError("correlate_reports: fewer than 2 successful rows for target `" +
                        target + "`");
    return {pearson(x, y), spearman(x, y)};
}

std::string sweep_csv(const SweepTable& table) {
    std::ostringstream out;
    out << "model_id,k,gamma,model,typed,lr,seed,replicas,epochs,status,mrank,mrr";
    for (int n : table.hits_levels) out << ",hits@" << n;
    for (const auto& target : table.cep_targets)
        out << ',' << target << "_K," << target << "_N," << target << "_aMean," << target
            << "_wMean";
    out << '\n';

    for (const SweepRow& row : table.rows) {
        out << row.model_id << ',' << row.config.k << ',' << fmt_g(row.config.gamma) << ','
            << model_kind_name(row.config.kind) << ',' << (row.config.typed ? "true" : "false")
            << ',' << fmt_g(row.config.learning_rate) << ',' << row.config.seed << ','
            << row.config.replicas << ',' << row.config.epochs << ','
            << (row.ok ? "ok" : "failed");
        if (row.ok) {
            out << ',' << fmt_metric(row.mrank) << ',' << fmt_metric(row.mrr);
            for (int n : table.hits_levels) {
                auto it = row.hits.find(n);
                out << ',' << (it != row.hits.end() ? fmt_metric(it->second) : "");
            }
            for (const auto& target : table.cep_targets) {
                auto it = row.cep.find(target);
                if (it != row.cep.end())
                    out << ',' << it->second.K << ',' << it->second.N << ','
                        << fmt_metric(it->second.a_mean) << ',' << fmt_metric(it->second.w_mean);
                else
                    out << ",,,,";
            }
        } else {
            out << ",,";
            for (std::size_t i = 0; i < table.hits_levels.size(); ++i) out << ',';
            for (std::size_t i = 0; i < table.cep_targets.size(); ++i) out << ",,,,";
        }
        out << '\n';
    }
    return out.str();
}

std::string correlations_csv(const SweepTable& table) {
    std::ostringstream out;
    out << "dataset,target,lp_metric,pearson_aMean,pearson_wMean,spearman_aMean,"
           "spearman_wMean\n";
    auto cell_text = [](const std::optional<double>& v) {
        return v ? fmt_metric(*v) : std::string("NA");
    };
    for (const auto& target : table.cep_targets) {
        for (LpMetric lp : {LpMetric::MRR, LpMetric::MRank}) {
            std::optional<CorrelationCell> a, w;
            try {
                a = correlate_reports(table, target, lp, CepMetric::aMean);
                w = correlate_reports(table, target, lp, CepMetric::wMean);
            } catch (const DataError&) {
                // not enough rows; emit NA cells
            }
            out << table.dataset_name << ',' << target << ',' << lp_metric_name(lp) << ','
                << (a ? cell_text(a->pearson) : "NA") << ','
                << (w ? cell_text(w->pearson) : "NA") << ','
                << (a ? cell_text(a->spearman) : "NA") << ','
                << (w ? cell_text(w->spearman) : "NA") << '\n';
        }
    }
    return out.str();
}

nlohmann::ordered_json sweep_table_json(const SweepTable& table) {
    nlohmann::ordered_json j;
    j["dataset_name"] = table.dataset_name;
    j["dataset_hash"] = hex64(table.dataset_hash);
    j["spec_hash"] = hex64(table.spec_hash);
    j["created"] = table.created;
    j["cep_targets"] = table.cep_targets;
    j["hits_levels"] = table.hits_levels;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const SweepRow& row : table.rows) rows.push_back(sweep_row_json(row));
    j["rows"] = rows;
    return j;
}

SweepTable sweep_table_from_json(const nlohmann::json& j) {
    SweepTable table;
    table.dataset_name = j.at("dataset_name").get<std::string>();
    table.dataset_hash = std::stoull(j.at("dataset_hash").get<std::string>(), nullptr, 16);
    table.spec_hash = std::stoull(j.at("spec_hash").get<std::string>(), nullptr, 16);
    table.created = j.value("created", std::string());
    table.cep_targets = j.at("cep_targets").get<std::vector<std::string>>();
    table.hits_levels = j.at("hits_levels").get<std::vector<int>>();
    for (const auto& row : j.at("rows")) table.rows.push_back(sweep_row_from_json(row));
    return table;
}

void emit_reports(const SweepTable& table, const std::filesystem::path& out_dir) {
    if (table.rows.empty()) throw DataError("emit_reports: empty table");
    std::filesystem::create_directories(out_dir);
    write_atomic(out_dir / "sweep.csv", sweep_csv(table));
    write_atomic(out_dir / "correlations.csv", correlations_csv(table));
    write_atomic(out_dir / "sweep.json", sweep_table_json(table).dump(2) + "\n");
}

} // namespace kge
