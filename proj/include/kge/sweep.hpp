#pragma once
// Hyperparameter sweep: train a model grid, run both evaluation protocols on
// every model, assemble one table, correlate.
//
// Grid points are independent and run in a bounded pool; rows land in grid
// order (k, gamma, kind, typed, lr, seed; innermost last), never completion
// order. Each finished row is persisted as reports/<model-id>.json and reused
// verbatim on rerun, so interrupted sweeps resume where they stopped.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kge/cep.hpp"
#include "kge/ini.hpp"
#include "kge/lp.hpp"
#include "kge/model.hpp"
#include "kge/stats.hpp"

namespace kge {

struct GridAxes {
    std::vector<int> k{16, 32, 64};
    std::vector<double> gamma{1.0, 2.0, 4.0};
    std::vector<ModelKind> kinds{ModelKind::transE};
    std::vector<char> typed{1};
    std::vector<double> learning_rates{0.01};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int replicas = 1;
    int epochs = 80;

    std::size_t size() const {
        return k.size() * gamma.size() * kinds.size() * typed.size() *
               learning_rates.size() * seeds.size();
    }
};

struct SweepSpec {
    std::filesystem::path dataset;
    std::filesystem::path out;
    GridAxes grid;
    std::vector<std::string> cep_targets;
    int cep_multiplier = 4;
    std::uint64_t cep_seed = 0;
    KMeansInit cep_init = KMeansInit::kmeanspp;
    int cep_max_iterations = 100;
    Split lp_split = Split::TST;
    LPConfig lp;
    int threads = 0;
    bool keep_models = true;

    static SweepSpec from_ini(const IniFile& ini);
    void validate() const;

    // Identity of the sweep's work, excluding out path and parallelism.
    std::uint64_t content_hash(std::uint64_t dataset_hash) const;
};

struct RowConfig {
    int k = 0;
    double gamma = 0.0;
    ModelKind kind = ModelKind::transE;
    bool typed = true;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
    int replicas = 1;
    int epochs = 0;
};

struct CepSummary {
    int K = 0;
    int N = 0;
    double a_mean = 0.0;
    double w_mean = 0.0;
};

struct SweepRow {
    std::string model_id;
    RowConfig config;
    bool ok = false;
    std::string error;
    double mrank = 0.0;
    double mrr = 0.0;
    std::map<int, double> hits;
    std::map<std::string, CepSummary> cep;  // target relation -> summary
};

struct SweepTable {
    std::string dataset_name;
    std::uint64_t dataset_hash = 0;
    std::uint64_t spec_hash = 0;
    std::string created;  // carried in the JSON bundle only
    std::vector<std::string> cep_targets;
    std::vector<int> hits_levels;
    std::vector<SweepRow> rows;
};

SweepTable run_sweep(const SweepSpec& spec, std::ostream* progress = nullptr);

// sweep.csv, correlations.csv and the sweep.json bundle under spec.out.
void emit_reports(const SweepTable& table, const std::filesystem::path& out_dir);

enum class LpMetric { MRR, MRank };
enum class CepMetric { aMean, wMean };

const char* lp_metric_name(LpMetric m);
const char* cep_metric_name(CepMetric m);
LpMetric lp_metric_from_name(std::string_view name);
CepMetric cep_metric_from_name(std::string_view name);

// Aligns the two series over the table's ok rows and correlates them.
CorrelationCell correlate_reports(const SweepTable& table, const std::string& target,
                                  LpMetric lp_metric, CepMetric cep_metric);

std::string sweep_csv(const SweepTable& table);
std::string correlations_csv(const SweepTable& table);
nlohmann::ordered_json sweep_table_json(const SweepTable& table);
SweepTable sweep_table_from_json(const nlohmann::json& j);

nlohmann::ordered_json sweep_row_json(const SweepRow& row);
SweepRow sweep_row_from_json(const nlohmann::json& j);

} // namespace kge
