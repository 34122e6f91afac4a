#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "npm/dp_pca.hpp"
#include "npm/matrix.hpp"
#include "npm/power_method.hpp"
#include "npm/streaming.hpp"

namespace npm {

/// Round-trip-exact text form of a double (17 significant digits).
std::string format_real(double v);

DenseMatrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const DenseMatrix& m);

struct MatrixSpecConfig {
    enum class Kind { power_law, values, file };
    Kind kind = Kind::power_law;
    int d = 0;
    double alpha = 2.0;
    std::vector<double> values;
    std::string path;
    std::uint64_t seed = 42;  // seed of the planted basis
};

struct RunParams {
    int k = 1;
    int q = 1;
    int p = 1;
    std::optional<int> iterations;  // empty -> "auto"
    double epsilon = 0.2;
    double tau = 1.0;
    double g_constant = 0.25;
};

struct NoiseConfig {
    enum class Kind { none, gaussian, budget_scaled };
    Kind kind = Kind::none;
    double stddev = 0.0;
    double factor = 0.0;
    ToleranceBudget::Mode budget = ToleranceBudget::Mode::gap_dependent;
};

struct PrivacyConfig {
    double eps = 0.5;
    double delta = 1e-6;
    std::optional<double> nu_override;
};

struct NodesConfig {
    enum class Split { uniform, weighted };
    int count = 1;
    Split split = Split::uniform;
};

struct StreamConfig {
    long long n = 0;
};

struct RoundCheckConfig {
    double b = 1.0;
    int p = 1;
    long long n_mc = 10000;
    std::vector<double> t_grid{1.0, 2.0, 3.0};
};

struct SweepAxis {
    std::string param;  // JSON pointer, e.g. "/run/k"
    std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
    enum class Mode { npm, dp_pca, streaming };

    int schema_version = 1;
    Mode mode = Mode::npm;
    MatrixSpecConfig matrix;
    RunParams run;
    NoiseConfig noise;
    PrivacyConfig privacy;
    NodesConfig nodes;
    StreamConfig stream;
    std::optional<RoundCheckConfig> round_check;
    std::vector<std::uint64_t> seeds;
    std::vector<SweepAxis> sweep;
    bool record_diagnostics = true;
    std::string output_dir = "out";

    nlohmann::json canonical;  // fully defaulted, sorted keys
};

/// Validates and canonicalizes; ConfigError messages name the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

struct RunOutcome {
    std::string trace_path;
    std::string sweep_label;  // compact JSON of the sweep point, sorted keys
    std::vector<std::pair<std::string, std::string>> sweep_values;
    std::uint64_t seed = 0;
    std::optional<double> sin_theta_k, tan_theta_k, err_ratio_spectral, err_ratio_frobenius, h;
};

struct ExperimentReport {
    std::vector<RunOutcome> runs;
    std::string runs_csv_path;
};

/// Executes every (sweep point x seed) combination, writes one trace CSV per
/// run plus a runs.csv summary-row file. Deterministic given the config.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Aggregates the traces of a directory into <dir>/summary.csv: one row per
/// run in (sweep point, seed) order plus per-sweep-point mean/stddev columns.
/// Returns the summary path.
std::string summarize_directory(const std::string& dir);

struct BudgetPrintout {
    ToleranceBudget gap_dependent;
    ToleranceBudget gap_independent;
    int iterations_log_d = 0;
    double sigma_k = 0.0;
    double sigma_q1 = 0.0;
};

/// Budgets and iteration counts implied by a config's matrix and run block.
BudgetPrintout compute_budgets(const ExperimentConfig& cfg);

/// Round-distribution tail report for the configured stream.
RoundCheckReport run_round_check(const ExperimentConfig& cfg);

}  // namespace npm
