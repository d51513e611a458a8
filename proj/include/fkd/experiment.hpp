#pragma once

#include "fkd/dataset.hpp"
#include "fkd/errors.hpp"
#include "fkd/fair_decomposition.hpp"
#include "fkd/fairness_metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fkd {

enum class ModelKind { krr, svr, dummy };

struct ModelConfig {
    ModelKind kind = ModelKind::krr;
    double krr_alpha = 0.25;
    double svr_epsilon = 0.01;
    double svr_cost = 0.75;
};

struct KernelConfig {
    double gamma = 0.05;
};

/// Whether the per-iteration regularized inverse is solved exactly or
/// approximated from sampled landmark columns.
enum class InverseMode { exact, nystroem };

struct DecompositionConfig {
    double ridge_alpha = 0.1;
    /// Iteration counts to evaluate; strictly ascending. Larger counts
    /// continue from smaller ones, so the sweep costs one decomposition pass.
    std::vector<int> m_values = {0};
    InverseMode inverse_mode = InverseMode::exact;
    /// Fraction of training rows sampled as landmarks in nystroem mode,
    /// in (0, 1].
    double landmark_fraction = 1.0;
    double max_normalization = 1e12;
};

struct CvConfig {
    int k = 5;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    ModelConfig model;
    KernelConfig kernel;
    DecompositionConfig decomposition;
    CvConfig cv;
    KdeParams metrics;
    /// Default output directory for emitted artifacts; the CLI can override.
    std::string output_path;
    /// Write each fold's fitted transform next to the result files.
    bool save_transforms = false;
    /// Worker threads for the fold loop. Results are identical for any value.
    int threads = 1;
    /// Optional value lists for the two sweep entry points.
    std::vector<double> sweep_alpha_values;
    std::vector<double> sweep_fractions;
};

/// One evaluated (iteration count, fold) pair. attribute_reports holds one
/// metric report per protected column, all computed from the same prediction
/// vector; mae is identical across them.
struct CellResult {
    int m = 0;
    int fold = 0;
    /// Iterations the decomposition actually ran; less than m after a clean
    /// degenerate stop.
    int iterations_completed = 0;
    std::vector<MetricReport> attribute_reports;
};

struct MetricSummary {
    double mean = 0.0;
    double std_dev = 0.0;
};

/// Per-metric mean and empirical standard deviation across folds for one
/// iteration count, keyed by flattened metric name.
struct AggregateRow {
    int m = 0;
    std::vector<std::pair<std::string, MetricSummary>> metrics;
};

/// Wall-clock milliseconds per pipeline phase, summed over folds. With
/// multiple worker threads the per-phase sums can exceed total_ms.
struct PhaseRuntimes {
    double load_ms = 0.0;
    double kernel_ms = 0.0;
    double decompose_ms = 0.0;
    double fit_ms = 0.0;
    double predict_ms = 0.0;
    double score_ms = 0.0;
    double total_ms = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<std::string> protected_names;
    /// Canonical metric order: mae, then each fairness measure; with several
    /// protected columns the fairness names carry a ".column" suffix.
    std::vector<std::string> metric_names;
    /// Ordered by iteration count, then fold.
    std::vector<CellResult> cells;
    std::vector<AggregateRow> aggregates;
    std::vector<std::string> warnings;
    PhaseRuntimes runtime;
};

/// A module error that surfaced while processing one (fold, m) cell. m is -1
/// when the failing step was fold-wide (kernel build or decomposition).
class ExperimentError : public Error {
public:
    ExperimentError(const std::string& msg, int fold, int m)
        : Error(msg), fold_(fold), m_(m) {}
    int fold() const { return fold_; }
    int m() const { return m_; }

private:
    int fold_;
    int m_;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON form of a config: the experiment definition only, without
/// execution knobs (threads, output path, sweep lists). Parsing it back
/// yields an equivalent config.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Cross-validated run over every configured iteration count: per fold, build
/// the train and test kernels once, decompose with shared iteration prefixes,
/// then fit, predict, and score each m. All randomness derives from cv.seed
/// through counter-based splits, so thread count never changes results.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Same, over an already-loaded dataset.
ExperimentResult run_experiment_on(const ExperimentConfig& config, const TabularDataset& data);

struct AlphaSweepResult {
    std::vector<double> alpha_values;
    std::vector<ExperimentResult> runs;
};

/// run_experiment once per regularization value, on a dataset loaded once.
AlphaSweepResult sweep_alpha_tilde(const ExperimentConfig& config,
                                   std::span<const double> alpha_values);

struct NystroemSweepResult {
    ExperimentResult exact;
    std::vector<double> fractions;
    std::vector<ExperimentResult> runs;
};

/// run_experiment once per landmark fraction (each in (0, 1]) plus an
/// exact-inverse reference run for delta reporting.
NystroemSweepResult sweep_nystroem(const ExperimentConfig& config,
                                   std::span<const double> fractions);

nlohmann::json result_to_json(const ExperimentResult& result);
std::string result_to_csv(const ExperimentResult& result);

/// Writes results.json (full per-fold detail plus config echo) and
/// results.csv (m, metric, mean, std) into the directory, creating it if
/// needed. Bytes are identical across runs with the same config and seed;
/// timings are deliberately kept out of these files.
void emit_results(const ExperimentResult& result, const std::string& directory);

/// Writes sweep_alpha.json and sweep_alpha.csv (alpha_tilde, m, metric,
/// mean, std).
void emit_alpha_sweep(const AlphaSweepResult& sweep, const std::string& directory);

/// Writes sweep_nystroem.json and sweep_nystroem.csv (fraction, m, metric,
/// mean, std, delta_vs_exact).
void emit_nystroem_sweep(const NystroemSweepResult& sweep, const std::string& directory);

}  // namespace fkd
