#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "copsl/matrix.hpp"
#include "copsl/metrics.hpp"
#include "copsl/model.hpp"
#include "copsl/optim.hpp"
#include "copsl/problems.hpp"
#include "copsl/scalarize.hpp"

namespace copsl {

enum class IdealUpdateOrder { BeforeLoss, AfterLoss };

struct RunConfig {
    // Built-in suite name, or the label of a custom suite when `problems` is set.
    std::string suite = "synthetic-2d";
    std::vector<std::string> problems;
    LossKind loss;
    std::size_t iterations = 500;
    std::size_t batch_size = 15;
    AdamConfig adam;
    std::vector<double> dirichlet_alpha;  // empty: all ones
    std::vector<double> weights;          // empty: all ones
    std::vector<std::size_t> hidden_sizes{256, 256};
    std::size_t shared_depth = 1;
    std::uint64_t seed = 0;
    std::size_t eval_grid_size = 0;  // 0: 100 for m=2, 105 for m=3
    std::size_t eval_interval = 10;
    IdealUpdateOrder ideal_update = IdealUpdateOrder::BeforeLoss;
    bool strict_weight_gating = false;

    // Throws ConfigError. K and m come from the resolved suite.
    void validate(std::size_t num_mops, std::size_t m) const;
    std::vector<double> resolved_alpha(std::size_t m) const;
    std::vector<double> resolved_weights(std::size_t num_mops) const;
    std::size_t resolved_grid_size(std::size_t m) const;
};

ProblemSuite resolve_suite(const RunConfig& config, const ProblemRegistry& registry = ProblemRegistry::builtin());

struct MopEvaluation {
    FrontApproximation front;  // nondominated points
    std::size_t raw_points = 0;
    double hv = 0.0;
    double true_hv = 0.0;      // NaN without a closed-form front
    double log_hv_diff = 0.0;  // NaN without a closed-form front
};

// Pushes the preference grid through the model and scores each head's front
// against its problem's reference point (ConfigError if it has none).
std::vector<MopEvaluation> evaluate_model(const CoPslModel& model, const ProblemSuite& suite, const Matrix& grid);

struct EvalPoint {
    std::size_t iteration = 0;
    std::vector<double> hv;
    std::vector<double> log_hv_diff;
};

struct RunRecord {
    RunConfig config;
    std::vector<std::string> mop_names;
    std::vector<double> total_loss;               // one per iteration
    std::vector<std::vector<double>> mop_losses;  // [iteration][mop]
    std::vector<EvalPoint> evals;                 // iteration 0, every eval_interval, and T
    std::vector<double> true_front_hv;
    std::vector<std::uint64_t> objective_evaluations;  // training only, per MOP
    std::vector<std::uint64_t> jacobian_evaluations;
    double wall_seconds = 0.0;
    std::uint64_t params = 0;
    std::uint64_t flops_per_sample = 0;
    std::uint64_t training_flops = 0;
    std::string rng_algorithm;
    bool ok = true;
    std::string error;
};

// Per-iteration hook, called after the parameter update.
struct IterationTrace {
    std::size_t iteration;
    const CoPslModel& model;            // after the update
    const ModelForward& forward;        // computed with the pre-update model
    const std::vector<Matrix>& output_grads;
    const ParamGrads& grads;
    std::span<const double> weights;
};
using IterationObserver = std::function<void(const IterationTrace&)>;

struct TrainResult {
    CoPslModel model;
    ModelArchitecture arch;
    RunRecord record;
};

// Collaborative training of one model on every problem in `suite`.
// TrainingError on a non-finite loss; the message names the iteration and MOP.
TrainResult train_copsl(const RunConfig& config, const ProblemSuite& suite,
                        const IterationObserver& observer = {});

// Single-problem baseline: the same loop over a one-element suite.
TrainResult train_psl(const RunConfig& config, const MopDefinition& mop, const IterationObserver& observer = {});

struct RunOutcome {
    RunRecord record;
    std::optional<TrainResult> result;  // empty if the run failed
};

struct SeriesStats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
};
SeriesStats summarize(const std::vector<double>& values);

struct BatchSummary {
    std::vector<std::string> mop_names;
    std::vector<SeriesStats> final_hv;  // per MOP over successful runs
    SeriesStats wall_seconds;
    std::size_t runs = 0;
    std::size_t failures = 0;
};

struct BatchResult {
    std::vector<std::vector<RunOutcome>> outcomes;  // [config][seed]
    std::vector<BatchSummary> summaries;            // per config
};

// Runs every (config, seed) pair; seeds override config.seed. `threads` = 0
// uses the hardware concurrency. Results do not depend on the thread count.
BatchResult run_batch(const std::vector<RunConfig>& configs, const std::vector<std::uint64_t>& seeds,
                      std::size_t threads = 0, const ProblemRegistry& registry = ProblemRegistry::builtin());

struct AblationRow {
    std::size_t shared_depth = 0;
    std::uint64_t seed = 0;
    std::size_t mop = 0;
    std::string mop_name;
    double hv = 0.0;
    double delta_hv = 0.0;  // hv minus the shared_depth = 0 hv for the same seed and MOP
    std::uint64_t params = 0;
    bool ok = true;
    std::string error;
};

// Trains every shared-depth variant of `base` for every seed.
std::vector<AblationRow> run_ablation(const RunConfig& base, const ProblemSuite& suite,
                                      const std::vector<std::uint64_t>& seeds, std::size_t threads = 0);

std::string losses_csv(const RunRecord& record);
std::string eval_csv(const RunRecord& record);
std::string ablation_csv(const std::vector<AblationRow>& rows);

} // namespace copsl
