#include "copsl/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "copsl/errors.hpp"
#include "copsl/io.hpp"
#include "copsl/sampling.hpp"

namespace copsl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void RunConfig::validate(std::size_t num_mops, std::size_t m) const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
    loss.validate();
    adam.validate();
    if (!weights.empty()) {
        if (weights.size() != num_mops)
            throw ConfigError("weights has " + std::to_string(weights.size()) + " entries but the suite has " +
                              std::to_string(num_mops) + " problems");
        for (double w : weights)
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and >= 0");
    }
    if (!dirichlet_alpha.empty()) {
        if (dirichlet_alpha.size() != m) throw ConfigError("dirichlet_alpha length must equal m");
        for (double a : dirichlet_alpha)
            if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("dirichlet_alpha entries must be > 0");
    }
    if (eval_grid_size != 0 && eval_grid_size < 2) throw ConfigError("eval_grid_size must be >= 2");
    if (m != 2 && m != 3) throw ConfigError("only 2- and 3-objective suites are supported");
    ModelArchitecture{m, hidden_sizes, shared_depth, std::vector<std::size_t>(num_mops, 1)}.validate();
}

std::vector<double> RunConfig::resolved_alpha(std::size_t m) const {
    return dirichlet_alpha.empty() ? std::vector<double>(m, 1.0) : dirichlet_alpha;
}

std::vector<double> RunConfig::resolved_weights(std::size_t num_mops) const {
    return weights.empty() ? std::vector<double>(num_mops, 1.0) : weights;
}

std::size_t RunConfig::resolved_grid_size(std::size_t m) const {
    if (eval_grid_size != 0) return eval_grid_size;
    return m == 2 ? 100 : 105;
}

ProblemSuite resolve_suite(const RunConfig& config, const ProblemRegistry& registry) {
    if (!config.problems.empty()) return make_suite(config.suite, config.problems, registry);
    return builtin_suite(config.suite, registry);
}

std::vector<MopEvaluation> evaluate_model(const CoPslModel& model, const ProblemSuite& suite, const Matrix& grid) {
    if (model.num_heads() != suite.size()) throw ConfigError("evaluate_model: model heads != suite size");
    const auto fwd = forward_all(model, grid);
    std::vector<MopEvaluation> out;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto& mop = suite[i];
        if (mop.reference_point.size() != mop.m)
            throw ConfigError("problem '" + mop.name + "' has no reference point for HV");
        MopEvaluation eval;
        std::vector<ObjectiveVector> raw;
        for (std::size_t b = 0; b < grid.rows(); ++b)
            raw.push_back(mop.evaluate(map_unit_to_box(fwd.unit_outputs[i].row(b), mop.bounds)));
        eval.raw_points = raw.size();
        eval.front = {nondominated_filter(raw), mop.reference_point};
        eval.hv = hypervolume(eval.front.points, mop.reference_point);
        if (mop.has_true_front()) {
            eval.true_hv = true_front_hv(mop, mop.reference_point);
            eval.log_hv_diff = log_hv_diff(eval.true_hv, eval.hv);
        } else {
            eval.true_hv = kNaN;
            eval.log_hv_diff = kNaN;
        }
        out.push_back(std::move(eval));
    }
    return out;
}

namespace {

EvalPoint to_eval_point(std::size_t iteration, const std::vector<MopEvaluation>& evals) {
    EvalPoint p{iteration, {}, {}};
    for (const auto& e : evals) {
        p.hv.push_back(e.hv);
        p.log_hv_diff.push_back(e.log_hv_diff);
    }
    return p;
}

} // namespace

TrainResult train_copsl(const RunConfig& config, const ProblemSuite& suite, const IterationObserver& observer) {
    const auto started = std::chrono::steady_clock::now();
    const std::size_t k = suite.size();
    const std::size_t m = suite.m();
    config.validate(k, m);

    TrainResult result;
    result.arch = ModelArchitecture{m, config.hidden_sizes, config.shared_depth, suite.decision_dims()};
    RunRecord& record = result.record;
    record.config = config;
    for (const auto& mop : suite.problems()) {
        record.mop_names.push_back(mop.name);
        record.true_front_hv.push_back(mop.has_true_front() && mop.reference_point.size() == m
                                           ? true_front_hv(mop, mop.reference_point)
                                           : kNaN);
    }
    record.objective_evaluations.assign(k, 0);
    record.jacobian_evaluations.assign(k, 0);
    record.rng_algorithm = std::string(RngStream::kAlgorithmId);
    record.params = count_params(result.arch);
    record.flops_per_sample = count_flops(result.arch, 1);
    record.training_flops = count_training_flops(result.arch, config.batch_size, config.iterations);

    RngStream rng(config.seed);
    result.model = build_model(result.arch, rng);
    CoPslModel& model = result.model;
    AdamState adam = AdamState::for_model(model);
    IdealPointTracker tracker(k, m);
    const auto alpha = config.resolved_alpha(m);
    const auto weights = config.resolved_weights(k);
    const Matrix grid = uniform_preference_grid(m, config.resolved_grid_size(m));

    record.evals.push_back(to_eval_point(0, evaluate_model(model, suite, grid)));

    const std::size_t batch = config.batch_size;
    std::vector<Matrix> output_grads(k);
    std::vector<double> mop_loss(k);
    Matrix objectives(batch, m);
    std::vector<Matrix> jacobians(batch);
    std::vector<std::vector<double>> box_derivs(batch);

    for (std::size_t t = 1; t <= config.iterations; ++t) {
        const Matrix prefs = sample_preferences(rng, alpha, batch);
        const ModelForward fwd = forward_all(model, prefs);

        for (std::size_t i = 0; i < k; ++i) {
            const auto& mop = suite[i];
            for (std::size_t b = 0; b < batch; ++b) {
                const auto x = map_unit_to_box(fwd.unit_outputs[i].row(b), mop.bounds, &box_derivs[b]);
                const auto f = mop.evaluate(x);
                for (double v : f)
                    if (!std::isfinite(v))
                        throw TrainingError("non-finite objective at iteration " + std::to_string(t) + " for MOP " +
                                            std::to_string(i) + " ('" + mop.name + "')");
                std::copy(f.begin(), f.end(), objectives.row(b).begin());
                jacobians[b] = mop.jacobian_at(x);
            }
            record.objective_evaluations[i] += batch;
            record.jacobian_evaluations[i] += batch;

            const bool update_first =
                config.ideal_update == IdealUpdateOrder::BeforeLoss || !tracker.initialized(i);
            if (update_first)
                for (std::size_t b = 0; b < batch; ++b) tracker.update(i, objectives.row(b));

            const BatchLoss loss = batch_loss(config.loss, objectives, prefs, tracker.ideal(i));
            if (!std::isfinite(loss.value))
                throw TrainingError("non-finite loss at iteration " + std::to_string(t) + " for MOP " +
                                    std::to_string(i) + " ('" + mop.name + "')");
            mop_loss[i] = loss.value;

            Matrix& grad = output_grads[i];
            grad = Matrix(batch, mop.n());
            for (std::size_t b = 0; b < batch; ++b) {
                const auto g = chain_to_decision(loss.grad_f.row(b), jacobians[b], box_derivs[b]);
                std::copy(g.begin(), g.end(), grad.row(b).begin());
            }

            if (!update_first)
                for (std::size_t b = 0; b < batch; ++b) tracker.update(i, objectives.row(b));
        }

        record.mop_losses.push_back(mop_loss);
        record.total_loss.push_back(total_loss(mop_loss, weights));

        const ParamGrads grads = backward_all(model, fwd, output_grads, weights, config.strict_weight_gating);
        adam_step(model, grads, adam, config.adam);
        if (observer) observer(IterationTrace{t, model, fwd, output_grads, grads, weights});

        if (t % config.eval_interval == 0 || t == config.iterations)
            record.evals.push_back(to_eval_point(t, evaluate_model(model, suite, grid)));
    }

    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

TrainResult train_psl(const RunConfig& config, const MopDefinition& mop, const IterationObserver& observer) {
    RunConfig single = config;
    single.suite = mop.name;
    single.problems = {mop.name};
    if (!single.weights.empty() && single.weights.size() != 1) single.weights.clear();
    return train_copsl(single, ProblemSuite(mop.name, {mop}), observer);
}

SeriesStats summarize(const std::vector<double>& values) {
    if (values.empty()) return {kNaN, kNaN};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

namespace {

// Runs jobs [0, count) on up to `threads` workers; job(i) must only touch
// slot i of its output.
template <typename Job>
void parallel_for(std::size_t count, std::size_t threads, Job&& job) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < threads; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
    for (auto& w : workers) w.join();
}

RunOutcome run_one(const RunConfig& config, const ProblemSuite& suite) {
    RunOutcome outcome;
    try {
        auto result = train_copsl(config, suite);
        outcome.record = result.record;
        outcome.result = std::move(result);
    } catch (const Error& e) {
        outcome.record.config = config;
        for (const auto& mop : suite.problems()) outcome.record.mop_names.push_back(mop.name);
        outcome.record.rng_algorithm = std::string(RngStream::kAlgorithmId);
        outcome.record.ok = false;
        outcome.record.error = e.what();
    }
    return outcome;
}

} // namespace

BatchResult run_batch(const std::vector<RunConfig>& configs, const std::vector<std::uint64_t>& seeds,
                      std::size_t threads, const ProblemRegistry& registry) {
    if (seeds.empty()) throw ConfigError("run_batch needs at least one seed");
    std::vector<ProblemSuite> suites;
    for (const auto& c : configs) suites.push_back(resolve_suite(c, registry));

    BatchResult out;
    out.outcomes.assign(configs.size(), std::vector<RunOutcome>(seeds.size()));
    parallel_for(configs.size() * seeds.size(), threads, [&](std::size_t job) {
        const std::size_t c = job / seeds.size();
        const std::size_t s = job % seeds.size();
        RunConfig cfg = configs[c];
        cfg.seed = seeds[s];
        out.outcomes[c][s] = run_one(cfg, suites[c]);
    });

    for (std::size_t c = 0; c < configs.size(); ++c) {
        BatchSummary summary;
        for (const auto& mop : suites[c].problems()) summary.mop_names.push_back(mop.name);
        std::vector<std::vector<double>> hv(suites[c].size());
        std::vector<double> seconds;
        for (const auto& o : out.outcomes[c]) {
            ++summary.runs;
            if (!o.record.ok) {
                ++summary.failures;
                continue;
            }
            seconds.push_back(o.record.wall_seconds);
            for (std::size_t i = 0; i < hv.size(); ++i) hv[i].push_back(o.record.evals.back().hv[i]);
        }
        for (const auto& series : hv) summary.final_hv.push_back(summarize(series));
        summary.wall_seconds = summarize(seconds);
        out.summaries.push_back(std::move(summary));
    }
    return out;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const ProblemSuite& suite,
                                      const std::vector<std::uint64_t>& seeds, std::size_t threads) {
    if (seeds.empty()) throw ConfigError("run_ablation needs at least one seed");
    const auto variants =
        enumerate_shared_variants(suite.m(), base.hidden_sizes, suite.size(), suite.decision_dims());
    const std::size_t k = suite.size();

    std::vector<RunOutcome> outcomes(variants.size() * seeds.size());
    parallel_for(outcomes.size(), threads, [&](std::size_t job) {
        const std::size_t s = job / variants.size();
        const std::size_t v = job % variants.size();
        RunConfig cfg = base;
        cfg.shared_depth = variants[v].shared_depth;
        cfg.seed = seeds[s];
        outcomes[job] = run_one(cfg, suite);
    });

    std::vector<AblationRow> rows;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const RunOutcome& baseline = outcomes[s * variants.size()];
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const RunOutcome& o = outcomes[s * variants.size() + v];
            for (std::size_t i = 0; i < k; ++i) {
                AblationRow row;
                row.shared_depth = variants[v].shared_depth;
                row.seed = seeds[s];
                row.mop = i;
                row.mop_name = suite[i].name;
                row.params = count_params(variants[v]);
                row.ok = o.record.ok;
                row.error = o.record.error;
                row.hv = o.record.ok ? o.record.evals.back().hv[i] : kNaN;
                row.delta_hv = o.record.ok && baseline.record.ok
                                   ? row.hv - baseline.record.evals.back().hv[i]
                                   : kNaN;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string losses_csv(const RunRecord& record) {
    std::ostringstream out;
    out << "iteration,total_loss";
    for (std::size_t i = 0; i < record.mop_names.size(); ++i) out << ",L_" << (i + 1);
    out << "\n";
    for (std::size_t t = 0; t < record.total_loss.size(); ++t) {
        out << (t + 1) << "," << format_double(record.total_loss[t]);
        for (double l : record.mop_losses[t]) out << "," << format_double(l);
        out << "\n";
    }
    return out.str();
}

std::string eval_csv(const RunRecord& record) {
    const std::size_t k = record.mop_names.size();
    std::ostringstream out;
    out << "eval_step";
    for (std::size_t i = 0; i < k; ++i) out << ",HV_" << (i + 1);
    for (std::size_t i = 0; i < k; ++i) out << ",logHVdiff_" << (i + 1);
    out << "\n";
    for (const auto& e : record.evals) {
        out << e.iteration;
        for (double v : e.hv) out << "," << format_double(v);
        for (double v : e.log_hv_diff) out << "," << format_double(v);
        out << "\n";
    }
    return out.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    out << "shared_depth,seed,mop,hv,delta_hv,params\n";
    for (const auto& r : rows)
        out << r.shared_depth << "," << r.seed << "," << r.mop_name << "," << format_double(r.hv) << ","
            << format_double(r.delta_hv) << "," << r.params << "\n";
    return out.str();
}

} // namespace copsl
