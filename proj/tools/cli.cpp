#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "copsl/config.hpp"
#include "copsl/errors.hpp"
#include "copsl/io.hpp"
#include "copsl/metrics.hpp"
#include "copsl/model.hpp"
#include "copsl/trainer.hpp"

namespace copsl::cli {
namespace {

namespace fs = std::filesystem;

// Hidden sizes of the shared-layer ablation when the config leaves them unset.
const std::vector<std::size_t> kAblationHidden{180, 180, 180};

fs::path resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return ".";
}

std::string human(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<double> parse_ref(const std::string& text) {
    std::vector<double> ref;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InputError("--ref: '" + item + "' is not a number");
        }
        if (used != item.size() || !std::isfinite(v)) throw InputError("--ref: '" + item + "' is not a number");
        ref.push_back(v);
    }
    if (ref.size() != 2 && ref.size() != 3) throw InputError("--ref needs 2 or 3 comma-separated values");
    return ref;
}

// Checkpoint metadata is what `front` uses to rebuild the suite.
nlohmann::json checkpoint_metadata(const RunRecord& record) {
    return {{"suite", record.config.suite}, {"problems", record.mop_names}, {"seed", record.config.seed}};
}

fs::path indexed_path(const fs::path& base, std::size_t i) {
    fs::path p = base;
    p.replace_filename(base.stem().string() + "_" + std::to_string(i + 1) + base.extension().string());
    return p;
}

struct RunArgs {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::size_t threads = 0;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    const RunConfig config = load_config(a.config);
    const ProblemSuite suite = resolve_suite(config);
    config.validate(suite.size(), suite.m());
    const std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector{config.seed} : a.seeds;

    const BatchResult batch = run_batch({config}, seeds, a.threads);
    const fs::path dir = resolve_out_dir(a.out);
    fs::create_directories(dir);

    int code = kExitOk;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const RunOutcome& o = batch.outcomes[0][s];
        const std::string tag = "seed" + std::to_string(seeds[s]);
        write_file_atomic(dir / ("record_" + tag + ".json"), record_to_json(o.record).dump(2) + "\n");
        if (!o.record.ok) {
            err << "run with seed " << seeds[s] << " failed: " << o.record.error << "\n";
            code = kExitRunFailed;
            continue;
        }
        write_file_atomic(dir / ("losses_" + tag + ".csv"), losses_csv(o.record));
        write_file_atomic(dir / ("eval_" + tag + ".csv"), eval_csv(o.record));
        save_checkpoint(o.result->model, o.result->arch, dir / ("checkpoint_" + tag + ".ckpt"),
                        checkpoint_metadata(o.record));
    }

    const BatchSummary& sum = batch.summaries[0];
    out << "runs " << sum.runs << ", failures " << sum.failures << "\n";
    for (std::size_t i = 0; i < sum.mop_names.size() && i < sum.final_hv.size(); ++i)
        out << sum.mop_names[i] << ": final HV mean " << human(sum.final_hv[i].mean) << " std "
            << human(sum.final_hv[i].std) << "\n";
    out << "wall seconds mean " << human(sum.wall_seconds.mean) << " std " << human(sum.wall_seconds.std) << "\n";
    return code;
}

int cmd_ablate(const RunArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig config = load_config(a.config);
    const auto raw = nlohmann::json::parse(read_file(a.config));
    if (!raw.contains("hidden_sizes")) config.hidden_sizes = kAblationHidden;
    const ProblemSuite suite = resolve_suite(config);
    config.validate(suite.size(), suite.m());
    const std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector{config.seed} : a.seeds;

    const auto rows = run_ablation(config, suite, seeds, a.threads);
    const fs::path dir = resolve_out_dir(a.out);
    fs::create_directories(dir);
    write_file_atomic(dir / "ablation.csv", ablation_csv(rows));

    int code = kExitOk;
    for (const auto& r : rows) {
        if (r.ok) continue;
        err << "variant shared_depth=" << r.shared_depth << " seed " << r.seed << " failed: " << r.error << "\n";
        code = kExitRunFailed;
    }
    out << rows.size() << " rows written to " << (dir / "ablation.csv").string() << "\n";
    return code;
}

int cmd_front(const std::string& checkpoint, std::size_t grid_size, const std::string& out_file, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    std::vector<std::string> names;
    std::string label = "checkpoint";
    try {
        names = ck.metadata.at("problems").get<std::vector<std::string>>();
        label = ck.metadata.value("suite", label);
    } catch (const nlohmann::json::exception&) {
        throw LoadError("checkpoint '" + checkpoint + "' does not record its problems");
    }
    ProblemSuite suite = [&] {
        try {
            return make_suite(label, names);
        } catch (const ConfigError& e) {
            throw LoadError("checkpoint '" + checkpoint + "': " + e.what());
        }
    }();
    if (suite.size() != ck.model.num_heads() || suite.m() != ck.arch.m || suite.decision_dims() != ck.arch.output_dims)
        throw LoadError("checkpoint '" + checkpoint + "' does not match its recorded problems");

    RunConfig defaults;
    defaults.eval_grid_size = grid_size;
    const Matrix grid = uniform_preference_grid(suite.m(), defaults.resolved_grid_size(suite.m()));
    const auto evals = evaluate_model(ck.model, suite, grid);

    for (std::size_t i = 0; i < evals.size(); ++i) {
        const fs::path path = evals.size() == 1 ? fs::path(out_file) : indexed_path(out_file, i);
        write_front_csv(path, evals[i].front);
        out << suite[i].name << ": " << evals[i].front.points.size() << " points, HV " << human(evals[i].hv)
            << " -> " << path.string() << "\n";
    }
    return kExitOk;
}

int cmd_hv(const std::string& front_file, const std::string& ref_text, std::ostream& out) {
    const FrontApproximation front = read_front_csv(front_file);
    std::vector<double> ref = ref_text.empty() ? front.reference_point : parse_ref(ref_text);
    if (ref.empty()) throw InputError("no --ref given and the front file declares none");
    if (!front.points.empty() && front.points.front().size() != ref.size())
        throw InputError("reference point has " + std::to_string(ref.size()) + " values but the front has " +
                         std::to_string(front.points.front().size()) + " objectives");
    if (ref.size() != 2 && ref.size() != 3) throw InputError("only 2 or 3 objectives are supported");
    out << human(hypervolume(front.points, ref)) << "\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Collaborative Pareto set learning"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "train on a suite for one or more seeds");
    run_cmd->add_option("--config", run_args.config, "run configuration (JSON)")->required();
    run_cmd->add_option("--seed", run_args.seeds, "seed; repeat for several runs (default: config seed)");
    run_cmd->add_option("--out", run_args.out, std::string("output directory (default: $") + kOutDirEnv + " or .)");
    run_cmd->add_option("--threads", run_args.threads, "worker threads, 0 = hardware concurrency");

    RunArgs ablate_args;
    auto* ablate_cmd = app.add_subcommand("ablate", "train every shared-depth variant");
    ablate_cmd->add_option("--config", ablate_args.config, "run configuration (JSON)")->required();
    ablate_cmd->add_option("--seed", ablate_args.seeds, "seed; repeat for several runs (default: config seed)");
    ablate_cmd->add_option("--out", ablate_args.out, std::string("output directory (default: $") + kOutDirEnv + " or .)");
    ablate_cmd->add_option("--threads", ablate_args.threads, "worker threads, 0 = hardware concurrency");

    std::string checkpoint, front_out;
    std::size_t grid = 0;
    auto* front_cmd = app.add_subcommand("front", "export the learned front of each problem as CSV");
    front_cmd->add_option("--checkpoint", checkpoint, "checkpoint written by run")->required();
    front_cmd->add_option("--grid", grid, "preference grid size, 0 = default (100 / 105)");
    front_cmd->add_option("--out", front_out, "output CSV; several problems get _1, _2, ... suffixes")->required();

    std::string front_file, ref_text;
    auto* hv_cmd = app.add_subcommand("hv", "hypervolume of a front CSV");
    hv_cmd->add_option("--front", front_file, "front CSV")->required();
    hv_cmd->add_option("--ref", ref_text, "reference point a,b[,c] (default: from the file header)");

    auto* defaults_cmd = app.add_subcommand("defaults", "print the default configuration");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(run_args, out, err);
        if (*ablate_cmd) return cmd_ablate(ablate_args, out, err);
        if (*front_cmd) return cmd_front(checkpoint, grid, front_out, out);
        if (*hv_cmd) return cmd_hv(front_file, ref_text, out);
        if (*defaults_cmd) {
            out << config_to_json(RunConfig{}).dump(2) << "\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const LoadError& e) {
        err << "load error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRunFailed;
    }
    return kExitConfig;
}

} // namespace copsl::cli
