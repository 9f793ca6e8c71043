#include "copsl/config.hpp"

#include <cmath>
#include <set>

#include "copsl/errors.hpp"
#include "copsl/io.hpp"

namespace copsl {

namespace {

std::string_view to_string(IdealUpdateOrder order) {
    return order == IdealUpdateOrder::BeforeLoss ? "before_loss" : "after_loss";
}

nlohmann::json optional_vector(const std::vector<double>& v) {
    return v.empty() ? nlohmann::json(nullptr) : nlohmann::json(v);
}

// NaN is not representable in JSON; it becomes null.
nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json numbers_or_null(const std::vector<double>& v) {
    auto out = nlohmann::json::array();
    for (double x : v) out.push_back(number_or_null(x));
    return out;
}

bool is_count(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

} // namespace

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["format_version"] = kConfigVersion;
    j["suite"] = c.problems.empty() ? nlohmann::json(c.suite) : nlohmann::json(c.problems);
    j["loss"] = std::string(to_string(c.loss.type));
    j["cosmos_gamma"] = c.loss.gamma;
    j["cosmos_sign"] = c.loss.cosmos_sign;
    j["epsilon"] = c.loss.epsilon;
    j["iterations"] = c.iterations;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.adam.learning_rate;
    j["adam_beta1"] = c.adam.beta1;
    j["adam_beta2"] = c.adam.beta2;
    j["adam_epsilon"] = c.adam.epsilon;
    j["dirichlet_alpha"] = optional_vector(c.dirichlet_alpha);
    j["weights"] = optional_vector(c.weights);
    j["hidden_sizes"] = c.hidden_sizes;
    j["shared_depth"] = c.shared_depth;
    j["seed"] = c.seed;
    j["eval_grid_size"] = c.eval_grid_size;
    j["eval_interval"] = c.eval_interval;
    j["ideal_update"] = std::string(to_string(c.ideal_update));
    j["strict_weight_gating"] = c.strict_weight_gating;
    return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{
        "format_version", "suite",       "loss",           "cosmos_gamma", "cosmos_sign",         "epsilon",
        "iterations",     "batch_size",  "learning_rate",  "adam_beta1",   "adam_beta2",          "adam_epsilon",
        "dirichlet_alpha", "weights",    "hidden_sizes",   "shared_depth", "seed",                "eval_grid_size",
        "eval_interval",  "ideal_update", "strict_weight_gating"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");

    RunConfig c;
    std::string current;
    try {
        current = "format_version";
        const int version = j.at("format_version").get<int>();
        if (version != kConfigVersion)
            throw ConfigError("config: unsupported format_version " + std::to_string(version));

        auto read = [&](const char* key, auto& field) {
            current = key;
            if (j.contains(key)) j.at(key).get_to(field);
        };
        auto read_count = [&](const char* key, auto& field) {
            current = key;
            if (!j.contains(key)) return;
            if (!is_count(j.at(key))) throw ConfigError("config: '" + current + "' must be a nonnegative integer");
            j.at(key).get_to(field);
        };
        auto read_optional = [&](const char* key, std::vector<double>& field) {
            current = key;
            if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
        };

        current = "suite";
        if (j.contains("suite")) {
            const auto& s = j.at("suite");
            if (s.is_array()) {
                c.problems = s.get<std::vector<std::string>>();
                if (c.problems.empty()) throw ConfigError("config: suite list is empty");
                c.suite.clear();
                for (const auto& p : c.problems) c.suite += (c.suite.empty() ? "" : "+") + p;
            } else {
                c.suite = s.get<std::string>();
            }
        }
        current = "loss";
        if (j.contains("loss")) c.loss.type = loss_type_from_string(j.at("loss").get<std::string>());
        read("cosmos_gamma", c.loss.gamma);
        read("cosmos_sign", c.loss.cosmos_sign);
        read("epsilon", c.loss.epsilon);
        read_count("iterations", c.iterations);
        read_count("batch_size", c.batch_size);
        read("learning_rate", c.adam.learning_rate);
        read("adam_beta1", c.adam.beta1);
        read("adam_beta2", c.adam.beta2);
        read("adam_epsilon", c.adam.epsilon);
        read_optional("dirichlet_alpha", c.dirichlet_alpha);
        read_optional("weights", c.weights);
        current = "hidden_sizes";
        if (j.contains("hidden_sizes")) {
            const auto& h = j.at("hidden_sizes");
            if (!h.is_array()) throw ConfigError("config: 'hidden_sizes' must be an array");
            for (const auto& v : h)
                if (!is_count(v)) throw ConfigError("config: 'hidden_sizes' entries must be positive integers");
            h.get_to(c.hidden_sizes);
        }
        read_count("shared_depth", c.shared_depth);
        read_count("seed", c.seed);
        read_count("eval_grid_size", c.eval_grid_size);
        read_count("eval_interval", c.eval_interval);
        current = "ideal_update";
        if (j.contains("ideal_update")) {
            const auto order = j.at("ideal_update").get<std::string>();
            if (order == "before_loss") c.ideal_update = IdealUpdateOrder::BeforeLoss;
            else if (order == "after_loss") c.ideal_update = IdealUpdateOrder::AfterLoss;
            else throw ConfigError("config: ideal_update must be before_loss or after_loss");
        }
        read("strict_weight_gating", c.strict_weight_gating);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value for '" + current + "': " + e.what());
    }
    c.loss.validate();
    c.adam.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const LoadError& e) {
        throw ConfigError(e.what());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

nlohmann::json record_to_json(const RunRecord& r) {
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) j["error"] = r.error;
    j["mop_names"] = r.mop_names;
    j["rng_algorithm"] = r.rng_algorithm;
    j["adam"] = {{"beta1", r.config.adam.beta1},
                 {"beta2", r.config.adam.beta2},
                 {"epsilon", r.config.adam.epsilon}};
    j["cosmos_sign"] = r.config.loss.cosmos_sign;
    j["cosmos_sign_note"] = "printed form adds +gamma*cos; -1 subtracts it so alignment with p is rewarded";
    j["ideal_update"] = std::string(to_string(r.config.ideal_update));
    j["params"] = r.params;
    j["flops_per_sample"] = r.flops_per_sample;
    j["training_flops"] = r.training_flops;
    j["wall_seconds"] = r.wall_seconds;
    j["objective_evaluations"] = r.objective_evaluations;
    j["jacobian_evaluations"] = r.jacobian_evaluations;
    j["true_front_hv"] = numbers_or_null(r.true_front_hv);
    j["total_loss"] = numbers_or_null(r.total_loss);
    auto losses = nlohmann::json::array();
    for (const auto& row : r.mop_losses) losses.push_back(numbers_or_null(row));
    j["mop_losses"] = losses;
    auto evals = nlohmann::json::array();
    for (const auto& e : r.evals)
        evals.push_back({{"iteration", e.iteration},
                         {"hv", numbers_or_null(e.hv)},
                         {"log_hv_diff", numbers_or_null(e.log_hv_diff)}});
    j["evals"] = evals;
    return j;
}

} // namespace copsl
