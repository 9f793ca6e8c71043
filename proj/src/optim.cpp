#include "copsl/optim.hpp"

#include <cmath>
#include <vector>

#include "copsl/errors.hpp"

namespace copsl {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam beta1 must lie in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must lie in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
}

AdamState AdamState::for_model(const CoPslModel& model) {
    return {ParamGrads::zeros_like(model), ParamGrads::zeros_like(model), 0};
}

namespace {

template <typename Params>
auto collect(Params& p) {
    std::vector<decltype(std::span(p.trunk.front().biases))> out;
    for_each_tensor(p, [&](auto t) { out.push_back(t); });
    return out;
}

} // namespace

void adam_step(CoPslModel& model, const ParamGrads& grads, AdamState& state, const AdamConfig& config) {
    auto params = collect(model);
    auto g = collect(grads);
    auto m1 = collect(state.first_moment);
    auto m2 = collect(state.second_moment);
    if (g.size() != params.size() || m1.size() != params.size() || m2.size() != params.size())
        throw InternalError("adam_step: gradient/state layout does not match the model");
    for (std::size_t t = 0; t < params.size(); ++t)
        if (g[t].size() != params[t].size() || m1[t].size() != params[t].size() ||
            m2[t].size() != params[t].size())
            throw InternalError("adam_step: tensor " + std::to_string(t) + " has mismatched size");

    ++state.step;
    const double step = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, step);
    const double correction2 = 1.0 - std::pow(config.beta2, step);
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t e = 0; e < params[t].size(); ++e) {
            const double grad = g[t][e];
            m1[t][e] = config.beta1 * m1[t][e] + (1.0 - config.beta1) * grad;
            m2[t][e] = config.beta2 * m2[t][e] + (1.0 - config.beta2) * grad * grad;
            const double m_hat = m1[t][e] / correction1;
            const double v_hat = m2[t][e] / correction2;
            params[t][e] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

} // namespace copsl
