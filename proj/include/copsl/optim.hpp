#pragma once

#include <cstdint>

#include "copsl/model.hpp"

namespace copsl {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

// Moment buffers mirror the model layout; one step counter for all tensors.
struct AdamState {
    ParamGrads first_moment;
    ParamGrads second_moment;
    std::uint64_t step = 0;

    static AdamState for_model(const CoPslModel& model);
};

// One bias-corrected Adam update of every parameter tensor.
void adam_step(CoPslModel& model, const ParamGrads& grads, AdamState& state, const AdamConfig& config);

} // namespace copsl
