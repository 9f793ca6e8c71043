#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "copsl/matrix.hpp"
#include "copsl/sampling.hpp"

namespace copsl {

enum class Activation { Rectifier, Logistic, None };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// One fully connected layer: y = act(x W^T + b).
struct DenseLayer {
    Matrix weights;               // fan_out x fan_in
    std::vector<double> biases;   // fan_out
    Activation activation = Activation::None;

    std::size_t fan_in() const { return weights.cols(); }
    std::size_t fan_out() const { return weights.rows(); }

    // Throws ConfigError on inconsistent shapes or non-finite entries.
    void validate() const;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ForwardCache {
    Matrix input;           // B x fan_in
    Matrix pre_activation;  // B x fan_out
};

struct LayerGrads {
    Matrix weights;
    std::vector<double> biases;

    static LayerGrads zeros_like(const DenseLayer& layer);
};

struct LayerForward {
    Matrix output;
    ForwardCache cache;
};

struct LayerBackward {
    LayerGrads grads;
    Matrix input_grad;  // B x fan_in
};

LayerForward layer_forward(const DenseLayer& layer, const Matrix& input);

// Rectifier derivative at exactly 0 is taken as 0.
LayerBackward layer_backward(const DenseLayer& layer, const ForwardCache& cache, const Matrix& upstream);

// Weights and biases ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], weights first in
// row-major order, then biases.
DenseLayer init_layer(RngStream& rng, std::size_t fan_in, std::size_t fan_out, Activation activation);

double apply_activation(Activation a, double z);
double activation_derivative(Activation a, double z);

} // namespace copsl
