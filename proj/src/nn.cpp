#include "copsl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "copsl/errors.hpp"

namespace copsl {

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::Rectifier: return "relu";
    case Activation::Logistic: return "sigmoid";
    case Activation::None: return "none";
    }
    return "none";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::Rectifier;
    if (name == "sigmoid") return Activation::Logistic;
    if (name == "none") return Activation::None;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void DenseLayer::validate() const {
    if (weights.rows() == 0 || weights.cols() == 0) throw ConfigError("dense layer has a zero dimension");
    if (biases.size() != weights.rows())
        throw ConfigError("dense layer bias length " + std::to_string(biases.size()) +
                          " does not match fan_out " + std::to_string(weights.rows()));
    for (double w : weights.data())
        if (!std::isfinite(w)) throw ConfigError("dense layer has a non-finite weight");
    for (double b : biases)
        if (!std::isfinite(b)) throw ConfigError("dense layer has a non-finite bias");
}

LayerGrads LayerGrads::zeros_like(const DenseLayer& layer) {
    return {Matrix(layer.fan_out(), layer.fan_in()), std::vector<double>(layer.fan_out(), 0.0)};
}

double apply_activation(Activation a, double z) {
    switch (a) {
    case Activation::Rectifier: return z > 0.0 ? z : 0.0;
    case Activation::Logistic: {
        // Clamped so the output stays strictly inside (0,1) even where the
        // exact value rounds to 0 or 1.
        const double s = 1.0 / (1.0 + std::exp(-z));
        return std::clamp(s, std::numeric_limits<double>::denorm_min(), 1.0 - 0x1.0p-53);
    }
    case Activation::None: return z;
    }
    return z;
}

double activation_derivative(Activation a, double z) {
    switch (a) {
    case Activation::Rectifier: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Logistic: {
        const double s = 1.0 / (1.0 + std::exp(-z));
        return s * (1.0 - s);
    }
    case Activation::None: return 1.0;
    }
    return 1.0;
}

namespace {

// Fixed four-way accumulation keeps the summation order independent of the
// compiler's vectorisation choices.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for (; k < n; ++k) s0 += a[k] * b[k];
    return (s0 + s1) + (s2 + s3);
}

} // namespace

LayerForward layer_forward(const DenseLayer& layer, const Matrix& input) {
    const std::size_t fan_in = layer.fan_in();
    const std::size_t fan_out = layer.fan_out();
    if (input.cols() != fan_in)
        throw ConfigError("layer input width " + std::to_string(input.cols()) + " != fan_in " +
                          std::to_string(fan_in));
    const std::size_t batch = input.rows();

    LayerForward out{Matrix(batch, fan_out), {input, Matrix(batch, fan_out)}};
    const double* w = layer.weights.data().data();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* x = input.row(b).data();
        auto pre = out.cache.pre_activation.row(b);
        auto y = out.output.row(b);
        for (std::size_t o = 0; o < fan_out; ++o) {
            pre[o] = dot(w + o * fan_in, x, fan_in) + layer.biases[o];
            y[o] = apply_activation(layer.activation, pre[o]);
        }
    }
    return out;
}

LayerBackward layer_backward(const DenseLayer& layer, const ForwardCache& cache, const Matrix& upstream) {
    const std::size_t fan_in = layer.fan_in();
    const std::size_t fan_out = layer.fan_out();
    const std::size_t batch = cache.input.rows();
    if (upstream.rows() != batch || upstream.cols() != fan_out || cache.input.cols() != fan_in ||
        !cache.pre_activation.same_shape(upstream))
        throw ConfigError("layer_backward: upstream gradient shape does not match the forward cache");

    Matrix delta(batch, fan_out);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < fan_out; ++o)
            delta(b, o) = upstream(b, o) * activation_derivative(layer.activation, cache.pre_activation(b, o));

    LayerBackward out{LayerGrads::zeros_like(layer), Matrix(batch, fan_in)};
    // dW = delta^T . input, db = column sums of delta, accumulated in batch order.
    for (std::size_t b = 0; b < batch; ++b) {
        const double* x = cache.input.row(b).data();
        for (std::size_t o = 0; o < fan_out; ++o) {
            const double d = delta(b, o);
            out.grads.biases[o] += d;
            if (d == 0.0) continue;
            double* gw = out.grads.weights.row(o).data();
            for (std::size_t k = 0; k < fan_in; ++k) gw[k] += d * x[k];
        }
    }
    // dInput = delta . W
    for (std::size_t b = 0; b < batch; ++b) {
        double* gi = out.input_grad.row(b).data();
        for (std::size_t o = 0; o < fan_out; ++o) {
            const double d = delta(b, o);
            if (d == 0.0) continue;
            const double* w = layer.weights.row(o).data();
            for (std::size_t k = 0; k < fan_in; ++k) gi[k] += d * w[k];
        }
    }
    return out;
}

DenseLayer init_layer(RngStream& rng, std::size_t fan_in, std::size_t fan_out, Activation activation) {
    if (fan_in == 0 || fan_out == 0) throw ConfigError("init_layer: fan_in and fan_out must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out), activation};
    for (double& w : layer.weights.data()) w = rng.uniform(-bound, bound);
    for (double& b : layer.biases) b = rng.uniform(-bound, bound);
    return layer;
}

} // namespace copsl
