#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copsl/matrix.hpp"
#include "copsl/nn.hpp"
#include "copsl/sampling.hpp"

namespace copsl {

// Shape of a collaborative network: `shared_depth` leading hidden layers form
// the trunk, every head holds the remaining hidden layers plus its own
// sigmoid output layer. shared_depth = 0 with K heads is K separate networks.
struct ModelArchitecture {
    std::size_t m = 2;
    std::vector<std::size_t> hidden_sizes{256, 256};
    std::size_t shared_depth = 1;
    std::vector<std::size_t> output_dims;

    std::size_t num_heads() const { return output_dims.size(); }
    void validate() const;

    friend bool operator==(const ModelArchitecture&, const ModelArchitecture&) = default;
};

nlohmann::json architecture_to_json(const ModelArchitecture& arch);
ModelArchitecture architecture_from_json(const nlohmann::json& j);

struct CoPslModel {
    std::vector<DenseLayer> trunk;
    std::vector<std::vector<DenseLayer>> heads;

    std::size_t input_dim() const;
    std::size_t num_heads() const { return heads.size(); }

    friend bool operator==(const CoPslModel&, const CoPslModel&) = default;
};

// Gradient buffers shaped exactly like a CoPslModel.
struct ParamGrads {
    std::vector<LayerGrads> trunk;
    std::vector<std::vector<LayerGrads>> heads;

    static ParamGrads zeros_like(const CoPslModel& model);
};

// Layers are initialised in order: trunk first, then head 0, head 1, ...
// For K = 1 the draw sequence is therefore independent of shared_depth.
CoPslModel build_model(const ModelArchitecture& arch, RngStream& rng);

struct ModelForward {
    std::vector<Matrix> unit_outputs;  // K matrices, B x n_i, entries in (0,1)
    std::vector<ForwardCache> trunk_caches;
    std::vector<std::vector<ForwardCache>> head_caches;
};

// Rows of `prefs` must be valid preference vectors (InputError otherwise).
ModelForward forward_all(const CoPslModel& model, const Matrix& prefs);

// Head i receives the gradient of L_i alone; the trunk receives
// sum_i weights[i] * dL_i/dtrunk. With `gate_heads` the head gradients are
// also scaled by weights[i].
ParamGrads backward_all(const CoPslModel& model, const ModelForward& fwd,
                        std::span<const Matrix> output_grads, std::span<const double> weights,
                        bool gate_heads = false);

std::uint64_t count_params(const CoPslModel& model);
std::uint64_t count_params(const ModelArchitecture& arch);

// 2 * MACs of the weight matrices per forward pass over `batch` inputs.
std::uint64_t count_flops(const CoPslModel& model, std::uint64_t batch);
std::uint64_t count_flops(const ModelArchitecture& arch, std::uint64_t batch);

// One forward (1x) plus backward for weight and input gradients (2x), per
// iteration of `batch` preferences, over `iterations` steps.
std::uint64_t count_training_flops(const ModelArchitecture& arch, std::uint64_t batch,
                                   std::uint64_t iterations);

// One architecture per shared_depth in 0..|hidden_sizes|, ascending.
std::vector<ModelArchitecture> enumerate_shared_variants(std::size_t m,
                                                         const std::vector<std::size_t>& hidden_sizes,
                                                         std::size_t num_heads,
                                                         const std::vector<std::size_t>& output_dims);

// Visits every parameter tensor in canonical order (trunk layers, then heads
// in order; weights before biases within a layer). Works on CoPslModel and
// ParamGrads, const or not.
template <typename Params, typename Fn>
void for_each_tensor(Params& params, Fn&& fn) {
    auto visit = [&](auto& layer) {
        fn(std::span(layer.weights.data()));
        fn(std::span(layer.biases));
    };
    for (auto& layer : params.trunk) visit(layer);
    for (auto& head : params.heads)
        for (auto& layer : head) visit(layer);
}

std::vector<double> flatten_params(const CoPslModel& model);

// Checkpoint layout:
//   8 bytes   magic "COPSLCKP"
//   8 bytes   header length L (little-endian uint64)
//   L bytes   JSON header {format_version, architecture, param_count, metadata}
//   8 bytes   FNV-1a 64 of the header bytes (little-endian)
//   N * 8     parameters as little-endian IEEE-754 doubles, canonical order
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    CoPslModel model;
    ModelArchitecture arch;
    nlohmann::json metadata = nlohmann::json::object();
};

void save_checkpoint(const CoPslModel& model, const ModelArchitecture& arch,
                     const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);
// As above, but also rejects a checkpoint whose objective count differs.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::size_t expected_m);

} // namespace copsl
