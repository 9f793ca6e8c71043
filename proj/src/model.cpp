#include "copsl/model.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

#include "copsl/errors.hpp"
#include "copsl/io.hpp"

namespace copsl {

void ModelArchitecture::validate() const {
    if (m < 2) throw ConfigError("architecture: m must be >= 2");
    if (output_dims.empty()) throw ConfigError("architecture: at least one head (K >= 1) is required");
    if (shared_depth > hidden_sizes.size())
        throw ConfigError("architecture: shared_depth " + std::to_string(shared_depth) +
                          " exceeds the number of hidden layers " + std::to_string(hidden_sizes.size()));
    for (auto h : hidden_sizes)
        if (h == 0) throw ConfigError("architecture: hidden sizes must be >= 1");
    for (auto n : output_dims)
        if (n == 0) throw ConfigError("architecture: output dims must be >= 1");
}

nlohmann::json architecture_to_json(const ModelArchitecture& arch) {
    return {{"m", arch.m},
            {"hidden_sizes", arch.hidden_sizes},
            {"shared_depth", arch.shared_depth},
            {"output_dims", arch.output_dims}};
}

ModelArchitecture architecture_from_json(const nlohmann::json& j) {
    ModelArchitecture arch;
    try {
        for (const auto& [key, _] : j.items())
            if (key != "m" && key != "hidden_sizes" && key != "shared_depth" && key != "output_dims")
                throw ConfigError("architecture: unknown key '" + key + "'");
        arch.m = j.at("m").get<std::size_t>();
        arch.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
        arch.shared_depth = j.at("shared_depth").get<std::size_t>();
        arch.output_dims = j.at("output_dims").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("architecture: ") + e.what());
    }
    arch.validate();
    return arch;
}

std::size_t CoPslModel::input_dim() const {
    if (!trunk.empty()) return trunk.front().fan_in();
    if (!heads.empty() && !heads.front().empty()) return heads.front().front().fan_in();
    return 0;
}

ParamGrads ParamGrads::zeros_like(const CoPslModel& model) {
    ParamGrads g;
    for (const auto& layer : model.trunk) g.trunk.push_back(LayerGrads::zeros_like(layer));
    for (const auto& head : model.heads) {
        auto& gh = g.heads.emplace_back();
        for (const auto& layer : head) gh.push_back(LayerGrads::zeros_like(layer));
    }
    return g;
}

CoPslModel build_model(const ModelArchitecture& arch, RngStream& rng) {
    arch.validate();
    CoPslModel model;
    std::size_t width = arch.m;
    for (std::size_t l = 0; l < arch.shared_depth; ++l) {
        model.trunk.push_back(init_layer(rng, width, arch.hidden_sizes[l], Activation::Rectifier));
        width = arch.hidden_sizes[l];
    }
    const std::size_t trunk_width = width;
    for (std::size_t n_out : arch.output_dims) {
        auto& head = model.heads.emplace_back();
        width = trunk_width;
        for (std::size_t l = arch.shared_depth; l < arch.hidden_sizes.size(); ++l) {
            head.push_back(init_layer(rng, width, arch.hidden_sizes[l], Activation::Rectifier));
            width = arch.hidden_sizes[l];
        }
        head.push_back(init_layer(rng, width, n_out, Activation::Logistic));
    }
    return model;
}

ModelForward forward_all(const CoPslModel& model, const Matrix& prefs) {
    if (prefs.cols() != model.input_dim())
        throw InputError("preference width " + std::to_string(prefs.cols()) + " != model input " +
                         std::to_string(model.input_dim()));
    for (std::size_t b = 0; b < prefs.rows(); ++b) check_preference(prefs.row(b));

    ModelForward out;
    Matrix features = prefs;
    for (const auto& layer : model.trunk) {
        auto f = layer_forward(layer, features);
        out.trunk_caches.push_back(std::move(f.cache));
        features = std::move(f.output);
    }
    for (const auto& head : model.heads) {
        auto& caches = out.head_caches.emplace_back();
        Matrix h = features;
        for (const auto& layer : head) {
            auto f = layer_forward(layer, h);
            caches.push_back(std::move(f.cache));
            h = std::move(f.output);
        }
        out.unit_outputs.push_back(std::move(h));
    }
    return out;
}

ParamGrads backward_all(const CoPslModel& model, const ModelForward& fwd,
                        std::span<const Matrix> output_grads, std::span<const double> weights,
                        bool gate_heads) {
    const std::size_t k = model.num_heads();
    if (output_grads.size() != k || weights.size() != k || fwd.head_caches.size() != k ||
        fwd.trunk_caches.size() != model.trunk.size())
        throw InternalError("backward_all: head count mismatch");

    ParamGrads grads;
    grads.heads.resize(k);
    Matrix trunk_upstream;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& head = model.heads[i];
        if (fwd.head_caches[i].size() != head.size())
            throw InternalError("backward_all: cache depth mismatch for head " + std::to_string(i));
        if (!output_grads[i].same_shape(fwd.unit_outputs[i]))
            throw InternalError("backward_all: output gradient shape mismatch for head " + std::to_string(i));

        const double scale = gate_heads ? weights[i] : 1.0;
        Matrix upstream = output_grads[i];
        if (scale != 1.0)
            for (double& v : upstream.data()) v *= scale;

        grads.heads[i].resize(head.size());
        for (std::size_t l = head.size(); l-- > 0;) {
            auto back = layer_backward(head[l], fwd.head_caches[i][l], upstream);
            grads.heads[i][l] = std::move(back.grads);
            upstream = std::move(back.input_grad);
        }
        if (model.trunk.empty()) continue;

        // upstream now holds (scale * dL_i/dfeatures); the trunk wants w_i * dL_i/dfeatures.
        const double trunk_scale = gate_heads ? 1.0 : weights[i];
        if (trunk_upstream.empty()) trunk_upstream = Matrix(upstream.rows(), upstream.cols());
        for (std::size_t e = 0; e < upstream.size(); ++e)
            trunk_upstream.data()[e] += trunk_scale * upstream.data()[e];
    }

    grads.trunk.resize(model.trunk.size());
    for (std::size_t l = model.trunk.size(); l-- > 0;) {
        auto back = layer_backward(model.trunk[l], fwd.trunk_caches[l], trunk_upstream);
        grads.trunk[l] = std::move(back.grads);
        trunk_upstream = std::move(back.input_grad);
    }
    return grads;
}

namespace {

template <typename LayerFn>
void for_each_layer_shape(const ModelArchitecture& arch, LayerFn&& fn) {
    std::size_t width = arch.m;
    for (std::size_t l = 0; l < arch.shared_depth; ++l) {
        fn(width, arch.hidden_sizes[l]);
        width = arch.hidden_sizes[l];
    }
    const std::size_t trunk_width = width;
    for (std::size_t n_out : arch.output_dims) {
        width = trunk_width;
        for (std::size_t l = arch.shared_depth; l < arch.hidden_sizes.size(); ++l) {
            fn(width, arch.hidden_sizes[l]);
            width = arch.hidden_sizes[l];
        }
        fn(width, n_out);
    }
}

template <typename LayerFn>
void for_each_layer(const CoPslModel& model, LayerFn&& fn) {
    for (const auto& layer : model.trunk) fn(layer);
    for (const auto& head : model.heads)
        for (const auto& layer : head) fn(layer);
}

} // namespace

std::uint64_t count_params(const CoPslModel& model) {
    std::uint64_t total = 0;
    for_each_layer(model, [&](const DenseLayer& l) { total += l.fan_in() * l.fan_out() + l.fan_out(); });
    return total;
}

std::uint64_t count_params(const ModelArchitecture& arch) {
    std::uint64_t total = 0;
    for_each_layer_shape(arch, [&](std::uint64_t in, std::uint64_t out) { total += in * out + out; });
    return total;
}

std::uint64_t count_flops(const CoPslModel& model, std::uint64_t batch) {
    std::uint64_t per_sample = 0;
    for_each_layer(model, [&](const DenseLayer& l) { per_sample += 2 * l.fan_in() * l.fan_out(); });
    return batch * per_sample;
}

std::uint64_t count_flops(const ModelArchitecture& arch, std::uint64_t batch) {
    std::uint64_t per_sample = 0;
    for_each_layer_shape(arch, [&](std::uint64_t in, std::uint64_t out) { per_sample += 2 * in * out; });
    return batch * per_sample;
}

std::uint64_t count_training_flops(const ModelArchitecture& arch, std::uint64_t batch,
                                   std::uint64_t iterations) {
    return 3 * iterations * count_flops(arch, batch);
}

std::vector<ModelArchitecture> enumerate_shared_variants(std::size_t m,
                                                         const std::vector<std::size_t>& hidden_sizes,
                                                         std::size_t num_heads,
                                                         const std::vector<std::size_t>& output_dims) {
    if (hidden_sizes.empty()) throw ConfigError("enumerate_shared_variants: need at least one hidden layer");
    if (output_dims.size() != num_heads)
        throw ConfigError("enumerate_shared_variants: output_dims length != number of heads");
    std::vector<ModelArchitecture> variants;
    for (std::size_t depth = 0; depth <= hidden_sizes.size(); ++depth) {
        ModelArchitecture arch{m, hidden_sizes, depth, output_dims};
        arch.validate();
        variants.push_back(std::move(arch));
    }
    return variants;
}

std::vector<double> flatten_params(const CoPslModel& model) {
    std::vector<double> flat;
    for_each_tensor(model, [&](auto t) { flat.insert(flat.end(), t.begin(), t.end()); });
    return flat;
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'P', 'S', 'L', 'C', 'K', 'P'};

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(std::string_view in, std::size_t offset) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return v;
}

} // namespace

void save_checkpoint(const CoPslModel& model, const ModelArchitecture& arch,
                     const std::filesystem::path& path, const nlohmann::json& metadata) {
    arch.validate();
    if (count_params(model) != count_params(arch))
        throw InternalError("save_checkpoint: model does not match its architecture");
    const nlohmann::json header = {{"format_version", kCheckpointVersion},
                                   {"architecture", architecture_to_json(arch)},
                                   {"param_count", count_params(arch)},
                                   {"metadata", metadata}};
    const std::string header_text = header.dump();
    const auto params = flatten_params(model);

    std::string bytes(kMagic, sizeof kMagic);
    put_u64(bytes, header_text.size());
    bytes += header_text;
    put_u64(bytes, fnv1a(header_text));
    bytes.reserve(bytes.size() + params.size() * 8);
    for (double p : params) put_u64(bytes, std::bit_cast<std::uint64_t>(p));
    write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    const std::string where = "checkpoint '" + path.string() + "': ";
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw LoadError(where + "not a checkpoint file (bad magic)");
    const std::uint64_t header_len = get_u64(bytes, 8);
    if (header_len > bytes.size() - 16 || bytes.size() - 16 - header_len < 8)
        throw LoadError(where + "truncated header");
    const std::string_view header_text(bytes.data() + 16, header_len);
    if (get_u64(bytes, 16 + header_len) != fnv1a(header_text))
        throw LoadError(where + "header checksum mismatch (corrupted file)");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(where + "header is not valid JSON: " + e.what());
    }
    Checkpoint ck;
    try {
        const int version = header.at("format_version").get<int>();
        if (version != kCheckpointVersion)
            throw LoadError(where + "unsupported format version " + std::to_string(version) + " (expected " +
                            std::to_string(kCheckpointVersion) + ")");
        ck.arch = architecture_from_json(header.at("architecture"));
        if (header.at("param_count").get<std::uint64_t>() != count_params(ck.arch))
            throw LoadError(where + "param_count disagrees with the architecture");
        if (header.contains("metadata")) ck.metadata = header.at("metadata");
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(where + "malformed header: " + e.what());
    } catch (const ConfigError& e) {
        throw LoadError(where + e.what());
    }

    const std::uint64_t n_params = count_params(ck.arch);
    const std::size_t payload_offset = 16 + header_len + 8;
    const std::size_t payload_size = bytes.size() - payload_offset;
    if (payload_size != n_params * 8)
        throw LoadError(where + "payload holds " + std::to_string(payload_size) + " bytes, expected " +
                        std::to_string(n_params * 8) + " (truncated or shape mismatch)");

    RngStream unused(0);
    ck.model = build_model(ck.arch, unused);
    std::size_t offset = payload_offset;
    for_each_tensor(ck.model, [&](std::span<double> t) {
        for (double& v : t) {
            v = std::bit_cast<double>(get_u64(bytes, offset));
            offset += 8;
        }
    });
    return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::size_t expected_m) {
    auto ck = load_checkpoint(path);
    if (ck.arch.m != expected_m)
        throw LoadError("checkpoint '" + path.string() + "': shape mismatch, model expects m=" +
                        std::to_string(ck.arch.m) + " but m=" + std::to_string(expected_m) + " was requested");
    return ck;
}

} // namespace copsl
