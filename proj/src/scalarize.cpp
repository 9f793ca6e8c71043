#include "copsl/scalarize.hpp"

#include <cmath>
#include <string>

#include "copsl/errors.hpp"
#include "copsl/sampling.hpp"

namespace copsl {

std::string_view to_string(LossType t) {
    switch (t) {
    case LossType::LS: return "ls";
    case LossType::COSMOS: return "cosmos";
    case LossType::TCH: return "tch";
    case LossType::MTCH: return "mtch";
    }
    return "tch";
}

LossType loss_type_from_string(std::string_view name) {
    if (name == "ls") return LossType::LS;
    if (name == "cosmos") return LossType::COSMOS;
    if (name == "tch") return LossType::TCH;
    if (name == "mtch") return LossType::MTCH;
    throw ConfigError("unknown loss '" + std::string(name) + "' (expected ls, cosmos, tch or mtch)");
}

void LossKind::validate() const {
    if (type == LossType::COSMOS) {
        if (!(gamma > 0.0)) throw ConfigError("cosmos gamma must be > 0");
        if (cosmos_sign != 1 && cosmos_sign != -1) throw ConfigError("cosmos sign must be +1 or -1");
    }
    if ((type == LossType::TCH || type == LossType::MTCH) && !(epsilon > 0.0))
        throw ConfigError("tch/mtch epsilon must be > 0");
}

namespace {

void check_lengths(std::span<const double> f, std::span<const double> p) {
    if (f.size() != p.size() || f.empty()) throw InputError("objective and preference lengths differ");
}

} // namespace

LossValue loss_ls(std::span<const double> f, std::span<const double> p) {
    check_lengths(f, p);
    LossValue out{0.0, std::vector<double>(p.begin(), p.end())};
    for (std::size_t j = 0; j < f.size(); ++j) out.value += p[j] * f[j];
    return out;
}

LossValue loss_cosmos(std::span<const double> f, std::span<const double> p, double gamma, int sign) {
    LossValue out = loss_ls(f, p);
    double pf = 0.0, pp = 0.0, ff = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        pf += p[j] * f[j];
        pp += p[j] * p[j];
        ff += f[j] * f[j];
    }
    const double norm_p = std::sqrt(pp);
    const double norm_f = std::sqrt(ff);
    if (norm_f == 0.0 || norm_p == 0.0) return out;

    const double s = static_cast<double>(sign) * gamma;
    const double denom = norm_p * norm_f;
    out.value += s * pf / denom;
    // d cos / dF = p / (|p||F|) - (p.F) F / (|p| |F|^3)
    const double f_coeff = pf / (norm_p * norm_f * ff);
    for (std::size_t j = 0; j < f.size(); ++j) out.grad[j] += s * (p[j] / denom - f_coeff * f[j]);
    return out;
}

namespace {

template <typename WeightFn>
LossValue weighted_max(std::span<const double> f, std::span<const double> p, std::span<const double> ideal,
                       double epsilon, WeightFn&& weight) {
    check_lengths(f, p);
    if (ideal.size() != f.size()) throw InputError("ideal point length differs from objective length");
    if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double v = weight(p[j]) * (f[j] - (ideal[j] - epsilon));
        if (v > best_value) {
            best_value = v;
            best = j;
        }
    }
    LossValue out{best_value, std::vector<double>(f.size(), 0.0)};
    out.grad[best] = weight(p[best]);
    return out;
}

} // namespace

LossValue loss_tch(std::span<const double> f, std::span<const double> p, std::span<const double> ideal,
                   double epsilon) {
    return weighted_max(f, p, ideal, epsilon, [](double pj) { return pj; });
}

LossValue loss_mtch(std::span<const double> f, std::span<const double> p, std::span<const double> ideal,
                    double epsilon) {
    for (double pj : p)
        if (!(pj >= kMinPreference))
            throw InputError("mtch: preference entry " + std::to_string(pj) + " below the sampler floor");
    return weighted_max(f, p, ideal, epsilon, [](double pj) { return 1.0 / pj; });
}

LossValue evaluate_loss(const LossKind& kind, std::span<const double> f, std::span<const double> p,
                        std::span<const double> ideal) {
    switch (kind.type) {
    case LossType::LS: return loss_ls(f, p);
    case LossType::COSMOS: return loss_cosmos(f, p, kind.gamma, kind.cosmos_sign);
    case LossType::TCH: return loss_tch(f, p, ideal, kind.epsilon);
    case LossType::MTCH: return loss_mtch(f, p, ideal, kind.epsilon);
    }
    throw InternalError("unhandled loss type");
}

IdealPointTracker::IdealPointTracker(std::size_t num_mops, std::size_t m)
    : z_star_(num_mops, std::vector<double>(m, std::numeric_limits<double>::infinity())) {}

void IdealPointTracker::update(std::size_t mop, std::span<const double> f) {
    auto& z = z_star_.at(mop);
    if (f.size() != z.size()) throw InputError("ideal point update with wrong objective length");
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (!std::isfinite(f[j])) throw InputError("ideal point update with a non-finite objective");
        if (f[j] < z[j]) z[j] = f[j];
    }
}

bool IdealPointTracker::initialized(std::size_t mop) const {
    for (double v : z_star_.at(mop))
        if (std::isinf(v)) return false;
    return true;
}

std::vector<double> chain_to_decision(std::span<const double> grad_f, const Matrix& jacobian,
                                      std::span<const double> box_derivative) {
    if (jacobian.rows() != grad_f.size() || jacobian.cols() != box_derivative.size())
        throw InternalError("chain_to_decision: shape mismatch");
    std::vector<double> out(jacobian.cols(), 0.0);
    for (std::size_t j = 0; j < jacobian.rows(); ++j) {
        if (grad_f[j] == 0.0) continue;
        for (std::size_t k = 0; k < jacobian.cols(); ++k) out[k] += grad_f[j] * jacobian(j, k);
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= box_derivative[k];
    return out;
}

BatchLoss batch_loss(const LossKind& kind, const Matrix& objectives, const Matrix& prefs,
                     std::span<const double> ideal) {
    if (objectives.rows() == 0) throw InputError("batch_loss: empty batch");
    if (!objectives.same_shape(prefs)) throw InputError("batch_loss: objectives and preferences differ in shape");
    const double inv_b = 1.0 / static_cast<double>(objectives.rows());
    BatchLoss out{0.0, Matrix(objectives.rows(), objectives.cols())};
    double sum = 0.0;
    for (std::size_t b = 0; b < objectives.rows(); ++b) {
        const auto loss = evaluate_loss(kind, objectives.row(b), prefs.row(b), ideal);
        sum += loss.value;
        for (std::size_t j = 0; j < loss.grad.size(); ++j) out.grad_f(b, j) = loss.grad[j] * inv_b;
    }
    out.value = sum * inv_b;
    return out;
}

double total_loss(std::span<const double> per_mop, std::span<const double> weights) {
    if (per_mop.size() != weights.size()) throw InputError("total_loss: loss and weight counts differ");
    double total = 0.0;
    for (std::size_t i = 0; i < per_mop.size(); ++i) total += weights[i] * per_mop[i];
    return total;
}

} // namespace copsl
