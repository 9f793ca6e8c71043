#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copsl/matrix.hpp"

namespace copsl {

enum class LossType { LS, COSMOS, TCH, MTCH };

std::string_view to_string(LossType t);
LossType loss_type_from_string(std::string_view name);

struct LossKind {
    LossType type = LossType::TCH;
    double gamma = 100.0;      // COSMOS penalty weight
    int cosmos_sign = -1;      // -1 rewards alignment with p, +1 is the literal printed form
    double epsilon = 1e-3;     // TCH / MTCH offset below the ideal point

    void validate() const;
};

struct LossValue {
    double value = 0.0;
    std::vector<double> grad;  // d value / d F
};

LossValue loss_ls(std::span<const double> f, std::span<const double> p);
// ||F|| = 0 makes the cosine term and its gradient 0.
LossValue loss_cosmos(std::span<const double> f, std::span<const double> p, double gamma, int sign);
// Ties in the max pick the lowest objective index.
LossValue loss_tch(std::span<const double> f, std::span<const double> p, std::span<const double> ideal,
                   double epsilon);
// InputError if any p_j < kMinPreference.
LossValue loss_mtch(std::span<const double> f, std::span<const double> p, std::span<const double> ideal,
                    double epsilon);

LossValue evaluate_loss(const LossKind& kind, std::span<const double> f, std::span<const double> p,
                        std::span<const double> ideal);

// Running componentwise minimum of every objective vector seen, per MOP.
class IdealPointTracker {
public:
    IdealPointTracker(std::size_t num_mops, std::size_t m);

    void update(std::size_t mop, std::span<const double> f);
    bool initialized(std::size_t mop) const;
    std::span<const double> ideal(std::size_t mop) const { return z_star_.at(mop); }
    std::size_t num_mops() const { return z_star_.size(); }

private:
    std::vector<std::vector<double>> z_star_;
};

// (J^T g) .* box_derivative
std::vector<double> chain_to_decision(std::span<const double> grad_f, const Matrix& jacobian,
                                      std::span<const double> box_derivative);

struct BatchLoss {
    double value = 0.0;
    Matrix grad_f;  // B x m, already scaled by 1/B
};

// Mean of the per-sample losses; rows of `objectives` and `prefs` pair up.
BatchLoss batch_loss(const LossKind& kind, const Matrix& objectives, const Matrix& prefs,
                     std::span<const double> ideal);

double total_loss(std::span<const double> per_mop, std::span<const double> weights);

} // namespace copsl
