#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copsl/matrix.hpp"
#include "copsl/sampling.hpp"

namespace copsl {

struct BoxBounds {
    std::vector<double> lower;
    std::vector<double> upper;

    static BoxBounds unit(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }
    std::size_t size() const { return lower.size(); }
    bool contains(std::span<const double> x) const;
    void validate() const;  // ConfigError unless lower < upper elementwise
};

// x_j = lb_j + (ub_j - lb_j) * u_j. `derivative` receives dx_j/du_j.
std::vector<double> map_unit_to_box(std::span<const double> unit, const BoxBounds& bounds,
                                    std::vector<double>* derivative = nullptr);

using ObjectiveFn = std::function<std::vector<double>(std::span<const double>)>;
using JacobianFn = std::function<Matrix(std::span<const double>)>;
// Maps m-1 front coordinates in [0,1] to a point on the true Pareto front.
using FrontSamplerFn = std::function<std::vector<double>(std::span<const double>)>;
using FrontHvFn = std::function<double(std::span<const double>)>;

// A box-constrained MOP. `jacobian` may be empty, in which case central
// differences (step 1e-6 * (1 + |x_j|), clipped to the box) are used.
struct MopDefinition {
    std::string name;
    std::size_t m = 2;
    BoxBounds bounds;
    ObjectiveFn objectives;
    JacobianFn jacobian;
    FrontSamplerFn true_front;
    FrontHvFn true_front_hv;
    std::vector<double> reference_point;
    bool stub = false;

    std::size_t n() const { return bounds.size(); }
    void validate() const;

    // InputError when x is outside the box or has the wrong length.
    std::vector<double> evaluate(std::span<const double> x) const;
    Matrix jacobian_at(std::span<const double> x) const;
    bool has_true_front() const { return static_cast<bool>(true_front_hv); }
};

// Central-difference Jacobian on the box.
Matrix finite_difference_jacobian(const MopDefinition& mop, std::span<const double> x);

// Max relative error between the analytic Jacobian and central differences
// (step 1e-6) at `samples` random interior points; entries whose magnitude is
// at most 1e-8 in both are skipped.
double jacobian_check(const MopDefinition& mop, std::size_t samples, RngStream& rng);

// HV of the closed-form front against `ref`; UnsupportedError if the problem
// has none.
double true_front_hv(const MopDefinition& mop, std::span<const double> ref);

// Hypervolume dominated by the 2-objective front {(t, h(t)) : t in [0,1]},
// h decreasing from h(0) to h(1) = 0. Composite Gauss-Legendre after t = s^2.
double curve_front_hv(const std::function<double(double)>& h, std::span<const double> ref);

// K MOPs with a common objective count.
class ProblemSuite {
public:
    ProblemSuite(std::string name, std::vector<MopDefinition> problems);

    const std::string& name() const { return name_; }
    std::size_t size() const { return problems_.size(); }
    std::size_t m() const { return problems_.front().m; }
    const MopDefinition& operator[](std::size_t i) const { return problems_.at(i); }
    const std::vector<MopDefinition>& problems() const { return problems_; }
    std::vector<std::size_t> decision_dims() const;

private:
    std::string name_;
    std::vector<MopDefinition> problems_;
};

// Name -> problem. Constructed pre-populated with the built-in problems and
// the RE stubs; register_problem replaces an entry of the same name.
class ProblemRegistry {
public:
    ProblemRegistry();

    void register_problem(MopDefinition mop);
    bool contains(const std::string& name) const { return problems_.count(name) > 0; }
    const MopDefinition& get(const std::string& name) const;
    std::vector<std::string> names() const;

    static const ProblemRegistry& builtin();

private:
    std::map<std::string, MopDefinition> problems_;
};

// The shipped problems.
MopDefinition make_zdt1(std::size_t n = 6);
MopDefinition make_zdt2(std::size_t n = 6);
MopDefinition make_zdt1_shifted(std::size_t n = 6);
MopDefinition make_zdt2_shifted(std::size_t n = 6);
MopDefinition make_zdt1_rotatedg(std::size_t n = 6);
MopDefinition make_zdt2_mixed(std::size_t n = 6);
MopDefinition make_dtlz2(std::size_t n = 12);
// Placeholder carrying m, n and reference point; evaluating it throws
// UnsupportedError until a real evaluator is registered under `name`.
MopDefinition make_stub(const std::string& name, std::size_t m, std::size_t n, std::vector<double> ref);

// "synthetic-2d" or "engineering-3d-stub". ConfigError for anything else.
ProblemSuite builtin_suite(const std::string& name, const ProblemRegistry& registry = ProblemRegistry::builtin());
ProblemSuite make_suite(const std::string& name, const std::vector<std::string>& problem_names,
                        const ProblemRegistry& registry = ProblemRegistry::builtin());

} // namespace copsl
