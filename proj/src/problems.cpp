#include "copsl/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "copsl/errors.hpp"

namespace copsl {

bool BoxBounds::contains(std::span<const double> x) const {
    if (x.size() != size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j)
        if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
    return true;
}

void BoxBounds::validate() const {
    if (lower.size() != upper.size() || lower.empty()) throw ConfigError("box bounds: lower/upper length mismatch");
    for (std::size_t j = 0; j < lower.size(); ++j)
        if (!(lower[j] < upper[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j]))
            throw ConfigError("box bounds: need finite lb < ub for variable " + std::to_string(j));
}

std::vector<double> map_unit_to_box(std::span<const double> unit, const BoxBounds& bounds,
                                    std::vector<double>* derivative) {
    if (unit.size() != bounds.size()) throw InternalError("map_unit_to_box: dimension mismatch");
    std::vector<double> x(unit.size());
    if (derivative) derivative->resize(unit.size());
    for (std::size_t j = 0; j < unit.size(); ++j) {
        if (!(unit[j] > 0.0 && unit[j] < 1.0))
            throw InternalError("map_unit_to_box: unit value " + std::to_string(unit[j]) + " outside (0,1)");
        const double width = bounds.upper[j] - bounds.lower[j];
        x[j] = bounds.lower[j] + width * unit[j];
        if (derivative) (*derivative)[j] = width;
    }
    return x;
}

void MopDefinition::validate() const {
    if (name.empty()) throw ConfigError("problem without a name");
    if (m < 2) throw ConfigError("problem '" + name + "': m must be >= 2");
    bounds.validate();
    if (!objectives) throw ConfigError("problem '" + name + "': missing objective evaluator");
    if (!reference_point.empty() && reference_point.size() != m)
        throw ConfigError("problem '" + name + "': reference point length != m");
}

std::vector<double> MopDefinition::evaluate(std::span<const double> x) const {
    if (!bounds.contains(x)) throw InputError("problem '" + name + "': decision vector outside its box");
    auto f = objectives(x);
    if (f.size() != m) throw InternalError("problem '" + name + "': evaluator returned wrong length");
    return f;
}

Matrix MopDefinition::jacobian_at(std::span<const double> x) const {
    if (!bounds.contains(x)) throw InputError("problem '" + name + "': decision vector outside its box");
    if (!jacobian) return finite_difference_jacobian(*this, x);
    auto jac = jacobian(x);
    if (jac.rows() != m || jac.cols() != n()) throw InternalError("problem '" + name + "': jacobian has wrong shape");
    return jac;
}

namespace {

Matrix central_differences(const MopDefinition& mop, std::span<const double> x, bool relative_step) {
    const std::size_t n = mop.n();
    Matrix jac(mop.m, n);
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t k = 0; k < n; ++k) {
        const double h = relative_step ? 1e-6 * (1.0 + std::abs(x[k])) : 1e-6;
        const double hi = std::min(x[k] + h, mop.bounds.upper[k]);
        const double lo = std::max(x[k] - h, mop.bounds.lower[k]);
        probe[k] = hi;
        const auto f_hi = mop.objectives(probe);
        probe[k] = lo;
        const auto f_lo = mop.objectives(probe);
        probe[k] = x[k];
        for (std::size_t j = 0; j < mop.m; ++j) jac(j, k) = (f_hi[j] - f_lo[j]) / (hi - lo);
    }
    return jac;
}

} // namespace

Matrix finite_difference_jacobian(const MopDefinition& mop, std::span<const double> x) {
    return central_differences(mop, x, true);
}

double jacobian_check(const MopDefinition& mop, std::size_t samples, RngStream& rng) {
    if (!mop.jacobian) throw UnsupportedError("problem '" + mop.name + "' has no analytic jacobian to check");
    double worst = 0.0;
    std::vector<double> x(mop.n());
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] = mop.bounds.lower[j] + (mop.bounds.upper[j] - mop.bounds.lower[j]) * rng.uniform_open();
        const Matrix analytic = mop.jacobian_at(x);
        const Matrix numeric = central_differences(mop, x, false);
        for (std::size_t e = 0; e < analytic.size(); ++e) {
            const double a = analytic.data()[e];
            const double d = numeric.data()[e];
            const double scale = std::max(std::abs(a), std::abs(d));
            if (scale <= 1e-8) continue;
            worst = std::max(worst, std::abs(a - d) / scale);
        }
    }
    return worst;
}

double true_front_hv(const MopDefinition& mop, std::span<const double> ref) {
    if (!mop.true_front_hv) throw UnsupportedError("problem '" + mop.name + "' has no closed-form Pareto front");
    if (ref.size() != mop.m) throw InputError("true_front_hv: reference point length != m");
    return mop.true_front_hv(ref);
}

double curve_front_hv(const std::function<double(double)>& h, std::span<const double> ref) {
    if (ref.size() != 2) throw InputError("curve_front_hv: reference point must have 2 entries");
    const double r1 = ref[0];
    const double r2 = ref[1];
    if (r1 <= 0.0 || r2 <= 0.0) return 0.0;

    // 5-point Gauss-Legendre on [-1, 1].
    static constexpr std::array<double, 5> kNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                                  0.5384693101056831, 0.9061798459386640};
    static constexpr std::array<double, 5> kWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                    0.4786286704993665, 0.2369268850561891};
    constexpr std::size_t kPanels = 4096;

    const double upper = std::sqrt(std::min(1.0, r1));
    const double width = upper / static_cast<double>(kPanels);
    double area = 0.0;
    for (std::size_t p = 0; p < kPanels; ++p) {
        const double mid = (static_cast<double>(p) + 0.5) * width;
        double panel = 0.0;
        for (std::size_t q = 0; q < kNodes.size(); ++q) {
            const double s = mid + 0.5 * width * kNodes[q];
            panel += kWeights[q] * std::max(0.0, r2 - h(s * s)) * 2.0 * s;
        }
        area += 0.5 * width * panel;
    }
    if (r1 > 1.0) area += (r1 - 1.0) * r2;
    return area;
}

ProblemSuite::ProblemSuite(std::string name, std::vector<MopDefinition> problems)
    : name_(std::move(name)), problems_(std::move(problems)) {
    if (problems_.empty()) throw ConfigError("suite '" + name_ + "' has no problems");
    for (const auto& p : problems_) {
        p.validate();
        if (p.m != problems_.front().m)
            throw ConfigError("suite '" + name_ + "': problem '" + p.name + "' has m=" + std::to_string(p.m) +
                              " but the suite has m=" + std::to_string(problems_.front().m));
    }
}

std::vector<std::size_t> ProblemSuite::decision_dims() const {
    std::vector<std::size_t> dims;
    for (const auto& p : problems_) dims.push_back(p.n());
    return dims;
}

namespace {

enum class GKind { Linear, Shifted, Pairwise };
enum class Shape { Sqrt, Square, Mixed };

// Below this ratio the sqrt front's x1-derivative is evaluated at the floor
// instead of diverging.
constexpr double kRatioFloor = 1e-20;
constexpr double kShift = 0.2;

double shape_phi(Shape s, double r) {
    switch (s) {
    case Shape::Sqrt: return std::sqrt(r);
    case Shape::Square: return r * r;
    case Shape::Mixed: return 0.5 * std::sqrt(r) + 0.5 * r * r;
    }
    return 0.0;
}

double shape_dphi(Shape s, double r) {
    const double rs = std::sqrt(std::max(r, kRatioFloor));
    switch (s) {
    case Shape::Sqrt: return 0.5 / rs;
    case Shape::Square: return 2.0 * r;
    case Shape::Mixed: return 0.25 / rs + r;
    }
    return 0.0;
}

double zdt_g(GKind kind, std::span<const double> x) {
    const std::size_t n = x.size();
    double sum = 0.0;
    for (std::size_t j = 1; j < n; ++j) sum += kind == GKind::Shifted ? std::abs(x[j] - kShift) : x[j];
    double g = 1.0 + 9.0 * sum / static_cast<double>(n - 1);
    if (kind == GKind::Pairwise)
        for (std::size_t j = 1; j + 1 < n; ++j) g += (x[j] - x[j + 1]) * (x[j] - x[j + 1]);
    return g;
}

std::vector<double> zdt_g_gradient(GKind kind, std::span<const double> x) {
    const std::size_t n = x.size();
    const double c = 9.0 / static_cast<double>(n - 1);
    std::vector<double> grad(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) {
        if (kind == GKind::Shifted) {
            const double d = x[j] - kShift;
            grad[j] = d > 0.0 ? c : (d < 0.0 ? -c : 0.0);
        } else {
            grad[j] = c;
        }
    }
    if (kind == GKind::Pairwise) {
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const double d = x[j] - x[j + 1];
            grad[j] += 2.0 * d;
            grad[j + 1] -= 2.0 * d;
        }
    }
    return grad;
}

MopDefinition make_zdt(const std::string& name, std::size_t n, GKind kind, Shape shape) {
    if (n < 2) throw ConfigError(name + ": n must be >= 2");
    MopDefinition mop;
    mop.name = name;
    mop.m = 2;
    mop.bounds = BoxBounds::unit(n);
    mop.reference_point = {1.1, 1.1};
    mop.objectives = [kind, shape](std::span<const double> x) {
        const double g = zdt_g(kind, x);
        const double f1 = x[0];
        return std::vector<double>{f1, g * (1.0 - shape_phi(shape, f1 / g))};
    };
    // f2 = g * (1 - phi(r)), r = x1 / g:
    //   df2/dx1 = -phi'(r),  df2/dxj = dg/dxj * (1 - phi(r) + r * phi'(r)).
    mop.jacobian = [kind, shape](std::span<const double> x) {
        const std::size_t n_vars = x.size();
        const double g = zdt_g(kind, x);
        const double r = x[0] / g;
        const double dphi = shape_dphi(shape, r);
        const auto dg = zdt_g_gradient(kind, x);
        Matrix jac(2, n_vars);
        jac(0, 0) = 1.0;
        jac(1, 0) = -dphi;
        const double factor = 1.0 - shape_phi(shape, r) + r * dphi;
        for (std::size_t j = 1; j < n_vars; ++j) jac(1, j) = dg[j] * factor;
        return jac;
    };
    mop.true_front = [shape](std::span<const double> t) {
        return std::vector<double>{t[0], 1.0 - shape_phi(shape, t[0])};
    };
    mop.true_front_hv = [shape](std::span<const double> ref) {
        return curve_front_hv([shape](double t) { return 1.0 - shape_phi(shape, t); }, ref);
    };
    return mop;
}

} // namespace

MopDefinition make_zdt1(std::size_t n) { return make_zdt("zdt1", n, GKind::Linear, Shape::Sqrt); }
MopDefinition make_zdt2(std::size_t n) { return make_zdt("zdt2", n, GKind::Linear, Shape::Square); }
MopDefinition make_zdt1_shifted(std::size_t n) { return make_zdt("zdt1-shifted", n, GKind::Shifted, Shape::Sqrt); }
MopDefinition make_zdt2_shifted(std::size_t n) { return make_zdt("zdt2-shifted", n, GKind::Shifted, Shape::Square); }
MopDefinition make_zdt1_rotatedg(std::size_t n) { return make_zdt("zdt1-rotatedg", n, GKind::Pairwise, Shape::Sqrt); }
MopDefinition make_zdt2_mixed(std::size_t n) { return make_zdt("zdt2-mixed", n, GKind::Linear, Shape::Mixed); }

MopDefinition make_dtlz2(std::size_t n) {
    if (n < 3) throw ConfigError("dtlz2: n must be >= 3");
    constexpr double kHalfPi = std::numbers::pi / 2.0;
    MopDefinition mop;
    mop.name = "dtlz2";
    mop.m = 3;
    mop.bounds = BoxBounds::unit(n);
    mop.reference_point = {1.1, 1.1, 1.1};
    mop.objectives = [](std::span<const double> x) {
        double g = 0.0;
        for (std::size_t j = 2; j < x.size(); ++j) g += (x[j] - 0.5) * (x[j] - 0.5);
        const double a = kHalfPi * x[0], b = kHalfPi * x[1];
        return std::vector<double>{(1.0 + g) * std::cos(a) * std::cos(b), (1.0 + g) * std::cos(a) * std::sin(b),
                                   (1.0 + g) * std::sin(a)};
    };
    mop.jacobian = [](std::span<const double> x) {
        double g = 0.0;
        for (std::size_t j = 2; j < x.size(); ++j) g += (x[j] - 0.5) * (x[j] - 0.5);
        const double a = kHalfPi * x[0], b = kHalfPi * x[1];
        const double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b);
        const double s = 1.0 + g;
        Matrix jac(3, x.size());
        jac(0, 0) = -s * kHalfPi * sa * cb;
        jac(0, 1) = -s * kHalfPi * ca * sb;
        jac(1, 0) = -s * kHalfPi * sa * sb;
        jac(1, 1) = s * kHalfPi * ca * cb;
        jac(2, 0) = s * kHalfPi * ca;
        for (std::size_t j = 2; j < x.size(); ++j) {
            const double dg = 2.0 * (x[j] - 0.5);
            jac(0, j) = dg * ca * cb;
            jac(1, j) = dg * ca * sb;
            jac(2, j) = dg * sa;
        }
        return jac;
    };
    mop.true_front = [](std::span<const double> t) {
        const double a = kHalfPi * t[0], b = kHalfPi * t[1];
        return std::vector<double>{std::cos(a) * std::cos(b), std::cos(a) * std::sin(b), std::sin(a)};
    };
    // Complement of the unit octant ball inside the reference box.
    mop.true_front_hv = [](std::span<const double> ref) {
        for (double r : ref)
            if (r < 1.0)
                throw UnsupportedError("dtlz2: closed-form front HV needs every reference coordinate >= 1");
        return ref[0] * ref[1] * ref[2] - std::numbers::pi / 6.0;
    };
    return mop;
}

MopDefinition make_stub(const std::string& name, std::size_t m, std::size_t n, std::vector<double> ref) {
    MopDefinition mop;
    mop.name = name;
    mop.m = m;
    mop.bounds = BoxBounds::unit(n);
    mop.reference_point = std::move(ref);
    mop.stub = true;
    mop.objectives = [name](std::span<const double>) -> std::vector<double> {
        throw UnsupportedError("problem '" + name + "' is a placeholder; register its evaluator first");
    };
    return mop;
}

ProblemRegistry::ProblemRegistry() {
    for (auto&& mop : {make_zdt1(), make_zdt2(), make_zdt1_shifted(), make_zdt2_shifted(), make_zdt1_rotatedg(),
                       make_zdt2_mixed(), make_dtlz2()})
        problems_.emplace(mop.name, mop);
    // Engineering problems: objective count, dimension and reference point only.
    problems_.emplace("re31", make_stub("re31", 3, 3, {550.0, 9.9e6, 2.2e7}));
    problems_.emplace("re32", make_stub("re32", 3, 4, {38.83, 1.9e4, 4.6e8}));
    problems_.emplace("re33", make_stub("re33", 3, 4, {5.83, 3.43, 27.5}));
    problems_.emplace("re34", make_stub("re34", 3, 5, {1865.0, 12.98, 0.32}));
    problems_.emplace("re37", make_stub("re37", 3, 4, {1.08, 1.05, 1.08}));
}

void ProblemRegistry::register_problem(MopDefinition mop) {
    mop.validate();
    auto name = mop.name;
    problems_.insert_or_assign(std::move(name), std::move(mop));
}

const MopDefinition& ProblemRegistry::get(const std::string& name) const {
    auto it = problems_.find(name);
    if (it == problems_.end()) throw ConfigError("unknown problem '" + name + "'");
    return it->second;
}

std::vector<std::string> ProblemRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : problems_) out.push_back(name);
    return out;
}

const ProblemRegistry& ProblemRegistry::builtin() {
    static const ProblemRegistry registry;
    return registry;
}

ProblemSuite make_suite(const std::string& name, const std::vector<std::string>& problem_names,
                        const ProblemRegistry& registry) {
    std::vector<MopDefinition> problems;
    for (const auto& p : problem_names) problems.push_back(registry.get(p));
    return ProblemSuite(name, std::move(problems));
}

ProblemSuite builtin_suite(const std::string& name, const ProblemRegistry& registry) {
    if (name == "synthetic-2d")
        return make_suite(name, {"zdt1", "zdt2", "zdt1-shifted", "zdt2-shifted", "zdt1-rotatedg", "zdt2-mixed"},
                          registry);
    if (name == "engineering-3d-stub") return make_suite(name, {"re31", "re32", "re33", "re34", "re37"}, registry);
    throw ConfigError("unknown suite '" + name + "' (expected synthetic-2d or engineering-3d-stub)");
}

} // namespace copsl
