#include <cmath>
#include <numbers>

#include "doctest.h"

#include "copsl/errors.hpp"
#include "copsl/metrics.hpp"
#include "copsl/problems.hpp"

using namespace copsl;

namespace {

// Closed-form ZDT1 written out independently of the library.
std::vector<double> zdt1_reference(const std::vector<double>& x) {
    double s = 0;
    for (std::size_t j = 1; j < x.size(); ++j) s += x[j];
    const double g = 1 + 9 * s / double(x.size() - 1);
    return {x[0], g * (1 - std::sqrt(x[0] / g))};
}

std::vector<double> dtlz2_reference(const std::vector<double>& x) {
    double g = 0;
    for (std::size_t j = 2; j < x.size(); ++j) g += std::pow(x[j] - 0.5, 2);
    const double a = x[0] * std::numbers::pi / 2, b = x[1] * std::numbers::pi / 2;
    return {(1 + g) * std::cos(a) * std::cos(b), (1 + g) * std::cos(a) * std::sin(b), (1 + g) * std::sin(a)};
}

std::vector<double> random_point(RngStream& rng, std::size_t n) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform_open();
    return x;
}

} // namespace

TEST_CASE("map_unit_to_box") {
    std::vector<double> d;
    const std::vector<double> half{0.5};
    auto x = map_unit_to_box(half, BoxBounds::unit(1), &d);
    CHECK(x[0] == 0.5);
    CHECK(d[0] == 1.0);
    x = map_unit_to_box(half, BoxBounds{{-2.0}, {4.0}}, &d);
    CHECK(x[0] == 1.0);
    CHECK(d[0] == 6.0);
    const std::vector<double> zero{0.0}, one{1.0};
    CHECK_THROWS_AS(map_unit_to_box(zero, BoxBounds::unit(1)), InternalError);
    CHECK_THROWS_AS(map_unit_to_box(one, BoxBounds::unit(1)), InternalError);
}

TEST_CASE("composition through the box map matches central differences") {
    MopDefinition mop;
    mop.name = "wide";
    mop.m = 2;
    mop.bounds = BoxBounds{{-2.0, 1.0}, {4.0, 3.0}};
    mop.reference_point = {100, 100};
    mop.objectives = [](std::span<const double> x) {
        return std::vector<double>{x[0] * x[0] + x[1], std::sin(x[0]) * x[1]};
    };
    mop.jacobian = [](std::span<const double> x) {
        return Matrix::from_rows({{2 * x[0], 1.0}, {std::cos(x[0]) * x[1], std::sin(x[0])}});
    };
    RngStream rng(1);
    double worst = 0;
    for (int s = 0; s < 50; ++s) {
        const auto u = random_point(rng, 2);
        std::vector<double> d;
        const auto x = map_unit_to_box(u, mop.bounds, &d);
        const auto jac = mop.jacobian_at(x);
        for (std::size_t k = 0; k < 2; ++k) {
            auto up = u, dn = u;
            up[k] += 1e-6;
            dn[k] -= 1e-6;
            const auto fu = mop.evaluate(map_unit_to_box(up, mop.bounds));
            const auto fd = mop.evaluate(map_unit_to_box(dn, mop.bounds));
            for (std::size_t j = 0; j < 2; ++j) {
                const double numeric = (fu[j] - fd[j]) / 2e-6;
                const double analytic = jac(j, k) * d[k];
                if (std::max(std::fabs(numeric), std::fabs(analytic)) <= 1e-8) continue;
                worst = std::max(worst, std::fabs(numeric - analytic) / std::max(std::fabs(numeric), std::fabs(analytic)));
            }
        }
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("ZDT values at known points") {
    auto zdt1 = make_zdt1();
    auto f = zdt1.evaluate(std::vector<double>(6, 0.0));
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 1.0);
    std::vector<double> corner(6, 0.0);
    corner[0] = 1.0;
    f = zdt1.evaluate(corner);
    CHECK(f[0] == 1.0);
    CHECK(f[1] == doctest::Approx(0.0));

    std::vector<double> mid(6, 0.0);
    mid[0] = 0.5;
    f = make_zdt2().evaluate(mid);
    CHECK(f[0] == 0.5);
    CHECK(f[1] == doctest::Approx(0.75));

    RngStream rng(2);
    for (int s = 0; s < 20; ++s) {
        const auto x = random_point(rng, 6);
        const auto a = zdt1.evaluate(x), b = zdt1_reference(x);
        CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-14));
        CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-14));
    }
}

TEST_CASE("substitute variants share the ZDT fronts on their optimal manifolds") {
    std::vector<double> shifted(6, 0.2);
    shifted[0] = 0.36;
    CHECK(make_zdt1_shifted().evaluate(shifted)[1] == doctest::Approx(1 - 0.6));
    CHECK(make_zdt2_shifted().evaluate(shifted)[1] == doctest::Approx(1 - 0.36 * 0.36));

    std::vector<double> flat(6, 0.0);
    flat[0] = 0.36;
    CHECK(make_zdt1_rotatedg().evaluate(flat)[1] == doctest::Approx(0.4));
    CHECK(make_zdt2_mixed().evaluate(flat)[1] == doctest::Approx(1 - 0.5 * 0.6 - 0.5 * 0.36 * 0.36));

    // Pairwise g terms add (x_j - x_{j+1})^2 for j >= 2.
    std::vector<double> x{0.25, 0.1, 0.4, 0.4, 0.9, 0.0};
    const double g = 1 + 9 * (0.1 + 0.4 + 0.4 + 0.9 + 0.0) / 5 + 0.09 + 0.0 + 0.25 + 0.81;
    CHECK(make_zdt1_rotatedg().evaluate(x)[1] == doctest::Approx(g * (1 - std::sqrt(0.25 / g))).epsilon(1e-14));
}

TEST_CASE("DTLZ2 values") {
    auto dtlz2 = make_dtlz2();
    auto f = dtlz2.evaluate(std::vector<double>(12, 0.5));
    CHECK(std::hypot(f[0], f[1], f[2]) == doctest::Approx(1.0).epsilon(1e-14));
    RngStream rng(3);
    for (int s = 0; s < 20; ++s) {
        const auto x = random_point(rng, 12);
        const auto a = dtlz2.evaluate(x), b = dtlz2_reference(x);
        for (int j = 0; j < 3; ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-13));
    }
}

TEST_CASE("out-of-box decision vectors are input errors") {
    auto zdt1 = make_zdt1();
    std::vector<double> x(6, 0.5);
    x[2] = 1.5;
    CHECK_THROWS_AS(zdt1.evaluate(x), InputError);
    CHECK_THROWS_AS(zdt1.jacobian_at(x), InputError);
    CHECK_THROWS_AS(zdt1.evaluate(std::vector<double>(5, 0.5)), InputError);
}

TEST_CASE("every built-in Jacobian passes the finite-difference check") {
    RngStream rng(4);
    for (const auto& name : {"zdt1", "zdt2", "zdt1-shifted", "zdt2-shifted", "zdt1-rotatedg", "zdt2-mixed", "dtlz2"}) {
        CAPTURE(name);
        CHECK(jacobian_check(ProblemRegistry::builtin().get(name), 100, rng) <= 1e-5);
    }
}

TEST_CASE("a corrupted Jacobian fails the check") {
    auto bad = make_zdt1();
    auto good_jac = bad.jacobian;
    bad.jacobian = [good_jac](std::span<const double> x) {
        Matrix j = good_jac(x);
        j(1, 3) *= 1.5;
        return j;
    };
    RngStream rng(5);
    CHECK(jacobian_check(bad, 20, rng) > 1e-1);
}

TEST_CASE("finite-difference fallback approximates the analytic Jacobian") {
    auto zdt2 = make_zdt2();
    auto no_jac = zdt2;
    no_jac.jacobian = {};
    RngStream rng(6);
    for (int s = 0; s < 10; ++s) {
        const auto x = random_point(rng, 6);
        const auto a = zdt2.jacobian_at(x);
        const auto n = no_jac.jacobian_at(x);
        for (std::size_t k = 0; k < a.size(); ++k)
            CHECK(n.data()[k] == doctest::Approx(a.data()[k]).epsilon(1e-6).scale(1.0));
    }
    // Near the box edge the stencil is clipped instead of leaving the box.
    std::vector<double> edge(6, 0.0);
    CHECK_NOTHROW(finite_difference_jacobian(no_jac, edge));
}

TEST_CASE("true front hypervolumes") {
    const std::vector<double> ref{1.1, 1.1};
    CHECK(true_front_hv(make_zdt1(), ref) == doctest::Approx(0.1 + 2.0 / 3.0 + 0.11).epsilon(1e-12));
    CHECK(true_front_hv(make_zdt2(), ref) == doctest::Approx(0.1 + 1.0 / 3.0 + 0.11).epsilon(1e-12));
    CHECK(true_front_hv(make_zdt1_shifted(), ref) == doctest::Approx(0.8766666666666667).epsilon(1e-12));
    CHECK(true_front_hv(make_zdt2_mixed(), ref) == doctest::Approx(0.1 + 1.0 / 3.0 + 1.0 / 6.0 + 0.11).epsilon(1e-12));
    const std::vector<double> ref3{1.1, 1.1, 1.1};
    CHECK(true_front_hv(make_dtlz2(), ref3) == doctest::Approx(1.331 - std::numbers::pi / 6).epsilon(1e-12));
    CHECK(true_front_hv(make_dtlz2(), ref3) == doctest::Approx(0.807401).epsilon(1e-6));
    const std::vector<double> inside{0.9, 1.1, 1.1};
    CHECK_THROWS_AS(true_front_hv(make_dtlz2(), inside), UnsupportedError);
    CHECK_THROWS_AS(true_front_hv(ProblemRegistry::builtin().get("re31"), ref3), UnsupportedError);
}

TEST_CASE("a dense sampled front approaches the true front HV from below") {
    const std::vector<double> ref{1.1, 1.1};
    for (auto mop : {make_zdt1(), make_zdt2(), make_zdt2_mixed()}) {
        std::vector<ObjectiveVector> pts;
        for (int k = 0; k <= 4000; ++k) {
            const std::vector<double> t{k / 4000.0};
            pts.push_back(mop.true_front(t));
        }
        const double exact = true_front_hv(mop, ref);
        const double approx = hv_2d(pts, ref);
        CHECK(approx <= exact + 1e-12);
        CHECK(approx == doctest::Approx(exact).epsilon(1e-3));
    }
}

TEST_CASE("ZDT front membership") {
    auto zdt1 = make_zdt1();
    RngStream rng(7);
    std::vector<ObjectiveVector> front;
    for (int s = 0; s < 50; ++s) {
        std::vector<double> x(6, 0.0);
        x[0] = rng.uniform();
        front.push_back(zdt1.evaluate(x));
    }
    CHECK(nondominated_filter(front).size() == front.size());
    for (int s = 0; s < 50; ++s) {
        auto x = random_point(rng, 6);
        auto projected = x;
        std::fill(projected.begin() + 1, projected.end(), 0.0);
        CHECK(dominates(zdt1.evaluate(projected), zdt1.evaluate(x)));
    }
}

TEST_CASE("built-in suites") {
    auto syn = builtin_suite("synthetic-2d");
    CHECK(syn.size() == 6);
    CHECK(syn.m() == 2);
    for (std::size_t n : syn.decision_dims()) CHECK(n == 6);
    for (const auto& p : syn.problems()) {
        CHECK(p.reference_point == std::vector<double>{1.1, 1.1});
        CHECK(p.has_true_front());
        CHECK(static_cast<bool>(p.jacobian));
    }

    auto eng = builtin_suite("engineering-3d-stub");
    CHECK(eng.size() == 5);
    CHECK(eng.m() == 3);
    CHECK(eng[0].reference_point == std::vector<double>{550.0, 9.9e6, 2.2e7});
    CHECK(eng[4].reference_point == std::vector<double>{1.08, 1.05, 1.08});
    for (const auto& p : eng.problems()) {
        CHECK(p.stub);
        CHECK_THROWS_AS(p.evaluate(std::vector<double>(p.n(), 0.5)), UnsupportedError);
    }
    CHECK_THROWS_AS(builtin_suite("F1-F6"), ConfigError);
}

TEST_CASE("suites reject mixed objective counts") {
    CHECK_THROWS_AS(ProblemSuite("mixed", {make_zdt1(), make_dtlz2()}), ConfigError);
    CHECK_THROWS_AS(make_suite("x", {"zdt1", "nope"}), ConfigError);
}

TEST_CASE("registering a problem replaces a stub") {
    ProblemRegistry reg;
    auto real = make_dtlz2(4);
    real.name = "re31";
    reg.register_problem(real);
    CHECK_FALSE(reg.get("re31").stub);
    CHECK(reg.get("re31").n() == 4);
    auto suite = builtin_suite("engineering-3d-stub", reg);
    CHECK_NOTHROW(suite[0].evaluate(std::vector<double>(4, 0.5)));

    MopDefinition broken;
    broken.name = "broken";
    CHECK_THROWS_AS(reg.register_problem(broken), ConfigError);
}
