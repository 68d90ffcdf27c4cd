#include "cbfqp/models.hpp"

#include "doctest.h"
#include "test_util.hpp"

using namespace cbfqp;
using test::fd_gradient;
using test::fd_jacobian;
using test::random_vec;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

QuadraticClf paper_clf() { return QuadraticClf(v2(6, 1)); }
CircularObstacleCbf paper_cbf() { return CircularObstacleCbf(v2(0, 3), 1.5); }

}  // namespace

TEST_CASE("quadratic CLF values and derivatives") {
    const QuadraticClf V = paper_clf();
    CHECK(V.value(Vec::Zero(2)) == 0.0);
    CHECK(V.value(v2(4, 4)) == doctest::Approx(56.0));
    CHECK(V.value(v2(0, 4.5)) == doctest::Approx(10.125));

    CHECK((V.grad(v2(4, 4)) - v2(24, 4)).norm() <= 1e-14);
    CHECK((V.grad(v2(0, 4.5)) - v2(0, 4.5)).norm() <= 1e-14);
    CHECK((V.hess(v2(1, 1)) - Vec(v2(6, 1)).asDiagonal().toDenseMatrix()).norm() == 0.0);

    CHECK_THROWS_AS(QuadraticClf(v2(1, -1)), ConfigError);
    CHECK(V.non_radial());
    CHECK_FALSE(QuadraticClf(v2(2, 2)).non_radial());
}

TEST_CASE("circular obstacle CBF") {
    const CircularObstacleCbf h = paper_cbf();
    const Vec boundary = v2(1.5, 3.0);  // center + (r, 0)
    CHECK(h.value(boundary) == doctest::Approx(0.0));
    CHECK((h.grad(boundary) - v2(1.5, 0)).norm() <= 1e-14);

    CHECK(h.value(v2(4, 4)) == doctest::Approx(7.375));
    CHECK((h.grad(v2(4, 4)) - v2(4, 1)).norm() <= 1e-14);
    CHECK((h.hess(v2(4, 4)) - Mat::Identity(2, 2)).norm() == 0.0);

    CHECK(h.value(v2(0, 3)) == doctest::Approx(-1.125));
    CHECK(h.grad(v2(0, 3)).norm() == 0.0);

    CHECK(h.circle().has_value());
    CHECK_THROWS_AS(CircularObstacleCbf(v2(0, 0), -1.0), ConfigError);
}

TEST_CASE("class-K validation") {
    CHECK_THROWS_AS(ClassKappa(-1.0), ConfigError);
    const ClassKappa k(2.5);
    CHECK(k(0.0) == 0.0);
    CHECK(k(2.0) > k(1.0));
    CHECK(k(-1.0) == doctest::Approx(-2.5));
}

TEST_CASE("builtin systems: pinned values") {
    const auto integ = builtin_system(BuiltinSystem::integrator, 2);
    CHECK(integ.f(v2(3, -2)).norm() == 0.0);
    CHECK((integ.g(v2(3, -2)) - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(integ.driftless);

    const auto f1 = builtin_system(BuiltinSystem::f1, 2);
    CHECK((f1.f(v2(3, 4)) - v2(0.5, 0.5)).norm() <= 1e-14);

    const auto f2 = builtin_system(BuiltinSystem::f2, 2);
    CHECK(f2.f(v2(1, 0)).norm() <= 1e-15);

    CHECK_THROWS_AS(f1.jac_f(v2(0, 0)), SingularityError);
    CHECK_THROWS_AS(f2.jac_f(Vec::Zero(2)), SingularityError);
    CHECK_THROWS_AS(builtin_system(BuiltinSystem::f1, 3), ConfigError);
}

TEST_CASE("f2 vanishes on the unit circle") {
    auto g = test::rng(3);
    const auto f2 = builtin_system(BuiltinSystem::f2, 2);
    for (int it = 0; it < 200; ++it) {
        const double th = test::uniform(g, 0.0, 6.283185307179586);
        const Vec x = v2(std::cos(th), std::sin(th));
        CHECK(f2.f(x).norm() <= 1e-14);
    }
}

TEST_CASE("analytic derivatives match finite differences") {
    auto g = test::rng(17);
    const QuadraticClf V = paper_clf();
    const CircularObstacleCbf h = paper_cbf();
    const auto f1 = builtin_system(BuiltinSystem::f1, 2);
    const auto f2 = builtin_system(BuiltinSystem::f2, 2);
    const auto syn = synthetic_varying_g();

    for (int it = 0; it < 200; ++it) {
        Vec x = random_vec(g, 2, -6.0, 6.0);
        if (x.norm() < 0.1) x(0) += 0.5;  // keep clear of the drift singularity

        CHECK(test::rel_err(V.grad(x), fd_gradient([&](const Vec& y) { return V.value(y); }, x)) <=
              1e-5);
        CHECK(test::rel_err(h.grad(x), fd_gradient([&](const Vec& y) { return h.value(y); }, x)) <=
              1e-5);

        for (const auto* sys : {&f1, &f2, &syn}) {
            const Mat ja = sys->jac_f(x);
            const Mat jn = fd_jacobian(sys->f, x);
            CHECK((ja - jn).norm() / std::max(1.0, ja.norm()) <= 1e-5);
        }

        // column Jacobians of the state-dependent g
        const auto cols = syn.jac_g_cols(x);
        for (int c = 0; c < syn.m; ++c) {
            const Mat jn = fd_jacobian([&](const Vec& y) { return Vec(syn.g(y).col(c)); }, x);
            CHECK((cols[c] - jn).norm() / std::max(1.0, jn.norm()) <= 1e-5);
        }
    }
}

TEST_CASE("G(x) is symmetric PSD") {
    auto g = test::rng(23);
    const auto syn = synthetic_varying_g();
    for (int it = 0; it < 100; ++it) {
        const Vec x = random_vec(g, 2, -3.0, 3.0);
        const Mat G = syn.G(x);
        CHECK((G - G.transpose()).norm() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Mat> es(G);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
}
