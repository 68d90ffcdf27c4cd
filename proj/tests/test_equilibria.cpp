#include "cbfqp/equilibria.hpp"

#include <numbers>

#include "cbfqp/sim.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cbfqp;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

struct Bench {
    ControlAffineSystem sys = builtin_system(BuiltinSystem::integrator, 2);
    QuadraticClf V{v2(6, 1)};
    CircularObstacleCbf h{v2(0, 3), 1.5};
    NominalGains gains;
};

// V-gradient parallel to the obstacle normal on the circle: besides the two
// axis candidates (c = lambda2 x2 / (x2 - 3)), the c = lambda1 branch yields
// the pair x2 = 3 lambda1/(lambda1 - lambda2), x1 = +-sqrt(r^2 - (x2-3)^2)
// whenever that height intersects the circle.
constexpr double kSideX = 1.3747727084867520;  // sqrt(1.89)

}  // namespace

TEST_CASE("boundary scan: benchmark geometry") {
    Bench b;
    const BoundaryScan scan = find_boundary_equilibria(b.sys, b.V, b.h, b.gains);
    CHECK_FALSE(scan.degenerate_continuum);
    REQUIRE(scan.reports.size() == 3);

    const auto& left = scan.reports[2];
    const auto& top = scan.reports[1];
    const auto& right = scan.reports[0];

    CHECK(std::abs(top.x(0) - 0.0) <= 1e-9);
    CHECK(std::abs(top.x(1) - 4.5) <= 1e-9);
    CHECK(top.c == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(top.tangent_form_value == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(top.verdict == Stability::asymptotically_stable);
    // tangent-restricted curvature decides; the full form is indefinite here
    CHECK(top.full_form_min_eig == doctest::Approx(-2.0).epsilon(1e-10));

    for (const auto* side : {&right, &left}) {
        CHECK(std::abs(std::abs(side->x(0)) - kSideX) <= 1e-9);
        CHECK(std::abs(side->x(1) - 3.6) <= 1e-9);
        CHECK(side->c == doctest::Approx(6.0).epsilon(1e-10));
        CHECK(side->tangent_form_value == doctest::Approx(-4.2).epsilon(1e-10));
        CHECK(side->verdict == Stability::unstable);
    }

    // exactly one attractor, and the rejected bottom candidate is absent
    int stable = 0;
    for (const auto& r : scan.reports) {
        if (r.verdict == Stability::asymptotically_stable) ++stable;
        CHECK((r.x - v2(0, 1.5)).norm() > 1e-3);
        CHECK(r.c >= 0.0);
        CHECK(r.closed_loop_residual <= 1e-8);
        CHECK(std::abs(b.h.value(r.x)) <= 1e-9);
    }
    CHECK(stable == 1);
}

TEST_CASE("boundary scan: closed-loop spectrum at the attractor") {
    Bench b;
    const BoundaryScan scan = find_boundary_equilibria(b.sys, b.V, b.h, b.gains);
    const auto& top = scan.reports[1];
    REQUIRE(top.eigenvalues.size() == 2);
    // normal direction relaxes at -alpha'(0); the tangent rate is
    // -p*gamma(V*) times the tangent curvature 3: -5 * 10.125 * 3
    CHECK(top.eigenvalues[0].real() == doctest::Approx(-151.875).epsilon(1e-5));
    CHECK(top.eigenvalues[1].real() == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(std::abs(top.eigenvalues[0].imag()) <= 1e-7);

    // eigenvalues are invariant under the scenario's mirror symmetry
    const auto& right = scan.reports[0];
    const auto& left = scan.reports[2];
    for (size_t i = 0; i < 2; ++i) {
        CHECK(right.eigenvalues[i].real() ==
              doctest::Approx(left.eigenvalues[i].real()).epsilon(1e-7));
    }
}

TEST_CASE("swapped eigenvalues flip the verdict") {
    Bench b;
    const QuadraticClf V16(v2(1, 6));
    const BoundaryScan scan = find_boundary_equilibria(b.sys, V16, b.h, b.gains);
    REQUIRE(scan.reports.size() == 1);
    const auto& top = scan.reports[0];
    CHECK(std::abs(top.x(0)) <= 1e-9);
    CHECK(top.x(1) == doctest::Approx(4.5).epsilon(1e-10));
    CHECK(top.c == doctest::Approx(18.0).epsilon(1e-10));
    CHECK(top.tangent_form_value == doctest::Approx(-17.0).epsilon(1e-10));
    CHECK(top.verdict == Stability::unstable);
}

TEST_CASE("radial reference with concentric obstacle: collinear continuum") {
    const QuadraticClf radial(v2(1, 1));
    const CircularObstacleCbf centered(v2(0, 0), 1.5);
    const auto sys = builtin_system(BuiltinSystem::integrator, 2);
    const BoundaryScan scan = find_boundary_equilibria(sys, radial, centered, NominalGains{});
    CHECK(scan.degenerate_continuum);
    REQUIRE(scan.reports.size() == 1);
    CHECK(scan.reports[0].verdict == Stability::marginal);
    // c = 1 everywhere on the circle, so the curvature form vanishes
    CHECK(std::abs(scan.reports[0].tangent_form_value) <= 1e-9);
}

TEST_CASE("radial reference, offset obstacle: repelling top point") {
    Bench b;
    const QuadraticClf radial(v2(1, 1));
    const BoundaryScan scan = find_boundary_equilibria(b.sys, radial, b.h, b.gains);
    REQUIRE(scan.reports.size() == 1);
    const auto& top = scan.reports[0];
    CHECK(top.x(1) == doctest::Approx(4.5).epsilon(1e-10));
    CHECK(top.c == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(top.tangent_form_value == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(top.verdict == Stability::unstable);
}

TEST_CASE("tangent test validates its inputs") {
    Bench b;
    CHECK_THROWS_AS(stability_tangent_test(b.V, b.h, v2(0, 6), 3.0, b.gains),
                    NotBoundaryPointError);
}

TEST_CASE("boundary scan rejects unsupported geometry") {
    Bench b;
    struct FreeformCbf final : Cbf {
        double value(const Vec& x) const override { return x(0); }
        Vec grad(const Vec& x) const override {
            Vec g = Vec::Zero(x.size());
            g(0) = 1.0;
            return g;
        }
        Mat hess(const Vec& x) const override {
            return Mat::Zero(x.size(), x.size());
        }
    } freeform;
    CHECK_THROWS_AS(find_boundary_equilibria(b.sys, b.V, freeform, b.gains),
                    UnsupportedBoundaryError);

    const auto sys3 = builtin_system(BuiltinSystem::integrator, 3);
    const QuadraticClf V3{Vec::Ones(3) + Vec::Unit(3, 0)};
    Vec c3 = Vec::Zero(3);
    c3(1) = 3.0;
    const CircularObstacleCbf h3(c3, 1.5);
    CHECK_THROWS_AS(find_boundary_equilibria(sys3, V3, h3, b.gains),
                    UnsupportedBoundaryError);
}

TEST_CASE("interior search") {
    Bench b;
    const Vec lo = v2(-6, -6), hi = v2(6, 6);

    SUBCASE("driftless system has none") {
        const auto reps = find_interior_equilibria(b.sys, b.V, b.h, b.gains, lo, hi);
        CHECK(reps.empty());
    }

    SUBCASE("f1 balance point on the aligned ray") {
        const auto f1 = builtin_system(BuiltinSystem::f1, 2);
        const auto reps = find_interior_equilibria(f1, b.V, b.h, b.gains, lo, hi);
        REQUIRE(reps.size() == 1);
        // drift 0.1|x|(1,1) balances p V(x) grad V on grad V || (1,1), i.e.
        // x2 = 6 x1 and 0.1 sqrt(37) x1 = 630 x1^3
        const double t = std::sqrt(0.1 * std::sqrt(37.0) / 630.0);
        CHECK(std::abs(reps[0].x(0) - t) <= 1e-9);
        CHECK(std::abs(reps[0].x(1) - 6.0 * t) <= 1e-9);
        CHECK(reps[0].closed_loop_residual <= 1e-9);
        CHECK(reps[0].verdict == Stability::asymptotically_stable);
    }

    SUBCASE("f2 balance point") {
        const auto f2 = builtin_system(BuiltinSystem::f2, 2);
        const auto reps = find_interior_equilibria(f2, b.V, b.h, b.gains, lo, hi);
        REQUIRE(reps.size() == 1);
        // 6300 t^2 + 37 t - sqrt(37) = 0 on the ray x = (t, 6t)
        const double disc = 37.0 * 37.0 + 4.0 * 6300.0 * std::sqrt(37.0);
        const double t = (-37.0 + std::sqrt(disc)) / (2.0 * 6300.0);
        CHECK(std::abs(reps[0].x(0) - t) <= 1e-9);
        CHECK(std::abs(reps[0].x(1) - 6.0 * t) <= 1e-9);
        CHECK(reps[0].closed_loop_residual <= 1e-9);
    }
}

TEST_CASE("origin report distinguishes attractive and repelling drifts") {
    Bench b;
    CHECK(origin_report(b.sys, b.V, b.h, b.gains).verdict ==
          Stability::asymptotically_stable);
    const auto f1 = builtin_system(BuiltinSystem::f1, 2);
    CHECK(origin_report(f1, b.V, b.h, b.gains).verdict == Stability::unstable);
}

TEST_CASE("numeric closed-loop Jacobian is negative definite in the descent funnel") {
    Bench b;
    const ClosedLoopFn fcl = nominal_closed_loop(b.sys, b.V, b.h, b.gains);
    const NumericJacobian nj = numeric_closed_loop_jacobian(fcl, v2(0.5, 0.5));
    CHECK_FALSE(nj.one_sided);
    Eigen::EigenSolver<Mat> es(nj.j);
    for (int i = 0; i < 2; ++i) CHECK(es.eigenvalues()(i).real() < 0.0);
}

TEST_CASE("curvature and spectrum verdicts agree on every boundary report") {
    Bench b;
    const auto f1 = builtin_system(BuiltinSystem::f1, 2);
    const auto f2 = builtin_system(BuiltinSystem::f2, 2);
    for (const ControlAffineSystem* sys : {&std::as_const(b.sys), &f1, &f2}) {
        const BoundaryScan scan = find_boundary_equilibria(*sys, b.V, b.h, b.gains);
        for (const auto& r : scan.reports) {
            double max_re = -1e300;
            for (const auto& e : r.eigenvalues) max_re = std::max(max_re, e.real());
            const Stability from_spectrum =
                max_re < -1e-9 ? Stability::asymptotically_stable
                               : (max_re > 1e-9 ? Stability::unstable : Stability::marginal);
            CHECK(r.verdict == from_spectrum);
        }
    }
}

TEST_CASE("serial and parallel scans agree exactly") {
    Bench b;
    BoundaryScanOptions ser;
    ser.exec = Exec::serial;
    BoundaryScanOptions par;
    par.exec = Exec::parallel;
    const BoundaryScan a = find_boundary_equilibria(b.sys, b.V, b.h, b.gains, ser);
    const BoundaryScan c = find_boundary_equilibria(b.sys, b.V, b.h, b.gains, par);
    REQUIRE(a.reports.size() == c.reports.size());
    for (size_t i = 0; i < a.reports.size(); ++i) {
        CHECK(a.reports[i].x == c.reports[i].x);
        CHECK(a.reports[i].c == c.reports[i].c);
    }

    const auto f1 = builtin_system(BuiltinSystem::f1, 2);
    InteriorScanOptions is;
    is.exec = Exec::serial;
    InteriorScanOptions ip;
    ip.exec = Exec::parallel;
    const auto ri = find_interior_equilibria(f1, b.V, b.h, b.gains, v2(-6, -6), v2(6, 6), is);
    const auto rp = find_interior_equilibria(f1, b.V, b.h, b.gains, v2(-6, -6), v2(6, 6), ip);
    REQUIRE(ri.size() == rp.size());
    for (size_t i = 0; i < ri.size(); ++i) CHECK(ri[i].x == rp[i].x);
}

TEST_CASE("simulation concordance at the attracting boundary point") {
    Bench b;
    const BoundaryScan scan = find_boundary_equilibria(b.sys, b.V, b.h, b.gains);
    const Vec xstar = scan.reports[1].x;

    SimConfig cfg;
    cfg.t_final = 5.0;
    cfg.stop_on_capture = false;
    int tested = 0;
    for (int i = 0; i < 8; ++i) {
        const double th = 2.0 * std::numbers::pi * i / 8.0;
        const Vec x0 = xstar + 1e-2 * v2(std::cos(th), std::sin(th));
        if (b.h.value(x0) < 0.0) continue;  // seed fell inside the obstacle
        const TrajectoryRecord rec = simulate_nominal(b.sys, b.V, b.h, b.gains, x0, cfg);
        CHECK((rec.x.back() - xstar).norm() <= 1e-3);
        ++tested;
    }
    CHECK(tested >= 4);
}

TEST_CASE("simulation concordance at a repelling boundary point") {
    Bench b;
    const QuadraticClf radial(v2(1, 1));
    const BoundaryScan scan = find_boundary_equilibria(b.sys, radial, b.h, b.gains);
    const Vec xstar = scan.reports[0].x;

    SimConfig cfg;
    cfg.t_final = 5.0;
    double max_final = 0.0;
    for (const double dx : {-1e-2, 1e-2}) {
        const Vec x0 = xstar + v2(dx, 1e-3);
        if (b.h.value(x0) < 0.0) continue;
        const TrajectoryRecord rec = simulate_nominal(b.sys, radial, b.h, b.gains, x0, cfg);
        max_final = std::max(max_final, (rec.x.back() - xstar).norm());
    }
    CHECK(max_final > 0.5);
}
