#include "cbfqp/qp.hpp"

#include "doctest.h"
#include "test_util.hpp"

using namespace cbfqp;
using test::random_vec;
using test::uniform;

namespace {

// Projected-gradient ascent on the dual: max over lambda >= 0 of
// -1/2 l' M l - l' b with M = A C^-1 A', then z = -C^-1 A' l. Step 1e-3,
// iterated until the projected gradient stalls. Independent of the
// enumeration path in solve_active_set.
struct DualPgdResult {
    Vec z;
    double objective;
};

DualPgdResult dual_pgd(const QpProblem& prob, int max_iters = 200000) {
    const int dim = static_cast<int>(prob.cost.size());
    const int nr = static_cast<int>(prob.rows.size());
    if (nr == 0) return DualPgdResult{Vec::Zero(dim), 0.0};
    Mat a(nr, dim);
    Vec b(nr);
    for (int i = 0; i < nr; ++i) {
        const auto& r = prob.rows[i];
        a.row(i) = (r.sense == Sense::le) ? Vec(r.a).transpose() : Vec(-r.a).transpose();
        b(i) = (r.sense == Sense::le) ? r.b : -r.b;
    }
    const Vec ic = prob.cost.cwiseInverse();
    const Mat m = a * ic.asDiagonal() * a.transpose();

    Vec l = Vec::Zero(nr);
    const double step = 1e-3;
    for (int it = 0; it < max_iters; ++it) {
        const Vec grad = -(m * l) - b;
        Vec ln = (l + step * grad).cwiseMax(0.0);
        if ((ln - l).lpNorm<Eigen::Infinity>() <= 1e-14) {
            l = ln;
            break;
        }
        l = ln;
    }
    DualPgdResult out;
    out.z = -(ic.asDiagonal() * (a.transpose() * l));
    out.objective = 0.5 * out.z.dot(prob.cost.asDiagonal() * out.z);
    return out;
}

QpProblem random_feasible_problem(std::mt19937_64& g) {
    QpProblem prob;
    const int dim = 2 + static_cast<int>(g() % 3);  // 2..4
    prob.cost = Vec(dim);
    for (int i = 0; i < dim; ++i) prob.cost(i) = uniform(g, 0.5, 3.0);

    const int nr = static_cast<int>(g() % 4);  // 0..3 rows
    const Vec z0 = random_vec(g, dim, -1.0, 1.0);
    for (int i = 0; i < nr; ++i) {
        QpRow r;
        // resample rows that are tiny or nearly parallel to an earlier one;
        // those make every certifying KKT subsystem singular
        for (;;) {
            r.a = random_vec(g, dim, -2.0, 2.0);
            if (r.a.norm() < 0.3) continue;
            bool distinct = true;
            for (const auto& prev : prob.rows) {
                const double cosang =
                    std::abs(r.a.dot(prev.a)) / (r.a.norm() * prev.a.norm());
                if (cosang > 0.95) distinct = false;
            }
            if (distinct) break;
        }
        r.sense = (g() & 1) ? Sense::le : Sense::ge;
        const double slack = uniform(g, 0.0, 1.5);
        const double lhs = r.a.dot(z0);
        r.b = (r.sense == Sense::le) ? lhs + slack : lhs - slack;
        prob.rows.push_back(r);
    }
    return prob;
}

}  // namespace

TEST_CASE("unconstrained problem returns zero") {
    QpProblem prob;
    prob.cost = Vec::Ones(3);
    const QpSolution sol = solve_active_set(prob);
    CHECK(sol.z.norm() == 0.0);
    CHECK(sol.active_mask == 0);
}

TEST_CASE("slack rows leave the minimizer at zero") {
    QpProblem prob;
    prob.cost = Vec::Ones(3);
    prob.cost(2) = 5.0;
    QpRow r1;  // all-slack stabilization-style row
    r1.a = Vec::Zero(3);
    r1.a(2) = -1.0;
    r1.b = 0.0;
    r1.sense = Sense::le;
    QpRow r2;  // safety-style row with positive slack at z = 0
    r2.a = Vec::Zero(3);
    r2.a(0) = 1.0;
    r2.b = -2.0;
    r2.sense = Sense::ge;
    prob.rows = {r1, r2};
    const QpSolution sol = solve_active_set(prob);
    CHECK(sol.z.norm() <= 1e-15);
    CHECK(sol.lambda.maxCoeff() <= 1e-15);
}

TEST_CASE("pinned single-row solve") {
    // stabilization row of the planar benchmark at x = (0, -3):
    // (0,-3 | -1) z <= -4.5 with weights (1,1,5).
    QpProblem prob;
    prob.cost = Vec::Ones(3);
    prob.cost(2) = 5.0;
    QpRow clf;
    clf.a = Vec(3);
    clf.a << 0.0, -3.0, -1.0;
    clf.b = -4.5;
    clf.sense = Sense::le;
    QpRow cbf;
    cbf.a = Vec(3);
    cbf.a << 0.0, -6.0, 0.0;
    cbf.b = -16.875;
    cbf.sense = Sense::ge;
    prob.rows = {clf, cbf};

    const QpSolution sol = solve_active_set(prob);
    CHECK(sol.active_mask == 1);  // first row only
    CHECK(sol.z(0) == doctest::Approx(0.0));
    CHECK(sol.z(1) == doctest::Approx(4.5 / 9.2 * 3.0).epsilon(1e-12));
    // lambda1 = p * w
    CHECK(sol.lambda(0) == doctest::Approx(5.0 * sol.z(2)).epsilon(1e-12));

    const KktResiduals res = kkt_residuals(prob, sol);
    CHECK(res.stationarity <= 1e-9);
    CHECK(res.primal <= 1e-9);
    CHECK(res.dual <= 1e-10);
    CHECK(res.complementarity <= 1e-8);
}

TEST_CASE("kkt_residuals flags perturbations") {
    QpProblem prob;
    prob.cost = Vec::Ones(2);
    QpRow r;
    r.a = Vec(2);
    r.a << 1.0, 1.0;
    r.b = -1.0;
    r.sense = Sense::ge;
    prob.rows = {r};
    QpSolution sol = solve_active_set(prob);
    CHECK(kkt_residuals(prob, sol).stationarity <= 1e-9);

    QpSolution bumped = sol;
    bumped.z(0) += 1e-3;
    CHECK(kkt_residuals(prob, bumped).stationarity >= 1e-4);

    QpSolution flipped = sol;
    flipped.lambda(0) = -flipped.lambda(0);
    const KktResiduals res = kkt_residuals(prob, flipped);
    CHECK(res.dual == doctest::Approx(std::abs(sol.lambda(0))));
}

TEST_CASE("matches projected-gradient dual oracle on random problems") {
    auto g = test::rng(424242);
    for (int it = 0; it < 1000; ++it) {
        const QpProblem prob = random_feasible_problem(g);
        const QpSolution sol = solve_active_set(prob);
        const DualPgdResult oracle = dual_pgd(prob);
        CHECK(std::abs(sol.objective - oracle.objective) <= 1e-6 * (1.0 + sol.objective));
        CHECK((sol.z - oracle.z).lpNorm<Eigen::Infinity>() <= 1e-4);

        const double lmax = sol.lambda.size() ? sol.lambda.cwiseAbs().maxCoeff() : 0.0;
        const KktResiduals res = kkt_residuals(prob, sol);
        CHECK(res.stationarity <= 1e-9 * (1.0 + lmax));
        CHECK(res.primal <= 1e-9);
        CHECK(res.dual <= 1e-10);
        CHECK(res.complementarity <= 1e-8 * (1.0 + lmax));
    }
}

TEST_CASE("row scaling leaves the argmin unchanged") {
    auto g = test::rng(5150);
    for (int it = 0; it < 300; ++it) {
        QpProblem prob = random_feasible_problem(g);
        const QpSolution base = solve_active_set(prob);
        QpProblem scaled = prob;
        for (auto& r : scaled.rows) {
            const double s = uniform(g, 0.05, 40.0);
            r.a *= s;
            r.b *= s;
        }
        const QpSolution after = solve_active_set(scaled);
        CHECK((base.z - after.z).lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + base.z.norm()));
    }
}

TEST_CASE("dropping a row never increases the objective") {
    auto g = test::rng(9099);
    for (int it = 0; it < 300; ++it) {
        QpProblem prob = random_feasible_problem(g);
        if (prob.rows.empty()) continue;
        const QpSolution full = solve_active_set(prob);
        QpProblem reduced = prob;
        reduced.rows.erase(reduced.rows.begin() + static_cast<long>(g() % prob.rows.size()));
        const QpSolution less = solve_active_set(reduced);
        CHECK(less.objective <= full.objective + 1e-10 * (1.0 + full.objective));
    }
}

TEST_CASE("infeasible and degenerate problems are reported") {
    QpProblem prob;
    prob.cost = Vec::Ones(2);
    QpRow zero_row;  // 0' z >= 1 cannot hold
    zero_row.a = Vec::Zero(2);
    zero_row.b = 1.0;
    zero_row.sense = Sense::ge;
    prob.rows = {zero_row};
    CHECK_THROWS_AS(solve_active_set(prob), QpInfeasibleError);

    QpProblem contradictory;
    contradictory.cost = Vec::Ones(2);
    QpRow r1;
    r1.a = Vec(2);
    r1.a << 1.0, 0.0;
    r1.b = 0.0;
    r1.sense = Sense::le;
    QpRow r2 = r1;
    r2.b = 1.0;
    r2.sense = Sense::ge;  // parallel, incompatible
    contradictory.rows = {r1, r2};
    CHECK_THROWS_AS(solve_active_set(contradictory), QpDegenerateError);
}
