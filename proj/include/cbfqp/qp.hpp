#pragma once

#include <vector>

#include "cbfqp/linalg.hpp"

namespace cbfqp {

enum class Sense { le, ge };

// Affine inequality a^T z <= b (or >= b).
struct QpRow {
    Vec a;
    double b = 0.0;
    Sense sense = Sense::le;
};

// minimize 1/2 z^T diag(cost) z subject to at most three affine rows.
// cost entries must be strictly positive (the problem is strictly convex).
struct QpProblem {
    Vec cost;
    std::vector<QpRow> rows;
};

// Certified solution. lambda(i) is the multiplier of rows[i] with the
// convention diag(cost) z + sum_i lambda_i a~_i = 0, where a~_i is the row
// normalized to <= form. active_mask bit i marks rows treated as equalities.
struct QpSolution {
    Vec z;
    Vec lambda;
    unsigned active_mask = 0;
    double objective = 0.0;
};

// Enumerates all subsets of rows as candidate active sets, solves each
// equality-constrained KKT system, and returns the feasible candidate of
// minimum objective (ties: fewer active rows, then lexicographic mask).
// Throws QpInfeasibleError / QpDegenerateError when no candidate certifies.
QpSolution solve_active_set(const QpProblem& prob);

struct KktResiduals {
    double stationarity = 0.0;
    double primal = 0.0;
    double dual = 0.0;
    double complementarity = 0.0;
};

KktResiduals kkt_residuals(const QpProblem& prob, const QpSolution& sol);

}  // namespace cbfqp
