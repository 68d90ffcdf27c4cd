#include "cbfqp/qp.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace cbfqp {

namespace {

constexpr double kDualTol = 1e-10;    // smallest multiplier accepted as nonnegative
constexpr double kPivotTol = 1e-12;   // relative pivot threshold for KKT systems
constexpr double kPrimalTol = 1e-9;   // slack tolerance on inactive rows

struct NormRow {
    Vec a;        // <=-normalized, scaled so max|a_i| == 1 (unless zero row)
    double b;
    double scale; // multiplier back-conversion: lambda_orig = mu / scale
    bool zero;    // all coefficients below 1e-300
};

void validate(const QpProblem& prob) {
    if (prob.cost.size() == 0) throw Error("QpProblem: empty cost");
    for (Eigen::Index i = 0; i < prob.cost.size(); ++i) {
        if (!(prob.cost(i) > 0.0)) throw Error("QpProblem: cost weights must be positive");
    }
    if (prob.rows.size() > 3) throw Error("QpProblem: at most 3 rows supported");
    for (const auto& r : prob.rows) {
        if (r.a.size() != prob.cost.size()) throw Error("QpProblem: row dimension mismatch");
        if (!r.a.allFinite() || !std::isfinite(r.b)) throw Error("QpProblem: non-finite row");
    }
}

}  // namespace

QpSolution solve_active_set(const QpProblem& prob) {
    validate(prob);
    const int dim = static_cast<int>(prob.cost.size());
    const int nrows = static_cast<int>(prob.rows.size());

    std::vector<NormRow> rows(nrows);
    for (int i = 0; i < nrows; ++i) {
        const QpRow& r = prob.rows[i];
        NormRow nr;
        nr.a = (r.sense == Sense::le) ? r.a : Vec(-r.a);
        nr.b = (r.sense == Sense::le) ? r.b : -r.b;
        const double amax = nr.a.cwiseAbs().maxCoeff();
        nr.zero = amax < 1e-300;
        nr.scale = nr.zero ? 1.0 : 1.0 / amax;
        nr.a *= nr.scale;
        nr.b *= nr.scale;
        rows[i] = nr;
    }

    // A zero row is either vacuous (0 <= b) or renders the problem infeasible.
    unsigned selectable = 0;
    for (int i = 0; i < nrows; ++i) {
        if (rows[i].zero) {
            if (rows[i].b < -kPrimalTol) {
                throw QpInfeasibleError("QP infeasible: zero row with negative bound");
            }
        } else {
            selectable |= 1u << i;
        }
    }

    const Vec inv_cost = prob.cost.cwiseInverse();

    bool saw_singular = false;
    bool found = false;
    QpSolution best;
    double best_obj = std::numeric_limits<double>::infinity();
    int best_card = dim + 1;
    unsigned best_mask = 0;

    for (unsigned mask = 0; mask < (1u << nrows); ++mask) {
        if ((mask & ~selectable) != 0) continue;
        const int card = std::popcount(mask);

        Vec z = Vec::Zero(dim);
        Vec mu = Vec::Zero(nrows);
        if (card > 0) {
            Mat as(card, dim);
            Vec bs(card);
            int k = 0;
            std::vector<int> idx;
            for (int i = 0; i < nrows; ++i) {
                if (mask & (1u << i)) {
                    as.row(k) = rows[i].a.transpose();
                    bs(k) = rows[i].b;
                    idx.push_back(i);
                    ++k;
                }
            }
            // z = -C^{-1} A^T mu with A z = b  =>  (A C^{-1} A^T) mu = -b.
            const Mat m = as * inv_cost.asDiagonal() * as.transpose();
            Eigen::FullPivLU<Mat> lu(m);
            lu.setThreshold(kPivotTol);
            if (lu.rank() < card) {
                saw_singular = true;
                continue;
            }
            const Vec mus = lu.solve(-bs);
            for (int j = 0; j < card; ++j) mu(idx[j]) = mus(j);
            z = -(inv_cost.asDiagonal() * (as.transpose() * mus));
        }

        bool ok = true;
        for (int i = 0; i < nrows && ok; ++i) {
            if (mask & (1u << i)) {
                if (mu(i) < -kDualTol) ok = false;
            } else if (!rows[i].zero) {
                const double slack = rows[i].b - rows[i].a.dot(z);
                if (slack < -kPrimalTol) ok = false;
            }
        }
        if (!ok) continue;

        const double obj = 0.5 * z.dot(prob.cost.asDiagonal() * z);
        const double tie = 1e-12 * (1.0 + std::abs(best_obj));
        const bool better =
            !found || obj < best_obj - tie ||
            (obj <= best_obj + tie &&
             (card < best_card || (card == best_card && mask < best_mask)));
        if (better) {
            found = true;
            best_obj = obj;
            best_card = card;
            best_mask = mask;
            best.z = z;
            best.lambda = Vec::Zero(nrows);
            for (int i = 0; i < nrows; ++i) best.lambda(i) = mu(i) * rows[i].scale;
            best.active_mask = mask;
            best.objective = obj;
        }
    }

    if (!found) {
        if (saw_singular) throw QpDegenerateError("QP degenerate: all certifying KKT systems singular");
        throw QpInfeasibleError("QP infeasible: no active-set candidate is primal feasible");
    }
    return best;
}

KktResiduals kkt_residuals(const QpProblem& prob, const QpSolution& sol) {
    const int nrows = static_cast<int>(prob.rows.size());
    KktResiduals res;

    Vec stat = prob.cost.asDiagonal() * sol.z;
    for (int i = 0; i < nrows; ++i) {
        const QpRow& r = prob.rows[i];
        const Vec a = (r.sense == Sense::le) ? r.a : Vec(-r.a);
        stat += sol.lambda(i) * a;
    }
    res.stationarity = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;

    for (int i = 0; i < nrows; ++i) {
        const QpRow& r = prob.rows[i];
        const double lhs = r.a.dot(sol.z);
        const double viol = (r.sense == Sense::le) ? lhs - r.b : r.b - lhs;
        res.primal = std::max(res.primal, viol);
        res.dual = std::max(res.dual, -sol.lambda(i));
        const double slack = (r.sense == Sense::le) ? r.b - lhs : lhs - r.b;
        res.complementarity = std::max(res.complementarity, std::abs(sol.lambda(i) * slack));
    }
    res.primal = std::max(res.primal, 0.0);
    res.dual = std::max(res.dual, 0.0);
    return res;
}

}  // namespace cbfqp
