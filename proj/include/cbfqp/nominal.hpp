#pragma once

#include "cbfqp/models.hpp"
#include "cbfqp/qp.hpp"

namespace cbfqp {

struct NominalGains {
    double p = 5.0;  // relaxation weight
    ClassKappa gamma{1.0};
    ClassKappa alpha{1.0};
};

enum class NominalCase { none_active, clf_only, cbf_only, both_active };

const char* to_string(NominalCase c);

// Shared Lie-derivative data of one state.
struct NominalData {
    double V = 0.0;
    Vec gradV;
    double LfV = 0.0;
    Eigen::RowVectorXd LgV;
    double h = 0.0;
    Vec gradh;
    double Lfh = 0.0;
    Eigen::RowVectorXd Lgh;
};

NominalData nominal_data(const ControlAffineSystem& sys, const Clf& clf,
                         const Cbf& cbf, const Vec& x);

struct ControlOutput {
    Vec u;
    double w = 0.0;
    NominalCase case_label = NominalCase::none_active;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    QpSolution qp;
};

// Decision vector z = (u, w). Row 0: stabilization row with -w coefficient
// (soft); row 1: safety row (hard).
QpProblem assemble_nominal(const ControlAffineSystem& sys, const Clf& clf,
                           const Cbf& cbf, const NominalGains& gains, const Vec& x);

ControlOutput solve_nominal(const ControlAffineSystem& sys, const Clf& clf,
                            const Cbf& cbf, const NominalGains& gains, const Vec& x);

// Stabilization row active alone: u = -(LfV + gamma(V)) / (1/p + |LgV|^2) LgV^T.
Vec closed_form_case2(const ControlAffineSystem& sys, const Clf& clf,
                      const NominalGains& gains, const Vec& x);

// Safety row active alone: u = -|Lgh|^{-2} (Lfh + alpha(h)) Lgh^T.
// Throws Error when Lgh = 0.
Vec closed_form_case3(const ControlAffineSystem& sys, const Cbf& cbf,
                      const NominalGains& gains, const Vec& x);

struct Case4Solution {
    Vec u;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double delta = 0.0;  // determinant of the 2x2 multiplier system
};

// Both rows active: multipliers from the 2x2 system, u = -l1 LgV^T + l2 Lgh^T.
// Falls back to the case-2 formula when delta is numerically zero (Lgh = 0).
Case4Solution closed_form_case4(const ControlAffineSystem& sys, const Clf& clf,
                                const Cbf& cbf, const NominalGains& gains, const Vec& x);

// Activation-region label from the multiplied-out sign conditions; agrees with
// the active set of solve_nominal away from measure-zero region borders.
NominalCase classify_region(const ControlAffineSystem& sys, const Clf& clf,
                            const Cbf& cbf, const NominalGains& gains, const Vec& x);

}  // namespace cbfqp
