#pragma once

#include "cbfqp/models.hpp"
#include "cbfqp/qp.hpp"

namespace cbfqp {

struct ShapedGains {
    double p = 5.0;  // relaxation weight
    double q = 5.0;  // rotation-rate weight
    ClassKappa gamma{1.0};
    ClassKappa alpha{1.0};
    ClassKappa beta{1.0};
    double epsilon = 0.1;      // collinearity floor
    double sigma_scale = 1.0;  // activation range of the boundary weight
};

struct ShapedState {
    Vec x;
    RotationQ Q;
};

// V(x,Q) = V_r(Q x) and the pieces of its affine time derivative:
//   Vdot = grad_x' (f + g u) + omega_row * omega.
struct RotatedClf {
    double value = 0.0;
    Vec grad_x;                    // Q^T grad V_r(Qx)
    Mat hess_x;                    // Q^T H_r(Qx) Q
    Eigen::RowVectorXd omega_row;  // grad V_r(Qx)^T Q O_n(x)
};

RotatedClf rotated_clf(const Clf& vr, const ShapedState& s);

// D(x,Q) = 1/2 v' (P_f + P_{G grad h}) v with v = G grad V(x,Q).
// Zero exactly on the pairwise-collinearity set, positive elsewhere.
double collinearity_measure(const ControlAffineSystem& sys, const Clf& vr,
                            const Cbf& cbf, const ShapedState& s);

struct SigmaValue {
    double value = 0.0;
    double deriv = 0.0;
};

// sigma(h) = exp(-h / ell): positive at 0, decays at infinity, smooth on R.
SigmaValue sigma(double h_val, double ell);

// h_D(x,Q) = sigma(h) (D - epsilon).
double hd_value(const ControlAffineSystem& sys, const Clf& vr, const Cbf& cbf,
                const ShapedState& s, const ShapedGains& gains);

// Gamma_{g,v} = sum_i (g_i' v I + g_i v') dg_i/dx; zero for constant g.
Mat gamma_matrix(const ControlAffineSystem& sys, const Vec& v, const Vec& x);

struct GradD {
    Vec grad_x;  // d D / d x
    Vec grad_q;  // directional derivatives along Q exp(t skew(e_k))
};

GradD grad_D(const ControlAffineSystem& sys, const Clf& vr, const Cbf& cbf,
             const ShapedState& s);

// Decision vector z = (u, omega, w); rows: stabilization (soft), safety
// (hard), collinearity barrier (hard). Multiplier indices follow this order.
QpProblem assemble_shaped(const ControlAffineSystem& sys, const Clf& vr,
                          const Cbf& cbf, const ShapedGains& gains,
                          const ShapedState& s);

struct ShapedControlOutput {
    Vec u;
    Vec omega;
    double w = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    unsigned active_mask = 0;  // bit 0: stabilization, 1: safety, 2: barrier
    QpSolution qp;
};

ShapedControlOutput solve_shaped(const ControlAffineSystem& sys, const Clf& vr,
                                 const Cbf& cbf, const ShapedGains& gains,
                                 const ShapedState& s);

// "clf", "clf+cbf", "clf+hd", ... for the CSV case column.
std::string shaped_case_label(unsigned mask);

}  // namespace cbfqp
