#include "cbfqp/shaped.hpp"

#include <cmath>

namespace cbfqp {

RotatedClf rotated_clf(const Clf& vr, const ShapedState& s) {
    const Mat& q = s.Q.matrix();
    const Vec qx = q * s.x;
    RotatedClf out;
    out.value = vr.value(qx);
    const Vec gr = vr.grad(qx);
    out.grad_x = q.transpose() * gr;
    out.hess_x = q.transpose() * vr.hess(qx) * q;
    out.omega_row = gr.transpose() * q * o_n(s.x);
    return out;
}

double collinearity_measure(const ControlAffineSystem& sys, const Clf& vr,
                            const Cbf& cbf, const ShapedState& s) {
    const RotatedClf rc = rotated_clf(vr, s);
    const Mat G = sys.G(s.x);
    const Vec v = G * rc.grad_x;
    const Vec fx = sys.f(s.x);
    const Vec gh = G * cbf.grad(s.x);
    const Mat proj = scaled_projection(fx) + scaled_projection(gh);
    return 0.5 * v.dot(proj * v);
}

SigmaValue sigma(double h_val, double ell) {
    SigmaValue sv;
    sv.value = std::exp(-h_val / ell);
    sv.deriv = -sv.value / ell;
    return sv;
}

double hd_value(const ControlAffineSystem& sys, const Clf& vr, const Cbf& cbf,
                const ShapedState& s, const ShapedGains& gains) {
    const double d = collinearity_measure(sys, vr, cbf, s);
    return sigma(cbf.value(s.x), gains.sigma_scale).value * (d - gains.epsilon);
}

Mat gamma_matrix(const ControlAffineSystem& sys, const Vec& v, const Vec& x) {
    const int n = sys.n;
    Mat out = Mat::Zero(n, n);
    if (sys.constant_g) return out;
    const Mat gx = sys.g(x);
    const std::vector<Mat> dg = sys.jac_g_cols(x);
    for (int i = 0; i < sys.m; ++i) {
        const Vec gi = gx.col(i);
        out += (gi.dot(v) * Mat::Identity(n, n) + gi * v.transpose()) * dg[i];
    }
    return out;
}

GradD grad_D(const ControlAffineSystem& sys, const Clf& vr, const Cbf& cbf,
             const ShapedState& s) {
    const RotatedClf rc = rotated_clf(vr, s);
    const Mat G = sys.G(s.x);
    const Vec gradh = cbf.grad(s.x);
    const Mat hh = cbf.hess(s.x);
    const Vec fx = sys.f(s.x);
    const Vec gv = G * rc.grad_x;
    const Vec gh = G * gradh;

    const Mat pf = scaled_projection(fx);
    const Mat pgh = scaled_projection(gh);
    const Mat pgv = scaled_projection(gv);

    GradD out;
    // d/dx of (G grad V) is G H_V + Gamma_{g, grad V}; same shape for grad h.
    out.grad_x = (rc.hess_x * G + gamma_matrix(sys, rc.grad_x, s.x).transpose()) *
                     ((pf + pgh) * gv) +
                 (hh * G + gamma_matrix(sys, gradh, s.x).transpose()) * (pgv * gh);
    if (!sys.driftless) {
        out.grad_x += sys.jac_f(s.x).transpose() * (pgv * fx);
    }

    // Q enters only through grad V(x,Q); its derivative along Q exp(t w^) is
    // (H_V O_n(x) - O_n(grad V)) w.
    const Mat dq = rc.hess_x * o_n(s.x) - o_n(rc.grad_x);
    out.grad_q = dq.transpose() * (G * ((pf + pgh) * gv));
    return out;
}

QpProblem assemble_shaped(const ControlAffineSystem& sys, const Clf& vr,
                          const Cbf& cbf, const ShapedGains& gains,
                          const ShapedState& s) {
    if (const auto* ql = dynamic_cast<const QuadraticClf*>(&vr)) {
        if (!ql->non_radial()) {
            throw ConfigError("assemble_shaped: reference CLF is radial; rotation has no effect");
        }
    }
    const int m = sys.m;
    const int k = omega_dim(sys.n);
    const int dim = m + k + 1;

    const RotatedClf rc = rotated_clf(vr, s);
    const Mat gx = sys.g(s.x);
    const Vec fx = sys.f(s.x);
    const Vec gradh = cbf.grad(s.x);
    const double h = cbf.value(s.x);
    const Eigen::RowVectorXd Lgh = gradh.transpose() * gx;
    const double Lfh = gradh.dot(fx);

    const double d = collinearity_measure(sys, vr, cbf, s);
    const SigmaValue sg = sigma(h, gains.sigma_scale);
    const double hd = sg.value * (d - gains.epsilon);
    const GradD gd = grad_D(sys, vr, cbf, s);

    QpProblem prob;
    prob.cost = Vec::Ones(dim);
    prob.cost.segment(m, k).setConstant(gains.q);
    prob.cost(dim - 1) = gains.p;

    // Vdot + gamma(V) <= w
    QpRow clf_row;
    clf_row.a = Vec::Zero(dim);
    clf_row.a.head(m) = (rc.grad_x.transpose() * gx).transpose();
    clf_row.a.segment(m, k) = rc.omega_row.transpose();
    clf_row.a(dim - 1) = -1.0;
    clf_row.b = -(rc.grad_x.dot(fx) + gains.gamma(rc.value));
    clf_row.sense = Sense::le;

    // hdot + alpha(h) >= 0; no omega dependence.
    QpRow cbf_row;
    cbf_row.a = Vec::Zero(dim);
    cbf_row.a.head(m) = Lgh.transpose();
    cbf_row.b = -(Lfh + gains.alpha(h));
    cbf_row.sense = Sense::ge;

    // hd_dot + beta(h_D) >= 0 with
    // hd_dot = sigma'(h) hdot (D - eps) + sigma(h) (gradD_x' xdot + gradD_q' omega).
    QpRow hd_row;
    hd_row.a = Vec::Zero(dim);
    hd_row.a.head(m) =
        sg.deriv * (d - gains.epsilon) * Lgh.transpose() +
        sg.value * (gx.transpose() * gd.grad_x);
    hd_row.a.segment(m, k) = sg.value * gd.grad_q;
    hd_row.b = -(sg.deriv * (d - gains.epsilon) * Lfh + sg.value * gd.grad_x.dot(fx) +
                 gains.beta(hd));
    hd_row.sense = Sense::ge;

    prob.rows = {clf_row, cbf_row, hd_row};
    return prob;
}

ShapedControlOutput solve_shaped(const ControlAffineSystem& sys, const Clf& vr,
                                 const Cbf& cbf, const ShapedGains& gains,
                                 const ShapedState& s) {
    const QpProblem prob = assemble_shaped(sys, vr, cbf, gains, s);
    QpSolution sol = solve_active_set(prob);

    const int m = sys.m;
    const int k = omega_dim(sys.n);
    ShapedControlOutput out;
    out.u = sol.z.head(m);
    out.omega = sol.z.segment(m, k);
    out.w = sol.z(m + k);
    out.lambda1 = sol.lambda(0);
    out.lambda2 = sol.lambda(1);
    out.lambda3 = sol.lambda(2);
    out.active_mask = sol.active_mask;
    out.qp = std::move(sol);
    return out;
}

std::string shaped_case_label(unsigned mask) {
    if (mask == 0) return "none_active";
    std::string s;
    const char* names[3] = {"clf", "cbf", "hd"};
    for (int i = 0; i < 3; ++i) {
        if (mask & (1u << i)) {
            if (!s.empty()) s += '+';
            s += names[i];
        }
    }
    return s;
}

}  // namespace cbfqp
