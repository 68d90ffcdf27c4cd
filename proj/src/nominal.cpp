#include "cbfqp/nominal.hpp"

#include <cmath>

namespace cbfqp {

const char* to_string(NominalCase c) {
    switch (c) {
        case NominalCase::none_active: return "none_active";
        case NominalCase::clf_only: return "clf_only";
        case NominalCase::cbf_only: return "cbf_only";
        case NominalCase::both_active: return "both_active";
    }
    return "?";
}

NominalData nominal_data(const ControlAffineSystem& sys, const Clf& clf,
                         const Cbf& cbf, const Vec& x) {
    NominalData d;
    const Vec fx = sys.f(x);
    const Mat gx = sys.g(x);
    d.V = clf.value(x);
    d.gradV = clf.grad(x);
    d.LfV = d.gradV.dot(fx);
    d.LgV = d.gradV.transpose() * gx;
    d.h = cbf.value(x);
    d.gradh = cbf.grad(x);
    d.Lfh = d.gradh.dot(fx);
    d.Lgh = d.gradh.transpose() * gx;
    return d;
}

QpProblem assemble_nominal(const ControlAffineSystem& sys, const Clf& clf,
                           const Cbf& cbf, const NominalGains& gains, const Vec& x) {
    if (!x.allFinite()) throw Error("assemble_nominal: non-finite state");
    const NominalData d = nominal_data(sys, clf, cbf, x);
    const int m = sys.m;

    QpProblem prob;
    prob.cost = Vec::Ones(m + 1);
    prob.cost(m) = gains.p;

    // LfV + LgV u + gamma(V) <= w
    QpRow clf_row;
    clf_row.a = Vec::Zero(m + 1);
    clf_row.a.head(m) = d.LgV.transpose();
    clf_row.a(m) = -1.0;
    clf_row.b = -(d.LfV + gains.gamma(d.V));
    clf_row.sense = Sense::le;

    // Lfh + Lgh u + alpha(h) >= 0
    QpRow cbf_row;
    cbf_row.a = Vec::Zero(m + 1);
    cbf_row.a.head(m) = d.Lgh.transpose();
    cbf_row.b = -(d.Lfh + gains.alpha(d.h));
    cbf_row.sense = Sense::ge;

    prob.rows = {clf_row, cbf_row};
    return prob;
}

ControlOutput solve_nominal(const ControlAffineSystem& sys, const Clf& clf,
                            const Cbf& cbf, const NominalGains& gains, const Vec& x) {
    const QpProblem prob = assemble_nominal(sys, clf, cbf, gains, x);
    QpSolution sol = solve_active_set(prob);

    ControlOutput out;
    out.u = sol.z.head(sys.m);
    out.w = sol.z(sys.m);
    out.lambda1 = sol.lambda(0);
    out.lambda2 = sol.lambda(1);
    switch (sol.active_mask & 3u) {
        case 0: out.case_label = NominalCase::none_active; break;
        case 1: out.case_label = NominalCase::clf_only; break;
        case 2: out.case_label = NominalCase::cbf_only; break;
        default: out.case_label = NominalCase::both_active; break;
    }
    out.qp = std::move(sol);
    return out;
}

Vec closed_form_case2(const ControlAffineSystem& sys, const Clf& clf,
                      const NominalGains& gains, const Vec& x) {
    const Vec gradV = clf.grad(x);
    const Mat gx = sys.g(x);
    const Eigen::RowVectorXd LgV = gradV.transpose() * gx;
    const double LfV = gradV.dot(sys.f(x));
    const double num = LfV + gains.gamma(clf.value(x));
    const double den = 1.0 / gains.p + LgV.squaredNorm();
    return -(num / den) * LgV.transpose();
}

Vec closed_form_case3(const ControlAffineSystem& sys, const Cbf& cbf,
                      const NominalGains& gains, const Vec& x) {
    const Vec gradh = cbf.grad(x);
    const Mat gx = sys.g(x);
    const Eigen::RowVectorXd Lgh = gradh.transpose() * gx;
    const double n2 = Lgh.squaredNorm();
    if (n2 < 1e-300) throw Error("closed_form_case3: Lgh is zero");
    const double num = gradh.dot(sys.f(x)) + gains.alpha(cbf.value(x));
    return -(num / n2) * Lgh.transpose();
}

Case4Solution closed_form_case4(const ControlAffineSystem& sys, const Clf& clf,
                                const Cbf& cbf, const NominalGains& gains, const Vec& x) {
    const NominalData d = nominal_data(sys, clf, cbf, x);
    const double s = d.LfV + gains.gamma(d.V);
    const double b = d.Lfh + gains.alpha(d.h);
    const double mm = d.LgV.dot(d.Lgh);
    const double nv = 1.0 / gains.p + d.LgV.squaredNorm();
    const double nh = d.Lgh.squaredNorm();

    Case4Solution out;
    out.delta = mm * mm - nv * nh;
    if (out.delta > -1e-12) {
        // Determinant vanishes only when Lgh = 0; the safety row then fixes
        // nothing about u and the stabilization-only formula applies.
        out.u = closed_form_case2(sys, clf, gains, x);
        out.lambda1 = s / nv;
        out.lambda2 = 0.0;
        return out;
    }
    out.lambda1 = (b * mm - s * nh) / out.delta;
    out.lambda2 = (b * nv - s * mm) / out.delta;
    out.u = -out.lambda1 * d.LgV.transpose() + out.lambda2 * d.Lgh.transpose();
    return out;
}

NominalCase classify_region(const ControlAffineSystem& sys, const Clf& clf,
                            const Cbf& cbf, const NominalGains& gains, const Vec& x) {
    const NominalData d = nominal_data(sys, clf, cbf, x);
    const double s = d.LfV + gains.gamma(d.V);   // stabilization-row pressure
    const double b = d.Lfh + gains.alpha(d.h);   // safety-row slack at u = 0
    const double mm = d.LgV.dot(d.Lgh);
    const double nv = 1.0 / gains.p + d.LgV.squaredNorm();
    const double nh = d.Lgh.squaredNorm();

    if (nh < 1e-300) {
        // Safety row cannot act on u; activation is decided by s alone.
        return s > 0.0 ? NominalCase::clf_only : NominalCase::none_active;
    }

    // Both rows active iff both multipliers of the 2x2 KKT system are
    // nonnegative. With determinant delta = mm^2 - nv*nh < 0, the sign
    // conditions clear to: lambda1 >= 0 <=> b*mm <= s*nh, and
    // lambda2 >= 0 <=> b*nv <= s*mm. No division by s is needed.
    if (b * mm <= s * nh && b * nv <= s * mm) return NominalCase::both_active;

    // Safety row alone: its multiplier -b/nh >= 0 and the stabilization row
    // holds strictly at the case-3 control: s*nh < b*mm.
    if (b <= 0.0 && b * mm > s * nh) return NominalCase::cbf_only;

    // Stabilization row alone: multiplier s/nv >= 0 and positive safety slack
    // at the case-2 control: b*nv > s*mm.
    if (s >= 0.0 && s * mm < b * nv) return NominalCase::clf_only;

    return NominalCase::none_active;
}

}  // namespace cbfqp
