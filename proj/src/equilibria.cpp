#include "cbfqp/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cbfqp/shaped.hpp"

namespace cbfqp {

namespace {

double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

Stability verdict_from_eigs(const std::vector<std::complex<double>>& eigs, double tol) {
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& e : eigs) max_re = std::max(max_re, e.real());
    if (max_re < -tol) return Stability::asymptotically_stable;
    if (max_re > tol) return Stability::unstable;
    return Stability::marginal;
}

std::vector<std::complex<double>> eig_list(const Mat& m) {
    Eigen::EigenSolver<Mat> es(m);
    std::vector<std::complex<double>> out(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = es.eigenvalues()(i);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return out;
}

}  // namespace

const char* to_string(EqKind k) {
    switch (k) {
        case EqKind::origin: return "origin";
        case EqKind::interior: return "interior";
        case EqKind::boundary: return "boundary";
    }
    return "?";
}

const char* to_string(Stability s) {
    switch (s) {
        case Stability::asymptotically_stable: return "asymptotically_stable";
        case Stability::unstable: return "unstable";
        case Stability::marginal: return "marginal";
    }
    return "?";
}

TangentTestResult stability_tangent_test(const Clf& clf, const Cbf& cbf,
                                         const Vec& x_star, double c,
                                         const NominalGains& gains) {
    if (std::abs(cbf.value(x_star)) > 1e-9) {
        throw NotBoundaryPointError("stability_tangent_test: point is not on the boundary");
    }
    const int n = static_cast<int>(x_star.size());
    const Vec gradh = cbf.grad(x_star);
    const double gn = gradh.norm();
    if (gn < 1e-300) throw Error("stability_tangent_test: gradh vanishes");

    // Orthonormal tangent basis (columns orthogonal to gradh).
    Mat t(n, n - 1);
    if (n == 2) {
        t(0, 0) = -gradh(1) / gn;
        t(1, 0) = gradh(0) / gn;
    } else {
        Eigen::FullPivHouseholderQR<Mat> qr(gradh);
        const Mat basis = qr.matrixQ();
        t = basis.rightCols(n - 1);
    }

    const Mat m = clf.hess(x_star) - c * cbf.hess(x_star);
    TangentTestResult out;
    out.tangent_form = t.transpose() * m * t;
    Eigen::SelfAdjointEigenSolver<Mat> tf(out.tangent_form);
    out.tangent_value = tf.eigenvalues().minCoeff();
    Eigen::SelfAdjointEigenSolver<Mat> fm(m);
    out.full_min_eig = fm.eigenvalues().minCoeff();
    out.normal_eigenvalue = -gains.alpha.slope();

    if (out.tangent_value > 1e-10) out.verdict = Stability::asymptotically_stable;
    else if (out.tangent_value < -1e-10) out.verdict = Stability::unstable;
    else out.verdict = Stability::marginal;
    return out;
}

ClosedLoopFn nominal_closed_loop(const ControlAffineSystem& sys, const Clf& clf,
                                 const Cbf& cbf, const NominalGains& gains) {
    return [&sys, &clf, &cbf, gains](const Vec& x) {
        const ControlOutput out = solve_nominal(sys, clf, cbf, gains, x);
        return ClosedLoopProbe{Vec(sys.f(x) + sys.g(x) * out.u),
                               static_cast<int>(out.case_label)};
    };
}

NumericJacobian numeric_closed_loop_jacobian(const ClosedLoopFn& fcl, const Vec& x,
                                             double step) {
    const int n = static_cast<int>(x.size());
    const ClosedLoopProbe center = fcl(x);

    NumericJacobian out;
    out.j = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        Vec xp = x, xm = x;
        xp(j) += step;
        xm(j) -= step;
        const ClosedLoopProbe fp = fcl(xp);
        const ClosedLoopProbe fm = fcl(xm);
        if (fp.label == center.label && fm.label == center.label) {
            out.j.col(j) = (fp.fcl - fm.fcl) / (2.0 * step);
        } else if (fp.label == center.label) {
            out.j.col(j) = (fp.fcl - center.fcl) / step;
            out.one_sided = true;
        } else if (fm.label == center.label) {
            out.j.col(j) = (center.fcl - fm.fcl) / step;
            out.one_sided = true;
        } else {
            out.j.col(j) = (fp.fcl - fm.fcl) / (2.0 * step);
            out.one_sided = true;
        }
    }
    return out;
}

namespace {

EquilibriumReport boundary_report(const ControlAffineSystem& sys, const Clf& clf,
                                  const Cbf& cbf, const NominalGains& gains,
                                  const Vec& x_star, double theta) {
    EquilibriumReport rep;
    rep.x = x_star;
    rep.kind = EqKind::boundary;
    rep.theta = theta;

    const Vec gradV = clf.grad(x_star);
    const Vec gradh = cbf.grad(x_star);
    rep.c = gradV.dot(gradh) / gradh.squaredNorm();

    const TangentTestResult tt = stability_tangent_test(clf, cbf, x_star, rep.c, gains);
    rep.tangent_form_value = tt.tangent_value;
    rep.full_form_min_eig = tt.full_min_eig;

    const ClosedLoopFn fcl = nominal_closed_loop(sys, clf, cbf, gains);
    const NumericJacobian nj = numeric_closed_loop_jacobian(fcl, x_star);
    rep.jacobian = nj.j;
    rep.jacobian_one_sided = nj.one_sided;
    rep.eigenvalues = eig_list(nj.j);
    rep.closed_loop_residual = fcl(x_star).fcl.norm();

    // The curvature test presumes exact gradient collinearity; it decides
    // when that holds, the numeric spectrum decides otherwise (drifting f).
    const bool collinear_exact =
        (gradV - rep.c * gradh).norm() <= 1e-8 * std::max(1.0, gradV.norm());
    rep.verdict = collinear_exact ? tt.verdict : verdict_from_eigs(rep.eigenvalues, 1e-9);
    return rep;
}

}  // namespace

BoundaryScan find_boundary_equilibria(const ControlAffineSystem& sys, const Clf& clf,
                                      const Cbf& cbf, const NominalGains& gains,
                                      const BoundaryScanOptions& opts) {
    const auto circle = cbf.circle();
    if (!circle) throw UnsupportedBoundaryError("boundary search requires a circular obstacle");
    if (sys.n != 2) throw UnsupportedBoundaryError("boundary search implemented for n = 2");

    const Vec& xc = circle->center;
    const double r = circle->radius;

    const auto point_at = [&](double th) {
        Vec x(2);
        x << xc(0) + r * std::cos(th), xc(1) + r * std::sin(th);
        return x;
    };

    // Signed residual whose zeros on the both-active arc are the boundary
    // equilibria. With zero drift the closed loop is tangential with speed
    // proportional to cross(gradV, gradh); otherwise project the closed loop
    // onto the boundary tangent (the safety row pins the normal component).
    const auto residual = [&](double th) {
        const Vec x = point_at(th);
        if (sys.driftless) {
            return cross2(clf.grad(x), cbf.grad(x));
        }
        const Case4Solution c4 = closed_form_case4(sys, clf, cbf, gains, x);
        Vec t(2);
        t << -std::sin(th), std::cos(th);
        return t.dot(sys.f(x) + sys.g(x) * c4.u);
    };

    const double two_pi = 2.0 * std::numbers::pi;
    const int npts = static_cast<int>(std::ceil(two_pi / opts.theta_step));
    std::vector<double> vals(npts);
    const bool par = opts.exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < npts; ++i) {
        vals[i] = residual(i * two_pi / npts);
    }

    BoundaryScan scan;

    int near_zero = 0;
    for (const double v : vals) {
        if (std::abs(v) <= 1e-9) ++near_zero;
    }
    if (near_zero > npts / 2) {
        // Residual vanishes along (most of) the boundary: a collinear
        // continuum, e.g. a radial reference with a concentric obstacle.
        scan.degenerate_continuum = true;
        int idx = 0;
        while (idx < npts && std::abs(vals[idx]) > 1e-9) ++idx;
        const double th = idx * two_pi / npts;
        EquilibriumReport rep = boundary_report(sys, clf, cbf, gains, point_at(th), th);
        rep.verdict = Stability::marginal;
        scan.reports.push_back(std::move(rep));
        return scan;
    }

    std::vector<double> roots;
    for (int i = 0; i < npts; ++i) {
        const double a = i * two_pi / npts;
        const double b = (i + 1) * two_pi / npts;
        const double fa = vals[i];
        const double fb = (i + 1 < npts) ? vals[i + 1] : vals[0];
        if (fa == 0.0) {
            roots.push_back(a);
            continue;
        }
        if (fa * fb < 0.0) {
            double lo = a, hi = b, flo = fa;
            while (hi - lo > opts.bisect_tol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = residual(mid);
                if (fm == 0.0) { lo = hi = mid; break; }
                if (flo * fm < 0.0) hi = mid;
                else { lo = mid; flo = fm; }
            }
            roots.push_back(0.5 * (lo + hi));
        }
    }

    for (const double th : roots) {
        const Vec x = point_at(th);
        if (classify_region(sys, clf, cbf, gains, x) != NominalCase::both_active) continue;
        const Case4Solution c4 = closed_form_case4(sys, clf, cbf, gains, x);
        if (c4.lambda1 < -opts.multiplier_tol || c4.lambda2 < -opts.multiplier_tol) continue;
        bool dup = false;
        for (const auto& rep : scan.reports) {
            if ((rep.x - x).norm() < 1e-6) { dup = true; break; }
        }
        if (dup) continue;
        scan.reports.push_back(boundary_report(sys, clf, cbf, gains, x, th));
    }
    std::sort(scan.reports.begin(), scan.reports.end(),
              [](const auto& a, const auto& b) { return a.theta < b.theta; });
    return scan;
}

std::vector<EquilibriumReport> find_interior_equilibria(
    const ControlAffineSystem& sys, const Clf& clf, const Cbf& cbf,
    const NominalGains& gains, const Vec& box_lo, const Vec& box_hi,
    const InteriorScanOptions& opts) {
    const int n = sys.n;

    const auto res = [&](const Vec& x) -> Vec {
        return sys.f(x) - gains.p * gains.gamma(clf.value(x)) * (sys.G(x) * clf.grad(x));
    };
    const auto res_jac = [&](const Vec& x) -> Mat {
        const Mat G = sys.G(x);
        const Vec gv = G * clf.grad(x);
        const double gam = gains.gamma(clf.value(x));
        Mat j = -gains.p * (gains.gamma.slope() * gv * clf.grad(x).transpose() +
                            gam * (G * clf.hess(x) + gamma_matrix(sys, clf.grad(x), x)));
        if (!sys.driftless) j += sys.jac_f(x);
        return j;
    };

    const int g = opts.grid;
    const int nseeds = g * g;
    std::vector<Vec> found(nseeds);
    std::vector<char> ok(nseeds, 0);

    const bool par = opts.exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (int s = 0; s < nseeds; ++s) {
        const int i = s / g, j = s % g;
        Vec x(n);
        x(0) = box_lo(0) + (box_hi(0) - box_lo(0)) * (i + 0.5) / g;
        x(1) = box_lo(1) + (box_hi(1) - box_lo(1)) * (j + 0.5) / g;
        try {
            double rn = res(x).norm();
            for (int it = 0; it < opts.max_newton_iter; ++it) {
                if (x.norm() < 1e-9) break;  // origin is excluded anyway
                const Vec r = res(x);
                Eigen::FullPivLU<Mat> lu(res_jac(x));
                lu.setThreshold(1e-12);
                if (lu.rank() < n) break;
                const Vec step = lu.solve(-r);
                double damp = 1.0;
                bool improved = false;
                for (int bt = 0; bt < 30; ++bt) {
                    const Vec xn = x + damp * step;
                    if (xn.norm() >= 1e-9) {
                        const double rnn = res(xn).norm();
                        if (rnn < rn) {
                            x = xn;
                            rn = rnn;
                            improved = true;
                            break;
                        }
                    }
                    damp *= 0.5;
                }
                if (!improved) break;
                if (rn <= opts.newton_tol) break;
            }
            if (rn <= opts.newton_tol) {
                found[s] = x;
                ok[s] = 1;
            }
        } catch (const SingularityError&) {
            // seed wandered into the drift's non-smooth point; drop it
        }
    }

    std::vector<EquilibriumReport> reports;
    const ClosedLoopFn fcl = nominal_closed_loop(sys, clf, cbf, gains);
    for (int s = 0; s < nseeds; ++s) {
        if (!ok[s]) continue;
        const Vec& x = found[s];
        if (x.norm() <= 1e-6) continue;
        // The origin is a degenerate (cubically flat) zero of the residual;
        // Newton iterates parked on its shoulder satisfy the tolerance
        // without being roots. Keep only isolated zeros.
        {
            Eigen::JacobiSVD<Mat> svd(res_jac(x));
            if (svd.singularValues().minCoeff() < 1e-6) continue;
        }
        if (fcl(x).fcl.norm() > 1e-9) continue;
        bool inside = true;
        for (int d = 0; d < n; ++d) {
            if (x(d) < box_lo(d) - 1e-9 || x(d) > box_hi(d) + 1e-9) inside = false;
        }
        if (!inside) continue;
        if (!(cbf.value(x) > 0.0)) continue;
        if (classify_region(sys, clf, cbf, gains, x) != NominalCase::clf_only) continue;
        bool dup = false;
        for (const auto& rep : reports) {
            if ((rep.x - x).norm() < opts.dedup_tol) { dup = true; break; }
        }
        if (dup) continue;

        EquilibriumReport rep;
        rep.x = x;
        rep.kind = EqKind::interior;
        const NumericJacobian nj = numeric_closed_loop_jacobian(fcl, x);
        rep.jacobian = nj.j;
        rep.jacobian_one_sided = nj.one_sided;
        rep.eigenvalues = eig_list(nj.j);
        rep.verdict = verdict_from_eigs(rep.eigenvalues, 1e-9);
        rep.closed_loop_residual = fcl(x).fcl.norm();
        reports.push_back(std::move(rep));
    }
    std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        return a.x(0) != b.x(0) ? a.x(0) < b.x(0) : a.x(1) < b.x(1);
    });
    return reports;
}

EquilibriumReport origin_report(const ControlAffineSystem& sys, const Clf& clf,
                                const Cbf& cbf, const NominalGains& gains) {
    const int n = sys.n;
    EquilibriumReport rep;
    rep.x = Vec::Zero(n);
    rep.kind = EqKind::origin;

    const ClosedLoopFn fcl = nominal_closed_loop(sys, clf, cbf, gains);
    const NumericJacobian nj = numeric_closed_loop_jacobian(fcl, rep.x);
    rep.jacobian = nj.j;
    rep.jacobian_one_sided = nj.one_sided;
    rep.eigenvalues = eig_list(nj.j);
    rep.closed_loop_residual = fcl(rep.x).fcl.norm();

    // The Jacobian can vanish at the origin (cubically attracting feedback),
    // so classify by the sign of Vdot on a small ring instead.
    const double ring = 1e-3;
    double max_vdot = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 64; ++i) {
        const double th = 2.0 * std::numbers::pi * i / 64;
        Vec x = Vec::Zero(n);
        x(0) = ring * std::cos(th);
        x(1) = ring * std::sin(th);
        max_vdot = std::max(max_vdot, clf.grad(x).dot(fcl(x).fcl));
    }
    if (max_vdot < -1e-18) rep.verdict = Stability::asymptotically_stable;
    else if (max_vdot > 1e-18) rep.verdict = Stability::unstable;
    else rep.verdict = Stability::marginal;
    return rep;
}

EquilibriumAnalysis analyze_equilibria(const ControlAffineSystem& sys, const Clf& clf,
                                       const Cbf& cbf, const NominalGains& gains,
                                       const Vec& box_lo, const Vec& box_hi, Exec exec) {
    EquilibriumAnalysis out;
    out.origin = origin_report(sys, clf, cbf, gains);
    BoundaryScanOptions bopts;
    bopts.exec = exec;
    out.boundary = find_boundary_equilibria(sys, clf, cbf, gains, bopts);
    InteriorScanOptions iopts;
    iopts.exec = exec;
    out.interior = find_interior_equilibria(sys, clf, cbf, gains, box_lo, box_hi, iopts);
    return out;
}

}  // namespace cbfqp
