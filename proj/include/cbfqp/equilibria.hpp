#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "cbfqp/nominal.hpp"

namespace cbfqp {

enum class EqKind { origin, interior, boundary };
enum class Stability { asymptotically_stable, unstable, marginal };

const char* to_string(EqKind k);
const char* to_string(Stability s);

struct EquilibriumReport {
    Vec x;
    EqKind kind = EqKind::boundary;
    double c = std::numeric_limits<double>::quiet_NaN();
    double tangent_form_value = std::numeric_limits<double>::quiet_NaN();
    double full_form_min_eig = std::numeric_limits<double>::quiet_NaN();
    Mat jacobian;
    std::vector<std::complex<double>> eigenvalues;
    Stability verdict = Stability::marginal;
    double closed_loop_residual = std::numeric_limits<double>::quiet_NaN();
    double theta = std::numeric_limits<double>::quiet_NaN();  // boundary angle
    bool jacobian_one_sided = false;
};

// Tangent-restricted curvature test at a boundary equilibrium: the normal
// direction always carries the eigenvalue -alpha'(0); the remaining spectrum
// has the sign of T' (H_V - c H_h) T restricted to the tangent space of the
// boundary. Throws NotBoundaryPointError when |h(x*)| > 1e-9.
struct TangentTestResult {
    Stability verdict = Stability::marginal;
    double tangent_value = 0.0;    // smallest eigenvalue of the tangent form
    double full_min_eig = 0.0;     // smallest eigenvalue of H_V - c H_h
    double normal_eigenvalue = 0.0;
    Mat tangent_form;
};

TangentTestResult stability_tangent_test(const Clf& clf, const Cbf& cbf,
                                         const Vec& x_star, double c,
                                         const NominalGains& gains);

struct ClosedLoopProbe {
    Vec fcl;
    int label = 0;
};
using ClosedLoopFn = std::function<ClosedLoopProbe(const Vec&)>;

ClosedLoopFn nominal_closed_loop(const ControlAffineSystem& sys, const Clf& clf,
                                 const Cbf& cbf, const NominalGains& gains);

// Central-difference Jacobian of the closed loop. When the active-set label
// changes inside the stencil the estimate falls back to one-sided differences
// taken on the side matching the center label and is flagged.
struct NumericJacobian {
    Mat j;
    bool one_sided = false;
};

NumericJacobian numeric_closed_loop_jacobian(const ClosedLoopFn& fcl, const Vec& x,
                                             double step = 1e-5);

struct BoundaryScanOptions {
    double theta_step = 1e-3;
    double bisect_tol = 1e-12;
    double multiplier_tol = 1e-10;
    Exec exec = Exec::parallel;
};

struct BoundaryScan {
    std::vector<EquilibriumReport> reports;  // sorted by theta
    bool degenerate_continuum = false;
};

// Sweeps the obstacle circle, bisects sign changes of the collinearity
// residual (cross(gradV, gradh) for driftless systems, tangential closed-loop
// speed otherwise), keeps roots whose region label is both_active with
// nonnegative multipliers. n = 2 with a circular boundary only.
BoundaryScan find_boundary_equilibria(const ControlAffineSystem& sys, const Clf& clf,
                                      const Cbf& cbf, const NominalGains& gains,
                                      const BoundaryScanOptions& opts = {});

struct InteriorScanOptions {
    int grid = 50;
    int max_newton_iter = 80;
    double newton_tol = 1e-13;
    double dedup_tol = 1e-6;
    Exec exec = Exec::parallel;
};

// Grid-seeded damped Newton on f(x) - p gamma(V) G gradV; keeps converged
// roots that sit strictly inside the safe set with the stabilization row
// active alone. The origin is excluded by definition.
std::vector<EquilibriumReport> find_interior_equilibria(
    const ControlAffineSystem& sys, const Clf& clf, const Cbf& cbf,
    const NominalGains& gains, const Vec& box_lo, const Vec& box_hi,
    const InteriorScanOptions& opts = {});

// Report for the origin itself: verdict from the sign of Vdot on a small ring
// (the closed-loop Jacobian degenerates to zero for the integrator).
EquilibriumReport origin_report(const ControlAffineSystem& sys, const Clf& clf,
                                const Cbf& cbf, const NominalGains& gains);

struct EquilibriumAnalysis {
    EquilibriumReport origin;
    BoundaryScan boundary;
    std::vector<EquilibriumReport> interior;
};

EquilibriumAnalysis analyze_equilibria(const ControlAffineSystem& sys, const Clf& clf,
                                       const Cbf& cbf, const NominalGains& gains,
                                       const Vec& box_lo, const Vec& box_hi,
                                       Exec exec = Exec::parallel);

}  // namespace cbfqp
