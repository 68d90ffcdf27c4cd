#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cbfqp/linalg.hpp"

namespace cbfqp {

// Linear (extended) class-K function s -> gain * s. `extended` records whether
// the function is meant on all of R or only on the nonnegative half-line; the
// linear form is the same either way.
struct ClassKappa {
    double gain = 1.0;
    bool extended = true;

    ClassKappa() = default;
    explicit ClassKappa(double g, bool ext = true) : gain(g), extended(ext) {
        if (!(gain > 0.0)) throw ConfigError("ClassKappa: gain must be positive");
    }
    double operator()(double s) const { return gain * s; }
    double slope() const { return gain; }
};

struct Clf {
    virtual ~Clf() = default;
    virtual double value(const Vec& x) const = 0;
    virtual Vec grad(const Vec& x) const = 0;
    virtual Mat hess(const Vec& x) const = 0;
};

// V(x) = 1/2 x^T diag(lambda) x with lambda_i > 0.
struct QuadraticClf final : Clf {
    Vec lambda;

    explicit QuadraticClf(Vec l);
    double value(const Vec& x) const override;
    Vec grad(const Vec& x) const override;
    Mat hess(const Vec& x) const override;

    // True when at least two eigenvalues differ; rotating a radial quadratic
    // has no effect, so shaping requires this.
    bool non_radial() const;
};

struct Cbf {
    struct Circle {
        Vec center;
        double radius;
    };

    virtual ~Cbf() = default;
    virtual double value(const Vec& x) const = 0;
    virtual Vec grad(const Vec& x) const = 0;
    virtual Mat hess(const Vec& x) const = 0;
    // Geometry hook for boundary-parametrizing consumers; nullopt when the
    // zero level set is not a circle/sphere.
    virtual std::optional<Circle> circle() const { return std::nullopt; }
};

// h(x) = 1/2 |x - c|^2 - 1/2 r^2; h = 0 is a circle of radius r around c.
struct CircularObstacleCbf final : Cbf {
    Vec center;
    double radius;

    CircularObstacleCbf(Vec c, double r);
    double value(const Vec& x) const override;
    Vec grad(const Vec& x) const override;
    Mat hess(const Vec& x) const override;
    std::optional<Circle> circle() const override { return Circle{center, radius}; }
};

// Control-affine dynamics xdot = f(x) + g(x) u with analytic Jacobians.
// jac_g_cols returns d(g_i)/dx for each column g_i of g.
struct ControlAffineSystem {
    int n = 2;
    int m = 2;
    std::function<Vec(const Vec&)> f;
    std::function<Mat(const Vec&)> g;
    std::function<Mat(const Vec&)> jac_f;
    std::function<std::vector<Mat>(const Vec&)> jac_g_cols;
    bool driftless = false;   // f identically zero
    bool constant_g = true;   // all jac_g_cols identically zero

    Mat G(const Vec& x) const {
        const Mat gx = g(x);
        return gx * gx.transpose();
    }
};

enum class BuiltinSystem { integrator, f1, f2 };

// integrator: f = 0, g = I_n (n in {2,3}).
// f1: f = 0.1 |x| (1,1)^T, g = I_2.
// f2: f = 0.1 (|x| - x^T x) (1,1)^T, g = I_2.
// f1/f2 Jacobians are singular at the origin; jac_f throws SingularityError
// for |x| < 1e-12 there.
ControlAffineSystem builtin_system(BuiltinSystem kind, int n);

// Test system with state-dependent g(x) = diag(1 + x1^2, 1) and a smooth
// nonlinear drift; exercises the Gamma_{g,v} terms of the D-gradient.
ControlAffineSystem synthetic_varying_g();

}  // namespace cbfqp
