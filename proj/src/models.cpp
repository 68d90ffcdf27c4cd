#include "cbfqp/models.hpp"

#include <cmath>

namespace cbfqp {

QuadraticClf::QuadraticClf(Vec l) : lambda(std::move(l)) {
    if (lambda.size() < 1) throw ConfigError("QuadraticClf: empty lambda");
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (!(lambda(i) > 0.0)) throw ConfigError("QuadraticClf: lambda must be positive");
    }
}

double QuadraticClf::value(const Vec& x) const {
    return 0.5 * x.dot(lambda.asDiagonal() * x);
}

Vec QuadraticClf::grad(const Vec& x) const { return lambda.asDiagonal() * x; }

Mat QuadraticClf::hess(const Vec&) const { return lambda.asDiagonal(); }

bool QuadraticClf::non_radial() const {
    const double lo = lambda.minCoeff();
    const double hi = lambda.maxCoeff();
    return hi - lo > 1e-12 * std::max(1.0, hi);
}

CircularObstacleCbf::CircularObstacleCbf(Vec c, double r)
    : center(std::move(c)), radius(r) {
    if (!(radius > 0.0)) throw ConfigError("CircularObstacleCbf: radius must be positive");
}

double CircularObstacleCbf::value(const Vec& x) const {
    return 0.5 * (x - center).squaredNorm() - 0.5 * radius * radius;
}

Vec CircularObstacleCbf::grad(const Vec& x) const { return x - center; }

Mat CircularObstacleCbf::hess(const Vec& x) const {
    return Mat::Identity(x.size(), x.size());
}

namespace {

std::vector<Mat> zero_g_cols(int n, int m) {
    return std::vector<Mat>(static_cast<size_t>(m), Mat::Zero(n, n));
}

Vec ones2() {
    Vec v(2);
    v << 1.0, 1.0;
    return v;
}

}  // namespace

ControlAffineSystem builtin_system(BuiltinSystem kind, int n) {
    ControlAffineSystem sys;
    sys.n = n;
    sys.m = n;
    sys.g = [n](const Vec&) { return Mat::Identity(n, n); };
    sys.jac_g_cols = [n](const Vec&) { return zero_g_cols(n, n); };
    sys.constant_g = true;

    switch (kind) {
        case BuiltinSystem::integrator:
            if (n != 2 && n != 3) throw ConfigError("integrator: n must be 2 or 3");
            sys.driftless = true;
            sys.f = [n](const Vec&) { return Vec::Zero(n); };
            sys.jac_f = [n](const Vec&) { return Mat::Zero(n, n); };
            return sys;
        case BuiltinSystem::f1:
            if (n != 2) throw ConfigError("f1: defined for n = 2 only");
            sys.f = [](const Vec& x) { return Vec(0.1 * x.norm() * ones2()); };
            sys.jac_f = [](const Vec& x) -> Mat {
                const double r = x.norm();
                if (r < 1e-12) throw SingularityError("f1 Jacobian undefined at the origin");
                return 0.1 * ones2() * (x.transpose() / r);
            };
            return sys;
        case BuiltinSystem::f2:
            if (n != 2) throw ConfigError("f2: defined for n = 2 only");
            sys.f = [](const Vec& x) {
                return Vec(0.1 * (x.norm() - x.squaredNorm()) * ones2());
            };
            sys.jac_f = [](const Vec& x) -> Mat {
                const double r = x.norm();
                if (r < 1e-12) throw SingularityError("f2 Jacobian undefined at the origin");
                return 0.1 * ones2() * (x.transpose() / r - 2.0 * x.transpose());
            };
            return sys;
    }
    throw ConfigError("builtin_system: unknown kind");
}

ControlAffineSystem synthetic_varying_g() {
    ControlAffineSystem sys;
    sys.n = 2;
    sys.m = 2;
    sys.constant_g = false;
    sys.f = [](const Vec& x) {
        Vec v(2);
        v << 0.2 * x(1) * x(1), -0.1 * x(0);
        return v;
    };
    sys.jac_f = [](const Vec& x) {
        Mat j(2, 2);
        j << 0.0, 0.4 * x(1), -0.1, 0.0;
        return j;
    };
    sys.g = [](const Vec& x) {
        Mat g(2, 2);
        g << 1.0 + x(0) * x(0), 0.0, 0.0, 1.0;
        return g;
    };
    sys.jac_g_cols = [](const Vec& x) {
        // column 0 is (1 + x1^2, 0); column 1 is constant.
        std::vector<Mat> cols(2, Mat::Zero(2, 2));
        cols[0](0, 0) = 2.0 * x(0);
        return cols;
    };
    return sys;
}

}  // namespace cbfqp
