#pragma once

#include <functional>
#include <random>

#include "cbfqp/linalg.hpp"
#include "cbfqp/models.hpp"

namespace cbfqp::test {

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Vec random_vec(std::mt19937_64& g, int n, double lo = -2.0, double hi = 2.0) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(g, lo, hi);
    return v;
}

inline RotationQ random_rotation(std::mt19937_64& g, int n) {
    const Vec om = random_vec(g, omega_dim(n), -1.0, 1.0);
    return rotation_exp(om, uniform(g, 0.0, 3.0));
}

// Newton iteration for the orthogonal polar factor: X <- (X + X^-T)/2.
// Converges quadratically for matrices near the orthogonal group; serves as
// an SVD-free cross-check of the retraction.
inline Mat polar_factor_newton(Mat x, int iters = 60) {
    for (int i = 0; i < iters; ++i) {
        x = 0.5 * (x + x.transpose().inverse());
    }
    return x;
}

// Central finite difference of a scalar field.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double step = 1e-6) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        g(i) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return g;
}

// Central finite difference of a vector field (Jacobian).
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                       double step = 1e-6) {
    const Vec f0 = f(x);
    Mat j(f0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        j.col(i) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return j;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double rel_err(const Vec& a, const Vec& b) {
    return (a - b).norm() / std::max(1.0, std::max(a.norm(), b.norm()));
}

}  // namespace cbfqp::test
