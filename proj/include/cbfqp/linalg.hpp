#pragma once

#include <Eigen/Dense>

#include "cbfqp/errors.hpp"

namespace cbfqp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Exec { serial, parallel };

// Dimension of so(n): 1 for n=2, 3 for n=3.
inline int omega_dim(int n) { return n * (n - 1) / 2; }

// Scaled orthogonal projection P_v = |v|^2 I - v v^T.
// Annihilates v; scales the orthogonal complement of v by |v|^2.
Mat scaled_projection(const Vec& v);

// Skew-symmetric map. omega has size 1 (n=2) or 3 (n=3); for n=3 this is the
// cross-product matrix.
Mat skew(const Vec& omega);

// O_n(x), the n x n(n-1)/2 matrix with skew(w) * x == o_n(x) * w for all w.
// For n=3 it equals -skew(x); for n=2 it is the column (-x2, x1).
Mat o_n(const Vec& x);

// Rotation matrix with validated invariants: Q^T Q = I and det Q = 1 within
// `tol` in Frobenius / absolute terms.
class RotationQ {
  public:
    explicit RotationQ(Mat q, double tol = 1e-9);
    static RotationQ identity(int n);

    const Mat& matrix() const { return q_; }
    int n() const { return static_cast<int>(q_.rows()); }
    double orthogonality_defect() const;

  private:
    Mat q_;
};

// Nearest special-orthogonal matrix (polar factor of Q).
// Throws RetractionError if Q is farther than 0.1 (Frobenius) from the
// orthogonal group or if its polar factor is a reflection.
RotationQ rotation_retract(const Mat& q);

// exp(dt * skew(omega)) in closed form: planar rotation for n=2, Rodrigues
// formula for n=3.
RotationQ rotation_exp(const Vec& omega, double dt);

}  // namespace cbfqp
