#include "cbfqp/linalg.hpp"

#include <cmath>

namespace cbfqp {

Mat scaled_projection(const Vec& v) {
    const auto n = v.size();
    return v.squaredNorm() * Mat::Identity(n, n) - v * v.transpose();
}

Mat skew(const Vec& omega) {
    if (omega.size() == 1) {
        Mat m(2, 2);
        m << 0.0, -omega(0), omega(0), 0.0;
        return m;
    }
    if (omega.size() == 3) {
        Mat m(3, 3);
        m << 0.0, -omega(2), omega(1),
             omega(2), 0.0, -omega(0),
             -omega(1), omega(0), 0.0;
        return m;
    }
    throw Error("skew: omega dimension must be 1 (n=2) or 3 (n=3)");
}

Mat o_n(const Vec& x) {
    if (x.size() == 2) {
        Mat m(2, 1);
        m << -x(1), x(0);
        return m;
    }
    if (x.size() == 3) {
        return -skew(x);
    }
    throw Error("o_n: state dimension must be 2 or 3");
}

RotationQ::RotationQ(Mat q, double tol) : q_(std::move(q)) {
    if (q_.rows() != q_.cols()) throw Error("RotationQ: matrix not square");
    const auto n = q_.rows();
    const double defect = (q_.transpose() * q_ - Mat::Identity(n, n)).norm();
    if (!(defect <= tol)) {
        throw Error("RotationQ: orthogonality defect " + std::to_string(defect));
    }
    const double det = q_.determinant();
    if (!(std::abs(det - 1.0) <= tol)) {
        throw Error("RotationQ: determinant " + std::to_string(det));
    }
}

RotationQ RotationQ::identity(int n) { return RotationQ(Mat::Identity(n, n)); }

double RotationQ::orthogonality_defect() const {
    const auto n = q_.rows();
    return (q_.transpose() * q_ - Mat::Identity(n, n)).norm();
}

RotationQ rotation_retract(const Mat& q) {
    Eigen::JacobiSVD<Mat> svd(q, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    const double dist = (sv - Vec::Ones(sv.size())).norm();
    if (!(dist <= 0.1)) {
        throw RetractionError("rotation_retract: input " + std::to_string(dist) +
                              " from the orthogonal group (limit 0.1)");
    }
    Mat r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() <= 0.0) {
        throw RetractionError("rotation_retract: polar factor is a reflection");
    }
    return RotationQ(std::move(r), 1e-9);
}

RotationQ rotation_exp(const Vec& omega, double dt) {
    if (omega.size() == 1) {
        const double th = dt * omega(0);
        Mat r(2, 2);
        r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        return RotationQ(std::move(r), 1e-9);
    }
    if (omega.size() == 3) {
        const double nw = omega.norm();
        const double th = dt * nw;
        if (nw < 1e-300 || th == 0.0) return RotationQ::identity(3);
        const Vec axis = omega / nw;
        const Mat k = skew(axis);
        Mat r = Mat::Identity(3, 3) + std::sin(th) * k + (1.0 - std::cos(th)) * (k * k);
        return RotationQ(std::move(r), 1e-9);
    }
    throw Error("rotation_exp: omega dimension must be 1 or 3");
}

}  // namespace cbfqp
