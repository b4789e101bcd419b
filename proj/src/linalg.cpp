#include "gaitcont/linalg.hpp"

namespace gaitcont {

namespace {
Eigen::JacobiSVD<Mat> svd_of(const Mat& A, unsigned opts) { return Eigen::JacobiSVD<Mat>(A, opts); }

double threshold(const Vec& s, double rel) { return s.size() ? rel * s(0) : 0.0; }
}  // namespace

Vec singular_values(const Mat& A) { return svd_of(A, 0).singularValues(); }

int numerical_rank(const Mat& A, double rel_cutoff) {
    if (A.size() == 0) return 0;
    const Vec s = singular_values(A);
    const double tol = threshold(s, rel_cutoff);
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > tol && s(i) > 0) ++r;
    return r;
}

Mat pseudo_inverse(const Mat& A, double rel_cutoff) {
    if (A.size() == 0) return Mat::Zero(A.cols(), A.rows());
    auto svd = svd_of(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    const double tol = threshold(s, rel_cutoff);
    Vec inv = Vec::Zero(s.size());
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > tol && s(i) > 0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vec pinv_solve(const Mat& A, const Vec& b, double rel_cutoff) {
    if (A.size() == 0) return Vec::Zero(A.cols());
    auto svd = svd_of(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    const double tol = threshold(s, rel_cutoff);
    Vec y = svd.matrixU().transpose() * b;
    for (int i = 0; i < s.size(); ++i) y(i) = (s(i) > tol && s(i) > 0) ? y(i) / s(i) : 0.0;
    return svd.matrixV() * y;
}

Mat null_space(const Mat& A, double rel_cutoff) {
    const auto cols = A.cols();
    if (A.rows() == 0) return Mat::Identity(cols, cols);
    auto svd = svd_of(A, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    const double tol = threshold(s, rel_cutoff);
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > tol && s(i) > 0) ++rank;
    return svd.matrixV().rightCols(cols - rank);
}

}  // namespace gaitcont
