#include "heislab/heisenberg.hpp"

#include "heislab/errors.hpp"

#include <cmath>
#include <string>

namespace heis {

Mat random_symplectic(int n, std::mt19937_64& rng, double spread) {
    if (n <= 0) throw InvalidArgument("random_symplectic: n must be positive");
    std::uniform_real_distribution<double> u(-spread, spread);
    auto sym = [&] {
        Mat S(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) S(i, j) = S(j, i) = u(rng);
        return S;
    };
    const Mat I = Mat::Identity(n, n);
    Mat upper = Mat::Identity(2 * n, 2 * n), lower = Mat::Identity(2 * n, 2 * n), block = Mat::Zero(2 * n, 2 * n);
    upper.topRightCorner(n, n) = sym();
    lower.bottomLeftCorner(n, n) = sym();
    Mat B = I;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) += u(rng) * (i == j ? 0.5 : 0.25);
    block.topLeftCorner(n, n) = B;
    block.bottomRightCorner(n, n) = B.inverse().transpose();
    return upper * block * lower;
}

namespace detail {

void require_same_dim(const Vec& v, const Vec& w, const char* where) {
    if (v.size() != w.size()) {
        throw InvalidArgument(std::string(where) + ": dimension mismatch (" +
                              std::to_string(v.size()) + " vs " +
                              std::to_string(w.size()) + ")");
    }
    require_even(v.size(), where);
}

void require_even(Eigen::Index size, const char* where) {
    if (size % 2 != 0 || size == 0) {
        throw InvalidArgument(std::string(where) +
                              ": horizontal dimension must be a positive even number, got " +
                              std::to_string(size));
    }
}

}  // namespace detail

GroupInfo::GroupInfo(int n_) : n(n_), step(2), Q(2 * n_ + 2) {
    if (n_ <= 0) throw InvalidArgument("GroupInfo: n must be positive");
}

HeisPoint::HeisPoint(Vec x_, double xbar_) : x(std::move(x_)), xbar(xbar_) {
    detail::require_even(x.size(), "HeisPoint");
}

bool HeisPoint::finite() const { return x.allFinite() && std::isfinite(xbar); }

HeisPoint LinearHeisMap::apply(const HeisPoint& p) const {
    if (A.rows() != p.x.size() || A.cols() != p.x.size()) {
        throw InvalidArgument("LinearHeisMap::apply: dimension mismatch");
    }
    return {A * p.x, d * p.xbar};
}

Mat symplectic_matrix(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return J;
}

double symplectic_form(const Vec& v, const Vec& w) {
    detail::require_same_dim(v, w, "symplectic_form");
    const Eigen::Index n = v.size() / 2;
    // v^T J w = sum_i v_i w_{n+i} - v_{n+i} w_i
    return v.head(n).dot(w.tail(n)) - v.tail(n).dot(w.head(n));
}

HeisPoint group_mul(const HeisPoint& p, const HeisPoint& q) {
    detail::require_same_dim(p.x, q.x, "group_mul");
    return {p.x + q.x, p.xbar + q.xbar + 0.5 * symplectic_form(p.x, q.x)};
}

HeisPoint group_inv(const HeisPoint& p) { return {-p.x, -p.xbar}; }

HeisPoint dilation(double eps, const HeisPoint& p) {
    if (!(eps > 0.0)) throw InvalidArgument("dilation: eps must be positive");
    return {eps * p.x, eps * eps * p.xbar};
}

double hom_norm(const HeisPoint& p) { return p.x.norm() + std::sqrt(std::abs(p.xbar)); }

double lambda_form(const Vec& x, const Vec& v) { return 0.5 * symplectic_form(x, v); }

ConformalCheck is_conformal_symplectic(const Mat& A, double tol) {
    if (A.rows() != A.cols()) throw InvalidArgument("is_conformal_symplectic: matrix not square");
    detail::require_even(A.rows(), "is_conformal_symplectic");
    const int n = static_cast<int>(A.rows() / 2);
    const Mat J = symplectic_matrix(n);
    const Mat G = A.transpose() * J * A;
    ConformalCheck out;
    out.factor = G(0, n);
    out.defect = (G - out.factor * J).cwiseAbs().maxCoeff();
    out.ok = out.defect <= tol;
    return out;
}

double symplectic_defect(const Mat& A) {
    detail::require_even(A.rows(), "symplectic_defect");
    const int n = static_cast<int>(A.rows() / 2);
    const Mat J = symplectic_matrix(n);
    return (A.transpose() * J * A - J).cwiseAbs().maxCoeff();
}

}  // namespace heis
