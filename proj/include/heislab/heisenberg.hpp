/**
 * @file heisenberg.hpp
 * @brief Group law, dilations and gauge of the Heisenberg group H(n).
 *
 * H(n) = R^{2n} x R with
 *
 *     (x, xbar) (y, ybar) = (x + y, xbar + ybar + 1/2 omega(x, y))
 *
 * where omega(v, w) = v^T J w and J = [[0, I_n], [-I_n, 0]]. The first n
 * horizontal coordinates are positions, the last n momenta. Every other
 * module inherits this basis and sign choice.
 *
 * The primitive of omega used throughout is lambda_x(v) = 1/2 omega(x, v).
 */
#pragma once

#include <Eigen/Dense>

#include <random>
#include <utility>

namespace heis {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct GroupInfo {
    int n = 1;
    int step = 2;
    int Q = 4;  // homogeneous dimension 2n + 2

    explicit GroupInfo(int n);
};

/// A point (x, xbar) of H(n): horizontal part x in R^{2n}, vertical xbar.
struct HeisPoint {
    Vec x;
    double xbar = 0.0;

    HeisPoint() = default;
    HeisPoint(Vec x, double xbar);

    static HeisPoint identity(int n) { return {Vec::Zero(2 * n), 0.0}; }

    int n() const { return static_cast<int>(x.size() / 2); }
    bool finite() const;
};

/// Linear map (x, xbar) -> (A x, d xbar).
struct LinearHeisMap {
    Mat A;
    double d = 1.0;

    HeisPoint apply(const HeisPoint& p) const;
};

/// The 2n x 2n matrix J = [[0, I], [-I, 0]].
Mat symplectic_matrix(int n);

double symplectic_form(const Vec& v, const Vec& w);

HeisPoint group_mul(const HeisPoint& p, const HeisPoint& q);
HeisPoint group_inv(const HeisPoint& p);

/// delta_eps(x, xbar) = (eps x, eps^2 xbar); throws for eps <= 0.
HeisPoint dilation(double eps, const HeisPoint& p);

/// |x|_2 + |xbar|^{1/2}
double hom_norm(const HeisPoint& p);

/// lambda_x(v) = 1/2 omega(x, v); d lambda = omega.
double lambda_form(const Vec& x, const Vec& v);

struct ConformalCheck {
    bool ok = false;
    double factor = 0.0;  // d with A^T J A = d J
    double defect = 0.0;  // max-norm of A^T J A - d J
};

/// Tests A^T J A = d J with d read off entry (1, n+1) (1-based).
ConformalCheck is_conformal_symplectic(const Mat& A, double tol = 1e-9);

/// max_ij |(A^T J A - J)_ij|, the defect from Sp(n).
double symplectic_defect(const Mat& A);

/// Product of random symplectic shears [[I, S], [0, I]], [[I, 0], [S, I]]
/// and a block diag(B, B^{-T}); entries of S and B - I are O(spread).
Mat random_symplectic(int n, std::mt19937_64& rng, double spread = 0.5);

namespace detail {
void require_same_dim(const Vec& v, const Vec& w, const char* where);
void require_even(Eigen::Index size, const char* where);
}  // namespace detail

}  // namespace heis
