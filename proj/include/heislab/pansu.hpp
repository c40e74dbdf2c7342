/**
 * @file pansu.hpp
 * @brief Numerical Pansu derivatives and linearity tests for maps of H(n).
 *
 * The finite-difference function of f at p is
 *
 *     F_eps(y) = delta_eps^{-1}( f(p)^{-1} f(p delta_eps(y)) ),
 *
 * and f is Pansu differentiable at p when F_eps converges, uniformly on the
 * unit gauge ball, to a dilation-commuting group morphism. Here the sup over
 * the ball is replaced by a sup over a finite probe set.
 *
 * Residuals are measured coordinate-wise, max(|dx|_2, |dxbar|). The gauge
 * |dx| + |dxbar|^{1/2} of the same defect is kept alongside: it converges
 * only like sqrt(eps) for nonlinear maps and amplifies rounding near zero.
 */
#pragma once

#include "heislab/errors.hpp"
#include "heislab/heisenberg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace heis {

enum class MapKind { LiftedSymplecto, Linear, Custom };

/// An evaluable map of H(n). `eval` may throw DomainError.
struct HeisMap {
    std::function<HeisPoint(const HeisPoint&)> eval;
    MapKind descriptor = MapKind::Custom;

    HeisPoint operator()(const HeisPoint& p) const { return eval(p); }

    static HeisMap linear(const LinearHeisMap& L);
    static HeisMap identity();
    static HeisMap left_translation(const HeisPoint& g);
};

/// Compose as maps: (f o g)(p) = f(g(p)).
HeisMap compose(const HeisMap& f, const HeisMap& g);

HeisPoint finite_difference(const HeisMap& f, const HeisPoint& p, double eps, const HeisPoint& y);

/// Horizontal basis vectors +-e_i at gauge 1, one vertical probe (0, 1), and
/// `random_count` random points of the unit gauge ball.
std::vector<HeisPoint> default_probes(int n, int random_count = 20, std::uint64_t seed = 7);

/// 1e-1 .. 1e-4, geometric, 7 values.
std::vector<double> default_pansu_schedule();

/// max(|p.x - q.x|_2, |p.xbar - q.xbar|)
double coordinate_gap(const HeisPoint& p, const HeisPoint& q);

struct PansuReport {
    LinearHeisMap candidate;  // least-squares fits at the two smallest eps, Richardson-extrapolated
    std::vector<double> eps;            // as given, decreasing
    std::vector<double> residuals;      // sup over probes, coordinate-wise
    std::vector<double> hom_residuals;  // sup over probes, gauge of candidate(y)^{-1} F_eps(y)
    double slope = 0.0;                 // log-log slope of residuals against eps (0 if all tiny)
    bool converged = false;
};

PansuReport pansu_derivative(const HeisMap& f, const HeisPoint& p, const std::vector<double>& eps_schedule,
                             const std::vector<HeisPoint>& probes, double tol = 1e-4);

using HeisFunctional = std::function<double(const HeisPoint&)>;

/// Classical partial derivatives of a scalar functional at a point.
struct ClassicalGradient {
    Vec dx;
    double dxbar = 0.0;
};

struct ScalarPansuReport {
    Vec covector;  // Df(p)(y) = covector . y_x
    std::vector<double> eps;
    std::vector<double> residuals;
    bool converged = false;
    /// |covector - (df/dx + 1/2 df/dxbar J^T x)|_inf when a classical gradient is supplied, else NaN.
    double classical_gap = 0.0;
};

/// The covector predicted from classical partials: y -> df/dx y + 1/2 omega(x, y) df/dxbar.
Vec classical_pansu_covector(const HeisPoint& p, const ClassicalGradient& g);

ScalarPansuReport pansu_derivative_scalar(const HeisFunctional& f, const HeisPoint& p,
                                          const std::vector<double>& eps_schedule,
                                          const std::vector<HeisPoint>& probes, double tol = 1e-4,
                                          const ClassicalGradient* classical = nullptr);

struct LinearityOptions {
    int pairs = 200;
    std::vector<double> eps = {0.1, 0.5, 2.0, 10.0};
    double tol = 1e-6;
    std::uint64_t seed = 11;
};

struct LinearityReport {
    bool linear = false;
    double morphism_gap = 0.0;  // sup of gauge of F(pq)^{-1} F(p) F(q)
    double dilation_gap = 0.0;  // sup of gauge of F(delta p)^{-1} delta F(p)
};

LinearityReport linearity_report(const HeisMap& F, int n, const LinearityOptions& opts = {});
bool is_linear_heis(const HeisMap& F, int n, const LinearityOptions& opts = {});

}  // namespace heis
