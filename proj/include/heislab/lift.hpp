/**
 * @file lift.hpp
 * @brief Horizontal lifts of curves and lifts of symplectomorphisms to H(n).
 *
 * A symplectomorphism phi of R^{2n} lifts to the volume preserving map
 *
 *     (x, xbar) -> (phi(x), xbar + F(x)),   dF = phi^* lambda - lambda,
 *
 * with lambda_x(v) = 1/2 omega(x, v). The 1-form on the right is
 *
 *     alpha_x(y) = 1/2 omega(phi(x), Dphi(x) y) - 1/2 omega(x, y),
 *
 * and it is closed exactly when Dphi is symplectic. F is recovered either on
 * a tensor grid (axis-ordered trapezoid paths, with plaquette loop integrals
 * as the exactness diagnostic) or pointwise by Gauss-Legendre quadrature of
 * alpha along the straight segment from the anchor.
 */
#pragma once

#include "heislab/box.hpp"
#include "heislab/errors.hpp"
#include "heislab/heisenberg.hpp"
#include "heislab/numerics.hpp"
#include "heislab/pansu.hpp"
#include "heislab/path.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace heis {

struct SymplectoMap {
    std::function<Vec(const Vec&)> eval;
    std::function<Mat(const Vec&)> jacobian;  // empty: central differences
    Box support;
    std::string descriptor;
    double fd_step = 1e-5;

    Vec operator()(const Vec& x) const { return eval(x); }
    Mat jac(const Vec& x) const;

    static SymplectoMap identity(const Box& support);
    static SymplectoMap linear(const Mat& A, const Box& support);
};

/// (phi o psi)(x) = phi(psi(x)); chain-rule Jacobian, support is psi's.
SymplectoMap compose(const SymplectoMap& phi, const SymplectoMap& psi);

/// alpha_x(y) for all basis directions y = e_i.
Vec lift_form(const Vec& x, const Vec& phi_x, const Mat& dphi_x);

/// max_{i,j} |(Dphi^T J Dphi - J)_{ij}| at x.
double jacobian_symplectic_defect(const SymplectoMap& phi, const Vec& x);

struct GridSpec {
    Box box;
    std::vector<int> cells;  // per axis, >= 1

    GridSpec() = default;
    GridSpec(Box box, std::vector<int> cells);
    static GridSpec uniform(const Box& box, int cells_per_axis);

    Eigen::Index dim() const { return box.dim(); }
    double pitch(Eigen::Index axis) const;
    std::size_t node_count() const;
    std::vector<int> index_of(std::size_t flat) const;
    std::size_t flat_of(const std::vector<int>& idx) const;
    Vec node(std::size_t flat) const;
    std::vector<Vec> nodes() const;
};

struct Anchor {
    enum class Kind { Corner, Point };
    Kind kind = Kind::Corner;
    Vec point;  // Point: snapped to the nearest grid node in grid mode
    double value = 0.0;

    static Anchor corner(double value = 0.0) { return {Kind::Corner, Vec(), value}; }
    static Anchor at(Vec p, double value = 0.0) { return {Kind::Point, std::move(p), value}; }
};

struct GeneratingField {
    GridSpec grid;
    std::vector<double> values;  // node values, axis 0 fastest
    Vec anchor_point;
    double anchor_value = 0.0;
    double exactness_residual = 0.0;  // max plaquette loop integral of alpha
    double curl_residual = 0.0;       // max loop integral divided by plaquette area

    /// Multilinear interpolation; throws DomainError outside the grid box.
    double operator()(const Vec& x) const;
    /// Central-difference gradient of the interpolant with one-pitch steps.
    Vec gradient(const Vec& x) const;
};

struct GeneratingOptions {
    double curl_tol = 1e-3;  // NotSymplecticError above this
};

/// Integrates alpha over the grid. Throws NotSymplecticError when the
/// largest plaquette curl exceeds opts.curl_tol.
GeneratingField generating_function(const SymplectoMap& phi, const GridSpec& grid, const Anchor& anchor = {},
                                    const GeneratingOptions& opts = {});

/// Same, from alpha already sampled at every grid node.
GeneratingField generating_function_from_forms(const GridSpec& grid, const std::vector<Vec>& alpha,
                                               const Anchor& anchor = {}, const GeneratingOptions& opts = {});

/// Default segment quadrature: 4 panels of 8-point Gauss-Legendre.
const QuadratureRule& default_segment_rule();

/// F(x) = a + integral of alpha along the segment anchor -> x.
double generating_value(const SymplectoMap& phi, const Vec& x, const Vec& anchor_point, double anchor_value = 0.0,
                        const QuadratureRule& rule = default_segment_rule());

/// Horizontal lift with exact per-step increments 1/2 omega(c_i, c_{i+1} - c_i).
HeisPath lift_curve(const std::vector<double>& times, const std::vector<Vec>& curve, double xbar0 = 0.0);

/// (x, xbar) -> (phi(x), xbar + F(x)) with F interpolated from the field.
HeisMap lift_map(const SymplectoMap& phi, const GeneratingField& F);

/// Lift with F evaluated by segment quadrature from the anchor at every call.
HeisMap lift_map_quadrature(const SymplectoMap& phi, const Vec& anchor_point, double anchor_value = 0.0);

/// Lift with a caller-supplied F, e.g. an analytic oracle or a forced F = 0.
HeisMap lift_with(const SymplectoMap& phi, std::function<double(const Vec&)> F);

/// max over samples and basis directions of |dF(x) e_i - alpha_x(e_i)|.
double cancelation_residual(const SymplectoMap& phi, const GeneratingField& F, const std::vector<Vec>& samples);

struct VolumeReport {
    bool ok = false;
    double max_det_defect = 0.0;         // |det D f - 1| over samples
    double max_symplectic_defect = 0.0;  // Pansu candidate A vs Sp(n)
    double max_vertical_defect = 0.0;    // |d - 1| of the Pansu candidate
    std::vector<std::size_t> violations;
};

VolumeReport volume_check(const HeisMap& fmap, const std::vector<HeisPoint>& samples, double tol = 1e-6,
                          double fd_step = 1e-4);

void write_generating_csv(std::ostream& out, const GeneratingField& F);

}  // namespace heis
