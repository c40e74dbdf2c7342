/**
 * @file flows.hpp
 * @brief Hamiltonian flows on R^{2n} and their lifted, horizontal and
 *        vertical counterparts on H(n).
 *
 * Flows solve x' = -J grad H(t, x). With omega(v, w) = v^T J w this is the
 * sign for which the vertical flow obeys d/dt phi^v_t = (0, H(t, phi_t(x))).
 *
 * For a seed (x, xbar):
 *   lifted      phi~_t(x, xbar) = (phi_t(x), xbar + F_t(x)),
 *   horizontal  phi^h_t(x, xbar) = lift of t -> phi_t(x) started at (x, 0), times (0, xbar),
 *   vertical    phi^v_t = phi~_t^{-1} o phi^h_t = (x, xbar + v_t(x)).
 *
 * F_t is the generating function of the time-t map anchored to 0 at a
 * point outside the support, computed by adaptive Gauss-Kronrod quadrature
 * of the lift 1-form along the segment from the anchor. Every quadrature
 * node is a trajectory integrated with its variational Jacobian; the panel
 * error is the worst over all time steps, so one partition serves the
 * whole series F_t.
 */
#pragma once

#include "heislab/box.hpp"
#include "heislab/errors.hpp"
#include "heislab/expr.hpp"
#include "heislab/lift.hpp"
#include "heislab/path.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace heis {

enum class Cutoff {
    Box,   // multiply by a product of 1-D bumps vanishing on the box boundary
    None,  // use the expression as given (no compact support)
};

class HamiltonianField {
public:
    static HamiltonianField from_dsl(const std::string& src, int n, const Box& support, Cutoff cutoff = Cutoff::Box);
    static HamiltonianField from_expr(const dsl::Expr& e, int n, const Box& support, Cutoff cutoff = Cutoff::Box);

    double operator()(double t, const Vec& x) const;
    Vec gradient(double t, const Vec& x) const;
    Mat hessian(double t, const Vec& x) const;
    /// -J grad H
    Vec velocity(double t, const Vec& x) const;

    int n() const { return n_; }
    int dim() const { return 2 * n_; }
    const Box& support() const { return support_; }
    Cutoff cutoff() const { return cutoff_; }
    bool autonomous() const { return autonomous_; }
    const dsl::Expr& expr() const { return expr_; }
    const dsl::Expr& full_expr() const { return full_; }
    /// The same field with H replaced by s H.
    HamiltonianField scaled(double s) const;
    /// max |symbolic - central difference| over probes and components.
    double gradient_check(const std::vector<Vec>& probes, double t = 0.0, double h = 1e-6) const;

private:
    int n_ = 1;
    Box support_;
    Cutoff cutoff_ = Cutoff::Box;
    bool autonomous_ = true;
    dsl::Expr expr_, full_;
    dsl::CompiledExpr value_;
    std::vector<dsl::CompiledExpr> grad_;
    std::vector<dsl::CompiledExpr> hess_;  // upper triangle, row-major
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> x;
    std::vector<Mat> jacobian;  // empty unless requested
    std::vector<double> H_along;
    int max_newton_iterations = 0;
};

struct IntegratorOptions {
    double newton_tol = 1e-12;
    int max_newton = 50;
    bool jacobian = false;
};

/// Implicit-midpoint integration over [t0, t0 + T] with K = ceil(|T| / dt)
/// equal steps; T < 0 integrates backward. Throws IntegrationError.
Trajectory integrate_hamiltonian(const HamiltonianField& H, const Vec& x0, double T, double dt,
                                 const IntegratorOptions& opts = {}, double t0 = 0.0);

/// One implicit-midpoint step of size h from (t, x); returns the new point.
Vec midpoint_step(const HamiltonianField& H, double t, const Vec& x, double h, const IntegratorOptions& opts,
                  std::size_t step_index, int* iterations = nullptr, Mat* step_jacobian = nullptr);

struct FlowOptions {
    double T = 1.0;
    double dt = 1e-3;
    /// Anchor of F_t. Empty: centre - 1.5 half-widths for Cutoff::Box, the origin for Cutoff::None.
    Vec anchor;
    /// Adaptive 7/15 Gauss-Kronrod quadrature of F_t along the anchor segment:
    /// initial panels, absolute tolerance on F at every step, panel budget.
    int quad_panels = 2;
    double quad_tol = 1e-8;
    int quad_max_panels = 256;
    /// Strided times at which phi_t^{-1} is recomputed by backward integration.
    int inverse_checks = 8;
    double consistency_tol = 1e-6;
    IntegratorOptions integrator;
    int threads = 0;
};

struct IntegratorStats {
    std::size_t steps = 0;
    int max_newton_iterations = 0;
    double max_symplectic_defect = 0.0;  // variational Jacobian, every 10th step
    double max_inverse_gap = 0.0;        // |phi_t^{-1}(phi_t(x)) - x| at checked times
    double max_decomposition_gap = 0.0;  // gauge of phi^h^{-1} phi~ phi^v at checked times
};

struct FlowBundle {
    std::vector<HeisPoint> seeds;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<HeisPath> lifted;
    std::vector<HeisPath> horizontal;
    std::vector<std::vector<double>> vertical;
    std::vector<std::vector<double>> hamiltonian_along;
    std::vector<std::vector<double>> generating;  // F_t(x) per seed
    Vec anchor;
    IntegratorStats stats;
};

FlowBundle run_flow_bundle(const HamiltonianField& H, const std::vector<HeisPoint>& seeds, const FlowOptions& opts);

/// The default anchor for a field (see FlowOptions::anchor).
Vec default_anchor(const HamiltonianField& H);

/// Seeds on a tensor grid with `per_axis` nodes per axis covering `box`;
/// nodes rejected by `keep` are skipped.
std::vector<HeisPoint> grid_seeds(const Box& box, int per_axis, double xbar = 0.0,
                                  const std::function<bool(const Vec&)>& keep = {});

HeisPath lifted_flow(const HamiltonianField& H, const HeisPoint& seed, const FlowOptions& opts);
HeisPath horizontal_flow(const HamiltonianField& H, const HeisPoint& seed, const FlowOptions& opts);
std::vector<double> vertical_flow(const HamiltonianField& H, const HeisPoint& seed, const FlowOptions& opts);

/// max over seeds and interior times of |(v_{k+1} - v_{k-1}) / (2 dt) - H(t_k, phi_{t_k}(x))|.
double vertical_velocity_residual(const FlowBundle& bundle);

/// max over seeds and samples of the gauge of phi^h_t(p)^{-1} phi~_t(phi^v_t(p)).
double decomposition_residual(const FlowBundle& bundle);

/// Trapezoid in t of max over seeds in A of |H(t, phi_t(x))|.
double flow_length(const FlowBundle& bundle, const Box& A);

/// max over times and seeds of |H(t, phi_t(x)) - H(0, x)|.
double energy_drift(const FlowBundle& bundle);

/// Trajectory CSV with columns seed,t,x1..x2n,xbar,H_along for the lifted flow.
void write_trajectory_csv(std::ostream& out, const FlowBundle& bundle);

// ---------------------------------------------------------------------------
// Semidirect product of lifted maps and vertical maps

/// A pair (phi~, phi^v) with phi~(x, xbar) = (phi(x), xbar + F(x)) and
/// phi^v(x, xbar) = (x, xbar + G(x)).
struct HamPair {
    std::function<Vec(const Vec&)> phi;
    std::function<Vec(const Vec&)> phi_inv;
    std::function<double(const Vec&)> F;
    std::function<double(const Vec&)> G;

    HeisPoint lifted(const HeisPoint& p) const;
    HeisPoint vertical(const HeisPoint& p) const;

    static HamPair identity();
};

/// (phi~, phi^v)(psi~, psi^v) = (phi~ o psi~, phi^v o phi~ o psi^v o phi~^{-1}).
HamPair ham_compose(const HamPair& a, const HamPair& b);

/// The pair generated by H at time t: phi_t, its lift and its vertical flow.
HamPair flow_pair(const HamiltonianField& H, double t, const FlowOptions& opts);

/// max coordinate gap of lifted and vertical parts at the probes.
double pair_gap(const HamPair& a, const HamPair& b, const std::vector<HeisPoint>& probes);

}  // namespace heis
