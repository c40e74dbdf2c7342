/**
 * @file hofer.hpp
 * @brief Hofer action of Hamiltonian flows and the generating-function
 *        volume bound  inf_c int_A |F_T - c| <= vol(A) int_0^T ||H_t||_inf dt.
 *
 * The Hofer distance itself is an infimum over all flows and is never
 * computed here. The right-hand side uses the action of the flow at hand,
 * which bounds the distance from above, so the reported inequality is the
 * one that matters for non-degeneracy.
 *
 * F_T at a point is obtained from its trajectory as the action
 * int_0^T (lambda(x') - H) dt, with the polyline area of the lift standing
 * in for int lambda(x') dt. It agrees with the anchored generating function
 * of the flows module up to a constant, which V(phi, A) ignores.
 */
#pragma once

#include "heislab/box.hpp"
#include "heislab/errors.hpp"
#include "heislab/flows.hpp"
#include "heislab/lift.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace heis {

/// 64 cells per axis for n = 1, 16 for n = 2, 8 beyond.
GridSpec default_hofer_grid(const Box& A);

/// Trapezoid in t over `time_steps` equal steps of max over grid nodes in A
/// of |H(t, x)|. Throws InvalidArgument unless the grid box contains A.
double hofer_action(const HamiltonianField& H, const Box& A, double T, const GridSpec& grid, int time_steps = 100);

struct VMin {
    double V = 0.0;
    double c_star = 0.0;
};

/// Weighted median c* of the values and sum of w |value - c*|.
VMin v_min(const std::vector<double>& values, const std::vector<double>& weights);

/// V(phi, A) for F sampled on its grid: nodes inside A (and inside the
/// optional mask) weighted by their trapezoid cell volume.
VMin v_min(const GeneratingField& F, const Box& A, const std::function<bool(const Vec&)>& mask = {});

/// Trapezoid of |H_along| over the sample times.
double curve_h2_formula(const std::vector<double>& times, const std::vector<double>& H_along);
double curve_h2_formula(const Trajectory& tr);

struct HoferOptions {
    double dt = 1e-2;
    /// Multiplies F_T before the volume is taken; 1 leaves it alone.
    /// Any other value corrupts the left-hand side on purpose.
    double fault_scale = 1.0;
    /// Absolute slack before LHS > RHS is called a violation (plus 1e-6 RHS).
    double tol = 1e-9;
    /// |phi_T - id| above this marks the time-T map as non-identity.
    double identity_tol = 1e-8;
    /// Seeds at which F_T is cross-checked against the flows module.
    int check_seeds = 4;
    bool calibrate = true;
    IntegratorOptions integrator;
    int threads = 0;
};

struct HoferReport {
    double T = 0.0;
    double dt = 0.0;
    double lhs = 0.0;  // V(phi_T, A)
    double rhs = 0.0;  // vol(A) * hofer_action
    double slack = 0.0;
    double ratio = 0.0;  // lhs / rhs, 0 when rhs = 0
    double hofer_action = 0.0;
    double volume = 0.0;
    double c_star = 0.0;
    std::vector<double> per_seed_h2;
    double max_seed_h2 = 0.0;
    bool pointwise_ok = true;  // every per-seed value <= hofer_action + 1e-9
    double calibration_constant = 0.0;  // NaN when not requested
    double displacement = 0.0;          // max over seeds of |phi_T(x) - x|_inf
    bool identity_map = false;
    bool compact_support = true;
    double generating_check = 0.0;  // max |F_T(action) - F_T(quadrature)| after removing the mean offset
    double fault_scale = 1.0;
    GridSpec grid;
    std::vector<Vec> seeds;
    std::vector<Vec> images;
    std::vector<double> F;
};

/// Flows every node of `grid` inside A to time T and compares both sides.
/// H must be box-cut-off with support inside A (InvalidArgument otherwise).
/// Throws ViolationError when lhs > rhs + tol + 1e-6 rhs.
HoferReport verify_hofer_bound(const HamiltonianField& H, const Box& A, double T, const GridSpec& grid,
                               const HoferOptions& opts = {});

/// The same two sides without requiring compact support. The violation
/// check only applies when H is box-cut-off inside A.
HoferReport generating_vs_hamiltonian_bound(const HamiltonianField& H, const Box& A, double T, const GridSpec& grid,
                                            const HoferOptions& opts = {});

/// key = value text with lhs, rhs, slack, ratio, per_seed_h2 and friends.
void write_hofer_report(std::ostream& out, const HoferReport& r);

/// CSV with header seed,x1..x2n,F,h2.
void write_hofer_csv(std::ostream& out, const HoferReport& r);

}  // namespace heis
