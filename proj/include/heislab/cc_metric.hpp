/**
 * @file cc_metric.hpp
 * @brief Carnot-Caratheodory distance, Ball-Box envelopes and covering
 *        estimators of Hausdorff dimension and 2-dimensional measure.
 *
 * The CC distance is approximated from above by the shortest horizontal
 * polyline with K segments found by an augmented-Lagrangian quasi-Newton
 * search. Hausdorff quantities are estimated by greedy covers with
 * left-translated boxes  |dx| <= eps, |dxbar| <= eps^2  standing in for
 * CC balls of radius eps.
 */
#pragma once

#include "heislab/errors.hpp"
#include "heislab/heisenberg.hpp"
#include "heislab/path.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace heis {

/// Sum of horizontal increment lengths. Throws PreconditionError when the
/// path is not horizontal within tol.
double path_length(const HeisPath& path, double tol = 1e-9);

struct CCOptions {
    int restarts = 8;
    std::uint64_t seed = 1;
    double constraint_tol = 1e-9;  // vertical endpoint gap at unit scale
    int max_outer = 40;
    int max_inner = 2000;
};

struct CCResult {
    double distance = 0.0;  // length of the best admissible polyline
    HeisPath path;
    double constraint_residual = 0.0;
};

/// Upper bound on d(p, q) from the best K-segment horizontal polyline.
CCResult cc_distance(const HeisPoint& p, const HeisPoint& q, int K = 32, const CCOptions& opts = {});

struct BallBoxConstants {
    double lower = 0.0;  // c1
    double upper = 0.0;  // c2
};

/// Calibrates c1, c2 with c1 |p| <= d(0, p) <= c2 |p| over the unit gauge
/// sphere. The ratio d/|p| only depends on how |p| = 1 splits between the
/// layers, so `samples` points s in [0, 1] with |x| = 1 - s, xbar = s^2 cover
/// it; `margin` widens the bracket for optimizer noise.
BallBoxConstants calibrate_ball_box(int samples = 21, int K = 32, double margin = 0.03,
                                    const CCOptions& opts = {});

/// Process-wide calibration, computed on first use.
const BallBoxConstants& default_ball_box();

std::pair<double, double> ball_box_bounds(const HeisPoint& p);
std::pair<double, double> ball_box_bounds(const HeisPoint& p, const BallBoxConstants& c);

/// Piecewise-linear resampling fine enough for covers at scale eps: each
/// step moves at most eps/20 horizontally and eps^2/20 off-horizontally.
HeisPath resample_for_covering(const HeisPath& curve, double eps);

/// Greedy box cover of the samples. The lowest-index uncovered sample
/// seeds each box; the box centre then slides forward along the curve to
/// the last sample whose box still contains the seed.
std::size_t covering_number(const HeisPath& curve, double eps);

struct CoveringEstimate {
    std::vector<double> eps_values;  // decreasing
    std::vector<std::size_t> counts;
    std::vector<double> running_slope;  // slope between consecutive rows (first row: NaN)
    double dim_slope = 0.0;
    double measure_extrapolation = 0.0;  // N(eps) eps^slope as eps -> 0
    bool degenerate = false;
};

/// 8 geometric values from 0.2 down to 0.01.
std::vector<double> default_eps_range();

CoveringEstimate hausdorff_dim_estimate(const HeisPath& curve, const std::vector<double>& eps_range);

struct H2Estimate {
    double value = 0.0;  // extrapolated N(eps) eps^2
    bool converged = false;
    CoveringEstimate covering;
};

/// Extrapolates N(eps) eps^2 linearly in eps from the four smallest scales.
H2Estimate h2_measure_estimate(const HeisPath& curve, const std::vector<double>& eps_range);

/// Factor turning h2_measure_estimate into H^2 content: the reciprocal of
/// the estimate on the unit vertical segment t -> (0, t), whose content is 1.
double h2_calibration_constant(const std::vector<double>& eps_range);

/// CSV with header eps,count,running_slope.
void write_covering_csv(std::ostream& out, const CoveringEstimate& est);

}  // namespace heis
