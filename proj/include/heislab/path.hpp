/**
 * @file path.hpp
 * @brief Time-sampled curves in H(n).
 */
#pragma once

#include "heislab/heisenberg.hpp"

#include <vector>

namespace heis {

/// A sampled curve t -> (x(t), xbar(t)).
///
/// horiz_residual is max_i |dxbar_i - 1/2 omega(x_i, dx_i)|, the discrete
/// defect of the horizontality condition xbar' = 1/2 omega(x, x').
struct HeisPath {
    std::vector<double> times;
    std::vector<HeisPoint> points;
    double horiz_residual = 0.0;

    HeisPath() = default;
    HeisPath(std::vector<double> times, std::vector<HeisPoint> points);

    std::size_t size() const { return points.size(); }
    bool horizontal(double tol) const { return horiz_residual <= tol; }
};

double horizontality_residual(const std::vector<HeisPoint>& points);

}  // namespace heis
