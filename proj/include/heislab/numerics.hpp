/**
 * @file numerics.hpp
 * @brief Small numerical helpers: least-squares slopes, Gauss-Legendre rules.
 */
#pragma once

#include <array>
#include <vector>

namespace heis {

/// Slope of the least-squares line through (x_i, y_i).
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Intercept and slope of the least-squares line through (x_i, y_i).
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};
LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

/// Quadrature rule on [0, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    /// `panels` equal sub-intervals, each with an `order`-point Gauss-Legendre rule.
    static QuadratureRule composite_gauss(int panels, int order);
};

/// 15-point Kronrod rule on [a, b] with its embedded 7-point Gauss rule
/// (gauss_weights vanish at the 8 Kronrod-only nodes).
struct KronrodPanel {
    std::array<double, 15> nodes{};
    std::array<double, 15> kronrod_weights{};
    std::array<double, 15> gauss_weights{};
};
KronrodPanel gauss_kronrod_15(double a, double b);

/// Logarithmically spaced values from `first` to `last` (inclusive).
std::vector<double> geometric_range(double first, double last, int count);

}  // namespace heis
