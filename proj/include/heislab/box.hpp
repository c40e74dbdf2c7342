/**
 * @file box.hpp
 * @brief Axis-aligned boxes in R^{2n}.
 */
#pragma once

#include "heislab/heisenberg.hpp"

namespace heis {

struct Box {
    Vec center;
    Vec half_widths;

    Box() = default;
    Box(Vec center, Vec half_widths);

    /// The cube centred at c with all half-widths w.
    static Box cube(int dim, double c, double w);

    Eigen::Index dim() const { return center.size(); }
    Vec lower() const { return center - half_widths; }
    Vec upper() const { return center + half_widths; }
    double volume() const;
    bool contains(const Vec& x, double slack = 0.0) const;
    /// Same centre, half-widths multiplied by `factor`.
    Box scaled(double factor) const;
};

}  // namespace heis
