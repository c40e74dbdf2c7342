#include "heislab/box.hpp"

#include "heislab/errors.hpp"

namespace heis {

Box::Box(Vec c, Vec w) : center(std::move(c)), half_widths(std::move(w)) {
    if (center.size() != half_widths.size() || center.size() == 0)
        throw InvalidArgument("Box: centre and half-widths must have equal positive length");
    if ((half_widths.array() <= 0.0).any()) throw InvalidArgument("Box: half-widths must be positive");
}

Box Box::cube(int dim, double c, double w) { return {Vec::Constant(dim, c), Vec::Constant(dim, w)}; }

double Box::volume() const { return (2.0 * half_widths).prod(); }

bool Box::contains(const Vec& x, double slack) const {
    if (x.size() != center.size()) throw InvalidArgument("Box::contains: dimension mismatch");
    return ((x - center).cwiseAbs().array() <= half_widths.array() + slack).all();
}

Box Box::scaled(double factor) const { return {center, half_widths * factor}; }

}  // namespace heis
