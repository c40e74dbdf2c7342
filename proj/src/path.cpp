#include "heislab/path.hpp"

#include "heislab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace heis {

double horizontality_residual(const std::vector<HeisPoint>& points) {
    double r = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const Vec dx = points[i + 1].x - points[i].x;
        const double dz = points[i + 1].xbar - points[i].xbar;
        r = std::max(r, std::abs(dz - 0.5 * symplectic_form(points[i].x, dx)));
    }
    return r;
}

HeisPath::HeisPath(std::vector<double> times_, std::vector<HeisPoint> points_)
    : times(std::move(times_)), points(std::move(points_)) {
    if (times.size() != points.size()) throw InvalidArgument("HeisPath: times and points differ in length");
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (!(times[i + 1] > times[i])) throw InvalidArgument("HeisPath: times must be strictly increasing");
    }
    horiz_residual = horizontality_residual(points);
}

}  // namespace heis
