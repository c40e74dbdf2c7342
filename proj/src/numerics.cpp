#include "heislab/numerics.hpp"

#include "heislab/errors.hpp"

#include <cmath>
#include <numbers>

namespace heis {

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("least_squares_line: need >= 2 paired values");
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    return least_squares_line(x, y).slope;
}

QuadratureRule QuadratureRule::composite_gauss(int panels, int order) {
    if (panels < 1 || order < 1) throw InvalidArgument("composite_gauss: panels and order must be positive");
    // Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_order
    std::vector<double> gx(static_cast<std::size_t>(order)), gw(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= order; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = order * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        gx[static_cast<std::size_t>(i)] = z;
        gw[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    QuadratureRule rule;
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p) {
        for (int i = 0; i < order; ++i) {
            rule.nodes.push_back(h * (p + 0.5 * (gx[static_cast<std::size_t>(i)] + 1.0)));
            rule.weights.push_back(0.5 * h * gw[static_cast<std::size_t>(i)]);
        }
    }
    return rule;
}

KronrodPanel gauss_kronrod_15(double a, double b) {
    static constexpr std::array<double, 8> xgk = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr std::array<double, 8> wgk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    // Gauss weights for xgk[1], xgk[3], xgk[5], xgk[7]
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    KronrodPanel p;
    std::size_t k = 0;
    for (std::size_t i = 0; i < 7; ++i) {
        const double g = (i % 2 == 1) ? wg[i / 2] : 0.0;
        for (double s : {-1.0, 1.0}) {
            p.nodes[k] = c + s * h * xgk[i];
            p.kronrod_weights[k] = h * wgk[i];
            p.gauss_weights[k] = h * g;
            ++k;
        }
    }
    p.nodes[14] = c;
    p.kronrod_weights[14] = h * wgk[7];
    p.gauss_weights[14] = h * wg[3];
    return p;
}

std::vector<double> geometric_range(double first, double last, int count) {
    if (count < 2 || !(first > 0) || !(last > 0)) throw InvalidArgument("geometric_range: bad arguments");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double r = std::log(last / first) / (count - 1);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = first * std::exp(r * i);
    out.front() = first;
    out.back() = last;
    return out;
}

}  // namespace heis
