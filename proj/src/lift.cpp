#include "heislab/lift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace heis {

Mat SymplectoMap::jac(const Vec& x) const {
    if (jacobian) return jacobian(x);
    const Eigen::Index d = x.size();
    Mat D(d, d);
    Vec xp = x, xm = x;
    for (Eigen::Index i = 0; i < d; ++i) {
        xp(i) = x(i) + fd_step;
        xm(i) = x(i) - fd_step;
        D.col(i) = (eval(xp) - eval(xm)) / (2.0 * fd_step);
        xp(i) = xm(i) = x(i);
    }
    return D;
}

SymplectoMap SymplectoMap::identity(const Box& support) {
    const Eigen::Index d = support.dim();
    return {[](const Vec& x) { return x; }, [d](const Vec&) { return Mat(Mat::Identity(d, d)); }, support, "identity"};
}

SymplectoMap SymplectoMap::linear(const Mat& A, const Box& support) {
    if (A.rows() != support.dim() || A.cols() != support.dim()) throw InvalidArgument("SymplectoMap::linear: size mismatch");
    return {[A](const Vec& x) { return Vec(A * x); }, [A](const Vec&) { return A; }, support, "linear"};
}

SymplectoMap compose(const SymplectoMap& phi, const SymplectoMap& psi) {
    SymplectoMap out;
    out.eval = [phi, psi](const Vec& x) { return phi(psi(x)); };
    out.jacobian = [phi, psi](const Vec& x) { return Mat(phi.jac(psi(x)) * psi.jac(x)); };
    out.support = psi.support;
    out.descriptor = phi.descriptor + "*" + psi.descriptor;
    return out;
}

Vec lift_form(const Vec& x, const Vec& phi_x, const Mat& dphi_x) {
    // alpha(e_i) = 1/2 phi^T J Dphi e_i - 1/2 x^T J e_i
    const Eigen::Index n = x.size() / 2;
    auto JT = [n](const Vec& v) {  // J^T v, so that v^T J w = (J^T v) . w
        Vec out(v.size());
        out.head(n) = -v.tail(n);
        out.tail(n) = v.head(n);
        return out;
    };
    return 0.5 * (dphi_x.transpose() * JT(phi_x) - JT(x));
}

double jacobian_symplectic_defect(const SymplectoMap& phi, const Vec& x) { return symplectic_defect(phi.jac(x)); }

// ---------------------------------------------------------------------------

GridSpec::GridSpec(Box b, std::vector<int> c) : box(std::move(b)), cells(std::move(c)) {
    if (static_cast<Eigen::Index>(cells.size()) != box.dim()) throw InvalidArgument("GridSpec: one cell count per axis");
    for (int k : cells)
        if (k < 1) throw InvalidArgument("GridSpec: cell counts must be positive");
}

GridSpec GridSpec::uniform(const Box& box, int cells_per_axis) {
    return {box, std::vector<int>(static_cast<std::size_t>(box.dim()), cells_per_axis)};
}

double GridSpec::pitch(Eigen::Index axis) const { return 2.0 * box.half_widths(axis) / cells[static_cast<std::size_t>(axis)]; }

std::size_t GridSpec::node_count() const {
    std::size_t c = 1;
    for (int k : cells) c *= static_cast<std::size_t>(k + 1);
    return c;
}

std::vector<int> GridSpec::index_of(std::size_t flat) const {
    std::vector<int> idx(cells.size());
    for (std::size_t a = 0; a < cells.size(); ++a) {
        const auto m = static_cast<std::size_t>(cells[a] + 1);
        idx[a] = static_cast<int>(flat % m);
        flat /= m;
    }
    return idx;
}

std::size_t GridSpec::flat_of(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (std::size_t a = cells.size(); a-- > 0;) flat = flat * static_cast<std::size_t>(cells[a] + 1) + static_cast<std::size_t>(idx[a]);
    return flat;
}

Vec GridSpec::node(std::size_t flat) const {
    const auto idx = index_of(flat);
    Vec x = box.lower();
    for (std::size_t a = 0; a < idx.size(); ++a) x(static_cast<Eigen::Index>(a)) += idx[a] * pitch(static_cast<Eigen::Index>(a));
    return x;
}

std::vector<Vec> GridSpec::nodes() const {
    std::vector<Vec> out(node_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
    return out;
}

// ---------------------------------------------------------------------------

double GeneratingField::operator()(const Vec& x) const {
    const Eigen::Index d = grid.dim();
    if (x.size() != d) throw InvalidArgument("GeneratingField: dimension mismatch");
    if (!grid.box.contains(x, 1e-12 * (1.0 + grid.box.half_widths.maxCoeff())))
        throw DomainError("GeneratingField: point outside the grid box");
    std::vector<int> base(static_cast<std::size_t>(d));
    std::vector<double> frac(static_cast<std::size_t>(d));
    const Vec lo = grid.box.lower();
    for (Eigen::Index a = 0; a < d; ++a) {
        const int cells = grid.cells[static_cast<std::size_t>(a)];
        const double u = std::clamp((x(a) - lo(a)) / grid.pitch(a), 0.0, static_cast<double>(cells));
        const int i = std::min(static_cast<int>(std::floor(u)), cells - 1);
        base[static_cast<std::size_t>(a)] = i;
        frac[static_cast<std::size_t>(a)] = u - i;
    }
    double acc = 0.0;
    std::vector<int> idx(base);
    for (unsigned corner = 0; corner < (1u << d); ++corner) {
        double w = 1.0;
        for (Eigen::Index a = 0; a < d; ++a) {
            const bool up = (corner >> a) & 1u;
            idx[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + (up ? 1 : 0);
            w *= up ? frac[static_cast<std::size_t>(a)] : 1.0 - frac[static_cast<std::size_t>(a)];
        }
        if (w != 0.0) acc += w * values[grid.flat_of(idx)];
    }
    return acc;
}

Vec GeneratingField::gradient(const Vec& x) const {
    const Eigen::Index d = grid.dim();
    Vec g(d);
    Vec xp = x, xm = x;
    for (Eigen::Index a = 0; a < d; ++a) {
        const double h = grid.pitch(a);
        xp(a) = x(a) + h;
        xm(a) = x(a) - h;
        g(a) = ((*this)(xp) - (*this)(xm)) / (2.0 * h);
        xp(a) = xm(a) = x(a);
    }
    return g;
}

namespace {

std::vector<int> anchor_index(const GridSpec& grid, const Anchor& anchor) {
    std::vector<int> idx(grid.cells.size(), 0);
    if (anchor.kind == Anchor::Kind::Corner) return idx;
    if (anchor.point.size() != grid.dim()) throw InvalidArgument("generating_function: anchor dimension mismatch");
    const Vec lo = grid.box.lower();
    for (std::size_t a = 0; a < idx.size(); ++a) {
        const auto ax = static_cast<Eigen::Index>(a);
        const double u = std::round((anchor.point(ax) - lo(ax)) / grid.pitch(ax));
        idx[a] = static_cast<int>(std::clamp(u, 0.0, static_cast<double>(grid.cells[a])));
    }
    return idx;
}

}  // namespace

GeneratingField generating_function_from_forms(const GridSpec& grid, const std::vector<Vec>& alpha, const Anchor& anchor,
                                               const GeneratingOptions& opts) {
    const std::size_t count = grid.node_count();
    if (alpha.size() != count) throw InvalidArgument("generating_function: one form per grid node required");
    const auto d = static_cast<std::size_t>(grid.dim());
    const auto a_idx = anchor_index(grid, anchor);

    GeneratingField F;
    F.grid = grid;
    F.anchor_point = grid.node(grid.flat_of(a_idx));
    F.anchor_value = anchor.value;
    F.values.assign(count, 0.0);

    // Path from the anchor: along axis 0, then axis 1, ... A node's last
    // differing axis is its stage; its predecessor moves one step toward the
    // anchor along that axis and always comes earlier in this order.
    std::vector<std::size_t> order(count);
    std::vector<std::pair<int, int>> key(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto idx = grid.index_of(i);
        int stage = -1;
        for (std::size_t a = 0; a < d; ++a)
            if (idx[a] != a_idx[a]) stage = static_cast<int>(a);
        key[i] = {stage, stage < 0 ? 0 : std::abs(idx[static_cast<std::size_t>(stage)] - a_idx[static_cast<std::size_t>(stage)])};
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    for (std::size_t i : order) {
        const int stage = key[i].first;
        if (stage < 0) {
            F.values[i] = anchor.value;
            continue;
        }
        auto idx = grid.index_of(i);
        const auto s = static_cast<std::size_t>(stage);
        const int step = idx[s] > a_idx[s] ? 1 : -1;
        idx[s] -= step;
        const std::size_t prev = grid.flat_of(idx);
        const double h = grid.pitch(stage);
        F.values[i] = F.values[prev] + step * 0.5 * h * (alpha[prev](stage) + alpha[i](stage));
    }

    for (std::size_t i = 0; i < count; ++i) {
        const auto idx = grid.index_of(i);
        for (std::size_t a = 0; a < d; ++a) {
            if (idx[a] == grid.cells[a]) continue;
            for (std::size_t b = a + 1; b < d; ++b) {
                if (idx[b] == grid.cells[b]) continue;
                auto j = idx;
                j[a] += 1;
                const std::size_t ia = grid.flat_of(j);
                j[b] += 1;
                const std::size_t iab = grid.flat_of(j);
                j[a] -= 1;
                const std::size_t ib = grid.flat_of(j);
                const auto A = static_cast<Eigen::Index>(a), B = static_cast<Eigen::Index>(b);
                const double ha = grid.pitch(A), hb = grid.pitch(B);
                const double loop = 0.5 * ha * (alpha[i](A) + alpha[ia](A)) + 0.5 * hb * (alpha[ia](B) + alpha[iab](B)) -
                                    0.5 * ha * (alpha[ib](A) + alpha[iab](A)) - 0.5 * hb * (alpha[i](B) + alpha[ib](B));
                F.exactness_residual = std::max(F.exactness_residual, std::abs(loop));
                F.curl_residual = std::max(F.curl_residual, std::abs(loop) / (ha * hb));
            }
        }
    }
    if (F.curl_residual > opts.curl_tol)
        throw NotSymplecticError("generating_function: 1-form is not closed on the grid", F.exactness_residual);
    return F;
}

GeneratingField generating_function(const SymplectoMap& phi, const GridSpec& grid, const Anchor& anchor,
                                    const GeneratingOptions& opts) {
    const auto nodes = grid.nodes();
    std::vector<Vec> alpha(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) alpha[i] = lift_form(nodes[i], phi(nodes[i]), phi.jac(nodes[i]));
    return generating_function_from_forms(grid, alpha, anchor, opts);
}

const QuadratureRule& default_segment_rule() {
    static const QuadratureRule rule = QuadratureRule::composite_gauss(4, 8);
    return rule;
}

double generating_value(const SymplectoMap& phi, const Vec& x, const Vec& anchor_point, double anchor_value,
                        const QuadratureRule& rule) {
    detail::require_same_dim(x, anchor_point, "generating_value");
    const Vec v = x - anchor_point;
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const Vec g = anchor_point + rule.nodes[k] * v;
        acc += rule.weights[k] * lift_form(g, phi(g), phi.jac(g)).dot(v);
    }
    return anchor_value + acc;
}

HeisPath lift_curve(const std::vector<double>& times, const std::vector<Vec>& curve, double xbar0) {
    if (curve.size() < 2) throw InvalidArgument("lift_curve: need at least 2 samples");
    std::vector<HeisPoint> pts;
    pts.reserve(curve.size());
    double z = xbar0;
    pts.emplace_back(curve[0], z);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        z += 0.5 * symplectic_form(curve[i - 1], curve[i] - curve[i - 1]);
        pts.emplace_back(curve[i], z);
    }
    HeisPath path(times, std::move(pts));
    return path;
}

HeisMap lift_map(const SymplectoMap& phi, const GeneratingField& F) {
    return {[phi, F](const HeisPoint& p) { return HeisPoint(phi(p.x), p.xbar + F(p.x)); }, MapKind::LiftedSymplecto};
}

HeisMap lift_map_quadrature(const SymplectoMap& phi, const Vec& anchor_point, double anchor_value) {
    return {[phi, anchor_point, anchor_value](const HeisPoint& p) {
                return HeisPoint(phi(p.x), p.xbar + generating_value(phi, p.x, anchor_point, anchor_value));
            },
            MapKind::LiftedSymplecto};
}

HeisMap lift_with(const SymplectoMap& phi, std::function<double(const Vec&)> F) {
    return {[phi, F = std::move(F)](const HeisPoint& p) { return HeisPoint(phi(p.x), p.xbar + F(p.x)); },
            MapKind::LiftedSymplecto};
}

double cancelation_residual(const SymplectoMap& phi, const GeneratingField& F, const std::vector<Vec>& samples) {
    double r = 0.0;
    for (const auto& x : samples) {
        const Vec alpha = lift_form(x, phi(x), phi.jac(x));
        r = std::max(r, (F.gradient(x) - alpha).lpNorm<Eigen::Infinity>());
    }
    return r;
}

VolumeReport volume_check(const HeisMap& fmap, const std::vector<HeisPoint>& samples, double tol, double fd_step) {
    VolumeReport rep;
    const std::vector<double> schedule = {1e-2, 1e-3, 1e-4};
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const HeisPoint& p = samples[s];
        const Eigen::Index d = p.x.size();
        Mat J(d + 1, d + 1);
        for (Eigen::Index c = 0; c <= d; ++c) {
            HeisPoint a = p, b = p;
            if (c < d) {
                a.x(c) += fd_step;
                b.x(c) -= fd_step;
            } else {
                a.xbar += fd_step;
                b.xbar -= fd_step;
            }
            const HeisPoint fa = fmap(a), fb = fmap(b);
            J.col(c).head(d) = (fa.x - fb.x) / (2.0 * fd_step);
            J(d, c) = (fa.xbar - fb.xbar) / (2.0 * fd_step);
        }
        const double det_defect = std::abs(J.determinant() - 1.0);
        const PansuReport pr = pansu_derivative(fmap, p, schedule, default_probes(p.n(), 0));
        const double sp = symplectic_defect(pr.candidate.A);
        const double vd = std::abs(pr.candidate.d - 1.0);
        rep.max_det_defect = std::max(rep.max_det_defect, det_defect);
        rep.max_symplectic_defect = std::max(rep.max_symplectic_defect, sp);
        rep.max_vertical_defect = std::max(rep.max_vertical_defect, vd);
        if (!(det_defect <= tol && sp <= tol && vd <= tol)) rep.violations.push_back(s);
    }
    rep.ok = rep.violations.empty();
    return rep;
}

void write_generating_csv(std::ostream& out, const GeneratingField& F) {
    const Eigen::Index d = F.grid.dim();
    for (Eigen::Index a = 0; a < d; ++a) out << 'x' << (a + 1) << ',';
    out << "F\n";
    char buf[64];
    for (std::size_t i = 0; i < F.values.size(); ++i) {
        const Vec x = F.grid.node(i);
        for (Eigen::Index a = 0; a < d; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", x(a));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", F.values[i]);
        out << buf;
    }
}

}  // namespace heis
