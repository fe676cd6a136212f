#include "dfi/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

namespace dfi {

CVec LocalGeometry::Lv() const
{
    CVec v(n);
    for (int j = 0; j < n; ++j) v[j] = L[j].value();
    return v;
}

CVec LocalGeometry::Xv() const
{
    CVec v(2 * n);
    for (int a = 0; a < 2 * n; ++a) v[a] = X[a].value();
    return v;
}

LocalGeometry local_geometry(const DomainSpec& domain, const CVec& z, int order)
{
    if (order < 2 || order > 3) throw std::invalid_argument("local geometry order must be 2 or 3");
    LocalGeometry g;
    g.n = domain.n();
    g.z = z;
    const int n = g.n, dim = 2 * n;
    g.r = eval_jet(domain.r, z, order);
    g.metric = metric_at(domain.metric, z, order - 1);
    g.rd = scalar_derivs(g.metric, g.r);
    g.levi = complex_hessian(g.r, n);

    // conj(L) = G^{-1} dr / |dr|^2 with |dr|^2 = dr^H G^{-1} dr
    std::vector<Jet> dr(n), q(n);
    for (int j = 0; j < n; ++j) dr[j] = wirtinger_partial(g.r, j, n);
    for (int k = 0; k < n; ++k) {
        Jet s = Jet::constant(dim, 0.0);
        for (int j = 0; j < n; ++j) s += g.metric.ginv[k * n + j] * dr[j];
        q[k] = s;
    }
    Jet sq = Jet::constant(dim, 0.0);
    for (int j = 0; j < n; ++j) sq += q[j].conj() * dr[j];
    g.grad_sq = sq.real();
    if (std::sqrt(g.grad_sq.value().real()) < kTolGrad) throw std::domain_error("vanishing gradient");
    const Jet inv_sq = inv(g.grad_sq);
    g.L.resize(dim);
    g.Lbar.resize(dim);
    for (int k = 0; k < n; ++k) {
        const Jet lb = q[k] * inv_sq;
        g.L[k] = lb.conj();
        g.L[n + k] = Jet::constant(dim, 0.0, order - 1);
        g.Lbar[k] = Jet::constant(dim, 0.0, order - 1);
        g.Lbar[n + k] = lb;
    }
    g.X.resize(dim);
    for (int a = 0; a < dim; ++a) g.X[a] = 0.5 * (g.L[a] + g.Lbar[a]);
    if (domain.grad_norm) g.log_dr = log(eval_jet(*domain.grad_norm, z, order - 1));
    else g.log_dr = 0.5 * log(2.0 * g.grad_sq);
    return g;
}

namespace {

struct RealGrad {
    double value;
    std::vector<double> grad;  // (x1, y1, ...)
};

RealGrad real_grad(const DomainSpec& domain, const CVec& z)
{
    const Jet j = eval_jet(domain.r, z, 1);
    RealGrad g{j.value().real(), std::vector<double>(2 * domain.n())};
    for (int a = 0; a < 2 * domain.n(); ++a) g.grad[a] = j.d(a).real();
    return g;
}

double sq_norm(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

BoundaryPoint project_to_boundary(const DomainSpec& domain, const CVec& z0)
{
    const auto& box = domain.box();
    if (!box.contains(z0)) throw std::out_of_range("start point outside chart box");
    CVec z = z0;
    const int n = domain.n();
    for (int it = 0; it < 50; ++it) {
        const RealGrad rg = real_grad(domain, z);
        if (std::abs(rg.value) <= kTolBoundary) return {z, std::abs(rg.value)};
        const double g2 = sq_norm(rg.grad);
        // |dr/dz| in coordinates is half the real gradient norm
        if (0.5 * std::sqrt(g2) < kTolGrad) throw std::domain_error("vanishing gradient");
        CVec step(n);
        for (int j = 0; j < n; ++j) step[j] = cplx(rg.grad[2 * j], rg.grad[2 * j + 1]) * (-rg.value / g2);
        double s = 1.0;
        while (!box.contains(z + s * step)) {
            s *= 0.5;
            if (s < 1e-6) throw std::out_of_range("projection left the chart box");
        }
        z += s * step;
    }
    const double res = std::abs(real_grad(domain, z).value);
    if (res <= kTolBoundary) return {z, res};
    throw std::runtime_error("projection did not converge in 50 iterations");
}

std::vector<BoundaryPoint> sample_boundary(const DomainSpec& domain, int count, std::uint64_t seed)
{
    if (count < 1) throw std::invalid_argument("sample count must be positive");
    std::mt19937_64 eng(seed);
    const auto& box = domain.box();
    const int n = domain.n();
    std::vector<std::uniform_real_distribution<double>> dist;
    for (int a = 0; a < 2 * n; ++a) dist.emplace_back(box.lo[a], box.hi[a]);
    std::vector<BoundaryPoint> out;
    const long trials = 100L * count;
    for (long t = 0; t < trials && static_cast<int>(out.size()) < count; ++t) {
        CVec z0(n);
        for (int j = 0; j < n; ++j) z0[j] = cplx(dist[2 * j](eng), dist[2 * j + 1](eng));
        if (!box.contains(z0)) continue;
        BoundaryPoint p;
        try {
            p = project_to_boundary(domain, z0);
        } catch (const std::exception&) {
            continue;
        }
        const bool fresh = std::none_of(out.begin(), out.end(), [&](const BoundaryPoint& q) { return (q.z - p.z).norm() < 1e-8; });
        if (fresh) out.push_back(p);
    }
    if (static_cast<int>(out.size()) < count)
        throw std::runtime_error("chart box of '" + domain.name + "' yields too few boundary hits");
    return out;
}

CVec apply_J(const CVec& V)
{
    const auto n = V.size() / 2;
    CVec out(V.size());
    out.head(n) = cplx(0, 1) * V.head(n);
    out.tail(n) = cplx(0, -1) * V.tail(n);
    return out;
}

RVec to_real(const CVec& V)
{
    const auto n = V.size() / 2;
    RVec v(2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        // a d/dz + conj(a) d/dzbar = Re(a) d/dx + Im(a) d/dy
        v[2 * j] = V[j].real();
        v[2 * j + 1] = V[j].imag();
    }
    return v;
}

CVec from_real(const RVec& v)
{
    const auto n = v.size() / 2;
    CVec V(2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        V[j] = cplx(v[2 * j], v[2 * j + 1]);
        V[n + j] = std::conj(V[j]);
    }
    return V;
}

NormalFrame normal_frame(const LocalGeometry& g)
{
    NormalFrame f;
    const int n = g.n;
    f.L = g.Lv();
    f.X = g.Xv();
    f.grad_norm = g.grad_norm();
    const double lnorm = norm(g.metric, lift10(f.L));
    f.nu_c = f.L / lnorm;
    const double xnorm = norm(g.metric, f.X);
    f.nu_r = f.X / xnorm;
    f.dr_norm = 1.0 / xnorm;
    f.J = RMat::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        f.J(2 * j + 1, 2 * j) = 1.0;
        f.J(2 * j, 2 * j + 1) = -1.0;
    }
    return f;
}

NormalFrame normal_frame(const DomainSpec& domain, const CVec& P) { return normal_frame(local_geometry(domain, P, 2)); }

CVec LeviData::direction(int k) const
{
    CVec Z = CVec::Zero(basis.empty() ? 0 : basis[0].size());
    for (std::size_t j = 0; j < basis.size(); ++j) Z += eigenvectors(static_cast<Eigen::Index>(j), k) * basis[j];
    return Z;
}

LeviData levi_data(const LocalGeometry& g, double eps_null)
{
    const int n = g.n;
    const CVec L = g.Lv();
    const CVec nu = L / norm(g.metric, lift10(L));
    // Gram-Schmidt against nu, taking the coordinate directions with largest remainder first
    std::vector<CVec> cand;
    for (int j = 0; j < n; ++j) {
        CVec e = CVec::Zero(n);
        e[j] = 1.0;
        const CVec le = lift10(e);
        cand.push_back(e - inner(g.metric, le, lift10(nu)) * nu);
    }
    std::vector<int> order(n);
    for (int j = 0; j < n; ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return norm(g.metric, lift10(cand[a])) > norm(g.metric, lift10(cand[b])); });
    LeviData d;
    std::vector<CVec> frame{nu};
    for (int idx : order) {
        if (static_cast<int>(d.basis.size()) == n - 1) break;
        CVec v = cand[idx];
        for (const auto& w : frame) v -= inner(g.metric, lift10(v), lift10(w)) * w;
        const double nv = norm(g.metric, lift10(v));
        if (nv < 1e-8) continue;
        v /= nv;
        frame.push_back(v);
        d.basis.push_back(v);
    }
    if (static_cast<int>(d.basis.size()) != n - 1) throw std::runtime_error("Gram-Schmidt breakdown: metric degenerate");
    const int m = n - 1;
    d.levi.resize(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) d.levi(j, k) = (d.basis[j].transpose() * g.levi * d.basis[k].conjugate())(0);
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (d.levi + d.levi.adjoint()));
    d.eigenvalues = es.eigenvalues();
    d.eigenvectors = es.eigenvectors();
    const double top = m > 0 ? d.eigenvalues[m - 1] : 0.0;
    d.cutoff = eps_null * (top + 1.0);
    for (int k = 0; k < m; ++k)
        if (d.eigenvalues[k] < d.cutoff) d.null_basis.push_back(d.direction(k));
    return d;
}

LeviData levi_data(const DomainSpec& domain, const CVec& P, double eps_null)
{
    return levi_data(local_geometry(domain, P, 2), eps_null);
}

cplx null_space_residual(const LocalGeometry& g, const CVec& Z, const CVec& W)
{
    const CVec L = g.Lv();
    const cplx ddbar_zw = (Z.transpose() * g.levi * W.conjugate())(0);
    const cplx alpha = (Z.transpose() * g.levi * L.conjugate())(0);
    const cplx dr_w = apply_d(g.rd, lift10(W));
    return ddbar_zw - alpha * std::conj(dr_w);
}

namespace {

void require_tangent(const LocalGeometry& g, const CVec& V)
{
    const cplx drv = apply_d(g.rd, V);
    const double scale = norm(g.metric, V) * g.grad_norm() + 1e-300;
    if (std::abs(drv) > 1e-7 * scale + 1e-14) throw std::invalid_argument("second fundamental form needs tangent inputs");
}

}  // namespace

cplx second_fundamental_form(const LocalGeometry& g, const CVec& X, const CVec& Y)
{
    require_tangent(g, X);
    require_tangent(g, Y);
    return -hess(g.rd, X, Y) * norm(g.metric, g.Xv());
}

cplx sff_from_frame(const LocalGeometry& g, const CVec& X, const CVec& Y)
{
    require_tangent(g, X);
    require_tangent(g, Y);
    const CVec dx = covariant_derivative(g.metric, X, g.X);
    return -inner(g.metric, dx, conj_vec(Y)) / norm(g.metric, g.Xv());
}

CollarPath transport_along_normal(const DomainSpec& domain, const CVec& P, const CVec& Z0, double delta, int steps)
{
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    if (steps < 1 || !(delta > 0.0)) throw std::invalid_argument("transport needs delta > 0 and steps >= 1");
    const int n = domain.n();
    {
        const LocalGeometry g0 = local_geometry(domain, P, 2);
        if (std::abs(apply_d(g0.rd, lift10(Z0))) > 1e-8 * (Z0.norm() + 1.0)) throw std::invalid_argument("Z0 not tangent");
    }
    auto rhs = [&](const State& y, State& dy, double) {
        CVec z(n), Z(n);
        for (int j = 0; j < n; ++j) {
            z[j] = cplx(y[2 * j], y[2 * j + 1]);
            Z[j] = cplx(y[2 * n + 2 * j], y[2 * n + 2 * j + 1]);
        }
        const LocalGeometry g = local_geometry(domain, z, 2);
        const CVec L = g.Lv();
        const cplx hxz = hess(g.rd, g.Xv(), lift10(Z));
        for (int i = 0; i < n; ++i) {
            dy[2 * i] = 0.5 * L[i].real();
            dy[2 * i + 1] = 0.5 * L[i].imag();
            cplx dz = -hxz * L[i];
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) dz -= 0.5 * g.metric.Gamma(i, j, k) * L[j] * Z[k];
            dy[2 * n + 2 * i] = dz.real();
            dy[2 * n + 2 * i + 1] = dz.imag();
        }
    };
    State y(4 * n);
    for (int j = 0; j < n; ++j) {
        y[2 * j] = P[j].real();
        y[2 * j + 1] = P[j].imag();
        y[2 * n + 2 * j] = Z0[j].real();
        y[2 * n + 2 * j + 1] = Z0[j].imag();
    }
    CollarPath path;
    path.base = P;
    std::vector<double> times;
    for (int k = 0; k <= steps; ++k) times.push_back(-delta * k / steps);
    auto observer = [&](const State& s, double t) {
        CVec z(n), Z(n);
        for (int j = 0; j < n; ++j) {
            z[j] = cplx(s[2 * j], s[2 * j + 1]);
            Z[j] = cplx(s[2 * n + 2 * j], s[2 * n + 2 * j + 1]);
        }
        path.times.push_back(t);
        path.points.push_back(z);
        path.vectors.push_back(Z);
    };
    auto stepper = ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<State>());
    ode::integrate_times(stepper, rhs, y, times.begin(), times.end(), -delta / steps, observer);
    return path;
}

double grad_norm_roughness(const DomainSpec& domain, const CVec& P)
{
    // third derivatives of |dr| by central differences of its order-2 jet, at two step sizes
    const int n = domain.n();
    auto dr_jet = [&](const CVec& z) { return exp(local_geometry(domain, z, 3).log_dr); };
    double worst = 0.0;
    for (int a = 0; a < 2 * n; ++a) {
        auto third = [&](double h) {
            CVec zp = P, zm = P;
            zp[a / 2] += (a % 2 == 0) ? cplx(h, 0) : cplx(0, h);
            zm[a / 2] -= (a % 2 == 0) ? cplx(h, 0) : cplx(0, h);
            const Jet jp = dr_jet(zp), jm = dr_jet(zm);
            return (jp.d(a, a) - jm.d(a, a)).real() / (2 * h);
        };
        const double coarse = third(1e-3), fine = third(5e-4);
        worst = std::max(worst, std::abs(coarse - fine) / (std::abs(fine) + 1.0));
    }
    return worst;
}

namespace {

ChartBox ball_box(int n, double radius)
{
    return ChartBox::cube(n, 1.6 * radius);
}

}  // namespace

DomainSpec ball_domain(int n, double radius)
{
    DomainSpec d;
    d.name = "ball";
    d.r = ScalarField("ball", n, ball_box(n, radius), [radius](std::span<const Jet> x) {
        ComplexCoords c(x);
        Jet s = Jet::constant(static_cast<int>(x.size()), -radius * radius);
        for (const auto& zj : c.z) s += abs2(zj);
        return s;
    });
    d.metric = MetricField::euclidean(n);
    d.interior = CVec::Zero(n);
    return d;
}

DomainSpec ball_distance_domain(int n)
{
    DomainSpec d;
    d.name = "ball_distance";
    d.r = ScalarField("ball_distance", n, ChartBox::cube(n, 1.6), [](std::span<const Jet> x) {
        ComplexCoords c(x);
        Jet s = Jet::constant(static_cast<int>(x.size()), 0.0);
        for (const auto& zj : c.z) s += abs2(zj);
        return sqrt(s) - 1.0;
    });
    d.metric = MetricField::euclidean(n, 0.5);
    d.interior = CVec::Constant(n, cplx(0.1, 0.0));
    return d;
}

DomainSpec ellipsoid_domain(const std::vector<double>& axes)
{
    const int n = static_cast<int>(axes.size());
    for (double a : axes)
        if (!(a > 0.0)) throw std::invalid_argument("ellipsoid axes must be positive");
    DomainSpec d;
    d.name = "ellipsoid";
    const double reach = 1.6 / std::sqrt(*std::min_element(axes.begin(), axes.end()));
    d.r = ScalarField("ellipsoid", n, ChartBox::cube(n, reach), [axes](std::span<const Jet> x) {
        ComplexCoords c(x);
        Jet s = Jet::constant(static_cast<int>(x.size()), -1.0);
        for (std::size_t j = 0; j < axes.size(); ++j) s += axes[j] * abs2(c.z[j]);
        return s;
    });
    d.metric = MetricField::euclidean(n);
    d.interior = CVec::Zero(n);
    return d;
}

namespace {

/// Nearest point p of {r = 0} to y and the signed distance s, y = p + s n(p), in real coordinates.
struct Footpoint {
    RVec p;
    double s = 0.0;
    RMat jacobian;  ///< of (p + s n(p) - y, r(p)) in (p, s)
};

Footpoint footpoint(const DomainSpec& base, const RVec& y)
{
    const int n = base.n(), m = 2 * n;
    auto to_c = [n](const RVec& v) {
        CVec z(n);
        for (int j = 0; j < n; ++j) z[j] = cplx(v[2 * j], v[2 * j + 1]);
        return z;
    };
    const CVec y_c = to_c(y);
    if (!base.box().contains(y_c)) throw std::domain_error("point outside the chart");
    const CVec p0 = project_to_boundary(base, y_c).z;
    Footpoint f;
    f.p = to_real(realify(p0));
    f.s = (y - f.p).norm() * (eval_jet(base.r, y_c, 0).value().real() < 0.0 ? -1.0 : 1.0);
    for (int it = 0; it < 50; ++it) {
        const CVec pc = to_c(f.p);
        if (!base.box().contains(pc)) throw std::domain_error("footpoint left the chart");
        const Jet j = eval_jet(base.r, pc, 2);
        RVec grad(m);
        RMat hess(m, m);
        for (int a = 0; a < m; ++a) {
            grad[a] = j.d(a).real();
            for (int b = 0; b < m; ++b) hess(a, b) = j.d(a, b).real();
        }
        const double gn = grad.norm();
        if (gn < kTolGrad) throw std::domain_error("vanishing gradient at the footpoint");
        const RVec nrm = grad / gn;
        const RMat dn = (RMat::Identity(m, m) - nrm * nrm.transpose()) * hess / gn;
        f.jacobian = RMat::Zero(m + 1, m + 1);
        f.jacobian.topLeftCorner(m, m) = RMat::Identity(m, m) + f.s * dn;
        f.jacobian.topRightCorner(m, 1) = nrm;
        f.jacobian.bottomLeftCorner(1, m) = grad.transpose();
        RVec res(m + 1);
        res.head(m) = f.p + f.s * nrm - y;
        res[m] = j.value().real();
        const RVec step = f.jacobian.fullPivLu().solve(res);
        f.p -= step.head(m);
        f.s -= step[m];
        if (step.norm() <= 1e-12 * (1.0 + y.norm())) {
            // second-order test on the tangent space
            const RMat tangent = (RMat::Identity(m, m) - nrm * nrm.transpose());
            const RMat block = tangent * f.jacobian.topLeftCorner(m, m) * tangent + nrm * nrm.transpose();
            if (Eigen::SelfAdjointEigenSolver<RMat>(0.5 * (block + block.transpose())).eigenvalues().minCoeff() <= 0.0)
                throw std::domain_error("point outside the tubular neighbourhood of the boundary");
            return f;
        }
    }
    throw std::domain_error("footpoint iteration did not converge");
}

/// Order-3 jet of the signed distance at y, in offsets from y.
Jet distance_jet(const DomainSpec& base, const RVec& y)
{
    const int n = base.n(), m = 2 * n;
    const Footpoint f = footpoint(base, y);
    CVec pc(n);
    for (int j = 0; j < n; ++j) pc[j] = cplx(f.p[2 * j], f.p[2 * j + 1]);
    const Jet r = eval_jet(base.r, pc, 3);
    // cubic Taylor model of r at p
    auto model_grad = [&](const std::vector<Jet>& u) {
        std::vector<Jet> g(m);
        for (int i = 0; i < m; ++i) {
            Jet gi = Jet::constant(m, r.d(i).real());
            for (int a = 0; a < m; ++a) {
                gi += r.d(i, a).real() * u[a];
                for (int b = 0; b < m; ++b) gi += 0.5 * r.d(i, a, b).real() * u[a] * u[b];
            }
            g[i] = gi;
        }
        return g;
    };
    auto model_value = [&](const std::vector<Jet>& u) {
        Jet v = Jet::constant(m, r.value().real());
        for (int a = 0; a < m; ++a) {
            v += r.d(a).real() * u[a];
            for (int b = 0; b < m; ++b) {
                v += 0.5 * r.d(a, b).real() * u[a] * u[b];
                for (int c = 0; c < m; ++c) v += (1.0 / 6.0) * r.d(a, b, c).real() * u[a] * u[b] * u[c];
            }
        }
        return v;
    };
    const auto lu = f.jacobian.fullPivLu();
    const RMat jinv = lu.inverse();
    std::vector<Jet> u(m, Jet::constant(m, 0.0));
    Jet s = Jet::constant(m, f.s);
    // chord iterations, one Taylor order per pass
    for (int it = 0; it < 4; ++it) {
        const auto g = model_grad(u);
        Jet gsq = Jet::constant(m, 0.0);
        for (const auto& gi : g) gsq += gi * gi;
        const Jet inv_norm = inv(sqrt(gsq));
        std::vector<Jet> res(m + 1);
        for (int a = 0; a < m; ++a)
            res[a] = (f.p[a] - y[a]) + u[a] + s * g[a] * inv_norm - Jet::variable(m, a, 0.0);
        res[m] = model_value(u);
        for (int a = 0; a <= m; ++a) {
            Jet corr = Jet::constant(m, 0.0);
            for (int b = 0; b <= m; ++b) corr += jinv(a, b) * res[b];
            if (a < m) u[a] -= corr;
            else s -= corr;
        }
    }
    return s;
}

}  // namespace

DomainSpec signed_distance_domain(const DomainSpec& base)
{
    const int n = base.n(), m = 2 * n;
    DomainSpec d;
    d.name = base.name + "_distance";
    DomainSpec shared = base;
    d.r = ScalarField(d.name, n, base.box(), [shared, m](std::span<const Jet> x) {
        RVec y(m);
        for (int a = 0; a < m; ++a) y[a] = x[a].value().real();
        const Jet local = distance_jet(shared, y);
        // compose the local expansion with the argument jets
        std::vector<Jet> u(m);
        for (int a = 0; a < m; ++a) u[a] = x[a] - y[a];
        Jet out = Jet::constant(m, local.value());
        for (int a = 0; a < m; ++a) {
            out += local.d(a) * u[a];
            for (int b = 0; b < m; ++b) {
                out += 0.5 * local.d(a, b) * u[a] * u[b];
                for (int c = 0; c < m; ++c) out += (1.0 / 6.0) * local.d(a, b, c) * u[a] * u[b] * u[c];
            }
        }
        return out;
    });
    d.metric = MetricField::euclidean(n, 0.5);
    d.grad_norm = ScalarField("unit", n, base.box(), [m](std::span<const Jet>) { return Jet::constant(m, 1.0); });
    d.interior = base.interior;
    d.special_points = base.special_points;
    return d;
}

}  // namespace dfi
