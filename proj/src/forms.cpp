#include "dfi/forms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace dfi {

namespace {

constexpr cplx I(0.0, 1.0);

/// ddbar r(A, B) for A of type (1,0) and B of type (0,1), both complexified.
cplx ddbar(const LocalGeometry& g, const CVec& A, const CVec& B)
{
    const int n = g.n;
    return (A.head(n).transpose() * g.levi * B.tail(n))(0);
}

CVec alpha_components(const LocalGeometry& g) { return g.levi * g.Lv().conjugate(); }

cplx sff_coeff(const LocalGeometry& g, const CVec& X, const CVec& Y) { return -hess(g.rd, X, Y) * norm(g.metric, g.Xv()); }

}  // namespace

cplx alpha(const LocalGeometry& g, const CVec& V)
{
    const int n = g.n;
    const CVec a = alpha_components(g);
    cplx s = 0.0;
    for (int j = 0; j < n; ++j) s += V[j] * a[j] + V[n + j] * std::conj(a[j]);
    return s;
}

cplx alpha10(const LocalGeometry& g, const CVec& Z) { return (Z.transpose() * alpha_components(g))(0); }

cplx alpha_geometric(const LocalGeometry& g, const CVec& Z)
{
    const int n = g.n;
    cplx zlog = 0.0;
    for (int j = 0; j < n; ++j) {
        const int idx[1] = {j};
        zlog += Z[j] * wirtinger_seq(g.log_dr, idx, n);
    }
    const CVec X = g.Xv();
    const double xn = norm(g.metric, X);
    // <sff(Z, JX), X> = coefficient * |X| since sff points along X / |X|
    const cplx s = sff_coeff(g, lift10(Z), apply_J(X));
    return zlog - I * s * xn / (xn * xn);
}

cplx beta_mixed(const LocalGeometry& g, const CVec& Z, const CVec& W)
{
    const auto& m = g.metric;
    const CVec z = lift10(Z), wb = lift01(W);
    const CVec l = lift10(g.Lv()), lb = lift01(g.Lv());
    cplx b = -I * h3(g.rd, g.Xv(), z, wb);
    b += 0.5 * I * ddbar(g, torsion(m, z, l), wb);
    b -= 0.5 * I * ddbar(g, covariant_derivative(m, z, g.L), wb);
    b += 0.5 * I * ddbar(g, z, torsion(m, wb, lb));
    b -= 0.5 * I * ddbar(g, z, covariant_derivative(m, wb, g.Lbar));
    return b;
}

cplx beta_unmixed(const LocalGeometry& g, const CVec& Z, const CVec& W)
{
    const auto& m = g.metric;
    const CVec z = lift10(Z), w = lift10(W);
    return -0.5 * I * (ddbar(g, w, covariant_derivative(m, z, g.Lbar)) - ddbar(g, z, covariant_derivative(m, w, g.Lbar)));
}

cplx beta_mixed_nullspace(const LocalGeometry& g, const CVec& Z, const CVec& W)
{
    const CVec z = lift10(Z), wb = lift01(W);
    const CVec X = g.Xv();
    const cplx az = alpha(g, z), awb = alpha(g, wb);
    return -I * h3(g.rd, X, z, wb) - I * az * awb + I * hess(g.rd, X, z) * awb + I * az * hess(g.rd, X, wb);
}

BetaGeometric beta_geometric(const LocalGeometry& g, const LeviData& levi, const CVec& Z)
{
    const double zn = norm(g.metric, lift10(Z));
    double leak = 0.0;
    for (const auto& w : levi.basis) leak = std::max(leak, std::abs((Z.transpose() * g.levi * w.conjugate())(0)));
    if (leak > 10.0 * std::max(levi.cutoff, 1e-12) * (zn + 1e-300) + 1e-12)
        throw std::invalid_argument("beta_geometric needs a Levi null vector");
    BetaGeometric out;
    out.log_dr_term = -(Z.transpose() * complex_hessian(g.log_dr, g.n) * Z.conjugate())(0).real();
    for (const auto& w : levi.basis) out.sff_sum += std::norm(second_fundamental_form(g, lift10(Z), lift10(w)));
    const CVec L = g.Lv();
    const CVec nu = lift10(L / norm(g.metric, lift10(L)));
    out.curvature = 0.5 * inner(g.metric, curvature(g.metric, lift10(Z), lift01(Z), nu), nu).real();
    return out;
}

namespace {

using GL = boost::math::quadrature::gauss<double, 8>;

double edge_integral(const SubmanifoldPatch& patch, const OneForm& form, bool along_u1, double fixed, double a, double b)
{
    auto f = [&](double s) {
        const double u1 = along_u1 ? s : fixed, u2 = along_u1 ? fixed : s;
        const CVec dz = along_u1 ? patch.du1(u1, u2) : patch.du2(u1, u2);
        return form(patch.point(u1, u2), realify(dz));
    };
    return GL::integrate(f, a, b);
}

}  // namespace

StokesReport stokes_residual(const SubmanifoldPatch& patch, const OneForm& form)
{
    StokesReport rep;
    const double h1 = (patch.u1_hi - patch.u1_lo) / patch.cells1, h2 = (patch.u2_hi - patch.u2_lo) / patch.cells2;
    for (int i = 0; i < patch.cells1; ++i)
        for (int j = 0; j < patch.cells2; ++j) {
            const double a1 = patch.u1_lo + i * h1, b1 = a1 + h1;
            const double a2 = patch.u2_lo + j * h2, b2 = a2 + h2;
            const double circ = edge_integral(patch, form, true, a2, a1, b1) + edge_integral(patch, form, false, b1, a2, b2) -
                                edge_integral(patch, form, true, b2, a1, b1) - edge_integral(patch, form, false, a1, a2, b2);
            rep.max_cell_residual = std::max(rep.max_cell_residual, std::abs(circ) / (h1 * h2));
        }
    return rep;
}

StokesReport pullback_alpha_dclosed(const DomainSpec& domain, const SubmanifoldPatch& patch)
{
    double tangency = 0.0;
    for (int i = 0; i <= patch.cells1; ++i)
        for (int j = 0; j <= patch.cells2; ++j) {
            const double u1 = patch.u1_lo + i * (patch.u1_hi - patch.u1_lo) / patch.cells1;
            const double u2 = patch.u2_lo + j * (patch.u2_hi - patch.u2_lo) / patch.cells2;
            const CVec z = patch.point(u1, u2);
            const LocalGeometry g = local_geometry(domain, z, 2);
            tangency = std::max(tangency, std::abs(g.r.value()));
            for (const CVec& d : {patch.du1(u1, u2), patch.du2(u1, u2)})
                tangency = std::max(tangency, std::abs(apply_d(g.rd, lift10(d))) / (d.norm() + 1e-300));
        }
    if (tangency > 1e-8) throw std::invalid_argument("patch tangency violation");
    double worst_imag = 0.0;
    OneForm form = [&](const CVec& z, const CVec& V) {
        const cplx a = alpha(local_geometry(domain, z, 2), V);
        worst_imag = std::max(worst_imag, std::abs(a.imag()));
        return a.real();
    };
    StokesReport rep = stokes_residual(patch, form);
    rep.max_tangency = tangency;
    rep.max_imag = worst_imag;
    return rep;
}

double loop_period(const DomainSpec& domain, const std::function<CVec(double)>& curve,
                   const std::function<CVec(double)>& tangent, int panels)
{
    const double h = 2.0 * std::numbers::pi / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p)
        total += GL::integrate([&](double th) { return alpha(local_geometry(domain, curve(th), 2), realify(tangent(th))).real(); },
                               p * h, (p + 1) * h);
    return total;
}

double weak_identity_residual(const DomainSpec& domain, const CVec& z, double h)
{
    constexpr int kMaxHalvings = 6;
    constexpr double kStencilAgreement = 1e-9;
    const int n = domain.n();
    // d alpha_j / d(real coordinate a) by a five-point stencil, halving the step until two
    // successive stencils agree
    auto stencil = [&](double step_len) {
        std::vector<CVec> d(2 * n, CVec(n));
        for (int a = 0; a < 2 * n; ++a) {
            const cplx step = (a % 2 == 0) ? cplx(step_len, 0) : cplx(0, step_len);
            auto comp = [&](double k) {
                CVec w = z;
                w[a / 2] += k * step;
                return alpha_components(local_geometry(domain, w, 2));
            };
            d[a] = (-comp(2) + 8.0 * comp(1) - 8.0 * comp(-1) + comp(-2)) / (12.0 * step_len);
        }
        return d;
    };
    std::vector<CVec> dalpha = stencil(h);
    for (int halving = 0; halving < kMaxHalvings; ++halving) {
        h *= 0.5;
        std::vector<CVec> finer = stencil(h);
        double change = 0.0, scale = 1.0;
        for (int a = 0; a < 2 * n; ++a) {
            change = std::max(change, (finer[a] - dalpha[a]).cwiseAbs().maxCoeff());
            scale = std::max(scale, finer[a].cwiseAbs().maxCoeff());
        }
        dalpha = std::move(finer);
        if (change <= kStencilAgreement * scale) break;
    }
    auto dz = [&](int k, int j) { return 0.5 * (dalpha[2 * k][j] - I * dalpha[2 * k + 1][j]); };
    // d_k conj(alpha_j)
    auto dz_conj = [&](int k, int j) { return 0.5 * (std::conj(dalpha[2 * k][j]) - I * std::conj(dalpha[2 * k + 1][j])); };
    auto dzbar = [&](int k, int j) { return 0.5 * (dalpha[2 * k][j] + I * dalpha[2 * k + 1][j]); };
    const LocalGeometry g = local_geometry(domain, z, 3);
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            CVec ej = CVec::Zero(n), ek = CVec::Zero(n);
            ej[j] = 1.0;
            ek[k] = 1.0;
            const cplx unmixed = -0.5 * I * (dz(j, k) - dz(k, j));
            const cplx mixed = -0.5 * I * (dz_conj(j, k) + dzbar(k, j));
            worst = std::max({worst, std::abs(beta_unmixed(g, ej, ek) - unmixed), std::abs(beta_mixed(g, ej, ek) - mixed)});
        }
    return worst;
}

bool CollarReport::holds() const
{
    for (const auto& s : samples) {
        const double slack = 1e-12 * (1.0 + std::abs(s.levi));
        if (s.lower_defect < -slack || s.upper_defect < -slack) return false;
    }
    return true;
}

CollarReport collar_levi_compare(const DomainSpec& domain, const CVec& P, const CVec& Z0, double delta, double epsilon, int steps)
{
    const CollarPath path = transport_along_normal(domain, P, Z0, delta, steps);
    CollarReport rep;
    rep.delta = delta;
    rep.epsilon = epsilon;
    const LocalGeometry base_geo = local_geometry(domain, P, 2);
    const double base = (Z0.transpose() * base_geo.levi * Z0.conjugate())(0).real();
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const CVec& Z = path.vectors[k];
        const LocalGeometry g = local_geometry(domain, path.points[k], 3);
        CollarSample s;
        s.t = path.times[k];
        s.levi = (Z.transpose() * g.levi * Z.conjugate())(0).real();
        const double r = g.r.value().real();
        const double ib = (I * beta_mixed(g, Z, Z)).real();
        const double shift = r * (ib - std::norm(alpha10(g, Z)));
        const double zz = inner(g.metric, lift10(Z), lift10(Z)).real();
        s.lower = (1 - epsilon) * base + shift - epsilon * zz * (-r);
        s.upper = (1 + epsilon) * base + shift + epsilon * zz * (-r);
        s.lower_defect = s.levi - s.lower;
        s.upper_defect = s.upper - s.levi;
        rep.samples.push_back(s);
    }
    return rep;
}

CollarSearch find_collar_delta(const DomainSpec& domain, const std::vector<std::pair<CVec, CVec>>& sites, double epsilon,
                               double delta0, int steps, int halvings)
{
    CollarSearch out;
    double delta = delta0;
    for (int h = 0; h <= halvings; ++h, delta *= 0.5) {
        bool ok = true;
        int checked = 0;
        for (const auto& [P, Z] : sites) {
            const CollarReport rep = collar_levi_compare(domain, P, Z, delta, epsilon, steps);
            checked += static_cast<int>(rep.samples.size()) - 1;
            if (!rep.holds()) {
                ok = false;
                break;
            }
        }
        if (ok) {
            out.delta = delta;
            out.checked = checked;
            out.found = true;
            return out;
        }
    }
    return out;
}

}  // namespace dfi
