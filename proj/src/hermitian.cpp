#include "dfi/hermitian.hpp"

#include <cmath>
#include <stdexcept>

namespace dfi {

namespace {

/// Gauss-Jordan inverse of an n*n jet matrix, pivoting on the value.
std::vector<Jet> jet_inverse(const std::vector<Jet>& a, int n)
{
    std::vector<Jet> m = a;
    const int dim = a.front().dim();
    const int ord = a.front().order();
    std::vector<Jet> r(n * n, Jet::constant(dim, 0.0, ord));
    for (int i = 0; i < n; ++i) r[i * n + i] = Jet::constant(dim, 1.0, ord);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int i = col + 1; i < n; ++i)
            if (std::abs(m[i * n + col].value()) > std::abs(m[piv * n + col].value())) piv = i;
        if (std::abs(m[piv * n + col].value()) < 1e-300) throw std::domain_error("singular metric");
        if (piv != col)
            for (int k = 0; k < n; ++k) {
                std::swap(m[piv * n + k], m[col * n + k]);
                std::swap(r[piv * n + k], r[col * n + k]);
            }
        const Jet p = inv(m[col * n + col]);
        for (int k = 0; k < n; ++k) {
            m[col * n + k] = m[col * n + k] * p;
            r[col * n + k] = r[col * n + k] * p;
        }
        for (int i = 0; i < n; ++i) {
            if (i == col) continue;
            const Jet f = m[i * n + col];
            for (int k = 0; k < n; ++k) {
                m[i * n + k] -= f * m[col * n + k];
                r[i * n + k] -= f * r[col * n + k];
            }
        }
    }
    return r;
}

}  // namespace

MetricField MetricField::euclidean(int n, double scale)
{
    MetricField m;
    m.name = scale == 1.0 ? "euclidean" : "euclidean*" + std::to_string(scale);
    m.n = n;
    m.entries = [n, scale](std::span<const Jet> x) {
        std::vector<Jet> g(n * n, Jet::constant(static_cast<int>(x.size()), 0.0));
        for (int j = 0; j < n; ++j) g[j * n + j] = Jet::constant(static_cast<int>(x.size()), scale);
        return g;
    };
    return m;
}

MetricField MetricField::conformal(int n, JetExpr u, std::string name)
{
    MetricField m;
    m.name = std::move(name);
    m.n = n;
    m.entries = [n, u = std::move(u)](std::span<const Jet> x) {
        const Jet e = exp(u(x));
        std::vector<Jet> g(n * n, Jet::constant(static_cast<int>(x.size()), 0.0));
        for (int j = 0; j < n; ++j) g[j * n + j] = e;
        return g;
    };
    return m;
}

CVec lift10(const CVec& Z)
{
    const auto n = Z.size();
    CVec v = CVec::Zero(2 * n);
    v.head(n) = Z;
    return v;
}

CVec lift01(const CVec& W)
{
    const auto n = W.size();
    CVec v = CVec::Zero(2 * n);
    v.tail(n) = W.conjugate();
    return v;
}

CVec realify(const CVec& Z)
{
    const auto n = Z.size();
    CVec v(2 * n);
    v.head(n) = Z;
    v.tail(n) = Z.conjugate();
    return v;
}

CVec conj_vec(const CVec& V)
{
    const auto n = V.size() / 2;
    CVec v(2 * n);
    v.head(n) = V.tail(n).conjugate();
    v.tail(n) = V.head(n).conjugate();
    return v;
}

CVec part10(const CVec& V) { return V.head(V.size() / 2); }

VectorJets constant_field(const CVec& V, int dim, int order)
{
    VectorJets f;
    f.reserve(V.size());
    for (auto c : V) f.push_back(Jet::constant(dim, c, order));
    return f;
}

CMat MetricAt::G() const
{
    CMat M(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) M(j, k) = g[j * n + k].value();
    return M;
}

CMat MetricAt::Ginv() const
{
    CMat M(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) M(j, k) = ginv[j * n + k].value();
    return M;
}

MetricAt metric_at(const MetricField& metric, const CVec& z, int order)
{
    MetricAt m;
    m.n = metric.n;
    m.z = z;
    const int n = m.n;
    const int dim = 2 * n;
    auto x = coordinate_jets(z, order);
    m.g = metric.entries(x);
    if (static_cast<int>(m.g.size()) != n * n) throw std::invalid_argument("metric entry count mismatch");
    for (auto& e : m.g) {
        if (e.dim() < dim) e += Jet::constant(dim, 0.0);
        e = e.truncated(order);
    }
    m.ginv = jet_inverse(m.g, n);

    // Gamma^i_{jk} = sum_l d_j g_{k lbar} ginv[l][i]
    const int go = std::max(order - 1, 0);
    m.gamma.assign(dim * dim * dim, Jet::constant(dim, 0.0, go));
    if (order >= 1) {
        std::vector<Jet> dg(n * n * n);
        for (int j = 0; j < n; ++j)
            for (int kl = 0; kl < n * n; ++kl) dg[j * n * n + kl] = wirtinger_partial(m.g[kl], j, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    Jet s = Jet::constant(dim, 0.0, go);
                    for (int l = 0; l < n; ++l) s += dg[j * n * n + k * n + l] * m.ginv[l * n + i].truncated(go);
                    m.gamma[(i * dim + j) * dim + k] = s;
                    m.gamma[((i + n) * dim + (j + n)) * dim + (k + n)] = s.conj();
                }
    }
    if (order >= 2) {
        m.dgamma.assign(dim * dim * dim * dim, 0.0);
        for (int c = 0; c < dim; ++c)
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b) {
                    const bool hol = c < n && a < n && b < n;
                    const bool anti = c >= n && a >= n && b >= n;
                    if (!hol && !anti) continue;
                    const Jet& gj = m.gamma[(c * dim + a) * dim + b];
                    for (int d = 0; d < dim; ++d) {
                        const int idx[1] = {d};
                        m.dgamma[((d * dim + c) * dim + a) * dim + b] = wirtinger_seq(gj, idx, n);
                    }
                }
    }
    return m;
}

ChernSymbols chern_symbols(const MetricField& metric, const CVec& z)
{
    const MetricAt m = metric_at(metric, z, 1);
    ChernSymbols cs;
    cs.z = z;
    cs.n = m.n;
    const int n = m.n;
    cs.gamma.resize(n * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) cs.gamma[(i * n + j) * n + k] = m.Gamma(i, j, k);
    return cs;
}

double metric_compatibility_residual(const MetricAt& m)
{
    const int n = m.n;
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                const int idx[1] = {j};
                cplx lhs = wirtinger_seq(m.g[k * n + l], idx, n);
                cplx rhs = 0.0;
                for (int i = 0; i < n; ++i) rhs += m.Gamma(i, j, k) * m.g[i * n + l].value();
                worst = std::max(worst, std::abs(lhs - rhs));
            }
    return worst;
}

cplx inner(const MetricAt& m, const CVec& V, const CVec& W)
{
    const int n = m.n;
    cplx s = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const cplx g = m.g[j * n + k].value();
            s += g * V[j] * std::conj(W[k]) + std::conj(g) * V[n + j] * std::conj(W[n + k]);
        }
    return s;
}

double norm(const MetricAt& m, const CVec& V) { return std::sqrt(std::max(inner(m, V, V).real(), 0.0)); }

CVec covariant_derivative(const MetricAt& m, const CVec& dir, const VectorJets& V)
{
    const int dim = m.dim();
    CVec out = CVec::Zero(dim);
    for (int c = 0; c < dim; ++c) {
        if (V[c].order() < 1) throw std::invalid_argument("vector field needs order-1 jets");
        for (int a = 0; a < dim; ++a) {
            if (dir[a] == 0.0) continue;
            const int idx[1] = {a};
            cplx s = wirtinger_seq(V[c], idx, m.n);
            for (int b = 0; b < dim; ++b) s += m.Gamma(c, a, b) * V[b].value();
            out[c] += dir[a] * s;
        }
    }
    return out;
}

VectorJets covariant_derivative_jets(const MetricAt& m, const VectorJets& dir, const VectorJets& V)
{
    const int dim = m.dim();
    VectorJets out;
    out.reserve(dim);
    for (int c = 0; c < dim; ++c) {
        Jet acc = Jet::constant(dim, 0.0);
        for (int a = 0; a < dim; ++a) {
            Jet s = wirtinger_partial(V[c], a, m.n);
            for (int b = 0; b < dim; ++b) s += m.gamma[(c * dim + a) * dim + b] * V[b];
            acc += dir[a] * s;
        }
        out.push_back(acc);
    }
    return out;
}

CVec torsion(const MetricAt& m, const CVec& X, const CVec& Y)
{
    const int dim = m.dim();
    CVec out = CVec::Zero(dim);
    for (int c = 0; c < dim; ++c)
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) out[c] += (m.Gamma(c, a, b) - m.Gamma(c, b, a)) * X[a] * Y[b];
    return out;
}

CVec torsion(const MetricAt& m, const VectorJets& X, const VectorJets& Y)
{
    const int dim = m.dim();
    CVec xv(dim), yv(dim);
    for (int a = 0; a < dim; ++a) {
        xv[a] = X[a].value();
        yv[a] = Y[a].value();
    }
    CVec out = covariant_derivative(m, xv, Y) - covariant_derivative(m, yv, X);
    for (int c = 0; c < dim; ++c)
        for (int a = 0; a < dim; ++a) {
            const int idx[1] = {a};
            out[c] -= xv[a] * wirtinger_seq(Y[c], idx, m.n) - yv[a] * wirtinger_seq(X[c], idx, m.n);
        }
    return out;
}

CVec curvature(const MetricAt& m, const CVec& X, const CVec& Y, const CVec& V)
{
    if (m.dgamma.empty()) throw std::invalid_argument("curvature needs order-2 metric jets");
    const int dim = m.dim();
    CVec out = CVec::Zero(dim);
    for (int a = 0; a < dim; ++a) {
        if (X[a] == 0.0) continue;
        for (int b = 0; b < dim; ++b) {
            const cplx xy = X[a] * Y[b];
            if (xy == 0.0) continue;
            for (int c = 0; c < dim; ++c) {
                const cplx w = xy * V[c];
                if (w == 0.0) continue;
                for (int d = 0; d < dim; ++d) {
                    cplx r = m.dGamma(a, d, b, c) - m.dGamma(b, d, a, c);
                    for (int e = 0; e < dim; ++e)
                        r += m.Gamma(e, b, c) * m.Gamma(d, a, e) - m.Gamma(e, a, c) * m.Gamma(d, b, e);
                    out[d] += w * r;
                }
            }
        }
    }
    return out;
}

ScalarDerivs scalar_derivs(const MetricAt& m, const Jet& f)
{
    const int n = m.n, dim = 2 * n;
    if (f.order() < 2) throw std::invalid_argument("scalar_derivs needs order-2 jets");
    ScalarDerivs s;
    s.n = n;
    s.df.resize(dim);
    std::vector<Jet> d1(dim);
    for (int a = 0; a < dim; ++a) {
        d1[a] = wirtinger_partial(f, a, n);
        s.df[a] = d1[a].value();
    }
    std::vector<Jet> H(dim * dim);
    s.hess.resize(dim, dim);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
            Jet h = wirtinger_partial(d1[b], a, n);
            for (int c = 0; c < dim; ++c) h -= m.gamma[(c * dim + a) * dim + b] * d1[c];
            H[a * dim + b] = h;
            s.hess(a, b) = h.value();
        }
    if (f.order() >= 3 && !m.dgamma.empty()) {
        s.d3.assign(dim * dim * dim, 0.0);
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b)
                for (int c = 0; c < dim; ++c) {
                    const int idx[1] = {a};
                    cplx v = wirtinger_seq(H[b * dim + c], idx, n);
                    for (int d = 0; d < dim; ++d)
                        v -= m.Gamma(d, a, b) * s.hess(d, c) + m.Gamma(d, a, c) * s.hess(b, d);
                    s.d3[(a * dim + b) * dim + c] = v;
                }
    }
    return s;
}

cplx hess(const ScalarDerivs& s, const CVec& X, const CVec& Y) { return X.transpose() * s.hess * Y; }

cplx h3(const ScalarDerivs& s, const CVec& X1, const CVec& X2, const CVec& X3)
{
    if (s.d3.empty()) throw std::invalid_argument("H3 needs order-3 jets");
    const int dim = 2 * s.n;
    cplx v = 0.0;
    for (int a = 0; a < dim; ++a) {
        if (X1[a] == 0.0) continue;
        for (int b = 0; b < dim; ++b) {
            const cplx w = X1[a] * X2[b];
            if (w == 0.0) continue;
            for (int c = 0; c < dim; ++c) v += w * X3[c] * s.third(a, b, c);
        }
    }
    return v;
}

cplx apply_d(const ScalarDerivs& s, const CVec& V) { return (s.df.transpose() * V)(0); }

namespace {

Jet directional(const Jet& f, const VectorJets& X, int n)
{
    Jet acc = Jet::constant(f.dim(), 0.0);
    for (int a = 0; a < 2 * n; ++a) acc += X[a] * wirtinger_partial(f, a, n);
    return acc;
}

cplx directional_value(const Jet& f, const VectorJets& X, int n)
{
    cplx acc = 0.0;
    for (int a = 0; a < 2 * n; ++a) {
        const int idx[1] = {a};
        acc += X[a].value() * wirtinger_seq(f, idx, n);
    }
    return acc;
}

Jet hess_jet(const MetricAt& m, const Jet& f, const VectorJets& X, const VectorJets& Y)
{
    const int n = m.n;
    const Jet yf = directional(f, Y, n);
    const VectorJets nxy = covariant_derivative_jets(m, X, Y);
    return directional(yf, X, n) - directional(f, nxy, n);
}

}  // namespace

cplx hess_op(const MetricAt& m, const Jet& f, const VectorJets& X, const VectorJets& Y)
{
    const int n = m.n;
    const Jet yf = directional(f, Y, n);
    cplx xv = directional_value(yf, X, n);
    CVec xvals(2 * n);
    for (int a = 0; a < 2 * n; ++a) xvals[a] = X[a].value();
    const CVec nxy = covariant_derivative(m, xvals, Y);
    for (int c = 0; c < 2 * n; ++c) {
        const int idx[1] = {c};
        xv -= nxy[c] * wirtinger_seq(f, idx, n);
    }
    return xv;
}

cplx h3_op(const MetricAt& m, const Jet& f, const VectorJets& X1, const VectorJets& X2, const VectorJets& X3)
{
    const int n = m.n;
    const Jet h23 = hess_jet(m, f, X2, X3);
    const cplx first = directional_value(h23, X1, n);
    const VectorJets n12 = covariant_derivative_jets(m, X1, X2);
    const VectorJets n13 = covariant_derivative_jets(m, X1, X3);
    return first - hess_op(m, f, n12, X3) - hess_op(m, f, X2, n13);
}

double H3Residuals::max() const { return std::max({first_unmixed, first_mixed, second_mixed, third_unmixed, cycle}); }

H3Residuals h3_identity_residuals(const MetricAt& m, const ScalarDerivs& f, const CVec& L, const CVec& Z, const CVec& W)
{
    const CVec l = lift10(L), z = lift10(Z);
    const CVec lb = lift01(L), wb = lift01(W);
    const CVec x = 0.5 * (l + lb);
    H3Residuals r;
    r.first_unmixed = std::abs(h3(f, l, z, wb) - h3(f, z, l, wb) + hess(f, torsion(m, l, z), wb));
    r.first_mixed = std::abs(h3(f, wb, z, l) - h3(f, z, wb, l) + apply_d(f, curvature(m, wb, z, l)));
    r.second_mixed = std::abs(h3(f, l, z, wb) - h3(f, l, wb, z));
    r.third_unmixed = std::abs(h3(f, z, wb, l) - h3(f, l, wb, z) + hess(f, wb, torsion(m, z, l)));
    const cplx rhs = -0.5 * (hess(f, wb, torsion(m, z, l)) + apply_d(f, curvature(m, z, wb, lb)) +
                             hess(f, z, torsion(m, wb, lb)));
    r.cycle = std::abs(h3(f, z, wb, x) - h3(f, x, z, wb) - rhs);
    return r;
}

MetricCheck check_metric(const MetricField& metric, const CVec& z)
{
    auto x = coordinate_jets(z, 0);
    auto g = metric.entries(x);
    const int n = metric.n;
    CMat G(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) G(j, k) = g[j * n + k].value();
    MetricCheck c;
    c.hermitian_defect = (G - G.adjoint()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (G + G.adjoint()));
    c.min_eig = es.eigenvalues().minCoeff();
    return c;
}

}  // namespace dfi
