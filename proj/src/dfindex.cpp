#include "dfi/dfindex.hpp"

#include <algorithm>
#include <utility>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"

namespace dfi {

namespace {

constexpr cplx I(0.0, 1.0);

void check_eta(double eta)
{
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in [0, 1)");
}

double ratio(double eta) { return eta / (1.0 - eta); }

}  // namespace

void HBasis::validate() const
{
    if (fields.empty()) throw std::invalid_argument("basis '" + id + "' has no fields");
    for (const auto& f : fields)
        if (!f.real_valued()) throw std::invalid_argument("basis field '" + f.name() + "' is not real-valued");
}

HBasis worm_reduction_basis(const WormParams& params, int degree)
{
    params.validate();
    const int n = 2;
    const ChartBox box = worm_domain(params).box();
    const double ell = params.x_reach();
    HBasis b;
    b.id = "worm_reduction(deg=" + std::to_string(degree) + ")";
    auto reduction = [](std::span<const Jet> xs) {
        ComplexCoords c(xs);
        return log(abs2(c.z[1])).real();
    };
    b.fields.emplace_back("1", n, box, [](std::span<const Jet> xs) { return Jet::constant(static_cast<int>(xs.size()), 1.0); });
    for (int k = 1; k <= degree; ++k)
        b.fields.emplace_back("T" + std::to_string(k) + "(x/l)", n, box, [=](std::span<const Jet> xs) {
            const Jet u = reduction(xs) / ell;
            Jet prev = Jet::constant(u.dim(), 1.0, u.order()), cur = u;
            for (int j = 1; j < k; ++j) prev = std::exchange(cur, 2.0 * u * cur - prev);
            return cur;
        });
    b.fields.emplace_back("cos x", n, box, [=](std::span<const Jet> xs) { return cos(reduction(xs)); });
    b.fields.emplace_back("sin x", n, box, [=](std::span<const Jet> xs) { return sin(reduction(xs)); });
    return b;
}

HBasis polynomial_basis(int n, const ChartBox& box, int degree)
{
    HBasis b;
    b.id = "polynomial(deg=" + std::to_string(degree) + ")";
    const int dim = 2 * n;
    std::vector<int> pw(dim, 0);
    // enumerate exponent vectors of total degree 1..degree
    auto emit = [&](auto&& self, int pos, int left) -> void {
        if (pos == dim) {
            int total = 0;
            for (int p : pw) total += p;
            if (total == 0) return;
            std::string name;
            for (int a = 0; a < dim; ++a)
                if (pw[a]) name += (a % 2 ? "y" : "x") + std::to_string(a / 2 + 1) + "^" + std::to_string(pw[a]);
            b.fields.emplace_back(name, n, box, [e = pw](std::span<const Jet> xs) {
                Jet acc = Jet::constant(static_cast<int>(xs.size()), 1.0);
                for (std::size_t a = 0; a < e.size(); ++a)
                    if (e[a]) acc = acc * pow(xs[a], e[a]);
                return acc;
            });
            return;
        }
        for (int p = 0; p <= left; ++p) {
            pw[pos] = p;
            self(self, pos + 1, left - p);
        }
        pw[pos] = 0;
    };
    emit(emit, 0, degree);
    return b;
}

HBasis scaled_basis(const HBasis& basis, double factor)
{
    HBasis b;
    std::ostringstream id;
    id << basis.id << "*" << factor;
    b.id = id.str();
    for (const auto& f : basis.fields) {
        JetExpr e = f.expr();
        b.fields.emplace_back(f.name(), f.complex_dim(), f.box(),
                              [e, factor](std::span<const Jet> xs) { return e(xs) * factor; }, f.real_valued());
    }
    return b;
}

BasisJets basis_jets(const HBasis& basis, const CVec& z)
{
    BasisJets out;
    const auto x = coordinate_jets(z, 2);
    for (const auto& f : basis.fields) {
        const Jet j = f.expr()(x);
        const int n = f.complex_dim();
        CVec d(n);
        for (int a = 0; a < n; ++a) d[a] = wirtinger_partial(j, a, n).value();
        out.dh.push_back(d);
        out.ddbar.push_back(complex_hessian(j, n));
    }
    return out;
}

double SiteData::margin(const RVec& c, double eta) const
{
    const cplx dh = (dphi.transpose() * c.cast<cplx>())(0);
    return minus_i_beta + ddbar_phi.dot(c) - ratio(eta) * std::norm(dh - alpha);
}

SiteData site_data(const LocalGeometry& g, const CVec& Z, const HBasis& basis)
{
    SiteData s;
    s.P = g.z;
    s.Z = Z / norm(g.metric, lift10(Z));
    s.levi = (s.Z.transpose() * g.levi * s.Z.conjugate())(0).real();
    s.minus_i_beta = (-I * beta_mixed(g, s.Z, s.Z)).real();
    s.alpha = alpha10(g, s.Z);
    const BasisJets bj = basis_jets(basis, g.z);
    const int m = basis.size();
    s.ddbar_phi.resize(m);
    s.dphi.resize(m);
    for (int i = 0; i < m; ++i) {
        s.ddbar_phi[i] = (s.Z.transpose() * bj.ddbar[i] * s.Z.conjugate())(0).real();
        s.dphi[i] = (s.Z.transpose() * bj.dh[i])(0);
    }
    return s;
}

double boundary_margin(const DomainSpec& domain, const CVec& P, const CVec& Z, const HBasis& basis, const RVec& c,
                       double eta)
{
    check_eta(eta);
    if (Z.norm() == 0.0) return 0.0;
    return site_data(local_geometry(domain, P, 3), Z, basis).margin(c, eta);
}

double GeometricTerms::margin(double eta) const { return sff_sum + curvature - ratio(eta) * sff_jnu_sq; }
double VectorFieldTerms::margin(double eta) const { return tangential + curvature - ratio(eta) * normal_sq; }

GeometricTerms geometric_terms(const LocalGeometry& g, const LeviData& levi, const CVec& Z)
{
    GeometricTerms t;
    const NormalFrame f = normal_frame(g);
    const CVec z = lift10(Z);
    for (const auto& w : levi.basis) t.sff_sum += std::norm(second_fundamental_form(g, z, lift10(w)));
    const CVec nu = lift10(f.nu_c);
    t.curvature = 0.5 * inner(g.metric, curvature(g.metric, z, lift01(Z), nu), nu).real();
    t.sff_jnu_sq = std::norm(second_fundamental_form(g, z, apply_J(f.nu_r)));
    return t;
}

VectorFieldTerms vectorfield_terms(const LocalGeometry& g, const CVec& Z)
{
    const int n = g.n;
    const auto& m = g.metric;
    // nu_C = L / |L| as a field
    Jet l2 = Jet::constant(g.L[0].dim(), 0.0, g.L[0].order());
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) l2 += g.L[j] * m.g[j * n + k] * g.L[k].conj();
    const Jet scale = pow(l2.real(), cplx(-0.5));
    VectorJets nu(2 * n, Jet::constant(g.L[0].dim(), 0.0, g.L[0].order()));
    for (int j = 0; j < n; ++j) nu[j] = g.L[j] * scale;
    CVec nu0 = CVec::Zero(2 * n);
    for (int j = 0; j < n; ++j) nu0[j] = nu[j].value();
    const CVec D = covariant_derivative(m, lift01(Z), nu);
    const cplx normal = inner(m, D, nu0);
    VectorFieldTerms t;
    const CVec tang = D - normal * nu0;
    t.tangential = 0.5 * std::pow(norm(m, tang), 2);
    t.normal_sq = std::norm(normal);
    t.curvature = 0.5 * inner(m, curvature(m, lift10(Z), lift01(Z), nu0), nu0).real();
    return t;
}

namespace {

/// Shared front end of the two curvature margins; returns the unit null vector or nullopt for a sentinel.
template <class Terms>
double curvature_margin(const DomainSpec& domain, const CVec& P, const CVec& Z, double eta, double eps_null, Terms terms)
{
    check_eta(eta);
    const LocalGeometry g = local_geometry(domain, P, 3);
    const LeviData lv = levi_data(g, eps_null);
    if (lv.null_basis.empty()) return kNoConstraint;
    if (Z.norm() == 0.0) return 0.0;
    const CVec z = lift10(Z);
    CVec proj = CVec::Zero(Z.size());
    for (const auto& w : lv.null_basis) proj += inner(g.metric, z, lift10(w)) * w;
    const double zn = norm(g.metric, z);
    if (norm(g.metric, lift10(Z - proj)) > 1e-6 * zn) throw std::invalid_argument("Z is not in the Levi null space");
    const CVec unit = Z / zn;
    return terms(g, lv, unit).margin(eta);
}

}  // namespace

double geometric_margin(const DomainSpec& domain, const CVec& P, const CVec& Z, double eta, double eps_null)
{
    return curvature_margin(domain, P, Z, eta, eps_null,
                            [](const LocalGeometry& g, const LeviData& lv, const CVec& u) { return geometric_terms(g, lv, u); });
}

double vectorfield_margin(const DomainSpec& domain, const CVec& P, const CVec& Z, double eta, double eps_null)
{
    return curvature_margin(domain, P, Z, eta, eps_null,
                            [](const LocalGeometry& g, const LeviData&, const CVec& u) { return vectorfield_terms(g, u); });
}

SiteSet collect_sites(const DomainSpec& domain, const HBasis& basis, const SiteOptions& opt)
{
    basis.validate();
    std::vector<CVec> pts;
    if (domain.special_points && opt.special_points > 0) pts = domain.special_points(opt.special_points);
    const std::size_t n_special = pts.size();
    if (opt.boundary_samples > 0)
        for (const auto& p : sample_boundary(domain, opt.boundary_samples, opt.seed)) pts.push_back(p.z);

    struct PointLevi {
        RVec eig;
        std::vector<CVec> dirs;
    };
    std::vector<PointLevi> lv(pts.size());
    detail::parallel_for(static_cast<int>(pts.size()), [&](int i) {
        const LeviData d = levi_data(domain, pts[i], 0.0);
        lv[i].eig = d.eigenvalues;
        for (int k = 0; k < d.eigenvalues.size(); ++k) lv[i].dirs.push_back(d.direction(k));
    });

    SiteSet out;
    out.boundary_points = static_cast<int>(pts.size());
    std::vector<double> tops;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (lv[i].eig.size()) {
            out.max_levi = std::max(out.max_levi, lv[i].eig.maxCoeff());
            if (i >= n_special) tops.push_back(lv[i].eig.maxCoeff());
        }
    out.levi_scale = 1.0;
    if (!tops.empty()) {
        auto mid = tops.begin() + tops.size() / 2;
        std::nth_element(tops.begin(), mid, tops.end());
        out.levi_scale = *mid;
    }
    const double cut = opt.cutoff * out.levi_scale;
    std::vector<std::pair<CVec, CVec>> chosen;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool any = false;
        for (int k = 0; k < lv[i].eig.size(); ++k)
            if (lv[i].eig[k] < cut) {
                chosen.emplace_back(pts[i], lv[i].dirs[k]);
                any = true;
            }
        if (!any && i >= n_special && lv[i].eig.size())
            out.min_strict_levi = std::min(out.min_strict_levi, lv[i].eig.minCoeff());
    }
    out.sites.resize(chosen.size());
    detail::parallel_for(static_cast<int>(chosen.size()), [&](int i) {
        out.sites[i] = site_data(local_geometry(domain, chosen[i].first, 3), chosen[i].second, basis);
    });
    return out;
}

namespace {

constexpr double kWhitenCutoff = 1e-9;

struct Barrier {
    const std::vector<SiteData>& sites;
    double k, bound;
    int m;

    /// margin, gradient and Hessian in c for one site
    void site_terms(const SiteData& s, const RVec& c, double& val, RVec& grad, RMat& hess) const
    {
        const cplx u = (s.dphi.transpose() * c.cast<cplx>())(0) - s.alpha;
        val = s.minus_i_beta + s.ddbar_phi.dot(c) - k * std::norm(u);
        grad = s.ddbar_phi - 2 * k * (std::conj(u) * s.dphi).real();
        hess = -2 * k * (s.dphi.conjugate() * s.dphi.transpose()).real();
    }

    double min_margin(const RVec& c) const
    {
        double lo = kNoConstraint;
        for (const auto& s : sites) lo = std::min(lo, s.margin(c, k / (1 + k)));
        return lo;
    }

    /// barrier objective -t/mu - sum log(e_i) - sum log(B^2 - c_j^2); +inf outside the domain
    double value(const RVec& y, double mu) const
    {
        const RVec c = y.head(m);
        const double t = y[m];
        double f = -t / mu;
        for (const auto& s : sites) {
            const double e = s.margin(c, k / (1 + k)) - t;
            if (!(e > 0)) return kNoConstraint;
            f -= std::log(e);
        }
        for (int j = 0; j < m; ++j) {
            const double e = bound * bound - c[j] * c[j];
            if (!(e > 0)) return kNoConstraint;
            f -= std::log(e);
        }
        return f;
    }

    void derivatives(const RVec& y, double mu, RVec& g, RMat& H) const
    {
        const RVec c = y.head(m);
        const double t = y[m];
        g = RVec::Zero(m + 1);
        H = RMat::Zero(m + 1, m + 1);
        g[m] = -1.0 / mu;
        double val;
        RVec sg;
        RMat sh;
        for (const auto& s : sites) {
            site_terms(s, c, val, sg, sh);
            const double e = val - t;
            RVec de(m + 1);
            de.head(m) = sg;
            de[m] = -1.0;
            g -= de / e;
            H += de * de.transpose() / (e * e);
            H.topLeftCorner(m, m) -= sh / e;
        }
        for (int j = 0; j < m; ++j) {
            const double e = bound * bound - c[j] * c[j];
            g[j] += 2 * c[j] / e;
            H(j, j) += 2 * (bound * bound + c[j] * c[j]) / (e * e);
        }
    }
};

}  // namespace

EtaCertificate feasibility_search(const SiteSet& set, const HBasis& basis, double eta, const SearchOptions& opt,
                                  const std::optional<RVec>& warm, std::uint64_t seed)
{
    check_eta(eta);
    basis.validate();
    const int m = basis.size();
    EtaCertificate cert;
    cert.eta = eta;
    cert.basis_id = basis.id;
    cert.seed = seed;
    cert.n_sites = static_cast<int>(set.sites.size());
    cert.c = RVec::Zero(m);
    if (set.sites.empty()) {
        cert.feasible = true;
        cert.min_margin = kNoConstraint;
        cert.strict_margin = set.min_strict_levi;
        return cert;
    }
    for (const auto& s : set.sites)
        if (s.ddbar_phi.size() != m) throw std::invalid_argument("site data was built for a different basis");

    // whiten: y = S V^T c over the stacked site features, null directions dropped
    RMat A(3 * set.sites.size(), m);
    for (std::size_t i = 0; i < set.sites.size(); ++i) {
        A.row(3 * i) = set.sites[i].ddbar_phi.transpose();
        A.row(3 * i + 1) = set.sites[i].dphi.real().transpose();
        A.row(3 * i + 2) = set.sites[i].dphi.imag().transpose();
    }
    const Eigen::JacobiSVD<RMat> svd(A, Eigen::ComputeThinV);
    const RVec sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv[rank] > kWhitenCutoff * sv[0]) ++rank;
    const RMat T = svd.matrixV().leftCols(rank) * sv.head(rank).cwiseInverse().asDiagonal();  // c = T y
    std::vector<SiteData> white(set.sites.size());
    for (std::size_t i = 0; i < white.size(); ++i) {
        white[i] = set.sites[i];
        white[i].ddbar_phi = T.transpose() * set.sites[i].ddbar_phi;
        white[i].dphi = T.transpose().cast<cplx>() * set.sites[i].dphi;
    }

    const Barrier bar{white, ratio(eta), opt.coeff_bound, rank};
    const int cap = opt.max_newton > 0 ? opt.max_newton : std::max(200, 10 * m * cert.n_sites);
    const double n_con = cert.n_sites + 2.0 * rank;
    int steps = 0;
    auto solve = [&](RVec y0) {
        RVec y(rank + 1);
        y.head(rank) = y0;
        y[rank] = bar.min_margin(y0) - 1.0;
        int used = 0;
        RVec g;
        RMat H;
        for (double mu = 1.0; mu * n_con > opt.tol; mu *= 0.2) {
            for (int it = 0; it < 100; ++it) {
                if (++used > cap) throw std::runtime_error("feasibility search hit its iteration cap");
                bar.derivatives(y, mu, g, H);
                const RVec dy = H.ldlt().solve(-g);
                const double dec = -g.dot(dy);
                if (!(dec > 1e-12)) break;
                const double f0 = bar.value(y, mu);
                double s = 1.0;
                while (s > 1e-12 && !(bar.value(y + s * dy, mu) <= f0 - 0.25 * s * dec)) s *= 0.5;
                if (s <= 1e-12) break;
                y += s * dy;
                if (dec < 1e-10) break;
            }
        }
        steps += used;
        return RVec(y.head(rank));
    };
    // a cold start always runs; a warm start competes with it
    RVec y = solve(RVec::Zero(rank));
    if (warm) {
        const RVec w = (sv.head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose() * *warm)
                           .cwiseMax(-0.9 * opt.coeff_bound)
                           .cwiseMin(0.9 * opt.coeff_bound);
        const RVec yw = solve(w);
        if (bar.min_margin(yw) > bar.min_margin(y)) y = yw;
    }
    cert.newton_steps = steps;
    cert.c = T * y;
    cert.min_margin = std::numeric_limits<double>::infinity();
    for (const auto& site : set.sites) cert.min_margin = std::min(cert.min_margin, site.margin(cert.c, eta));
    cert.feasible = cert.min_margin >= opt.c_floor;
    return cert;
}

DFEstimate estimate_index(const SiteSet& sites, const HBasis& basis, const EstimateOptions& opt, std::uint64_t seed)
{
    if (!(opt.cap > 0 && opt.cap < 1) || !(opt.tol_eta > 0)) throw std::invalid_argument("bad estimate options");
    DFEstimate est;
    std::optional<RVec> warm;
    auto run = [&](double eta) {
        EtaCertificate c = feasibility_search(sites, basis, eta, opt.search, warm, seed);
        if (c.feasible) warm = c.c;
        est.grid.push_back({eta, c.feasible, c.min_margin});
        est.certificates.push_back(c);
        return c;
    };
    auto zero = run(0.0);
    if (!zero.feasible) {
        est.eta_lo = 0.0;
        est.eta_hi = 0.0;
        est.warnings.push_back("infeasible already at eta = 0 for this basis and sample set");
        return est;
    }
    est.best = zero;
    auto top = run(opt.cap);
    if (top.feasible) {
        est.eta_lo = opt.cap;
        est.eta_hi = 1.0;
        est.capped = true;
        est.best = top;
        return est;
    }
    double lo = 0.0, hi = opt.cap;
    while (hi - lo > opt.tol_eta) {
        const double mid = 0.5 * (lo + hi);
        auto c = run(mid);
        if (c.feasible) {
            lo = mid;
            est.best = c;
        } else {
            hi = mid;
        }
    }
    est.eta_lo = lo;
    est.eta_hi = hi;
    auto sorted = est.grid;
    std::sort(sorted.begin(), sorted.end(), [](const EtaRecord& a, const EtaRecord& b) { return a.eta < b.eta; });
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (!sorted[i].feasible && sorted[i + 1].feasible) {
            std::ostringstream w;
            w << "non-monotone feasibility: eta " << sorted[i].eta << " fails but " << sorted[i + 1].eta << " passes";
            est.warnings.push_back(w.str());
        }
    return est;
}

CVec collar_point(const DomainSpec& domain, const CVec& P, double depth)
{
    const int n = domain.n();
    const Jet r0 = eval_jet(domain.r, P, 1);
    CVec dir(n);
    for (int j = 0; j < n; ++j) dir[j] = std::conj(wirtinger_partial(r0, j, n).value());
    dir /= -dir.norm();
    double tau = 0.0;
    for (int it = 0; it < 50; ++it) {
        const CVec z = P + tau * dir;
        if (!domain.box().contains(z)) throw std::domain_error("collar_point: normal line leaves the chart");
        const Jet r = eval_jet(domain.r, z, 1);
        const double f = r.value().real() + depth;
        cplx dr = 0.0;
        for (int j = 0; j < n; ++j) dr += wirtinger_partial(r, j, n).value() * dir[j];
        const double slope = 2 * dr.real();
        if (std::abs(f) <= 1e-10 * depth) return z;
        if (slope == 0.0) throw std::domain_error("collar_point: flat defining function");
        const double step = f / slope;
        tau -= step;
        if (std::abs(step) <= 1e-15 * (1 + std::abs(tau))) return P + tau * dir;
    }
    throw std::domain_error("collar_point: depth not reached along the normal line");
}

InteriorReport interior_check(const DomainSpec& domain, const HBasis& basis, const RVec& c, double eta, double C,
                              const std::vector<CVec>& points)
{
    check_eta(eta);
    const int n = domain.n();
    InteriorReport rep;
    rep.samples.resize(points.size());
    detail::parallel_for(static_cast<int>(points.size()), [&](int i) {
        const CVec& z = points[i];
        const Jet r = eval_jet(domain.r, z, 2);
        const double rv = r.value().real();
        if (rv >= 0.0) throw std::domain_error("interior_check: sample with rho >= 0");
        const double d = -rv;
        CVec dr(n);
        for (int j = 0; j < n; ++j) dr[j] = wirtinger_partial(r, j, n).value();
        const CMat R = complex_hessian(r, n);
        const BasisJets bj = basis_jets(basis, z);
        CVec dh = CVec::Zero(n);
        CMat Hh = CMat::Zero(n, n);
        for (int k = 0; k < basis.size(); ++k) {
            dh += c[k] * bj.dh[k];
            Hh += c[k] * bj.ddbar[k];
        }
        const CMat M = R / d + (1 - eta) / (d * d) * dr * dr.adjoint() - eta / d * (dh * dr.adjoint() + dr * dh.adjoint()) -
                       eta * dh * dh.adjoint() + Hh;
        const MetricAt m = metric_at(domain.metric, z, 0);
        const CMat G = m.G();
        const CMat A = M - C * G;
        // Z^T A conj(Z) = v^H A v with v = conj(Z)
        const Eigen::LLT<CMat> llt(G);
        const CMat Li = llt.matrixL().solve(CMat::Identity(n, n));
        const CMat K = Li * A * Li.adjoint();
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (K + K.adjoint()));
        rep.samples[i] = {z, d, es.eigenvalues().minCoeff()};
    });
    for (const auto& s : rep.samples) rep.min_eig = std::min(rep.min_eig, s.min_eig);
    return rep;
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const EtaCertificate& cert)
{
    nlohmann::json j;
    j["eta"] = cert.eta;
    j["basis_id"] = cert.basis_id;
    j["coeffs"] = std::vector<double>(cert.c.data(), cert.c.data() + cert.c.size());
    j["min_margin"] = number_or_null(cert.min_margin);
    j["n_sites"] = cert.n_sites;
    j["seed"] = cert.seed;
    j["feasible"] = cert.feasible;
    if (cert.strict_margin) j["strict_margin"] = number_or_null(*cert.strict_margin);
    return j;
}

nlohmann::json to_json(const DFEstimate& est)
{
    nlohmann::json j;
    j["eta_lo"] = est.eta_lo;
    j["eta_hi"] = est.eta_hi;
    j["capped"] = est.capped;
    j["grid"] = nlohmann::json::array();
    for (const auto& r : est.grid) j["grid"].push_back({{"eta", r.eta}, {"feasible", r.feasible}, {"min_margin", number_or_null(r.min_margin)}});
    j["certificates"] = nlohmann::json::array();
    for (const auto& c : est.certificates) j["certificates"].push_back(to_json(c));
    j["warnings"] = est.warnings;
    return j;
}

}  // namespace dfi
