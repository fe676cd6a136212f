#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dfi/dfindex.hpp"
#include "support.hpp"

using namespace dfi;
using dfi::testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx I(0.0, 1.0);

CVec c2(cplx a, cplx b) { return (CVec(2) << a, b).finished(); }

const WormParams& pi_params()
{
    static const WormParams p = WormParams::standard(kPi);
    return p;
}

const WormMetric& pi_metric()
{
    static const WormMetric m = worm_metric(pi_params());
    return m;
}

DomainSpec kahler_worm()
{
    DomainSpec d = worm_domain(pi_params());
    d.metric = pi_metric().field;
    return d;
}

/// Single-field basis h(x) = profile(log|z2|^2).
HBasis reduction_field(const WormParams& p, std::function<Jet(const Jet&)> profile)
{
    HBasis b;
    b.id = "single";
    b.fields.emplace_back("h", 2, worm_domain(p).box(), [profile](std::span<const Jet> xs) {
        ComplexCoords c(xs);
        return profile(log(abs2(c.z[1])).real());
    });
    return b;
}

const SiteSet& pi_sites()
{
    static const SiteSet s = collect_sites(worm_domain(pi_params()), worm_reduction_basis(pi_params()), SiteOptions{});
    return s;
}

const CVec kZ = c2(0.0, 1.0);

}  // namespace

TEST(Margins, BoundaryMarginOnAnnulus)
{
    const auto d = worm_domain(pi_params());
    const double eta = 0.45, k = eta / (1 - eta);
    const HBasis tan_ansatz = reduction_field(pi_params(), [k](const Jet& x) { return -log(cos(k * x)) / k; });
    const RVec one = RVec::Ones(1), zero = RVec::Zero(1);
    for (const auto& z : s_gamma_points(pi_params(), 15, 0.95)) {
        const double m2 = std::norm(z[1]);
        EXPECT_NEAR(boundary_margin(d, z, kZ, tan_ansatz, one, eta), 0.0, 1e-9);
        EXPECT_NEAR(boundary_margin(d, z, kZ, tan_ansatz, zero, eta), -k / m2, 1e-10);
        EXPECT_NEAR(boundary_margin(d, z, kZ, tan_ansatz, zero, 0.0), 0.0, 1e-10);
        // unit normalization: scaling Z changes nothing
        EXPECT_NEAR(boundary_margin(d, z, 3.0 * I * kZ, tan_ansatz, zero, eta), -k / m2, 1e-10);
    }
    EXPECT_EQ(boundary_margin(d, s_gamma_points(pi_params(), 1, 0.0)[0], CVec::Zero(2), tan_ansatz, one, eta), 0.0);
    EXPECT_THROW(boundary_margin(d, s_gamma_points(pi_params(), 1, 0.0)[0], kZ, tan_ansatz, one, 1.0), std::invalid_argument);
}

TEST(Margins, GeometricExamples)
{
    const auto d = kahler_worm();
    const double s = pi_metric().s, t = pi_params().t;
    const CVec P = c2(0.0, 1.0);
    const auto g = local_geometry(d, P, 3);
    const auto lv = levi_data(g);
    // raw terms for d/dz2 against the closed forms
    EXPECT_NEAR(geometric_terms(g, lv, kZ).margin(0.4), 1.0 / 6.0, 1e-9);
    EXPECT_NEAR(vectorfield_terms(g, kZ).margin(0.4), 1.0 / 6.0, 1e-9);
    // unit vector |z2| s^{-1/2} d/dz2
    EXPECT_NEAR(geometric_margin(d, P, kZ, 0.4), 1.0 / (6.0 * s), 1e-9);
    EXPECT_NEAR(geometric_margin(d, P, kZ, 1.0 / (t + 1.0)), 0.0, 1e-9);
    EXPECT_EQ(geometric_margin(d, P, CVec::Zero(2), 0.4), 0.0);
    EXPECT_EQ(vectorfield_margin(d, P, CVec::Zero(2), 0.4), 0.0);
    EXPECT_THROW(geometric_margin(d, P, c2(1.0, 0.0), 0.4), std::invalid_argument);
    // strictly pseudoconvex points carry no constraint
    DomainSpec ball = ball_domain(2);
    ball.metric = MetricField::euclidean(2, 0.5);
    EXPECT_EQ(geometric_margin(ball, c2(1.0, 0.0), c2(0.0, 1.0), 0.4), kNoConstraint);
    EXPECT_EQ(vectorfield_margin(ball, c2(0.6, 0.8), c2(0.8, -0.6), 0.4), kNoConstraint);
    EXPECT_EQ(vectorfield_margin(d, c2(std::exp(I * 0.3) - 1.0, 1.0), kZ, 0.4), kNoConstraint);
}

TEST(MarginsProperty, GeometricEqualsVectorField)
{
    for (const auto& d : {worm_domain(pi_params()), kahler_worm()})
        for (const auto& z : d.special_points(30)) {
            const auto g = local_geometry(d, z, 3);
            const auto lv = levi_data(g);
            ASSERT_EQ(lv.null_basis.size(), 1u);
            for (double eta : {0.0, 0.3, 0.45, 0.7}) {
                const double a = geometric_margin(d, z, lv.null_basis[0], eta);
                const double b = vectorfield_margin(d, z, lv.null_basis[0], eta);
                EXPECT_LT(std::abs(a - b), 1e-8 * (1 + std::abs(a)));
            }
            const auto gt = geometric_terms(g, lv, lv.null_basis[0]);
            const auto vt = vectorfield_terms(g, lv.null_basis[0]);
            EXPECT_LT(std::abs(gt.sff_jnu_sq - vt.normal_sq), 1e-8);
            EXPECT_LT(std::abs(gt.sff_sum - vt.tangential), 1e-8);
        }
}

TEST(MarginsProperty, GeometricIsBoundaryMarginWithLogGradient)
{
    // with h = log|dr|, the boundary inequality turns into the curvature one
    Rng rng(51);
    const auto d = kahler_worm();
    for (const auto& z : s_gamma_points(pi_params(), 10, 0.9)) {
        const auto g = local_geometry(d, z, 3);
        const auto lv = levi_data(g);
        const CVec Z = lv.null_basis[0];
        const double eta = rng.uniform(0.0, 0.8), k = eta / (1 - eta);
        cplx dh = 0.0;
        for (int j = 0; j < 2; ++j) {
            const int idx[1] = {j};
            dh += Z[j] * wirtinger_seq(g.log_dr, idx, 2);
        }
        const double ddh = (Z.transpose() * complex_hessian(g.log_dr, 2) * Z.conjugate())(0).real();
        const double bm = (-I * beta_mixed(g, Z, Z)).real() + ddh - k * std::norm(dh - alpha10(g, Z));
        EXPECT_NEAR(bm, geometric_terms(g, lv, Z).margin(eta), 1e-8);
    }
}

TEST(Feasibility, BallHasNoSites)
{
    const auto d = ball_domain(2);
    const HBasis b = polynomial_basis(2, d.box(), 2);
    SiteOptions opt;
    opt.boundary_samples = 50;
    const auto sites = collect_sites(d, b, opt);
    EXPECT_TRUE(sites.sites.empty());
    const auto cert = feasibility_search(sites, b, 0.99);
    EXPECT_TRUE(cert.feasible);
    EXPECT_EQ(cert.c.norm(), 0.0);
    ASSERT_TRUE(cert.strict_margin.has_value());
    EXPECT_GT(*cert.strict_margin, 0.5);
    const auto est = estimate_index(sites, b);
    EXPECT_GE(est.eta_lo, 0.95);
    EXPECT_TRUE(est.capped);
    EXPECT_LT(est.eta_lo, est.eta_hi);
}

TEST(Feasibility, WormReductionBasis)
{
    const HBasis b = worm_reduction_basis(pi_params());
    const auto& sites = pi_sites();
    EXPECT_GE(sites.sites.size(), 64u);
    const auto ok = feasibility_search(sites, b, 0.45);
    EXPECT_TRUE(ok.feasible) << ok.min_margin;
    const auto bad = feasibility_search(sites, b, 0.55, {}, ok.c);
    EXPECT_FALSE(bad.feasible) << bad.min_margin;
    // the certificate's h is a certificate at every smaller eta with no smaller margin
    for (double eta : {0.0, 0.2, 0.4}) {
        double lo = kNoConstraint;
        for (const auto& s : sites.sites) lo = std::min(lo, s.margin(ok.c, eta));
        EXPECT_GE(lo, ok.min_margin);
    }
    const auto j = to_json(ok);
    EXPECT_EQ(j["coeffs"].size(), static_cast<std::size_t>(b.size()));
    EXPECT_EQ(j["n_sites"], ok.n_sites);
    EXPECT_TRUE(j.contains("seed"));
}

TEST(FeasibilityProperty, ScalingInvariance)
{
    const HBasis b = worm_reduction_basis(pi_params());
    for (double factor : {0.25, 3.0}) {
        const HBasis sb = scaled_basis(b, factor);
        SiteOptions opt;
        opt.boundary_samples = 100;
        const auto s1 = collect_sites(worm_domain(pi_params()), b, opt);
        const auto s2 = collect_sites(worm_domain(pi_params()), sb, opt);
        for (double eta : {0.3, 0.45, 0.55, 0.7})
            EXPECT_EQ(feasibility_search(s1, b, eta).feasible, feasibility_search(s2, sb, eta).feasible) << eta << " " << factor;
    }
}

TEST(Feasibility, EmptyBasisRejected)
{
    HBasis empty;
    empty.id = "empty";
    EXPECT_THROW(empty.validate(), std::invalid_argument);
}

TEST(Estimate, WormPiBracketsHalf)
{
    const HBasis b = worm_reduction_basis(pi_params());
    const auto est = estimate_index(pi_sites(), b);
    EXPECT_GE(est.eta_lo, 0.45);
    EXPECT_LE(est.eta_hi, 0.55);
    EXPECT_LE(est.eta_hi - est.eta_lo, 0.01 + 1e-12);
    EXPECT_TRUE(est.warnings.empty());
}

TEST(Interior, BallStrongOkaAndExponent)
{
    const auto d = ball_domain(2);
    const HBasis b = polynomial_basis(2, d.box(), 1);
    const RVec c = RVec::Zero(b.size());
    std::vector<CVec> pts;
    for (const auto& p : sample_boundary(d, 10, 3))
        for (double depth : {1e-4, 1e-3, 1e-2, 1e-1}) pts.push_back(collar_point(d, p.z, depth));
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(eval_jet(d.r, pts[i], 0).value().real(), -std::pow(10.0, -4.0 + i % 4), 1e-12);
    EXPECT_TRUE(interior_check(d, b, c, 0.5, 0.1, pts).positive());
    EXPECT_TRUE(interior_check(d, b, c, 0.0, 0.1, pts).positive());
    EXPECT_THROW(interior_check(d, b, c, 0.5, 0.1, {c2(1.05, 0.0)}), std::domain_error);
}

TEST(InteriorProperty, ExpandedFormMatchesDirectHessian)
{
    // oracle: ddbar of -(-r e^{-h})^eta by jets, scaled by eta^{-1} (-rho)^{-eta}
    Rng rng(52);
    const auto d = ball_domain(2);
    const HBasis b = polynomial_basis(2, d.box(), 2);
    for (int trial = 0; trial < 10; ++trial) {
        RVec c(b.size());
        for (auto& v : c) v = 0.3 * rng.uniform();
        const double eta = rng.uniform(0.1, 0.9);
        const CVec z = collar_point(d, sample_boundary(d, 1, 60 + trial)[0].z, 0.2);
        const auto x = coordinate_jets(z, 2);
        Jet h = Jet::constant(4, 0.0, 2);
        for (int k = 0; k < b.size(); ++k) h += c[k] * b.fields[k].expr()(x);
        const Jet rho = d.r.expr()(x) * exp(-h);
        const Jet phi = -pow(-rho, cplx(eta));
        const CMat H = complex_hessian(phi, 2) / (eta * std::pow(-rho.value().real(), eta));
        Eigen::SelfAdjointEigenSolver<CMat> es(H.conjugate());
        const auto rep = interior_check(d, b, c, eta, 0.0, {z});
        EXPECT_NEAR(rep.min_eig, es.eigenvalues().minCoeff(), 1e-9);
    }
}

TEST(Interior, WormCertificateOnCollar)
{
    const auto d = worm_domain(pi_params());
    const HBasis b = worm_reduction_basis(pi_params());
    const auto cert = feasibility_search(pi_sites(), b, 0.4);
    ASSERT_TRUE(cert.feasible);
    std::vector<CVec> pts;
    std::vector<CVec> bases = d.special_points(32);
    for (const auto& p : sample_boundary(d, 40, 9)) bases.push_back(p.z);
    for (const auto& P : bases)
        for (double depth : {1e-4, 1e-3, 1e-2}) pts.push_back(collar_point(d, P, depth));
    const auto rep = interior_check(d, b, cert.c, 0.4, 0.0, pts);
    EXPECT_TRUE(rep.positive()) << rep.min_eig;
}

TEST(InteriorProperty, CollarPassImpliesBoundaryMargin)
{
    const auto d = worm_domain(pi_params());
    const HBasis b = worm_reduction_basis(pi_params());
    const double eta = 0.4;
    const auto cert = feasibility_search(pi_sites(), b, eta);
    ASSERT_TRUE(cert.feasible);
    for (const auto& P : d.special_points(16)) {
        std::vector<CVec> pts;
        for (double depth : {1e-3, 1e-4, 1e-5}) pts.push_back(collar_point(d, P, depth));
        ASSERT_TRUE(interior_check(d, b, cert.c, eta, 0.0, pts).positive());
        const auto lv = levi_data(d, P);
        ASSERT_EQ(lv.null_basis.size(), 1u);
        EXPECT_GE(boundary_margin(d, P, lv.null_basis[0], b, cert.c, eta), 0.0);
    }
}
