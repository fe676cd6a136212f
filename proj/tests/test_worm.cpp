#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dfi/worm.hpp"
#include "support.hpp"

using namespace dfi;
using dfi::testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx I(0.0, 1.0);

CVec c2(cplx a, cplx b) { return (CVec(2) << a, b).finished(); }

double rel(cplx got, cplx want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

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

const CVec kZ = c2(0.0, 1.0);

}  // namespace

TEST(Worm, DefiningFunctionValues)
{
    const auto d = worm_domain(pi_params());
    EXPECT_NEAR(eval_jet(d.r, c2(0.0, 1.0), 0).value().real(), 0.0, 1e-15);
    EXPECT_NEAR(eval_jet(d.r, c2(0.5, 1.0), 0).value().real(), 1.25, 1e-14);
    const auto p = project_to_boundary(d, c2(0.05, 1.0));
    EXPECT_LE(p.residual, kTolBoundary);
    EXPECT_LT(std::abs(p.z[1] - cplx(1.0)), 1e-12);
    EXPECT_LT(std::abs(p.z[0]), 1e-9);
    EXPECT_GT(d.box().min_modulus[1], 0.0);
    WormParams bad = pi_params();
    bad.gamma = 1.0;
    EXPECT_THROW(worm_domain(bad), std::invalid_argument);
    bad = pi_params();
    bad.t = 0.9;
    EXPECT_THROW(worm_domain(bad), std::invalid_argument);
}

TEST(Worm, PseudoconvexOnSamples)
{
    const auto d = worm_domain(pi_params());
    double lowest = 1.0;
    for (const auto& p : sample_boundary(d, 500, 17)) {
        EXPECT_LE(p.residual, kTolBoundary);
        lowest = std::min(lowest, levi_data(d, p.z).eigenvalues.minCoeff());
    }
    EXPECT_GE(lowest, -1e-8);
}

TEST(Worm, ProfileDerivativesAndCut)
{
    const WormProfile prof(pi_params());
    for (double x : {-2.2, -prof.cut - 1e-9, -0.7, 0.0, 0.3, prof.cut - 1e-9, prof.cut + 1e-9, 2.5}) {
        const Jet xj = Jet::variable(1, 0, x);
        const auto F = prof.eval(xj);
        EXPECT_NEAR(F[0].d(0).real(), F[1].value().real(), 1e-9) << x;
        EXPECT_NEAR(F[1].d(0).real(), F[2].value().real(), 1e-9) << x;
    }
    // value and derivatives continuous across the cut
    const auto below = prof.eval(prof.cut - 1e-13), above = prof.eval(prof.cut + 1e-13);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(below[k], above[k], 1e-9 * (1 + std::abs(below[k])));
    // f' = -2 f tan(x/t)
    const double x = 0.4, t = pi_params().t;
    const auto F = prof.eval(x);
    const double f = std::exp(F[0]);
    EXPECT_NEAR(F[1] * f, -2 * f * std::tan(x / t), 1e-14);
}

TEST(Worm, MetricOnAnnulusAndKahler)
{
    const auto& wm = pi_metric();
    EXPECT_GE(wm.min_eig, 1e-3);
    EXPECT_NEAR(pi_params().x_reach(), pi_params().half_length() + 0.1, 1e-12);
    const WormProfile prof(pi_params());
    for (const auto& z : s_gamma_points(pi_params(), 7, 0.9)) {
        const auto m = metric_at(wm.field, z, 1);
        const double f = std::exp(prof.eval(std::log(std::norm(z[1])))[0]);
        EXPECT_NEAR(std::abs(m.g[0].value() - f), 0.0, 1e-14);
        EXPECT_LT(std::abs(m.g[1].value()), 1e-15);
        EXPECT_LT(std::abs(m.g[2].value()), 1e-15);
        EXPECT_NEAR(std::abs(m.g[3].value() - wm.s / std::norm(z[1])), 0.0, 1e-12);
    }
    Rng rng(41);
    const auto box = worm_domain(pi_params()).box();
    for (int k = 0; k < 200; ++k) {
        CVec z(2);
        do z = c2(cplx(rng.uniform(box.lo[0], box.hi[0]), rng.uniform(box.lo[1], box.hi[1])),
                  cplx(rng.uniform(box.lo[2], box.hi[2]), rng.uniform(box.lo[3], box.hi[3])));
        while (!box.contains(z));
        EXPECT_LT(kahler_defect(wm.field, z), 1e-8);
        EXPECT_LT(check_metric(wm.field, z).hermitian_defect, 1e-14 * (1 + metric_at(wm.field, z, 0).G().cwiseAbs().maxCoeff()));
    }
    EXPECT_LT(kahler_defect(MetricField::euclidean(2), c2(0.3, 1.2)), 1e-15);
}

TEST(Worm, ExplicitSmallSIsRejected)
{
    WormParams p = pi_params();
    p.s = 0.5;
    try {
        worm_metric(p);
        FAIL() << "expected a positivity failure";
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("smallest passing s"), std::string::npos);
    }
    p.s = pi_metric().s;
    EXPECT_NO_THROW(worm_metric(p));
}

TEST(Worm, ReferenceExamples)
{
    const WormParams& p = pi_params();
    ASSERT_NEAR(p.t, 1.2, 1e-15);
    const auto ref = s_gamma_reference(p, 1.0);
    EXPECT_NEAR(ref.curvature, 1.6666666666666667, 1e-12);
    EXPECT_NEAR(ref.sff_jnu_sq, 1.0, 1e-15);
    EXPECT_NEAR(ref.margin(0.4), 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(ref.margin(1.0 / (p.t + 1.0)), 0.0, 1e-12);
    EXPECT_EQ(ref.alpha, I);
    EXPECT_THROW(s_gamma_reference(p, std::exp(0.5 * 1.6)), std::invalid_argument);
}

TEST(Worm, EuclideanFrameAndAlphaOnAnnulus)
{
    const auto d = worm_domain(pi_params());
    for (const auto& z : s_gamma_points(pi_params(), 9, 0.9)) {
        const auto g = local_geometry(d, z, 3);
        const double x = std::log(std::norm(z[1]));
        EXPECT_LT((g.Lv() - c2(std::exp(I * x), 0.0)).norm(), 1e-12);
        EXPECT_NEAR(g.grad_norm(), 1.0, 1e-12);
        EXPECT_LT(rel(alpha10(g, kZ), I / z[1]), 1e-12);
        EXPECT_LT(std::abs(beta_mixed(g, kZ, kZ)), 1e-10);
        const auto lv = levi_data(g);
        ASSERT_EQ(lv.null_basis.size(), 1u);
        EXPECT_LT(std::abs(std::abs(lv.null_basis[0][1]) - 1.0), 1e-12);
        EXPECT_LT(std::abs(lv.eigenvalues[0]), 1e-12);
    }
}

TEST(WormProperty, EngineMatchesClosedForms)
{
    const auto d = kahler_worm();
    const double s = pi_metric().s;
    for (const auto& z : s_gamma_points(pi_params(), 50, 0.9)) {
        const auto ref = s_gamma_reference(pi_params(), z[1]);
        const auto g = local_geometry(d, z, 3);
        const auto f = normal_frame(g);
        EXPECT_LT(rel(alpha10(g, kZ), ref.alpha), 1e-6);
        const CVec L = g.Lv();
        const CVec dl = covariant_derivative(g.metric, lift10(kZ), g.L);
        const CVec dbl = covariant_derivative(g.metric, lift01(kZ), g.L);
        EXPECT_LT((dl - ref.d_l_factor * lift10(L)).norm() / std::max(1.0, std::abs(ref.d_l_factor)), 1e-6);
        EXPECT_LT((dbl - ref.dbar_l_factor * lift10(L)).norm(), 1e-6);
        const CVec nu = lift10(f.nu_c);
        const double curv = inner(g.metric, curvature(g.metric, lift10(kZ), lift01(kZ), nu), nu).real();
        EXPECT_LT(std::abs(curv - ref.curvature) / ref.curvature, 1e-6);
        const double sq = std::norm(second_fundamental_form(g, lift10(kZ), apply_J(f.nu_r)));
        EXPECT_LT(std::abs(sq - ref.sff_jnu_sq) / ref.sff_jnu_sq, 1e-6);
        EXPECT_LT(std::abs(second_fundamental_form(g, lift10(kZ), lift10(kZ))), 1e-6);
        // null basis rescales to |z2| s^{-1/2} d/dz2
        const auto lv = levi_data(g);
        ASSERT_EQ(lv.null_basis.size(), 1u);
        EXPECT_NEAR(std::abs(lv.null_basis[0][1]), std::abs(z[1]) / std::sqrt(s), 1e-10);
        const auto bg = beta_geometric(g, lv, kZ);
        EXPECT_LT(std::abs(bg.sff_sum), 1e-10);
        EXPECT_LT(std::abs(bg.curvature - 0.5 * ref.curvature) / ref.curvature, 1e-6);
    }
}

TEST(WormProperty, MetricInvarianceOnNullSpace)
{
    const auto de = worm_domain(pi_params());
    const auto dk = kahler_worm();
    for (const auto& z : s_gamma_points(pi_params(), 25, 0.9)) {
        const auto ge = local_geometry(de, z, 3), gk = local_geometry(dk, z, 3);
        EXPECT_LT(std::abs(alpha10(ge, kZ) - alpha10(gk, kZ)), 1e-6);
        EXPECT_LT(std::abs(beta_mixed(ge, kZ, kZ) - beta_mixed(gk, kZ, kZ)), 1e-6);
    }
}

TEST(WormProperty, BetaConsistencyAtNullSites)
{
    Rng rng(42);
    for (const auto& d : {worm_domain(pi_params()), kahler_worm()}) {
        for (const auto& z : s_gamma_points(pi_params(), 20, 0.95)) {
            const auto g = local_geometry(d, z, 3);
            const auto lv = levi_data(g);
            ASSERT_EQ(lv.null_basis.size(), 1u);
            const CVec Z = lv.null_basis[0] * rng.complex();
            const CVec W = lv.null_basis[0] * rng.complex();
            EXPECT_LT(std::abs(beta_mixed(g, Z, W) - beta_mixed_nullspace(g, Z, W)), 1e-8);
            EXPECT_LT(std::abs(beta_unmixed(g, Z, W)), 1e-8);
            const double direct = (-I * beta_mixed(g, Z, Z)).real();
            EXPECT_LT(std::abs(beta_geometric(g, lv, Z).total() - direct), 1e-7);
            // null-space identity against arbitrary W
            EXPECT_LT(std::abs(null_space_residual(g, Z, rng.cvec(2))), 1e-10);
        }
    }
}

TEST(WormProperty, WeakIdentityOffAnnulus)
{
    const auto d = kahler_worm();
    for (const auto& p : sample_boundary(d, 6, 8)) EXPECT_LT(weak_identity_residual(d, p.z), 1e-5);
}

TEST(WormProperty, LambdaIsolation)
{
    WormParams other = pi_params();
    other.lambda.c = 3.0;
    other.lambda.p = 4;
    const auto d1 = worm_domain(pi_params()), d2 = worm_domain(other);
    for (const auto& z : s_gamma_points(pi_params(), 10, 0.99)) {
        const auto g1 = local_geometry(d1, z, 3), g2 = local_geometry(d2, z, 3);
        EXPECT_EQ(alpha10(g1, kZ), alpha10(g2, kZ));
        EXPECT_EQ(beta_mixed(g1, kZ, kZ), beta_mixed(g2, kZ, kZ));
        EXPECT_EQ(g1.r.max_abs_diff(g2.r), 0.0);
    }
}

TEST(Worm, ClosedButNotExactOnAnnulus)
{
    const auto d = worm_domain(pi_params());
    const auto rep = pullback_alpha_dclosed(d, s_gamma_patch(pi_params(), 0.9, 16));
    EXPECT_LE(rep.max_cell_residual, 1e-6);
    EXPECT_LE(rep.max_imag, 1e-12);
    for (double rho : {1.0, std::exp(0.4), std::exp(-0.6)}) {
        const double period = loop_period(
            d, [rho](double th) { return c2(0.0, std::polar(rho, th)); },
            [rho](double th) { return c2(0.0, I * std::polar(rho, th)); });
        EXPECT_NEAR(period, -4 * kPi, 1e-6);
    }
    SubmanifoldPatch off = s_gamma_patch(pi_params(), 0.9, 4);
    off.point = [](double u1, double u2) { return c2(0.1, std::exp(cplx(0.5 * u1, u2))); };
    EXPECT_THROW(pullback_alpha_dclosed(d, off), std::invalid_argument);
}

TEST(Worm, TransportStaysTangent)
{
    const auto d = kahler_worm();
    const CVec P = s_gamma_points(pi_params(), 1, 0.0)[0];
    const auto g0 = local_geometry(d, P, 2);
    const CVec Z0 = kZ / norm(g0.metric, lift10(kZ));
    const auto path = transport_along_normal(d, P, Z0, 0.05, 10);
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const auto g = local_geometry(d, path.points[k], 2);
        EXPECT_LT(std::abs(apply_d(g.rd, lift10(path.vectors[k]))), 1e-8);
    }
}

TEST(Worm, CollarBoundsAtAnnulus)
{
    const auto d = worm_domain(pi_params());
    std::vector<std::pair<CVec, CVec>> sites;
    for (const auto& z : s_gamma_points(pi_params(), 10, 0.8)) sites.emplace_back(z, kZ);
    const auto found = find_collar_delta(d, sites, 0.1, 0.05, 10);
    EXPECT_TRUE(found.found);
    EXPECT_EQ(found.checked, 100);
    EXPECT_GT(found.delta, 0.0);
}

TEST(Riccati, Examples)
{
    EXPECT_EQ(riccati_feasibility(kPi, 0.45).status, RiccatiStatus::feasible);
    const auto bad = riccati_feasibility(kPi, 0.55);
    EXPECT_EQ(bad.status, RiccatiStatus::infeasible);
    EXPECT_LT(bad.blow_up, kPi / 2);
    EXPECT_THROW(riccati_feasibility(kPi, 1.0), std::invalid_argument);
    EXPECT_THROW(riccati_feasibility(1.0, 0.2), std::invalid_argument);
    // profile tracks tan(k x)
    const auto ok = riccati_feasibility(kPi, 0.4);
    for (const auto& [x, u] : ok.profile) EXPECT_NEAR(u, std::tan(ok.k * x), 1e-8 * (1 + u * u));
}

TEST(RiccatiProperty, ThresholdMatchesIndex)
{
    for (double gamma : {0.6 * kPi, kPi, 1.5 * kPi, 2 * kPi})
        EXPECT_NEAR(riccati_threshold(gamma), kPi / (2 * gamma), 1e-3) << gamma;
    Rng rng(43);
    for (int k = 0; k < 40; ++k) {
        const double gamma = rng.uniform(0.55 * kPi, 2.5 * kPi);
        const double eta = rng.uniform(0.0, 0.95);
        const double thr = kPi / (2 * gamma);
        if (std::abs(eta - thr) < 1e-3) continue;
        EXPECT_EQ(riccati_feasibility(gamma, eta).status, eta < thr ? RiccatiStatus::feasible : RiccatiStatus::infeasible);
    }
}

TEST(WormProperty, WeakIdentityOnRamp)
{
    const auto d = worm_domain(pi_params());
    for (const auto& p : sample_boundary(d, 8, 8)) EXPECT_LT(weak_identity_residual(d, p.z), 1e-5);
}
