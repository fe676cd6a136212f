#include <gtest/gtest.h>

#include <cmath>

#include "dfi/forms.hpp"
#include "support.hpp"

using namespace dfi;
using dfi::testing::Rng;

namespace {

CVec c2(cplx a, cplx b)
{
    CVec z(2);
    z << a, b;
    return z;
}

/// Real tangent vector from a random real vector: V - dr(V) X.
CVec tangent_real(const LocalGeometry& g, Rng& rng)
{
    RVec v(2 * g.n);
    for (auto& x : v) x = rng.uniform();
    const CVec V = from_real(v);
    return V - apply_d(g.rd, V) * g.Xv();
}

CVec tangent10(const LocalGeometry& g, Rng& rng)
{
    const CVec Z = rng.cvec(g.n);
    return Z - apply_d(g.rd, lift10(Z)) * g.Lv();
}

DomainSpec ball_with_metric(MetricField m)
{
    DomainSpec d = ball_domain(2);
    d.metric = std::move(m);
    return d;
}

}  // namespace

TEST(Boundary, BallProjectionIsRadial)
{
    const auto d = ball_domain(2);
    const auto p = project_to_boundary(d, c2(1.1, 0.0));
    EXPECT_LT((p.z - c2(1.0, 0.0)).norm(), 1e-10);
    EXPECT_LE(p.residual, kTolBoundary);
    // displacement bound 2|r|/|dr| with |dr| the Euclidean gradient length
    const auto q = project_to_boundary(d, c2(cplx(0.6, 0.2), cplx(0.1, -0.7)));
    const CVec z0 = c2(cplx(0.6, 0.2), cplx(0.1, -0.7));
    const double r0 = z0.squaredNorm() - 1.0;
    EXPECT_LE((q.z - z0).norm(), 2 * std::abs(r0) / (2 * z0.norm()));
}

TEST(Boundary, ProjectionErrors)
{
    const auto d = ball_domain(2);
    EXPECT_THROW(project_to_boundary(d, CVec::Zero(2)), std::domain_error);
    EXPECT_THROW(project_to_boundary(d, c2(5.0, 0.0)), std::out_of_range);
}

TEST(Boundary, SamplingDeterministicDistinct)
{
    const auto d = ball_domain(2);
    const auto a = sample_boundary(d, 3, 7), b = sample_boundary(d, 3, 7);
    ASSERT_EQ(a.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(a[i].z.norm(), 1.0, 1e-10);
        EXPECT_EQ((a[i].z - b[i].z).norm(), 0.0);
        for (int j = 0; j < i; ++j) EXPECT_GT((a[i].z - a[j].z).norm(), 1e-8);
    }
    EXPECT_THROW(sample_boundary(d, 0, 1), std::invalid_argument);
    DomainSpec far = d;
    far.r = ScalarField("far", 2, ChartBox::cube(2, 1.6), [](std::span<const Jet> x) {
        ComplexCoords c(x);
        return abs2(c.z[0]) + abs2(c.z[1]) + 10.0;
    });
    EXPECT_THROW(sample_boundary(far, 2, 1), std::runtime_error);
}

TEST(Boundary, BallFrameAtPole)
{
    const auto d = ball_domain(2);
    const auto f = normal_frame(d, c2(1.0, 0.0));
    EXPECT_LT((f.L - c2(1.0, 0.0)).norm(), 1e-14);
    EXPECT_NEAR(f.grad_norm, 1.0, 1e-14);
    const auto lv = levi_data(d, c2(1.0, 0.0));
    ASSERT_EQ(lv.levi.rows(), 1);
    EXPECT_NEAR(std::abs(lv.levi(0, 0) - 1.0), 0.0, 1e-14);
    EXPECT_TRUE(lv.null_basis.empty());
}

TEST(BoundaryProperty, FrameIdentities)
{
    Rng rng(21);
    std::vector<DomainSpec> domains{ball_domain(2), ellipsoid_domain({1.0, 3.0}), ball_domain(3),
                                    ball_with_metric(dfi::testing::random_metric(rng, 2))};
    for (const auto& d : domains) {
        for (const auto& p : sample_boundary(d, 25, 3)) {
            const auto g = local_geometry(d, p.z, 2);
            const auto f = normal_frame(g);
            EXPECT_LT(std::abs(apply_d(g.rd, lift10(f.L)) - 1.0), 1e-10);
            EXPECT_LT(std::abs(norm(g.metric, lift10(f.L)) - 1.0 / f.grad_norm), 1e-10);
            EXPECT_LT(std::abs(apply_d(g.rd, f.X) - 1.0), 1e-10);
            const CVec rebuilt = (f.nu_r - cplx(0, 1) * apply_J(f.nu_r)) / std::sqrt(2.0);
            EXPECT_LT((rebuilt - lift10(f.nu_c)).norm(), 1e-12);
            // J matrix agrees with the complexified action
            const RVec v = to_real(f.nu_r);
            EXPECT_LT((f.J * v - to_real(apply_J(f.nu_r))).norm(), 1e-14);
            const auto lv = levi_data(g);
            EXPECT_GE(lv.eigenvalues.minCoeff(), -kEpsNull);
            for (std::size_t j = 0; j < lv.basis.size(); ++j) {
                EXPECT_LT(std::abs(apply_d(g.rd, lift10(lv.basis[j]))), 1e-12);
                for (std::size_t k = 0; k < lv.basis.size(); ++k)
                    EXPECT_LT(std::abs(inner(g.metric, lift10(lv.basis[j]), lift10(lv.basis[k])) - (j == k ? 1.0 : 0.0)), 1e-12);
            }
        }
    }
}

TEST(Boundary, SphereNormalCurvature)
{
    // standard Euclidean metric: unit tangent of the unit sphere has normal curvature -1
    DomainSpec d = ball_with_metric(MetricField::euclidean(2, 0.5));
    const auto g = local_geometry(d, c2(1.0, 0.0), 3);
    CVec X = from_real((RVec(4) << 0, 1, 0, 0).finished());
    X /= norm(g.metric, X);
    EXPECT_NEAR(second_fundamental_form(g, X, X).real(), -1.0, 1e-14);
    EXPECT_NEAR(sff_from_frame(g, X, X).real(), -1.0, 1e-13);
    // unit-free metric g = identity on d/dz: lengths scale by sqrt 2
    const auto g1 = local_geometry(ball_domain(2), c2(1.0, 0.0), 3);
    CVec X1 = from_real((RVec(4) << 0, 1, 0, 0).finished());
    X1 /= norm(g1.metric, X1);
    EXPECT_NEAR(second_fundamental_form(g1, X1, X1).real(), -1.0 / std::sqrt(2.0), 1e-14);
    EXPECT_THROW(second_fundamental_form(g, g.Xv(), X), std::invalid_argument);
}

TEST(BoundaryProperty, SffTwoRoutesAndHessianOfNormal)
{
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = ball_with_metric(dfi::testing::random_metric(rng, 2));
        for (const auto& p : sample_boundary(d, 3, 100 + trial)) {
            const auto g = local_geometry(d, p.z, 3);
            const CVec X = tangent_real(g, rng), Y = tangent_real(g, rng);
            EXPECT_LT(std::abs(second_fundamental_form(g, X, Y) - sff_from_frame(g, X, Y)), 1e-9);
            // Hess(Y, X_r) r = Y log|dr|
            cplx ylog = 0.0;
            for (int a = 0; a < 4; ++a) {
                const int idx[1] = {a};
                ylog += Y[a] * wirtinger_seq(g.log_dr, idx, 2);
            }
            EXPECT_LT(std::abs(hess(g.rd, Y, g.Xv()) - ylog), 1e-9);
        }
    }
}

TEST(Boundary, AnalyticGradNormMatchesDerived)
{
    DomainSpec d = ball_domain(2);
    DomainSpec da = d;
    // |dr| = sqrt(2) |z| for r = |z|^2 - 1 under g = identity
    da.grad_norm = ScalarField("grad", 2, d.box(), [](std::span<const Jet> x) {
        ComplexCoords c(x);
        return std::sqrt(2.0) * sqrt(abs2(c.z[0]) + abs2(c.z[1]));
    });
    Rng rng(23);
    for (const auto& p : sample_boundary(d, 10, 5)) {
        const auto g = local_geometry(d, p.z, 3), ga = local_geometry(da, p.z, 3);
        EXPECT_LT(g.log_dr.max_abs_diff(ga.log_dr), 1e-12);
        const CVec Z = tangent10(g, rng);
        EXPECT_LT(std::abs(alpha_geometric(g, Z) - alpha10(g, Z)), 1e-10);
        EXPECT_LT(std::abs(alpha10(g, Z)), 1e-12);
    }
}

TEST(Boundary, TransportInvariantsOnBall)
{
    const auto d = ball_domain(2);
    const auto path = transport_along_normal(d, c2(1.0, 0.0), c2(0.0, 1.0), 0.1, 20);
    ASSERT_EQ(path.times.size(), 21u);
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const auto g = local_geometry(d, path.points[k], 2);
        EXPECT_NEAR(g.r.value().real(), path.times[k], 1e-8);
        EXPECT_NEAR(norm(g.metric, lift10(path.vectors[k])), 1.0, 1e-8);
        EXPECT_LT(std::abs(apply_d(g.rd, lift10(path.vectors[k]))), 1e-8);
    }
    EXPECT_ANY_THROW(transport_along_normal(d, c2(1.0, 0.0), c2(0.0, 1.0), 3.0, 10));
}

TEST(BoundaryProperty, TransportOnCurvedMetric)
{
    Rng rng(25);
    const auto d = ball_with_metric(dfi::testing::random_metric(rng, 2));
    for (const auto& p : sample_boundary(d, 4, 9)) {
        const auto g0 = local_geometry(d, p.z, 2);
        CVec Z0 = tangent10(g0, rng);
        Z0 /= norm(g0.metric, lift10(Z0));
        const auto path = transport_along_normal(d, p.z, Z0, 0.05, 10);
        for (std::size_t k = 0; k < path.times.size(); ++k) {
            const auto g = local_geometry(d, path.points[k], 2);
            EXPECT_NEAR(g.r.value().real(), path.times[k], 1e-8);
            EXPECT_NEAR(norm(g.metric, lift10(path.vectors[k])), 1.0, 1e-8);
            EXPECT_LT(std::abs(apply_d(g.rd, lift10(path.vectors[k]))), 1e-8);
        }
    }
}

TEST(Boundary, RoughnessSmallForPolynomial)
{
    const auto d = ellipsoid_domain({1.0, 2.0});
    const auto p = sample_boundary(d, 1, 4)[0];
    EXPECT_LT(grad_norm_roughness(d, p.z), 1e-3);
}

TEST(Boundary, SignedDistanceOfBallIsClosedForm)
{
    const auto sd = signed_distance_domain(ball_domain(2));
    const auto exact = ball_distance_domain(2);
    Rng rng(24);
    for (int k = 0; k < 30; ++k) {
        CVec z = rng.cvec(2);
        z *= rng.uniform(0.3, 1.5) / z.norm();
        EXPECT_LT(eval_jet(sd.r, z, 3).max_abs_diff(eval_jet(exact.r, z, 3)), 1e-10);
    }
}

TEST(BoundaryProperty, SignedDistanceEikonal)
{
    const auto base = ellipsoid_domain({1.0, 3.0});
    const auto sd = signed_distance_domain(base);
    Rng rng(25);
    for (const auto& p : sample_boundary(base, 12, 6)) {
        const auto f = normal_frame(base, p.z);
        const CVec nu = part10(f.nu_r) / part10(f.nu_r).norm();
        for (double t : {-0.1, -0.02, 0.0, 0.05}) {
            const CVec z = p.z + t * nu;
            const Jet d = eval_jet(sd.r, z, 3);
            EXPECT_NEAR(d.value().real(), t, 1e-10);
            // |grad d|^2 = 1 through second order checks every stored derivative
            Jet eik = Jet::constant(4, -1.0, 2);
            for (int a = 0; a < 4; ++a) eik += d.partial(a) * d.partial(a);
            EXPECT_LT(eik.max_abs_diff(Jet::constant(4, 0.0, 2)), 1e-9);
        }
        const auto g = local_geometry(sd, p.z, 3);
        EXPECT_LT(std::abs(0.5 * std::log(2.0 * g.grad_sq.value().real())), 1e-12);
        const CVec Z = tangent10(g, rng);
        EXPECT_LT(std::abs(alpha_geometric(g, Z) - alpha10(g, Z)), 1e-10);
    }
    // past the focal distance of the long axis the footpoint is not a minimum
    EXPECT_THROW(eval_jet(sd.r, c2(0.2, 0.0), 3), std::domain_error);
}
