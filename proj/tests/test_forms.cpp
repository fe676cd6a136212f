#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dfi/forms.hpp"
#include "support.hpp"

using namespace dfi;
using dfi::testing::Rng;

namespace {

constexpr cplx I(0.0, 1.0);

DomainSpec curved_ball(Rng& rng)
{
    DomainSpec d = ball_domain(2);
    d.metric = dfi::testing::random_metric(rng, 2);
    return d;
}

CVec tangent10(const LocalGeometry& g, Rng& rng)
{
    const CVec Z = rng.cvec(g.n);
    return Z - apply_d(g.rd, lift10(Z)) * g.Lv();
}

/// Z(conj L) by central differences of frame values, h = 1e-5.
CVec frame_derivative_fd(const DomainSpec& d, const CVec& z, const CVec& Z)
{
    const int n = d.n();
    const double h = 1e-5;
    CVec out = CVec::Zero(n);
    for (int j = 0; j < n; ++j) {
        auto lbar = [&](cplx step) {
            CVec w = z;
            w[j] += step;
            return CVec(local_geometry(d, w, 2).Lv().conjugate());
        };
        const CVec dx = (lbar(h) - lbar(-h)) / (2 * h);
        const CVec dy = (lbar(I * h) - lbar(-I * h)) / (2 * h);
        out += Z[j] * 0.5 * (dx - I * dy);
    }
    return out;
}

}  // namespace

TEST(Forms, BallAlphaOnTangentVanishes)
{
    const auto d = ball_domain(2);
    CVec P(2), Z(2);
    P << 1.0, 0.0;
    Z << 0.0, 1.0;
    const auto g = local_geometry(d, P, 3);
    EXPECT_LT(std::abs(alpha10(g, Z)), 1e-15);
    EXPECT_LT(std::abs(alpha_geometric(g, Z)), 1e-15);
    EXPECT_EQ(alpha10(g, CVec::Zero(2)), cplx(0.0));
    EXPECT_EQ(beta_mixed(g, CVec::Zero(2), Z), cplx(0.0));
    EXPECT_EQ(beta_unmixed(g, Z, Z), cplx(0.0));
}

TEST(FormsProperty, RealityAndAntisymmetry)
{
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = curved_ball(rng);
        for (const auto& p : sample_boundary(d, 2, 40 + trial)) {
            for (double depth : {0.0, -0.05}) {
                const CVec z = p.z * std::sqrt(1.0 + depth);
                const auto g = local_geometry(d, z, 3);
                const CVec Z = rng.cvec(2), W = rng.cvec(2);
                EXPECT_LT(std::abs(beta_mixed(g, Z, Z).real()), 1e-10);
                EXPECT_LT(std::abs(beta_unmixed(g, Z, W) + beta_unmixed(g, W, Z)), 1e-12);
                EXPECT_LT(std::abs(alpha(g, lift01(Z)) - std::conj(alpha(g, lift10(Z)))), 1e-12);
                EXPECT_LT(std::abs(alpha(g, realify(Z)).imag()), 1e-12);
                // beta(Z, conj W) and beta(W, conj Z) are conjugate up to sign for a real form
                EXPECT_LT(std::abs(beta_mixed(g, Z, W) + std::conj(beta_mixed(g, W, Z))), 1e-10);
            }
        }
    }
}

TEST(FormsProperty, AlphaGeometricMatches)
{
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = curved_ball(rng);
        for (const auto& p : sample_boundary(d, 3, 70 + trial)) {
            const auto g = local_geometry(d, p.z, 3);
            const CVec Z = tangent10(g, rng);
            EXPECT_LT(std::abs(alpha_geometric(g, Z) - alpha10(g, Z)), 1e-8);
        }
    }
}

TEST(FormsProperty, UnmixedBetaAgainstFiniteDifferenceFrame)
{
    Rng rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = curved_ball(rng);
        const auto p = sample_boundary(d, 1, 90 + trial)[0];
        const auto g = local_geometry(d, p.z, 3);
        const CVec Z = tangent10(g, rng), W = tangent10(g, rng);
        // the connection has no mixed symbols, so nabla_Z conj(L) is the plain derivative
        const CVec dz = frame_derivative_fd(d, p.z, Z), dw = frame_derivative_fd(d, p.z, W);
        const cplx oracle = -0.5 * I * ((W.transpose() * g.levi * dz)(0) - (Z.transpose() * g.levi * dw)(0));
        EXPECT_LT(std::abs(beta_unmixed(g, Z, W) - oracle), 1e-8);
    }
}

TEST(FormsProperty, WeakIdentityOnSmoothDomains)
{
    Rng rng(34);
    std::vector<DomainSpec> domains{ball_domain(2), ellipsoid_domain({1.0, 2.5}), curved_ball(rng), curved_ball(rng)};
    for (const auto& d : domains)
        for (const auto& p : sample_boundary(d, 3, 5)) {
            EXPECT_LT(weak_identity_residual(d, p.z), 1e-5) << d.name;
            EXPECT_LT(weak_identity_residual(d, p.z * 0.97), 1e-5) << d.name;
        }
}

TEST(Forms, ExactFormHasNoCirculation)
{
    // d h for h = Re(z1^2 z2) + |z2|^4 on a disc patch of the ball's boundary
    JetExpr h = [](std::span<const Jet> x) {
        ComplexCoords c(x);
        return (c.z[0] * c.z[0] * c.z[1]).real() + abs2(c.z[1]) * abs2(c.z[1]);
    };
    SubmanifoldPatch patch;
    patch.point = [](double u1, double u2) {
        CVec z(2);
        z << std::polar(0.8, u2), std::polar(0.6, u1);
        return z;
    };
    patch.du1 = [](double u1, double) {
        CVec z(2);
        z << 0.0, I * std::polar(0.6, u1);
        return z;
    };
    patch.du2 = [](double, double u2) {
        CVec z(2);
        z << I * std::polar(0.8, u2), 0.0;
        return z;
    };
    patch.u1_hi = patch.u2_hi = 2 * std::numbers::pi;
    OneForm dh = [&](const CVec& z, const CVec& V) {
        const Jet j = [&] {
            auto x = coordinate_jets(z, 1);
            return h(x);
        }();
        cplx s = 0.0;
        for (int a = 0; a < 4; ++a) {
            const int idx[1] = {a};
            s += V[a] * wirtinger_seq(j, idx, 2);
        }
        return s.real();
    };
    EXPECT_LT(stokes_residual(patch, dh).max_cell_residual, 1e-8);
}

TEST(Forms, CollarBoundsOnBall)
{
    const auto d = ball_domain(2);
    Rng rng(35);
    std::vector<std::pair<CVec, CVec>> sites;
    for (const auto& p : sample_boundary(d, 10, 11)) {
        const auto g = local_geometry(d, p.z, 2);
        CVec Z = tangent10(g, rng);
        Z /= norm(g.metric, lift10(Z));
        sites.emplace_back(p.z, Z);
    }
    const auto rep = collar_levi_compare(d, sites[0].first, sites[0].second, 0.05, 0.1, 10);
    EXPECT_TRUE(rep.holds());
    EXPECT_NEAR(rep.samples[0].lower_defect, 0.1 * rep.samples[0].levi, 1e-12);
    EXPECT_NEAR(rep.samples[0].upper_defect, 0.1 * rep.samples[0].levi, 1e-12);
    const auto found = find_collar_delta(d, sites, 0.1, 0.05, 10);
    EXPECT_TRUE(found.found);
    EXPECT_EQ(found.checked, 100);
    EXPECT_GT(found.delta, 0.0);
}
