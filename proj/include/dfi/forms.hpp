#pragma once

/// \file forms.hpp
/// \brief The one-form alpha and two-form beta attached to a defining function and metric,
/// their geometric decompositions, and pullback tests on complex curves in the boundary.

#include <functional>

#include "dfi/boundary.hpp"

namespace dfi {

/// alpha(V) for a complexified vector V.
cplx alpha(const LocalGeometry& g, const CVec& V);
/// alpha(Z) for (1,0) components Z: ddbar r(Z, conj L).
cplx alpha10(const LocalGeometry& g, const CVec& Z);
/// Z log|dr| - i |X|^{-2} <sff(Z, J X), X>, via the second fundamental form.
cplx alpha_geometric(const LocalGeometry& g, const CVec& Z);

/// beta(Z, conj W) for (1,0) components Z, W.
cplx beta_mixed(const LocalGeometry& g, const CVec& Z, const CVec& W);
/// beta(Z, W) for (1,0) components Z, W.
cplx beta_unmixed(const LocalGeometry& g, const CVec& Z, const CVec& W);
/// Null-space form: -i H3(X,Z,conj W) - i alpha(Z) alpha(conj W) + i Hess(X,Z) alpha(conj W) + i alpha(Z) Hess(X,conj W).
cplx beta_mixed_nullspace(const LocalGeometry& g, const CVec& Z, const CVec& W);

/// The three geometric pieces of -i beta(Z, conj Z) at a null vector.
struct BetaGeometric {
    double log_dr_term = 0.0;   ///< -ddbar log|dr| (Z, conj Z)
    double sff_sum = 0.0;       ///< sum_j |sff(Z, W_j)|^2 over a tangent orthonormal basis
    double curvature = 0.0;     ///< <R(Z, conj Z) nu, nu> / 2
    double total() const { return log_dr_term + sff_sum + curvature; }
};
/// Requires Z in the Levi null space of `levi`; throws otherwise.
BetaGeometric beta_geometric(const LocalGeometry& g, const LeviData& levi, const CVec& Z);

/// Parametrized real 2-dimensional patch u -> z(u) of a complex curve in the boundary.
struct SubmanifoldPatch {
    std::function<CVec(double, double)> point;
    std::function<CVec(double, double)> du1, du2;  ///< dz/du_k
    double u1_lo = 0, u1_hi = 1, u2_lo = 0, u2_hi = 1;
    int cells1 = 32, cells2 = 32;
};

/// Real one-form evaluated on a complexified real tangent vector at z.
using OneForm = std::function<double(const CVec& z, const CVec& V)>;

struct StokesReport {
    double max_cell_residual = 0.0;   ///< max |circulation| / area
    double max_tangency = 0.0;
    double max_imag = 0.0;            ///< largest imaginary part met while evaluating alpha
};

/// Per-cell circulation of a one-form over the patch grid, Gauss-Legendre on each edge.
StokesReport stokes_residual(const SubmanifoldPatch& patch, const OneForm& form);
/// Same for the pullback of alpha; checks tangency of the patch first.
StokesReport pullback_alpha_dclosed(const DomainSpec& domain, const SubmanifoldPatch& patch);
/// Integral of alpha along a closed curve theta -> z(theta), theta in [0, 2 pi].
double loop_period(const DomainSpec& domain, const std::function<CVec(double)>& curve,
                   const std::function<CVec(double)>& tangent, int panels = 64);

/// Largest mismatch between beta and -(i/2)(d alpha - dbar alpha) with alpha differentiated
/// by a five-point stencil around z.  The step starts at h and is halved (at most six times)
/// until two successive stencils agree to 1e-9 relative.
double weak_identity_residual(const DomainSpec& domain, const CVec& z, double h = 1e-3);

/// Two-sided collar comparison of the Levi form along one transported vector.
struct CollarSample {
    double t = 0.0;
    double levi = 0.0;        ///< ddbar r(Z, conj Z) at psi(P, t)
    double lower = 0.0, upper = 0.0;
    double lower_defect = 0.0, upper_defect = 0.0;  ///< levi - lower, upper - levi
};
struct CollarReport {
    double delta = 0.0;
    double epsilon = 0.0;
    std::vector<CollarSample> samples;
    bool holds() const;
};
CollarReport collar_levi_compare(const DomainSpec& domain, const CVec& P, const CVec& Z0, double delta, double epsilon,
                                 int steps = 10);
/// Halves delta from delta0 until every path satisfies both bounds; returns 0 if none does within `halvings`.
struct CollarSearch {
    double delta = 0.0;
    int checked = 0;
    bool found = false;
};
CollarSearch find_collar_delta(const DomainSpec& domain, const std::vector<std::pair<CVec, CVec>>& sites, double epsilon,
                               double delta0, int steps = 10, int halvings = 12);

}  // namespace dfi
