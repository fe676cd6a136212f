#pragma once

/// \file worm.hpp
/// \brief The worm domains: defining function, the Kahler metric adapted to the degenerate
/// annulus S = {z1 = 0, |log|z2|^2| < gamma - pi/2}, closed-form values on S, and the
/// one-dimensional Riccati reduction of the index problem.

#include <string>
#include <vector>

#include "dfi/forms.hpp"

namespace dfi {

/// lambda(x) = c * max(0, x^2 - a^2)^p.
struct RampSpec {
    double a = 0.0;
    double c = 1.0;
    int p = 6;
};

struct WormParams {
    double gamma = 0.0;
    double t = 0.0;
    double s = 0.0;  ///< 0 selects s by doubling from 1
    RampSpec lambda;

    /// t = 2 gamma / pi - 1 + 0.2, lambda with a = gamma - pi/2, p = 6 and c such that the
    /// domain ends at |x| = a + 0.1.
    static WormParams standard(double gamma);
    double half_length() const;  ///< gamma - pi/2
    /// Largest |log|z2|^2| reached by the closure of the domain.
    double x_reach() const;
    /// Throws std::invalid_argument on out-of-range parameters.
    void validate() const;
};

/// r = |z1 + e^{i x}|^2 - 1 + lambda(x), x = log|z2|^2, with the metric g = identity.
/// special_points(count) returns points of S spread over |x| < a by Chebyshev nodes.
DomainSpec worm_domain(const WormParams& params);

/// log f and its first two derivatives for f = cos(x/t)^{2t}, extended past the cut
/// (a + t pi / 2) / 2 by the even quadratic Taylor polynomial of log f.
struct WormProfile {
    double t = 1.0;
    double cut = 0.0;
    double F[3] = {};  ///< derivatives of log f at the cut
    explicit WormProfile(const WormParams& params);
    /// (log f, (log f)', (log f)'') as jets in the jet x.
    std::array<Jet, 3> eval(const Jet& x) const;
    std::array<double, 3> eval(double x) const;
};

struct WormMetric {
    MetricField field;
    double s = 0.0;
    double min_eig = 0.0;  ///< smallest eigenvalue of diag(g)^{-1/2} g diag(g)^{-1/2} on the grid
};

/// g from the potential |z1|^2 f(x) + s x.  With params.s = 0, s doubles from 1 until the
/// smallest sampled eigenvalue of the diagonally normalized metric is >= 1e-3 on the shell
/// |x| <= x_box (lambda = 2 there); an explicit s that fails raises
/// std::domain_error naming the smallest passing s.
WormMetric worm_metric(const WormParams& params);
/// Same entries for a fixed s without the positivity check.
MetricField worm_metric_unchecked(const WormParams& params, double s);
/// Smallest normalized eigenvalue over a deterministic (|z1|, x) grid; phases do not matter.
double worm_metric_min_eig(const WormParams& params, const MetricField& metric);

/// max |d_l g_{j kbar} - d_j g_{l kbar}| and the conjugate relation at z.
double kahler_defect(const MetricField& metric, const CVec& z);

/// Closed forms at (0, z2) for Z = d/dz2 under the adapted metric.
struct SGammaReference {
    double x = 0.0;
    cplx alpha;                 ///< i / z2
    cplx dbar_l_factor;         ///< nabla_{conj Z} L = factor * L
    cplx d_l_factor;            ///< nabla_Z L = factor * L
    double curvature = 0.0;     ///< <R(Z, conj Z) nu_C, nu_C>
    double sff_jnu_sq = 0.0;    ///< |sff(Z, J nu_R)|^2
    cplx sff_zz = 0.0;
    double t = 0.0;
    double abs_z2_sq = 0.0;
    double margin(double eta) const;
};

bool on_s_gamma(const WormParams& params, cplx z2);
/// Throws std::invalid_argument when (0, z2) is off S.
SGammaReference s_gamma_reference(const WormParams& params, cplx z2);
/// count points of S with |x| <= reach * a, x uniform, arguments by the golden angle.
std::vector<CVec> s_gamma_points(const WormParams& params, int count, double reach);

/// z2 = exp(u1 / 2 + i u2): u1 is x, u2 the angle.
SubmanifoldPatch s_gamma_patch(const WormParams& params, double reach, int cells = 32);

enum class RiccatiStatus { feasible, infeasible, indeterminate };

struct RiccatiResult {
    RiccatiStatus status = RiccatiStatus::indeterminate;
    double k = 0.0;
    double blow_up = 0.0;  ///< estimated pole of u, +inf when none is near
    std::vector<std::pair<double, double>> profile;  ///< (x, h'(x)) on [0, a]
};

/// Shoots u' = k (1 + u^2), u(0) = 0 over [0, gamma - pi/2], k = eta / (1 - eta).
RiccatiResult riccati_feasibility(double gamma, double eta);
/// Bisection on eta in [0, 1) of the shooter's verdict.
double riccati_threshold(double gamma, double tol = 1e-4);

std::string to_string(RiccatiStatus s);

}  // namespace dfi
