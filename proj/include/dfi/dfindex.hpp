#pragma once

/// \file dfindex.hpp
/// \brief Boundary margins of the index inequalities, the convex search for h over a finite
/// basis, the eta bisection, and the interior Hessian check of -(-rho)^eta.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfi/worm.hpp"

namespace dfi {

inline constexpr double kNoConstraint = std::numeric_limits<double>::infinity();
inline constexpr double kSiteCutoff = 1e-3;
inline constexpr double kCFloor = 1e-4;

/// h = sum c_i phi_i with real basis fields.
struct HBasis {
    std::string id;
    std::vector<ScalarField> fields;
    int size() const { return static_cast<int>(fields.size()); }
    /// Requires at least one field, all real-valued.
    void validate() const;
};

/// {1, T_1(x/l)..T_degree(x/l), cos x, sin x}: Chebyshev polynomials in x = log|z2|^2 scaled by
/// the reach l of the closure.  Same span as the monomials 1, x, .., x^degree.
HBasis worm_reduction_basis(const WormParams& params, int degree = 16);
/// Real monomials in (Re z, Im z) of total degree 1..degree.
HBasis polynomial_basis(int n, const ChartBox& box, int degree);
/// The same basis with every field multiplied by `factor`.
HBasis scaled_basis(const HBasis& basis, double factor);

/// d phi (holomorphic part) and ddbar phi of every basis field at one point.
struct BasisJets {
    std::vector<CVec> dh;
    std::vector<CMat> ddbar;
};
BasisJets basis_jets(const HBasis& basis, const CVec& z);

/// Ingredients of the boundary inequality at (P, Z) for unit Z; linear/quadratic in c.
struct SiteData {
    CVec P, Z;
    double levi = 0.0;     ///< ddbar r(Z, conj Z)
    double minus_i_beta = 0.0;
    cplx alpha;            ///< alpha(Z)
    RVec ddbar_phi;        ///< ddbar phi_i(Z, conj Z)
    CVec dphi;             ///< d phi_i(Z)
    /// -i beta + ddbar h - eta / (1 - eta) |dh(Z) - alpha(Z)|^2.
    double margin(const RVec& c, double eta) const;
};
SiteData site_data(const LocalGeometry& g, const CVec& Z, const HBasis& basis);

/// The boundary inequality with C = 0, Z scaled to unit length first.  Z = 0 gives 0.
double boundary_margin(const DomainSpec& domain, const CVec& P, const CVec& Z, const HBasis& basis, const RVec& c,
                       double eta);

/// Pieces of the curvature form of the inequality for Z as given (not normalized).
struct GeometricTerms {
    double sff_sum = 0.0;      ///< sum_j |sff(Z, W_j)|^2
    double curvature = 0.0;    ///< <R(Z, conj Z) nu_C, nu_C> / 2
    double sff_jnu_sq = 0.0;   ///< |sff(Z, J nu_R)|^2
    double margin(double eta) const;
};
GeometricTerms geometric_terms(const LocalGeometry& g, const LeviData& levi, const CVec& Z);

/// Pieces of the dbar nu_C form for Z as given.
struct VectorFieldTerms {
    double tangential = 0.0;   ///< |nabla_{conj Z} nu - <nabla_{conj Z} nu, nu> nu|^2 / 2
    double curvature = 0.0;
    double normal_sq = 0.0;    ///< |<nabla_{conj Z} nu, nu>|^2
    double margin(double eta) const;
};
VectorFieldTerms vectorfield_terms(const LocalGeometry& g, const CVec& Z);

/// Unit-normalized margins.  An empty Levi null space at P returns kNoConstraint, Z = 0
/// returns 0, and a Z outside the null space raises std::invalid_argument.
double geometric_margin(const DomainSpec& domain, const CVec& P, const CVec& Z, double eta,
                        double eps_null = kEpsNull);
double vectorfield_margin(const DomainSpec& domain, const CVec& P, const CVec& Z, double eta,
                          double eps_null = kEpsNull);

struct SiteOptions {
    int special_points = 64;
    int boundary_samples = 400;
    std::uint64_t seed = 1;
    double cutoff = kSiteCutoff;  ///< relative to the median of the per-point largest Levi eigenvalues
};

struct SiteSet {
    std::vector<SiteData> sites;
    int boundary_points = 0;
    double max_levi = 0.0;
    double levi_scale = 0.0;  ///< median per-point largest eigenvalue; the cutoff unit
    /// Smallest Levi eigenvalue among sampled points that did not become sites.
    double min_strict_levi = kNoConstraint;
};

/// Near-null (P, Z) pairs: special points first, then sampled boundary points whose
/// smallest Levi eigenvalue is below cutoff * levi_scale.  Evaluated in parallel.
SiteSet collect_sites(const DomainSpec& domain, const HBasis& basis, const SiteOptions& opt);

struct EtaCertificate {
    double eta = 0.0;
    std::string basis_id;
    RVec c;
    double min_margin = 0.0;
    int n_sites = 0;
    std::uint64_t seed = 0;
    bool feasible = false;
    int newton_steps = 0;
    /// Empty site set: smallest strictly pseudoconvex Levi eigenvalue, reported instead.
    std::optional<double> strict_margin;
};

struct SearchOptions {
    double c_floor = kCFloor;
    double coeff_bound = 1e4;  ///< on whitened coordinates
    double tol = 1e-6;
    int max_newton = 0;  ///< 0 means 10 * m * #sites
};

/// Maximizes min_i margin_i(c) by a log-barrier Newton method.  Coefficients are whitened by the
/// SVD of the stacked site features (ddbar phi, d phi) and each whitened coordinate is kept
/// within coeff_bound, so rescaling or recombining the basis does not change the outcome.
/// Feasible iff the optimum is >= c_floor.  Throws std::runtime_error past the step cap.
EtaCertificate feasibility_search(const SiteSet& sites, const HBasis& basis, double eta, const SearchOptions& opt = {},
                                  const std::optional<RVec>& warm = std::nullopt, std::uint64_t seed = 0);

struct EtaRecord {
    double eta = 0.0;
    bool feasible = false;
    double min_margin = 0.0;
};

struct DFEstimate {
    double eta_lo = 0.0;
    double eta_hi = 1.0;
    bool capped = false;       ///< feasible at the grid cap
    std::vector<EtaRecord> grid;
    std::vector<EtaCertificate> certificates;
    std::vector<std::string> warnings;
    std::optional<EtaCertificate> best;  ///< certificate at eta_lo
};

struct EstimateOptions {
    double cap = 0.99;
    double tol_eta = 0.01;
    SearchOptions search;
};

/// Bisection on eta; each eta is seeded with the last feasible coefficients.
DFEstimate estimate_index(const SiteSet& sites, const HBasis& basis, const EstimateOptions& opt = {},
                          std::uint64_t seed = 0);

/// Point at depth -r = depth below P, found along the real gradient of r.  Throws
/// std::domain_error when Newton's method does not reach that depth on the line.
CVec collar_point(const DomainSpec& domain, const CVec& P, double depth);

struct InteriorSample {
    CVec z;
    double depth = 0.0;
    double min_eig = 0.0;
};
struct InteriorReport {
    double min_eig = kNoConstraint;
    std::vector<InteriorSample> samples;
    bool positive() const { return min_eig > 0.0; }
};

/// Smallest eigenvalue, relative to g, of
/// (-r)^{-1} ddbar r + (1-eta)(-r)^{-2} dr dbar r - eta (-r)^{-1} (dh dbar r + dr dbar h)
///   - eta dh dbar h + ddbar h - C g
/// at each point; for eta > 0 this is eta^{-1} (-rho)^{-eta} ddbar(-(-rho)^eta) - C g with rho = r e^{-h},
/// for eta = 0 it is ddbar(-log(-rho)) - C g.  Throws std::domain_error if some r >= 0.
InteriorReport interior_check(const DomainSpec& domain, const HBasis& basis, const RVec& c, double eta, double C,
                              const std::vector<CVec>& points);

nlohmann::json to_json(const EtaCertificate& cert);
nlohmann::json to_json(const DFEstimate& est);

}  // namespace dfi
