#pragma once

/// \file boundary.hpp
/// \brief Domains given by a defining function: projection, sampling, normal frames,
/// Levi data, second fundamental form and the normal-flow transport.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dfi/hermitian.hpp"

namespace dfi {

inline constexpr double kTolGrad = 1e-6;
inline constexpr double kTolBoundary = 1e-10;
inline constexpr double kEpsNull = 1e-7;

struct DomainSpec {
    std::string name;
    ScalarField r;
    MetricField metric;
    /// Analytic |dr| when known; otherwise derived from the jets of r.
    std::optional<ScalarField> grad_norm;
    CVec interior;
    /// Deterministic boundary points worth checking (e.g. the degenerate set of the worm).
    std::function<std::vector<CVec>(int count)> special_points;

    int n() const { return r.complex_dim(); }
    const ChartBox& box() const { return r.box(); }
};

/// Everything the forms need at one point of the collar, from one jet evaluation of r.
struct LocalGeometry {
    int n = 0;
    CVec z;
    Jet r;             ///< order 3 (full) or 2 (frame only)
    MetricAt metric;
    ScalarDerivs rd;   ///< covariant derivatives of r
    CMat levi;         ///< [d^2 r / dz_j dzbar_k]
    VectorJets L;      ///< (L, 0), one order below r
    VectorJets Lbar;   ///< (0, conj L)
    VectorJets X;      ///< (L + Lbar) / 2
    Jet grad_sq;       ///< |dr-holomorphic part|^2 as a jet
    Jet log_dr;        ///< log |dr|

    CVec Lv() const;   ///< holomorphic components of L
    CVec Xv() const;   ///< complexified X
    double grad_norm() const { return std::sqrt(grad_sq.value().real()); }
};

/// order 3 enables H^3 and curvature; order 2 is enough for frames and transport.
LocalGeometry local_geometry(const DomainSpec& domain, const CVec& z, int order = 3);

struct BoundaryPoint {
    CVec z;
    double residual = 0.0;
};

BoundaryPoint project_to_boundary(const DomainSpec& domain, const CVec& z0);
std::vector<BoundaryPoint> sample_boundary(const DomainSpec& domain, int count, std::uint64_t seed);

struct NormalFrame {
    CVec L;        ///< (1,0) components
    CVec X;        ///< complexified real vector
    CVec nu_c;     ///< L / |L|, (1,0) components
    CVec nu_r;     ///< X / |X|, complexified
    double grad_norm = 0.0;  ///< |d r| restricted to (1,0)
    double dr_norm = 0.0;    ///< |dr|
    RMat J;                  ///< complex structure on (x1, y1, ..., xn, yn)
};

NormalFrame normal_frame(const LocalGeometry& g);
NormalFrame normal_frame(const DomainSpec& domain, const CVec& P);

/// J acting on a complexified vector.
CVec apply_J(const CVec& V);
/// Real coordinates (x1, y1, ...) of a real complexified vector and back.
RVec to_real(const CVec& V);
CVec from_real(const RVec& v);

struct LeviData {
    std::vector<CVec> basis;   ///< metric-orthonormal (1,0) tangent vectors
    CMat levi;                 ///< Hermitian, levi(j,k) = ddbar r(W_j, conj W_k)
    RVec eigenvalues;          ///< ascending
    CMat eigenvectors;         ///< columns in basis coordinates
    std::vector<CVec> null_basis;
    double cutoff = 0.0;

    /// Eigenvector k expressed as a (1,0) vector.
    CVec direction(int k) const;
};

LeviData levi_data(const LocalGeometry& g, double eps_null = kEpsNull);
LeviData levi_data(const DomainSpec& domain, const CVec& P, double eps_null = kEpsNull);

/// ddbar r(Z, conj W) - alpha(Z) conj(dr(W)).
cplx null_space_residual(const LocalGeometry& g, const CVec& Z, const CVec& W);

/// Coefficient of sff(X, Y) along nu_R, complex bilinear; X, Y complexified tangent vectors.
cplx second_fundamental_form(const LocalGeometry& g, const CVec& X, const CVec& Y);
/// Same coefficient from the covariant derivative of X_r instead of the Hessian of r.
cplx sff_from_frame(const LocalGeometry& g, const CVec& X, const CVec& Y);

struct CollarPath {
    CVec base;
    std::vector<double> times;        ///< 0 down to -delta
    std::vector<CVec> points;
    std::vector<CVec> vectors;        ///< transported (1,0) vector
};

CollarPath transport_along_normal(const DomainSpec& domain, const CVec& P, const CVec& Z0, double delta, int steps);

/// Weak diagnostic for admissibility: spread of finite-difference third derivatives of |dr|
/// against their jet values, relative.  Large values mean |dr| looks rough.
double grad_norm_roughness(const DomainSpec& domain, const CVec& P);

DomainSpec ball_domain(int n = 2, double radius = 1.0);
/// r = |z| - 1 with the standard Euclidean metric: |dr| = 1.
DomainSpec ball_distance_domain(int n = 2);
DomainSpec ellipsoid_domain(const std::vector<double>& axes);
/// Signed Euclidean distance to the boundary of `base` (negative inside) under the standard metric,
/// with |dr| = 1.  Each evaluation finds the nearest boundary point by Newton's method; jets come
/// from the cubic Taylor model of base.r there.  Throws std::domain_error outside the tubular
/// neighbourhood where the nearest point is a nondegenerate minimum.
DomainSpec signed_distance_domain(const DomainSpec& base);

}  // namespace dfi
