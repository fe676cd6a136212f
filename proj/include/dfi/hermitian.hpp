#pragma once

/// \file hermitian.hpp
/// \brief Chern connection, torsion, curvature and the covariant Hessians of a Hermitian metric.
///
/// Tangent vectors live in the complexified basis (d/dz_1..d/dz_n, d/dzbar_1..d/dzbar_n),
/// so a vector is a length-2n complex array.  A (1,0) vector Z embeds as (Z, 0), its
/// conjugate as (0, conj Z), a real vector as (V, conj V).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dfi/field.hpp"

namespace dfi {

/// g_{j kbar} = <d/dz_j, d/dz_k> as jets, row-major n*n.
using MetricExpr = std::function<std::vector<Jet>(std::span<const Jet> x)>;

struct MetricField {
    std::string name;
    int n = 0;
    MetricExpr entries;

    static MetricField euclidean(int n, double scale = 1.0);
    /// e^{u} * identity.
    static MetricField conformal(int n, JetExpr u, std::string name = "conformal");
};

using VectorJets = std::vector<Jet>;

CVec lift10(const CVec& Z);             ///< (Z, 0)
CVec lift01(const CVec& W);             ///< (0, conj W): the (0,1) vector W-bar
CVec realify(const CVec& Z);            ///< (Z, conj Z)
CVec conj_vec(const CVec& V);           ///< complex conjugate of a complexified vector
CVec part10(const CVec& V);             ///< holomorphic components (length n)
VectorJets constant_field(const CVec& V, int dim, int order = kMaxOrder);

/// Metric quantities at one point with Chern symbols as order-1 jets.
struct MetricAt {
    int n = 0;
    CVec z;
    std::vector<Jet> g, ginv;  ///< n*n, order 2
    std::vector<Jet> gamma;    ///< (2n)^3, Gamma^c_{ab} at gamma[(c*2n+a)*2n+b]
    std::vector<cplx> dgamma;  ///< d_d Gamma^c_{ab} at [((d*2n+c)*2n+a)*2n+b], empty below order 2

    int dim() const { return 2 * n; }
    CMat G() const;
    CMat Ginv() const;
    cplx Gamma(int c, int a, int b) const { return gamma[(c * 2 * n + a) * 2 * n + b].value(); }
    cplx dGamma(int d, int c, int a, int b) const
    {
        const int m = 2 * n;
        return dgamma[((d * m + c) * m + a) * m + b];
    }
};

/// Evaluates entries, inverse and Chern symbols; order 2 enables curvature.
MetricAt metric_at(const MetricField& metric, const CVec& z, int order = 2);

/// Gamma^i_{jk} on holomorphic indices, stored [(i*n+j)*n+k].
struct ChernSymbols {
    CVec z;
    int n = 0;
    std::vector<cplx> gamma;
    cplx operator()(int i, int j, int k) const { return gamma[(i * n + j) * n + k]; }
};

ChernSymbols chern_symbols(const MetricField& metric, const CVec& z);
/// max |d_j g_{k lbar} - sum_i Gamma^i_{jk} g_{i lbar}|.
double metric_compatibility_residual(const MetricAt& m);

/// Sesquilinear extension of the metric to complexified vectors.
cplx inner(const MetricAt& m, const CVec& V, const CVec& W);
double norm(const MetricAt& m, const CVec& V);

/// (nabla_dir V) at the point, V given with jets of order >= 1.
CVec covariant_derivative(const MetricAt& m, const CVec& dir, const VectorJets& V);
/// Same, kept as an order-reduced vector field.
VectorJets covariant_derivative_jets(const MetricAt& m, const VectorJets& dir, const VectorJets& V);

/// T(X, Y) for constant-coefficient inputs.
CVec torsion(const MetricAt& m, const CVec& X, const CVec& Y);
/// nabla_X Y - nabla_Y X - [X, Y] for vector fields with jets.
CVec torsion(const MetricAt& m, const VectorJets& X, const VectorJets& Y);
/// R(X, Y)V from Gamma and its first derivatives.
CVec curvature(const MetricAt& m, const CVec& X, const CVec& Y, const CVec& V);

/// Covariant derivatives of a scalar at a point.
struct ScalarDerivs {
    int n = 0;
    CVec df;                 ///< d_a f
    CMat hess;               ///< (nabla^2 f)_{ab}
    std::vector<cplx> d3;    ///< (nabla^3 f)_{abc} at [(a*2n+b)*2n+c], empty if the jet has order < 3
    cplx third(int a, int b, int c) const
    {
        const int m = 2 * n;
        return d3[(a * m + b) * m + c];
    }
};

ScalarDerivs scalar_derivs(const MetricAt& m, const Jet& f);

/// Hess(X, Y) f from the tensor.
cplx hess(const ScalarDerivs& s, const CVec& X, const CVec& Y);
/// H^3(X1, X2, X3) f from the tensor.
cplx h3(const ScalarDerivs& s, const CVec& X1, const CVec& X2, const CVec& X3);
/// df(V).
cplx apply_d(const ScalarDerivs& s, const CVec& V);

/// X(Y f) - (nabla_X Y) f with field-valued arguments.
cplx hess_op(const MetricAt& m, const Jet& f, const VectorJets& X, const VectorJets& Y);
/// X1 Hess(X2, X3) - Hess(nabla_X1 X2, X3) - Hess(X2, nabla_X1 X3) with field-valued arguments.
cplx h3_op(const MetricAt& m, const Jet& f, const VectorJets& X1, const VectorJets& X2, const VectorJets& X3);

/// Residuals of the four H^3 symmetries and the cycle identity for (1,0) vectors L, Z, W.
struct H3Residuals {
    double first_unmixed = 0.0, first_mixed = 0.0, second_mixed = 0.0, third_unmixed = 0.0, cycle = 0.0;
    double max() const;
};
H3Residuals h3_identity_residuals(const MetricAt& m, const ScalarDerivs& f, const CVec& L, const CVec& Z, const CVec& W);

/// Smallest eigenvalue and Hermitian defect of g at z.
struct MetricCheck {
    double min_eig = 0.0;
    double hermitian_defect = 0.0;
};
MetricCheck check_metric(const MetricField& metric, const CVec& z);

}  // namespace dfi
