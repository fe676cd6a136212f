#pragma once

/// \file field.hpp
/// \brief Scalar fields on a complex chart and Wirtinger derivatives of their jets.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfi/jet.hpp"

namespace dfi {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Real coordinate box in C^n, optionally punctured: |z_j| >= min_modulus[j].
struct ChartBox {
    std::vector<double> lo, hi;       ///< 2n entries, ordered (x1, y1, x2, y2, ...)
    std::vector<double> min_modulus;  ///< n entries, 0 means no puncture

    static ChartBox cube(int n, double half_width);
    int complex_dim() const { return static_cast<int>(lo.size()) / 2; }
    bool contains(const CVec& z) const;
    /// Largest admissible step fraction keeping z + s*dz inside, used by Newton projection.
    double clearance(const CVec& z) const;
};

/// Jet-level expression of a field in terms of the 2n real coordinate jets.
using JetExpr = std::function<Jet(std::span<const Jet> x)>;

/// Complex coordinate jets z_j = x_j + i y_j and their conjugates.
struct ComplexCoords {
    std::vector<Jet> z, zbar;
    explicit ComplexCoords(std::span<const Jet> x);
};

class ScalarField {
  public:
    ScalarField() = default;
    ScalarField(std::string name, int n, ChartBox box, JetExpr expr, bool real_valued = true);

    const std::string& name() const { return name_; }
    int complex_dim() const { return n_; }
    const ChartBox& box() const { return box_; }
    bool real_valued() const { return real_; }

    /// Evaluates without the chart check; callers inside a verified chart use this.
    Jet eval_unchecked(const CVec& z, int order) const;
    const JetExpr& expr() const { return expr_; }

  private:
    std::string name_;
    int n_ = 0;
    ChartBox box_;
    JetExpr expr_;
    bool real_ = true;
};

/// Seeded coordinate jets at z.
std::vector<Jet> coordinate_jets(const CVec& z, int order);

/// All partials of `field` at z through `order`.
Jet eval_jet(const ScalarField& field, const CVec& z, int order);

/// Complexified index a in [0, 2n): a < n is d/dz_a, a >= n is d/dzbar_{a-n}.
Jet wirtinger_partial(const Jet& f, int a, int n);

/// D^{a,b} f at the jet center; a and b count holomorphic and antiholomorphic derivatives.
cplx wirtinger(const Jet& jet, std::span<const int> a, std::span<const int> b);

/// Wirtinger derivative along a list of complexified indices, e.g. {0, n+1} = d/dz_0 d/dzbar_1.
cplx wirtinger_seq(const Jet& jet, std::span<const int> idx, int n);

/// [d^2 f / dz_j dzbar_k] at the jet center.
CMat complex_hessian(const Jet& jet, int n);
CMat complex_hessian(const ScalarField& field, const CVec& z);

}  // namespace dfi
