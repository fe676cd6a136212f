#include "dfi/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dfi {

ChartBox ChartBox::cube(int n, double half_width)
{
    ChartBox b;
    b.lo.assign(2 * n, -half_width);
    b.hi.assign(2 * n, half_width);
    b.min_modulus.assign(n, 0.0);
    return b;
}

bool ChartBox::contains(const CVec& z) const
{
    const int n = complex_dim();
    if (z.size() != n) return false;
    for (int j = 0; j < n; ++j) {
        const double x = z[j].real(), y = z[j].imag();
        if (!(x >= lo[2 * j] && x <= hi[2 * j] && y >= lo[2 * j + 1] && y <= hi[2 * j + 1])) return false;
        if (!min_modulus.empty() && std::abs(z[j]) < min_modulus[j]) return false;
    }
    return true;
}

double ChartBox::clearance(const CVec& z) const
{
    double c = std::numeric_limits<double>::infinity();
    for (int j = 0; j < complex_dim(); ++j) {
        c = std::min({c, z[j].real() - lo[2 * j], hi[2 * j] - z[j].real(), z[j].imag() - lo[2 * j + 1],
                      hi[2 * j + 1] - z[j].imag()});
        if (!min_modulus.empty() && min_modulus[j] > 0.0) c = std::min(c, std::abs(z[j]) - min_modulus[j]);
    }
    return c;
}

ComplexCoords::ComplexCoords(std::span<const Jet> x)
{
    const std::size_t n = x.size() / 2;
    z.reserve(n);
    zbar.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        z.push_back(x[2 * j] + cplx(0, 1) * x[2 * j + 1]);
        zbar.push_back(x[2 * j] - cplx(0, 1) * x[2 * j + 1]);
    }
}

ScalarField::ScalarField(std::string name, int n, ChartBox box, JetExpr expr, bool real_valued)
    : name_(std::move(name)), n_(n), box_(std::move(box)), expr_(std::move(expr)), real_(real_valued)
{
    if (n < 1 || 2 * n > kMaxRealDim) throw std::invalid_argument("chart dimension unsupported");
}

std::vector<Jet> coordinate_jets(const CVec& z, int order)
{
    const int n = static_cast<int>(z.size());
    std::vector<Jet> x;
    x.reserve(2 * n);
    for (int j = 0; j < n; ++j) {
        x.push_back(Jet::variable(2 * n, 2 * j, z[j].real(), order));
        x.push_back(Jet::variable(2 * n, 2 * j + 1, z[j].imag(), order));
    }
    return x;
}

Jet ScalarField::eval_unchecked(const CVec& z, int order) const
{
    auto x = coordinate_jets(z, order);
    Jet f = expr_(x);
    if (f.dim() < 2 * n_) f += Jet::constant(2 * n_, 0.0);
    return f.truncated(order);
}

Jet eval_jet(const ScalarField& field, const CVec& z, int order)
{
    if (order < 0 || order > kMaxOrder) throw std::invalid_argument("jet order must be in 0..3");
    if (!field.box().contains(z)) throw std::out_of_range("point outside chart box of field '" + field.name() + "'");
    return field.eval_unchecked(z, order);
}

Jet wirtinger_partial(const Jet& f, int a, int n)
{
    if (a < 0 || a >= 2 * n) throw std::out_of_range("wirtinger index out of range");
    const int j = a % n;
    const double s = a < n ? -1.0 : 1.0;
    return 0.5 * (f.partial(2 * j) + cplx(0, s) * f.partial(2 * j + 1));
}

cplx wirtinger_seq(const Jet& jet, std::span<const int> idx, int n)
{
    const int k = static_cast<int>(idx.size());
    if (k > jet.order()) throw std::invalid_argument("wirtinger order exceeds jet order");
    for (int a : idx)
        if (a < 0 || a >= 2 * n) throw std::out_of_range("wirtinger index out of range");
    if (k == 0) return jet.value();
    cplx total = 0.0;
    int real_idx[3];
    for (int mask = 0; mask < (1 << k); ++mask) {
        cplx coef = 1.0;
        for (int p = 0; p < k; ++p) {
            const int a = idx[p];
            const int j = a % n;
            const bool use_y = (mask >> p) & 1;
            real_idx[p] = 2 * j + (use_y ? 1 : 0);
            coef *= use_y ? cplx(0, a < n ? -0.5 : 0.5) : cplx(0.5);
        }
        cplx d;
        if (k == 1) d = jet.d(real_idx[0]);
        else if (k == 2) d = jet.d(real_idx[0], real_idx[1]);
        else d = jet.d(real_idx[0], real_idx[1], real_idx[2]);
        total += coef * d;
    }
    return total;
}

cplx wirtinger(const Jet& jet, std::span<const int> a, std::span<const int> b)
{
    const int n = static_cast<int>(a.size());
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("multi-index size mismatch");
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
        if (a[j] < 0 || b[j] < 0) throw std::out_of_range("negative multi-index");
        for (int c = 0; c < a[j]; ++c) idx.push_back(j);
        for (int c = 0; c < b[j]; ++c) idx.push_back(n + j);
    }
    if (idx.size() > 3) throw std::invalid_argument("|a|+|b| exceeds 3");
    return wirtinger_seq(jet, idx, n);
}

CMat complex_hessian(const Jet& jet, int n)
{
    CMat H(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const int idx[2] = {j, n + k};
            H(j, k) = wirtinger_seq(jet, idx, n);
        }
    return H;
}

CMat complex_hessian(const ScalarField& field, const CVec& z)
{
    if (!field.real_valued()) throw std::invalid_argument("complex_hessian requires a real-valued field");
    return complex_hessian(eval_jet(field, z, 2), field.complex_dim());
}

}  // namespace dfi
