#include "dfi/jet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfi {

namespace {

struct PackTables {
    std::array<std::array<int, kMaxRealDim>, kMaxRealDim> p2{};
    std::array<std::array<std::array<int, kMaxRealDim>, kMaxRealDim>, kMaxRealDim> p3{};
    constexpr PackTables()
    {
        int c = 0;
        for (int i = 0; i < kMaxRealDim; ++i)
            for (int j = i; j < kMaxRealDim; ++j) p2[i][j] = c++;
        c = 0;
        for (int i = 0; i < kMaxRealDim; ++i)
            for (int j = i; j < kMaxRealDim; ++j)
                for (int k = j; k < kMaxRealDim; ++k) p3[i][j][k] = c++;
    }
};

constexpr PackTables kPack{};

}  // namespace

int Jet::idx2(int i, int j)
{
    if (i > j) std::swap(i, j);
    return kPack.p2[i][j];
}

int Jet::idx3(int i, int j, int k)
{
    if (i > j) std::swap(i, j);
    if (j > k) std::swap(j, k);
    if (i > j) std::swap(i, j);
    return kPack.p3[i][j][k];
}

Jet Jet::constant(int dim, cplx value, int order)
{
    if (dim < 0 || dim > kMaxRealDim) throw std::invalid_argument("jet dimension out of range");
    Jet j;
    j.dim_ = dim;
    j.order_ = order;
    j.v_ = value;
    return j;
}

Jet Jet::variable(int dim, int index, double value, int order)
{
    if (index < 0 || index >= dim) throw std::invalid_argument("jet variable index out of range");
    Jet j = constant(dim, value, order);
    if (order >= 1) j.g_[index] = 1.0;
    return j;
}

cplx Jet::d(int i, int j) const { return h_[idx2(i, j)]; }

cplx Jet::d(int i, int j, int k) const { return t_[idx3(i, j, k)]; }

Jet Jet::partial(int i) const
{
    if (order_ < 1) throw std::logic_error("partial of an order-0 jet");
    Jet r;
    r.dim_ = dim_;
    r.order_ = order_ - 1;
    r.v_ = g_[i];
    if (r.order_ >= 1)
        for (int a = 0; a < dim_; ++a) r.g_[a] = h_[idx2(i, a)];
    if (r.order_ >= 2)
        for (int a = 0; a < dim_; ++a)
            for (int b = a; b < dim_; ++b) r.h_[kPack.p2[a][b]] = t_[idx3(i, a, b)];
    return r;
}

Jet Jet::truncated(int order) const
{
    Jet r = *this;
    r.order_ = std::min(order_, order);
    if (r.order_ < 3) r.t_.fill(0.0);
    if (r.order_ < 2) r.h_.fill(0.0);
    if (r.order_ < 1) r.g_.fill(0.0);
    return r;
}

Jet Jet::conj() const
{
    Jet r = *this;
    r.v_ = std::conj(v_);
    for (auto& x : r.g_) x = std::conj(x);
    for (auto& x : r.h_) x = std::conj(x);
    for (auto& x : r.t_) x = std::conj(x);
    return r;
}

Jet Jet::real() const
{
    Jet r = *this;
    r.v_ = v_.real();
    for (auto& x : r.g_) x = x.real();
    for (auto& x : r.h_) x = x.real();
    for (auto& x : r.t_) x = x.real();
    return r;
}

Jet Jet::imag() const
{
    Jet r = *this;
    r.v_ = v_.imag();
    for (auto& x : r.g_) x = x.imag();
    for (auto& x : r.h_) x = x.imag();
    for (auto& x : r.t_) x = x.imag();
    return r;
}

Jet Jet::operator-() const
{
    Jet r = *this;
    r *= cplx(-1.0);
    return r;
}

Jet& Jet::operator+=(const Jet& o)
{
    dim_ = std::max(dim_, o.dim_);
    order_ = std::min(order_, o.order_);
    v_ += o.v_;
    for (int i = 0; i < kMaxRealDim; ++i) g_[i] += o.g_[i];
    for (int i = 0; i < detail::kPacked2; ++i) h_[i] += o.h_[i];
    for (int i = 0; i < detail::kPacked3; ++i) t_[i] += o.t_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o)
{
    dim_ = std::max(dim_, o.dim_);
    order_ = std::min(order_, o.order_);
    v_ -= o.v_;
    for (int i = 0; i < kMaxRealDim; ++i) g_[i] -= o.g_[i];
    for (int i = 0; i < detail::kPacked2; ++i) h_[i] -= o.h_[i];
    for (int i = 0; i < detail::kPacked3; ++i) t_[i] -= o.t_[i];
    return *this;
}

Jet& Jet::operator*=(cplx s)
{
    v_ *= s;
    for (auto& x : g_) x *= s;
    for (auto& x : h_) x *= s;
    for (auto& x : t_) x *= s;
    return *this;
}

Jet& Jet::operator+=(cplx s)
{
    v_ += s;
    return *this;
}

Jet& Jet::operator*=(const Jet& o)
{
    *this = *this * o;
    return *this;
}

Jet operator*(const Jet& a, const Jet& b)
{
    Jet r;
    r.dim_ = std::max(a.dim_, b.dim_);
    r.order_ = std::min(a.order_, b.order_);
    const int n = r.dim_;
    r.v_ = a.v_ * b.v_;
    if (r.order_ >= 1)
        for (int i = 0; i < n; ++i) r.g_[i] = a.g_[i] * b.v_ + a.v_ * b.g_[i];
    if (r.order_ >= 2)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const int p = kPack.p2[i][j];
                r.h_[p] = a.h_[p] * b.v_ + a.g_[i] * b.g_[j] + a.g_[j] * b.g_[i] + a.v_ * b.h_[p];
            }
    if (r.order_ >= 3)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const int pij = kPack.p2[i][j];
                for (int k = j; k < n; ++k) {
                    const int pik = kPack.p2[i][k];
                    const int pjk = kPack.p2[j][k];
                    const int p = kPack.p3[i][j][k];
                    r.t_[p] = a.t_[p] * b.v_ + a.h_[pij] * b.g_[k] + a.h_[pik] * b.g_[j] +
                              a.h_[pjk] * b.g_[i] + a.g_[i] * b.h_[pjk] + a.g_[j] * b.h_[pik] +
                              a.g_[k] * b.h_[pij] + a.v_ * b.t_[p];
                }
            }
    return r;
}

Jet Jet::compose(cplx f0, cplx f1, cplx f2, cplx f3) const
{
    Jet r;
    r.dim_ = dim_;
    r.order_ = order_;
    const int n = dim_;
    r.v_ = f0;
    if (order_ >= 1)
        for (int i = 0; i < n; ++i) r.g_[i] = f1 * g_[i];
    if (order_ >= 2)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const int p = kPack.p2[i][j];
                r.h_[p] = f2 * g_[i] * g_[j] + f1 * h_[p];
            }
    if (order_ >= 3)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const int pij = kPack.p2[i][j];
                for (int k = j; k < n; ++k) {
                    const int p = kPack.p3[i][j][k];
                    r.t_[p] = f3 * g_[i] * g_[j] * g_[k] +
                              f2 * (h_[pij] * g_[k] + h_[kPack.p2[i][k]] * g_[j] +
                                    h_[kPack.p2[j][k]] * g_[i]) +
                              f1 * t_[p];
                }
            }
    return r;
}

double Jet::max_abs_diff(const Jet& o) const
{
    double m = std::abs(v_ - o.v_);
    for (int i = 0; i < kMaxRealDim; ++i) m = std::max(m, std::abs(g_[i] - o.g_[i]));
    for (int i = 0; i < detail::kPacked2; ++i) m = std::max(m, std::abs(h_[i] - o.h_[i]));
    for (int i = 0; i < detail::kPacked3; ++i) m = std::max(m, std::abs(t_[i] - o.t_[i]));
    return m;
}

bool Jet::is_real() const
{
    auto re = [](cplx x) { return x.imag() == 0.0; };
    return re(v_) && std::all_of(g_.begin(), g_.end(), re) && std::all_of(h_.begin(), h_.end(), re) &&
           std::all_of(t_.begin(), t_.end(), re);
}

Jet inv(const Jet& u)
{
    const cplx x = u.value();
    if (x == 0.0) throw std::domain_error("jet division by zero");
    const cplx i1 = 1.0 / x;
    const cplx i2 = i1 * i1;
    return u.compose(i1, -i2, 2.0 * i2 * i1, -6.0 * i2 * i2);
}

Jet exp(const Jet& u)
{
    const cplx e = std::exp(u.value());
    return u.compose(e, e, e, e);
}

Jet log(const Jet& u)
{
    const cplx x = u.value();
    if (x == 0.0) throw std::domain_error("jet log of zero");
    const cplx i1 = 1.0 / x;
    return u.compose(std::log(x), i1, -i1 * i1, 2.0 * i1 * i1 * i1);
}

Jet sin(const Jet& u)
{
    const cplx s = std::sin(u.value()), c = std::cos(u.value());
    return u.compose(s, c, -s, -c);
}

Jet cos(const Jet& u)
{
    const cplx s = std::sin(u.value()), c = std::cos(u.value());
    return u.compose(c, -s, -c, s);
}

Jet tan(const Jet& u)
{
    const cplx t = std::tan(u.value());
    const cplx s2 = 1.0 + t * t;
    return u.compose(t, s2, 2.0 * t * s2, 2.0 * s2 * (1.0 + 3.0 * t * t));
}

Jet sqrt(const Jet& u)
{
    const cplx x = u.value();
    if (x == 0.0) throw std::domain_error("jet sqrt at zero");
    const cplx s = std::sqrt(x);
    const cplx i1 = 1.0 / x;
    return u.compose(s, 0.5 * s * i1, -0.25 * s * i1 * i1, 0.375 * s * i1 * i1 * i1);
}

Jet pow(const Jet& u, cplx p)
{
    const cplx x = u.value();
    if (x == 0.0) throw std::domain_error("jet pow at zero base");
    const cplx f0 = std::pow(x, p);
    const cplx i1 = 1.0 / x;
    const cplx f1 = p * f0 * i1;
    const cplx f2 = (p - 1.0) * f1 * i1;
    const cplx f3 = (p - 2.0) * f2 * i1;
    return u.compose(f0, f1, f2, f3);
}

Jet pow(const Jet& u, int p)
{
    const cplx x = u.value();
    // falling factorial p(p-1)..(p-k+1) times x^(p-k); zero coefficients never touch x^(negative)
    auto term = [&](int k) -> cplx {
        double c = 1.0;
        for (int i = 0; i < k; ++i) c *= double(p - i);
        if (c == 0.0) return 0.0;
        const int e = p - k;
        if (e < 0 && x == 0.0) throw std::domain_error("jet pow at zero base");
        cplx r = 1.0;
        for (int i = 0; i < std::abs(e); ++i) r *= x;
        return e < 0 ? c / r : c * r;
    };
    return u.compose(term(0), term(1), term(2), term(3));
}

Jet abs2(const Jet& u) { return (u * u.conj()).real(); }

Jet ramp_pow(const Jet& u, int p)
{
    if (p < 4) throw std::invalid_argument("ramp_pow needs p >= 4 for C3 jets");
    const double x = u.value().real();
    if (x <= 0.0) return Jet::constant(u.dim(), 0.0, u.order());
    const double q = p;
    auto pw = [&](int e) { return std::pow(x, e); };
    return u.real().compose(pw(p), q * pw(p - 1), q * (q - 1) * pw(p - 2),
                            q * (q - 1) * (q - 2) * pw(p - 3));
}

}  // namespace dfi
