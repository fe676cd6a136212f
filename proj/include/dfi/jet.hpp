#pragma once

/// \file jet.hpp
/// \brief Truncated third-order Taylor jets over 2n real coordinates.
///
/// A Jet carries the value and every real partial derivative through a
/// runtime order (0..3) of a complex-valued function.  Second and third
/// derivatives are stored once per sorted index tuple, so the symmetric
/// views returned by d(i,j) and d(i,j,k) are symmetric bit for bit.

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace dfi {

using cplx = std::complex<double>;

inline constexpr int kMaxRealDim = 6;
inline constexpr int kMaxOrder = 3;

namespace detail {
inline constexpr int kPacked2 = kMaxRealDim * (kMaxRealDim + 1) / 2;
inline constexpr int kPacked3 = kMaxRealDim * (kMaxRealDim + 1) * (kMaxRealDim + 2) / 6;
}  // namespace detail

class Jet {
  public:
    Jet() = default;

    /// Constant jet with all derivatives zero.
    static Jet constant(int dim, cplx value, int order = kMaxOrder);
    /// Coordinate jet x_index with unit gradient.
    static Jet variable(int dim, int index, double value, int order = kMaxOrder);

    int dim() const { return dim_; }
    int order() const { return order_; }

    cplx value() const { return v_; }
    cplx d(int i) const { return g_[i]; }
    cplx d(int i, int j) const;
    cplx d(int i, int j, int k) const;

    /// Real partial derivative ∂/∂x_i as a jet of one lower order.
    Jet partial(int i) const;
    /// Copy truncated to a lower order.
    Jet truncated(int order) const;

    Jet conj() const;
    Jet real() const;
    Jet imag() const;

    Jet operator-() const;
    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(const Jet& o);
    Jet& operator*=(cplx s);
    Jet& operator+=(cplx s);

    /// f(u) given f and its first three derivatives at u.value().
    Jet compose(cplx f0, cplx f1, cplx f2, cplx f3) const;

    /// Largest |entry| difference to another jet of equal shape.
    double max_abs_diff(const Jet& o) const;
    /// True when every stored coefficient has zero imaginary part.
    bool is_real() const;

    friend Jet operator*(const Jet& a, const Jet& b);

  private:
    int dim_ = 0;
    int order_ = kMaxOrder;
    cplx v_{};
    std::array<cplx, kMaxRealDim> g_{};
    std::array<cplx, detail::kPacked2> h_{};
    std::array<cplx, detail::kPacked3> t_{};

    static int idx2(int i, int j);
    static int idx3(int i, int j, int k);
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator+(Jet a, cplx s) { return a += s; }
inline Jet operator+(cplx s, Jet a) { return a += s; }
inline Jet operator-(Jet a, cplx s) { return a += -s; }
inline Jet operator-(cplx s, const Jet& a) { return (-a) += s; }
inline Jet operator*(Jet a, cplx s) { return a *= s; }
inline Jet operator*(cplx s, Jet a) { return a *= s; }
inline Jet operator+(Jet a, double s) { return a += cplx(s); }
inline Jet operator+(double s, Jet a) { return a += cplx(s); }
inline Jet operator-(Jet a, double s) { return a += cplx(-s); }
inline Jet operator-(double s, const Jet& a) { return (-a) += cplx(s); }
inline Jet operator*(Jet a, double s) { return a *= cplx(s); }
inline Jet operator*(double s, Jet a) { return a *= cplx(s); }

Jet inv(const Jet& u);
inline Jet operator/(const Jet& a, const Jet& b) { return a * inv(b); }
inline Jet operator/(Jet a, cplx s) { return a *= (1.0 / s); }
inline Jet operator/(Jet a, double s) { return a *= cplx(1.0 / s); }
inline Jet operator/(cplx s, const Jet& b) { return inv(b) * s; }
inline Jet operator/(double s, const Jet& b) { return inv(b) * s; }

Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet tan(const Jet& u);
Jet sqrt(const Jet& u);
Jet pow(const Jet& u, cplx p);
Jet pow(const Jet& u, int p);
/// |u|^2 = u * conj(u).
Jet abs2(const Jet& u);
/// Smooth ramp max(0, u)^p for real u and integer p >= 4.
Jet ramp_pow(const Jet& u, int p);

}  // namespace dfi
