#pragma once

// Shared random generators for the property tests.

#include <random>
#include <vector>

#include "dfi/hermitian.hpp"

namespace dfi::testing {

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double uniform(double a = -1.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(eng); }
    cplx complex(double s = 1.0) { return {uniform(-s, s), uniform(-s, s)}; }
    CVec cvec(int n, double s = 1.0)
    {
        CVec v(n);
        for (int i = 0; i < n; ++i) v[i] = complex(s);
        return v;
    }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
};

/// Random real polynomial of degree <= 4 in the real coordinates.
inline JetExpr random_polynomial(Rng& rng, int dim, int terms = 8)
{
    struct Term {
        double c;
        std::vector<int> pw;
    };
    std::vector<Term> ts;
    for (int t = 0; t < terms; ++t) {
        Term term{rng.uniform(), std::vector<int>(dim, 0)};
        const int deg = rng.integer(0, 4);
        for (int d = 0; d < deg; ++d) term.pw[rng.integer(0, dim - 1)]++;
        ts.push_back(term);
    }
    return [ts](std::span<const Jet> x) {
        Jet acc = Jet::constant(static_cast<int>(x.size()), 0.0);
        for (const auto& t : ts) {
            Jet m = Jet::constant(static_cast<int>(x.size()), t.c);
            for (std::size_t i = 0; i < t.pw.size(); ++i)
                for (int p = 0; p < t.pw[i]; ++p) m = m * x[i];
            acc += m;
        }
        return acc;
    };
}

/// Smooth real field mixing every transcendental kernel.
inline JetExpr random_smooth(Rng& rng, int dim, double amplitude = 0.8)
{
    std::vector<double> c(12);
    for (auto& v : c) v = rng.uniform(-amplitude, amplitude);
    auto poly = random_polynomial(rng, dim, 5);
    return [c, poly, dim](std::span<const Jet> x) {
        const Jet& a = x[0];
        const Jet& b = x[1 % dim];
        const Jet& d = x[(dim - 1)];
        Jet f = poly(x) * 0.3;
        f += c[0] * exp(c[1] * a * b);
        f += c[2] * sin(c[3] * b + c[4] * d);
        f += c[5] * log(2.0 + cos(c[6] * a));
        f += c[7] * tan(0.3 * c[8] * d);
        f += c[9] * pow(2.5 + sin(c[10] * a * d), cplx(1.7));
        f += c[11] * sqrt(1.5 + a * a);
        return f;
    };
}

/// Hermitian positive definite metric A(z)^H A(z) + I with smooth non-holomorphic A.
inline MetricField random_metric(Rng& rng, int n)
{
    const int dim = 2 * n;
    std::vector<JetExpr> re, im;
    for (int i = 0; i < n * n; ++i) {
        re.push_back(random_smooth(rng, dim));
        im.push_back(random_smooth(rng, dim));
    }
    MetricField m;
    m.name = "random";
    m.n = n;
    m.entries = [re, im, n](std::span<const Jet> x) {
        std::vector<Jet> A;
        for (int i = 0; i < n * n; ++i) A.push_back(0.4 * (re[i](x) + cplx(0, 1) * im[i](x)));
        std::vector<Jet> g;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Jet s = Jet::constant(static_cast<int>(x.size()), j == k ? 1.0 : 0.0);
                for (int l = 0; l < n; ++l) s += A[l * n + j] * A[l * n + k].conj();
                g.push_back(s);
            }
        return g;
    };
    return m;
}

/// Random (1,0) vector field with polynomial coefficients.
inline std::vector<JetExpr> random_field_coeffs(Rng& rng, int n)
{
    std::vector<JetExpr> out;
    for (int i = 0; i < 2 * n; ++i) out.push_back(random_polynomial(rng, 2 * n, 4));
    return out;
}

/// Evaluates a (1,0) field whose j-th coefficient is p_{2j} + i p_{2j+1}, embedded as (V, 0).
inline VectorJets eval_field10(const std::vector<JetExpr>& coeffs, const CVec& z, int order)
{
    const int n = static_cast<int>(z.size());
    auto x = coordinate_jets(z, order);
    VectorJets v;
    for (int j = 0; j < n; ++j) v.push_back(coeffs[2 * j](x) + cplx(0, 1) * coeffs[2 * j + 1](x));
    for (int j = 0; j < n; ++j) v.push_back(Jet::constant(2 * n, 0.0, order));
    for (auto& e : v) e = (e + Jet::constant(2 * n, 0.0)).truncated(order);
    return v;
}

/// Conjugate of a (1,0) field: the (0,1) field with coefficients conj(V^j).
inline VectorJets conj_field(const VectorJets& v)
{
    const std::size_t n = v.size() / 2;
    VectorJets w(v.size());
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = v[n + j].conj();
        w[n + j] = v[j].conj();
    }
    return w;
}

inline VectorJets add_fields(const VectorJets& a, const VectorJets& b, cplx sa = 1.0, cplx sb = 1.0)
{
    VectorJets r;
    for (std::size_t i = 0; i < a.size(); ++i) r.push_back(sa * a[i] + sb * b[i]);
    return r;
}

inline CVec values(const VectorJets& v)
{
    CVec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].value();
    return r;
}

}  // namespace dfi::testing
