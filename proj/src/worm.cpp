#include "dfi/worm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

namespace dfi {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx I(0.0, 1.0);
constexpr double kMinMetricEig = 1e-3;

/// Box reach in x: lambda = 2 on its edge.
double x_box(const WormParams& p) { return std::sqrt(p.lambda.a * p.lambda.a + std::pow(2.0 / p.lambda.c, 1.0 / p.lambda.p)); }

ChartBox worm_box(const WormParams& p)
{
    ChartBox b;
    const double w = std::exp(0.5 * x_box(p));
    b.lo = {-2.1, -2.1, -w, -w};
    b.hi = {2.1, 2.1, w, w};
    b.min_modulus = {0.0, 1.0 / w};
    return b;
}

Jet log_modulus_sq(const Jet& z) { return log(abs2(z)); }

}  // namespace

WormParams WormParams::standard(double gamma)
{
    WormParams p;
    p.gamma = gamma;
    p.t = 2.0 * gamma / kPi - 1.0 + 0.2;
    p.lambda.a = gamma - kPi / 2;
    // domain ends 0.1 past |x| = a
    p.lambda.c = std::pow((p.lambda.a + 0.1) * (p.lambda.a + 0.1) - p.lambda.a * p.lambda.a, -p.lambda.p);
    return p;
}

double WormParams::half_length() const { return gamma - kPi / 2; }

double WormParams::x_reach() const { return std::sqrt(lambda.a * lambda.a + std::pow(1.0 / lambda.c, 1.0 / lambda.p)); }

void WormParams::validate() const
{
    if (!(gamma > kPi / 2)) throw std::invalid_argument("worm needs gamma > pi/2");
    if (!(t > 2.0 * gamma / kPi - 1.0)) throw std::invalid_argument("worm needs t > 2 gamma / pi - 1");
    if (!(s >= 0.0)) throw std::invalid_argument("worm s must be positive (or 0 for automatic)");
    if (!(lambda.c > 0.0) || lambda.p < 4) throw std::invalid_argument("worm lambda needs c > 0 and p >= 4");
    if (std::abs(lambda.a - half_length()) > 1e-12)
        throw std::invalid_argument("worm lambda must vanish exactly on |x| <= gamma - pi/2");
}

DomainSpec worm_domain(const WormParams& params)
{
    params.validate();
    const ChartBox box = worm_box(params);
    if (!(box.min_modulus[1] > 0.0)) throw std::invalid_argument("worm chart box touches z2 = 0");
    DomainSpec d;
    d.name = "worm";
    const RampSpec lam = params.lambda;
    d.r = ScalarField("worm", 2, box, [lam](std::span<const Jet> xs) {
        ComplexCoords c(xs);
        const Jet x = log_modulus_sq(c.z[1]);
        const Jet w = c.z[0] + exp(I * x);
        return (abs2(w) - 1.0 + lam.c * ramp_pow(x * x - lam.a * lam.a, lam.p)).real();
    });
    d.metric = MetricField::euclidean(2);
    d.interior = (CVec(2) << -1.0, 1.0).finished();
    const double a = params.half_length();
    d.special_points = [a](int count) {
        std::vector<CVec> pts;
        for (int k = 0; k < count; ++k) {
            const double x = a * std::cos(kPi * (k + 0.5) / count);
            const double th = k * kPi * (3.0 - std::sqrt(5.0));
            pts.push_back((CVec(2) << 0.0, std::polar(std::exp(0.5 * x), th)).finished());
        }
        return pts;
    };
    return d;
}

WormProfile::WormProfile(const WormParams& params) : t(params.t)
{
    cut = 0.5 * (params.half_length() + t * kPi / 2);
    const double u = cut / t;
    const double tn = std::tan(u), sec2 = 1.0 / (std::cos(u) * std::cos(u));
    F[0] = 2 * t * std::log(std::cos(u));
    F[1] = -2 * tn;
    F[2] = -(2 / t) * sec2;
}

std::array<Jet, 3> WormProfile::eval(const Jet& x) const
{
    const double xv = x.value().real();
    if (std::abs(xv) < cut) {
        const Jet u = x / t;
        const Jet c = cos(u);
        return {2 * t * log(c), -2.0 * tan(u), (-2.0 / t) / (c * c)};
    }
    const double sgn = xv > 0 ? 1.0 : -1.0;
    const Jet d = sgn * x - cut;
    const Jet F0 = F[0] + F[1] * d + (F[2] / 2) * d * d;
    const Jet F1 = sgn * (F[1] + F[2] * d);
    const Jet F2 = Jet::constant(x.dim(), F[2], x.order());
    return {F0, F1, F2};
}

std::array<double, 3> WormProfile::eval(double x) const
{
    const auto j = eval(Jet::constant(1, x, 0));
    return {j[0].value().real(), j[1].value().real(), j[2].value().real()};
}

MetricField worm_metric_unchecked(const WormParams& params, double s)
{
    const WormProfile prof(params);
    MetricField m;
    std::ostringstream name;
    name << "worm_kahler(s=" << s << ")";
    m.name = name.str();
    m.n = 2;
    m.entries = [prof, s](std::span<const Jet> xs) {
        ComplexCoords c(xs);
        const Jet x = log_modulus_sq(c.z[1]);
        const auto F = prof.eval(x);
        const Jet f = exp(F[0]);
        const Jet fp = F[1] * f;
        const Jet fpp = (F[2] + F[1] * F[1]) * f;
        const Jet inv_z2 = inv(c.z[1]);
        const Jet inv_z2b = inv(c.zbar[1]);
        return std::vector<Jet>{f, c.zbar[0] * fp * inv_z2b, c.z[0] * fp * inv_z2,
                                (abs2(c.z[0]) * fpp + s) * inv_z2 * inv_z2b};
    };
    return m;
}

double worm_metric_min_eig(const WormParams& params, const MetricField& metric)
{
    const ChartBox box = worm_box(params);
    const double xb = x_box(params);
    const double z1_hi = std::sqrt(2.0) * box.hi[0];
    constexpr int n_mod = 12, n_x = 41;
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_mod; ++i)
        for (int j = 0; j < n_x; ++j) {
            CVec z(2);
            z << z1_hi * i / (n_mod - 1), std::exp(0.5 * xb * (2.0 * j / (n_x - 1) - 1.0));
            const auto x = coordinate_jets(z, 0);
            const auto g = metric.entries(x);
            Eigen::Matrix2cd G;
            G << g[0].value(), g[1].value(), g[2].value(), g[3].value();
            const Eigen::Vector2d d(1.0 / std::sqrt(G(0, 0).real()), 1.0 / std::sqrt(G(1, 1).real()));
            const Eigen::Matrix2cd N = d.asDiagonal() * G * d.asDiagonal();
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (N + N.adjoint()));
            lo = std::min(lo, es.eigenvalues().minCoeff());
        }
    return lo;
}

WormMetric worm_metric(const WormParams& params)
{
    params.validate();
    auto passing = [&](double s) {
        const MetricField m = worm_metric_unchecked(params, s);
        return std::pair{m, worm_metric_min_eig(params, m)};
    };
    if (params.s > 0.0) {
        auto [m, e] = passing(params.s);
        if (e >= kMinMetricEig) return {m, params.s, e};
        double s = 1.0;
        for (int k = 0; k < 60; ++k, s *= 2.0)
            if (passing(s).second >= kMinMetricEig) break;
        std::ostringstream msg;
        msg << "worm metric with s = " << params.s << " is not positive (min eigenvalue " << e
            << "); smallest passing s by doubling: " << s;
        throw std::domain_error(msg.str());
    }
    double s = 1.0;
    for (int k = 0; k < 60; ++k, s *= 2.0) {
        auto [m, e] = passing(s);
        if (e >= kMinMetricEig) return {m, s, e};
    }
    throw std::domain_error("worm metric: no passing s up to 2^60");
}

double kahler_defect(const MetricField& metric, const CVec& z)
{
    const int n = metric.n;
    const auto x = coordinate_jets(z, 1);
    const auto g = metric.entries(x);
    double worst = 0.0;
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const cplx a = wirtinger_partial(g[j * n + k], l, n).value();
                const cplx b = wirtinger_partial(g[l * n + k], j, n).value();
                const cplx c = wirtinger_partial(g[k * n + j], n + l, n).value();
                const cplx d = wirtinger_partial(g[k * n + l], n + j, n).value();
                worst = std::max({worst, std::abs(a - b), std::abs(c - d)});
            }
    return worst;
}

double SGammaReference::margin(double eta) const
{
    const double sec2 = 1.0 / std::pow(std::cos(x / t), 2);
    return (1.0 / t - eta / (1.0 - eta)) * sec2 / abs_z2_sq;
}

bool on_s_gamma(const WormParams& params, cplx z2)
{
    return std::abs(z2) > 0.0 && std::abs(std::log(std::norm(z2))) < params.half_length();
}

SGammaReference s_gamma_reference(const WormParams& params, cplx z2)
{
    if (!on_s_gamma(params, z2)) throw std::invalid_argument("point is not on the degenerate annulus");
    SGammaReference ref;
    ref.t = params.t;
    ref.x = std::log(std::norm(z2));
    ref.abs_z2_sq = std::norm(z2);
    const double u = ref.x / params.t;
    const double sec2 = 1.0 / std::pow(std::cos(u), 2);
    ref.alpha = I / z2;
    ref.dbar_l_factor = I / std::conj(z2);
    ref.d_l_factor = (-2.0 * std::tan(u) + I) / z2;
    ref.curvature = 2.0 / params.t * sec2 / ref.abs_z2_sq;
    ref.sff_jnu_sq = sec2 / ref.abs_z2_sq;
    ref.sff_zz = 0.0;
    return ref;
}

std::vector<CVec> s_gamma_points(const WormParams& params, int count, double reach)
{
    const double a = params.half_length() * reach;
    std::vector<CVec> pts;
    for (int k = 0; k < count; ++k) {
        const double x = count == 1 ? 0.0 : -a + 2 * a * k / (count - 1);
        const double th = k * kPi * (3.0 - std::sqrt(5.0));
        pts.push_back((CVec(2) << 0.0, std::polar(std::exp(0.5 * x), th)).finished());
    }
    return pts;
}

SubmanifoldPatch s_gamma_patch(const WormParams& params, double reach, int cells)
{
    SubmanifoldPatch p;
    auto z2 = [](double u1, double u2) { return std::exp(cplx(0.5 * u1, u2)); };
    p.point = [z2](double u1, double u2) { return (CVec(2) << 0.0, z2(u1, u2)).finished(); };
    p.du1 = [z2](double u1, double u2) { return (CVec(2) << 0.0, 0.5 * z2(u1, u2)).finished(); };
    p.du2 = [z2](double u1, double u2) { return (CVec(2) << 0.0, I * z2(u1, u2)).finished(); };
    p.u1_lo = -reach * params.half_length();
    p.u1_hi = reach * params.half_length();
    p.u2_lo = 0.0;
    p.u2_hi = 2 * kPi;
    p.cells1 = p.cells2 = cells;
    return p;
}

RiccatiResult riccati_feasibility(double gamma, double eta)
{
    if (!(gamma > kPi / 2)) throw std::invalid_argument("riccati needs gamma > pi/2");
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("riccati needs 0 <= eta < 1");
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 1>;
    RiccatiResult res;
    res.k = eta / (1.0 - eta);
    const double k = res.k, a = gamma - kPi / 2;
    constexpr double kBlowUp = 1e10, kNear = 1e-6;
    auto rhs = [k](const State& u, State& du, double) { du[0] = k * (1.0 + u[0] * u[0]); };
    auto stepper = ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<State>());
    State u{0.0};
    double x = 0.0, dx = 1e-3;
    res.profile.emplace_back(0.0, 0.0);
    bool blew = false;
    while (x < a) {
        double step = std::min(dx, a - x);
        const double before = step;
        if (stepper.try_step(rhs, u, x, step) == ode::success) {
            res.profile.emplace_back(x, u[0]);
            if (std::abs(u[0]) > kBlowUp) {
                blew = true;
                break;
            }
            dx = (before < dx) ? dx : step;
        } else {
            dx = step;
        }
        if (dx < 1e-300) break;
    }
    const double uend = res.profile.back().second;
    const double pole = (k > 0 && uend > 1.0) ? x + 1.0 / (k * uend) : std::numeric_limits<double>::infinity();
    res.blow_up = pole;
    if (std::abs(pole - a) < kNear)
        res.status = RiccatiStatus::indeterminate;
    else
        res.status = blew ? RiccatiStatus::infeasible : RiccatiStatus::feasible;
    return res;
}

double riccati_threshold(double gamma, double tol)
{
    double lo = 0.0, hi = 1.0 - 1e-9;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const auto st = riccati_feasibility(gamma, mid).status;
        if (st == RiccatiStatus::indeterminate) return mid;
        (st == RiccatiStatus::feasible ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::string to_string(RiccatiStatus s)
{
    switch (s) {
        case RiccatiStatus::feasible: return "feasible";
        case RiccatiStatus::infeasible: return "infeasible";
        case RiccatiStatus::indeterminate: return "indeterminate";
    }
    return "unknown";
}

}  // namespace dfi
