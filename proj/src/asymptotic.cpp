#include <cmath>

#include "pseudogap/asymptotic.hpp"

namespace pg {

namespace {

constexpr double kQuadTol = 1e-13;
constexpr double kExponentTol = 1e-7;
constexpr double kRouteTol = 1e-7;

void check_params(double beta, double gamma) {
    if (!(beta > 0) || !std::isfinite(beta)) throw PreconditionError("beta must be positive");
    if (!(gamma > 0.5 && gamma < 1.0)) throw PreconditionError("gamma must lie in (1/2, 1)");
}

double beta_form(double beta, double gamma) {
    return std::pow(2 * beta, 1 / gamma) / (4 * gamma) * beta_fn(1.5, (1 - gamma) / (2 * gamma));
}

}  // namespace

ExponentCoefficient exponent_coefficient(double beta, double gamma) {
    check_params(beta, gamma);
    const double t0 = std::pow(2 * beta, 1 / gamma);
    auto f = [&](double t) {
        const double r = beta / std::pow(t, gamma);
        return std::sqrt(std::max(0.0, (r - 0.5) * (r + 0.5)));
    };
    ExponentCoefficient e;
    e.value = beta_form(beta, gamma);
    e.quadrature = quad_adaptive(f, 0.0, t0, kQuadTol);
    e.discrepancy = std::abs(e.quadrature - e.value) / e.value;
    if (e.discrepancy > kExponentTol) throw NumericError("exponent_coefficient: quadrature disagrees with beta form");
    return e;
}

double c_cr(double beta_cr, double gamma, double kprime, double a) {
    check_params(beta_cr, gamma);
    if (!(kprime > 0) || !(a > 0)) throw PreconditionError("c_cr: kprime and a must be positive");
    return beta_form(beta_cr, gamma) * std::pow(a / (2 * kPi * kprime), (1 - gamma) / gamma);
}

MatchingConstant c_mp(double beta, double gamma) {
    check_params(beta, gamma);
    // Variables u = (tau / t0)^(2 gamma) and s = sqrt(1 - u).
    const double u1 = std::pow(2.0, -2 * gamma);
    MatchingConstant m;
    m.i1 = quad_adaptive([](double u) { return 1.0 / (4 * (1 + std::sqrt(1 - u)) * (1 - u)); }, 0.0, u1, kQuadTol);
    m.i2 = -quad_adaptive([](double s) { return 1.0 / (2 * (1 - s * s)); }, 0.0, std::sqrt(1 - u1), kQuadTol);
    m.i3 = quad_pv([](double u) { return 1.0 / (4 * u * (1 - u)); }, u1, kInf, 1.0, kQuadTol);
    m.c_vp = m.i1 + m.i2 + m.i3;
    m.C_mp = std::exp(m.c_vp) / std::sqrt(2.0);
    return m;
}

DensityPrefactor a_cr(double beta_cr, double gamma, double abs_w) {
    check_params(beta_cr, gamma);
    if (!(abs_w > 0)) throw PreconditionError("a_cr: |W| must be positive");
    const double t0 = std::pow(2 * beta_cr, 1 / gamma);
    const double g = gamma;
    auto x_of = [&](double t) { return std::pow(t / t0, 2 * g); };

    const double a1 = quad_adaptive(
        [&](double t) {
            if (t == 0) return 0.0;
            const double x = x_of(t);
            return g * x / (t * (1 + std::sqrt(1 - x)) * (1 - x));
        },
        0.0, t0 / 2, kQuadTol);
    // tau = t0 - w^2 removes the inverse square root at the turning point.
    const double a2 = quad_adaptive(
        [&](double w) {
            const double t = t0 - w * w;
            if (w == 0) return 2 * g / (t0 * std::sqrt(2 * g / t0));
            const double one_minus_x = -std::expm1(2 * g * std::log1p(-w * w / t0));
            return 2 * w * g / (t * std::sqrt(one_minus_x));
        },
        0.0, std::sqrt(t0 / 2), kQuadTol);
    const double a3 = quad_pv([&](double t) { return g / (t * (1 - x_of(t))); }, t0 / 2, kInf, t0, kQuadTol);

    DensityPrefactor d;
    d.route_a = std::exp(-a1 + a2 - a3) / (kPi * abs_w);
    const double cm = c_mp(beta_cr, gamma).C_mp;
    d.value = 1.0 / (2 * kPi * abs_w * cm * cm);
    d.rel_diff = std::abs(d.route_a - d.value) / d.value;
    if (d.rel_diff > kRouteTol) throw NumericError("a_cr: the two routes disagree");
    return d;
}

AsymptoticPrediction predict(const CriticalPoint& crit, double gamma, double a) {
    AsymptoticPrediction p;
    p.exponent_coeff = exponent_coefficient(crit.beta_cr, gamma).value;
    p.c_cr = c_cr(crit.beta_cr, gamma, crit.kprime, a);
    const auto m = c_mp(crit.beta_cr, gamma);
    p.C_mp = m.C_mp;
    p.c_vp = m.c_vp;
    p.a_cr = a_cr(crit.beta_cr, gamma, crit.abs_w).value;
    return p;
}

}  // namespace pg
