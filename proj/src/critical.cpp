#include <cmath>
#include <sstream>

#include "pseudogap/critical.hpp"

namespace pg {

namespace {

constexpr double kResonanceTol = 1e-9;
constexpr double kDegenerateTol = 1e-9;
constexpr double kNeighbourhood = 0.8;

double frac_part(double v) { return v - std::floor(v); }

// Solve k(lambda) = target on the monotone branch of band j.
double solve_k(const PeriodicBackground& bg, const BandStructure& bs, int j, double target, double tol,
               const FloquetOptions& opt) {
    const auto& b = bs.bands[static_cast<std::size_t>(j)];
    if (!(target > j * kPi && target < (j + 1) * kPi)) throw NumericError("critical: target outside the band");
    double lo = b.lo, hi = b.hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (quasimomentum_raw(bg, bs, mid, opt) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double WvNProblem::q_wn(double x) const { return c * std::sin(2 * omega * x + delta) / std::pow(x, gamma); }

double WvNProblem::potential(double x) const {
    double v = bg(x) + q_wn(x);
    if (q1) v += q1(x);
    return v;
}

void WvNProblem::validate() const {
    if (!(gamma > 0.5 && gamma < 1.0)) throw PreconditionError("gamma must lie in (1/2, 1)");
    if (!(omega != 0.0) || !std::isfinite(omega)) throw PreconditionError("omega must be nonzero");
    if (!(alpha >= 0.0 && alpha < kPi)) throw PreconditionError("alpha must lie in [0, pi)");
    if (!std::isfinite(c) || !std::isfinite(delta)) throw PreconditionError("c and delta must be finite");
    const double r = 2 * bg.a * std::abs(omega) / kPi;
    if (std::abs(r - std::round(r)) < kResonanceTol)
        throw PreconditionError("2 a omega / pi must not be an integer: critical points would coincide with band edges");
    if (q1) {
        if (!(alpha1 > 0) || !(c1 >= 0)) throw PreconditionError("q1 envelope needs c1 >= 0 and alpha1 > 0");
        for (int i = 0; i <= 400; ++i) {
            const double x = std::pow(10.0, 4.0 * i / 400.0);
            const double bound = c1 / std::pow(x, 1 + alpha1);
            const double v = q1(x);
            if (!std::isfinite(v) || std::abs(v) > bound * (1 + 1e-9) + 1e-300) {
                std::ostringstream os;
                os << "q1 violates its envelope c1 / x^(1 + alpha1) at x = " << x;
                throw PreconditionError(os.str());
            }
        }
    }
}

CriticalPoint locate_critical(const WvNProblem& p, const BandStructure& bs, int j, int sign,
                              const FloquetOptions& opt) {
    p.validate();
    if (sign != 1 && sign != -1) throw PreconditionError("sign must be + or -");
    if (j < 0 || j >= static_cast<int>(bs.bands.size())) throw PreconditionError("band index out of range");
    const double r = p.bg.a * std::abs(p.omega) / kPi;
    const double fr = frac_part(r);
    const int fl = static_cast<int>(std::floor(r));
    if (fr < kResonanceTol || std::abs(fr - 0.5) < kResonanceTol || fr > 1 - kResonanceTol)
        throw PreconditionError("critical points must not coincide with the band edges");

    const auto& b = bs.bands[static_cast<std::size_t>(j)];
    const double tol = 1e-11 * (b.hi - b.lo);
    auto target = [&](int s) { return s > 0 ? kPi * (j + 1 - fr) : kPi * (j + fr); };

    CriticalPoint c;
    c.j = j;
    c.sign = sign;
    c.k_target = target(sign);
    c.n_cr = sign > 0 ? -(j + 1 + fl) : j - fl;
    c.nu = solve_k(p.bg, bs, j, c.k_target, tol, opt);
    c.band_lo = b.lo;
    c.band_hi = b.hi;
    c.kprime = quasimomentum(p.bg, bs, c.nu, opt).second;
    const double other = solve_k(p.bg, bs, j, target(-sign), tol, opt);
    c.radius = kNeighbourhood * std::min({c.nu - b.lo, b.hi - c.nu, 0.5 * std::abs(other - c.nu)});
    return c;
}

std::pair<double, double> beta_phi_cr(const WvNProblem& p, const CriticalPoint& crit, const BlochData& bd) {
    const double w2 = 2 * std::abs(p.omega);
    const int s = crit.sign;
    const cplx integral = period_integral(p.bg, bd, [w2, s](double t, cplx psi) {
        const cplx v = s > 0 ? psi : std::conj(psi);
        return v * v * std::polar(1.0, w2 * t);
    });
    const cplx norm = period_integral(p.bg, bd, [](double, cplx psi) { return cplx(std::norm(psi), 0.0); });
    if (std::abs(integral) < kDegenerateTol * norm.real())
        throw PreconditionError("beta_phi_cr: degenerate resonance (vanishing Bloch overlap)");
    // Negative omega or c are folded into the phase: c sin(2wx + d) = |c| sin(2|w|x + d'), d' = +-d (+ pi).
    double delta = p.omega > 0 ? p.delta : kPi - p.delta;
    if (p.c < 0) delta += kPi;
    const double beta = std::abs(p.c) / (2 * p.bg.a * std::abs(bd.wronskian)) * std::abs(integral);
    const double phi = std::remainder(s * (delta + std::arg(integral)), 2 * kPi);
    return {beta, phi <= -kPi ? phi + 2 * kPi : phi};
}

double eps_cr(const WvNProblem& p, const BandStructure& bs, const CriticalPoint& crit, double lambda,
              const FloquetOptions& opt) {
    if (bs.band_of(lambda) != crit.j) throw NumericError("eps_cr: energy outside the band of the critical point");
    return 2 * kPi * (quasimomentum_raw(p.bg, bs, lambda, opt) - crit.k_target) / p.bg.a;
}

double eps_cr_inverse(const WvNProblem& p, const BandStructure& bs, const CriticalPoint& crit, double eps0,
                      const FloquetOptions& opt) {
    const double target = crit.k_target + p.bg.a * eps0 / (2 * kPi);
    const double tol = 1e-13 * std::max(1.0, crit.band_hi);
    return solve_k(p.bg, bs, crit.j, target, tol, opt);
}

ResolvedCritical resolve_critical(const WvNProblem& p, const BandStructure& bs, int j, int sign,
                                  std::optional<cplx> rescale, const FloquetOptions& opt) {
    ResolvedCritical r;
    r.crit = locate_critical(p, bs, j, sign, opt);
    r.bloch = bloch(p.bg, bs, r.crit.nu, rescale, opt);
    // |W| for the Bloch solution with unit mean square over a period, so a_cr does not depend on its scaling.
    const cplx norm = period_integral(p.bg, r.bloch, [](double, cplx psi) { return cplx(std::norm(psi), 0.0); });
    r.crit.abs_w = std::abs(r.bloch.wronskian) * p.bg.a / norm.real();
    std::tie(r.crit.beta_cr, r.crit.phi_cr) = beta_phi_cr(p, r.crit, r.bloch);
    return r;
}

}  // namespace pg
