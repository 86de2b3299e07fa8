#pragma once

#include <functional>
#include <optional>

#include "pseudogap/floquet.hpp"

namespace pg {

struct WvNProblem {
    PeriodicBackground bg = PeriodicBackground::free(1.0);
    double c = 0.0;
    double omega = 1.0;
    double delta = 0.0;
    double gamma = 0.75;
    // Summable part; empty means absent. Envelope |q1(x)| <= c1 / x^(1 + alpha1).
    std::function<double(double)> q1;
    double c1 = 0.0;
    double alpha1 = 1.0;
    double alpha = 0.0;

    double q_wn(double x) const;
    // Full potential q + q_WN + q1 at x > 0.
    double potential(double x) const;
    // Throws PreconditionError naming the violated condition.
    void validate() const;
};

struct CriticalPoint {
    int j = 0;
    int sign = 1;
    double nu = 0.0;
    double k_target = 0.0;
    int n_cr = 0;
    double beta_cr = 0.0;
    double phi_cr = 0.0;
    double kprime = 0.0;
    // Wronskian modulus in the unit mean-square normalisation of the Bloch solution.
    double abs_w = 0.0;
    double band_lo = 0.0, band_hi = 0.0;
    // Half-width of the admissible neighbourhood around nu.
    double radius = 0.0;
};

CriticalPoint locate_critical(const WvNProblem& p, const BandStructure& bs, int j, int sign,
                              const FloquetOptions& opt = {});

// (beta_cr, phi_cr) from the Bloch data at nu; phi in (-pi, pi].
std::pair<double, double> beta_phi_cr(const WvNProblem& p, const CriticalPoint& crit, const BlochData& bd);

double eps_cr(const WvNProblem& p, const BandStructure& bs, const CriticalPoint& crit, double lambda,
              const FloquetOptions& opt = {});
double eps_cr_inverse(const WvNProblem& p, const BandStructure& bs, const CriticalPoint& crit, double eps0,
                      const FloquetOptions& opt = {});

struct ResolvedCritical {
    CriticalPoint crit;
    BlochData bloch;
};

// Location, Bloch data and resonance constants of one critical point.
ResolvedCritical resolve_critical(const WvNProblem& p, const BandStructure& bs, int j, int sign,
                                  std::optional<cplx> rescale = std::nullopt, const FloquetOptions& opt = {});

}  // namespace pg
