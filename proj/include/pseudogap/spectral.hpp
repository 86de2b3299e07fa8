#pragma once

#include <utility>
#include <vector>

#include "pseudogap/critical.hpp"
#include "pseudogap/numkit.hpp"

namespace pg {

struct SpectralOptions {
    double ode_tol = 1e-10;
    double quad_tol = 1e-10;
    // The x^(-gamma) singularity at the origin is bridged by a two-term Picard step on [0, x_start].
    double x_start = 1e-6;
    // 0 selects max(10 |eps_cr|^(-1/gamma), 1e5).
    double x_max = 0.0;
    double x_max_cap = 2e6;
    double tail_rel_tol = 1e-2;
    int grid_per_period = 64;
    std::size_t max_tail_samples = 40000;
    // Per-integration step budget; exhausting it marks the sample unconverged.
    std::size_t max_steps = 200000000;
    FloquetOptions floquet;
};

// (phi, phi') of -phi'' + V phi = lambda phi, phi(0) = sin alpha, phi'(0) = cos alpha, recorded at outputs.
Trajectory integrate_eigenfunction(const WvNProblem& p, double lambda, double x_max,
                                   const std::vector<double>& outputs, const SpectralOptions& opt = {});

// Beat frequency of the closest resonance at energy lambda in band j: 2 min_s |k - k_target(s)| / a; 0 for c = 0.
// This is |eps_cr| / pi; the carrier period of A(x) is 2 pi / beat.
double resonant_beat(const WvNProblem& p, const BandStructure& bs, int j, double k);

double spectral_x_max(const WvNProblem& p, double eps, const SpectralOptions& opt = {});

struct JostEstimate {
    cplx A;
    // Natural log of |A|, valid beyond the double range.
    double log_abs_A = 0.0;
    double tail_error = 0.0;
    bool converged = true;
    double x_max = 0.0;
};

// A_alpha from A(x) = W{phi, psi+}(x) / W{psi-, psi+}; modulus and unwrapped phase are averaged over the carrier period.
JostEstimate jost_coefficient(const WvNProblem& p, const BlochData& bd, double lambda, double x_max, double carrier_period,
                              const SpectralOptions& opt = {});

// A(x) at the requested multiples of the Bloch grid spacing; used for the constancy check.
std::vector<std::pair<double, cplx>> jost_estimator(const WvNProblem& p, const BlochData& bd, double lambda,
                                                    const std::vector<long long>& grid_indices,
                                                    const SpectralOptions& opt = {});

struct DensitySample {
    double lambda = 0.0;
    cplx A_alpha;
    double rho_prime = 0.0;
    double log_rho_prime = 0.0;
    double tail_error = 0.0;
    double x_max_used = 0.0;
    bool converged = true;
};

DensitySample spectral_density(const WvNProblem& p, const BandStructure& bs, double lambda,
                               std::optional<cplx> rescale = std::nullopt, const SpectralOptions& opt = {});

struct AlphaCrEstimate {
    double alpha_cr = 0.0;
    double growth_A = 0.0;  // alpha = pi/2
    double growth_B = 0.0;  // alpha = 0
    double residual = 0.0;
    // Unit phase of the growing mode in the A(x) representation; growth coefficients are projections onto it.
    cplx reference{1.0, 0.0};
    bool flagged = false;
};

// Envelope-normalised amplitude lim A_alpha(x) exp(-beta_cr x^(1-gamma)/(1-gamma)) at lambda = nu_cr.
LimitEstimate growth_coefficient(const WvNProblem& p, const ResolvedCritical& rc, double alpha, cplx reference,
                                 const SpectralOptions& opt = {});
cplx growth_amplitude(const WvNProblem& p, const ResolvedCritical& rc, double alpha, const SpectralOptions& opt = {});

AlphaCrEstimate estimate_alpha_cr(const WvNProblem& p, const ResolvedCritical& rc, const SpectralOptions& opt = {});

struct PseudogapFit {
    int side = 1;  // +1 above nu, -1 below
    std::vector<std::pair<double, double>> points;  // (|lambda - nu|, ln rho')
    double slope = 0.0;
    double slope_error = 0.0;
    double slope_target = 0.0;
    double rel_dev = 0.0;
    bool valid = false;
};

struct Sin2Report {
    double offset = 0.0;
    double lambda = 0.0;
    std::vector<double> alphas;
    std::vector<double> rho_sin2;
    double spread = 0.0;
    // Minimiser of the least-squares fit 1/rho' = p0 + p1 cos 2 alpha + p2 sin 2 alpha.
    double alpha_fit = 0.0;
};

struct ScanSample {
    int side = 1;
    double offset = 0.0;
    DensitySample density;
};

struct ScanOptions {
    bool above = true;
    bool below = true;
    // 0 selects the largest offset.
    double sin2_offset = 0.0;
    bool sin2 = true;
    SpectralOptions spectral;
};

struct PseudogapScan {
    std::vector<ScanSample> samples;
    PseudogapFit above, below;
    Sin2Report sin2;
    AlphaCrEstimate alpha;
    double c_cr = 0.0;
};

inline constexpr std::size_t kMinFitPoints = 5;

// Geometric grid lo, ..., hi with n points.
std::vector<double> geometric_offsets(double lo, double hi, int n);

PseudogapFit fit_pseudogap(const std::vector<std::pair<double, double>>& points, double gamma, double slope_target,
                           int side);

PseudogapScan pseudogap_scan(const WvNProblem& p, const BandStructure& bs, const ResolvedCritical& rc,
                             const AlphaCrEstimate& alpha, const std::vector<double>& offsets,
                             const ScanOptions& opt = {});

}  // namespace pg
