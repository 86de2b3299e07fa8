#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pseudogap/numkit.hpp"

namespace pg {

using Mat2 = std::array<std::array<double, 2>, 2>;

struct PeriodicBackground {
    // Potential over one period; called only on [0, a].
    std::function<double(double)> q;
    double a = 1.0;
    double q_min = 0.0;
    bool is_zero = false;

    // Periodic extension of q.
    double operator()(double x) const;

    static PeriodicBackground free(double a);
    static PeriodicBackground constant(double v0, double a);
    static PeriodicBackground from_callback(std::function<double(double)> q, double a);
    // Uniform samples over one period, periodic cubic interpolation.
    static PeriodicBackground sampled(std::vector<double> values, double a);
    static PeriodicBackground from_file(const std::string& path, double a);
};

struct Band {
    int j = 0;
    double lo = 0.0, hi = 0.0;
};

struct BandStructure {
    std::vector<double> edges;
    std::vector<Band> bands;
    std::vector<double> branch_offsets;

    // Index of the band containing lambda in its closure, or -1.
    int band_of(double lambda) const;
};

struct BlochData {
    double lambda = 0.0;
    int band = 0;
    double k = 0.0;
    double kprime = 0.0;
    cplx psi0{1.0, 0.0};
    cplx dpsi0{0.0, 0.0};
    cplx wronskian{0.0, 0.0};
    bool swapped = false;
};

struct FloquetOptions {
    double ode_tol = 1e-12;
    double root_tol = 1e-10;
    double edge_guard = 1e-6;
};

Mat2 monodromy(const PeriodicBackground& bg, double lambda, const FloquetOptions& opt = {});
double discriminant(const PeriodicBackground& bg, double lambda, const FloquetOptions& opt = {});
// Discriminant and its energy derivative from the variational equations.
std::pair<double, double> discriminant_with_derivative(const PeriodicBackground& bg, double lambda,
                                                       const FloquetOptions& opt = {});

BandStructure band_edges(const PeriodicBackground& bg, int j_max, const FloquetOptions& opt = {});

// Quasimomentum without the edge guard; lambda must lie in the closure of a band.
double quasimomentum_raw(const PeriodicBackground& bg, const BandStructure& bs, double lambda,
                         const FloquetOptions& opt = {});
std::pair<double, double> quasimomentum(const PeriodicBackground& bg, const BandStructure& bs, double lambda,
                                        const FloquetOptions& opt = {});

BlochData bloch(const PeriodicBackground& bg, const BandStructure& bs, double lambda,
                std::optional<cplx> rescale = std::nullopt, const FloquetOptions& opt = {});

// Values of (y1, y1', y2, y2') of the canonical fundamental system at ascending nodes in [0, a].
std::vector<std::array<double, 4>> hill_fundamental(const PeriodicBackground& bg, double lambda,
                                                    const std::vector<double>& nodes, double tol = 1e-12);

// Integral over one period of g(t, psi_plus(t)), by composite Gauss-Legendre with panel doubling.
cplx period_integral(const PeriodicBackground& bg, const BlochData& bd,
                     const std::function<cplx(double, cplx)>& g, double tol = 1e-12);

cplx fourier_bn_plus(const PeriodicBackground& bg, const BlochData& bd, int n);

// Bloch solution sampled at x = m a / n_per_period, extended by quasi-periodicity.
class BlochGrid {
public:
    BlochGrid(const PeriodicBackground& bg, const BlochData& bd, int n_per_period, double tol = 1e-12);
    int per_period() const { return n_; }
    double spacing() const { return a_ / n_; }
    // psi_plus and its derivative at x = m * spacing(), m >= 0.
    std::pair<cplx, cplx> at(long long m) const;

private:
    int n_;
    double a_;
    double k_;
    std::vector<cplx> psi_, dpsi_;
};

}  // namespace pg
