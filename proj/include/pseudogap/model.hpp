#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "pseudogap/numkit.hpp"

namespace pg {

using CMat2 = std::array<std::array<cplx, 2>, 2>;
using CVec2 = std::array<cplx, 2>;

// r[i][j] = R_ij(x, eps0).
using RemainderFn = std::function<void(double x, double eps0, double r[2][2])>;

struct ModelSpec {
    double beta = 0.25;
    double gamma = 0.6;
    RemainderFn remainder;  // empty means R = 0
    // Envelope ||R(x, eps0)|| <= c_r / (1 + x)^(1 + alpha_r).
    double c_r = 0.0;
    double alpha_r = 1.0;
    CVec2 f{cplx(1.0, 0.0), cplx(0.0, 0.0)};

    void validate() const;
};

struct ModelOptions {
    double tol = 1e-11;
    double x_start = 1e-6;
    // 0 selects max(10 |eps0|^(-1/gamma), 1e5).
    double x_max = 0.0;
    double x_max_cap = kInf;
    double tail_rel_tol = 1e-2;
};

struct ModelSolution {
    double eps0 = 0.0;
    double x_max = 0.0;
    // eps0 != 0: period-averaged limit of u and of its norm, with ln of the norm limit.
    CVec2 limit{};
    LimitEstimate norm;
    double log_limit_norm = 0.0;
    // eps0 == 0: u(x_max) exp(-beta x_max^(1-gamma) / (1-gamma)); its first entry is the growth coefficient.
    CVec2 envelope_state{};
    double growth_change = 0.0;
    std::size_t steps = 0;
};

double model_x_max(double eps0, double gamma, const ModelOptions& opt = {});

ModelSolution solve_model(const ModelSpec& spec, double eps0, const ModelOptions& opt = {});

// u(x, eps0, f) at ascending abscissae xs >= opt.x_start.
std::vector<CVec2> model_states(const ModelSpec& spec, double eps0, const std::vector<double>& xs,
                                const ModelOptions& opt = {});

struct PhiReport {
    cplx phi_growth;
    cplx phi_integral;
    double rel_diff = 0.0;
    CVec2 f_minus{};
};

// Growth functional of the eps0 = 0 problem at spec.f, by two routes, and its kernel direction.
PhiReport phi_functional(const ModelSpec& spec, const ModelOptions& opt = {});

struct LimitRatioRow {
    double eps0 = 0.0;
    double eps = 0.0;
    double limit_norm = 0.0;
    double ratio = 0.0;
    double target = 0.0;
    double error_bar = 0.0;
    bool converged = false;
};

std::vector<LimitRatioRow> verify_limit_ratios(const ModelSpec& spec, const std::vector<double>& eps0_list,
                                         bool both_signs, const ModelOptions& opt = {});

// Named remainder/initial-vector fixtures: zero_plus, zero_fminus, offdiag, offdiag_fminus.
ModelSpec model_fixture(const std::string& name, double beta, double gamma);
std::vector<std::string> model_fixture_names();

struct RegionSchedule {
    double beta = 0.0, gamma = 0.0, eps = 0.0;
    double t0 = 0.0, c0 = 0.0, kappa = 0.0;
    double Z0 = 0.0, Z1 = 0.0, Z2 = 0.0;
    double t_I_II = 0.0, t_II_III = 0.0, t_III_IV = 0.0, t_IV_V = 0.0;

    double z_map(double t) const;
    double z_unmap(double z) const;
};

inline constexpr double kDefaultZ0 = 2.0;

// Throws PreconditionError when the region ordering fails.
RegionSchedule region_schedule(double beta, double gamma, double eps, double Z0 = kDefaultZ0);

CMat2 airy_matrix_solution(double z, double c0);

enum class SeedMode { airy, wkb };

struct ConnectionReport {
    double eps = 0.0;
    CMat2 D{};
    double col1_target_dev = 0.0;
    double det_dev = 0.0;
    // Deviations from the limits implied by the standard Airy asymptotics: col1 -> (e^{i pi/4}, e^{-i pi/4}), |det D| -> 1.
    double col1_rederived_dev = 0.0;
    double det_rederived_dev = 0.0;
};

ConnectionReport connection_matrix(double beta, double gamma, double eps, double Z0 = kDefaultZ0,
                                   SeedMode seeds = SeedMode::airy, double tol = 1e-12);

}  // namespace pg
