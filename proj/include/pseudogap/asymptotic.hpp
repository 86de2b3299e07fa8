#pragma once

#include "pseudogap/critical.hpp"

namespace pg {

struct ExponentCoefficient {
    double value = 0.0;
    double quadrature = 0.0;
    double discrepancy = 0.0;
};

// E(beta, gamma) = integral over (0, t0) of sqrt(beta^2 / t^(2 gamma) - 1/4).
ExponentCoefficient exponent_coefficient(double beta, double gamma);

double c_cr(double beta_cr, double gamma, double kprime, double a);

struct MatchingConstant {
    double C_mp = 0.0;
    double c_vp = 0.0;
    double i1 = 0.0, i2 = 0.0, i3 = 0.0;
};

MatchingConstant c_mp(double beta, double gamma);

struct DensityPrefactor {
    double value = 0.0;
    double route_a = 0.0;
    double rel_diff = 0.0;
};

DensityPrefactor a_cr(double beta_cr, double gamma, double abs_w);

struct AsymptoticPrediction {
    double exponent_coeff = 0.0;
    double c_cr = 0.0;
    double C_mp = 0.0;
    double a_cr = 0.0;
    double c_vp = 0.0;
};

AsymptoticPrediction predict(const CriticalPoint& crit, double gamma, double a);

}  // namespace pg
