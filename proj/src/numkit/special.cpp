#include <cmath>

#include "pseudogap/numkit.hpp"

namespace pg {

double log_gamma(double x) {
    if (!(x > 0) || !std::isfinite(x)) throw NumericError("log_gamma: argument must be positive");
    return std::lgamma(x);
}

double beta_fn(double p, double q) {
    if (!(p > 0) || !(q > 0)) throw NumericError("beta_fn: arguments must be positive");
    return std::exp(log_gamma(p) + log_gamma(q) - log_gamma(p + q));
}

namespace {

// Ai(0) and -Ai'(0).
const double kC1 = 0.355028053887817239260;
const double kC2 = 0.258819403792806798405;
const double kSqrt3 = 1.732050807568877293527;

struct Series {
    double f, g, fp, gp;
};

Series maclaurin(double z) {
    const double z3 = z * z * z;
    double t = 1.0, u = z;
    Series s{1.0, z, 0.0, 1.0};
    double tp = 0.5 * z * z, up = z3 / 3.0;
    s.fp = tp;
    s.gp += up;
    for (int k = 0; k < 200; ++k) {
        t *= z3 / ((3.0 * k + 2) * (3.0 * k + 3));
        u *= z3 / ((3.0 * k + 3) * (3.0 * k + 4));
        s.f += t;
        s.g += u;
        if (k > 0) {
            tp *= z3 / ((3.0 * k) * (3.0 * k + 2));
            up *= z3 / ((3.0 * k + 1) * (3.0 * k + 3));
            s.fp += tp;
            s.gp += up;
        }
        const double mag = std::abs(s.f) + std::abs(s.g) + std::abs(s.fp) + std::abs(s.gp);
        if (std::abs(t) + std::abs(u) + std::abs(tp) + std::abs(up) < 1e-18 * mag && k > 2) break;
    }
    return s;
}

void bessel_positive(double z, AiryValues& r, bool ai, bool bi) {
    const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
    const double s = std::sqrt(z / 3.0);
    if (ai) {
        r.ai = s / kPi * std::cyl_bessel_k(1.0 / 3.0, zeta);
        r.aip = -z / (kPi * kSqrt3) * std::cyl_bessel_k(2.0 / 3.0, zeta);
    }
    if (bi) {
        const double k13 = std::cyl_bessel_k(1.0 / 3.0, zeta), k23 = std::cyl_bessel_k(2.0 / 3.0, zeta);
        const double i13 = std::cyl_bessel_i(1.0 / 3.0, zeta), i23 = std::cyl_bessel_i(2.0 / 3.0, zeta);
        const double im13 = i13 + 2.0 / kPi * std::sin(kPi / 3.0) * k13;
        const double im23 = i23 + 2.0 / kPi * std::sin(2.0 * kPi / 3.0) * k23;
        r.bi = s * (im13 + i13);
        r.bip = z / kSqrt3 * (im23 + i23);
    }
}

void bessel_negative(double z, AiryValues& r) {
    const double x = -z;
    const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
    const double j13 = std::cyl_bessel_j(1.0 / 3.0, zeta), y13 = std::cyl_neumann(1.0 / 3.0, zeta);
    const double j23 = std::cyl_bessel_j(2.0 / 3.0, zeta), y23 = std::cyl_neumann(2.0 / 3.0, zeta);
    const double jm13 = std::cos(kPi / 3.0) * j13 - std::sin(kPi / 3.0) * y13;
    const double jm23 = std::cos(2.0 * kPi / 3.0) * j23 - std::sin(2.0 * kPi / 3.0) * y23;
    const double sx = std::sqrt(x);
    r.ai = sx / 3.0 * (j13 + jm13);
    r.aip = x / 3.0 * (j23 - jm23);
    r.bi = sx / kSqrt3 * (jm13 - j13);
    r.bip = x / kSqrt3 * (jm23 + j23);
}

}  // namespace

AiryValues airy_pair(double z) {
    if (!(std::abs(z) <= kAiryMaxArg)) throw NumericError("airy_pair: argument out of range");
    AiryValues r{};
    if (z < -kAirySwitch) {
        bessel_negative(z, r);
        return r;
    }
    const bool series_ai = z <= 3.0;
    const bool series_bi = z <= kAirySwitch;
    if (series_ai || series_bi) {
        const Series s = maclaurin(z);
        if (series_ai) {
            r.ai = kC1 * s.f - kC2 * s.g;
            r.aip = kC1 * s.fp - kC2 * s.gp;
        }
        if (series_bi) {
            r.bi = kSqrt3 * (kC1 * s.f + kC2 * s.g);
            r.bip = kSqrt3 * (kC1 * s.fp + kC2 * s.gp);
        }
    }
    if (!series_ai || !series_bi) bessel_positive(z, r, !series_ai, !series_bi);
    return r;
}

}  // namespace pg
