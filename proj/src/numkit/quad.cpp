#include <algorithm>
#include <cmath>

#include "pseudogap/numkit.hpp"

namespace pg {

namespace {

constexpr int kMaxLevel = 9;
constexpr int kMaxDepth = 24;
constexpr double kHalfPi = kPi / 2;

double magnitude(double v) { return std::abs(v); }
double magnitude(const cplx& v) { return std::abs(v); }

// Tanh-sinh sum on [a, b]; nodes near either end are placed by their distance to that end.
template <class T, class F>
bool tanh_sinh(const F& f, double a, double b, double tol, T& result) {
    const double d = 0.5 * (b - a);
    double l1 = 0.0;
    auto term = [&](double t, bool& done) -> T {
        const double u = kHalfPi * std::sinh(t);
        const double q = std::exp(-2 * std::abs(u));
        const double delta = 2 * d * q / (1 + q);
        const double w = d * kHalfPi * std::cosh(t) * 4 * q / ((1 + q) * (1 + q));
        if (delta == 0 || w == 0) {
            done = true;
            return T{};
        }
        const double x = u < 0 ? a + delta : (u > 0 ? b - delta : a + d);
        if (x <= a || x >= b) return T{};
        const T v = w * f(x);
        if (!std::isfinite(magnitude(v)) && delta < 1e-8 * d) {
            done = true;
            return T{};
        }
        l1 += magnitude(v);
        return v;
    };
    auto sweep = [&](double h, int start, int stride) {
        T add{};
        bool lo_done = false, hi_done = false;
        for (int j = start; !(lo_done && hi_done); j += stride) {
            const double t = j * h;
            if (t > 8.0) break;
            if (!hi_done) add += term(t, hi_done);
            if (!lo_done) add += term(-t, lo_done);
        }
        return add;
    };

    bool unused = false;
    double h = 1.0;
    T sum = term(0.0, unused) + sweep(h, 1, 1);
    T prev = h * sum;
    for (int level = 1; level <= kMaxLevel; ++level) {
        h *= 0.5;
        sum += sweep(h, 1, 2);
        const T cur = h * sum;
        if (!std::isfinite(magnitude(cur))) return false;
        const double diff = magnitude(cur - prev);
        const double floor = std::max(1e-15, 32 * std::numeric_limits<double>::epsilon() * h * l1);
        if (level >= 3 && diff <= std::max(tol * magnitude(cur), floor)) {
            result = cur;
            return true;
        }
        prev = cur;
    }
    result = prev;
    return false;
}

template <class T, class F>
T adaptive(const F& f, double a, double b, double tol, int depth) {
    T r{};
    if (tanh_sinh<T>(f, a, b, tol, r)) return r;
    if (depth >= kMaxDepth) throw NumericError("quad_adaptive: no convergence within the depth limit");
    const double m = 0.5 * (a + b);
    return adaptive<T>(f, a, m, tol, depth + 1) + adaptive<T>(f, m, b, tol, depth + 1);
}

template <class T, class F>
T integrate(const F& f, double a, double b, double tol) {
    if (a == b) return T{};
    if (!std::isfinite(a) || !std::isfinite(b)) throw NumericError("quad_adaptive: limits must be finite");
    if (b < a) return -integrate<T>(f, b, a, tol);
    return adaptive<T>(f, a, b, tol, 0);
}

}  // namespace

double quad_real(const std::function<double(double)>& f, double a, double b, double tol) {
    return integrate<double>(f, a, b, tol);
}

cplx quad_complex(const std::function<cplx(double)>& f, double a, double b, double tol) {
    return integrate<cplx>(f, a, b, tol);
}

double quad_pv(const std::function<double(double)>& f, double a, double b, double pole, double tol) {
    if (!(a < pole && pole < b) || !std::isfinite(a)) throw NumericError("quad_pv: pole outside (a, b)");
    const bool infinite = !std::isfinite(b);
    const double d = infinite ? pole - a : std::min(pole - a, b - pole);

    const double hr = 1e-4 * d;
    const double residue = 0.5 * hr * (f(pole + hr) - f(pole - hr));
    if (!std::isfinite(residue)) throw NumericError("quad_pv: residue estimate is not finite");

    // The subtracted term integrates to zero over the symmetric core.
    auto core = [&](double s) {
        const double tp = pole + s, tm = pole - s;
        const double sp = tp - pole, sm = pole - tm;
        if (sp <= 0 || sm <= 0) return 0.0;
        return (f(tp) - residue / sp) + (f(tm) + residue / sm);
    };
    // The symmetric sum is even in s; close to the pole it is modelled as A + B s^2.
    const double sc = 1e-3 * d;
    const double g1 = core(sc), g2 = core(2 * sc);
    const double bq = (g2 - g1) / (3 * sc * sc);
    const double aq = g1 - bq * sc * sc;
    double result = aq * sc + bq * sc * sc * sc / 3 + quad_adaptive(core, sc, d, tol);

    if (infinite) {
        const double lo = pole + d;
        auto tail = [&](double v) {
            if (v < 1e-100) return 0.0;
            const double t = lo - 1.0 + 1.0 / v;
            return f(t) / (v * v);
        };
        result += quad_adaptive(tail, 0.0, 1.0, tol);
    } else if (b - pole > d) {
        result += quad_adaptive(f, pole + d, b, tol);
    } else if (pole - a > d) {
        result += quad_adaptive(f, a, pole - d, tol);
    }
    return result;
}

}  // namespace pg
