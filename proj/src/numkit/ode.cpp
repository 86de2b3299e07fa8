#include <algorithm>
#include <cmath>
#include <sstream>

#include "pseudogap/numkit.hpp"

namespace pg {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;
constexpr double kBeta = 0.04;

double max_norm(const State& y) {
    double m = 0.0;
    for (double v : y) m = std::max(m, std::abs(v));
    return m;
}

[[noreturn]] void fail(const char* what, double x) {
    std::ostringstream os;
    os.precision(17);
    os << what << " at x = " << x;
    throw IntegrationError(os.str(), x);
}

}  // namespace

Trajectory integrate_ivp(const Field& f, double x0, double x1, State y, const IvpOptions& opt) {
    if (!(opt.tol > 1e-14 && opt.tol <= 1e-2)) throw NumericError("integrate_ivp: tol outside (1e-14, 1e-2]");
    if (!(x1 != x0) || !std::isfinite(x0) || !std::isfinite(x1))
        throw NumericError("integrate_ivp: degenerate span");
    if (!(opt.max_step > 0)) throw NumericError("integrate_ivp: max_step must be positive");

    const std::size_t n = y.size();
    const double dir = x1 > x0 ? 1.0 : -1.0;
    const double span = std::abs(x1 - x0);

    Trajectory tr;
    std::size_t next_out = 0;
    double log_scale = 0.0;
    double x = x0;

    auto record = [&]() {
        tr.x.push_back(x);
        tr.y.push_back(y);
        tr.log_scale.push_back(log_scale);
    };
    while (next_out < opt.outputs.size() && dir * (opt.outputs[next_out] - x0) <= 0) {
        if (opt.outputs[next_out] == x0) record();
        ++next_out;
    }

    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n);
    f(x, y.data(), k1.data());

    double h = opt.initial_step;
    if (h <= 0) {
        const double d0 = max_norm(y), d1 = max_norm(k1);
        h = (d0 > 1e-300 && d1 > 1e-300) ? 0.01 * d0 / d1 : 1e-6 * span;
        h = std::min({h, 0.1 * span});
    }
    h = std::min(h, opt.max_step);
    double err_old = 1e-4;
    bool last_rejected = false;

    while (dir * (x1 - x) > 0) {
        if (tr.steps + tr.rejected >= opt.max_steps) fail("integrate_ivp: step budget exhausted", x);
        double target = x1;
        if (next_out < opt.outputs.size() && dir * (opt.outputs[next_out] - x1) < 0) target = opt.outputs[next_out];
        double hs = std::min({h, opt.max_step, std::abs(target - x)});
        bool hits_target = hs >= std::abs(target - x);
        if (hs < 1e-14 * std::max(1.0, std::abs(x)) && !hits_target) fail("integrate_ivp: step size underflow", x);
        const double hd = dir * hs;

        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hd * a21 * k1[i];
        f(x + c2 * hd, yt.data(), k2.data());
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hd * (a31 * k1[i] + a32 * k2[i]);
        f(x + c3 * hd, yt.data(), k3.data());
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hd * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(x + c4 * hd, yt.data(), k4.data());
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + hd * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(x + c5 * hd, yt.data(), k5.data());
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + hd * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double xn = hits_target ? target : x + hd;
        f(xn, yt.data(), k6.data());
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + hd * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(xn, ynew.data(), k7.data());

        double err = 0.0;
        const double scale = opt.tol * std::max(max_norm(y), max_norm(ynew)) + 1e-300;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double e =
                hd * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            if (!std::isfinite(ynew[i]) || !std::isfinite(e)) finite = false;
            err = std::max(err, std::abs(e) / scale);
        }
        if (!finite) {
            if (hs < 1e-14 * std::max(1.0, std::abs(x))) fail("integrate_ivp: non-finite state", x);
            h = 0.1 * hs;
            ++tr.rejected;
            last_rejected = true;
            continue;
        }

        if (err <= 1.0) {
            x = xn;
            y.swap(ynew);
            k1.swap(k7);
            ++tr.steps;
            if (opt.renorm_threshold > 0) {
                const double m = max_norm(y);
                if (m > opt.renorm_threshold) {
                    for (auto& v : y) v /= m;
                    for (auto& v : k1) v /= m;
                    log_scale += std::log(m);
                }
            }
            if (next_out < opt.outputs.size() && x == opt.outputs[next_out]) {
                record();
                ++next_out;
            }
            const double e = std::max(err, 1e-10);
            double fac = std::pow(e, 0.2 - 0.75 * kBeta) * std::pow(err_old, -kBeta) / kSafety;
            fac = std::clamp(fac, 1.0 / kFacMax, 1.0 / kFacMin);
            double hnew = hs / fac;
            if (last_rejected) hnew = std::min(hnew, hs);
            // A step shortened only to land on an output must not shrink the next one.
            if (hits_target) hnew = std::max(hnew, h);
            h = hnew;
            err_old = e;
            last_rejected = false;
        } else {
            const double fac = std::min(1.0 / kFacMin, std::pow(err, 0.2) / kSafety);
            h = hs / fac;
            ++tr.rejected;
            last_rejected = true;
        }
    }
    if (next_out < opt.outputs.size() && opt.outputs[next_out] == x1 && (tr.x.empty() || tr.x.back() != x1)) {
        record();
    }
    tr.terminal = y;
    tr.terminal_log_scale = log_scale;
    return tr;
}

}  // namespace pg
