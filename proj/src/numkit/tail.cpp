#include <algorithm>
#include <cmath>

#include "pseudogap/numkit.hpp"

namespace pg {

namespace {

// Trapezoid mean of the piecewise-linear interpolant of (x, v) over [lo, hi].
double window_mean(const std::vector<double>& x, const std::vector<double>& v, double lo, double hi) {
    auto value_at = [&](double t) {
        auto it = std::upper_bound(x.begin(), x.end(), t);
        if (it == x.begin()) return v.front();
        if (it == x.end()) return v.back();
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
        return (1 - w) * v[i - 1] + w * v[i];
    };
    auto first = std::upper_bound(x.begin(), x.end(), lo);
    double prev_x = lo, prev_v = value_at(lo), acc = 0.0;
    for (auto it = first; it != x.end() && *it < hi; ++it) {
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        acc += 0.5 * (x[i] - prev_x) * (v[i] + prev_v);
        prev_x = x[i];
        prev_v = v[i];
    }
    acc += 0.5 * (hi - prev_x) * (value_at(hi) + prev_v);
    return acc / (hi - lo);
}

}  // namespace

LimitEstimate tail_limit(const std::vector<double>& x, const std::vector<double>& v, double period,
                         double decay_exponent, double rel_tol) {
    if (x.size() != v.size() || x.size() < 2) throw NumericError("tail_limit: need matching samples");
    if (!(period > 0)) throw NumericError("tail_limit: period must be positive");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw NumericError("tail_limit: abscissae must increase");
    for (double vi : v)
        if (!std::isfinite(vi)) throw NumericError("tail_limit: non-finite sample");
    const double span = x.back() - x.front();
    if (span < 8 * period * (1 - 1e-12)) throw NumericError("tail_limit: window shorter than eight periods");

    const std::size_t n = static_cast<std::size_t>(std::floor(span / period + 1e-9));
    const double end = x.back();
    std::vector<double> avg(n), drift(n);
    std::vector<double> xp(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xp[i] = decay_exponent != 0 ? std::pow(x[i], decay_exponent) : 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        const double hi = end - static_cast<double>(n - 1 - m) * period;
        const double lo = hi - period;
        avg[m] = window_mean(x, v, lo, hi);
        drift[m] = window_mean(x, xp, lo, hi);
    }

    // Least-squares Richardson step avg = L + K * drift over the later half of the windows.
    const std::size_t first = n / 2;
    double limit = 0.0, slope = 0.0;
    if (decay_exponent != 0) {
        double ms = 0, ma = 0;
        const double cnt = static_cast<double>(n - first);
        for (std::size_t m = first; m < n; ++m) {
            ms += drift[m];
            ma += avg[m];
        }
        ms /= cnt;
        ma /= cnt;
        double sxx = 0, sxy = 0;
        for (std::size_t m = first; m < n; ++m) {
            sxx += (drift[m] - ms) * (drift[m] - ms);
            sxy += (drift[m] - ms) * (avg[m] - ma);
        }
        slope = sxx > 0 ? sxy / sxx : 0.0;
        limit = ma - slope * ms;
    } else {
        for (std::size_t m = first; m < n; ++m) limit += avg[m];
        limit /= static_cast<double>(n - first);
    }

    double lo_c = kInf, hi_c = -kInf;
    for (std::size_t m = n - 3; m < n; ++m) {
        const double c = avg[m] - slope * drift[m];
        lo_c = std::min(lo_c, c);
        hi_c = std::max(hi_c, c);
    }

    LimitEstimate e;
    e.value = limit;
    e.error_bar = std::max(0.0, hi_c - lo_c);
    e.window_lo = end - static_cast<double>(n) * period;
    e.window_hi = end;
    e.converged = std::isfinite(limit) && e.error_bar <= rel_tol * std::abs(limit);
    return e;
}

}  // namespace pg
