#include <algorithm>
#include <cmath>

#include "pseudogap/asymptotic.hpp"
#include "pseudogap/parallel.hpp"
#include "pseudogap/spectral.hpp"

namespace pg {

namespace {

constexpr double kRenorm = 1e50;
constexpr double kXmaxFloor = 1e5;
constexpr double kTailPeriods = 8.0;
constexpr int kSamplesPerPeriod = 32;
constexpr double kAlphaGuard = 0.1;
constexpr double kGrowthSeparation = 5.0;
constexpr double kResidualFlag = 1e-2;

double reduce_pi(double a) {
    double r = std::fmod(a, kPi);
    if (r < 0) r += kPi;
    return r >= kPi ? 0.0 : r;
}

double max_step_for(const WvNProblem& p, double lambda) {
    const double fast = std::max(2 * std::abs(p.omega), std::sqrt(std::abs(lambda)));
    return std::min(2 * kPi / fast / 20, p.bg.a / 16);
}

// Evenly spaced Bloch-grid indices covering [lo, hi]; the stride is kept odd so that samples never
// lock onto the period of the background.
std::vector<long long> tail_indices(double lo, double hi, double h, double period, std::size_t max_samples) {
    const double want = std::max(period / kSamplesPerPeriod, (hi - lo) / static_cast<double>(max_samples));
    long long stride = std::max<long long>(1, static_cast<long long>(std::ceil(want / h)));
    if (stride % 2 == 0) ++stride;
    const long long last = static_cast<long long>(std::floor(hi / h));
    const long long first = static_cast<long long>(std::ceil(lo / h));
    std::vector<long long> idx;
    for (long long m = last; m >= first; m -= stride) idx.push_back(m);
    std::reverse(idx.begin(), idx.end());
    return idx;
}

// A(x) with its log scale at the given grid indices.
struct ScaledSeries {
    std::vector<double> x;
    std::vector<cplx> a;
    std::vector<double> log_scale;
};

ScaledSeries jost_series(const WvNProblem& p, const BlochData& bd, double lambda, const std::vector<long long>& idx,
                         const SpectralOptions& opt) {
    const BlochGrid grid(p.bg, bd, opt.grid_per_period, opt.floquet.ode_tol);
    std::vector<double> xs;
    xs.reserve(idx.size());
    for (long long m : idx) xs.push_back(static_cast<double>(m) * grid.spacing());
    const auto tr = integrate_eigenfunction(p, lambda, xs.back(), xs, opt);
    ScaledSeries s;
    s.x = tr.x;
    s.log_scale = tr.log_scale;
    s.a.resize(idx.size());
    const cplx w_mp = -bd.wronskian;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto [psi, dpsi] = grid.at(idx[i]);
        s.a[i] = (tr.y[i][1] * psi - tr.y[i][0] * dpsi) / w_mp;
    }
    return s;
}

LimitEstimate complex_tail(const std::vector<double>& x, const std::vector<cplx>& v, double period, double decay,
                           double rel_tol, cplx& out) {
    std::vector<double> re(v.size()), im(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        re[i] = v[i].real();
        im[i] = v[i].imag();
    }
    const auto r = tail_limit(x, re, period, decay, rel_tol);
    const auto m = tail_limit(x, im, period, decay, rel_tol);
    out = cplx(r.value, m.value);
    LimitEstimate e = r;
    e.value = std::abs(out);
    e.error_bar = std::hypot(r.error_bar, m.error_bar);
    e.converged = r.converged && m.converged;
    return e;
}

double growth_period(const WvNProblem& p) { return std::max(p.bg.a, kPi / std::abs(p.omega)); }

double growth_x_max(const SpectralOptions& opt) { return std::min(opt.x_max > 0 ? opt.x_max : kXmaxFloor, opt.x_max_cap); }

// Envelope-normalised A(x) exp(-h(x)) at nu_cr.
ScaledSeries growth_series(const WvNProblem& p, const ResolvedCritical& rc, double alpha, const SpectralOptions& opt) {
    WvNProblem q = p;
    q.alpha = alpha;
    const double x_max = growth_x_max(opt);
    const double h = p.bg.a / opt.grid_per_period;
    const auto idx = tail_indices(0.5 * x_max, x_max, h, growth_period(p), opt.max_tail_samples);
    auto s = jost_series(q, rc.bloch, rc.crit.nu, idx, opt);
    const double g = p.gamma, b = rc.crit.beta_cr;
    for (std::size_t i = 0; i < s.x.size(); ++i)
        s.a[i] *= std::exp(s.log_scale[i] - b * std::pow(s.x[i], 1 - g) / (1 - g));
    return s;
}

}  // namespace

Trajectory integrate_eigenfunction(const WvNProblem& p, double lambda, double x_max, const std::vector<double>& outputs,
                                   const SpectralOptions& opt) {
    p.validate();
    const double xs = opt.x_start;
    if (!(x_max > xs)) throw PreconditionError("integrate_eigenfunction: x_max must exceed the start point");
    const double sa = std::sin(p.alpha), ca = std::cos(p.alpha);
    auto v = [&p, lambda](double s) { return p.potential(s) - lambda; };
    const double i0 = quad_real(v, 0.0, xs, opt.quad_tol);
    const double i1 = quad_real([&v](double s) { return s * v(s); }, 0.0, xs, opt.quad_tol);
    State y0{sa + ca * xs + sa * (xs * i0 - i1), ca + sa * i0 + ca * i1};

    Field f = [&p, lambda](double x, const double* y, double* dy) {
        dy[0] = y[1];
        dy[1] = (p.potential(x) - lambda) * y[0];
    };
    IvpOptions o;
    o.tol = opt.ode_tol;
    o.max_step = max_step_for(p, lambda);
    o.renorm_threshold = kRenorm;
    o.max_steps = opt.max_steps;
    o.outputs = outputs;
    return integrate_ivp(f, xs, x_max, std::move(y0), o);
}

double resonant_beat(const WvNProblem& p, const BandStructure& bs, int j, double k) {
    if (p.c == 0.0) return 0.0;
    if (j < 0 || j >= static_cast<int>(bs.bands.size())) throw PreconditionError("resonant_beat: band out of range");
    const double r = p.bg.a * std::abs(p.omega) / kPi;
    const double fr = r - std::floor(r);
    const double kp = kPi * (j + 1 - fr), km = kPi * (j + fr);
    return 2 * std::min(std::abs(k - kp), std::abs(k - km)) / p.bg.a;
}

double spectral_x_max(const WvNProblem& p, double eps, const SpectralOptions& opt) {
    double x = opt.x_max > 0 ? opt.x_max : kXmaxFloor;
    if (opt.x_max <= 0 && eps > 0) x = std::max(x, 10 * std::pow(eps, -1 / p.gamma));
    return std::min(x, opt.x_max_cap);
}

std::vector<std::pair<double, cplx>> jost_estimator(const WvNProblem& p, const BlochData& bd, double lambda,
                                                    const std::vector<long long>& grid_indices,
                                                    const SpectralOptions& opt) {
    const auto s = jost_series(p, bd, lambda, grid_indices, opt);
    std::vector<std::pair<double, cplx>> out(s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) out[i] = {s.x[i], s.a[i] * std::exp(s.log_scale[i])};
    return out;
}

JostEstimate jost_coefficient(const WvNProblem& p, const BlochData& bd, double lambda, double x_max,
                              double carrier_period, const SpectralOptions& opt) {
    const double h = p.bg.a / opt.grid_per_period;
    const auto idx = tail_indices(0.5 * x_max, x_max, h, carrier_period, opt.max_tail_samples);
    auto s = jost_series(p, bd, lambda, idx, opt);
    // The modulus converges much faster than the slowly rotating phase, so the two are averaged separately.
    const double log_end = s.log_scale.back();
    std::vector<double> mod(s.x.size()), ph(s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        mod[i] = std::abs(s.a[i]) * std::exp(s.log_scale[i] - log_end);
        const double raw = std::arg(s.a[i]);
        ph[i] = i == 0 ? raw : ph[i - 1] + std::remainder(raw - ph[i - 1], 2 * kPi);
    }
    // Plain period averages; the x^(1 - 2 gamma) Richardson step over a half-decade window amplifies the
    // residual beat by an order of magnitude, so its disagreement is reported as the tail error instead.
    const auto m = tail_limit(s.x, mod, carrier_period, 0.0, opt.tail_rel_tol);
    const auto r = tail_limit(s.x, mod, carrier_period, 1 - 2 * p.gamma, opt.tail_rel_tol);
    const auto t = tail_limit(s.x, ph, carrier_period, 0.0, opt.tail_rel_tol);
    JostEstimate je;
    je.log_abs_A = std::log(m.value) + log_end;
    je.A = std::polar(std::exp(je.log_abs_A), t.value);
    je.tail_error = std::max(m.error_bar, std::abs(r.value - m.value)) / m.value;
    je.converged = m.converged && m.value > 0;
    je.x_max = x_max;
    return je;
}

DensitySample spectral_density(const WvNProblem& p, const BandStructure& bs, double lambda, std::optional<cplx> rescale,
                               const SpectralOptions& opt) {
    const int j = bs.band_of(lambda);
    if (j < 0) throw PreconditionError("spectral_density: energy outside the spectral bands");
    const BlochData bd = bloch(p.bg, bs, lambda, rescale, opt.floquet);
    const double beat = resonant_beat(p, bs, j, bd.k);
    const double period = beat > 0 ? std::max(2 * kPi / beat, p.bg.a) : p.bg.a;
    const double x_max =
        std::min(std::max(spectral_x_max(p, kPi * beat, opt), 2 * kTailPeriods * period), opt.x_max_cap);
    DensitySample d;
    d.lambda = lambda;
    d.x_max_used = x_max;
    if (x_max < 2 * kTailPeriods * period) {
        d.converged = false;
        return d;
    }
    const auto je = jost_coefficient(p, bd, lambda, x_max, period, opt);
    d.A_alpha = je.A;
    d.tail_error = je.tail_error;
    d.converged = je.converged;
    d.log_rho_prime = -std::log(2 * kPi * std::abs(bd.wronskian)) - 2 * je.log_abs_A;
    d.rho_prime = std::exp(d.log_rho_prime);
    return d;
}

cplx growth_amplitude(const WvNProblem& p, const ResolvedCritical& rc, double alpha, const SpectralOptions& opt) {
    const auto s = growth_series(p, rc, alpha, opt);
    cplx lim;
    complex_tail(s.x, s.a, growth_period(p), 1 - 2 * p.gamma, opt.tail_rel_tol, lim);
    return lim;
}

LimitEstimate growth_coefficient(const WvNProblem& p, const ResolvedCritical& rc, double alpha, cplx reference,
                                 const SpectralOptions& opt) {
    const auto s = growth_series(p, rc, alpha, opt);
    std::vector<double> proj(s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) proj[i] = (s.a[i] * std::conj(reference)).real();
    return tail_limit(s.x, proj, growth_period(p), 1 - 2 * p.gamma, opt.tail_rel_tol);
}

AlphaCrEstimate estimate_alpha_cr(const WvNProblem& p, const ResolvedCritical& rc, const SpectralOptions& opt) {
    cplx c[2];
    const double alphas[2] = {kPi / 2, 0.0};
    parallel_for(2, [&](std::size_t i) { c[i] = growth_amplitude(p, rc, alphas[i], opt); });
    AlphaCrEstimate est;
    const cplx big = std::abs(c[0]) >= std::abs(c[1]) ? c[0] : c[1];
    if (std::abs(big) == 0.0) {
        est.flagged = true;
        return est;
    }
    est.reference = big / std::abs(big);
    est.growth_A = (c[0] * std::conj(est.reference)).real();
    est.growth_B = (c[1] * std::conj(est.reference)).real();
    est.alpha_cr = reduce_pi(std::atan2(-est.growth_B, est.growth_A));
    const cplx at_cr = growth_amplitude(p, rc, est.alpha_cr, opt);
    const double scale = std::max(std::abs(est.growth_A), std::abs(est.growth_B));
    est.residual = std::abs(at_cr) / scale;
    const double x_max = growth_x_max(opt);
    const double h = rc.crit.beta_cr * std::pow(x_max, 1 - p.gamma) / (1 - p.gamma);
    est.flagged = h < kGrowthSeparation || est.residual > kResidualFlag;
    return est;
}

std::vector<double> geometric_offsets(double lo, double hi, int n) {
    if (!(lo > 0) || !(hi > lo) || n < 2) throw PreconditionError("offsets need 0 < lo < hi and at least two points");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return out;
}

PseudogapFit fit_pseudogap(const std::vector<std::pair<double, double>>& points, double gamma, double slope_target,
                           int side) {
    PseudogapFit f;
    f.side = side;
    f.points = points;
    f.slope_target = slope_target;
    const std::size_t n = points.size();
    if (n < kMinFitPoints) return f;
    const double e = (1 - gamma) / gamma;
    double mx = 0, my = 0;
    for (const auto& [d, y] : points) {
        mx += std::pow(d, -e);
        my += y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (const auto& [d, y] : points) {
        const double X = std::pow(d, -e) - mx;
        sxx += X * X;
        sxy += X * (y - my);
    }
    f.slope = sxy / sxx;
    double rss = 0;
    for (const auto& [d, y] : points) {
        const double r = y - my - f.slope * (std::pow(d, -e) - mx);
        rss += r * r;
    }
    f.slope_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    f.rel_dev = std::abs(f.slope - slope_target) / std::abs(slope_target);
    f.valid = true;
    return f;
}

PseudogapScan pseudogap_scan(const WvNProblem& p, const BandStructure& bs, const ResolvedCritical& rc,
                             const AlphaCrEstimate& alpha, const std::vector<double>& offsets, const ScanOptions& opt) {
    p.validate();
    const double gap = reduce_pi(p.alpha - alpha.alpha_cr);
    if (std::min(gap, kPi - gap) < kAlphaGuard)
        throw PreconditionError("pseudogap_scan: alpha must differ from alpha_cr by at least 0.1 rad");
    for (double o : offsets)
        if (!(o > 0) || o > rc.crit.radius)
            throw PreconditionError("pseudogap_scan: offsets must lie inside the critical neighbourhood");

    PseudogapScan scan;
    scan.alpha = alpha;
    scan.c_cr = c_cr(rc.crit.beta_cr, p.gamma, rc.crit.kprime, p.bg.a);
    for (int side : {1, -1}) {
        if ((side > 0 && !opt.above) || (side < 0 && !opt.below)) continue;
        for (double o : offsets) scan.samples.push_back({side, o, {}});
    }
    parallel_for(scan.samples.size(), [&](std::size_t i) {
        auto& s = scan.samples[i];
        try {
            s.density = spectral_density(p, bs, rc.crit.nu + s.side * s.offset, std::nullopt, opt.spectral);
        } catch (const IntegrationError&) {
            s.density.lambda = rc.crit.nu + s.side * s.offset;
            s.density.converged = false;
        }
    });

    std::vector<std::pair<double, double>> up, down;
    for (const auto& s : scan.samples) {
        if (!s.density.converged) continue;
        (s.side > 0 ? up : down).emplace_back(s.offset, s.density.log_rho_prime);
    }
    scan.above = fit_pseudogap(up, p.gamma, -2 * scan.c_cr, 1);
    scan.below = fit_pseudogap(down, p.gamma, -2 * scan.c_cr, -1);

    if (opt.sin2 && !offsets.empty()) {
        Sin2Report& r = scan.sin2;
        r.offset = opt.sin2_offset > 0 ? opt.sin2_offset : *std::max_element(offsets.begin(), offsets.end());
        if (r.offset > rc.crit.radius) throw PreconditionError("pseudogap_scan: sin^2 offset outside the neighbourhood");
        r.lambda = rc.crit.nu + r.offset;
        std::vector<double> rho(7);
        for (int k = 1; k <= 7; ++k) r.alphas.push_back(reduce_pi(alpha.alpha_cr + k * kPi / 8));
        parallel_for(7, [&](std::size_t i) {
            WvNProblem q = p;
            q.alpha = r.alphas[i];
            rho[i] = spectral_density(q, bs, r.lambda, std::nullopt, opt.spectral).rho_prime;
        });
        double lo = kInf, hi = 0, mean = 0;
        for (int k = 1; k <= 7; ++k) {
            const double s = std::sin(k * kPi / 8);
            const double v = rho[static_cast<std::size_t>(k - 1)] * s * s;
            r.rho_sin2.push_back(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            mean += v / 7;
        }
        r.spread = (hi - lo) / mean;
        // Normal equations for 1/rho' = p0 + p1 cos 2a + p2 sin 2a.
        double m[3][4] = {};
        for (std::size_t i = 0; i < 7; ++i) {
            const double b[3] = {1.0, std::cos(2 * r.alphas[i]), std::sin(2 * r.alphas[i])};
            for (int u = 0; u < 3; ++u) {
                for (int v = 0; v < 3; ++v) m[u][v] += b[u] * b[v];
                m[u][3] += b[u] / rho[i];
            }
        }
        for (int c = 0; c < 3; ++c) {
            int piv = c;
            for (int rr = c + 1; rr < 3; ++rr)
                if (std::abs(m[rr][c]) > std::abs(m[piv][c])) piv = rr;
            std::swap(m[c], m[piv]);
            for (int rr = 0; rr < 3; ++rr) {
                if (rr == c) continue;
                const double fct = m[rr][c] / m[c][c];
                for (int k = c; k < 4; ++k) m[rr][k] -= fct * m[c][k];
            }
        }
        const double p1 = m[1][3] / m[1][1], p2 = m[2][3] / m[2][2];
        r.alpha_fit = reduce_pi(0.5 * (std::atan2(p2, p1) + kPi));
    }
    return scan;
}

}  // namespace pg
