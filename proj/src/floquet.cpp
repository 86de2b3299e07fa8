#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "pseudogap/floquet.hpp"

namespace pg {

namespace {

constexpr int kMinSamples = 4;
constexpr int kQminProbes = 4096;
constexpr double kTouchTol = 1e-8;
constexpr int kScanLimit = 2000000;

double sample_min(const std::function<double(double)>& q, double a) {
    double m = kInf;
    for (int i = 0; i <= kQminProbes; ++i) m = std::min(m, q(a * i / kQminProbes));
    return m;
}

IvpOptions hill_options(const PeriodicBackground& bg, double tol) {
    IvpOptions o;
    o.tol = tol;
    o.max_step = bg.a / 16;
    return o;
}

}  // namespace

double PeriodicBackground::operator()(double x) const {
    if (x < 0 || x > a) x -= a * std::floor(x / a);
    return q(x);
}

PeriodicBackground PeriodicBackground::free(double a) {
    auto bg = constant(0.0, a);
    bg.is_zero = true;
    return bg;
}

PeriodicBackground PeriodicBackground::constant(double v0, double a) {
    if (!(a > 0)) throw NumericError("background: period must be positive");
    PeriodicBackground bg;
    bg.q = [v0](double) { return v0; };
    bg.a = a;
    bg.q_min = v0;
    return bg;
}

PeriodicBackground PeriodicBackground::from_callback(std::function<double(double)> q, double a) {
    if (!(a > 0)) throw NumericError("background: period must be positive");
    PeriodicBackground bg;
    bg.q_min = sample_min(q, a);
    bg.q = std::move(q);
    bg.a = a;
    return bg;
}

PeriodicBackground PeriodicBackground::sampled(std::vector<double> values, double a) {
    if (values.size() < kMinSamples) throw NumericError("background: need at least four samples per period");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError("background: non-finite sample");
    const int n = static_cast<int>(values.size());
    const double h = a / n;
    auto v = std::make_shared<std::vector<double>>(std::move(values));
    // Periodic Catmull-Rom cubic through the samples at x = i h.
    auto q = [v, n, h](double x) {
        const double s = x / h;
        int i = static_cast<int>(std::floor(s));
        const double t = s - i;
        auto at = [&](int k) { return (*v)[static_cast<std::size_t>(((k % n) + n) % n)]; };
        const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
        return p1 + 0.5 * t * (p2 - p0 + t * (2 * p0 - 5 * p1 + 4 * p2 - p3 + t * (3 * (p1 - p2) + p3 - p0)));
    };
    return from_callback(q, a);
}

PeriodicBackground PeriodicBackground::from_file(const std::string& path, double a) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("background: cannot open " + path);
    std::vector<double> xs, qs;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x, v;
        if (!(ls >> x)) continue;
        if (!(ls >> v)) throw PreconditionError("background: malformed line in " + path);
        xs.push_back(x);
        qs.push_back(v);
    }
    if (xs.size() < kMinSamples) throw PreconditionError("background: too few samples in " + path);
    const double h = xs[1] - xs[0];
    if (!(h > 0) || std::abs(xs[0]) > 1e-9 * a) throw PreconditionError("background: grid must start at 0 and increase");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (std::abs(xs[i] - xs[i - 1] - h) > 1e-6 * h) throw PreconditionError("background: grid is not uniform");
    if (std::abs(xs.back() - a) <= 1e-6 * h) {
        qs.pop_back();
    } else if (std::abs(xs.back() + h - a) > 1e-6 * h) {
        throw PreconditionError("background: grid does not cover one period");
    }
    return sampled(std::move(qs), a);
}

int BandStructure::band_of(double lambda) const {
    for (const auto& b : bands)
        if (lambda >= b.lo && lambda <= b.hi) return b.j;
    return -1;
}

std::vector<std::array<double, 4>> hill_fundamental(const PeriodicBackground& bg, double lambda,
                                                    const std::vector<double>& nodes, double tol) {
    std::vector<std::array<double, 4>> out;
    out.reserve(nodes.size());
    if (nodes.empty()) return out;
    Field f = [&](double x, const double* y, double* dy) {
        const double v = bg(x) - lambda;
        dy[0] = y[1];
        dy[1] = v * y[0];
        dy[2] = y[3];
        dy[3] = v * y[2];
    };
    const double end = nodes.back();
    std::size_t first = 0;
    while (first < nodes.size() && nodes[first] <= 0) {
        out.push_back({1.0, 0.0, 0.0, 1.0});
        ++first;
    }
    if (first == nodes.size()) return out;
    auto opt = hill_options(bg, tol);
    opt.outputs.assign(nodes.begin() + static_cast<std::ptrdiff_t>(first), nodes.end());
    auto tr = integrate_ivp(f, 0.0, end, {1.0, 0.0, 0.0, 1.0}, opt);
    if (tr.y.size() != opt.outputs.size()) throw NumericError("hill_fundamental: nodes must be strictly increasing");
    for (const auto& s : tr.y) out.push_back({s[0], s[1], s[2], s[3]});
    return out;
}

Mat2 monodromy(const PeriodicBackground& bg, double lambda, const FloquetOptions& opt) {
    if (!std::isfinite(lambda)) throw NumericError("monodromy: energy must be finite");
    const auto r = hill_fundamental(bg, lambda, {bg.a}, opt.ode_tol)[0];
    return Mat2{{{r[0], r[2]}, {r[1], r[3]}}};
}

double discriminant(const PeriodicBackground& bg, double lambda, const FloquetOptions& opt) {
    const Mat2 m = monodromy(bg, lambda, opt);
    return m[0][0] + m[1][1];
}

std::pair<double, double> discriminant_with_derivative(const PeriodicBackground& bg, double lambda,
                                                       const FloquetOptions& opt) {
    // y'' = (q - lambda) y and its energy derivative z'' = (q - lambda) z - y, for both canonical solutions.
    Field f = [&](double x, const double* y, double* dy) {
        const double v = bg(x) - lambda;
        for (int s = 0; s < 2; ++s) {
            const double* u = y + 4 * s;
            double* du = dy + 4 * s;
            du[0] = u[1];
            du[1] = v * u[0];
            du[2] = u[3];
            du[3] = v * u[2] - u[0];
        }
    };
    auto tr = integrate_ivp(f, 0.0, bg.a, {1, 0, 0, 0, 0, 1, 0, 0}, hill_options(bg, opt.ode_tol));
    const auto& y = tr.terminal;
    return {y[0] + y[5], y[2] + y[7]};
}

namespace {

struct EdgeScanner {
    const PeriodicBackground& bg;
    const FloquetOptions& opt;

    double tol(double l) const { return opt.root_tol * std::max(1.0, std::abs(l)); }

    // Boundary between {pred true} and {pred false}; pred(lo) != pred(hi).
    template <class P>
    double bisect(double lo, double hi, const P& pred) const {
        const bool at_lo = pred(lo);
        while (hi - lo > tol(hi)) {
            const double mid = 0.5 * (lo + hi);
            if (pred(mid) == at_lo)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    // Maximizer of sigma D on [lo, hi] where sigma D' changes sign once.
    double argmax(double lo, double hi, double sigma) const {
        auto rising = [&](double l) { return sigma * discriminant_with_derivative(bg, l, opt).second > 0; };
        if (!rising(lo) || rising(hi)) throw NumericError("band_edges: bracketing failure at extremum");
        return bisect(lo, hi, rising);
    }
};

}  // namespace

BandStructure band_edges(const PeriodicBackground& bg, int j_max, const FloquetOptions& opt) {
    if (j_max < 0) throw NumericError("band_edges: j_max must be nonnegative");
    EdgeScanner sc{bg, opt};
    const double step = 0.05 * (kPi / bg.a) * (kPi / bg.a);
    auto D = [&](double l) { return discriminant(bg, l, opt); };

    double l = bg.q_min - step;
    int guard = 0;
    while (D(l) <= 2.0) {
        l -= step * (1 << std::min(guard, 20));
        if (++guard > 60) throw NumericError("band_edges: no energy below the spectrum found");
    }
    double prev = l;
    for (int it = 0;; ++it) {
        if (it > kScanLimit) throw NumericError("band_edges: bracketing failure for the bottom edge");
        l = prev + step;
        if (D(l) < 2.0) break;
        prev = l;
    }

    BandStructure bs;
    double lo = sc.bisect(prev, l, [&](double x) { return D(x) >= 2.0; });

    for (int j = 0; j <= j_max; ++j) {
        const double sigma = (j % 2 == 1) ? 1.0 : -1.0;
        auto g = [&](double x) { return sigma * D(x) - 2.0; };

        // Walk the band interior until g stops being negative or turns over below zero.
        double x0 = lo, g0 = -4.0;
        double xm = lo, gm = -kInf;
        double x1 = lo, g1 = -4.0;
        double hi_left = 0, hi_right = 0;
        bool crossed = false;
        for (int it = 0;; ++it) {
            if (it > kScanLimit) throw NumericError("band_edges: bracketing failure in band scan");
            xm = x0;
            gm = g0;
            x0 = x1;
            g0 = g1;
            x1 = x0 + step;
            g1 = g(x1);
            if (g1 >= 0) {
                crossed = true;
                hi_left = x0;
                hi_right = x1;
                break;
            }
            if (gm > -kInf && g0 > gm && g0 > g1 && x0 > lo) {
                hi_left = xm;
                hi_right = x1;
                break;
            }
        }

        double left = hi_left, right = hi_right;
        if (crossed) {
            // Find the end of the gap: first grid point where g is negative again.
            double x = hi_right;
            for (int it = 0;; ++it) {
                if (it > kScanLimit) throw NumericError("band_edges: bracketing failure in gap scan");
                const double xn = x + step;
                if (g(xn) < 0) {
                    right = xn;
                    break;
                }
                x = xn;
            }
        }

        double hi, next_lo;
        const bool narrow = !crossed || right - left <= 3.0 * step;
        if (narrow) {
            const double xs = sc.argmax(left, right, sigma);
            const double gs = g(xs);
            if (gs < -kTouchTol) throw NumericError("band_edges: bracketing failure (spurious extremum)");
            if (gs <= kTouchTol) {
                hi = next_lo = xs;
            } else {
                hi = sc.bisect(left, xs, [&](double y) { return g(y) >= 0; });
                next_lo = sc.bisect(xs, right, [&](double y) { return g(y) >= 0; });
            }
        } else {
            hi = sc.bisect(left, hi_right, [&](double y) { return g(y) >= 0; });
            next_lo = sc.bisect(right - step, right, [&](double y) { return g(y) >= 0; });
        }
        bs.bands.push_back({j, lo, hi});
        bs.edges.push_back(lo);
        bs.edges.push_back(hi);
        bs.branch_offsets.push_back(j * kPi);
        lo = next_lo;
    }
    return bs;
}

double quasimomentum_raw(const PeriodicBackground& bg, const BandStructure& bs, double lambda,
                         const FloquetOptions& opt) {
    const int j = bs.band_of(lambda);
    if (j < 0) throw NumericError("quasimomentum: energy lies in a gap");
    const double d = std::clamp(discriminant(bg, lambda, opt) / 2.0, -1.0, 1.0);
    const double theta = std::acos(d);
    const double off = bs.branch_offsets[static_cast<std::size_t>(j)];
    return (j % 2 == 0) ? off + theta : off + kPi - theta;
}

std::pair<double, double> quasimomentum(const PeriodicBackground& bg, const BandStructure& bs, double lambda,
                                        const FloquetOptions& opt) {
    const int j = bs.band_of(lambda);
    if (j < 0) throw NumericError("quasimomentum: energy lies in a gap");
    if (std::abs(discriminant(bg, lambda, opt)) > 2.0 - opt.edge_guard)
        throw NumericError("quasimomentum: energy too close to a band edge");
    const auto& b = bs.bands[static_cast<std::size_t>(j)];
    const double h = 1e-6 * (b.hi - b.lo);
    const double k = quasimomentum_raw(bg, bs, lambda, opt);
    const double kp = (quasimomentum_raw(bg, bs, lambda + h, opt) - quasimomentum_raw(bg, bs, lambda - h, opt)) / (2 * h);
    return {k, kp};
}

BlochData bloch(const PeriodicBackground& bg, const BandStructure& bs, double lambda, std::optional<cplx> rescale,
                const FloquetOptions& opt) {
    BlochData bd;
    bd.lambda = lambda;
    bd.band = bs.band_of(lambda);
    std::tie(bd.k, bd.kprime) = quasimomentum(bg, bs, lambda, opt);
    const Mat2 m = monodromy(bg, lambda, opt);
    const cplx mu = std::polar(1.0, bd.k);
    const cplx v1[2] = {m[0][1], mu - m[0][0]};
    const cplx v2[2] = {mu - m[1][1], m[1][0]};
    const double n1 = std::abs(v1[0]) + std::abs(v1[1]), n2 = std::abs(v2[0]) + std::abs(v2[1]);
    const cplx* v = n1 >= n2 ? v1 : v2;
    const double nv = std::max(n1, n2);
    if (!(nv > 1e-12)) throw NumericError("bloch: degenerate eigenvector");
    if (std::abs(v[0]) > 1e-12 * nv) {
        bd.psi0 = 1.0;
        bd.dpsi0 = v[1] / v[0];
    } else {
        bd.psi0 = 0.0;
        bd.dpsi0 = 1.0;
    }
    // W{psi+, psi-} = psi+' conj(psi+) - psi+ conj(psi+')
    double im_w = 2.0 * (bd.dpsi0 * std::conj(bd.psi0)).imag();
    if (im_w < 0) {
        bd.psi0 = std::conj(bd.psi0);
        bd.dpsi0 = std::conj(bd.dpsi0);
        im_w = -im_w;
        bd.swapped = true;
    }
    if (rescale) {
        bd.psi0 *= *rescale;
        bd.dpsi0 *= *rescale;
        im_w *= std::norm(*rescale);
    }
    bd.wronskian = cplx(0.0, im_w);
    return bd;
}

namespace {

struct GaussRule {
    std::vector<double> x, w;
};

const GaussRule& gauss_legendre() {
    static const GaussRule rule = [] {
        const int n = 10;
        GaussRule r;
        for (int i = 1; i <= n; ++i) {
            double t = std::cos(kPi * (i - 0.25) / (n + 0.5)), dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (t * p1 - p0) / (t * t - 1);
                const double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-16) break;
            }
            r.x.push_back(t);
            r.w.push_back(2.0 / ((1 - t * t) * dp * dp));
        }
        return r;
    }();
    return rule;
}

}  // namespace

cplx period_integral(const PeriodicBackground& bg, const BlochData& bd, const std::function<cplx(double, cplx)>& g,
                     double tol) {
    const auto& gl = gauss_legendre();
    auto composite = [&](int panels, double& l1) {
        std::vector<double> nodes, weights;
        const double h = bg.a / panels;
        for (int p = 0; p < panels; ++p) {
            for (std::size_t i = gl.x.size(); i-- > 0;) {
                nodes.push_back(h * (p + 0.5 * (1 + gl.x[i])));
                weights.push_back(0.5 * h * gl.w[i]);
            }
        }
        const auto fs = hill_fundamental(bg, bd.lambda, nodes, std::min(1e-12, tol));
        cplx acc = 0.0;
        l1 = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const cplx psi = bd.psi0 * fs[i][0] + bd.dpsi0 * fs[i][2];
            const cplx v = weights[i] * g(nodes[i], psi);
            acc += v;
            l1 += std::abs(v);
        }
        return acc;
    };
    double l1 = 0.0;
    cplx prev = composite(4, l1);
    for (int panels = 8; panels <= 4096; panels *= 2) {
        const cplx cur = composite(panels, l1);
        if (std::abs(cur - prev) <= tol * std::max(std::abs(cur), l1)) return cur;
        prev = cur;
    }
    throw NumericError("period_integral: quadrature did not converge");
}

cplx fourier_bn_plus(const PeriodicBackground& bg, const BlochData& bd, int n) {
    const double freq = 2.0 * (bd.k + kPi * n) / bg.a;
    const cplx integral =
        period_integral(bg, bd, [freq](double t, cplx psi) { return psi * psi * std::polar(1.0, -freq * t); });
    return integral / bg.a;
}

BlochGrid::BlochGrid(const PeriodicBackground& bg, const BlochData& bd, int n_per_period, double tol)
    : n_(n_per_period), a_(bg.a), k_(bd.k) {
    if (n_ < 1) throw NumericError("BlochGrid: need at least one node per period");
    std::vector<double> nodes(static_cast<std::size_t>(n_));
    for (int m = 0; m < n_; ++m) nodes[static_cast<std::size_t>(m)] = a_ * m / n_;
    const auto fs = hill_fundamental(bg, bd.lambda, nodes, tol);
    psi_.resize(nodes.size());
    dpsi_.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        psi_[i] = bd.psi0 * fs[i][0] + bd.dpsi0 * fs[i][2];
        dpsi_[i] = bd.psi0 * fs[i][1] + bd.dpsi0 * fs[i][3];
    }

}

std::pair<cplx, cplx> BlochGrid::at(long long m) const {
    const long long p = m / n_;
    const auto r = static_cast<std::size_t>(m % n_);
    const cplx ph = std::polar(1.0, k_ * static_cast<double>(p));
    return {ph * psi_[r], ph * dpsi_[r]};
}

}  // namespace pg
