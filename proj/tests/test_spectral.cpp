#include <doctest.h>

#include <cmath>

#include "pseudogap/spectral.hpp"

using namespace pg;

namespace {

WvNProblem free_problem(double alpha) {
    WvNProblem p;
    p.bg = PeriodicBackground::free(1.0);
    p.c = 0.0;
    p.omega = 0.3 * kPi;
    p.gamma = 0.6;
    p.alpha = alpha;
    return p;
}

// Free background, a = 0.75, omega = pi: nu_{0-} = pi^2.
WvNProblem resonant_problem(double alpha) {
    WvNProblem p;
    p.bg = PeriodicBackground::free(0.75);
    p.c = 2.0;
    p.omega = kPi;
    p.gamma = 0.6;
    p.alpha = alpha;
    return p;
}

SpectralOptions short_run(double x_max, double ode_tol = 1e-10) {
    SpectralOptions o;
    o.x_max = x_max;
    o.ode_tol = ode_tol;
    return o;
}

SpectralOptions tight() {
    SpectralOptions o;
    o.ode_tol = 1e-12;
    return o;
}

}  // namespace

TEST_CASE("free eigenfunction matches the closed form") {
    for (double alpha : {0.0, 0.4, kPi / 2, 2.5}) {
        const auto p = free_problem(alpha);
        const double lam = 2.3, k = std::sqrt(lam);
        std::vector<double> xs;
        for (int i = 1; i <= 40; ++i) xs.push_back(1.25 * i);
        const auto tr = integrate_eigenfunction(p, lam, xs.back(), xs);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            const double phi = std::sin(alpha) * std::cos(k * x) + std::cos(alpha) * std::sin(k * x) / k;
            const double dphi = -std::sin(alpha) * k * std::sin(k * x) + std::cos(alpha) * std::cos(k * x);
            CHECK(tr.y[i][0] * std::exp(tr.log_scale[i]) == doctest::Approx(phi).epsilon(1e-8).scale(1.0));
            CHECK(tr.y[i][1] * std::exp(tr.log_scale[i]) == doctest::Approx(dphi).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("boundary values and Wronskian conservation") {
    SpectralOptions o;
    for (double alpha : {0.3, 1.9}) {
        auto p = resonant_problem(alpha);
        const auto tr = integrate_eigenfunction(p, 5.0, 1.0, {o.x_start, 1.0}, o);
        CHECK(tr.y[0][0] == doctest::Approx(std::sin(alpha) + std::cos(alpha) * o.x_start).epsilon(1e-9));
        CHECK(tr.y[0][1] == doctest::Approx(std::cos(alpha)).epsilon(1e-2));
    }
    std::vector<double> xs;
    for (int i = 1; i <= 50; ++i) xs.push_back(20.0 * i);
    const auto t0 = integrate_eigenfunction(resonant_problem(0.0), 5.0, xs.back(), xs, tight());
    const auto t1 = integrate_eigenfunction(resonant_problem(kPi / 2), 5.0, xs.back(), xs, tight());
    double w0 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double s = std::exp(t0.log_scale[i] + t1.log_scale[i]);
        const double w = (t0.y[i][1] * t1.y[i][0] - t0.y[i][0] * t1.y[i][1]) * s;
        if (i == 0) w0 = w;
        CHECK(w == doctest::Approx(w0).epsilon(1e-8));
    }
    CHECK(w0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("free Jost coefficient and density") {
    const auto p0 = free_problem(0.0);
    const auto bs = band_edges(p0.bg, 2);
    for (double alpha : {0.0, kPi / 2, 1.1}) {
        for (double lam : {1.0, 3.7}) {
            const auto p = free_problem(alpha);
            const auto d = spectral_density(p, bs, lam, std::nullopt, short_run(2000.0, 1e-12));
            const double k = std::sqrt(lam);
            const cplx a(std::sin(alpha) / 2, std::cos(alpha) / (2 * k));
            CHECK(d.converged);
            CHECK(std::abs(d.A_alpha - a) < 1e-8);
            const double rho = 1 / (kPi * k * (std::sin(alpha) * std::sin(alpha) + std::cos(alpha) * std::cos(alpha) / lam));
            CHECK(d.rho_prime == doctest::Approx(rho).epsilon(1e-8));
        }
    }
    const auto d0 = spectral_density(free_problem(0.0), bs, 1.0, std::nullopt, short_run(2000.0, 1e-12));
    const auto d1 = spectral_density(free_problem(kPi / 2), bs, 1.0, std::nullopt, short_run(2000.0, 1e-12));
    CHECK(d0.rho_prime == doctest::Approx(1 / kPi).epsilon(1e-8));
    CHECK(d1.rho_prime == doctest::Approx(1 / kPi).epsilon(1e-8));
}

TEST_CASE("Jost estimator is constant without perturbation") {
    const auto p = free_problem(0.8);
    const auto bs = band_edges(p.bg, 2);
    const auto bd = bloch(p.bg, bs, 2.0);
    std::vector<long long> idx;
    for (long long m = 1; m <= 200000; m += 4999) idx.push_back(m);
    const auto a = jost_estimator(p, bd, 2.0, idx, tight());
    for (const auto& [x, v] : a) CHECK(std::abs(v - a.front().second) < 1e-8);
}

TEST_CASE("Jost coefficient on a periodic background") {
    // Constant background v0: plane waves at sqrt(lambda - v0).
    WvNProblem p = free_problem(0.6);
    p.bg = PeriodicBackground::constant(0.5, 1.0);
    const auto bs = band_edges(p.bg, 2);
    const double lam = 2.5, k = std::sqrt(lam - 0.5);
    const auto d = spectral_density(p, bs, lam, std::nullopt, short_run(2000.0, 1e-12));
    const cplx a(std::sin(0.6) / 2, std::cos(0.6) / (2 * k));
    CHECK(std::abs(d.A_alpha - a) < 1e-8);
}

TEST_CASE("density is invariant under the Bloch rescale hook") {
    const auto p = resonant_problem(0.7);
    const auto bs = band_edges(p.bg, 2);
    const auto o = short_run(2e4);
    for (double lam : {kPi * kPi + 0.05, kPi * kPi - 0.2, 5.0}) {
        const auto base = spectral_density(p, bs, lam, std::nullopt, o);
        CHECK(base.rho_prime > 0);
        for (cplx s : {cplx(2.0, 0.0), cplx(0.0, 1.0), std::polar(0.5, kPi / 3)}) {
            const auto d = spectral_density(p, bs, lam, s, o);
            CHECK(d.rho_prime == doctest::Approx(base.rho_prime).epsilon(1e-8));
            CHECK(std::abs(d.A_alpha * std::conj(s) - base.A_alpha) < 1e-7 * std::abs(base.A_alpha));
        }
    }
}

TEST_CASE("density is smooth away from the critical point") {
    const auto p = resonant_problem(0.7);
    const auto bs = band_edges(p.bg, 2);
    const double nu = kPi * kPi;
    const auto o = short_run(2e4);
    const auto a = spectral_density(p, bs, nu + 0.05, std::nullopt, o);
    const auto b = spectral_density(p, bs, nu + 0.051, std::nullopt, o);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK(std::abs(a.rho_prime - b.rho_prime) < 0.1 * a.rho_prime);
    // The density is smaller closer to nu.
    CHECK(b.rho_prime > a.rho_prime);
}

TEST_CASE("resonant beat and x_max rule") {
    const auto p = resonant_problem(0.0);
    const auto bs = band_edges(p.bg, 2);
    const auto rc = resolve_critical(p, bs, 0, -1);
    CHECK(rc.crit.nu == doctest::Approx(kPi * kPi).epsilon(1e-10));
    const double lam = rc.crit.nu + 0.01;
    const auto bd = bloch(p.bg, bs, lam);
    const double beat = resonant_beat(p, bs, 0, bd.k);
    CHECK(kPi * beat == doctest::Approx(std::abs(eps_cr(p, bs, rc.crit, lam))).epsilon(1e-12));
    CHECK(beat == doctest::Approx(2 * (std::sqrt(lam) - kPi)).epsilon(1e-6));
    SpectralOptions o;
    o.x_max_cap = kInf;
    CHECK(spectral_x_max(p, 0.5, o) == doctest::Approx(1e5));
    CHECK(spectral_x_max(p, 1e-4, o) == doctest::Approx(10 * std::pow(1e-4, -1 / 0.6)));
    o.x_max_cap = 3e4;
    CHECK(spectral_x_max(p, 1e-4, o) == doctest::Approx(3e4));
    CHECK(resonant_beat(free_problem(0.0), bs, 0, 1.0) == 0.0);
}

TEST_CASE("alpha_cr and growth coefficients") {
    const auto p = resonant_problem(0.0);
    const auto bs = band_edges(p.bg, 2);
    const auto rc = resolve_critical(p, bs, 0, -1);
    const auto o = short_run(4e4);
    const auto est = estimate_alpha_cr(p, rc, o);
    CHECK_FALSE(est.flagged);
    CHECK(est.residual < 1e-4);
    CHECK(est.alpha_cr >= 0);
    CHECK(est.alpha_cr < kPi);
    CHECK(est.growth_A * std::sin(est.alpha_cr) + est.growth_B * std::cos(est.alpha_cr) ==
          doctest::Approx(0.0).scale(1e-10 * std::abs(est.growth_A)));
    // Linearity of the Cauchy problem.
    const auto g45 = growth_coefficient(p, rc, kPi / 4, est.reference, o);
    CHECK(g45.value == doctest::Approx((est.growth_A + est.growth_B) / std::sqrt(2.0)).epsilon(0.01));
    // |G(alpha)| = d |sin(alpha - alpha_cr)|, extremal at alpha_cr + pi/2.
    const double d = std::hypot(est.growth_A, est.growth_B);
    double best = 0.0, best_alpha = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double alpha = i * kPi / 8;
        const double g = std::abs(growth_coefficient(p, rc, alpha, est.reference, o).value);
        const double fit = d * std::abs(std::sin(alpha - est.alpha_cr));
        CHECK(std::abs(g - fit) < 0.02 * d);
        if (g > best) {
            best = g;
            best_alpha = alpha;
        }
    }
    const double gap = std::remainder(best_alpha - est.alpha_cr - kPi / 2, kPi);
    CHECK(std::abs(gap) <= kPi / 16 + 1e-12);
}

TEST_CASE("pseudogap fit") {
    std::vector<std::pair<double, double>> pts;
    for (double o : geometric_offsets(1e-3, 1e-1, 6)) pts.emplace_back(o, 2.0 - 0.5 * std::pow(o, -2.0 / 3));
    const auto f = fit_pseudogap(pts, 0.6, -0.5, 1);
    CHECK(f.valid);
    CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.slope_error < 1e-10);
    CHECK(f.rel_dev < 1e-10);
    pts.resize(4);
    CHECK_FALSE(fit_pseudogap(pts, 0.6, -0.5, 1).valid);
    const auto g = geometric_offsets(3e-3, 1e-1, 7);
    CHECK(g.size() == 7);
    CHECK(g.front() == doctest::Approx(3e-3));
    CHECK(g.back() == doctest::Approx(1e-1));
    CHECK(g[1] / g[0] == doctest::Approx(g[6] / g[5]));
    CHECK_THROWS_AS(geometric_offsets(0.1, 0.01, 4), PreconditionError);
}

TEST_CASE("pseudogap scan preconditions") {
    auto p = resonant_problem(1.0);
    const auto bs = band_edges(p.bg, 2);
    const auto rc = resolve_critical(p, bs, 0, -1);
    AlphaCrEstimate est;
    est.alpha_cr = 1.05;
    CHECK_THROWS_AS(pseudogap_scan(p, bs, rc, est, {0.01, 0.02}), PreconditionError);
    est.alpha_cr = 1.0 + kPi - 0.05;
    CHECK_THROWS_AS(pseudogap_scan(p, bs, rc, est, {0.01, 0.02}), PreconditionError);
    est.alpha_cr = 2.5;
    CHECK_THROWS_AS(pseudogap_scan(p, bs, rc, est, {0.01, 10.0}), PreconditionError);
}
