#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "pseudogap/floquet.hpp"

using namespace pg;

namespace {

PeriodicBackground mathieu() {
    return PeriodicBackground::from_callback([](double x) { return 2.0 * std::cos(2.0 * kPi * x); }, 1.0);
}

double det(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

std::array<cplx, 2> propagate(const PeriodicBackground& bg, double lambda, cplx p0, cplx dp0, double x) {
    if (x == 0) return {p0, dp0};
    auto f = hill_fundamental(bg, lambda, {x});
    const auto& r = f[0];
    return {p0 * r[0] + dp0 * r[2], p0 * r[1] + dp0 * r[3]};
}

}  // namespace

TEST_CASE("monodromy of the free operator") {
    auto bg = PeriodicBackground::free(1.0);
    auto m = monodromy(bg, kPi * kPi);
    CHECK(m[0][0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::abs(m[0][1]) < 1e-9);
    CHECK(std::abs(m[1][0]) < 1e-9);
    CHECK(m[1][1] == doctest::Approx(-1.0).epsilon(1e-9));

    m = monodromy(bg, 0.0);
    CHECK(m[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(m[1][0]) < 1e-12);
    CHECK(m[1][1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("monodromy determinant is one") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> amp(-3.0, 3.0), lam(-5.0, 60.0);
    for (int probe = 0; probe < 12; ++probe) {
        const double v = amp(rng), l = lam(rng);
        auto bg = PeriodicBackground::from_callback(
            [v](double x) { return v * std::cos(2.0 * kPi * x) + 0.5 * std::sin(4.0 * kPi * x); }, 1.0);
        CHECK(std::abs(det(monodromy(bg, l)) - 1.0) < 1e-10);
    }
}

TEST_CASE("discriminant closed forms") {
    auto bg = PeriodicBackground::free(1.0);
    CHECK(std::abs(discriminant(bg, kPi * kPi / 4)) < 1e-10);
    for (double l : {0.3, 2.0, 17.0, 40.0})
        CHECK(discriminant(bg, l) == doctest::Approx(2.0 * std::cos(std::sqrt(l))).epsilon(1e-10));
    CHECK(discriminant(bg, -100.0) == doctest::Approx(2.0 * std::cosh(10.0)).epsilon(1e-9));
    CHECK(discriminant(bg, -400.0) > discriminant(bg, -100.0));

    auto shifted = PeriodicBackground::constant(1.7, 1.0);
    for (double l : {0.0, 3.0, 25.0})
        CHECK(discriminant(shifted, l) == doctest::Approx(discriminant(bg, l - 1.7)).epsilon(1e-10));
}

TEST_CASE("discriminant derivative matches finite differences") {
    auto bg = mathieu();
    for (double l : {-0.5, 3.0, 12.0, 30.0}) {
        const auto [d, dd] = discriminant_with_derivative(bg, l);
        const double h = 1e-4;
        const double fd = (discriminant(bg, l + h) - discriminant(bg, l - h)) / (2 * h);
        CHECK(d == doctest::Approx(discriminant(bg, l)).epsilon(1e-12));
        CHECK(dd == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("free band edges touch at squares of multiples of pi") {
    auto bs = band_edges(PeriodicBackground::free(1.0), 3);
    REQUIRE(bs.bands.size() == 4);
    for (int j = 0; j <= 3; ++j) {
        CHECK(bs.bands[j].j == j);
        CHECK(bs.bands[j].lo == doctest::Approx(j * j * kPi * kPi).epsilon(1e-9));
        CHECK(std::abs(bs.bands[j].lo - j * j * kPi * kPi) < 1e-8);
        CHECK(std::abs(bs.bands[j].hi - (j + 1) * (j + 1) * kPi * kPi) < 1e-8);
        CHECK(bs.branch_offsets[j] == doctest::Approx(j * kPi));
    }
    for (int j = 0; j < 3; ++j) CHECK(std::abs(bs.bands[j].hi - bs.bands[j + 1].lo) < 1e-9);
    REQUIRE(bs.edges.size() == 8);
    for (std::size_t i = 1; i < bs.edges.size(); ++i) CHECK(bs.edges[i] >= bs.edges[i - 1] - 1e-9);
}

TEST_CASE("constant potential shifts the edges") {
    const double v0 = 2.5, a = 0.75;
    auto bs = band_edges(PeriodicBackground::constant(v0, a), 2);
    for (int j = 0; j <= 2; ++j) {
        const double e = j * kPi / a;
        CHECK(std::abs(bs.bands[j].lo - (e * e + v0)) < 1e-8);
    }
}

TEST_CASE("Mathieu band edges against a dense scan") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 2);
    CHECK(bs.bands[0].lo < 0);
    CHECK(bs.bands[0].hi < bs.bands[1].lo);

    // Brute-force oracle: sign changes of |D| - 2 on a fine grid.
    std::vector<double> roots;
    double prev_l = -3.0, prev_v = std::abs(discriminant(bg, prev_l)) - 2.0;
    for (double l = -3.0 + 0.01; l < 95.0; l += 0.01) {
        const double v = std::abs(discriminant(bg, l)) - 2.0;
        if ((v > 0) != (prev_v > 0)) {
            double lo = prev_l, hi = l, vlo = prev_v;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double vm = std::abs(discriminant(bg, mid)) - 2.0;
                if ((vm > 0) == (vlo > 0)) {
                    lo = mid;
                    vlo = vm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_l = l;
        prev_v = v;
    }
    REQUIRE(roots.size() >= 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(bs.edges[i] - roots[i]) < 1e-8);
    for (double e : bs.edges) CHECK(std::abs(std::abs(discriminant(bg, e)) - 2.0) < 1e-8);
}

TEST_CASE("sampled background reproduces the callback") {
    const int n = 512;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = 2.0 * std::cos(2.0 * kPi * i / n);
    auto s = PeriodicBackground::sampled(v, 1.0);
    auto c = mathieu();
    for (double x : {0.0, 0.013, 0.5, 0.77, 1.0}) CHECK(s(x) == doctest::Approx(c(x)).epsilon(1e-6));
    CHECK(discriminant(s, 7.0) == doctest::Approx(discriminant(c, 7.0)).epsilon(1e-6));
    CHECK_THROWS(PeriodicBackground::sampled({1.0, 2.0}, 1.0));
}

TEST_CASE("sampled background from file") {
    const std::string path = "floquet_sample.txt";
    {
        std::ofstream out(path);
        out << "# x q\n";
        for (int i = 0; i <= 200; ++i) out << i * 0.005 << " " << std::cos(2.0 * kPi * i * 0.005) << "\n";
    }
    auto bg = PeriodicBackground::from_file(path, 1.0);
    CHECK(bg(0.25) == doctest::Approx(0.0).epsilon(1e-6).scale(1.0));
    CHECK(bg(0.5) == doctest::Approx(-1.0).epsilon(1e-6));
    {
        std::ofstream out(path);
        out << "0 1\n0.1 2\n0.3 1\n";
    }
    CHECK_THROWS(PeriodicBackground::from_file(path, 1.0));
    std::remove(path.c_str());
}

TEST_CASE("quasimomentum of the free operator") {
    auto bg = PeriodicBackground::free(1.0);
    auto bs = band_edges(bg, 2);
    auto [k, kp] = quasimomentum(bg, bs, kPi * kPi / 4);
    CHECK(k == doctest::Approx(kPi / 2).epsilon(1e-10));
    CHECK(kp == doctest::Approx(1.0 / kPi).epsilon(1e-7));
    auto [k1, kp1] = quasimomentum(bg, bs, 2.25 * kPi * kPi);
    CHECK(k1 == doctest::Approx(1.5 * kPi).epsilon(1e-10));
    CHECK(kp1 == doctest::Approx(1.0 / (3.0 * kPi)).epsilon(1e-7));
    auto [k2, kp2] = quasimomentum(bg, bs, 6.25 * kPi * kPi);
    CHECK(k2 == doctest::Approx(2.5 * kPi).epsilon(1e-10));
    (void)kp2;
}

TEST_CASE("quasimomentum vanishes at the bottom and increases in bands") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 2);
    CHECK(quasimomentum_raw(bg, bs, bs.bands[0].lo) < 1e-4);
    CHECK(quasimomentum_raw(bg, bs, bs.bands[0].lo + 1e-8) < 1e-3);
    for (const auto& b : bs.bands) {
        double prev = -1.0;
        for (int i = 1; i < 100; ++i) {
            const double l = b.lo + (b.hi - b.lo) * i / 100.0;
            const double k = quasimomentum_raw(bg, bs, l);
            CHECK(k > prev);
            CHECK(k >= b.j * kPi - 1e-12);
            CHECK(k <= (b.j + 1) * kPi + 1e-12);
            prev = k;
        }
    }
}

TEST_CASE("quasimomentum refuses gaps and edges") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 1);
    CHECK_THROWS_AS(quasimomentum(bg, bs, 0.5 * (bs.bands[0].hi + bs.bands[1].lo)), NumericError);
    CHECK_THROWS_AS(quasimomentum(bg, bs, bs.bands[0].lo + 1e-12), NumericError);
}

TEST_CASE("kprime agrees with the discriminant derivative") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 2);
    for (double l : {2.0, 15.0, 50.0}) {
        auto [k, kp] = quasimomentum(bg, bs, l);
        auto [d, dd] = discriminant_with_derivative(bg, l);
        CHECK(kp == doctest::Approx(std::abs(dd) / std::sqrt(4.0 - d * d)).epsilon(1e-6));
        CHECK(kp > 0);
        (void)k;
    }
}

TEST_CASE("free Bloch solution") {
    const double w = 0.3 * kPi;
    auto bg = PeriodicBackground::free(1.0);
    auto bs = band_edges(bg, 1);
    auto bd = bloch(bg, bs, w * w);
    CHECK(std::abs(bd.psi0 - cplx(1.0, 0.0)) < 1e-10);
    CHECK(std::abs(bd.dpsi0 - cplx(0.0, w)) < 1e-9);
    CHECK(std::abs(bd.wronskian - cplx(0.0, 2 * w)) < 1e-9);
    CHECK(!bd.swapped);
}

TEST_CASE("Bloch quasi-periodicity and Wronskian sign") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 2);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    for (double l : {1.0, 15.0, 45.0}) {
        auto bd = bloch(bg, bs, l);
        CHECK(bd.wronskian.imag() > 0);
        CHECK(std::abs(bd.wronskian.real()) < 1e-8 * std::abs(bd.wronskian));
        const cplx eik = std::polar(1.0, bd.k);
        auto end = propagate(bg, l, bd.psi0, bd.dpsi0, 1.0);
        CHECK(std::abs(end[0] - eik * bd.psi0) < 1e-8);
        CHECK(std::abs(end[1] - eik * bd.dpsi0) < 1e-8 * std::max(1.0, std::abs(bd.dpsi0)));

        // psi(x + a) = e^{ik} psi(x) at random x.
        for (int i = 0; i < 10; ++i) {
            const double x = ux(rng);
            auto at_x = propagate(bg, l, bd.psi0, bd.dpsi0, x);
            auto at_xa = propagate(bg, l, end[0], end[1], x);
            CHECK(std::abs(at_xa[0] - eik * at_x[0]) < 1e-8 * std::max(1.0, std::abs(at_x[0])));
        }
    }
}

TEST_CASE("Bloch rescale hook") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 2);
    const double l = 15.0;
    auto ref = bloch(bg, bs, l);
    for (cplx s : {cplx(2.0, 0.0), cplx(0.0, 1.0), std::polar(0.5, kPi / 3)}) {
        auto bd = bloch(bg, bs, l, s);
        CHECK(std::abs(bd.psi0 - s * ref.psi0) < 1e-12);
        CHECK(std::abs(bd.wronskian - std::norm(s) * ref.wronskian) < 1e-10 * std::abs(bd.wronskian));
        CHECK(bd.wronskian.imag() > 0);
        for (int n : {-2, 0, 1}) {
            const cplx b0 = fourier_bn_plus(bg, ref, n), b1 = fourier_bn_plus(bg, bd, n);
            CHECK(std::abs(b1 - s * s * b0) < 1e-10 * std::max(1e-3, std::abs(b1)));
            CHECK(std::abs(b1) / std::abs(bd.wronskian) ==
                  doctest::Approx(std::abs(b0) / std::abs(ref.wronskian)).epsilon(1e-10));
        }
    }
}

TEST_CASE("Fourier coefficients of free Bloch products") {
    auto bg = PeriodicBackground::free(1.0);
    auto bs = band_edges(bg, 1);
    auto bd = bloch(bg, bs, std::pow(0.3 * kPi, 2));
    CHECK(std::abs(fourier_bn_plus(bg, bd, 0) - 1.0) < 1e-10);
    for (int n : {-3, -1, 1, 2, 5}) CHECK(std::abs(fourier_bn_plus(bg, bd, n)) < 1e-10);
}

TEST_CASE("Fourier coefficients decay for a smooth background") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 1);
    auto bd = bloch(bg, bs, 15.0);
    const double b0 = std::abs(fourier_bn_plus(bg, bd, 0));
    double worst = 0.0;
    for (int n = -8; n <= 8; ++n) worst = std::max(worst, std::abs(fourier_bn_plus(bg, bd, n)) * (n * n + 1));
    CHECK(worst < 20.0 * std::max(b0, 1.0));
    CHECK(std::abs(fourier_bn_plus(bg, bd, 8)) < std::abs(fourier_bn_plus(bg, bd, 2)));
}

TEST_CASE("Bloch grid is quasi-periodic and matches direct propagation") {
    auto bg = mathieu();
    auto bs = band_edges(bg, 1);
    auto bd = bloch(bg, bs, 15.0);
    BlochGrid grid(bg, bd, 64);
    for (long long m : {0LL, 5LL, 63LL, 64LL, 200LL, 6401LL}) {
        const double x = m * grid.spacing();
        const long long p = m / 64;
        auto direct = propagate(bg, 15.0, bd.psi0, bd.dpsi0, x - p * 1.0);
        const cplx ph = std::polar(1.0, bd.k * static_cast<double>(p));
        auto [psi, dpsi] = grid.at(m);
        CHECK(std::abs(psi - ph * direct[0]) < 1e-9);
        CHECK(std::abs(dpsi - ph * direct[1]) < 1e-9 * std::max(1.0, std::abs(dpsi)));
    }
}
