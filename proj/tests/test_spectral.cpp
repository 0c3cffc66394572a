#include <doctest.h>

#include "zr/spectral.hpp"

#include <cmath>
#include <random>

using namespace zr;

namespace {

double max_diff(const RVec& a, const RVec& b) {
    double m = 0.0;
    for (size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

double max_diff(const CVec& a, const CVec& b) {
    double m = 0.0;
    for (size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

} // namespace

TEST_CASE("grid layout and derivative symbols") {
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    CHECK(g.n == 64);
    CHECK(g.h == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.mu == doctest::Approx(2.0 * M_PI / 64.0).epsilon(1e-15));
    CHECK(g.x[0] == doctest::Approx(-32.0));
    CHECK(g.x[63] == doctest::Approx(31.0));

    // first-derivative symbol: i*mu*l with the Nyquist slot zeroed
    CHECK(g.sym1[0] == Complex(0.0, 0.0));
    CHECK(g.sym1[1].real() == 0.0);
    CHECK(g.sym1[1].imag() == doctest::Approx(g.mu).epsilon(1e-15));
    CHECK(g.sym1[63].imag() == doctest::Approx(-g.mu).epsilon(1e-15));
    CHECK(g.sym1[32] == Complex(0.0, 0.0));

    // second-derivative symbol: -(mu*l)^2 with the Nyquist entry retained
    CHECK(g.sym2[0] == 0.0);
    CHECK(g.sym2[1] == doctest::Approx(-g.mu * g.mu).epsilon(1e-15));
    CHECK(g.sym2[32] == doctest::Approx(-M_PI * M_PI).epsilon(1e-14));
    CHECK(g.sym2[33] == doctest::Approx(-31.0 * 31.0 * g.mu * g.mu).epsilon(1e-14));
}

TEST_CASE("grid rejects malformed arguments") {
    CHECK_THROWS(build_grid(1.0, 1.0, 8));  // empty interval
    CHECK_THROWS(build_grid(1.0, 0.0, 8));  // reversed interval
    CHECK_THROWS(build_grid(0.0, 1.0, 7));  // odd point count
    CHECK_THROWS(build_grid(0.0, 1.0, 2));  // too small
}

TEST_CASE("derivatives are exact on resolved trigonometric modes") {
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);

    RVec v(g.n), d1e(g.n), d2e(g.n);
    for (int j = 0; j < g.n; ++j) {
        const double th = 3.0 * g.mu * g.x[j];
        v[j] = std::sin(th);
        d1e[j] = 3.0 * g.mu * std::cos(th);
        d2e[j] = -9.0 * g.mu * g.mu * std::sin(th);
    }
    CHECK(max_diff(apply_d1(g, v), d1e) <= 1e-13);
    CHECK(max_diff(apply_d2(g, v), d2e) <= 1e-13);

    CVec w(g.n), dw(g.n), ddw(g.n);
    for (int j = 0; j < g.n; ++j) {
        const Complex ph = std::exp(Complex(0.0, 5.0 * g.mu * g.x[j]));
        w[j] = ph;
        dw[j] = Complex(0.0, 5.0 * g.mu) * ph;
        ddw[j] = -25.0 * g.mu * g.mu * ph;
    }
    CHECK(max_diff(apply_d1(g, w), dw) <= 1e-13);
    CHECK(max_diff(apply_d2(g, w), ddw) <= 1e-13);
}

TEST_CASE("transform round trip and Parseval constant") {
    const SpectralGrid g = build_grid(-5.0, 11.0, 48);
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CVec v(g.n);
    for (auto& z : v) z = Complex(dist(gen), dist(gen));

    const CVec back = fft_inverse(g, fft_forward(g, v));
    CHECK(max_diff(back, v) <= 1e-13);

    double phys = 0.0;
    for (const auto& z : v) phys += std::norm(z);
    phys *= g.h;
    const CVec vhat = fft_forward(g, v);
    double spec = 0.0;
    for (const auto& z : vhat) spec += std::norm(z);
    spec *= g.h / g.n;
    CHECK(phys == doctest::Approx(spec).epsilon(1e-12));
}

TEST_CASE("second derivative equals twice-applied first derivative off the Nyquist mode") {
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CVec v(g.n);
    for (auto& z : v) z = Complex(dist(gen), 0.0);

    // project out the Nyquist mode, where the two operators legitimately differ
    CVec vhat = fft_forward(g, v);
    vhat[g.n / 2] = Complex(0.0, 0.0);
    const CVec vp = fft_inverse(g, vhat);

    CHECK(max_diff(apply_d1(g, apply_d1(g, vp)), apply_d2(g, vp)) <= 1e-11);

    // on the pure Nyquist mode they differ by design: sym1 kills it, sym2 keeps it
    CVec ny(g.n);
    for (int j = 0; j < g.n; ++j) ny[j] = Complex((j % 2 == 0) ? 1.0 : -1.0, 0.0);
    const CVec d1d1 = apply_d1(g, apply_d1(g, ny));
    const CVec d2 = apply_d2(g, ny);
    CHECK(max_diff(d1d1, CVec(g.n, Complex(0.0, 0.0))) <= 1e-11);
    CHECK(std::abs(d2[0]) == doctest::Approx(M_PI * M_PI).epsilon(1e-12));
}

TEST_CASE("real-path transforms enforce a vanishing imaginary residue") {
    const SpectralGrid g = build_grid(0.0, 1.0, 16);

    // Hermitian spectrum: real inverse, accepted
    CVec herm(g.n, Complex(0.0, 0.0));
    herm[1] = Complex(1.0, 0.0);
    herm[g.n - 1] = Complex(1.0, 0.0);
    const RVec cosv = fft_inverse_real(g, herm);
    for (int j = 0; j < g.n; ++j)
        CHECK(cosv[j] ==
              doctest::Approx(2.0 * std::cos(g.mu * (g.x[j] - g.x[0])) / g.n)
                  .epsilon(1e-12));

    // non-Hermitian spectrum: O(1/n) imaginary residue, rejected
    CVec bad(g.n, Complex(0.0, 0.0));
    bad[1] = Complex(1.0, 0.0);
    CHECK_THROWS(fft_inverse_real(g, bad));
}

TEST_CASE("discrete inner products and norms") {
    const SpectralGrid g = build_grid(0.0, 1.0, 8);
    CHECK(norm_h(g, RVec(g.n, 1.0)) == doctest::Approx(1.0).epsilon(1e-14));

    const SpectralGrid g2 = build_grid(0.0, 2.0 * M_PI, 32);
    CVec mode(g2.n);
    for (int j = 0; j < g2.n; ++j) mode[j] = std::exp(Complex(0.0, g2.x[j]));
    // <D2 v, v>_h for a unit mode: -mu^2 * (b - a) with mu = 1 here
    CHECK(inner_d2(g2, mode) == doctest::Approx(-2.0 * M_PI).epsilon(1e-13));
    CHECK(inner(g2, mode, mode).real() == doctest::Approx(2.0 * M_PI).epsilon(1e-13));
    CHECK(std::abs(inner(g2, mode, mode).imag()) <= 1e-13);
}
