#include <doctest.h>

#include "zr/model.hpp"

#include <cmath>

using namespace zr;

namespace {

Params default_params() { return make_params(1.0, 1.0, 1.0, 7.0); }

} // namespace

TEST_CASE("coupling coefficient for the benchmark parameter sets") {
    CHECK(derive_q(1.0, 1.0, 1.0, 7.0) == doctest::Approx(1.0).epsilon(1e-14));
    // the three collision parameter blocks
    CHECK(derive_q(1.0, 2.0, 0.2, 75.0) ==
          doctest::Approx(1.9995998).epsilon(1e-7));
    CHECK(derive_q(1.0, 3.0, 0.2, 12.0) ==
          doctest::Approx(2.9983278).epsilon(1e-7));
    CHECK(derive_q(1.0, 1.0, 0.5, 3.0) ==
          doctest::Approx(0.97727272727).epsilon(1e-10));
    // degenerate acoustic speed: beta = nu^2
    CHECK_THROWS(derive_q(1.0, 1.0, 2.0, 4.0));
}

TEST_CASE("traveling-wave coefficients for the default parameters") {
    const Params p = default_params();
    const SolitonSpec s{}; // c = eta = 1, x0 = 2, d0 = 0, sign = Minus
    CHECK(p.q == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(zeta_coeff(p, s.c) == doctest::Approx(-0.75).epsilon(1e-14));
    CHECK(soliton_lambda(p, s) == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(soliton_amplitude(p, s) ==
          doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-14));
    // rho and u responses are these multiples of the squared envelope
    CHECK(soliton_rho_coeff(p, s.c) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(soliton_u_coeff(p, s.c) == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("pointwise solitary-wave values at the crest") {
    const Params p = default_params();
    SolitonSpec s;
    s.x0 = 2.0;
    const double xPeak = -s.x0;
    const double A = soliton_amplitude(p, s);
    CHECK(std::abs(soliton_B(p, s, xPeak, 0.0)) ==
          doctest::Approx(A).epsilon(1e-14));
    CHECK(soliton_rho(p, s, xPeak, 0.0) ==
          doctest::Approx(-4.0 / 3.0).epsilon(1e-13));
    CHECK(soliton_u(p, s, xPeak, 0.0) ==
          doctest::Approx(-16.0 / 3.0).epsilon(1e-13));
    CHECK(soliton_u(p, s, xPeak, 0.0) / soliton_rho(p, s, xPeak, 0.0) ==
          doctest::Approx(4.0).epsilon(1e-13));

    // initial phase at the crest is c*x/(2 omega) + d0
    SolitonSpec sd = s;
    sd.d0 = 0.7;
    const Complex ratio =
        soliton_B(p, sd, xPeak, 0.0) / soliton_B(p, s, xPeak, 0.0);
    CHECK(ratio.real() == doctest::Approx(std::cos(0.7)).epsilon(1e-13));
    CHECK(ratio.imag() == doctest::Approx(std::sin(0.7)).epsilon(1e-13));
}

TEST_CASE("the modulus travels rigidly at speed c") {
    const Params p = default_params();
    const SolitonSpec s{};
    for (double x : {-3.0, 0.5, 4.25}) {
        for (double t : {0.4, 1.7}) {
            CHECK(std::abs(soliton_B(p, s, x, t)) ==
                  doctest::Approx(std::abs(soliton_B(p, s, x - s.c * t, 0.0)))
                      .epsilon(1e-13));
            CHECK(soliton_rho(p, s, x, t) ==
                  doctest::Approx(soliton_rho(p, s, x - s.c * t, 0.0))
                      .epsilon(1e-13));
        }
    }
}

TEST_CASE("parameters without a bright solitary wave are rejected") {
    // c = 2, beta = 1, nu = 0 gives kappa*zeta = 4/3 > 0: no sech envelope
    const Params p = make_params(1.0, 1.0, 0.0, 1.0);
    SolitonSpec s;
    s.c = 2.0;
    CHECK(zeta_coeff(p, s.c) == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
    s.sign = EnvelopeSign::Minus;
    CHECK_THROWS(soliton_amplitude(p, s));

    // sonic resonance: beta = (c + nu)^2
    const Params ps = make_params(1.0, 1.0, 1.0, 4.0);
    SolitonSpec ss;
    ss.c = 1.0;
    CHECK_THROWS(soliton_amplitude(ps, ss));
}

TEST_CASE("consistent initial data carries phi = |B|^2 exactly") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 128);
    const FieldState st = initial_single(p, SolitonSpec{}, g);
    CHECK(st.t == 0.0);
    for (int j = 0; j < g.n; ++j) CHECK(st.phi[j] == std::norm(st.B[j]));
    // crest sits on the x = -x0 grid point
    double best = 0.0;
    int arg = 0;
    for (int j = 0; j < g.n; ++j)
        if (std::abs(st.B[j]) > best) {
            best = std::abs(st.B[j]);
            arg = j;
        }
    CHECK(g.x[arg] == doctest::Approx(-2.0));
    CHECK(best == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("field equations residual: oracle behavior") {
    const Params p = default_params();
    const SolitonSpec s{};
    const SpectralGrid g = build_grid(-34.0, 30.0, 512); // crest-centered box

    // the zero candidate solves nothing but annihilates the residual operator
    CandidateSolution zero;
    zero.B = [](double, double) { return Complex(0.0, 0.0); };
    zero.rho = [](double, double) { return 0.0; };
    zero.u = [](double, double) { return 0.0; };
    const ResidualNorms rz = pde_residual(p, zero, g, 0.25);
    CHECK(rz.rB == 0.0);
    CHECK(rz.rRho == 0.0);
    CHECK(rz.rU == 0.0);

    // the validated convention satisfies the system to the differencing floor
    const ResidualNorms rv = pde_residual(p, soliton_candidate(p, s), g, 0.25);
    CHECK(rv.max() <= 1e-9);

    // a wrong phase frequency leaves the envelope equation violated
    const ResidualNorms rw =
        pde_residual(p, soliton_candidate(p, s, 0.1), g, 0.25);
    CHECK(rw.rB > 1e-2);
    CHECK(rw.rRho <= 1e-9); // acoustic equations never see the phase
}

TEST_CASE("envelope sign decision procedure") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-34.0, 30.0, 512);
    const SignResolution res = resolve_envelope_sign(p, SolitonSpec{}, g);
    REQUIRE(res.sign.has_value());
    CHECK(*res.sign == EnvelopeSign::Minus);
    CHECK(res.minus.max() <= 1e-6);
    CHECK(std::isinf(res.plus.max())); // inadmissible amplitude on this branch

    // parameters admitting no sech envelope leave the sign unresolved
    const Params pna = make_params(1.0, 1.0, 0.0, 1.0);
    SolitonSpec sna;
    sna.c = 2.0;
    sna.x0 = 0.0;
    const SpectralGrid gna = build_grid(-32.0, 32.0, 512);
    const SignResolution resNa = resolve_envelope_sign(pna, sna, gna);
    CHECK(!resNa.sign.has_value());
}

TEST_CASE("collision setups match the three benchmark blocks") {
    const CollisionSetup c1 = collision_setup(CollisionId::I);
    CHECK(c1.params.kappa == 2.0);
    CHECK(c1.params.nu == 0.2);
    CHECK(c1.params.beta == 75.0);
    CHECK(c1.right.c == 8.0);
    CHECK(c1.left.c == -8.0);
    CHECK(c1.right.x0 == 8.0);
    CHECK(c1.a == -20.0);
    CHECK(c1.b == 20.0);
    CHECK(c1.T == 2.0);

    const CollisionSetup c2 = collision_setup(CollisionId::II);
    CHECK(c2.params.kappa == 3.0);
    CHECK(c2.params.beta == 12.0);
    CHECK(c2.right.c == 1.5);
    CHECK(c2.T == 12.0);
    CHECK(c2.b == 24.0);

    const CollisionSetup c3 = collision_setup(CollisionId::III);
    CHECK(c3.params.nu == 0.5);
    CHECK(c3.params.beta == 3.0);
    CHECK(c3.right.c == 0.0);
    CHECK(c3.left.c == -0.5);
    CHECK(c3.right.x0 == -8.0);
    CHECK(c3.left.x0 == -26.0);
    CHECK(c3.a == -70.0);
    CHECK(c3.b == 70.0);
    CHECK(c3.T == 60.0);
}

TEST_CASE("two-wave initial data: far field and local structure") {
    CollisionSetup cs = collision_setup(CollisionId::I);
    const SpectralGrid g = build_grid(cs.a, cs.b, 320);
    const FieldState st = initial_collision(cs, g);
    CHECK(std::abs(st.B[0]) <= 1e-5); // tails at the box edge
    for (int j = 0; j < g.n; ++j) CHECK(st.phi[j] == std::norm(st.B[j]));

    // case II: the right-moving wave depresses the density at its own crest
    CollisionSetup cs2 = collision_setup(CollisionId::II);
    const SpectralGrid g2 = build_grid(cs2.a, cs2.b, 384);
    const FieldState st2 = initial_collision(cs2, g2);
    int jPeak = 0;
    for (int j = 0; j < g2.n; ++j)
        if (g2.x[j] == -9.0) jPeak = j;
    CHECK(g2.x[jPeak] == -9.0);
    CHECK(st2.rho[jPeak] < 0.0);
}
