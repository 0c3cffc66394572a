#include <doctest.h>

#include "zr/integrator.hpp"
#include "zr/invariants.hpp"
#include "zr/model.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace zr;

namespace {

Params default_params() { return make_params(1.0, 1.0, 1.0, 7.0); }

FieldState zero_state(const SpectralGrid& g) {
    FieldState st;
    st.B.assign(g.n, Complex(0.0, 0.0));
    st.rho.assign(g.n, 0.0);
    st.u.assign(g.n, 0.0);
    st.phi.assign(g.n, 0.0);
    return st;
}

double max_field_diff(const FieldState& a, const FieldState& b) {
    double m = 0.0;
    for (size_t j = 0; j < a.B.size(); ++j) {
        m = std::max(m, std::abs(a.B[j] - b.B[j]));
        m = std::max(m, std::abs(a.rho[j] - b.rho[j]));
        m = std::max(m, std::abs(a.u[j] - b.u[j]));
        m = std::max(m, std::abs(a.phi[j] - b.phi[j]));
    }
    return m;
}

} // namespace

TEST_CASE("solver construction rejects bad arguments") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 16);
    CHECK_THROWS(StageSolver(p, g, gauss_tableau(2), 0.0));
    CHECK_THROWS(StageSolver(p, g, gauss_tableau(2),
                             std::numeric_limits<double>::infinity()));
    SolverOptions bad;
    bad.maxIter = 0;
    CHECK_THROWS(StageSolver(p, g, gauss_tableau(2), 0.1, bad));
}

TEST_CASE("zero data converges in a single sweep to zero slopes") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 32);
    const StageSolver solver(p, g, gauss_tableau(2), 0.1);
    IterationReport rep;
    const StageSlopes k = solver.solve_stages(zero_state(g), rep);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < g.n; ++j) {
            CHECK(std::abs(k.k1[i][j]) == 0.0);
            CHECK(k.k2[i][j] == 0.0);
            CHECK(k.k3[i][j] == 0.0);
            CHECK(k.k4[i][j] == 0.0);
        }
    const FieldState out = step(solver, zero_state(g));
    CHECK(out.t == doctest::Approx(0.1));
    CHECK(max_field_diff(out, zero_state(g)) <= 1e-16);
}

TEST_CASE("a decoupled envelope makes the stage equations linear: two sweeps") {
    Params p = default_params();
    p.kappa = 0.0; // drops every nonlinear term
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    const FieldState st = initial_single(default_params(), SolitonSpec{}, g);
    for (int s : {1, 2, 3}) {
        const StageSolver solver(p, g, gauss_tableau(s), 0.05);
        IterationReport rep;
        (void)solver.solve_stages(st, rep);
        CHECK(rep.converged);
        CHECK(rep.iterations == 2);
        CHECK(rep.finalResidual == 0.0);
    }
}

TEST_CASE("stage iteration converges fast on solitary-wave data") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 256);
    const FieldState st = initial_single(p, SolitonSpec{}, g);
    const StageSolver solver(p, g, gauss_tableau(2), 0.01);
    IterationReport rep;
    (void)solver.solve_stages(st, rep);
    CHECK(rep.converged);
    CHECK(rep.iterations >= 3);
    CHECK(rep.iterations <= 20);
    CHECK(rep.finalResidual <= 1e-13);
}

TEST_CASE("with constant slopes one step is exact regardless of the tableau") {
    // kappa = nu = beta = 0: u stays fixed, rho moves linearly at rate -u_x
    Params p;
    p.omega = 1.0;
    p.kappa = 0.0;
    p.nu = 0.0;
    p.beta = 0.0;
    p.q = 0.0;
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    FieldState st = zero_state(g);
    for (int j = 0; j < g.n; ++j) {
        st.B[j] = std::exp(Complex(0.0, g.mu * g.x[j]));
        st.u[j] = std::sin(2.0 * g.mu * g.x[j]);
        st.phi[j] = 1.0;
    }
    const RVec ux = apply_d1(g, st.u);
    const double tau = 0.3;
    for (int s : {1, 2, 3}) {
        const FieldState out = step(StageSolver(p, g, gauss_tableau(s), tau), st);
        for (int j = 0; j < g.n; ++j) {
            CHECK(out.rho[j] == doctest::Approx(-tau * ux[j]).epsilon(1e-13));
            CHECK(out.u[j] == doctest::Approx(st.u[j]).epsilon(1e-13));
        }
        // the free envelope still conserves mass exactly
        CHECK(mass(g, out) == doctest::Approx(mass(g, st)).epsilon(1e-13));
    }
}

TEST_CASE("first collocation scheme coincides with the midpoint fixed-point scheme") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    FieldState a = initial_single(p, SolitonSpec{}, g);
    FieldState b = a;
    const StageSolver solver(p, g, gauss_tableau(1), 0.02);
    for (int i = 0; i < 5; ++i) {
        a = step(solver, a);
        b = cn_fp_step(p, g, b, 0.02);
    }
    CHECK(max_field_diff(a, b) <= 1e-12);
}

TEST_CASE("collocation schemes conserve all four functionals; dissipative ones only the linear pair") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 128);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    const InvariantRecord r0 = invariant_record(p, g, st0);

    SUBCASE("gauss s=2") {
        FieldState st = st0;
        const StageSolver solver(p, g, gauss_tableau(2), 0.02);
        for (int i = 0; i < 50; ++i) st = step(solver, st);
        const InvariantRecord r = invariant_record(p, g, st);
        CHECK(relative_drift(r.mass, r0.mass) <= 1e-13);
        CHECK(relative_drift(r.energyQ, r0.energyQ) <= 1e-12);
        CHECK(relative_drift(r.hamiltonian, r0.hamiltonian) <= 1e-12);
        CHECK(std::abs(r.i1 - r0.i1) <= 1e-13);
        CHECK(std::abs(r.i2 - r0.i2) <= 1e-13);
        CHECK(r.qavResidual <= 1e-13);
    }

    SUBCASE("implicit euler") {
        FieldState st = st0;
        const StageSolver solver(p, g, implicit_euler_tableau(), 0.1);
        for (int i = 0; i < 50; ++i) st = step(solver, st);
        const InvariantRecord r = invariant_record(p, g, st);
        CHECK(std::abs(r.i1 - r0.i1) <= 1e-13);
        CHECK(std::abs(r.i2 - r0.i2) <= 1e-13);
        CHECK(relative_drift(r.mass, r0.mass) > 1e-6);
    }

    SUBCASE("explicit euler") {
        // tau small enough that the scheme's linear instability stays benign
        // over 100 steps; the quadratic mass gain per step is still visible
        FieldState st = st0;
        const StageSolver solver(p, g, explicit_euler_tableau(), 1e-3);
        for (int i = 0; i < 100; ++i) st = step(solver, st);
        const InvariantRecord r = invariant_record(p, g, st);
        CHECK(std::abs(r.i1 - r0.i1) <= 1e-12);
        CHECK(std::abs(r.i2 - r0.i2) <= 1e-12);
        CHECK(relative_drift(r.mass, r0.mass) > 1e-8);
    }
}

TEST_CASE("one backward step undoes one forward step") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 128);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    const StageSolver fwd(p, g, gauss_tableau(2), 0.02);
    const StageSolver bwd(p, g, gauss_tableau(2), -0.02);
    const FieldState back = step(bwd, step(fwd, st0));
    CHECK(max_field_diff(back, st0) <= 1e-10);
    CHECK(back.t == doctest::Approx(0.0));
}

TEST_CASE("integrate: sampling cadence, step count, and exact final time") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 32);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    const StageSolver solver(p, g, gauss_tableau(1), 0.1);

    std::vector<double> times;
    IntegrateOptions opts;
    opts.T = 1.0;
    opts.cadence = 3;
    IntegrateStats stats;
    const FieldState fin = integrate(
        solver, st0, opts, [&](const FieldState& s) { times.push_back(s.t); },
        &stats);
    CHECK(stats.steps == 10);
    REQUIRE(times.size() == 5);
    CHECK(times[0] == 0.0);
    CHECK(times[1] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(times[3] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(times[4] == 1.0); // recomputed as t0 + n*tau, exact here
    CHECK(fin.t == 1.0);
}

TEST_CASE("integrate: degenerate and invalid horizons") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 32);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    const StageSolver solver(p, g, gauss_tableau(1), 0.1);

    int samples = 0;
    IntegrateOptions opts;
    opts.T = 0.0;
    const FieldState out =
        integrate(solver, st0, opts, [&](const FieldState&) { ++samples; });
    CHECK(samples == 1);
    CHECK(max_field_diff(out, st0) == 0.0);

    IntegrateOptions badT;
    badT.T = 0.25; // not an integer multiple of tau = 0.1
    CHECK_THROWS(integrate(solver, st0, badT));

    IntegrateOptions badCadence;
    badCadence.T = 1.0;
    badCadence.cadence = 0;
    CHECK_THROWS(integrate(solver, st0, badCadence));
}

TEST_CASE("nonconvergence surfaces through policy and statistics") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    SolverOptions starve;
    starve.maxIter = 1; // cannot resolve the nonlinearity in one sweep
    const StageSolver solver(p, g, gauss_tableau(2), 0.1, starve);

    IntegrateOptions abortOpts;
    abortOpts.T = 0.5;
    abortOpts.policy = NonconvergencePolicy::Abort;
    CHECK_THROWS(integrate(solver, st0, abortOpts));

    IntegrateOptions warnOpts;
    warnOpts.T = 0.5;
    warnOpts.policy = NonconvergencePolicy::Warn;
    IntegrateStats stats;
    (void)integrate(solver, st0, warnOpts, {}, &stats);
    CHECK(stats.steps == 5);
    CHECK(stats.nonconvergedSteps == 5);
    CHECK(stats.maxFinalResidual > 1e-12);
}

TEST_CASE("midpoint fixed-point scheme rejects a zero step and reports iterations") {
    const Params p = default_params();
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    CHECK_THROWS(cn_fp_step(p, g, st0, 0.0));
    IterationReport rep;
    const FieldState out = cn_fp_step(p, g, st0, 0.02, {}, &rep);
    CHECK(rep.converged);
    CHECK(out.t == doctest::Approx(0.02));
    for (int j = 0; j < g.n; ++j) CHECK(out.phi[j] == std::norm(out.B[j]));
}
