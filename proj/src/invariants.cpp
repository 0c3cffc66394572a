#include "zr/invariants.hpp"

#include <cmath>

namespace zr {

double mass(const SpectralGrid& g, const FieldState& st) {
    double s = 0.0;
    for (const auto& z : st.B) s += std::norm(z);
    return g.h * s;
}

namespace {
// Shared quadratic form: omega <D2 B,B> - kappa <u - nu/2 rho + q/2 w, w>
// - beta/2 <rho,rho> - 1/2 <u,u> + nu <u,rho>, with w either phi or |B|^2.
double energy_form(const Params& p, const SpectralGrid& g, const FieldState& st,
                   const RVec& w) {
    const double dispersive = p.omega * inner_d2(g, st.B);
    double coupling = 0.0, rho2 = 0.0, u2 = 0.0, urho = 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
        coupling += (st.u[j] - 0.5 * p.nu * st.rho[j] + 0.5 * p.q * w[j]) * w[j];
        rho2 += st.rho[j] * st.rho[j];
        u2 += st.u[j] * st.u[j];
        urho += st.u[j] * st.rho[j];
    }
    return dispersive + g.h * (-p.kappa * coupling - 0.5 * p.beta * rho2 -
                               0.5 * u2 + p.nu * urho);
}
} // namespace

double energy_quadratic(const Params& p, const SpectralGrid& g, const FieldState& st) {
    return energy_form(p, g, st, st.phi);
}

double hamiltonian(const Params& p, const SpectralGrid& g, const FieldState& st) {
    RVec w(st.B.size());
    for (size_t j = 0; j < w.size(); ++j) w[j] = std::norm(st.B[j]);
    return energy_form(p, g, st, w);
}

std::pair<double, double> linear_invariants(const SpectralGrid& g, const FieldState& st) {
    double i1 = 0.0, i2 = 0.0;
    for (size_t j = 0; j < st.rho.size(); ++j) {
        i1 += st.rho[j];
        i2 += st.u[j];
    }
    return {g.h * i1, g.h * i2};
}

double qav_residual(const FieldState& st) {
    double m = 0.0;
    for (size_t j = 0; j < st.phi.size(); ++j)
        m = std::max(m, std::abs(st.phi[j] - std::norm(st.B[j])));
    return m;
}

InvariantRecord invariant_record(const Params& p, const SpectralGrid& g,
                                 const FieldState& st) {
    InvariantRecord r;
    r.t = st.t;
    r.mass = mass(g, st);
    r.energyQ = energy_quadratic(p, g, st);
    r.hamiltonian = hamiltonian(p, g, st);
    const auto [i1, i2] = linear_invariants(g, st);
    r.i1 = i1;
    r.i2 = i2;
    r.qavResidual = qav_residual(st);
    return r;
}

double relative_drift(double value, double baseline) {
    return std::abs(value - baseline) / std::max(std::abs(baseline), 1e-300);
}

ErrorNorms error_norms(const Params& p, const SolitonSpec& s, const SpectralGrid& g,
                       const FieldState& st) {
    return error_norms(g, st, solitary_wave(p, s, g, st.t));
}

ErrorNorms error_norms(const SpectralGrid& g, const FieldState& st,
                       const FieldState& ref) {
    (void)g;
    ErrorNorms e;
    for (size_t j = 0; j < st.B.size(); ++j) {
        e.eB = std::max(e.eB, std::abs(st.B[j] - ref.B[j]));
        e.eRho = std::max(e.eRho, std::abs(st.rho[j] - ref.rho[j]));
        e.eU = std::max(e.eU, std::abs(st.u[j] - ref.u[j]));
    }
    return e;
}

} // namespace zr
