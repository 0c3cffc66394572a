#ifndef ZR_INVARIANTS_HPP
#define ZR_INVARIANTS_HPP

#include "zr/model.hpp"
#include "zr/spectral.hpp"

#include <utility>

namespace zr {

/// Discrete mass M = <|B|^2, 1>_h.
double mass(const SpectralGrid& g, const FieldState& st);

/// Quadratized energy, the quantity the integrator conserves:
///   E = omega <D2 B, B>_h - kappa <u - nu/2 rho + q/2 phi, phi>_h
///       - beta/2 <rho,rho>_h - 1/2 <u,u>_h + nu <u,rho>_h
/// with <D2 B, B>_h evaluated in frequency space.
double energy_quadratic(const Params& p, const SpectralGrid& g, const FieldState& st);

/// Original Hamiltonian: energy_quadratic with |B|^2 substituted for phi.
double hamiltonian(const Params& p, const SpectralGrid& g, const FieldState& st);

/// Linear invariants (<rho,1>_h, <u,1>_h).
std::pair<double, double> linear_invariants(const SpectralGrid& g, const FieldState& st);

/// ||phi - |B|^2||_inf, the defect of the auxiliary variable.
double qav_residual(const FieldState& st);

/// One diagnostics row.
struct InvariantRecord {
    double t = 0.0;
    double mass = 0.0;
    double energyQ = 0.0;
    double hamiltonian = 0.0;
    double i1 = 0.0;
    double i2 = 0.0;
    double qavResidual = 0.0;
};

InvariantRecord invariant_record(const Params& p, const SpectralGrid& g,
                                 const FieldState& st);

/// |q - q0| / max(|q0|, 1e-300); near-zero baselines make the absolute drift
/// the meaningful number, which callers log separately.
double relative_drift(double value, double baseline);

/// Grid infinity norms of the numerical state minus the exact solitary wave
/// sampled at st.t.
struct ErrorNorms {
    double eB = 0.0;
    double eRho = 0.0;
    double eU = 0.0;
};

ErrorNorms error_norms(const Params& p, const SolitonSpec& s, const SpectralGrid& g,
                       const FieldState& st);

/// Error norms against an arbitrary reference state (self-convergence runs).
ErrorNorms error_norms(const SpectralGrid& g, const FieldState& st,
                       const FieldState& ref);

} // namespace zr

#endif
