#ifndef ZR_MODEL_HPP
#define ZR_MODEL_HPP

#include "zr/spectral.hpp"

#include <functional>
#include <optional>

namespace zr {

/// Physical coefficients of the coupled Schroedinger/acoustic system
///
///   i B_t + omega B_xx - kappa (u - nu/2 rho + q |B|^2) B = 0
///   rho_t + (u - nu rho)_x = -kappa (|B|^2)_x
///   u_t + (beta rho - nu u)_x = (kappa nu / 2) (|B|^2)_x
///
/// with the derived coupling q = kappa + nu (kappa nu - 1) / (4 (beta - nu^2)).
struct Params {
    double omega = 1.0;
    double kappa = 1.0;
    double nu = 1.0;
    double beta = 7.0;
    double q = 1.0; // derived; see make_params / derive_q
};

/// q from the four primitive coefficients.  Throws std::invalid_argument when
/// beta == nu^2 (the formula's pole).
double derive_q(double omega, double kappa, double nu, double beta);

/// Bundle the primitive coefficients with the derived q.
Params make_params(double omega, double kappa, double nu, double beta);

/// Field state at one time level: complex envelope B and real fields rho, u,
/// plus the auxiliary phi carried by the integrator (consistent initial data
/// sets phi = |B|^2).
struct FieldState {
    double t = 0.0;
    CVec B;
    RVec rho;
    RVec u;
    RVec phi;
};

/// Sign convention s in the sech-envelope amplitude A^2 = s*2*omega*eta/(kappa*zeta).
/// Substituting the traveling-wave ansatz into the Schroedinger part yields
/// omega R'' = omega eta R + kappa zeta R^3, which R = A sech(sqrt(eta) x)
/// solves only for s = Minus; resolve_envelope_sign() verifies this
/// numerically instead of trusting the algebra.
enum class EnvelopeSign { Plus = +1, Minus = -1 };

/// Traveling solitary wave
///   B(x,t)  = exp{i(lambda t + c (x - c t)/(2 omega) + d0)} R(x - c t + x0)
///   rho     = Arho R^2,  u = Au R^2   (same moving argument)
/// with R = A sech(sqrt(eta) .), lambda = (4 omega^2 eta + c^2)/(4 omega).
struct SolitonSpec {
    double c = 1.0;   // wave speed
    double eta = 1.0; // envelope width parameter, > 0
    double x0 = 2.0;  // initial offset: the envelope peaks at x = -x0 at t = 0
    double d0 = 0.0;  // constant phase
    EnvelopeSign sign = EnvelopeSign::Minus; // validated default
};

/// Cubic coefficient zeta(c) = q + kappa(4 c nu + 3 nu^2 - 4 beta) /
/// (4 (beta - (c+nu)^2)).  Throws std::invalid_argument when beta == (c+nu)^2.
double zeta_coeff(const Params& p, double c);

/// Phase rate lambda = (4 omega^2 eta + c^2) / (4 omega).
double soliton_lambda(const Params& p, const SolitonSpec& s);

/// Envelope amplitude A = sqrt(s * 2 omega eta / (kappa zeta)).  Throws
/// std::domain_error when the radicand is not positive under spec.sign.
double soliton_amplitude(const Params& p, const SolitonSpec& s);

/// rho = Arho R^2 and u = Au R^2 coefficients:
///   Arho = -kappa (2c + nu) / (2 (beta - (c+nu)^2))
///   Au   =  kappa (c nu + nu^2 - 2 beta) / (2 (beta - (c+nu)^2))
double soliton_rho_coeff(const Params& p, double c);
double soliton_u_coeff(const Params& p, double c);

/// Pointwise exact solution.
Complex soliton_B(const Params& p, const SolitonSpec& s, double x, double t);
double soliton_rho(const Params& p, const SolitonSpec& s, double x, double t);
double soliton_u(const Params& p, const SolitonSpec& s, double x, double t);

/// Exact solution sampled on the grid at time t, with phi = |B|^2.
FieldState solitary_wave(const Params& p, const SolitonSpec& s,
                         const SpectralGrid& g, double t);

/// Consistent initial data: solitary_wave at t = 0.
FieldState initial_single(const Params& p, const SolitonSpec& s, const SpectralGrid& g);

/// Arbitrary candidate triple (B, rho, u) as functions of (x, t), for
/// residual evaluation.
struct CandidateSolution {
    std::function<Complex(double, double)> B;
    std::function<double(double, double)> rho;
    std::function<double(double, double)> u;
};

/// Candidate built from the solitary-wave formulas, optionally with the phase
/// rate shifted by lambda_shift (used to confirm the residual detects a
/// broken dispersion relation).
CandidateSolution soliton_candidate(const Params& p, const SolitonSpec& s,
                                    double lambda_shift = 0.0);

/// Grid infinity norms of the three equation residuals at time t.  Time
/// derivatives use a 6th-order central difference with step 1e-3; spatial
/// derivatives are pseudo-spectral on the sampled grid.
struct ResidualNorms {
    double rB = 0.0;
    double rRho = 0.0;
    double rU = 0.0;
    double max() const;
};

ResidualNorms pde_residual(const Params& p, const CandidateSolution& cand,
                           const SpectralGrid& g, double t);

/// Decision procedure for the envelope-amplitude sign: evaluate the PDE
/// residual of each admissible sign candidate and adopt the one whose maximum
/// residual is <= tol.  Residuals of inadmissible candidates (imaginary
/// amplitude) are reported as +inf.
struct SignResolution {
    std::optional<EnvelopeSign> sign;
    ResidualNorms plus;  // residuals of the s = +1 candidate
    ResidualNorms minus; // residuals of the s = -1 candidate
};

SignResolution resolve_envelope_sign(const Params& p, SolitonSpec s,
                                     const SpectralGrid& g, double t = 0.25,
                                     double tol = 1e-6);

/// Two-wave collision experiments.
enum class CollisionId { I, II, III };

/// Parameters, the two waves, and the recommended domain/horizon for a
/// collision experiment.  omega = 1, d0 = 0, eta = 1 for both waves.
struct CollisionSetup {
    Params params;
    SolitonSpec right; // the c+ wave
    SolitonSpec left;  // the c- wave
    double a = 0.0;    // recommended domain [a,b)
    double b = 0.0;
    double T = 0.0;    // recommended horizon
};

CollisionSetup collision_setup(CollisionId id);

/// Superposed two-wave initial data
///   B0  = sum_{+,-} exp{i(c x/(2 omega) + d0)} R(x + x0)
///   rho0, u0 = per-wave coefficient sums, phi0 = |B0|^2.
FieldState initial_collision(const CollisionSetup& cs, const SpectralGrid& g);

} // namespace zr

#endif
