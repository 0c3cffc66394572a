#include "zr/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace zr {

double derive_q(double omega, double kappa, double nu, double beta) {
    (void)omega;
    const double denom = beta - nu * nu;
    if (denom == 0.0)
        throw std::invalid_argument("derive_q: beta == nu^2 makes q singular");
    const double q = kappa + nu * (kappa * nu - 1.0) / (4.0 * denom);
    if (!std::isfinite(q)) throw std::invalid_argument("derive_q: q is not finite");
    return q;
}

Params make_params(double omega, double kappa, double nu, double beta) {
    Params p;
    p.omega = omega;
    p.kappa = kappa;
    p.nu = nu;
    p.beta = beta;
    p.q = derive_q(omega, kappa, nu, beta);
    return p;
}

namespace {
double acoustic_denom(const Params& p, double c) {
    const double d = p.beta - (c + p.nu) * (c + p.nu);
    if (d == 0.0)
        throw std::invalid_argument("soliton: beta == (c+nu)^2 makes the wave singular");
    return d;
}
} // namespace

double zeta_coeff(const Params& p, double c) {
    const double d = acoustic_denom(p, c);
    return p.q + p.kappa * (4.0 * c * p.nu + 3.0 * p.nu * p.nu - 4.0 * p.beta) / (4.0 * d);
}

double soliton_lambda(const Params& p, const SolitonSpec& s) {
    return (4.0 * p.omega * p.omega * s.eta + s.c * s.c) / (4.0 * p.omega);
}

double soliton_amplitude(const Params& p, const SolitonSpec& s) {
    if (!(s.eta > 0.0)) throw std::invalid_argument("soliton: require eta > 0");
    const double z = zeta_coeff(p, s.c);
    const double radicand =
        static_cast<int>(s.sign) * 2.0 * p.omega * s.eta / (p.kappa * z);
    if (!(radicand > 0.0))
        throw std::domain_error("soliton: amplitude radicand not positive under the "
                                "requested sign convention");
    return std::sqrt(radicand);
}

double soliton_rho_coeff(const Params& p, double c) {
    return -p.kappa * (2.0 * c + p.nu) / (2.0 * acoustic_denom(p, c));
}

double soliton_u_coeff(const Params& p, double c) {
    return p.kappa * (c * p.nu + p.nu * p.nu - 2.0 * p.beta) / (2.0 * acoustic_denom(p, c));
}

namespace {
double envelope(const Params& p, const SolitonSpec& s, double x, double t) {
    const double amp = soliton_amplitude(p, s);
    const double arg = std::sqrt(s.eta) * (x - s.c * t + s.x0);
    return amp / std::cosh(arg);
}
} // namespace

Complex soliton_B(const Params& p, const SolitonSpec& s, double x, double t) {
    const double lambda = soliton_lambda(p, s);
    const double phase = lambda * t + s.c * (x - s.c * t) / (2.0 * p.omega) + s.d0;
    return std::polar(envelope(p, s, x, t), phase);
}

double soliton_rho(const Params& p, const SolitonSpec& s, double x, double t) {
    const double R = envelope(p, s, x, t);
    return soliton_rho_coeff(p, s.c) * R * R;
}

double soliton_u(const Params& p, const SolitonSpec& s, double x, double t) {
    const double R = envelope(p, s, x, t);
    return soliton_u_coeff(p, s.c) * R * R;
}

FieldState solitary_wave(const Params& p, const SolitonSpec& s,
                         const SpectralGrid& g, double t) {
    FieldState st;
    st.t = t;
    st.B.resize(g.n);
    st.rho.resize(g.n);
    st.u.resize(g.n);
    st.phi.resize(g.n);
    for (int j = 0; j < g.n; ++j) {
        st.B[j] = soliton_B(p, s, g.x[j], t);
        st.rho[j] = soliton_rho(p, s, g.x[j], t);
        st.u[j] = soliton_u(p, s, g.x[j], t);
        st.phi[j] = std::norm(st.B[j]);
    }
    return st;
}

FieldState initial_single(const Params& p, const SolitonSpec& s, const SpectralGrid& g) {
    return solitary_wave(p, s, g, 0.0);
}

CandidateSolution soliton_candidate(const Params& p, const SolitonSpec& s,
                                    double lambda_shift) {
    CandidateSolution cand;
    cand.B = [p, s, lambda_shift](double x, double t) {
        return soliton_B(p, s, x, t) * std::polar(1.0, lambda_shift * t);
    };
    cand.rho = [p, s](double x, double t) { return soliton_rho(p, s, x, t); };
    cand.u = [p, s](double x, double t) { return soliton_u(p, s, x, t); };
    return cand;
}

double ResidualNorms::max() const { return std::max(rB, std::max(rRho, rU)); }

ResidualNorms pde_residual(const Params& p, const CandidateSolution& cand,
                           const SpectralGrid& g, double t) {
    const int n = g.n;
    const double dt = 1e-3;
    // 6th-order central difference weights for f'(t) at offsets +-1, +-2, +-3.
    const double w1 = 3.0 / 4.0, w2 = -3.0 / 20.0, w3 = 1.0 / 60.0;

    CVec B(n), Bt(n, Complex(0.0, 0.0));
    RVec rho(n), u(n), rhot(n, 0.0), ut(n, 0.0), absB2(n);
    for (int j = 0; j < n; ++j) {
        B[j] = cand.B(g.x[j], t);
        rho[j] = cand.rho(g.x[j], t);
        u[j] = cand.u(g.x[j], t);
        absB2[j] = std::norm(B[j]);
    }
    const double wts[3] = {w1, w2, w3};
    for (int k = 1; k <= 3; ++k) {
        const double w = wts[k - 1] / dt;
        for (int j = 0; j < n; ++j) {
            Bt[j] += w * (cand.B(g.x[j], t + k * dt) - cand.B(g.x[j], t - k * dt));
            rhot[j] += w * (cand.rho(g.x[j], t + k * dt) - cand.rho(g.x[j], t - k * dt));
            ut[j] += w * (cand.u(g.x[j], t + k * dt) - cand.u(g.x[j], t - k * dt));
        }
    }

    const CVec Bxx = apply_d2(g, B);
    ResidualNorms r;
    CVec resB(n);
    for (int j = 0; j < n; ++j) {
        const double coef = u[j] - 0.5 * p.nu * rho[j] + p.q * absB2[j];
        resB[j] = Complex(0.0, 1.0) * Bt[j] + p.omega * Bxx[j] - p.kappa * coef * B[j];
    }
    r.rB = norm_inf(resB);

    RVec flux_rho(n), flux_u(n);
    for (int j = 0; j < n; ++j) {
        flux_rho[j] = u[j] - p.nu * rho[j] + p.kappa * absB2[j];
        flux_u[j] = p.beta * rho[j] - p.nu * u[j] - 0.5 * p.kappa * p.nu * absB2[j];
    }
    const RVec dflux_rho = apply_d1(g, flux_rho);
    const RVec dflux_u = apply_d1(g, flux_u);
    RVec resR(n), resU(n);
    for (int j = 0; j < n; ++j) {
        resR[j] = rhot[j] + dflux_rho[j];
        resU[j] = ut[j] + dflux_u[j];
    }
    r.rRho = norm_inf(resR);
    r.rU = norm_inf(resU);
    return r;
}

SignResolution resolve_envelope_sign(const Params& p, SolitonSpec s,
                                     const SpectralGrid& g, double t, double tol) {
    SignResolution res;
    const double inf = std::numeric_limits<double>::infinity();
    res.plus = {inf, inf, inf};
    res.minus = {inf, inf, inf};

    for (EnvelopeSign sign : {EnvelopeSign::Plus, EnvelopeSign::Minus}) {
        s.sign = sign;
        try {
            const ResidualNorms rn = pde_residual(p, soliton_candidate(p, s), g, t);
            (sign == EnvelopeSign::Plus ? res.plus : res.minus) = rn;
        } catch (const std::domain_error&) {
            // amplitude imaginary under this sign: inadmissible, stays +inf
        }
    }
    if (res.plus.max() <= tol && res.plus.max() <= res.minus.max())
        res.sign = EnvelopeSign::Plus;
    else if (res.minus.max() <= tol)
        res.sign = EnvelopeSign::Minus;
    return res;
}

CollisionSetup collision_setup(CollisionId id) {
    CollisionSetup cs;
    cs.right.eta = cs.left.eta = 1.0;
    cs.right.d0 = cs.left.d0 = 0.0;
    switch (id) {
    case CollisionId::I:
        cs.params = make_params(1.0, 2.0, 0.2, 75.0);
        cs.right.c = 8.0;
        cs.left.c = -8.0;
        cs.right.x0 = 8.0;
        cs.left.x0 = -8.0;
        cs.a = -20.0;
        cs.b = 20.0;
        cs.T = 2.0;
        break;
    case CollisionId::II:
        cs.params = make_params(1.0, 3.0, 0.2, 12.0);
        cs.right.c = 1.5;
        cs.left.c = -1.5;
        cs.right.x0 = 9.0;
        cs.left.x0 = -9.0;
        cs.a = -24.0;
        cs.b = 24.0;
        cs.T = 12.0;
        break;
    case CollisionId::III:
        cs.params = make_params(1.0, 1.0, 0.5, 3.0);
        cs.right.c = 0.0;
        cs.left.c = -0.5;
        cs.right.x0 = -8.0;
        cs.left.x0 = -26.0;
        cs.a = -70.0;
        cs.b = 70.0;
        cs.T = 60.0;
        break;
    }
    return cs;
}

FieldState initial_collision(const CollisionSetup& cs, const SpectralGrid& g) {
    FieldState st;
    st.t = 0.0;
    st.B.resize(g.n);
    st.rho.resize(g.n);
    st.u.resize(g.n);
    st.phi.resize(g.n);
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x[j];
        st.B[j] = soliton_B(cs.params, cs.right, x, 0.0) +
                  soliton_B(cs.params, cs.left, x, 0.0);
        st.rho[j] = soliton_rho(cs.params, cs.right, x, 0.0) +
                    soliton_rho(cs.params, cs.left, x, 0.0);
        st.u[j] = soliton_u(cs.params, cs.right, x, 0.0) +
                  soliton_u(cs.params, cs.left, x, 0.0);
        st.phi[j] = std::norm(st.B[j]);
    }
    return st;
}

} // namespace zr
