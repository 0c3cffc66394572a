#include "zr/integrator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace zr {

namespace {

bool finite(const CVec& v) {
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

bool finite(const RVec& v) {
    for (double r : v)
        if (!std::isfinite(r)) return false;
    return true;
}

// max_i ||new_i - old_i||_inf over a slope family.
double slope_change(const std::vector<CVec>& a, const std::vector<CVec>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[i].size(); ++j)
            m = std::max(m, std::abs(a[i][j] - b[i][j]));
    return m;
}

double slope_change(const std::vector<RVec>& a, const std::vector<RVec>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[i].size(); ++j)
            m = std::max(m, std::abs(a[i][j] - b[i][j]));
    return m;
}

} // namespace

StageSolver::StageSolver(const Params& p, const SpectralGrid& g, const Tableau& t,
                         double tau, SolverOptions opts)
    : params_(p), grid_(g), tableau_(t), tau_(tau), opts_(opts) {
    if (tau == 0.0 || !std::isfinite(tau))
        throw std::invalid_argument("StageSolver: tau must be nonzero and finite");
    if (t.s < 1 || static_cast<int>(t.a.size()) != t.s * t.s)
        throw std::invalid_argument("StageSolver: malformed tableau");
    if (opts.maxIter < 1 || !(opts.tol > 0.0))
        throw std::invalid_argument("StageSolver: need maxIter >= 1 and tol > 0");

    const int s = t.s;
    const int n = g.n;
    Eigen::MatrixXd A(s, s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) A(i, j) = t.A(i, j);

    envLU_.reserve(n);
    acLU_.reserve(n);
    Eigen::MatrixXcd env(s, s), ac(2 * s, 2 * s);
    const Eigen::MatrixXcd Is = Eigen::MatrixXcd::Identity(s, s);
    for (int j = 0; j < n; ++j) {
        const Complex l1 = g.sym1[j];
        const double l2 = g.sym2[j];

        env = Is - Complex(0.0, 1.0) * tau * p.omega * l2 * A;
        ac.topLeftCorner(s, s) = Is - p.nu * tau * l1 * A;
        ac.topRightCorner(s, s) = tau * l1 * A;
        ac.bottomLeftCorner(s, s) = p.beta * tau * l1 * A;
        ac.bottomRightCorner(s, s) = Is - p.nu * tau * l1 * A;

        envLU_.emplace_back(env);
        acLU_.emplace_back(ac);

        const double envScale = env.cwiseAbs().maxCoeff();
        const double acScale = ac.cwiseAbs().maxCoeff();
        if (envLU_.back().matrixLU().diagonal().cwiseAbs().minCoeff() <=
            1e-14 * envScale)
            throw std::runtime_error("StageSolver: singular envelope block at mode " +
                                     std::to_string(j) + ", tau = " + std::to_string(tau));
        if (acLU_.back().matrixLU().diagonal().cwiseAbs().minCoeff() <= 1e-14 * acScale)
            throw std::runtime_error("StageSolver: singular acoustic block at mode " +
                                     std::to_string(j) + ", tau = " + std::to_string(tau));
    }
}

StageSlopes StageSolver::solve_stages(const FieldState& st,
                                      IterationReport& report) const {
    const int s = tableau_.s;
    const int n = grid_.n;
    const Params& p = params_;
    const double tau = tau_;

    // Per-step precomputations: the linear envelope drive i omega sym2 B_hat
    // and the state part of the acoustic fluxes.
    const CVec Bhat = fft_forward(grid_, st.B);
    CVec envDrive(n);
    for (int j = 0; j < n; ++j)
        envDrive[j] = Complex(0.0, p.omega * grid_.sym2[j]) * Bhat[j];
    RVec s1(n), s2(n);
    for (int j = 0; j < n; ++j) {
        s1[j] = -st.u[j] + p.nu * st.rho[j];
        s2[j] = -p.beta * st.rho[j] + p.nu * st.u[j];
    }
    const CVec S1hat = fft_forward(grid_, s1);
    const CVec S2hat = fft_forward(grid_, s2);

    StageSlopes k;
    k.k1.assign(s, CVec(n, Complex(0.0, 0.0)));
    k.k2.assign(s, RVec(n, 0.0));
    k.k3.assign(s, RVec(n, 0.0));
    k.k4.assign(s, RVec(n, 0.0));
    switch (opts_.guess) {
    case InitialGuess::Zero:
        break;
    case InitialGuess::State:
        for (int i = 0; i < s; ++i) {
            k.k1[i] = st.B;
            k.k2[i] = st.rho;
            k.k3[i] = st.u;
        }
        break;
    case InitialGuess::EulerPredictor: {
        CVec k1e(n);
        const CVec Bxx = apply_d2(grid_, st.B);
        for (int j = 0; j < n; ++j) {
            const double coef = st.u[j] - 0.5 * p.nu * st.rho[j] + p.q * st.phi[j];
            k1e[j] = Complex(0.0, 1.0) * (p.omega * Bxx[j] - p.kappa * coef * st.B[j]);
        }
        RVec f2(n), f3(n);
        for (int j = 0; j < n; ++j) {
            f2[j] = s1[j] - p.kappa * st.phi[j];
            f3[j] = s2[j] + 0.5 * p.kappa * p.nu * st.phi[j];
        }
        const RVec k2e = apply_d1(grid_, f2);
        const RVec k3e = apply_d1(grid_, f3);
        for (int i = 0; i < s; ++i) {
            k.k1[i] = k1e;
            k.k2[i] = k2e;
            k.k3[i] = k3e;
        }
        break;
    }
    }

    std::vector<CVec> Bn(s, CVec(n)), G(s, CVec(n)), phiHat(s);
    std::vector<RVec> rhoN(s, RVec(n)), uN(s, RVec(n)), phiN(s, RVec(n));
    std::vector<CVec> newK1(s, CVec(n));
    std::vector<RVec> newK2(s, RVec(n)), newK3(s, RVec(n));
    Eigen::VectorXcd rhsEnv(s), solEnv(s), rhsAc(2 * s), solAc(2 * s);

    report = IterationReport{};
    double prevRes = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= opts_.maxIter; ++sweep) {
        // Stage values from the current slopes.
        for (int i = 0; i < s; ++i) {
            for (int j = 0; j < n; ++j) {
                Complex accB(0.0, 0.0);
                double accR = 0.0, accU = 0.0;
                for (int m = 0; m < s; ++m) {
                    const double a = tableau_.A(i, m);
                    accB += a * k.k1[m][j];
                    accR += a * k.k2[m][j];
                    accU += a * k.k3[m][j];
                }
                Bn[i][j] = st.B[j] + tau * accB;
                rhoN[i][j] = st.rho[j] + tau * accR;
                uN[i][j] = st.u[j] + tau * accU;
            }
        }
        // Auxiliary slopes and stage values from the current k1.
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < n; ++j)
                k.k4[i][j] = 2.0 * (std::conj(Bn[i][j]) * k.k1[i][j]).real();
        for (int i = 0; i < s; ++i) {
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int m = 0; m < s; ++m) acc += tableau_.A(i, m) * k.k4[m][j];
                phiN[i][j] = st.phi[j] + tau * acc;
            }
        }

        // Envelope solve: lag the nonlinear product, keep the dispersive part
        // exact per mode.
        for (int i = 0; i < s; ++i) {
            for (int j = 0; j < n; ++j) {
                const double coef = uN[i][j] - 0.5 * p.nu * rhoN[i][j] + p.q * phiN[i][j];
                G[i][j] = Complex(0.0, -p.kappa * coef) * Bn[i][j];
            }
            G[i] = fft_forward(grid_, G[i]);
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < s; ++i) rhsEnv(i) = envDrive[j] + G[i][j];
            solEnv.noalias() = envLU_[j].solve(rhsEnv);
            for (int i = 0; i < s; ++i) G[i][j] = solEnv(i);
        }
        for (int i = 0; i < s; ++i) newK1[i] = fft_inverse(grid_, G[i]);

        // Acoustic solve, stacked (k2, k3) per mode.
        for (int i = 0; i < s; ++i) phiHat[i] = fft_forward(grid_, phiN[i]);
        for (int j = 0; j < n; ++j) {
            const Complex l1 = grid_.sym1[j];
            for (int i = 0; i < s; ++i) {
                rhsAc(i) = l1 * (S1hat[j] - p.kappa * phiHat[i][j]);
                rhsAc(s + i) = l1 * (S2hat[j] + 0.5 * p.kappa * p.nu * phiHat[i][j]);
            }
            solAc.noalias() = acLU_[j].solve(rhsAc);
            for (int i = 0; i < s; ++i) {
                phiHat[i][j] = solAc(i); // reuse buffers for the transformed slopes
                G[i][j] = solAc(s + i);
            }
        }
        for (int i = 0; i < s; ++i) {
            newK2[i] = fft_inverse_real(grid_, phiHat[i]);
            newK3[i] = fft_inverse_real(grid_, G[i]);
        }

        const double res = std::max(slope_change(newK1, k.k1),
                                    std::max(slope_change(newK2, k.k2),
                                             slope_change(newK3, k.k3)));
        k.k1 = newK1;
        k.k2 = newK2;
        k.k3 = newK3;
        report.iterations = sweep;
        report.finalResidual = res;
        if (!std::isfinite(res))
            throw std::runtime_error("StageSolver: iteration produced non-finite values");
        if (res < opts_.tol) {
            report.converged = true;
            break;
        }
        // Round-off floor: the sweep stopped making progress while already
        // within two decades of the tolerance, so further sweeps only churn
        // the last bits. Accept instead of burning the remaining budget.
        if (res >= prevRes && res <= 100.0 * opts_.tol) {
            report.converged = true;
            break;
        }
        prevRes = res;
    }

    // Final auxiliary slopes from the final k1: this identity (not the stage
    // equation residual) is what the phi update telescopes through, so it is
    // evaluated once more after the last sweep.
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < n; ++j) {
            Complex accB(0.0, 0.0);
            for (int m = 0; m < s; ++m) accB += tableau_.A(i, m) * k.k1[m][j];
            const Complex bni = st.B[j] + tau * accB;
            k.k4[i][j] = 2.0 * (std::conj(bni) * k.k1[i][j]).real();
        }
    }
    return k;
}

FieldState step(const StageSolver& solver, const FieldState& st,
                IterationReport* report) {
    IterationReport local;
    const StageSlopes k = solver.solve_stages(st, local);
    if (report) *report = local;

    const Tableau& t = solver.tableau();
    const double tau = solver.tau();
    FieldState out = st;
    out.t = st.t + tau;
    for (int i = 0; i < t.s; ++i) {
        const double w = tau * t.b[i];
        for (size_t j = 0; j < out.B.size(); ++j) {
            out.B[j] += w * k.k1[i][j];
            out.rho[j] += w * k.k2[i][j];
            out.u[j] += w * k.k3[i][j];
            out.phi[j] += w * k.k4[i][j];
        }
    }
    if (!finite(out.B) || !finite(out.rho) || !finite(out.u) || !finite(out.phi))
        throw std::runtime_error("step: non-finite field values at t = " +
                                 std::to_string(out.t));
    return out;
}

FieldState cn_fp_step(const Params& p, const SpectralGrid& g, const FieldState& st,
                      double tau, SolverOptions opts, IterationReport* report) {
    if (tau == 0.0 || !std::isfinite(tau))
        throw std::invalid_argument("cn_fp_step: tau must be nonzero and finite");
    const int n = g.n;
    const CVec BhatOld = fft_forward(g, st.B);
    const CVec rhoHatOld = fft_forward(g, st.rho);
    const CVec uHatOld = fft_forward(g, st.u);
    RVec absB2old(n);
    for (int j = 0; j < n; ++j) absB2old[j] = std::norm(st.B[j]);

    CVec Bnew = st.B;
    RVec rhoNew = st.rho, uNew = st.u;
    IterationReport rep;

    CVec prod(n), BnewHat(n), rhoNewHat(n), uNewHat(n);
    RVec Pmid(n);
    double prevRes = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= opts.maxIter; ++sweep) {
        for (int j = 0; j < n; ++j)
            Pmid[j] = 0.5 * (absB2old[j] + std::norm(Bnew[j]));
        for (int j = 0; j < n; ++j) {
            const double coef = 0.5 * (st.u[j] + uNew[j]) -
                                0.25 * p.nu * (st.rho[j] + rhoNew[j]) +
                                p.q * Pmid[j];
            prod[j] = p.kappa * coef * 0.5 * (st.B[j] + Bnew[j]);
        }
        const CVec prodHat = fft_forward(g, prod);
        const CVec PmidHat = fft_forward(g, Pmid);

        for (int j = 0; j < n; ++j) {
            const Complex iOverTau(0.0, 1.0 / tau);
            const double halfOmegaL2 = 0.5 * p.omega * g.sym2[j];
            BnewHat[j] = ((iOverTau - halfOmegaL2) * BhatOld[j] + prodHat[j]) /
                         (iOverTau + halfOmegaL2);

            const Complex l1 = g.sym1[j];
            const Complex m11 = 1.0 - 0.5 * p.nu * tau * l1;
            const Complex m12 = 0.5 * tau * l1;
            const Complex m21 = 0.5 * p.beta * tau * l1;
            const Complex det = m11 * m11 - m12 * m21;
            if (std::abs(det) < 1e-300)
                throw std::runtime_error("cn_fp_step: singular acoustic block at mode " +
                                         std::to_string(j));
            const Complex r1 = rhoHatOld[j] -
                               0.5 * tau * l1 * (uHatOld[j] - p.nu * rhoHatOld[j]) -
                               tau * p.kappa * l1 * PmidHat[j];
            const Complex r2 = uHatOld[j] -
                               0.5 * tau * l1 * (p.beta * rhoHatOld[j] - p.nu * uHatOld[j]) +
                               0.5 * tau * p.kappa * p.nu * l1 * PmidHat[j];
            rhoNewHat[j] = (m11 * r1 - m12 * r2) / det;
            uNewHat[j] = (m11 * r2 - m21 * r1) / det;
        }
        const CVec BnewNext = fft_inverse(g, BnewHat);
        const RVec rhoNext = fft_inverse_real(g, rhoNewHat);
        const RVec uNext = fft_inverse_real(g, uNewHat);

        double res = 0.0;
        for (int j = 0; j < n; ++j) {
            res = std::max(res, std::abs(BnewNext[j] - Bnew[j]));
            res = std::max(res, std::abs(rhoNext[j] - rhoNew[j]));
            res = std::max(res, std::abs(uNext[j] - uNew[j]));
        }
        Bnew = BnewNext;
        rhoNew = rhoNext;
        uNew = uNext;
        rep.iterations = sweep;
        rep.finalResidual = res;
        if (!std::isfinite(res))
            throw std::runtime_error("cn_fp_step: iteration produced non-finite values");
        if (res < opts.tol) {
            rep.converged = true;
            break;
        }
        if (res >= prevRes && res <= 100.0 * opts.tol) {
            rep.converged = true; // progress stalled at the round-off floor
            break;
        }
        prevRes = res;
    }
    if (report) *report = rep;

    FieldState out;
    out.t = st.t + tau;
    out.B = std::move(Bnew);
    out.rho = std::move(rhoNew);
    out.u = std::move(uNew);
    out.phi.resize(n);
    for (int j = 0; j < n; ++j) out.phi[j] = std::norm(out.B[j]);
    if (!finite(out.B) || !finite(out.rho) || !finite(out.u))
        throw std::runtime_error("cn_fp_step: non-finite field values at t = " +
                                 std::to_string(out.t));
    return out;
}

FieldState integrate(const StageSolver& solver, FieldState st0,
                     const IntegrateOptions& opts, const SampleFn& on_sample,
                     IntegrateStats* stats) {
    const double tau = solver.tau();
    const double ratio = opts.T / tau;
    const long nsteps = std::lround(ratio);
    if (nsteps < 0 ||
        std::abs(nsteps * tau - opts.T) > 1e-12 * std::max(1.0, std::abs(opts.T)))
        throw std::invalid_argument(
            "integrate: T must be a nonnegative integer multiple of tau");
    if (opts.cadence < 1) throw std::invalid_argument("integrate: cadence must be >= 1");

    const double t0 = st0.t;
    IntegrateStats localStats;
    if (on_sample) on_sample(st0);
    for (long i = 1; i <= nsteps; ++i) {
        IterationReport rep;
        st0 = step(solver, st0, &rep);
        st0.t = t0 + static_cast<double>(i) * tau;
        localStats.steps = i;
        localStats.totalIterations += rep.iterations;
        localStats.maxIterations = std::max(localStats.maxIterations, rep.iterations);
        if (!rep.converged) {
            ++localStats.nonconvergedSteps;
            localStats.maxFinalResidual =
                std::max(localStats.maxFinalResidual, rep.finalResidual);
            if (opts.policy == NonconvergencePolicy::Abort)
                throw std::runtime_error(
                    "integrate: stage iteration did not converge at t = " +
                    std::to_string(st0.t) + " (residual " +
                    std::to_string(rep.finalResidual) + ")");
        }
        if (on_sample && (i % opts.cadence == 0 || i == nsteps)) on_sample(st0);
    }
    if (stats) *stats = localStats;
    return st0;
}

} // namespace zr
