#ifndef ZR_INTEGRATOR_HPP
#define ZR_INTEGRATOR_HPP

#include "zr/model.hpp"
#include "zr/spectral.hpp"
#include "zr/tableau.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace zr {

/// Stage slopes of one step: k1 drives B, k2 drives rho, k3 drives u, k4
/// drives the auxiliary phi.  At a converged solution
/// k4_i = 2 Re(conj(B_ni) k1_i) pointwise, with B_ni the stage value
/// reconstructed from k1.
struct StageSlopes {
    std::vector<CVec> k1;
    std::vector<RVec> k2;
    std::vector<RVec> k3;
    std::vector<RVec> k4;
};

struct IterationReport {
    int iterations = 0;
    double finalResidual = 0.0;
    bool converged = false;
};

/// Initial guess for the stage-slope iteration.  State seeds every slope with
/// the corresponding field; Zero seeds with zeros; EulerPredictor seeds with
/// one explicit evaluation of the right-hand side at the step's start.
enum class InitialGuess { State, Zero, EulerPredictor };

struct SolverOptions {
    double tol = 1e-14;   // infinity-norm stall threshold between sweeps
    int maxIter = 30;     // iteration cap
    InitialGuess guess = InitialGuess::State;
};

/// Implicit Runge-Kutta stage solver with the per-Fourier-mode linear part
/// factored once at construction: for each mode j an s-by-s complex block
/// I - i tau omega sym2_j A for the envelope slopes and a 2s-by-2s block
/// [[I - nu tau sym1_j A, tau sym1_j A], [beta tau sym1_j A, I - nu tau sym1_j A]]
/// for the stacked acoustic slopes.  Each fixed-point sweep solves the linear
/// part exactly and lags only the nonlinear products.
class StageSolver {
public:
    /// Throws std::invalid_argument for zero/non-finite tau or a grid/tableau
    /// mismatch, std::runtime_error if any per-mode block is singular (the
    /// message names the mode index and tau).
    StageSolver(const Params& p, const SpectralGrid& g, const Tableau& t,
                double tau, SolverOptions opts = {});

    const Params& params() const { return params_; }
    const SpectralGrid& grid() const { return grid_; }
    const Tableau& tableau() const { return tableau_; }
    double tau() const { return tau_; }
    const SolverOptions& options() const { return opts_; }

    /// Fixed-point solve of the stage equations.  Stops when the largest
    /// infinity-norm change of any k1/k2/k3 slope between sweeps drops below
    /// tol (k4 excluded: it is recomputed from k1) or after maxIter sweeps.
    /// On return k4 is evaluated exactly from the final k1, which is what
    /// keeps the auxiliary update consistent with |B|^2 to round-off.
    /// Throws std::runtime_error if the iteration produces non-finite values.
    StageSlopes solve_stages(const FieldState& st, IterationReport& report) const;

private:
    Params params_;
    SpectralGrid grid_;
    Tableau tableau_;
    double tau_;
    SolverOptions opts_;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> envLU_; // n blocks, s x s
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> acLU_;  // n blocks, 2s x 2s
};

/// One step of length solver.tau() from st; updates every field with the
/// b-weighted slopes and advances t by tau.  Throws std::runtime_error if the
/// result contains non-finite values.  A non-converged iteration is reported
/// through *report (if given); the caller decides whether that aborts.
FieldState step(const StageSolver& solver, const FieldState& st,
                IterationReport* report = nullptr);

/// One step of the Crank-Nicolson finite-point comparator: midpoint averages
/// in every linear term, the coupling evaluated with (|B_new|^2+|B_old|^2)/2,
/// iterated to the same stall tolerance.  phi is not evolved; the returned
/// state carries phi = |B_new|^2.  Independent of StageSolver (scalar per-mode
/// algebra, state iterates instead of slope iterates) so agreement between
/// the two is a meaningful cross-check.
FieldState cn_fp_step(const Params& p, const SpectralGrid& g, const FieldState& st,
                      double tau, SolverOptions opts = {},
                      IterationReport* report = nullptr);

enum class NonconvergencePolicy { Abort, Warn };

struct IntegrateOptions {
    double T = 0.0;       // horizon, must equal steps*tau to 1e-12*max(1,|T|)
    long cadence = 1;     // sample every cadence-th step (plus step 0 and the last)
    NonconvergencePolicy policy = NonconvergencePolicy::Warn;
};

struct IntegrateStats {
    long steps = 0;
    long totalIterations = 0;
    int maxIterations = 0;
    long nonconvergedSteps = 0;
    double maxFinalResidual = 0.0; // over non-converged steps only
};

using SampleFn = std::function<void(const FieldState&)>;

/// March st0 to time st0.t + T, invoking on_sample at step 0, every cadence-th
/// step and the final step.  Times are recomputed as t0 + i*tau (not
/// accumulated).  Throws std::invalid_argument when T/tau is not an integer
/// to 1e-12*max(1,|T|), std::runtime_error on NaN/Inf or - under
/// policy Abort - on a non-converged stage solve.
FieldState integrate(const StageSolver& solver, FieldState st0,
                     const IntegrateOptions& opts, const SampleFn& on_sample = {},
                     IntegrateStats* stats = nullptr);

} // namespace zr

#endif
