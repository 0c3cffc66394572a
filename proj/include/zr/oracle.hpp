#ifndef ZR_ORACLE_HPP
#define ZR_ORACLE_HPP

#include "zr/integrator.hpp"
#include "zr/model.hpp"
#include "zr/spectral.hpp"
#include "zr/tableau.hpp"

#include <Eigen/Dense>

#include <functional>

namespace zr {

/// Dense collocation differentiation matrix of the given order (1 or 2),
/// assembled entry-by-entry from the symbol sum
///   (D_m)_{j,k} = (1/n) sum_{l=-n/2}^{n/2} (1/a_l) (i l mu)^m exp(i l mu (x_j - x_k))
/// with a_l = 2 at |l| = n/2 and 1 otherwise.  This reproduces the
/// transform-based operators without any FFT, so it serves as their oracle.
Eigen::MatrixXd dense_diff_matrix(const SpectralGrid& g, int order);

/// Apply a dense operator to complex/real grid vectors.
CVec apply_dense(const Eigen::MatrixXd& D, const CVec& v);
RVec apply_dense(const Eigen::MatrixXd& D, const RVec& v);

/// Adaptive Gauss-Kronrod quadrature of f over [a,b] to the given relative
/// tolerance.
double quadrature(const std::function<double(double)>& f, double a, double b,
                  double tol = 1e-12);

/// Independent stage-equation solver: damped Newton on the 4sN real unknowns
/// (Re k1, Im k1, k2, k3), with k4 eliminated through its defining identity
/// and every spatial operator applied as a dense matrix.  No FFT, no
/// per-mode factorization, no fixed-point structure is shared with
/// StageSolver, so agreement between the two pins the production path.
/// Intended for small grids (n <= 32); throws std::runtime_error if the
/// residual does not reach resTol.
StageSlopes newton_stage_solve(const Params& p, const SpectralGrid& g,
                               const Tableau& t, double tau, const FieldState& st,
                               double resTol = 1e-13, int maxIter = 60);

} // namespace zr

#endif
