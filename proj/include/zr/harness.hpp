#ifndef ZR_HARNESS_HPP
#define ZR_HARNESS_HPP

#include "zr/integrator.hpp"
#include "zr/invariants.hpp"
#include "zr/model.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace zr {

/// Resolved experiment configuration.  Numeric "auto" sentinels (NaN for
/// a/b/T, 0 for N/tau) let each command substitute its protocol default;
/// run.json always records the resolved values.
struct RunConfig {
    // physics
    double omega = 1.0;
    double kappa = 1.0;
    double nu = 1.0;
    double beta = 7.0;
    // solitary wave
    double c = 1.0;
    double eta = 1.0;
    double x0 = 2.0;
    double d0 = 0.0;
    // domain and discretization (auto sentinels)
    double a = std::numeric_limits<double>::quiet_NaN();
    double b = std::numeric_limits<double>::quiet_NaN();
    int n = 0;
    double tau = 0.0;
    double T = std::numeric_limits<double>::quiet_NaN();
    // scheme and iteration controls
    std::string scheme = "fprk2"; // fprk1|fprk2|fprk3|cnfp|euler-implicit
    double tol = 1e-14;
    int maxIter = 30;
    std::string policy = "warn"; // abort|warn
    std::string guess = "state"; // state|zero|predictor
    // output controls
    long cadence = 10;
    long snapshotCadence = 0; // 0: first and last sample only
    std::string out = "out";
    std::string collisionCase = "I"; // I|II|III
    bool emitPlots = false;
};

/// Parse a flat key=value config file ('#' comments, blank lines ignored).
/// Unknown keys or unparsable values throw std::invalid_argument.
RunConfig load_config_file(const std::string& path, RunConfig base = {});

/// Apply one key=value override (the CLI layer routes flags through this, so
/// flag > file > default precedence holds by application order).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

/// Scientific notation with 17 significant digits, C-locale decimal point.
std::string format_sci(double v);

/// Observed order of accuracy between two successive ladder errors under
/// refinement by a factor of two: log2(coarse / fine).
double refinement_rate(double coarseError, double fineError);

/// Tableau for a scheme name ("fprk1|fprk2|fprk3|euler-implicit|euler-explicit|
/// rk4"); throws std::invalid_argument for "cnfp" (not stage-based) or unknown
/// names.
Tableau scheme_tableau(const std::string& scheme);

/// Write diagnostics rows with drift columns relative to the first record.
void write_invariants_csv(const std::string& path,
                          const std::vector<InvariantRecord>& records);

/// Append one sampled state to a snapshot table (t,x,re_B,im_B,abs_B,rho,u,phi).
void write_snapshot_rows(std::ostream& os, const SpectralGrid& g,
                         const FieldState& st);

/// Experiment drivers; each writes its outputs under cfg.out and returns a
/// process exit code.
int cmd_run(const RunConfig& cfg);
int cmd_converge_space(const RunConfig& cfg);
int cmd_converge_time(const RunConfig& cfg);
int cmd_collide(const RunConfig& cfg);

/// Desk-scale diagnostic suite (grids <= 64 nodes, <= 200 steps): tableau
/// defects, transform-vs-dense equivalence, stage-solver-vs-Newton agreement,
/// conservation smoke run, scheme equivalence, envelope-sign resolution, time
/// symmetry.  Prints one PASS/FAIL line per suite; returns the number of
/// failures.  gaussPerturbation is an internal hook that corrupts the 2-stage
/// tableau before the defect suite, used to verify the suite actually fails.
int cmd_selftest(const RunConfig& cfg, double gaussPerturbation = 0.0);

} // namespace zr

#endif
