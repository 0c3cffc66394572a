// Command-line driver for the coupled envelope/acoustic solver.
//
// Subcommands:
//   run             propagate a single solitary wave, record invariants
//   converge-space  mesh-refinement error ladder at fixed small time step
//   converge-time   time-step refinement ladder on a fine mesh
//   collide         counter-propagating two-wave experiments (cases I-III)
//   selftest        fast internal consistency suites
//
// Options may come from a flat key=value config file (--config); explicit
// flags override file values, which override built-in defaults.

#include "zr/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

struct CliValues {
    std::string config, scheme, n, tau, T, tol, maxIter, policy, out, cadence,
        caseId;
    bool emitPlots = false;
};

void add_common(CLI::App* sub, CliValues& v) {
    sub->add_option("--config", v.config, "flat key=value config file");
    sub->add_option("--scheme", v.scheme,
                    "fprk1|fprk2|fprk3|cnfp|euler-implicit");
    sub->add_option("--N", v.n, "number of grid points (even)");
    sub->add_option("--tau", v.tau, "time step (base step of the ladder for "
                                    "converge-time)");
    sub->add_option("--T", v.T, "final time");
    sub->add_option("--tol", v.tol, "fixed-point stopping tolerance");
    sub->add_option("--max-iter", v.maxIter, "fixed-point iteration cap");
    sub->add_option("--policy", v.policy, "abort|warn when an implicit solve "
                                          "hits the iteration cap");
    sub->add_option("--out", v.out, "output directory");
    sub->add_option("--cadence", v.cadence,
                    "record invariants every this many steps");
    sub->add_option("--case", v.caseId, "collision case: I, II or III");
    sub->add_flag("--emit-plots", v.emitPlots,
                  "write gnuplot scripts next to the CSV outputs");
}

zr::RunConfig resolve(const CliValues& v) {
    zr::RunConfig cfg;
    if (!v.config.empty()) cfg = zr::load_config_file(v.config);
    if (!v.scheme.empty()) zr::apply_override(cfg, "scheme", v.scheme);
    if (!v.n.empty()) zr::apply_override(cfg, "N", v.n);
    if (!v.tau.empty()) zr::apply_override(cfg, "tau", v.tau);
    if (!v.T.empty()) zr::apply_override(cfg, "T", v.T);
    if (!v.tol.empty()) zr::apply_override(cfg, "tol", v.tol);
    if (!v.maxIter.empty()) zr::apply_override(cfg, "max_iter", v.maxIter);
    if (!v.policy.empty()) zr::apply_override(cfg, "policy", v.policy);
    if (!v.out.empty()) zr::apply_override(cfg, "out", v.out);
    if (!v.cadence.empty()) zr::apply_override(cfg, "cadence", v.cadence);
    if (!v.caseId.empty()) zr::apply_override(cfg, "case", v.caseId);
    if (v.emitPlots) zr::apply_override(cfg, "emit_plots", "true");
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-preserving spectral solver for a coupled "
                 "envelope/acoustic wave system"};
    app.require_subcommand(1);

    CliValues v;
    auto* run = app.add_subcommand(
        "run", "propagate a single solitary wave and record invariants");
    auto* cspace = app.add_subcommand(
        "converge-space", "mesh-refinement error ladder at fixed time step");
    auto* ctime = app.add_subcommand(
        "converge-time", "time-step refinement error ladder on a fine mesh");
    auto* collide = app.add_subcommand(
        "collide", "counter-propagating two-wave experiment");
    auto* selftest =
        app.add_subcommand("selftest", "fast internal consistency suites");
    for (auto* sub : {run, cspace, ctime, collide, selftest})
        add_common(sub, v);

    CLI11_PARSE(app, argc, argv);

    try {
        const zr::RunConfig cfg = resolve(v);
        if (run->parsed()) return zr::cmd_run(cfg);
        if (cspace->parsed()) return zr::cmd_converge_space(cfg);
        if (ctime->parsed()) return zr::cmd_converge_time(cfg);
        if (collide->parsed()) return zr::cmd_collide(cfg);
        if (selftest->parsed()) return zr::cmd_selftest(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
