#include "zr/harness.hpp"

#include "zr/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace zr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size())
        throw std::invalid_argument("config: bad numeric value for '" + key +
                                    "': " + v);
    return x;
}

long parse_long(const std::string& key, const std::string& v) {
    size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size())
        throw std::invalid_argument("config: bad integer value for '" + key +
                                    "': " + v);
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean value for '" + key + "': " + v);
}

} // namespace

void apply_override(RunConfig& cfg, const std::string& rawKey,
                    const std::string& rawValue) {
    std::string key = trim(rawKey);
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = trim(rawValue);

    if (key == "omega") cfg.omega = parse_double(key, value);
    else if (key == "kappa") cfg.kappa = parse_double(key, value);
    else if (key == "nu") cfg.nu = parse_double(key, value);
    else if (key == "beta") cfg.beta = parse_double(key, value);
    else if (key == "c") cfg.c = parse_double(key, value);
    else if (key == "eta") cfg.eta = parse_double(key, value);
    else if (key == "x0") cfg.x0 = parse_double(key, value);
    else if (key == "d0") cfg.d0 = parse_double(key, value);
    else if (key == "a") cfg.a = parse_double(key, value);
    else if (key == "b") cfg.b = parse_double(key, value);
    else if (key == "N") cfg.n = static_cast<int>(parse_long(key, value));
    else if (key == "tau") cfg.tau = parse_double(key, value);
    else if (key == "T") cfg.T = parse_double(key, value);
    else if (key == "scheme") cfg.scheme = value;
    else if (key == "tol") cfg.tol = parse_double(key, value);
    else if (key == "max_iter") cfg.maxIter = static_cast<int>(parse_long(key, value));
    else if (key == "policy") cfg.policy = value;
    else if (key == "guess") cfg.guess = value;
    else if (key == "cadence") cfg.cadence = parse_long(key, value);
    else if (key == "snapshot_cadence") cfg.snapshotCadence = parse_long(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "case") cfg.collisionCase = value;
    else if (key == "emit_plots") cfg.emitPlots = parse_bool(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: " + path + ":" +
                                        std::to_string(lineno) + ": expected key=value");
        apply_override(base, line.substr(0, eq), line.substr(eq + 1));
    }
    return base;
}

std::string format_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

double refinement_rate(double coarseError, double fineError) {
    return std::log2(coarseError / fineError);
}

Tableau scheme_tableau(const std::string& scheme) {
    if (scheme == "fprk1") return gauss_tableau(1);
    if (scheme == "fprk2") return gauss_tableau(2);
    if (scheme == "fprk3") return gauss_tableau(3);
    if (scheme == "euler-implicit") return implicit_euler_tableau();
    if (scheme == "euler-explicit") return explicit_euler_tableau();
    if (scheme == "rk4") return rk4_tableau();
    throw std::invalid_argument("scheme '" + scheme + "' has no tableau");
}

// ---------------------------------------------------------------------------
// Shared command plumbing

namespace {

NonconvergencePolicy parse_policy(const std::string& s) {
    if (s == "abort") return NonconvergencePolicy::Abort;
    if (s == "warn") return NonconvergencePolicy::Warn;
    throw std::invalid_argument("policy must be 'abort' or 'warn', got '" + s + "'");
}

InitialGuess parse_guess(const std::string& s) {
    if (s == "state") return InitialGuess::State;
    if (s == "zero") return InitialGuess::Zero;
    if (s == "predictor") return InitialGuess::EulerPredictor;
    throw std::invalid_argument("guess must be 'state', 'zero' or 'predictor'");
}

SolverOptions solver_options(const RunConfig& cfg) {
    SolverOptions o;
    o.tol = cfg.tol;
    o.maxIter = cfg.maxIter;
    o.guess = parse_guess(cfg.guess);
    return o;
}

struct PropagateResult {
    FieldState final;
    IntegrateStats stats;
    double wall_s = 0.0;
};

/// March any scheme (stage-based or cnfp) with the shared sampling semantics.
PropagateResult propagate_scheme(const Params& p, const SpectralGrid& g,
                                 const std::string& scheme, double tau, double T,
                                 const FieldState& st0, const SolverOptions& sopts,
                                 NonconvergencePolicy policy, long cadence,
                                 const SampleFn& on_sample) {
    PropagateResult r;
    const auto t0 = std::chrono::steady_clock::now();
    if (scheme == "cnfp") {
        const double ratio = T / tau;
        const long nsteps = std::lround(ratio);
        if (nsteps < 0 ||
            std::abs(nsteps * tau - T) > 1e-12 * std::max(1.0, std::abs(T)))
            throw std::invalid_argument(
                "propagate: T must be a nonnegative integer multiple of tau");
        if (cadence < 1) throw std::invalid_argument("propagate: cadence must be >= 1");
        FieldState st = st0;
        const double tStart = st.t;
        if (on_sample) on_sample(st);
        for (long i = 1; i <= nsteps; ++i) {
            IterationReport rep;
            st = cn_fp_step(p, g, st, tau, sopts, &rep);
            st.t = tStart + static_cast<double>(i) * tau;
            r.stats.steps = i;
            r.stats.totalIterations += rep.iterations;
            r.stats.maxIterations = std::max(r.stats.maxIterations, rep.iterations);
            if (!rep.converged) {
                ++r.stats.nonconvergedSteps;
                r.stats.maxFinalResidual =
                    std::max(r.stats.maxFinalResidual, rep.finalResidual);
                if (policy == NonconvergencePolicy::Abort)
                    throw std::runtime_error(
                        "propagate: iteration did not converge at t = " +
                        std::to_string(st.t));
            }
            if (on_sample && (i % cadence == 0 || i == nsteps)) on_sample(st);
        }
        r.final = std::move(st);
    } else {
        const StageSolver solver(p, g, scheme_tableau(scheme), tau, sopts);
        IntegrateOptions iopts;
        iopts.T = T;
        iopts.cadence = cadence;
        iopts.policy = policy;
        r.final = integrate(solver, st0, iopts, on_sample, &r.stats);
    }
    r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                   .count();
    return r;
}

/// Validation grid for the envelope-sign decision: a box of half-width
/// 32/sqrt(min(1,eta)) centered on the wave so the sech tails sit at
/// round-off, sampled finely enough that the residual reflects the formulas
/// rather than the sampling.
SpectralGrid validation_grid(const SolitonSpec& s) {
    const double halfWidth = 32.0 / std::sqrt(std::min(1.0, s.eta));
    const double center = -s.x0;
    return build_grid(center - halfWidth, center + halfWidth, 512);
}

std::optional<EnvelopeSign> admissible_sign(const Params& p, SolitonSpec s) {
    for (EnvelopeSign sign : {EnvelopeSign::Minus, EnvelopeSign::Plus}) {
        s.sign = sign;
        try {
            (void)soliton_amplitude(p, s);
            return sign;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

/// Resolve the sign convention for one wave; returns the resolution plus the
/// oracle label ("analytic:minus", "analytic:plus" or "self-reference").
std::pair<SignResolution, std::string> resolve_oracle(const Params& p,
                                                      const SolitonSpec& s) {
    const SignResolution res = resolve_envelope_sign(p, s, validation_grid(s));
    std::string label = "self-reference";
    if (res.sign)
        label = res.sign == EnvelopeSign::Minus ? "analytic:minus" : "analytic:plus";
    return {res, label};
}

ordered_json residual_json(const ResidualNorms& r) {
    return ordered_json{{"rB", r.rB}, {"rRho", r.rRho}, {"rU", r.rU}};
}

ordered_json config_json(const RunConfig& cfg) {
    ordered_json j;
    j["omega"] = cfg.omega;
    j["kappa"] = cfg.kappa;
    j["nu"] = cfg.nu;
    j["beta"] = cfg.beta;
    j["c"] = cfg.c;
    j["eta"] = cfg.eta;
    j["x0"] = cfg.x0;
    j["d0"] = cfg.d0;
    j["a"] = cfg.a;
    j["b"] = cfg.b;
    j["N"] = cfg.n;
    j["tau"] = cfg.tau;
    j["T"] = cfg.T;
    j["scheme"] = cfg.scheme;
    j["tol"] = cfg.tol;
    j["max_iter"] = cfg.maxIter;
    j["policy"] = cfg.policy;
    j["guess"] = cfg.guess;
    j["cadence"] = cfg.cadence;
    j["snapshot_cadence"] = cfg.snapshotCadence;
    j["out"] = cfg.out;
    j["case"] = cfg.collisionCase;
    j["emit_plots"] = cfg.emitPlots;
    return j;
}

ordered_json stats_json(const IntegrateStats& st) {
    ordered_json j;
    j["steps"] = st.steps;
    j["total_iterations"] = st.totalIterations;
    j["mean_iterations"] =
        st.steps > 0 ? static_cast<double>(st.totalIterations) / st.steps : 0.0;
    j["max_iterations"] = st.maxIterations;
    j["nonconverged_steps"] = st.nonconvergedSteps;
    j["max_final_residual"] = st.maxFinalResidual;
    return j;
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

void warn_nonconverged(const IntegrateStats& st) {
    if (st.nonconvergedSteps > 0)
        std::cerr << "warning: " << st.nonconvergedSteps
                  << " step(s) hit the iteration cap (worst residual "
                  << format_sci(st.maxFinalResidual) << ")\n";
}

const char* kInvariantsHeader =
    "t,mass,energyQ,hamiltonian,i1,i2,qav_residual,rel_drift_mass,"
    "rel_drift_energyQ,rel_drift_hamiltonian,rel_drift_i1,rel_drift_i2";

const char* kSnapshotsHeader = "t,x,re_B,im_B,abs_B,rho,u,phi";

const char* kLadderHeader = "scheme,oracle,N,h,tau,e_B,rate_B,e_rho,rate_rho,"
                            "e_u,rate_u,wall_s,mean_iters,nonconverged_steps";

void emit_invariants_plot(const fs::path& dir) {
    std::ofstream gp(dir / "plot_invariants.gp");
    gp << "set datafile separator \",\"\n"
          "set terminal pngcairo size 960,640\n"
          "set output \"invariants.png\"\n"
          "set logscale y\n"
          "set xlabel \"t\"\n"
          "set ylabel \"relative drift\"\n"
          "set format y \"%.0e\"\n"
          "plot \"invariants.csv\" every ::1 using 1:(($8>0)?$8:1e-18) with lines "
          "title \"mass\", \\\n"
          "     \"invariants.csv\" every ::1 using 1:(($9>0)?$9:1e-18) with lines "
          "title \"energy\", \\\n"
          "     \"invariants.csv\" every ::1 using 1:(($10>0)?$10:1e-18) with lines "
          "title \"hamiltonian\", \\\n"
          "     \"invariants.csv\" every ::1 using 1:(($7>0)?$7:1e-18) with lines "
          "title \"aux residual\"\n";
}

void emit_snapshots_plot(const fs::path& dir) {
    std::ofstream gp(dir / "plot_snapshots.gp");
    gp << "set datafile separator \",\"\n"
          "set terminal pngcairo size 960,640\n"
          "set output \"snapshots.png\"\n"
          "set xlabel \"x\"\n"
          "set ylabel \"|B|\"\n"
          "set cblabel \"t\"\n"
          "plot \"snapshots.csv\" every ::1 using 2:5:1 with points pt 7 ps 0.25 "
          "palette notitle\n";
}

void emit_ladder_plot(const fs::path& dir, const std::string& csvName,
                      int abscissaCol, const std::string& abscissaLabel) {
    std::ofstream gp(dir / "plot_convergence.gp");
    gp << "set datafile separator \",\"\n"
          "set terminal pngcairo size 800,600\n"
          "set output \"convergence.png\"\n"
          "set logscale xy\n"
          "set format y \"%.0e\"\n"
          "set xlabel \""
       << abscissaLabel
       << "\"\n"
          "set ylabel \"max-norm error\"\n"
          "plot \""
       << csvName << "\" every ::1 using " << abscissaCol
       << ":6 with linespoints title \"e_B\", \\\n     \"" << csvName
       << "\" every ::1 using " << abscissaCol
       << ":8 with linespoints title \"e_rho\", \\\n     \"" << csvName
       << "\" every ::1 using " << abscissaCol
       << ":10 with linespoints title \"e_u\"\n";
}

} // namespace

void write_invariants_csv(const std::string& path,
                          const std::vector<InvariantRecord>& records) {
    std::ofstream out(path);
    out << kInvariantsHeader << "\n";
    if (records.empty()) return;
    const InvariantRecord& b = records.front();
    for (const auto& r : records) {
        out << format_sci(r.t) << ',' << format_sci(r.mass) << ','
            << format_sci(r.energyQ) << ',' << format_sci(r.hamiltonian) << ','
            << format_sci(r.i1) << ',' << format_sci(r.i2) << ','
            << format_sci(r.qavResidual) << ','
            << format_sci(relative_drift(r.mass, b.mass)) << ','
            << format_sci(relative_drift(r.energyQ, b.energyQ)) << ','
            << format_sci(relative_drift(r.hamiltonian, b.hamiltonian)) << ','
            << format_sci(relative_drift(r.i1, b.i1)) << ','
            << format_sci(relative_drift(r.i2, b.i2)) << "\n";
    }
}

void write_snapshot_rows(std::ostream& os, const SpectralGrid& g,
                         const FieldState& st) {
    for (int j = 0; j < g.n; ++j)
        os << format_sci(st.t) << ',' << format_sci(g.x[j]) << ','
           << format_sci(st.B[j].real()) << ',' << format_sci(st.B[j].imag()) << ','
           << format_sci(std::abs(st.B[j])) << ',' << format_sci(st.rho[j]) << ','
           << format_sci(st.u[j]) << ',' << format_sci(st.phi[j]) << "\n";
}

// ---------------------------------------------------------------------------
// cmd_run

int cmd_run(const RunConfig& cfgIn) {
    RunConfig cfg = cfgIn;
    if (std::isnan(cfg.a)) cfg.a = -32.0;
    if (std::isnan(cfg.b)) cfg.b = 32.0;
    if (cfg.n == 0) cfg.n = 1024;
    if (cfg.tau == 0.0) cfg.tau = 0.02;
    if (std::isnan(cfg.T)) cfg.T = 4.0;

    const Params params = make_params(cfg.omega, cfg.kappa, cfg.nu, cfg.beta);
    SolitonSpec spec;
    spec.c = cfg.c;
    spec.eta = cfg.eta;
    spec.x0 = cfg.x0;
    spec.d0 = cfg.d0;
    const SpectralGrid grid = build_grid(cfg.a, cfg.b, cfg.n);

    const auto [resolution, oracle] = resolve_oracle(params, spec);
    if (resolution.sign) {
        spec.sign = *resolution.sign;
    } else if (auto adm = admissible_sign(params, spec)) {
        spec.sign = *adm;
        std::cerr << "warning: envelope sign did not validate; using the admissible "
                     "sign without an analytic error oracle\n";
    } else {
        std::cerr << "error: no admissible envelope amplitude for these parameters\n";
        return 1;
    }

    const FieldState st0 = initial_single(params, spec, grid);

    fs::create_directories(cfg.out);
    const fs::path dir(cfg.out);
    std::ofstream snap(dir / "snapshots.csv");
    snap << kSnapshotsHeader << "\n";

    std::vector<InvariantRecord> records;
    long sampleIdx = 0;
    double lastSnapT = std::numeric_limits<double>::quiet_NaN();
    const SampleFn on_sample = [&](const FieldState& st) {
        records.push_back(invariant_record(params, grid, st));
        const bool snapThis = cfg.snapshotCadence > 0
                                  ? (sampleIdx % cfg.snapshotCadence == 0)
                                  : (sampleIdx == 0);
        if (snapThis) {
            write_snapshot_rows(snap, grid, st);
            lastSnapT = st.t;
        }
        ++sampleIdx;
    };

    const PropagateResult pr =
        propagate_scheme(params, grid, cfg.scheme, cfg.tau, cfg.T, st0,
                         solver_options(cfg), parse_policy(cfg.policy), cfg.cadence,
                         on_sample);
    if (lastSnapT != pr.final.t) write_snapshot_rows(snap, grid, pr.final);
    snap.close();
    warn_nonconverged(pr.stats);

    write_invariants_csv((dir / "invariants.csv").string(), records);

    ordered_json j;
    j["command"] = "run";
    j["config"] = config_json(cfg);
    j["oracle"] = oracle;
    j["sign_residuals"] = {{"plus", residual_json(resolution.plus)},
                           {"minus", residual_json(resolution.minus)}};
    const InvariantRecord& b = records.front();
    const InvariantRecord& f = records.back();
    double maxQav = 0.0, maxDriftMass = 0.0, maxDriftE = 0.0, maxDriftH = 0.0,
           maxAbsI1 = 0.0, maxAbsI2 = 0.0;
    for (const auto& r : records) {
        maxQav = std::max(maxQav, r.qavResidual);
        maxDriftMass = std::max(maxDriftMass, relative_drift(r.mass, b.mass));
        maxDriftE = std::max(maxDriftE, relative_drift(r.energyQ, b.energyQ));
        maxDriftH = std::max(maxDriftH, relative_drift(r.hamiltonian, b.hamiltonian));
        maxAbsI1 = std::max(maxAbsI1, std::abs(r.i1 - b.i1));
        maxAbsI2 = std::max(maxAbsI2, std::abs(r.i2 - b.i2));
    }
    j["invariants"] = {
        {"initial",
         {{"mass", b.mass}, {"energyQ", b.energyQ}, {"hamiltonian", b.hamiltonian},
          {"i1", b.i1}, {"i2", b.i2}}},
        {"final",
         {{"mass", f.mass}, {"energyQ", f.energyQ}, {"hamiltonian", f.hamiltonian},
          {"i1", f.i1}, {"i2", f.i2}}},
        {"max_rel_drift",
         {{"mass", maxDriftMass}, {"energyQ", maxDriftE}, {"hamiltonian", maxDriftH}}},
        {"max_abs_drift", {{"i1", maxAbsI1}, {"i2", maxAbsI2}}},
        {"max_qav_residual", maxQav}};
    if (resolution.sign) {
        const ErrorNorms e = error_norms(params, spec, grid, pr.final);
        j["errors"] = {{"e_B", e.eB}, {"e_rho", e.eRho}, {"e_u", e.eU}};
    }
    j["iteration_stats"] = stats_json(pr.stats);
    j["wall_time_s"] = pr.wall_s;
    write_json(dir / "run.json", j);

    if (cfg.emitPlots) {
        emit_invariants_plot(dir);
        emit_snapshots_plot(dir);
    }

    std::cout << "run: " << pr.stats.steps << " steps to T = " << cfg.T
              << ", max rel drift mass " << format_sci(maxDriftMass) << ", energy "
              << format_sci(maxDriftE) << ", aux residual " << format_sci(maxQav)
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Convergence ladders

namespace {

struct LadderRow {
    int n = 0;
    double h = 0.0;
    double tau = 0.0;
    ErrorNorms e;
    double wall_s = 0.0;
    double meanIters = 0.0;
    long nonconverged = 0;
};

void write_ladder_csv(const fs::path& path, const std::string& scheme,
                      const std::string& oracle, const std::vector<LadderRow>& rows) {
    std::ofstream out(path);
    out << kLadderHeader << "\n";
    for (size_t r = 0; r < rows.size(); ++r) {
        const auto rate = [&](double cur, double prev) {
            return r == 0 ? std::numeric_limits<double>::quiet_NaN()
                          : refinement_rate(prev, cur);
        };
        out << scheme << ',' << oracle << ',' << rows[r].n << ','
            << format_sci(rows[r].h) << ',' << format_sci(rows[r].tau) << ','
            << format_sci(rows[r].e.eB) << ','
            << format_sci(rate(rows[r].e.eB, r ? rows[r - 1].e.eB : 0)) << ','
            << format_sci(rows[r].e.eRho) << ','
            << format_sci(rate(rows[r].e.eRho, r ? rows[r - 1].e.eRho : 0)) << ','
            << format_sci(rows[r].e.eU) << ','
            << format_sci(rate(rows[r].e.eU, r ? rows[r - 1].e.eU : 0)) << ','
            << format_sci(rows[r].wall_s) << ',' << format_sci(rows[r].meanIters)
            << ',' << rows[r].nonconverged << "\n";
    }
}

ordered_json ladder_json(const std::vector<LadderRow>& rows) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json j;
        j["N"] = r.n;
        j["h"] = r.h;
        j["tau"] = r.tau;
        j["e_B"] = r.e.eB;
        j["e_rho"] = r.e.eRho;
        j["e_u"] = r.e.eU;
        j["wall_s"] = r.wall_s;
        j["mean_iterations"] = r.meanIters;
        j["nonconverged_steps"] = r.nonconverged;
        arr.push_back(j);
    }
    return arr;
}

double default_tau0(const std::string& scheme) {
    if (scheme == "fprk2") return 1.0 / 10.0;
    if (scheme == "fprk3") return 2.0 / 5.0;
    if (scheme == "euler-implicit") return 1.0 / 20.0;
    return 1.0 / 5.0; // fprk1, cnfp
}

} // namespace

int cmd_converge_time(const RunConfig& cfgIn) {
    RunConfig cfg = cfgIn;
    if (std::isnan(cfg.a)) cfg.a = -32.0;
    if (std::isnan(cfg.b)) cfg.b = 32.0;
    if (cfg.n == 0) cfg.n = 1024;
    if (cfg.tau == 0.0) cfg.tau = default_tau0(cfg.scheme);
    if (std::isnan(cfg.T)) cfg.T = 4.0;
    const int rungs = 6;

    const Params params = make_params(cfg.omega, cfg.kappa, cfg.nu, cfg.beta);
    SolitonSpec spec;
    spec.c = cfg.c;
    spec.eta = cfg.eta;
    spec.x0 = cfg.x0;
    spec.d0 = cfg.d0;
    const SpectralGrid grid = build_grid(cfg.a, cfg.b, cfg.n);

    const auto [resolution, oracle] = resolve_oracle(params, spec);
    if (resolution.sign) {
        spec.sign = *resolution.sign;
    } else if (auto adm = admissible_sign(params, spec)) {
        spec.sign = *adm;
    } else {
        std::cerr << "error: no admissible envelope amplitude for these parameters\n";
        return 1;
    }

    const FieldState st0 = initial_single(params, spec, grid);
    const SolverOptions sopts = solver_options(cfg);
    const NonconvergencePolicy policy = parse_policy(cfg.policy);

    FieldState reference;
    if (!resolution.sign) {
        const double tauRef = cfg.tau / (1 << (rungs - 1)) / 8.0;
        std::cout << "converge-time: no validated analytic oracle, running "
                     "self-reference at tau = "
                  << format_sci(tauRef) << "\n";
        reference = propagate_scheme(params, grid, cfg.scheme, tauRef, cfg.T, st0,
                                     sopts, policy, 1L << 30, {})
                        .final;
    }

    std::vector<LadderRow> rows;
    for (int r = 0; r < rungs; ++r) {
        LadderRow row;
        row.n = cfg.n;
        row.h = grid.h;
        row.tau = cfg.tau / (1 << r);
        const PropagateResult pr =
            propagate_scheme(params, grid, cfg.scheme, row.tau, cfg.T, st0, sopts,
                             policy, 1L << 30, {});
        row.e = resolution.sign ? error_norms(params, spec, grid, pr.final)
                                : error_norms(grid, pr.final, reference);
        row.wall_s = pr.wall_s;
        row.meanIters = pr.stats.steps > 0 ? static_cast<double>(
                                                 pr.stats.totalIterations) /
                                                 pr.stats.steps
                                           : 0.0;
        row.nonconverged = pr.stats.nonconvergedSteps;
        rows.push_back(row);
        std::cout << "converge-time: tau = " << format_sci(row.tau)
                  << "  e_B = " << format_sci(row.e.eB)
                  << "  e_rho = " << format_sci(row.e.eRho)
                  << "  e_u = " << format_sci(row.e.eU) << "  (" << row.wall_s
                  << " s)\n";
    }

    fs::create_directories(cfg.out);
    const fs::path dir(cfg.out);
    write_ladder_csv(dir / "converge_time.csv", cfg.scheme, oracle, rows);
    ordered_json j;
    j["command"] = "converge-time";
    j["config"] = config_json(cfg);
    j["oracle"] = oracle;
    j["sign_residuals"] = {{"plus", residual_json(resolution.plus)},
                           {"minus", residual_json(resolution.minus)}};
    j["rungs"] = ladder_json(rows);
    write_json(dir / "run.json", j);
    if (cfg.emitPlots) emit_ladder_plot(dir, "converge_time.csv", 5, "tau");
    return 0;
}

int cmd_converge_space(const RunConfig& cfgIn) {
    RunConfig cfg = cfgIn;
    if (std::isnan(cfg.a)) cfg.a = -32.0;
    if (std::isnan(cfg.b)) cfg.b = 32.0;
    if (cfg.tau == 0.0) cfg.tau = 1e-3;
    if (std::isnan(cfg.T)) cfg.T = 4.0;
    const std::vector<int> ladder = {64, 128, 256, 512};

    const Params params = make_params(cfg.omega, cfg.kappa, cfg.nu, cfg.beta);
    SolitonSpec spec;
    spec.c = cfg.c;
    spec.eta = cfg.eta;
    spec.x0 = cfg.x0;
    spec.d0 = cfg.d0;

    const auto [resolution, oracle] = resolve_oracle(params, spec);
    if (resolution.sign) {
        spec.sign = *resolution.sign;
    } else if (auto adm = admissible_sign(params, spec)) {
        spec.sign = *adm;
    } else {
        std::cerr << "error: no admissible envelope amplitude for these parameters\n";
        return 1;
    }

    const SolverOptions sopts = solver_options(cfg);
    const NonconvergencePolicy policy = parse_policy(cfg.policy);

    std::vector<LadderRow> rows;
    for (int n : ladder) {
        const SpectralGrid grid = build_grid(cfg.a, cfg.b, n);
        const FieldState st0 = initial_single(params, spec, grid);
        LadderRow row;
        row.n = n;
        row.h = grid.h;
        row.tau = cfg.tau;
        const PropagateResult pr = propagate_scheme(
            params, grid, cfg.scheme, cfg.tau, cfg.T, st0, sopts, policy, 1L << 30, {});
        if (resolution.sign) {
            row.e = error_norms(params, spec, grid, pr.final);
        } else {
            const FieldState ref =
                propagate_scheme(params, grid, cfg.scheme, cfg.tau / 8.0, cfg.T, st0,
                                 sopts, policy, 1L << 30, {})
                    .final;
            row.e = error_norms(grid, pr.final, ref);
        }
        row.wall_s = pr.wall_s;
        row.meanIters = pr.stats.steps > 0 ? static_cast<double>(
                                                 pr.stats.totalIterations) /
                                                 pr.stats.steps
                                           : 0.0;
        row.nonconverged = pr.stats.nonconvergedSteps;
        rows.push_back(row);
        std::cout << "converge-space: N = " << n << "  h = " << format_sci(row.h)
                  << "  e_B = " << format_sci(row.e.eB)
                  << "  e_rho = " << format_sci(row.e.eRho)
                  << "  e_u = " << format_sci(row.e.eU) << "  (" << row.wall_s
                  << " s)\n";
    }

    fs::create_directories(cfg.out);
    const fs::path dir(cfg.out);
    write_ladder_csv(dir / "converge_space.csv", cfg.scheme, oracle, rows);
    ordered_json j;
    j["command"] = "converge-space";
    j["config"] = config_json(cfg);
    j["oracle"] = oracle;
    j["sign_residuals"] = {{"plus", residual_json(resolution.plus)},
                           {"minus", residual_json(resolution.minus)}};
    j["rungs"] = ladder_json(rows);
    write_json(dir / "run.json", j);
    if (cfg.emitPlots) emit_ladder_plot(dir, "converge_space.csv", 4, "h");
    return 0;
}

// ---------------------------------------------------------------------------
// cmd_collide

int cmd_collide(const RunConfig& cfgIn) {
    RunConfig cfg = cfgIn;
    CollisionId id;
    if (cfg.collisionCase == "I") id = CollisionId::I;
    else if (cfg.collisionCase == "II") id = CollisionId::II;
    else if (cfg.collisionCase == "III") id = CollisionId::III;
    else {
        std::cerr << "error: case must be I, II or III\n";
        return 1;
    }
    CollisionSetup cs = collision_setup(id);
    if (std::isnan(cfg.a)) cfg.a = cs.a;
    if (std::isnan(cfg.b)) cfg.b = cs.b;
    if (cfg.n == 0) cfg.n = static_cast<int>(std::llround((cfg.b - cfg.a) * 8.0));
    if (cfg.tau == 0.0) cfg.tau = 1.0 / 200.0;
    if (std::isnan(cfg.T)) cfg.T = cs.T;
    // The case fixes the physics; echo it into the config record.
    cfg.omega = cs.params.omega;
    cfg.kappa = cs.params.kappa;
    cfg.nu = cs.params.nu;
    cfg.beta = cs.params.beta;

    const SpectralGrid grid = build_grid(cfg.a, cfg.b, cfg.n);

    const auto [resR, labelR] = resolve_oracle(cs.params, cs.right);
    const auto [resL, labelL] = resolve_oracle(cs.params, cs.left);
    if (resR.sign) cs.right.sign = *resR.sign;
    else if (auto adm = admissible_sign(cs.params, cs.right)) cs.right.sign = *adm;
    else {
        std::cerr << "error: no admissible amplitude for the right-moving wave\n";
        return 1;
    }
    if (resL.sign) cs.left.sign = *resL.sign;
    else if (auto adm = admissible_sign(cs.params, cs.left)) cs.left.sign = *adm;
    else {
        std::cerr << "error: no admissible amplitude for the left-moving wave\n";
        return 1;
    }

    const FieldState st0 = initial_collision(cs, grid);

    fs::create_directories(cfg.out);
    const fs::path dir(cfg.out);
    std::ofstream snap(dir / "snapshots.csv");
    snap << kSnapshotsHeader << "\n";

    const long nsteps = std::lround(cfg.T / cfg.tau);
    const long totalSamples = nsteps / std::max(cfg.cadence, 1L) + 1;
    const long snapCadence = cfg.snapshotCadence > 0
                                 ? cfg.snapshotCadence
                                 : std::max(1L, totalSamples / 24);

    std::vector<InvariantRecord> records;
    long sampleIdx = 0;
    double lastSnapT = std::numeric_limits<double>::quiet_NaN();
    const SampleFn on_sample = [&](const FieldState& st) {
        records.push_back(invariant_record(cs.params, grid, st));
        if (sampleIdx % snapCadence == 0) {
            write_snapshot_rows(snap, grid, st);
            lastSnapT = st.t;
        }
        ++sampleIdx;
    };

    const PropagateResult pr =
        propagate_scheme(cs.params, grid, cfg.scheme, cfg.tau, cfg.T, st0,
                         solver_options(cfg), parse_policy(cfg.policy), cfg.cadence,
                         on_sample);
    if (lastSnapT != pr.final.t) write_snapshot_rows(snap, grid, pr.final);
    snap.close();
    warn_nonconverged(pr.stats);
    write_invariants_csv((dir / "invariants.csv").string(), records);

    // Inelasticity: compare |B(T)| against the superposition of the two exact
    // waves translated to time T.
    double num = 0.0, den = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        const Complex sup = soliton_B(cs.params, cs.right, grid.x[j], pr.final.t) +
                            soliton_B(cs.params, cs.left, grid.x[j], pr.final.t);
        const double d = std::abs(pr.final.B[j]) - std::abs(sup);
        num += d * d;
        den += std::norm(sup);
    }
    const double inelasticity = std::sqrt(num / den);

    ordered_json j;
    j["command"] = "collide";
    j["config"] = config_json(cfg);
    j["oracle"] = {{"right", labelR}, {"left", labelL}};
    j["sign_residuals"] = {
        {"right",
         {{"plus", residual_json(resR.plus)}, {"minus", residual_json(resR.minus)}}},
        {"left",
         {{"plus", residual_json(resL.plus)}, {"minus", residual_json(resL.minus)}}}};
    const InvariantRecord& b = records.front();
    double maxQav = 0.0, maxDriftMass = 0.0, maxDriftE = 0.0;
    for (const auto& r : records) {
        maxQav = std::max(maxQav, r.qavResidual);
        maxDriftMass = std::max(maxDriftMass, relative_drift(r.mass, b.mass));
        maxDriftE = std::max(maxDriftE, relative_drift(r.energyQ, b.energyQ));
    }
    j["invariants"] = {{"max_rel_drift", {{"mass", maxDriftMass}, {"energyQ", maxDriftE}}},
                       {"max_qav_residual", maxQav}};
    j["collision"] = {{"case", cfg.collisionCase},
                      {"inelasticity", inelasticity},
                      {"T", pr.final.t}};
    j["iteration_stats"] = stats_json(pr.stats);
    j["wall_time_s"] = pr.wall_s;
    write_json(dir / "run.json", j);

    if (cfg.emitPlots) {
        emit_invariants_plot(dir);
        emit_snapshots_plot(dir);
    }

    std::cout << "collide: case " << cfg.collisionCase << ", " << pr.stats.steps
              << " steps to T = " << cfg.T << ", inelasticity "
              << format_sci(inelasticity) << ", max rel drift mass "
              << format_sci(maxDriftMass) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// cmd_selftest

namespace {

struct SuiteResult {
    bool pass = false;
    std::string detail;
};

SuiteResult suite_tableau_defects(double perturbation) {
    Tableau g2 = gauss_tableau(2);
    g2.A(0, 0) += perturbation;
    const double d1 = symplectic_defect(gauss_tableau(1));
    const double d2 = symplectic_defect(g2);
    const double d3 = symplectic_defect(gauss_tableau(3));
    const double de = symplectic_defect(explicit_euler_tableau());
    const double di = symplectic_defect(implicit_euler_tableau());
    const bool pass = d1 <= 1e-14 && d2 <= 1e-14 && d3 <= 1e-14 && de == 1.0 &&
                      di == 1.0;
    std::ostringstream os;
    os << "gauss defects " << format_sci(d1) << " " << format_sci(d2) << " "
       << format_sci(d3) << ", euler defects " << de << " " << di;
    return {pass, os.str()};
}

SuiteResult suite_transform_vs_dense() {
    const SpectralGrid g = build_grid(-32.0, 32.0, 32);
    const Eigen::MatrixXd D1 = dense_diff_matrix(g, 1);
    const Eigen::MatrixXd D2 = dense_diff_matrix(g, 2);
    std::mt19937 gen(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        CVec v(g.n);
        for (auto& z : v) z = Complex(dist(gen), dist(gen));
        const CVec f1 = apply_d1(g, v), d1v = apply_dense(D1, v);
        const CVec f2 = apply_d2(g, v), d2v = apply_dense(D2, v);
        for (int j = 0; j < g.n; ++j) {
            worst = std::max(worst, std::abs(f1[j] - d1v[j]));
            worst = std::max(worst, std::abs(f2[j] - d2v[j]));
        }
    }
    return {worst <= 1e-12, "max |transform - dense| = " + format_sci(worst)};
}

SuiteResult suite_stage_oracle() {
    const Params p = make_params(1.0, 1.0, 1.0, 7.0);
    const SpectralGrid g = build_grid(-32.0, 32.0, 16);
    const FieldState st = initial_single(p, SolitonSpec{}, g);
    double worst = 0.0;
    for (int s : {1, 2}) {
        const Tableau t = gauss_tableau(s);
        const StageSolver solver(p, g, t, 1.0 / 50.0);
        IterationReport rep;
        const StageSlopes fp = solver.solve_stages(st, rep);
        const StageSlopes nw = newton_stage_solve(p, g, t, 1.0 / 50.0, st);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < g.n; ++j) {
                worst = std::max(worst, std::abs(fp.k1[i][j] - nw.k1[i][j]));
                worst = std::max(worst, std::abs(fp.k2[i][j] - nw.k2[i][j]));
                worst = std::max(worst, std::abs(fp.k3[i][j] - nw.k3[i][j]));
                worst = std::max(worst, std::abs(fp.k4[i][j] - nw.k4[i][j]));
            }
    }
    return {worst <= 1e-12, "max slope difference = " + format_sci(worst)};
}

SuiteResult suite_conservation_smoke() {
    const Params p = make_params(1.0, 1.0, 1.0, 7.0);
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    const StageSolver solver(p, g, gauss_tableau(2), 1.0 / 50.0);
    IntegrateOptions opts;
    opts.T = 2.0;
    const FieldState stT = integrate(solver, st0, opts);
    const InvariantRecord r0 = invariant_record(p, g, st0);
    const InvariantRecord rT = invariant_record(p, g, stT);
    const double dm = relative_drift(rT.mass, r0.mass);
    const double de = relative_drift(rT.energyQ, r0.energyQ);
    const double di1 = std::abs(rT.i1 - r0.i1);
    const double di2 = std::abs(rT.i2 - r0.i2);
    const bool pass = dm <= 1e-11 && de <= 1e-11 && di1 <= 1e-12 && di2 <= 1e-12 &&
                      rT.qavResidual <= 1e-12;
    std::ostringstream os;
    os << "drift mass " << format_sci(dm) << ", energy " << format_sci(de)
       << ", i1 " << format_sci(di1) << ", i2 " << format_sci(di2)
       << ", aux residual " << format_sci(rT.qavResidual);
    return {pass, os.str()};
}

SuiteResult suite_scheme_equivalence() {
    const Params p = make_params(1.0, 1.0, 1.0, 7.0);
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    FieldState a = initial_single(p, SolitonSpec{}, g);
    FieldState b = a;
    const StageSolver solver(p, g, gauss_tableau(1), 1.0 / 50.0);
    for (int i = 0; i < 20; ++i) {
        a = step(solver, a);
        b = cn_fp_step(p, g, b, 1.0 / 50.0);
    }
    double worst = 0.0;
    for (int j = 0; j < g.n; ++j) {
        worst = std::max(worst, std::abs(a.B[j] - b.B[j]));
        worst = std::max(worst, std::abs(a.rho[j] - b.rho[j]));
        worst = std::max(worst, std::abs(a.u[j] - b.u[j]));
    }
    return {worst <= 1e-11, "max field difference after 20 steps = " + format_sci(worst)};
}

SuiteResult suite_sign_resolution() {
    const Params p = make_params(1.0, 1.0, 1.0, 7.0);
    const SolitonSpec spec;
    const SignResolution res = resolve_envelope_sign(p, spec, validation_grid(spec));
    std::ostringstream os;
    os << "plus residual " << format_sci(res.plus.max()) << ", minus residual "
       << format_sci(res.minus.max());
    return {res.sign.has_value(), os.str()};
}

SuiteResult suite_time_symmetry() {
    const Params p = make_params(1.0, 1.0, 1.0, 7.0);
    const SpectralGrid g = build_grid(-32.0, 32.0, 64);
    const FieldState st0 = initial_single(p, SolitonSpec{}, g);
    const StageSolver fwd(p, g, gauss_tableau(2), 1.0 / 50.0);
    const StageSolver bwd(p, g, gauss_tableau(2), -1.0 / 50.0);
    const FieldState back = step(bwd, step(fwd, st0));
    double worst = 0.0;
    for (int j = 0; j < g.n; ++j) {
        worst = std::max(worst, std::abs(back.B[j] - st0.B[j]));
        worst = std::max(worst, std::abs(back.rho[j] - st0.rho[j]));
        worst = std::max(worst, std::abs(back.u[j] - st0.u[j]));
        worst = std::max(worst, std::abs(back.phi[j] - st0.phi[j]));
    }
    return {worst <= 1e-10, "max forward+backward defect = " + format_sci(worst)};
}

} // namespace

int cmd_selftest(const RunConfig& cfg, double gaussPerturbation) {
    (void)cfg;
    struct Suite {
        const char* name;
        std::function<SuiteResult()> run;
    };
    const std::vector<Suite> suites = {
        {"tableau-defects", [&] { return suite_tableau_defects(gaussPerturbation); }},
        {"transform-vs-dense", suite_transform_vs_dense},
        {"stage-oracle", suite_stage_oracle},
        {"conservation-smoke", suite_conservation_smoke},
        {"scheme-equivalence", suite_scheme_equivalence},
        {"sign-resolution", suite_sign_resolution},
        {"time-symmetry", suite_time_symmetry},
    };
    int failures = 0;
    for (const auto& s : suites) {
        SuiteResult r;
        try {
            r = s.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        if (!r.pass) ++failures;
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << s.name << ": " << r.detail
                  << "\n";
    }
    std::cout << (failures == 0 ? "selftest: all suites passed\n"
                                : "selftest: " + std::to_string(failures) +
                                      " suite(s) failed\n");
    return failures;
}

} // namespace zr
