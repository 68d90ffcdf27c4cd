#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "cbfqp/csv.hpp"
#include "cbfqp/equilibria.hpp"
#include "cbfqp/scenario.hpp"
#include "cbfqp/sim.hpp"
#include "cbfqp/svg.hpp"

using namespace cbfqp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSim = 3;

Vec parse_point(const std::string& text, int n) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str()) throw ConfigError("bad coordinate '" + item + "'");
        vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != n) {
        throw ConfigError("expected " + std::to_string(n) + " comma-separated coordinates");
    }
    Vec out(n);
    for (int i = 0; i < n; ++i) out(i) = vals[i];
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os << content;
    if (!os) throw ConfigError("write to '" + path + "' failed");
}

std::vector<Vec> capture_candidates(const EquilibriumAnalysis& an) {
    std::vector<Vec> out;
    for (const auto& r : an.boundary.reports) out.push_back(r.x);
    for (const auto& r : an.interior) out.push_back(r.x);
    return out;
}

EquilibriumAnalysis analyze(const Scenario& scn, const ControlAffineSystem& sys,
                            const QuadraticClf& clf, const CircularObstacleCbf& cbf) {
    Vec lo = Vec::Constant(scn.n, -6.0);
    Vec hi = Vec::Constant(scn.n, 6.0);
    for (const auto& ic : scn.ics) {
        for (int d = 0; d < scn.n; ++d) {
            lo(d) = std::min(lo(d), ic(d) - 1.0);
            hi(d) = std::max(hi(d), ic(d) + 1.0);
        }
    }
    return analyze_equilibria(sys, clf, cbf, scn.nominal, lo, hi);
}

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(const std::string& scenario_path, const std::string& controller,
                 const std::string& ic_text, const std::string& out_path) {
    const Scenario scn = load_scenario(scenario_path);
    const ControlAffineSystem sys = make_system(scn);
    const QuadraticClf clf = make_clf(scn);
    const CircularObstacleCbf cbf = make_cbf(scn);
    const Vec x0 = parse_point(ic_text, scn.n);

    std::vector<Vec> known;
    if (scn.n == 2) known = capture_candidates(analyze(scn, sys, clf, cbf));

    TrajectoryRecord rec;
    if (controller == "nominal") {
        rec = simulate_nominal(sys, clf, cbf, scn.nominal, x0, scn.sim, known);
    } else if (controller == "shaped") {
        rec = simulate_shaped(sys, clf, cbf, scn.shaped, x0, scn.sim, known);
    } else {
        throw ConfigError("controller must be 'nominal' or 'shaped'");
    }

    std::ostringstream csv;
    write_trajectory_csv(csv, rec);
    write_file(out_path, csv.str());
    std::ostringstream summary;
    write_run_summary(summary, rec);
    write_file(out_path + ".summary", summary.str());
    std::cout << summary.str();

    if (rec.terminal.kind == TerminalKind::error) {
        std::cerr << "simulation aborted at t=" << rec.terminal.time << ": "
                  << rec.terminal.reason << "\n";
        return kExitSim;
    }
    return kExitOk;
}

// ---- equilibria -------------------------------------------------------------

int cmd_equilibria(const std::string& scenario_path, const std::string& out_path) {
    const Scenario scn = load_scenario(scenario_path);
    const ControlAffineSystem sys = make_system(scn);
    const QuadraticClf clf = make_clf(scn);
    const CircularObstacleCbf cbf = make_cbf(scn);
    const EquilibriumAnalysis an = analyze(scn, sys, clf, cbf);
    std::ostringstream csv;
    write_equilibria_csv(csv, an);
    write_file(out_path, csv.str());
    std::cout << csv.str();
    return kExitOk;
}

// ---- sweep ------------------------------------------------------------------

int cmd_sweep(const std::string& scenario_path, const std::string& controller,
              const std::string& outdir) {
    const Scenario scn = load_scenario(scenario_path);
    if (scn.ics.empty()) throw ConfigError("scenario has no initial conditions ([ics])");
    const ControlAffineSystem sys = make_system(scn);
    const QuadraticClf clf = make_clf(scn);
    const CircularObstacleCbf cbf = make_cbf(scn);
    const ControllerKind kind = controller == "nominal" ? ControllerKind::nominal
                              : controller == "shaped"  ? ControllerKind::shaped
                                                        : throw ConfigError(
                                                              "controller must be "
                                                              "'nominal' or 'shaped'");

    std::filesystem::create_directories(outdir);
    const std::vector<Vec> known = capture_candidates(analyze(scn, sys, clf, cbf));
    const SweepResult res =
        sweep(sys, clf, cbf, scn.nominal, scn.shaped, kind, scn.ics, scn.sim, known);

    for (size_t i = 0; i < res.records.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "sweep_ic%02zu.csv", i);
        std::ostringstream csv;
        write_trajectory_csv(csv, res.records[i]);
        write_file(outdir + "/" + name, csv.str());
    }

    std::ostringstream sum;
    sum << "runs = " << res.records.size() << "\n";
    sum << "errors = " << res.summary.error_count << "\n";
    sum << "unresolved = " << res.summary.unresolved_count << "\n";
    for (const auto& row : res.summary.rows) {
        sum << "attractor =";
        for (Eigen::Index d = 0; d < row.attractor.size(); ++d) {
            sum << (d ? ", " : " ") << fmt17(row.attractor(d));
        }
        sum << " | count = " << row.count << " | ics =";
        for (const int i : row.ic_indices) sum << ' ' << i;
        sum << "\n";
    }
    write_file(outdir + "/sweep_summary.txt", sum.str());
    std::cout << sum.str();
    return res.summary.error_count == 0 ? kExitOk : kExitSim;
}

// ---- reproduce --------------------------------------------------------------

const char* kFigureScenario[3] = {
    // integrator benchmark (figures 1 and 2)
    "format_version = 1\n"
    "[system]\nname = integrator\nn = 2\n"
    "[clf]\nlambda = 6, 1\n"
    "[obstacle]\ncenter = 0, 3\nradius = 1.5\n"
    "[nominal]\np = 5\ngamma = 1\nalpha = 1\n"
    "[shaped]\np = 5\nq = 5\ngamma = 1\nalpha = 1\nbeta = 1\nepsilon = 0.1\nsigma_scale = 1\n"
    "[sim]\ndt = 0.001\nt_final = 50\nrecord_stride = 25\n"
    "[ics]\nring = 6, 12, 15\n",
    // drifting variant 1 (figure 3)
    "format_version = 1\n"
    "[system]\nname = f1\nn = 2\n"
    "[clf]\nlambda = 6, 1\n"
    "[obstacle]\ncenter = 0, 3\nradius = 1.5\n"
    "[nominal]\np = 5\ngamma = 1\nalpha = 1\n"
    "[shaped]\np = 5\nq = 5\ngamma = 1\nalpha = 1\nbeta = 1\nepsilon = 0.1\nsigma_scale = 1\n"
    "[sim]\ndt = 0.001\nt_final = 50\nrecord_stride = 25\n"
    "[ics]\nring = 6, 12, 15\n",
    // drifting variant 2 (figure 4)
    "format_version = 1\n"
    "[system]\nname = f2\nn = 2\n"
    "[clf]\nlambda = 6, 1\n"
    "[obstacle]\ncenter = 0, 3\nradius = 1.5\n"
    "[nominal]\np = 5\ngamma = 1\nalpha = 1\n"
    "[shaped]\np = 5\nq = 5\ngamma = 1\nalpha = 1\nbeta = 1\nepsilon = 0.1\nsigma_scale = 1\n"
    "[sim]\ndt = 0.001\nt_final = 50\nrecord_stride = 25\n"
    "[ics]\nring = 6, 12, 15\n",
};

void add_markers(PhasePortrait& pp, const EquilibriumAnalysis& an) {
    pp.markers.push_back(SvgMarker{Vec::Zero(2), "#2ca02c", 4.0, "origin"});
    for (const auto& r : an.boundary.reports) {
        const bool stable = r.verdict == Stability::asymptotically_stable;
        pp.markers.push_back(
            SvgMarker{r.x, stable ? "#d62728" : "#ff9896", stable ? 5.0 : 3.5, ""});
    }
    for (const auto& r : an.interior) {
        pp.markers.push_back(SvgMarker{r.x, "#9467bd", 3.5, ""});
    }
}

int cmd_reproduce(int figure, const std::string& outdir) {
    if (figure < 1 || figure > 4) throw ConfigError("--figure must be 1, 2, 3 or 4");
    const int scn_idx = figure <= 2 ? 0 : figure - 2;
    const Scenario scn = parse_scenario(kFigureScenario[scn_idx], "<builtin>");
    const ControlAffineSystem sys = make_system(scn);
    const QuadraticClf clf = make_clf(scn);
    const CircularObstacleCbf cbf = make_cbf(scn);

    std::filesystem::create_directories(outdir);
    const EquilibriumAnalysis an = analyze(scn, sys, clf, cbf);
    const std::vector<Vec> known = capture_candidates(an);

    PhasePortrait pp;
    pp.title = "figure " + std::to_string(figure);
    pp.obstacle = cbf.circle();

    const auto emit = [&](ControllerKind kind, const std::string& tag,
                          const std::string& color) {
        const SweepResult res =
            sweep(sys, clf, cbf, scn.nominal, scn.shaped, kind, scn.ics, scn.sim, known);
        for (size_t i = 0; i < res.records.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "fig%d_%sic%02zu.csv", figure, tag.c_str(), i);
            std::ostringstream csv;
            write_trajectory_csv(csv, res.records[i]);
            write_file(outdir + "/" + name, csv.str());
            pp.trajectories.push_back(SvgTrajectory{res.records[i].x, color, 1.2});
        }
        return res;
    };

    if (figure == 1) {
        emit(ControllerKind::nominal, "", "#1f77b4");
        // level set of the reference function through the attracting point
        for (const auto& r : an.boundary.reports) {
            if (r.verdict == Stability::asymptotically_stable) {
                pp.ellipses.push_back(
                    SvgEllipse{clf.hess(r.x), clf.value(r.x), "#2ca02c"});
            }
        }
    } else if (figure == 2) {
        const SweepResult res = emit(ControllerKind::shaped, "", "#1f77b4");
        // rotated level set at the end of the first trajectory
        if (!res.records.empty() && !res.records[0].Q.empty()) {
            const Mat& q = res.records[0].Q.back();
            const Vec& xf = res.records[0].x.back();
            const Mat rotated = q.transpose() * clf.hess(xf) * q;
            const double level = std::max(0.5, 0.5 * xf.dot(rotated * xf));
            pp.ellipses.push_back(SvgEllipse{rotated, level, "#9467bd"});
        }
    } else {
        emit(ControllerKind::nominal, "nominal_", "#ff7f0e");
        emit(ControllerKind::shaped, "shaped_", "#1f77b4");
    }
    add_markers(pp, an);

    std::ostringstream svg;
    write_svg(svg, pp);
    write_file(outdir + "/fig" + std::to_string(figure) + ".svg", svg.str());
    std::cout << "wrote fig" << figure << ".svg and " << pp.trajectories.size()
              << " trajectory files to " << outdir << "\n";
    return kExitOk;
}

// ---- gradcheck --------------------------------------------------------------

struct GradCheckWorst {
    double rel = 0.0;
    Vec x;
    std::string tag;
};

double check_gradients(const ControlAffineSystem& sys, const Clf& clf, const Cbf& cbf,
                       std::mt19937_64& rng, int samples, double box, bool corrupt,
                       const std::string& tag, GradCheckWorst& worst) {
    std::uniform_real_distribution<double> ub(-box, box);
    std::uniform_real_distribution<double> uw(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(0.0, 3.0);
    double max_rel = 0.0;
    const double step = 1e-6;
    for (int s = 0; s < samples; ++s) {
        Vec x(sys.n);
        do {
            for (int d = 0; d < sys.n; ++d) x(d) = ub(rng);
        } while (cbf.value(x) <= 0.05 || x.norm() < 0.2);
        Vec om(omega_dim(sys.n));
        for (Eigen::Index d = 0; d < om.size(); ++d) om(d) = uw(rng);
        const ShapedState st{x, rotation_exp(om, ut(rng))};

        GradD gd = grad_D(sys, clf, cbf, st);
        if (corrupt) gd.grad_x(0) += 1e-3 * (1.0 + std::abs(gd.grad_x(0)));

        Vec fd_x(sys.n);
        for (int d = 0; d < sys.n; ++d) {
            Vec xp = x, xm = x;
            xp(d) += step;
            xm(d) -= step;
            fd_x(d) = (collinearity_measure(sys, clf, cbf, ShapedState{xp, st.Q}) -
                       collinearity_measure(sys, clf, cbf, ShapedState{xm, st.Q})) /
                      (2.0 * step);
        }
        Vec fd_q(om.size());
        for (Eigen::Index k = 0; k < om.size(); ++k) {
            Vec ek = Vec::Zero(om.size());
            ek(k) = 1.0;
            const Mat qp = st.Q.matrix() * rotation_exp(ek, step).matrix();
            const Mat qm = st.Q.matrix() * rotation_exp(ek, -step).matrix();
            fd_q(k) =
                (collinearity_measure(sys, clf, cbf, ShapedState{x, RotationQ(qp)}) -
                 collinearity_measure(sys, clf, cbf, ShapedState{x, RotationQ(qm)})) /
                (2.0 * step);
        }
        const double rx = (gd.grad_x - fd_x).norm() /
                          std::max({1.0, gd.grad_x.norm(), fd_x.norm()});
        const double rq = (gd.grad_q - fd_q).norm() /
                          std::max({1.0, gd.grad_q.norm(), fd_q.norm()});
        const double r = std::max(rx, rq);
        if (r > max_rel) {
            max_rel = r;
            if (r > worst.rel) worst = GradCheckWorst{r, x, tag};
        }
    }
    return max_rel;
}

int cmd_gradcheck(const std::string& scenario_path, int samples, uint64_t seed,
                  bool corrupt) {
    const Scenario scn = load_scenario(scenario_path);
    const ControlAffineSystem sys = make_system(scn);
    const QuadraticClf clf = make_clf(scn);
    const CircularObstacleCbf cbf = make_cbf(scn);

    if (samples <= 0) {
        std::cout << "gradcheck: 0 samples requested; nothing verified (vacuous pass)\n";
        return kExitOk;
    }

    std::mt19937_64 rng(seed);
    GradCheckWorst worst;
    const double scen_rel =
        check_gradients(sys, clf, cbf, rng, samples, 6.0, corrupt, "scenario", worst);

    // state-dependent input matrix; sampled on a smaller box where the
    // difference oracle keeps enough digits against the (1+x1^2)^2 growth
    const ControlAffineSystem syn = synthetic_varying_g();
    const double syn_rel =
        check_gradients(syn, clf, cbf, rng, samples, 2.5, corrupt, "synthetic-g", worst);

    std::cout << "gradcheck: " << samples << " samples per system, seed " << seed << "\n";
    std::cout << "  scenario system max rel err   = " << fmt17(scen_rel) << "\n";
    std::cout << "  synthetic-g system max rel err = " << fmt17(syn_rel) << "\n";
    const double tol = 1e-5;
    if (std::max(scen_rel, syn_rel) <= tol) {
        std::cout << "gradcheck: PASS (tolerance " << tol << ")\n";
        return kExitOk;
    }
    std::cout << "gradcheck: FAIL (tolerance " << tol << "); worst sample [" << worst.tag
              << "] x = (";
    for (Eigen::Index d = 0; d < worst.x.size(); ++d) {
        std::cout << (d ? ", " : "") << fmt17(worst.x(d));
    }
    std::cout << ") rel = " << fmt17(worst.rel) << "\n";
    return kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safety-filter QP controllers: simulation, equilibrium analysis, "
                 "figure reproduction"};
    app.require_subcommand(1);

    std::string scenario_path, controller = "nominal", ic_text, out_path, outdir;
    int figure = 1;
    int samples = 100;
    uint64_t seed = 42;
    bool corrupt = false;

    auto* sim = app.add_subcommand("simulate", "integrate one closed-loop run");
    sim->add_option("--scenario", scenario_path, "scenario file")->required();
    sim->add_option("--controller", controller, "nominal|shaped");
    sim->add_option("--ic", ic_text, "initial state 'x1,x2'")->required();
    sim->add_option("--out", out_path, "output CSV path")->required();

    auto* eq = app.add_subcommand("equilibria", "closed-loop equilibrium table");
    eq->add_option("--scenario", scenario_path, "scenario file")->required();
    eq->add_option("--out", out_path, "output CSV path")->required();

    auto* sw = app.add_subcommand("sweep", "run every initial condition of the scenario");
    sw->add_option("--scenario", scenario_path, "scenario file")->required();
    sw->add_option("--controller", controller, "nominal|shaped");
    sw->add_option("--outdir", outdir, "output directory")->required();

    auto* rep = app.add_subcommand("reproduce", "canonical phase portraits");
    rep->add_option("--figure", figure, "1..4")->required();
    rep->add_option("--outdir", outdir, "output directory")->required();

    auto* gc = app.add_subcommand("gradcheck", "verify analytic D-gradients");
    gc->add_option("--scenario", scenario_path, "scenario file")->required();
    gc->add_option("--samples", samples, "random samples per system");
    gc->add_option("--seed", seed, "RNG seed");
    gc->add_flag("--corrupt", corrupt, "negative control: perturb the analytic gradient")
        ->group("");  // hidden test hook

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(scenario_path, controller, ic_text, out_path);
        if (eq->parsed()) return cmd_equilibria(scenario_path, out_path);
        if (sw->parsed()) return cmd_sweep(scenario_path, controller, outdir);
        if (rep->parsed()) return cmd_reproduce(figure, outdir);
        if (gc->parsed()) return cmd_gradcheck(scenario_path, samples, seed, corrupt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SimError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return kExitSim;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSim;
    }
    return kExitConfig;
}
