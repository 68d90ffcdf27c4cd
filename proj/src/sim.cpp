#include "cbfqp/sim.hpp"

#include <chrono>
#include <cmath>

namespace cbfqp {

namespace {

struct CaptureTracker {
    std::vector<Vec> candidates;
    std::vector<long> counts;
    double radius;
    long hold_steps;

    CaptureTracker(const Vec& origin, const std::vector<Vec>& known, const SimConfig& cfg) {
        candidates.push_back(origin);
        for (const auto& p : known) {
            bool dup = false;
            for (const auto& c : candidates) {
                if ((c - p).norm() < 1e-12) dup = true;
            }
            if (!dup) candidates.push_back(p);
        }
        counts.assign(candidates.size(), 0);
        radius = cfg.convergence_radius;
        hold_steps = std::lround(cfg.convergence_hold / cfg.dt);
    }

    // Index of a candidate held within `radius` for the hold window, else -1.
    int update(const Vec& x) {
        int hit = -1;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < candidates.size(); ++i) {
            const double d = (x - candidates[i]).norm();
            if (d <= radius) {
                if (++counts[i] >= hold_steps && d < best) {
                    best = d;
                    hit = static_cast<int>(i);
                }
            } else {
                counts[i] = 0;
            }
        }
        return hit;
    }
};

// Ring buffer over the hold window for the unresolved-attractor fallback.
struct TrailWindow {
    std::vector<Vec> buf;
    size_t head = 0;
    size_t filled = 0;

    explicit TrailWindow(const SimConfig& cfg) {
        buf.resize(std::max<long>(2, std::lround(cfg.convergence_hold / cfg.dt)));
    }
    void push(const Vec& x) {
        buf[head] = x;
        head = (head + 1) % buf.size();
        filled = std::min(filled + 1, buf.size());
    }
    bool stationary(double radius, Vec* mean_out) const {
        if (filled < buf.size()) return false;
        Vec mean = Vec::Zero(buf[0].size());
        for (const auto& v : buf) mean += v;
        mean /= static_cast<double>(buf.size());
        for (const auto& v : buf) {
            if ((v - mean).norm() > radius) return false;
        }
        if (mean_out) *mean_out = mean;
        return true;
    }
};

long step_count(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.t_final > cfg.dt)) {
        throw SimError("SimConfig: need 0 < dt < t_final");
    }
    return std::lround(cfg.t_final / cfg.dt);
}

}  // namespace

TrajectoryRecord simulate_nominal(const ControlAffineSystem& sys, const Clf& clf,
                                  const Cbf& cbf, const NominalGains& gains,
                                  const Vec& x0, const SimConfig& cfg,
                                  const std::vector<Vec>& known_equilibria) {
    if (cbf.value(x0) < 0.0) throw SimError("simulate_nominal: initial state is unsafe");
    const auto t_start = std::chrono::steady_clock::now();

    TrajectoryRecord rec;
    rec.n = sys.n;
    rec.m = sys.m;
    rec.shaped = false;
    rec.dt = cfg.dt * cfg.record_stride;

    CaptureTracker capture(Vec::Zero(sys.n), known_equilibria, cfg);
    TrailWindow window(cfg);
    const long nsteps = step_count(cfg);

    Vec x = x0;
    const auto record_sample = [&](double t, const Vec& xs, const ControlOutput& c) {
        rec.t.push_back(t);
        rec.x.push_back(xs);
        rec.u.push_back(c.u);
        rec.w.push_back(c.w);
        rec.h.push_back(cbf.value(xs));
        rec.V.push_back(clf.value(xs));
        rec.case_label.push_back(to_string(c.case_label));
    };

    long k = 0;
    try {
        for (; k < nsteps; ++k) {
            const double t = k * cfg.dt;
            const ControlOutput ck = solve_nominal(sys, clf, cbf, gains, x);
            rec.min_h = std::min(rec.min_h, cbf.value(x));
            if (k % cfg.record_stride == 0) record_sample(t, x, ck);

            window.push(x);
            const int hit = capture.update(x);
            if (hit >= 0 && cfg.stop_on_capture) {
                rec.terminal.kind = TerminalKind::converged;
                rec.terminal.point = capture.candidates[hit];
                rec.terminal.time = t;
                break;
            }

            const auto deriv = [&](const Vec& xs) -> Vec {
                const Vec u = cfg.sample_and_hold
                                  ? ck.u
                                  : solve_nominal(sys, clf, cbf, gains, xs).u;
                return sys.f(xs) + sys.g(xs) * u;
            };
            const Vec k1 = deriv(x);
            const Vec k2 = deriv(x + 0.5 * cfg.dt * k1);
            const Vec k3 = deriv(x + 0.5 * cfg.dt * k2);
            const Vec k4 = deriv(x + cfg.dt * k3);
            x += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!x.allFinite()) throw SimError("state became non-finite");
        }
        rec.min_h = std::min(rec.min_h, cbf.value(x));
        if (rec.terminal.kind != TerminalKind::converged) {
            Vec mean;
            rec.terminal.time = nsteps * cfg.dt;
            if (window.stationary(cfg.convergence_radius, &mean)) {
                rec.terminal.kind = TerminalKind::converged;
                rec.terminal.point = mean;
            } else {
                rec.terminal.kind = TerminalKind::t_final_reached;
            }
        }
        // closing sample
        if (rec.t.empty() || rec.t.back() < k * cfg.dt) {
            record_sample(std::min(k, nsteps) * cfg.dt, x,
                          solve_nominal(sys, clf, cbf, gains, x));
        }
    } catch (const Error& e) {
        rec.terminal.kind = TerminalKind::error;
        rec.terminal.time = k * cfg.dt;
        rec.terminal.reason = e.what();
    }

    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

TrajectoryRecord simulate_shaped(const ControlAffineSystem& sys, const Clf& vr,
                                 const Cbf& cbf, const ShapedGains& gains,
                                 const Vec& x0, const SimConfig& cfg,
                                 const std::vector<Vec>& known_equilibria) {
    if (cbf.value(x0) < 0.0) throw SimError("simulate_shaped: initial state is unsafe");
    const auto t_start = std::chrono::steady_clock::now();

    TrajectoryRecord rec;
    rec.n = sys.n;
    rec.m = sys.m;
    rec.shaped = true;
    rec.dt = cfg.dt * cfg.record_stride;
    rec.min_h_D = std::numeric_limits<double>::infinity();

    CaptureTracker capture(Vec::Zero(sys.n), known_equilibria, cfg);
    TrailWindow window(cfg);
    const long nsteps = step_count(cfg);

    Vec x = x0;
    RotationQ Q = RotationQ::identity(sys.n);

    const auto record_sample = [&](double t, const ShapedState& s,
                                   const ShapedControlOutput& c) {
        rec.t.push_back(t);
        rec.x.push_back(s.x);
        rec.u.push_back(c.u);
        rec.omega.push_back(c.omega);
        rec.Q.push_back(s.Q.matrix());
        rec.w.push_back(c.w);
        rec.h.push_back(cbf.value(s.x));
        rec.V.push_back(rotated_clf(vr, s).value);
        rec.D.push_back(collinearity_measure(sys, vr, cbf, s));
        rec.h_D.push_back(hd_value(sys, vr, cbf, s, gains));
        rec.case_label.push_back(shaped_case_label(c.active_mask));
    };

    long k = 0;
    try {
        for (; k < nsteps; ++k) {
            const double t = k * cfg.dt;
            const ShapedState sk{x, Q};
            const ShapedControlOutput ck = solve_shaped(sys, vr, cbf, gains, sk);
            rec.min_h = std::min(rec.min_h, cbf.value(x));
            rec.min_h_D = std::min(rec.min_h_D, hd_value(sys, vr, cbf, sk, gains));
            rec.max_rotation_drift = std::max(rec.max_rotation_drift, Q.orthogonality_defect());
            if (k % cfg.record_stride == 0) record_sample(t, sk, ck);

            window.push(x);
            const int hit = capture.update(x);
            if (hit >= 0 && cfg.stop_on_capture) {
                rec.terminal.kind = TerminalKind::converged;
                rec.terminal.point = capture.candidates[hit];
                rec.terminal.time = t;
                break;
            }

            struct Deriv {
                Vec dx;
                Mat dq;
            };
            const auto deriv = [&](const Vec& xs, const Mat& qs_raw) -> Deriv {
                const ShapedState ss{xs, rotation_retract(qs_raw)};
                Vec u = ck.u;
                Vec om = ck.omega;
                if (!cfg.sample_and_hold) {
                    const ShapedControlOutput c = solve_shaped(sys, vr, cbf, gains, ss);
                    u = c.u;
                    om = c.omega;
                }
                return Deriv{Vec(sys.f(xs) + sys.g(xs) * u),
                             Mat(ss.Q.matrix() * skew(om))};
            };

            const Mat& q0 = Q.matrix();
            const Deriv d1 = deriv(x, q0);
            const Deriv d2 = deriv(x + 0.5 * cfg.dt * d1.dx, q0 + 0.5 * cfg.dt * d1.dq);
            const Deriv d3 = deriv(x + 0.5 * cfg.dt * d2.dx, q0 + 0.5 * cfg.dt * d2.dq);
            const Deriv d4 = deriv(x + cfg.dt * d3.dx, q0 + cfg.dt * d3.dq);
            x += (cfg.dt / 6.0) * (d1.dx + 2.0 * d2.dx + 2.0 * d3.dx + d4.dx);
            const Mat qn =
                q0 + (cfg.dt / 6.0) * (d1.dq + 2.0 * d2.dq + 2.0 * d3.dq + d4.dq);
            Q = rotation_retract(qn);
            if (!x.allFinite()) throw SimError("state became non-finite");
        }
        const ShapedState sf{x, Q};
        rec.min_h = std::min(rec.min_h, cbf.value(x));
        rec.min_h_D = std::min(rec.min_h_D, hd_value(sys, vr, cbf, sf, gains));
        rec.max_rotation_drift = std::max(rec.max_rotation_drift, Q.orthogonality_defect());
        if (rec.terminal.kind != TerminalKind::converged) {
            Vec mean;
            rec.terminal.time = nsteps * cfg.dt;
            if (window.stationary(cfg.convergence_radius, &mean)) {
                rec.terminal.kind = TerminalKind::converged;
                rec.terminal.point = mean;
            } else {
                rec.terminal.kind = TerminalKind::t_final_reached;
            }
        }
        if (rec.t.empty() || rec.t.back() < k * cfg.dt) {
            record_sample(std::min(k, nsteps) * cfg.dt, sf,
                          solve_shaped(sys, vr, cbf, gains, sf));
        }
    } catch (const Error& e) {
        rec.terminal.kind = TerminalKind::error;
        rec.terminal.time = k * cfg.dt;
        rec.terminal.reason = e.what();
    }

    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

SweepResult sweep(const ControlAffineSystem& sys, const Clf& clf, const Cbf& cbf,
                  const NominalGains& ngains, const ShapedGains& sgains,
                  ControllerKind kind, const std::vector<Vec>& ics,
                  const SimConfig& cfg, const std::vector<Vec>& known_equilibria,
                  Exec exec) {
    for (const auto& ic : ics) {
        if (cbf.value(ic) < 0.0) throw SimError("sweep: an initial condition is unsafe");
    }

    SweepResult out;
    out.records.resize(ics.size());
    const bool par = exec == Exec::parallel;
    const int nic = static_cast<int>(ics.size());
#pragma omp parallel for schedule(dynamic) if (par)
    for (int i = 0; i < nic; ++i) {
        try {
            out.records[i] = (kind == ControllerKind::nominal)
                                 ? simulate_nominal(sys, clf, cbf, ngains, ics[i], cfg,
                                                    known_equilibria)
                                 : simulate_shaped(sys, clf, cbf, sgains, ics[i], cfg,
                                                   known_equilibria);
        } catch (const std::exception& e) {
            TrajectoryRecord rec;
            rec.n = sys.n;
            rec.m = sys.m;
            rec.terminal.kind = TerminalKind::error;
            rec.terminal.reason = e.what();
            out.records[i] = std::move(rec);
        }
    }

    // Attractor table: clusters are seeded with the known equilibria so that
    // trailing-window estimates near one of them merge into its row.
    const double cluster_radius = 10.0 * cfg.convergence_radius;
    std::vector<SweepSummary::Row> rows;
    {
        SweepSummary::Row origin_row;
        origin_row.attractor = Vec::Zero(sys.n);
        rows.push_back(origin_row);
        for (const auto& p : known_equilibria) {
            bool dup = false;
            for (const auto& r : rows) {
                if ((r.attractor - p).norm() < 1e-9) dup = true;
            }
            if (!dup) rows.push_back(SweepSummary::Row{p, 0, {}});
        }
    }
    for (int i = 0; i < nic; ++i) {
        const auto& rec = out.records[i];
        if (rec.terminal.kind == TerminalKind::error) {
            ++out.summary.error_count;
            continue;
        }
        if (rec.terminal.kind == TerminalKind::t_final_reached) {
            ++out.summary.unresolved_count;
            continue;
        }
        bool placed = false;
        for (auto& r : rows) {
            if ((r.attractor - rec.terminal.point).norm() <= cluster_radius) {
                ++r.count;
                r.ic_indices.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) {
            rows.push_back(SweepSummary::Row{rec.terminal.point, 1, {i}});
        }
    }
    for (auto& r : rows) {
        if (r.count > 0) out.summary.rows.push_back(std::move(r));
    }
    return out;
}

}  // namespace cbfqp
