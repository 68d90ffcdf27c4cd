#pragma once

#include <string>
#include <vector>

#include "cbfqp/nominal.hpp"
#include "cbfqp/shaped.hpp"

namespace cbfqp {

struct SimConfig {
    double dt = 1e-3;
    double t_final = 50.0;
    double convergence_radius = 1e-2;
    double convergence_hold = 1.0;       // seconds the radius must be held
    double monitors_tolerance = 1e-6;    // alarm threshold used by consumers
    bool sample_and_hold = false;        // hold u across the RK4 stages
    int record_stride = 1;               // sample every k-th step
    bool stop_on_capture = true;         // stop when a known equilibrium holds
};

enum class TerminalKind { converged, t_final_reached, error };

struct Terminal {
    TerminalKind kind = TerminalKind::t_final_reached;
    Vec point;            // attractor estimate when kind == converged
    double time = 0.0;    // when the terminal condition fired
    std::string reason;   // error description
};

// Columnar trajectory storage. Q/omega/D/h_D are filled for shaped runs only.
// Monitors (min_h, min_h_D, max rotation drift) are tracked at every
// integration step even when record_stride > 1.
struct TrajectoryRecord {
    int n = 0;
    int m = 0;
    bool shaped = false;
    double dt = 0.0;  // time between recorded samples
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> u;
    std::vector<Vec> omega;
    std::vector<Mat> Q;
    std::vector<double> w;
    std::vector<double> h;
    std::vector<double> V;
    std::vector<double> D;
    std::vector<double> h_D;
    std::vector<std::string> case_label;
    Terminal terminal;
    double min_h = std::numeric_limits<double>::infinity();
    double min_h_D = std::numeric_limits<double>::quiet_NaN();
    double max_rotation_drift = 0.0;
    double runtime_seconds = 0.0;
};

// Closed-loop RK4 under the two-row controller; the QP is re-solved at every
// stage unless cfg.sample_and_hold. Requires h(x0) >= 0. Runtime failures
// (infeasible QP, NaN state) end the record with an error terminal.
TrajectoryRecord simulate_nominal(const ControlAffineSystem& sys, const Clf& clf,
                                  const Cbf& cbf, const NominalGains& gains,
                                  const Vec& x0, const SimConfig& cfg,
                                  const std::vector<Vec>& known_equilibria = {});

// RK4 on the pair (x, Q) with Q re-orthonormalized by polar retraction after
// every full step; Q(0) = I.
TrajectoryRecord simulate_shaped(const ControlAffineSystem& sys, const Clf& vr,
                                 const Cbf& cbf, const ShapedGains& gains,
                                 const Vec& x0, const SimConfig& cfg,
                                 const std::vector<Vec>& known_equilibria = {});

enum class ControllerKind { nominal, shaped };

struct SweepSummary {
    struct Row {
        Vec attractor;
        int count = 0;
        std::vector<int> ic_indices;
    };
    std::vector<Row> rows;
    int error_count = 0;
    int unresolved_count = 0;  // runs that reached t_final without converging
};

struct SweepResult {
    std::vector<TrajectoryRecord> records;  // one per initial condition, in order
    SweepSummary summary;
};

// One record per initial condition; records are independent and may be
// integrated concurrently, merged in input order. Individual failures are
// recorded and the sweep continues.
SweepResult sweep(const ControlAffineSystem& sys, const Clf& clf, const Cbf& cbf,
                  const NominalGains& ngains, const ShapedGains& sgains,
                  ControllerKind kind, const std::vector<Vec>& ics,
                  const SimConfig& cfg, const std::vector<Vec>& known_equilibria = {},
                  Exec exec = Exec::parallel);

}  // namespace cbfqp
