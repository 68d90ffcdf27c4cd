// Compares the serial reference paths against the OpenMP kernels for the
// embarrassingly parallel work: IC sweeps, the boundary angle scan, and the
// interior grid search. Results must match exactly; timings are informative.
#include <cstdio>
#include <numbers>
#include <string>

#include "cbfqp/equilibria.hpp"
#include "cbfqp/sim.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace cbfqp;

namespace {

double now() {
#ifdef _OPENMP
    return omp_get_wtime();
#else
    return static_cast<double>(clock()) / CLOCKS_PER_SEC;
#endif
}

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

struct Row {
    const char* kernel;
    double serial_s;
    double parallel_s;
    bool equal;
};

}  // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--quick") quick = true;
    }

    const auto sys = builtin_system(BuiltinSystem::f1, 2);
    const QuadraticClf clf(v2(6, 1));
    const CircularObstacleCbf cbf(v2(0, 3), 1.5);
    const NominalGains ng;
    const ShapedGains sg;

    std::vector<Row> rows;

    {
        std::vector<Vec> ics;
        const int count = quick ? 4 : 16;
        for (int i = 0; i < count; ++i) {
            const double th = std::numbers::pi / 12 + 2 * std::numbers::pi * i / count;
            ics.push_back(v2(6 * std::cos(th), 6 * std::sin(th)));
        }
        SimConfig cfg;
        cfg.t_final = quick ? 2.0 : 20.0;
        double t0 = now();
        const SweepResult ser =
            sweep(sys, clf, cbf, ng, sg, ControllerKind::nominal, ics, cfg, {}, Exec::serial);
        double t1 = now();
        const SweepResult par = sweep(sys, clf, cbf, ng, sg, ControllerKind::nominal, ics,
                                      cfg, {}, Exec::parallel);
        double t2 = now();
        bool equal = ser.records.size() == par.records.size();
        for (size_t i = 0; equal && i < ser.records.size(); ++i) {
            equal = ser.records[i].t.size() == par.records[i].t.size();
            for (size_t k = 0; equal && k < ser.records[i].t.size(); ++k) {
                equal = ser.records[i].x[k] == par.records[i].x[k];
            }
        }
        rows.push_back(Row{"ic_sweep", t1 - t0, t2 - t1, equal});
    }

    {
        BoundaryScanOptions ser_opts;
        ser_opts.exec = Exec::serial;
        ser_opts.theta_step = quick ? 1e-3 : 1e-4;
        BoundaryScanOptions par_opts = ser_opts;
        par_opts.exec = Exec::parallel;
        double t0 = now();
        const BoundaryScan ser = find_boundary_equilibria(sys, clf, cbf, ng, ser_opts);
        double t1 = now();
        const BoundaryScan par = find_boundary_equilibria(sys, clf, cbf, ng, par_opts);
        double t2 = now();
        bool equal = ser.reports.size() == par.reports.size();
        for (size_t i = 0; equal && i < ser.reports.size(); ++i) {
            equal = ser.reports[i].x == par.reports[i].x;
        }
        rows.push_back(Row{"boundary_scan", t1 - t0, t2 - t1, equal});
    }

    {
        InteriorScanOptions ser_opts;
        ser_opts.exec = Exec::serial;
        ser_opts.grid = quick ? 30 : 80;
        InteriorScanOptions par_opts = ser_opts;
        par_opts.exec = Exec::parallel;
        const Vec lo = v2(-6, -6), hi = v2(6, 6);
        double t0 = now();
        const auto ser = find_interior_equilibria(sys, clf, cbf, ng, lo, hi, ser_opts);
        double t1 = now();
        const auto par = find_interior_equilibria(sys, clf, cbf, ng, lo, hi, par_opts);
        double t2 = now();
        bool equal = ser.size() == par.size();
        for (size_t i = 0; equal && i < ser.size(); ++i) equal = ser[i].x == par[i].x;
        rows.push_back(Row{"interior_scan", t1 - t0, t2 - t1, equal});
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    std::printf("%-14s %10s %10s %8s %s\n", "kernel", "serial[s]", "openmp[s]", "speedup",
                "identical");
    int bad = 0;
    for (const auto& r : rows) {
        std::printf("%-14s %10.3f %10.3f %7.2fx %s\n", r.kernel, r.serial_s, r.parallel_s,
                    r.serial_s / std::max(1e-9, r.parallel_s), r.equal ? "yes" : "NO");
        if (!r.equal) ++bad;
    }
    return bad == 0 ? 0 : 1;
}
