#include "cbfqp/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace cbfqp {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
    os << "t";
    for (int i = 1; i <= rec.n; ++i) os << ",x" << i;
    for (int i = 1; i <= rec.m; ++i) os << ",u" << i;
    os << ",w,h,V,case";
    const int k = rec.shaped ? omega_dim(rec.n) : 0;
    if (rec.shaped) {
        os << ",D,h_D";
        for (int i = 1; i <= k; ++i) os << ",omega" << i;
    }
    os << "\n";

    for (size_t s = 0; s < rec.t.size(); ++s) {
        os << fmt17(rec.t[s]);
        for (int i = 0; i < rec.n; ++i) os << ',' << fmt17(rec.x[s](i));
        for (int i = 0; i < rec.m; ++i) os << ',' << fmt17(rec.u[s](i));
        os << ',' << fmt17(rec.w[s]) << ',' << fmt17(rec.h[s]) << ',' << fmt17(rec.V[s])
           << ',' << rec.case_label[s];
        if (rec.shaped) {
            os << ',' << fmt17(rec.D[s]) << ',' << fmt17(rec.h_D[s]);
            for (int i = 0; i < k; ++i) os << ',' << fmt17(rec.omega[s](i));
        }
        os << '\n';
    }
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

double to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw Error("CSV: expected number, got '" + s + "'");
    return v;
}

}  // namespace

TrajectoryRecord read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error("CSV: empty stream");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> hdr = split(line);

    TrajectoryRecord rec;
    int n = 0, m = 0, k = 0;
    for (const auto& c : hdr) {
        if (c.size() >= 2 && c[0] == 'x') n = std::max(n, std::stoi(c.substr(1)));
        if (c.size() >= 2 && c[0] == 'u') m = std::max(m, std::stoi(c.substr(1)));
        if (c.rfind("omega", 0) == 0) k = std::max(k, std::stoi(c.substr(5)));
    }
    rec.n = n;
    rec.m = m;
    rec.shaped = k > 0;

    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line);
        if (f.size() != hdr.size()) throw Error("CSV: ragged row");
        size_t i = 0;
        rec.t.push_back(to_double(f[i++]));
        Vec x(n);
        for (int d = 0; d < n; ++d) x(d) = to_double(f[i++]);
        rec.x.push_back(x);
        Vec u(m);
        for (int d = 0; d < m; ++d) u(d) = to_double(f[i++]);
        rec.u.push_back(u);
        rec.w.push_back(to_double(f[i++]));
        rec.h.push_back(to_double(f[i++]));
        rec.V.push_back(to_double(f[i++]));
        rec.case_label.push_back(f[i++]);
        if (rec.shaped) {
            rec.D.push_back(to_double(f[i++]));
            rec.h_D.push_back(to_double(f[i++]));
            Vec om(k);
            for (int d = 0; d < k; ++d) om(d) = to_double(f[i++]);
            rec.omega.push_back(om);
        }
    }
    if (rec.t.size() >= 2) rec.dt = rec.t[1] - rec.t[0];
    for (const double h : rec.h) rec.min_h = std::min(rec.min_h, h);
    if (rec.shaped) {
        rec.min_h_D = std::numeric_limits<double>::infinity();
        for (const double v : rec.h_D) rec.min_h_D = std::min(rec.min_h_D, v);
    }
    return rec;
}

namespace {

void equilibrium_row(std::ostream& os, const EquilibriumReport& r, bool continuum) {
    os << to_string(r.kind);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) os << ',' << fmt17(r.x(i));
    os << ',' << fmt17(r.c) << ',' << fmt17(r.tangent_form_value) << ','
       << fmt17(r.full_form_min_eig) << ',' << to_string(r.verdict);
    for (const auto& e : r.eigenvalues) {
        os << ',' << fmt17(e.real()) << ',' << fmt17(e.imag());
    }
    os << ',' << fmt17(r.closed_loop_residual) << ',' << (continuum ? 1 : 0) << '\n';
}

}  // namespace

void write_equilibria_csv(std::ostream& os, const EquilibriumAnalysis& an) {
    const int n = static_cast<int>(an.origin.x.size());
    os << "kind";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    os << ",c,tangent_form_value,full_form_min_eig,verdict";
    for (int i = 1; i <= n; ++i) os << ",eig" << i << "_re,eig" << i << "_im";
    os << ",residual,degenerate_continuum\n";

    equilibrium_row(os, an.origin, false);
    for (const auto& r : an.interior) equilibrium_row(os, r, false);
    for (const auto& r : an.boundary.reports) {
        equilibrium_row(os, r, an.boundary.degenerate_continuum);
    }
}

void write_run_summary(std::ostream& os, const TrajectoryRecord& rec) {
    switch (rec.terminal.kind) {
        case TerminalKind::converged: {
            os << "terminal = converged_to\n";
            os << "terminal_point =";
            for (Eigen::Index i = 0; i < rec.terminal.point.size(); ++i) {
                os << (i ? ", " : " ") << fmt17(rec.terminal.point(i));
            }
            os << "\n";
            break;
        }
        case TerminalKind::t_final_reached:
            os << "terminal = t_final_reached\n";
            break;
        case TerminalKind::error:
            os << "terminal = error\n";
            os << "reason = " << rec.terminal.reason << "\n";
            break;
    }
    os << "terminal_time = " << fmt17(rec.terminal.time) << "\n";
    os << "min_h = " << fmt17(rec.min_h) << "\n";
    if (rec.shaped) {
        os << "min_h_D = " << fmt17(rec.min_h_D) << "\n";
        os << "max_rotation_drift = " << fmt17(rec.max_rotation_drift) << "\n";
    }
    os << "samples = " << rec.t.size() << "\n";
    os << "runtime_s = " << fmt17(rec.runtime_seconds) << "\n";
}

}  // namespace cbfqp
