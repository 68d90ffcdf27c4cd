#pragma once

#include <iosfwd>
#include <string>

#include "cbfqp/equilibria.hpp"
#include "cbfqp/sim.hpp"

namespace cbfqp {

// 17 significant digits: doubles round-trip exactly through this.
std::string fmt17(double v);

// Header: t,x1..xn,u1..um,w,h,V,case and, for shaped records, D,h_D,omega1..
// UNIX newlines, UTF-8, constant column count.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);
TrajectoryRecord read_trajectory_csv(std::istream& is);

void write_equilibria_csv(std::ostream& os, const EquilibriumAnalysis& an);

// Sidecar summary for a run: key = value lines.
void write_run_summary(std::ostream& os, const TrajectoryRecord& rec);

}  // namespace cbfqp
