#pragma once

#include <string>

#include "cbfqp/sim.hpp"

namespace cbfqp {

enum class SystemKind { integrator, f1, f2 };

const char* to_string(SystemKind k);

// Parsed scenario file: versioned key=value sections. Rings in [ics] are
// expanded to explicit points at parse time.
struct Scenario {
    int format_version = 1;
    SystemKind system = SystemKind::integrator;
    int n = 2;
    Vec lambda;   // CLF diagonal
    Vec center;   // obstacle
    double radius = 1.0;
    NominalGains nominal;
    ShapedGains shaped;
    SimConfig sim;
    std::vector<Vec> ics;
};

// Throws ConfigError with "<file>:<line>:" context on malformed input,
// unknown keys, or missing required keys.
Scenario parse_scenario(const std::string& text, const std::string& filename);
Scenario load_scenario(const std::string& path);

// Canonical form: fixed section order, one key per line, rings expanded to
// points. Parsing the output reproduces the same scenario.
std::string serialize_scenario(const Scenario& s);

ControlAffineSystem make_system(const Scenario& s);
QuadraticClf make_clf(const Scenario& s);
CircularObstacleCbf make_cbf(const Scenario& s);

}  // namespace cbfqp
