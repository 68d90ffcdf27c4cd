#include "cbfqp/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace cbfqp {

const char* to_string(SystemKind k) {
    switch (k) {
        case SystemKind::integrator: return "integrator";
        case SystemKind::f1: return "f1";
        case SystemKind::f2: return "f2";
    }
    return "?";
}

namespace {

[[noreturn]] void fail(const std::string& file, int line, const std::string& msg) {
    throw ConfigError(file + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& file, int line, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || !std::isfinite(d)) {
        fail(file, line, "expected a number, got '" + v + "'");
    }
    return d;
}

bool parse_bool(const std::string& file, int line, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(file, line, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& file, int line, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_double(file, line, trim(item)));
    }
    if (out.empty()) fail(file, line, "expected a comma-separated list");
    return out;
}

Vec to_vec(const std::vector<double>& v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

struct Entry {
    std::string value;
    int line;
};

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& filename) {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"system", {"name", "n"}},
        {"clf", {"lambda"}},
        {"obstacle", {"center", "radius"}},
        {"nominal", {"p", "gamma", "alpha"}},
        {"shaped", {"p", "q", "gamma", "alpha", "beta", "epsilon", "sigma_scale"}},
        {"sim",
         {"dt", "t_final", "convergence_radius", "convergence_hold",
          "monitors_tolerance", "sample_and_hold", "record_stride"}},
        {"ics", {"point", "ring"}},
    };

    std::map<std::string, std::map<std::string, Entry>> kv;
    std::vector<std::pair<Entry, bool>> ic_entries;  // value, is_ring
    bool version_seen = false;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(filename, line, "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!schema.count(section)) fail(filename, line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(filename, line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (section.empty()) {
            if (key != "format_version") {
                fail(filename, line, "expected format_version before any section");
            }
            if (version_seen) fail(filename, line, "duplicate format_version");
            if (value != "1") fail(filename, line, "unsupported format_version '" + value + "'");
            version_seen = true;
            continue;
        }
        if (!schema.at(section).count(key)) {
            fail(filename, line, "unknown key '" + key + "' in [" + section + "]");
        }
        if (section == "ics") {
            ic_entries.push_back({Entry{value, line}, key == "ring"});
            continue;
        }
        if (kv[section].count(key)) fail(filename, line, "duplicate key '" + key + "'");
        kv[section][key] = Entry{value, line};
    }
    if (!version_seen) fail(filename, 1, "missing format_version");

    const auto need = [&](const std::string& sec, const std::string& key) -> Entry {
        auto si = kv.find(sec);
        if (si == kv.end() || !si->second.count(key)) {
            fail(filename, 1, "missing required key '" + key + "' in [" + sec + "]");
        }
        return si->second.at(key);
    };
    const auto get = [&](const std::string& sec, const std::string& key,
                         auto parse_fn, auto fallback) {
        auto si = kv.find(sec);
        if (si == kv.end() || !si->second.count(key)) return fallback;
        const Entry& e = si->second.at(key);
        return parse_fn(filename, e.line, e.value);
    };
    const auto getd = [&](const std::string& sec, const std::string& key, double dflt) {
        return get(sec, key, parse_double, dflt);
    };

    Scenario s;
    {
        const Entry name = need("system", "name");
        if (name.value == "integrator") s.system = SystemKind::integrator;
        else if (name.value == "f1") s.system = SystemKind::f1;
        else if (name.value == "f2") s.system = SystemKind::f2;
        else fail(filename, name.line, "unknown system '" + name.value + "'");
    }
    s.n = static_cast<int>(getd("system", "n", 2.0));
    if (s.n != 2 && s.n != 3) fail(filename, 1, "n must be 2 or 3");

    {
        const Entry lam = need("clf", "lambda");
        s.lambda = to_vec(parse_list(filename, lam.line, lam.value));
        if (s.lambda.size() != s.n) fail(filename, lam.line, "lambda size must equal n");
    }
    {
        const Entry c = need("obstacle", "center");
        s.center = to_vec(parse_list(filename, c.line, c.value));
        if (s.center.size() != s.n) fail(filename, c.line, "center size must equal n");
        const Entry r = need("obstacle", "radius");
        s.radius = parse_double(filename, r.line, r.value);
        if (!(s.radius > 0.0)) fail(filename, r.line, "radius must be positive");
    }

    s.nominal.p = getd("nominal", "p", 5.0);
    s.nominal.gamma = ClassKappa(getd("nominal", "gamma", 1.0));
    s.nominal.alpha = ClassKappa(getd("nominal", "alpha", 1.0));

    s.shaped.p = getd("shaped", "p", 5.0);
    s.shaped.q = getd("shaped", "q", 5.0);
    s.shaped.gamma = ClassKappa(getd("shaped", "gamma", 1.0));
    s.shaped.alpha = ClassKappa(getd("shaped", "alpha", 1.0));
    s.shaped.beta = ClassKappa(getd("shaped", "beta", 1.0));
    s.shaped.epsilon = getd("shaped", "epsilon", 0.1);
    s.shaped.sigma_scale = getd("shaped", "sigma_scale", 1.0);
    if (!(s.shaped.epsilon > 0.0)) fail(filename, 1, "epsilon must be positive");
    if (!(s.shaped.sigma_scale > 0.0)) fail(filename, 1, "sigma_scale must be positive");

    s.sim.dt = getd("sim", "dt", 1e-3);
    s.sim.t_final = getd("sim", "t_final", 50.0);
    s.sim.convergence_radius = getd("sim", "convergence_radius", 1e-2);
    s.sim.convergence_hold = getd("sim", "convergence_hold", 1.0);
    s.sim.monitors_tolerance = getd("sim", "monitors_tolerance", 1e-6);
    s.sim.sample_and_hold = get("sim", "sample_and_hold", parse_bool, false);
    s.sim.record_stride = static_cast<int>(getd("sim", "record_stride", 1.0));
    if (!(s.sim.dt > 0.0) || !(s.sim.t_final > s.sim.dt)) {
        fail(filename, 1, "sim requires 0 < dt < t_final");
    }
    if (s.sim.record_stride < 1) fail(filename, 1, "record_stride must be >= 1");

    for (const auto& [entry, is_ring] : ic_entries) {
        const std::vector<double> vals = parse_list(filename, entry.line, entry.value);
        if (is_ring) {
            if (s.n != 2 || vals.size() != 3) {
                fail(filename, entry.line, "ring = radius, count, phase_deg (n = 2)");
            }
            const double rr = vals[0];
            const int count = static_cast<int>(vals[1]);
            const double phase = vals[2] * std::numbers::pi / 180.0;
            if (count < 1 || !(rr > 0.0)) fail(filename, entry.line, "bad ring spec");
            for (int i = 0; i < count; ++i) {
                const double th = phase + 2.0 * std::numbers::pi * i / count;
                Vec p(2);
                p << rr * std::cos(th), rr * std::sin(th);
                s.ics.push_back(p);
            }
        } else {
            if (static_cast<int>(vals.size()) != s.n) {
                fail(filename, entry.line, "point dimension must equal n");
            }
            s.ics.push_back(to_vec(vals));
        }
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string list(const Vec& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += num(v(i));
    }
    return out;
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream o;
    o << "format_version = 1\n\n";
    o << "[system]\nname = " << to_string(s.system) << "\nn = " << s.n << "\n\n";
    o << "[clf]\nlambda = " << list(s.lambda) << "\n\n";
    o << "[obstacle]\ncenter = " << list(s.center) << "\nradius = " << num(s.radius)
      << "\n\n";
    o << "[nominal]\np = " << num(s.nominal.p) << "\ngamma = " << num(s.nominal.gamma.gain)
      << "\nalpha = " << num(s.nominal.alpha.gain) << "\n\n";
    o << "[shaped]\np = " << num(s.shaped.p) << "\nq = " << num(s.shaped.q)
      << "\ngamma = " << num(s.shaped.gamma.gain) << "\nalpha = " << num(s.shaped.alpha.gain)
      << "\nbeta = " << num(s.shaped.beta.gain) << "\nepsilon = " << num(s.shaped.epsilon)
      << "\nsigma_scale = " << num(s.shaped.sigma_scale) << "\n\n";
    o << "[sim]\ndt = " << num(s.sim.dt) << "\nt_final = " << num(s.sim.t_final)
      << "\nconvergence_radius = " << num(s.sim.convergence_radius)
      << "\nconvergence_hold = " << num(s.sim.convergence_hold)
      << "\nmonitors_tolerance = " << num(s.sim.monitors_tolerance)
      << "\nsample_and_hold = " << (s.sim.sample_and_hold ? "true" : "false")
      << "\nrecord_stride = " << s.sim.record_stride << "\n\n";
    o << "[ics]\n";
    for (const auto& p : s.ics) o << "point = " << list(p) << "\n";
    return o.str();
}

ControlAffineSystem make_system(const Scenario& s) {
    switch (s.system) {
        case SystemKind::integrator: return builtin_system(BuiltinSystem::integrator, s.n);
        case SystemKind::f1: return builtin_system(BuiltinSystem::f1, s.n);
        case SystemKind::f2: return builtin_system(BuiltinSystem::f2, s.n);
    }
    throw ConfigError("make_system: unknown kind");
}

QuadraticClf make_clf(const Scenario& s) { return QuadraticClf(s.lambda); }

CircularObstacleCbf make_cbf(const Scenario& s) {
    return CircularObstacleCbf(s.center, s.radius);
}

}  // namespace cbfqp
