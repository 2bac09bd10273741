#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pfsi/core/errors.hpp"
#include "pfsi/core/grid.hpp"

namespace pfsi {

/// Initial-data selector: a generator name plus numeric parameters,
/// e.g. "single-mode 0.05 1" or "uniform 1.0".
struct FieldInit {
    std::string kind = "zero";
    std::vector<double> params;
};

struct RunConfig {
    std::string scenario = "rest";

    // geometry
    int dimension = 2;
    std::array<int, 3> nx = {32, 32, 32};
    int structure_points = 32;
    std::array<double, 3> extent = {1.0, 1.0, 1.0};
    double tube_halfwidth = 0.4;
    bool periodic_box = false; // fixed rigid box (no shell), all axes periodic

    // time
    double dt = 2.5e-3;
    double horizon = 0.1;
    double window = 0.02;

    // physics
    double forcing_f = 0.0;
    double forcing_g = 0.0;
    int forcing_mode = 1;
    double viscosity = 1.0;
    double density = 1.0;
    double solute_shear = 0.0; // prescribed uniform shear (shear-solute scenario)
    FieldInit eta0;
    FieldInit etastar;
    FieldInit u0;
    FieldInit rho0{"uniform", {1.0}};
    FieldInit T0{"equilibrium", {}};

    // fixed point
    double fp_tolerance = 1e-8;
    int fp_max_iterations = 25;
    double fp_relaxation = 1.0;
    double fp_ball_radius = 0.0;

    // lps monitor
    double lps_r = 4.0;
    double lps_s = 6.0;

    // kinetic (closure-verify scenario)
    double kin_q_extent = 6.0;
    int kin_points = 64;
    double kin_shear = 0.1;
    double kin_dt = 1e-3;
    int kin_steps = 1000;

    // output
    std::string output_dir = "out";
    int snapshot_cadence = 0; // 0: final snapshot only
    bool ledgers = true;
    bool kinetic_snapshots = false; // f snapshots can be large; gated
    unsigned seed = 1234;
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& field, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ValidationError(field, "not a number: '" + v + "'");
    }
}

inline int parse_int(const std::string& field, const std::string& v) {
    try {
        size_t pos = 0;
        int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ValidationError(field, "not an integer: '" + v + "'");
    }
}

inline std::vector<std::string> split_ws(const std::string& v) {
    std::istringstream is(v);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline FieldInit parse_init(const std::string& field, const std::string& v) {
    auto toks = split_ws(v);
    if (toks.empty()) throw ValidationError(field, "empty initial-data selector");
    FieldInit init;
    init.kind = toks[0];
    for (size_t i = 1; i < toks.size(); ++i)
        init.params.push_back(parse_number(field, toks[i]));
    return init;
}

inline bool parse_bool(const std::string& field, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ValidationError(field, "not a boolean (on/off): '" + v + "'");
}

} // namespace detail

/// Scenario presets; file keys override them afterward.
inline void apply_scenario_defaults(RunConfig& c) {
    if (c.scenario == "rest") {
        c.rho0 = {"zero", {}};
        c.T0 = {"zero", {}};
        c.horizon = 0.1;
    } else if (c.scenario == "taylor-green") {
        c.periodic_box = true;
        c.extent = {2 * M_PI, 2 * M_PI, 2 * M_PI};
        c.tube_halfwidth = M_PI / 2;
        c.nx = {64, 64, 64};
        c.u0 = {"taylor-green", {1.0}};
        c.rho0 = {"zero", {}};
        c.T0 = {"zero", {}};
        c.dt = 2e-3;
        c.horizon = 0.4;
    } else if (c.scenario == "shell-relaxation") {
        c.eta0 = {"single-mode", {0.05, 1}};
        c.rho0 = {"zero", {}};
        c.T0 = {"zero", {}};
        c.horizon = 0.2;
        c.dt = 2e-3;
    } else if (c.scenario == "shear-solute") {
        c.periodic_box = true;
        c.solute_shear = 0.5;
        c.rho0 = {"uniform", {1.0}};
        c.T0 = {"equilibrium", {}};
        c.nx = {8, 8, 8};
        c.dt = 1e-3;
        c.horizon = 1.0;
    } else if (c.scenario == "coupled-small-data") {
        c.forcing_g = 0.01;
        c.rho0 = {"uniform", {1.0}};
        c.T0 = {"equilibrium", {}};
        c.horizon = 0.2;
        c.dt = 2.5e-3;
        c.window = 0.02;
    } else if (c.scenario == "tube-breach") {
        // load amplitude pinned by the build-time bisection: the single-mode
        // steady response amp/(2 pi)^4 must exceed the 0.95 L margin
        c.forcing_g = 700.0;
        c.nx = {16, 16, 16};
        c.structure_points = 16;
        c.dt = 5e-4;
        c.horizon = 1.0;
        c.window = 0.02;
        c.fp_tolerance = 1e-6;
        c.fp_max_iterations = 40;
        c.rho0 = {"uniform", {1.0}};
        c.T0 = {"equilibrium", {}};
    } else if (c.scenario == "closure-verify") {
        c.horizon = 1.0;
    } else {
        throw ValidationError("scenario", "unknown scenario '" + c.scenario + "'");
    }
}

inline bool apply_config_key(RunConfig& c, const std::string& key, const std::string& v);
inline void validate_config(const RunConfig& c);

/// Parse the sectioned key = value configuration text. Unknown keys are
/// errors with their source location; values are validated afterward.
inline RunConfig parse_config(const std::string& text) {
    struct Entry {
        std::string key, value;
        int line, col;
    };
    std::vector<Entry> entries;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ParseError("unterminated section header", lineno,
                                 int(raw.find('[')) + 1);
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key = value", lineno, 1);
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno, 1);
        int col = int(line.find_first_not_of(" \t")) + 1;
        std::string full = section.empty() ? key : section + "." + key;
        entries.push_back({full, value, lineno, col});
    }

    // first pass: the scenario selects defaults
    RunConfig cfg;
    for (const auto& e : entries)
        if (e.key == "scenario") cfg.scenario = e.value;
    apply_scenario_defaults(cfg);

    for (const auto& e : entries) {
        if (!apply_config_key(cfg, e.key, e.value))
            throw ParseError("unknown key '" + e.key + "'", e.line, e.col);
    }
    validate_config(cfg);
    return cfg;
}

/// Apply one key (section.name form); returns false for unknown keys.
inline bool apply_config_key(RunConfig& c, const std::string& key, const std::string& v) {
    using detail::parse_bool;
    using detail::parse_init;
    using detail::parse_int;
    using detail::parse_number;

    if (key == "scenario") {
        c.scenario = v;
        return true;
    }
    if (key == "geometry.dimension") { c.dimension = parse_int(key, v); return true; }
    if (key == "geometry.nx") {
        auto toks = detail::split_ws(v);
        if (toks.empty() || toks.size() > 3)
            throw ValidationError(key, "expected 1-3 grid sizes");
        for (size_t i = 0; i < toks.size(); ++i) c.nx[i] = parse_int(key, toks[i]);
        for (size_t i = toks.size(); i < 3; ++i) c.nx[i] = c.nx[toks.size() - 1];
        return true;
    }
    if (key == "geometry.structure_points") { c.structure_points = parse_int(key, v); return true; }
    if (key == "geometry.extent") {
        auto toks = detail::split_ws(v);
        if (toks.empty() || toks.size() > 3)
            throw ValidationError(key, "expected 1-3 extents");
        for (size_t i = 0; i < toks.size(); ++i) c.extent[i] = parse_number(key, toks[i]);
        for (size_t i = toks.size(); i < 3; ++i) c.extent[i] = c.extent[toks.size() - 1];
        return true;
    }
    if (key == "geometry.tube_halfwidth") { c.tube_halfwidth = parse_number(key, v); return true; }
    if (key == "geometry.periodic_box") { c.periodic_box = parse_bool(key, v); return true; }

    if (key == "time.dt") { c.dt = parse_number(key, v); return true; }
    if (key == "time.horizon") { c.horizon = parse_number(key, v); return true; }
    if (key == "time.window") { c.window = parse_number(key, v); return true; }

    if (key == "physics.forcing_f") { c.forcing_f = parse_number(key, v); return true; }
    if (key == "physics.forcing_g") { c.forcing_g = parse_number(key, v); return true; }
    if (key == "physics.forcing_mode") { c.forcing_mode = parse_int(key, v); return true; }
    if (key == "physics.viscosity") { c.viscosity = parse_number(key, v); return true; }
    if (key == "physics.density") { c.density = parse_number(key, v); return true; }
    if (key == "physics.solute_shear") { c.solute_shear = parse_number(key, v); return true; }
    if (key == "physics.eta0") { c.eta0 = parse_init(key, v); return true; }
    if (key == "physics.etastar") { c.etastar = parse_init(key, v); return true; }
    if (key == "physics.u0") { c.u0 = parse_init(key, v); return true; }
    if (key == "physics.rho0") { c.rho0 = parse_init(key, v); return true; }
    if (key == "physics.T0") { c.T0 = parse_init(key, v); return true; }

    if (key == "fixed_point.tolerance") { c.fp_tolerance = parse_number(key, v); return true; }
    if (key == "fixed_point.max_iterations") { c.fp_max_iterations = parse_int(key, v); return true; }
    if (key == "fixed_point.relaxation") { c.fp_relaxation = parse_number(key, v); return true; }
    if (key == "fixed_point.ball_radius") { c.fp_ball_radius = parse_number(key, v); return true; }

    if (key == "lps.r") { c.lps_r = parse_number(key, v); return true; }
    if (key == "lps.s") { c.lps_s = parse_number(key, v); return true; }

    if (key == "kinetic.q_extent") { c.kin_q_extent = parse_number(key, v); return true; }
    if (key == "kinetic.points") { c.kin_points = parse_int(key, v); return true; }
    if (key == "kinetic.shear") { c.kin_shear = parse_number(key, v); return true; }
    if (key == "kinetic.dt") { c.kin_dt = parse_number(key, v); return true; }
    if (key == "kinetic.steps") { c.kin_steps = parse_int(key, v); return true; }

    if (key == "output.directory") { c.output_dir = v; return true; }
    if (key == "output.snapshot_cadence") { c.snapshot_cadence = parse_int(key, v); return true; }
    if (key == "output.ledgers") { c.ledgers = parse_bool(key, v); return true; }
    if (key == "output.kinetic_snapshots") { c.kinetic_snapshots = parse_bool(key, v); return true; }
    if (key == "run.seed") { c.seed = unsigned(parse_int(key, v)); return true; }
    return false;
}

// initial-data generators ------------------------------------------------------

/// Structure-mesh field from a selector (zero | uniform v | single-mode amp
/// mode | random amp maxmode).
template <int DM>
ScalarField make_structure_field(const FieldInit& init, const StructureMesh<DM>& mesh,
                                 unsigned seed) {
    ScalarField f(mesh.nnodes(), 0.0);
    if (init.kind == "zero") return f;
    if (init.kind == "uniform") {
        double v = init.params.empty() ? 0.0 : init.params[0];
        std::fill(f.begin(), f.end(), v);
        return f;
    }
    if (init.kind == "single-mode") {
        double amp = init.params.size() > 0 ? init.params[0] : 0.01;
        int mode = init.params.size() > 1 ? int(init.params[1]) : 1;
        for (int i = 0; i < mesh.nnodes(); ++i) {
            auto y = mesh.node(mesh.multi_index(i));
            double v = amp;
            for (int a = 0; a < DM; ++a) v *= std::sin(2 * M_PI * mode * y[a] / mesh.extent[a]);
            f[i] = v;
        }
        return f;
    }
    if (init.kind == "random") {
        double amp = init.params.size() > 0 ? init.params[0] : 0.01;
        int maxmode = init.params.size() > 1 ? int(init.params[1]) : 3;
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int m = 1; m <= maxmode; ++m) {
            double a = u(rng), b = u(rng);
            for (int i = 0; i < mesh.nnodes(); ++i) {
                auto y = mesh.node(mesh.multi_index(i));
                double phase = 0;
                for (int c = 0; c < DM; ++c) phase += 2 * M_PI * m * y[c] / mesh.extent[c];
                f[i] += amp * (a * std::sin(phase) + b * std::cos(phase));
            }
        }
        double mx = field_max_abs(f);
        if (mx > 0)
            for (auto& v : f) v *= amp / mx;
        return f;
    }
    throw ValidationError("structure field", "unknown generator '" + init.kind + "'");
}

/// Cell-centered scalar field from a selector (zero | uniform v | mode amp k
/// | random-squared amp maxmode, the latter nonnegative).
template <int D>
ScalarField make_scalar_field(const FieldInit& init, const Grid<D>& grid, unsigned seed) {
    ScalarField f(grid.ncells(), 0.0);
    if (init.kind == "zero") return f;
    if (init.kind == "uniform") {
        std::fill(f.begin(), f.end(), init.params.empty() ? 0.0 : init.params[0]);
        return f;
    }
    if (init.kind == "mode") {
        double amp = init.params.size() > 0 ? init.params[0] : 0.5;
        int k = init.params.size() > 1 ? int(init.params[1]) : 1;
        grid.for_cells([&](int idx, const std::array<int, D>& iv) {
            auto x = grid.center(iv);
            f[idx] = 1.0 + amp * std::cos(2 * M_PI * k * x[0] / grid.extent[0]);
        });
        return f;
    }
    if (init.kind == "random-squared") {
        double amp = init.params.size() > 0 ? init.params[0] : 0.5;
        int maxmode = init.params.size() > 1 ? int(init.params[1]) : 2;
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> coef;
        for (int m = 0; m < 2 * maxmode * D; ++m) coef.push_back(u(rng));
        grid.for_cells([&](int idx, const std::array<int, D>& iv) {
            auto x = grid.center(iv);
            double w = 1.0;
            int c = 0;
            for (int m = 1; m <= maxmode; ++m)
                for (int a = 0; a < D; ++a) {
                    w += amp * coef[c++] * std::sin(2 * M_PI * m * x[a] / grid.extent[a]);
                    w += amp * coef[c++] * std::cos(2 * M_PI * m * x[a] / grid.extent[a]);
                }
            f[idx] = w * w;
        });
        return f;
    }
    throw ValidationError("scalar field", "unknown generator '" + init.kind + "'");
}

inline void validate_config(const RunConfig& c) {
    if (c.dimension != 2 && c.dimension != 3)
        throw ValidationError("geometry.dimension", "must be 2 or 3");
    for (int a = 0; a < c.dimension; ++a) {
        if (c.nx[a] < 4) throw ValidationError("geometry.nx", "each axis needs at least 4 cells");
        if (c.extent[a] <= 0) throw ValidationError("geometry.extent", "must be positive");
    }
    auto power_of_two = [](int n) { return n > 0 && (n & (n - 1)) == 0; };
    if (!power_of_two(c.structure_points))
        throw ValidationError("geometry.structure_points",
                              "spectral shell mesh needs a power of two");
    if (c.tube_halfwidth <= 0)
        throw ValidationError("geometry.tube_halfwidth", "must be positive");
    if (!c.periodic_box && c.tube_halfwidth > 0.5 * c.extent[c.dimension - 1])
        throw ValidationError("geometry.tube_halfwidth",
                              "must not exceed half the domain height");
    if (c.dt <= 0) throw ValidationError("time.dt", "must be positive");
    if (c.horizon <= 0) throw ValidationError("time.horizon", "must be positive");
    if (c.window <= 0) throw ValidationError("time.window", "must be positive");
    if (c.fp_tolerance <= 0) throw ValidationError("fixed_point.tolerance", "must be positive");
    if (c.fp_max_iterations < 1)
        throw ValidationError("fixed_point.max_iterations", "must be at least 1");
    if (c.fp_relaxation <= 0 || c.fp_relaxation > 1)
        throw ValidationError("fixed_point.relaxation", "must be in (0, 1]");
    if (c.viscosity <= 0) throw ValidationError("physics.viscosity", "must be positive");
    if (c.density <= 0) throw ValidationError("physics.density", "must be positive");
    if (c.snapshot_cadence < 0)
        throw ValidationError("output.snapshot_cadence", "must be nonnegative");

    // displacement data must respect the breach margin, and the interface
    // velocity must carry no net volume flux
    if (!c.periodic_box) {
        if (c.dimension == 2) {
            StructureMesh<1> mesh({c.structure_points}, {c.extent[0]});
            auto eta = make_structure_field(c.eta0, mesh, c.seed);
            if (field_max_abs(eta) >= 0.95 * c.tube_halfwidth)
                throw ValidationError("physics.eta0",
                                      "max|eta0| must stay below 0.95 tube_halfwidth");
            auto vel = make_structure_field(c.etastar, mesh, c.seed + 1);
            if (std::abs(field_sum(vel)) / mesh.nnodes() > 1e-12)
                throw ValidationError("physics.etastar", "must have zero mean");
        } else {
            StructureMesh<2> mesh({c.structure_points, c.structure_points},
                                  {c.extent[0], c.extent[1]});
            auto eta = make_structure_field(c.eta0, mesh, c.seed);
            if (field_max_abs(eta) >= 0.95 * c.tube_halfwidth)
                throw ValidationError("physics.eta0",
                                      "max|eta0| must stay below 0.95 tube_halfwidth");
            auto vel = make_structure_field(c.etastar, mesh, c.seed + 1);
            if (std::abs(field_sum(vel)) / mesh.nnodes() > 1e-12)
                throw ValidationError("physics.etastar", "must have zero mean");
        }
    }
}

} // namespace pfsi
