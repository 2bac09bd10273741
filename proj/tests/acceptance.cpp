// Acceptance suite: one numbered criterion per run, each printing a single
// pass/fail line with the measured quantity against its pinned tolerance.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "pfsi/coupling.hpp"
#include "pfsi/kinetic.hpp"
#include "pfsi/runner.hpp"
#include "oracles.hpp"

using namespace pfsi;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::ostream&)> run;
};

// ---------------------------------------------------------------- criterion 1

bool hanzawa_round_trip(std::ostream& out) {
    const double L = 0.4;
    ReferenceGeometry<2> geom({1.0, 1.0}, L);
    Grid<2> grid({64, 64}, {1.0, 1.0}, true);
    StructureMesh<1> mesh({64}, {1.0});

    std::mt19937 rng(20240501);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), pos(0.0, 1.0);
    double worst = 0, minJ = 1e300;
    for (int trial = 0; trial < 20; ++trial) {
        ScalarField eta(64, 0.0);
        for (int m = 1; m <= 4; ++m) {
            double a = amp(rng), b = amp(rng);
            for (int j = 0; j < 64; ++j) {
                double y = j / 64.0;
                eta[j] += a * std::sin(2 * M_PI * m * y) + b * std::cos(2 * M_PI * m * y);
            }
        }
        double mx = field_max_abs(eta);
        for (auto& v : eta) v *= 0.9 * L / mx;

        HanzawaMap<2> map(geom, grid, mesh, eta);
        minJ = std::min(minJ, map.min_jacobian());
        for (int k = 0; k < 500; ++k) {
            Vec<2> x{{pos(rng), pos(rng)}};
            auto X = map.forward(x);
            auto back = map.inverse(X);
            worst = std::max(worst, std::abs(back[0] - x[0]));
            worst = std::max(worst, std::abs(back[1] - x[1]));
        }
    }
    out << "max composition error " << worst << " (tol 1e-9), min J " << minJ << " > 0";
    return worst <= 1e-9 && minJ > 0.0;
}

// ---------------------------------------------------------------- criterion 2

bool shell_mode_oracle(std::ostream& out) {
    StructureMesh<1> mesh({64}, {1.0});
    auto s = StructureState<1>::rest(mesh);
    double amp = 1e-2, k = 2 * M_PI;
    for (int j = 0; j < 64; ++j) s.displacement[j] = amp * std::sin(k * j / 64.0);
    auto l = StructureLoad<1>::zero(64);

    double sigma = 0.5 * k * k, omega = 0.5 * std::sqrt(3.0) * k * k;
    double dt = 1e-3, worst = 0;
    for (int n = 1; n <= 1000; ++n) {
        s = step_shell(s, l, dt);
        double t = n * dt;
        double exact = amp * std::exp(-sigma * t)
                       * (std::cos(omega * t) + sigma / omega * std::sin(omega * t));
        worst = std::max(worst, std::abs(s.displacement[16] - exact));
    }
    double rel = worst / amp;
    out << "relative mode error " << rel << " (tol 1e-4)";
    return rel <= 1e-4;
}

// ---------------------------------------------------------------- criterion 3

double mms_velocity_error(int n) {
    auto gfun = [](double t) { return 1.0 + 0.5 * std::sin(t); };
    auto gdot = [](double t) { return 0.5 * std::cos(t); };
    const double TWO_PI = 2 * M_PI;

    ReferenceGeometry<2> geom({TWO_PI, TWO_PI}, M_PI / 2);
    Grid<2> grid({n, n}, {TWO_PI, TWO_PI}, false);
    auto map = HanzawaMap<2>::identity(geom, grid);
    FluidStepper<2> stepper(grid);
    auto state = FluidState<2>::rest(grid);
    double h = grid.h[0];
    double dt = 0.02 * h * h;
    double t_end = 0.05;
    int steps = std::max(1, int(t_end / dt + 0.5));
    dt = t_end / steps;

    grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
        auto x = grid.center(iv);
        state.velocity.comp[0][idx] = gfun(0) * std::sin(x[0]) * std::cos(x[1]);
        state.velocity.comp[1][idx] = -gfun(0) * std::cos(x[0]) * std::sin(x[1]);
        state.pressure[idx] = gfun(0) * std::sin(x[0]) * std::sin(x[1]);
    });
    SymField<2> T;
    T.resize(grid.ncells());
    VecField<2> f;
    f.resize(grid.ncells());
    StructureMesh<1> sm({n}, {TWO_PI});
    auto wall = to_modes(sm, ScalarField(n, 0.0));

    double t = 0;
    for (int s = 0; s < steps; ++s) {
        double g = gfun(t), gd = gdot(t);
        grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
            auto x = grid.center(iv);
            double sx = std::sin(x[0]), cx = std::cos(x[0]);
            double sy = std::sin(x[1]), cy = std::cos(x[1]);
            T.comp[0][idx] = 0.3 * g * sx * sy;
            T.comp[1][idx] = 0.2 * g * sx * sy;
            T.comp[2][idx] = 0.1 * g * cx * cy;
            double u = g * sx * cy, v = -g * cx * sy;
            double ux = g * cx * cy, uy = -g * sx * sy;
            double vx = g * sx * sy, vy = -g * cx * cy;
            double divT_x = 0.2 * g * cx * sy;
            double divT_y = 0.1 * g * sx * cy;
            f.comp[0][idx] = gd * sx * cy + (u * ux + v * uy) + 2.0 * u + g * cx * sy - divT_x;
            f.comp[1][idx] = -gd * cx * sy + (u * vx + v * vy) + 2.0 * v + g * sx * cy - divT_y;
        });
        stepper.step(state, map, map, wall, f, T, dt);
        t += dt;
    }
    double gt = gfun(t_end), err = 0;
    grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
        auto x = grid.center(iv);
        err = std::max(err, std::abs(state.velocity.comp[0][idx] - gt * std::sin(x[0]) * std::cos(x[1])));
        err = std::max(err, std::abs(state.velocity.comp[1][idx] + gt * std::cos(x[0]) * std::sin(x[1])));
    });
    return err;
}

bool fluid_taylor_green_and_mms(std::ostream& out) {
    // decay rate at 64^2
    const double TWO_PI = 2 * M_PI;
    ReferenceGeometry<2> geom({TWO_PI, TWO_PI}, M_PI / 2);
    Grid<2> grid({64, 64}, {TWO_PI, TWO_PI}, false);
    auto map = HanzawaMap<2>::identity(geom, grid);
    FluidStepper<2> stepper(grid);
    auto state = FluidState<2>::rest(grid);
    grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
        auto x = grid.center(iv);
        state.velocity.comp[0][idx] = std::sin(x[0]) * std::cos(x[1]);
        state.velocity.comp[1][idx] = -std::cos(x[0]) * std::sin(x[1]);
    });
    VecField<2> f;
    f.resize(grid.ncells());
    SymField<2> T;
    T.resize(grid.ncells());
    StructureMesh<1> sm({64}, {TWO_PI});
    auto wall = to_modes(sm, ScalarField(64, 0.0));

    auto kinetic = [&] {
        double e = 0;
        for (int i = 0; i < grid.ncells(); ++i)
            e += 0.5
                 * (state.velocity.comp[0][i] * state.velocity.comp[0][i]
                    + state.velocity.comp[1][i] * state.velocity.comp[1][i])
                 * grid.cell_volume();
        return e;
    };
    double dt = 2e-3, horizon = 0.4;
    double e0 = kinetic();
    int steps = int(horizon / dt + 0.5);
    for (int s = 0; s < steps; ++s) stepper.step(state, map, map, wall, f, T, dt);
    double rate = std::log(e0 / kinetic()) / horizon;
    double rate_err = std::abs(rate - 4.0) / 4.0;

    // manufactured-solution order over three mesh halvings
    std::vector<int> grids{8, 16, 32, 64};
    std::vector<double> errs;
    for (int n : grids) errs.push_back(mms_velocity_error(n));
    // least-squares slope of log2(err) against the refinement level
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < errs.size(); ++i) {
        double x = double(i), y = -std::log2(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double order = (errs.size() * sxy - sx * sy) / (errs.size() * sxx - sx * sx);

    out << "decay-rate error " << rate_err << " (tol 0.01); mms errors";
    for (double e : errs) out << ' ' << e;
    out << ", order " << order << " (tol >= 1.9)";
    return rate_err <= 0.01 && order >= 1.9;
}

// ---------------------------------------------------------------- criterion 4

bool solute_ode_oracle(std::ostream& out) {
    ReferenceGeometry<3> geom({1.0, 1.0, 1.0}, 0.4);
    Grid<3> grid({4, 4, 4}, {1.0, 1.0, 1.0}, true);
    auto map = HanzawaMap<3>::identity(geom, grid);
    SoluteStepper<3> stepper(grid);

    double gammadot = 0.8, rho0 = 1.0;
    auto state = SoluteState<3>::uniform(grid, rho0, SymMat<3>::identity());
    VecField<3> u;
    u.resize(grid.ncells());
    Mat<3> G{};
    G(0, 1) = gammadot;
    std::vector<Mat<3>> gradu(grid.ncells(), G);
    Eigen::VectorXd no_flow = Eigen::VectorXd::Zero(total_faces(grid));

    double dt = 1e-4, horizon = 1.0;
    int steps = int(horizon / dt + 0.5);
    for (int s = 0; s < steps; ++s) {
        ScalarField rho_old = state.density;
        stepper.step_density(state, no_flow, map, map, dt);
        stepper.step_stress(state, rho_old, u, gradu, map, map, dt);
    }

    std::array<double, 9> Gp{};
    Gp[1] = gammadot;
    std::function<std::array<double, 6>(double, const std::array<double, 6>&)> rhs =
        [&](double, const std::array<double, 6>& T) {
            return oracles::oldroyd_rhs<3>(Gp, rho0, 2.0, T);
        };
    std::array<double, 6> Tode{1, 1, 1, 0, 0, 0};
    Tode = oracles::rk4(rhs, Tode, 0.0, horizon, 20000);

    auto t = state.stress.at(0);
    double scale = 0, worst = 0;
    for (int k = 0; k < 6; ++k) scale = std::max(scale, std::abs(Tode[k]));
    for (int k = 0; k < 6; ++k) worst = std::max(worst, std::abs(t.c[k] - Tode[k]) / scale);
    out << "relative error vs runge-kutta oracle " << worst << " (tol 1e-6)";
    return worst <= 1e-6;
}

// ---------------------------------------------------------------- criterion 5

bool conservation_suite(std::ostream& out) {
    double worst_rho = 0, worst_kin = 0;

    // fixed-domain divergence-free transport
    {
        ReferenceGeometry<2> geom({1.0, 1.0}, 0.25);
        Grid<2> grid({24, 24}, {1.0, 1.0}, false);
        auto map = HanzawaMap<2>::identity(geom, grid);
        SoluteStepper<2> stepper(grid);
        auto state = SoluteState<2>::uniform(grid, 0.0, SymMat<2>{});
        grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
            auto x = grid.center(iv);
            double v = 1.0 + 0.5 * std::sin(2 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
            state.density[idx] = v * v;
        });
        VecField<2> vel;
        vel.resize(grid.ncells());
        grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
            auto x = grid.center(iv);
            vel.comp[0][idx] = 0.4 * std::sin(2 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
            vel.comp[1][idx] = -0.4 * std::cos(2 * M_PI * x[0]) * std::sin(2 * M_PI * x[1]);
        });
        ScalarField no_wall(grid.ncolumns(), 0.0);
        Eigen::VectorXd V = contravariant_face_fluxes(grid, map, vel, no_wall);
        double m0 = 0;
        for (int i = 0; i < grid.ncells(); ++i)
            m0 += map.J_cell(i) * state.density[i] * grid.cell_volume();
        for (int s = 0; s < 100; ++s) stepper.step_density(state, V, map, map, 2e-3);
        double m1 = 0;
        for (int i = 0; i < grid.ncells(); ++i)
            m1 += map.J_cell(i) * state.density[i] * grid.cell_volume();
        worst_rho = std::max(worst_rho, std::abs(m1 - m0) / std::abs(m0));
    }

    // moving-wall coupled run
    {
        ReferenceGeometry<2> geom({1.0, 1.0}, 0.4);
        Grid<2> grid({24, 24}, {1.0, 1.0}, true);
        StructureMesh<1> mesh({32}, {1.0});
        CoupledDriver<2> driver(geom, grid, mesh);
        ScalarField eta0(32, 0.0), etastar(32, 0.0);
        auto state = driver.make_initial_state(eta0, etastar, FluidState<2>::rest(grid),
                                               SoluteState<2>::equilibrium(grid, 1.0));
        auto forcing = Forcing<2>::zero(grid, mesh);
        for (int j = 0; j < 32; ++j) forcing.g[j] = 0.05 * std::sin(2 * M_PI * j / 32.0);
        auto a0 = mass_audit(grid, *state.map, state.solute);
        for (int s = 0; s < 100; ++s) driver.step_coupled(state, forcing, 2e-3);
        auto a1 = mass_audit(grid, *state.map, state.solute);
        worst_rho = std::max(worst_rho, std::abs(a1.rho_mass - a0.rho_mass) / a0.rho_mass);
    }

    // kinetic probability mass: homogeneous shear and x-resolved transport
    {
        ConfigurationGrid<2> qg{6.0, 32};
        auto m = build_maxwellian(qg);
        auto p = ProbabilityDensity<2>::homogeneous(m);
        KineticStepper<2> stepper(m);
        std::vector<double> u0(1, 0.0);
        Mat<2> G{};
        G(0, 1) = 0.2;
        std::vector<Mat<2>> g0(1, G);
        double k0 = p.total_mass();
        for (int s = 0; s < 100; ++s) stepper.step(p, u0, g0, 1e-3);
        worst_kin = std::max(worst_kin, std::abs(p.total_mass() - k0) / k0);

        ProbabilityDensity<2> px;
        px.grid = qg;
        px.nx = 8;
        px.x_extent = 1.0;
        px.f.assign(8, m.values);
        for (int x = 0; x < 8; ++x) {
            double w = 1.0 + 0.3 * std::sin(2 * M_PI * x / 8.0);
            for (auto& v : px.f[x]) v *= w;
        }
        KineticStepper<2> stepper2(m);
        std::vector<double> ux(8);
        for (int x = 0; x < 8; ++x) ux[x] = 0.1 * std::cos(2 * M_PI * x / 8.0);
        std::vector<Mat<2>> gx(8);
        double x0 = px.total_mass();
        for (int s = 0; s < 100; ++s) stepper2.step(px, ux, gx, 2e-3);
        worst_kin = std::max(worst_kin, std::abs(px.total_mass() - x0) / x0);
    }

    out << "rho-mass drift " << worst_rho << " (tol 1e-8), kinetic mass drift " << worst_kin
        << " (tol 1e-10)";
    return worst_rho <= 1e-8 && worst_kin <= 1e-10;
}

// ---------------------------------------------------------------- criterion 6

double trace_rate_residual(int n, double dt, int steps) {
    ReferenceGeometry<3> geom({1.0, 1.0, 1.0}, 0.4);
    Grid<3> grid({n, n, n}, {1.0, 1.0, 1.0}, true);
    StructureMesh<2> mesh({8, 8}, {1.0, 1.0});
    CoupledDriver<3> driver(geom, grid, mesh);
    ScalarField eta0(mesh.nnodes(), 0.0), etastar(mesh.nnodes(), 0.0);
    auto state = driver.make_initial_state(eta0, etastar, FluidState<3>::rest(grid),
                                           SoluteState<3>::equilibrium(grid, 1.0));
    // perturb the solute so the identity is exercised away from equilibrium
    grid.for_cells([&](int idx, const std::array<int, 3>& iv) {
        auto x = grid.center(iv);
        state.solute.density[idx] = 1.0 + 0.3 * std::cos(2 * M_PI * x[0]);
        auto t = state.solute.stress.at(idx);
        t.at(0, 0) += 0.2 * std::sin(2 * M_PI * x[0]);
        state.solute.stress.set(idx, t);
    });
    auto forcing = Forcing<3>::zero(grid, mesh);
    for (int i = 0; i < mesh.nnodes(); ++i) {
        auto y = mesh.node(mesh.multi_index(i));
        forcing.g[i] = 0.05 * std::sin(2 * M_PI * y[0]) * std::sin(2 * M_PI * y[1]);
    }

    double worst = 0;
    for (int s = 0; s < steps; ++s) {
        auto before = state;
        driver.step_coupled(state, forcing, dt);
        double r = trace_identity_residual(grid, *before.map, *state.map, before.fluid,
                                           state.fluid, before.solute, state.solute, dt);
        worst = std::max(worst, r / dt);
    }
    return worst;
}

bool trace_identity(std::ostream& out) {
    // equilibrium exactness
    ReferenceGeometry<3> geom({1.0, 1.0, 1.0}, 0.4);
    Grid<3> grid({8, 8, 8}, {1.0, 1.0, 1.0}, true);
    auto map = HanzawaMap<3>::identity(geom, grid);
    auto fluid = FluidState<3>::rest(grid);
    auto solute = SoluteState<3>::equilibrium(grid, 0.8);
    double eq = trace_identity_residual(grid, map, map, fluid, fluid, solute, solute, 1e-2);

    double r1 = trace_rate_residual(8, 4e-3, 10);
    double r2 = trace_rate_residual(16, 2e-3, 20);
    double order = std::log2(r1 / r2);

    out << "equilibrium residual " << eq << " (tol 1e-12); rate residuals " << r1 << " -> "
        << r2 << ", order " << order << " (tol >= 1)";
    return eq <= 1e-12 && order >= 1.0;
}

// ---------------------------------------------------------------- criterion 7

bool positivity_runs(std::ostream& out) {
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double global_min = 0.0;
    int runs = 0;

    // randomized fixed-domain transports
    for (int trial = 0; trial < 160; ++trial) {
        ReferenceGeometry<2> geom({1.0, 1.0}, 0.25);
        Grid<2> grid({16, 16}, {1.0, 1.0}, false);
        auto map = HanzawaMap<2>::identity(geom, grid);
        SoluteStepper<2> stepper(grid);
        auto state = SoluteState<2>::uniform(grid, 0.0, SymMat<2>{});
        double a1 = u(rng), a2 = u(rng), b1 = u(rng), b2 = u(rng);
        grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
            auto x = grid.center(iv);
            double w = 1.0 + 0.6 * (a1 * std::sin(2 * M_PI * x[0]) + a2 * std::cos(2 * M_PI * x[1]))
                       + 0.3 * b1 * std::sin(4 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
            state.density[idx] = w * w;
        });
        VecField<2> vel;
        vel.resize(grid.ncells());
        double amp = 0.3 + 0.3 * std::abs(b2);
        grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
            auto x = grid.center(iv);
            vel.comp[0][idx] = amp * std::sin(2 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
            vel.comp[1][idx] = -amp * std::cos(2 * M_PI * x[0]) * std::sin(2 * M_PI * x[1]);
        });
        ScalarField no_wall(grid.ncolumns(), 0.0);
        Eigen::VectorXd V = contravariant_face_fluxes(grid, map, vel, no_wall);
        try {
            for (int s = 0; s < 20; ++s) {
                stepper.step_density(state, V, map, map, 2e-3);
                global_min = std::min(global_min, field_min(state.density));
            }
        } catch (const NegativeDensity&) {
            global_min = std::min(global_min, field_min(state.density) - 1.0);
        }
        ++runs;
    }

    // randomized moving-wall coupled runs
    for (int trial = 0; trial < 40; ++trial) {
        ReferenceGeometry<2> geom({1.0, 1.0}, 0.4);
        Grid<2> grid({12, 12}, {1.0, 1.0}, true);
        StructureMesh<1> mesh({16}, {1.0});
        CoupledDriver<2> driver(geom, grid, mesh);
        ScalarField eta0(16, 0.0), etastar(16, 0.0);
        SoluteState<2> solute0;
        solute0.stress.resize(grid.ncells());
        solute0.density.assign(grid.ncells(), 0.0);
        double a1 = u(rng), a2 = u(rng);
        grid.for_cells([&](int idx, const std::array<int, 2>& iv) {
            auto x = grid.center(iv);
            double w = 1.0 + 0.5 * (a1 * std::sin(2 * M_PI * x[0]) + 0.4 * a2 * std::cos(2 * M_PI * x[1]));
            solute0.density[idx] = w * w;
            SymMat<2> t = SymMat<2>::identity();
            t *= solute0.density[idx];
            solute0.stress.set(idx, t);
        });
        auto state = driver.make_initial_state(eta0, etastar, FluidState<2>::rest(grid), solute0);
        auto forcing = Forcing<2>::zero(grid, mesh);
        double amp = 0.05 * (1.0 + std::abs(u(rng)));
        for (int j = 0; j < 16; ++j) forcing.g[j] = amp * std::sin(2 * M_PI * j / 16.0);
        try {
            for (int s = 0; s < 10; ++s) {
                driver.step_coupled(state, forcing, 2e-3);
                global_min = std::min(global_min, field_min(state.solute.density));
            }
        } catch (const NegativeDensity&) {
            global_min = std::min(global_min, field_min(state.solute.density) - 1.0);
        }
        ++runs;
    }

    out << runs << " randomized runs, min density " << global_min << " (tol >= -1e-10)";
    return global_min >= -1e-10;
}

// ---------------------------------------------------------------- criterion 8

bool closure_verification(std::ostream& out) {
    ConfigurationGrid<2> qg{6.0, 64};
    auto m = build_maxwellian(qg);

    // equilibrium stationarity to rounding
    auto peq = ProbabilityDensity<2>::homogeneous(m);
    KineticStepper<2> eqstep(m);
    std::vector<double> u0(1, 0.0);
    std::vector<Mat<2>> g00(1);
    for (int s = 0; s < 20; ++s) eqstep.step(peq, u0, g00, 1e-3);
    double stat = 0;
    for (int i = 0; i < qg.ncells(); ++i)
        stat = std::max(stat, std::abs(peq.f[0][i] - m.values[i]));

    double kappa = calibrate_relaxation_rate(m, 1e-3, 300);

    double gammadot = 0.1;
    Mat<2> G{};
    G(0, 1) = gammadot;
    auto p = ProbabilityDensity<2>::homogeneous(m);
    KineticStepper<2> stepper(m);
    std::vector<Mat<2>> g0(1, G);
    double dt = 1e-3;
    int steps = 1000;
    for (int s = 0; s < steps; ++s) stepper.step(p, u0, g0, dt);
    auto mom = close_moments(p);

    std::array<double, 4> Gp{0, gammadot, 0, 0};
    std::function<std::array<double, 3>(double, const std::array<double, 3>&)> rhs =
        [&](double, const std::array<double, 3>& T) {
            return oracles::oldroyd_rhs<2>(Gp, 1.0, kappa, T);
        };
    auto mom0 = close_moments(ProbabilityDensity<2>::homogeneous(m));
    std::array<double, 3> T{mom0.stress[0].c[0], mom0.stress[0].c[1], mom0.stress[0].c[2]};
    T = oracles::rk4(rhs, T, 0.0, steps * dt, 4000);

    double scale = std::max({std::abs(T[0]), std::abs(T[1]), std::abs(T[2])});
    double worst = 0;
    for (int k = 0; k < 3; ++k)
        worst = std::max(worst, std::abs(mom.stress[0].c[k] - T[k]) / scale);

    out << "kappa " << kappa << ", moment error " << worst
        << " (tol 0.01), equilibrium drift " << stat << " (tol 1e-12)";
    return worst <= 0.01 && stat <= 1e-12;
}

// ---------------------------------------------------------------- criterion 9

bool fixed_point_contraction(std::ostream& out) {
    ReferenceGeometry<2> geom({1.0, 1.0}, 0.4);
    Grid<2> grid({32, 32}, {1.0, 1.0}, true);
    StructureMesh<1> mesh({32}, {1.0});
    CoupledDriver<2> driver(geom, grid, mesh);
    ScalarField eta0(32, 0.0), etastar(32, 0.0);
    auto forcing = Forcing<2>::zero(grid, mesh);
    for (int j = 0; j < 32; ++j) forcing.g[j] = 0.02 * std::sin(2 * M_PI * j / 32.0);

    FixedPointConfig cfg;
    cfg.tolerance = 1e-10;
    cfg.max_iterations = 30;
    double dt = 2.5e-3;
    int nsteps = 20; // default window T* = 0.05

    auto state = driver.make_initial_state(eta0, etastar, FluidState<2>::rest(grid),
                                           SoluteState<2>::equilibrium(grid, 1.0));
    auto res = driver.fixed_point_window(state, forcing, cfg, dt, nsteps);
    double worst_ratio = 0;
    for (double r : res.report.ratios) worst_ratio = std::max(worst_ratio, r);

    // window halving agreement
    auto stateA = driver.make_initial_state(eta0, etastar, FluidState<2>::rest(grid),
                                            SoluteState<2>::equilibrium(grid, 1.0));
    auto resA = driver.fixed_point_window(stateA, forcing, cfg, dt, 16);
    auto stateB = driver.make_initial_state(eta0, etastar, FluidState<2>::rest(grid),
                                            SoluteState<2>::equilibrium(grid, 1.0));
    auto resB1 = driver.fixed_point_window(stateB, forcing, cfg, dt, 8);
    CoupledState<2> mid = stateB;
    mid.structure = resB1.motion.structures.back();
    mid.fluid = resB1.motion.fluids.back();
    mid.map = resB1.motion.maps.back();
    mid.solute = resB1.solute.states.back();
    mid.time += 8 * dt;
    auto resB2 = driver.fixed_point_window(mid, forcing, cfg, dt, 8);

    double diff = 0;
    for (int j = 0; j < 32; ++j)
        diff = std::max(diff, std::abs(resA.motion.structures.back().displacement[j]
                                       - resB2.motion.structures.back().displacement[j]));
    double scale = std::max(field_max_abs(resA.motion.structures.back().displacement), 1e-12);
    double rel = diff / scale;

    out << "converged in " << res.report.iterations << " iterations, max ratio " << worst_ratio
        << " (tol 0.6); window-halving deviation " << rel << " (tol " << 10 * dt << ")";
    return res.report.converged && worst_ratio <= 0.6 && rel <= 10 * dt;
}

// ---------------------------------------------------------------- criterion 10

struct EnergyCase {
    std::string name;
    double pinned; // regression constant C = lhs / E_w
    std::function<GlobalReport<2>(CoupledState<2>&)> run;
};

bool energy_inequality(std::ostream& out) {
    // scenario sweep: each run's C = lhs / E_w must stay within +-5% of its
    // pinned regression value (pinned from the calibration run of this build)
    struct Case {
        const char* name;
        double forcing_g;
        double eta0_amp;
        double rho0;
        double pinned;
    };
    const Case cases[] = {
        {"coupled-small-data", 0.01, 0.0, 1.0, 1.04762},
        {"shell-relaxation", 0.0, 0.05, 1.0, 1.24736},
        {"forced-stronger", 0.05, 0.02, 1.0, 1.10091},
    };

    bool ok = true;
    std::ostringstream detail;
    for (const auto& c : cases) {
        ReferenceGeometry<2> geom({1.0, 1.0}, 0.4);
        Grid<2> grid({24, 24}, {1.0, 1.0}, true);
        StructureMesh<1> mesh({32}, {1.0});
        CoupledDriver<2> driver(geom, grid, mesh);
        ScalarField eta0(32, 0.0), etastar(32, 0.0);
        for (int j = 0; j < 32; ++j)
            eta0[j] = c.eta0_amp * std::sin(2 * M_PI * j / 32.0);
        auto state = driver.make_initial_state(eta0, etastar, FluidState<2>::rest(grid),
                                               SoluteState<2>::equilibrium(grid, c.rho0));
        auto forcing = Forcing<2>::zero(grid, mesh);
        for (int j = 0; j < 32; ++j) forcing.g[j] = c.forcing_g * std::sin(2 * M_PI * j / 32.0);

        FixedPointConfig cfg;
        cfg.window_length = 0.02;
        cfg.tolerance = 1e-9;
        auto rep = run_global(driver, state, forcing, 0.1, cfg, 2e-3, LPSMonitor(4, 6));
        double ratio = rep.energy.inequality_lhs() / rep.energy_data;
        bool pass = std::abs(ratio - c.pinned) <= 0.05 * c.pinned;
        detail << c.name << " C=" << ratio << " (pinned " << c.pinned << ") ";
        ok = ok && pass && rep.status == RunStatus::HorizonReached;
    }

    // zero-data case: both sides vanish identically
    {
        ReferenceGeometry<2> geom({1.0, 1.0}, 0.4);
        Grid<2> grid({16, 16}, {1.0, 1.0}, true);
        StructureMesh<1> mesh({16}, {1.0});
        CoupledDriver<2> driver(geom, grid, mesh);
        ScalarField z(16, 0.0);
        SoluteState<2> s0;
        s0.density.assign(grid.ncells(), 0.0);
        s0.stress.resize(grid.ncells());
        auto state = driver.make_initial_state(z, z, FluidState<2>::rest(grid), s0);
        auto forcing = Forcing<2>::zero(grid, mesh);
        FixedPointConfig cfg;
        cfg.window_length = 0.02;
        auto rep = run_global(driver, state, forcing, 0.04, cfg, 2e-3, LPSMonitor(4, 6));
        bool pass = rep.energy.inequality_lhs() == 0.0 && rep.energy_data == 0.0;
        detail << "rest lhs=" << rep.energy.inequality_lhs() << " ";
        ok = ok && pass;
    }

    out << detail.str() << "(tol +-5% of pinned)";
    return ok;
}

// ---------------------------------------------------------------- criterion 11

bool lps_monitor(std::ostream& out) {
    // admissibility arithmetic table
    struct Row {
        double r, s;
        bool admissible;
    };
    const Row rows[] = {
        {4, 6, true},        // 2/4 + 3/6 = 1
        {2, 4, false},       // 1.75
        {8, 4, true},        // 0.25 + 0.75 = 1
        {2, std::numeric_limits<double>::infinity(), true},
        {3, 9, true},        // 2/3 + 1/3 = 1
        {4, 5, false},       // 0.5 + 0.6 = 1.1
        {1.5, 100, false},   // r below 2
        {10, 3, false},      // s at the excluded endpoint
    };
    bool table_ok = true;
    for (const auto& r : rows) table_ok = table_ok && (LPSMonitor(r.r, r.s).admissible == r.admissible);

    // constant-field norm value exact
    ReferenceGeometry<2> geom({1.0, 1.0}, 0.25);
    Grid<2> grid({16, 16}, {1.0, 1.0}, false);
    auto map = HanzawaMap<2>::identity(geom, grid);
    auto fluid = FluidState<2>::rest(grid);
    for (auto& v : fluid.velocity.comp[0]) v = 0.7;
    StructureMesh<1> mesh({16}, {1.0});
    auto shell = StructureState<1>::rest(mesh);
    LPSMonitor mon(4, 6);
    for (int s = 0; s < 10; ++s) lps_update(mon, grid, map, fluid, shell, 0.1);
    double value_err = std::abs(mon.value() - 0.7);

    // nondecreasing on a varying run
    LPSMonitor mon2(4, 6);
    bool monotone = true;
    double last = 0;
    for (int s = 0; s < 8; ++s) {
        for (auto& v : fluid.velocity.comp[0]) v = 0.1 * ((s * 7) % 5 + 1);
        lps_update(mon2, grid, map, fluid, shell, 0.05);
        monotone = monotone && (mon2.value() >= last - 1e-15);
        last = mon2.value();
    }

    out << "admissibility table " << (table_ok ? "exact" : "WRONG") << ", constant-field error "
        << value_err << " (tol 1e-12), monotone " << (monotone ? "yes" : "no");
    return table_ok && value_err <= 1e-12 && monotone;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "Hanzawa round trip", hanzawa_round_trip},
        {2, "Shell mode oracle", shell_mode_oracle},
        {3, "Fluid: Taylor-Green decay and manufactured-solution order", fluid_taylor_green_and_mms},
        {4, "Solute ODE oracle", solute_ode_oracle},
        {5, "Conservation suite", conservation_suite},
        {6, "Trace identity", trace_identity},
        {7, "Positivity propagation", positivity_runs},
        {8, "Closure verification", closure_verification},
        {9, "Fixed-point contraction", fixed_point_contraction},
        {10, "Energy inequality", energy_inequality},
        {11, "LPS monitor", lps_monitor},
    };

    int only = (argc > 1) ? std::atoi(argv[1]) : 0;
    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::ostringstream detail;
        bool ok = false;
        auto t0 = std::chrono::steady_clock::now();
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        auto t1 = std::chrono::steady_clock::now();
        double secs = std::chrono::duration<double>(t1 - t0).count();
        std::printf("[%s] %2d. %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    detail.str().c_str(), secs);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
