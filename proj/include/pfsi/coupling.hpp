#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pfsi/diagnostics.hpp"
#include "pfsi/fluid.hpp"
#include "pfsi/shell.hpp"
#include "pfsi/solute.hpp"

namespace pfsi {

/// Full unknown tuple at one time level. The map always matches the
/// structure displacement.
template <int D>
struct CoupledState {
    StructureState<D - 1> structure;
    FluidState<D> fluid;
    SoluteState<D> solute;
    std::shared_ptr<const HanzawaMap<D>> map;
    double time = 0.0;
};

/// Time-constant forcing pair (body force on the fluid, load on the shell).
template <int D>
struct Forcing {
    VecField<D> f;
    ScalarField g;

    static Forcing zero(const Grid<D>& grid, const StructureMesh<D - 1>& mesh) {
        Forcing fo;
        fo.f.resize(grid.ncells());
        fo.g.assign(mesh.nnodes(), 0.0);
        return fo;
    }
};

struct FixedPointConfig {
    double window_length = 0.05; // T*
    double tolerance = 1e-8;     // Y-norm tolerance on successive differences
    int max_iterations = 25;
    double relaxation = 1.0;     // theta, damped on oscillation
    double ball_radius = 0.0;    // monitored (reported), never enforced
    double contraction_margin = 0.05;
};

struct WindowReport {
    int iterations = 0;
    bool converged = false;
    std::vector<double> y_norms; // successive-difference norms
    std::vector<double> ratios;  // contraction ratios
    double theta_final = 1.0;
    double x_norm = 0.0; // ball monitor of the accepted iterate
    double t_start = 0.0;
    double window = 0.0;
};

enum class RunStatus { HorizonReached, TubeBreached, NoContractionStop };

template <int D>
struct MotionTrajectory {
    std::vector<StructureState<D - 1>> structures;
    std::vector<FluidState<D>> fluids;
    std::vector<std::shared_ptr<const HanzawaMap<D>>> maps;
};

template <int D>
struct SoluteTrajectory {
    std::vector<SoluteState<D>> states;
};

/// Orchestrates the partitioned solution architecture: the solvent-structure
/// subproblem driver (given extra stress), the solute subproblem driver
/// (given motion), the fixed-point window iteration, and the global
/// window-by-window extension.
template <int D>
class CoupledDriver {
public:
    static constexpr int DM = D - 1;

    CoupledDriver(const ReferenceGeometry<D>& geom, const Grid<D>& grid,
                  const StructureMesh<DM>& mesh, FluidConfig<D> fluid_cfg = {},
                  SoluteConfig<D> solute_cfg = {}, double breach_fraction = 0.95)
        : geom_(geom), grid_(grid), mesh_(mesh), fluid_(grid, fluid_cfg),
          solute_(grid, solute_cfg), breach_limit_(breach_fraction * geom.tube_halfwidth) {}

    const Grid<D>& grid() const { return grid_; }
    const StructureMesh<DM>& structure_mesh() const { return mesh_; }
    const ReferenceGeometry<D>& geometry() const { return geom_; }
    double breach_limit() const { return breach_limit_; }
    FluidStepper<D>& fluid_stepper() { return fluid_; }
    SoluteStepper<D>& solute_stepper() { return solute_; }

    CoupledState<D> make_initial_state(const ScalarField& eta0, const ScalarField& etastar,
                                       const FluidState<D>& fluid0,
                                       const SoluteState<D>& solute0) const {
        CoupledState<D> s;
        s.structure.mesh = mesh_;
        s.structure.displacement = eta0;
        s.structure.velocity = etastar;
        s.fluid = fluid0;
        s.solute = solute0;
        s.map = std::make_shared<HanzawaMap<D>>(geom_, grid_, mesh_, eta0);
        return s;
    }

    /// One motion step with a frozen extra stress: stress assembly, wall
    /// traction, pressure-level compatibility (keeps the mean interface
    /// velocity at zero so the projection stays solvable), shell step, map
    /// rebuild, fluid step with the new interface trace.
    void motion_step(CoupledState<D>& state, const SymField<D>& stress_given,
                     const Forcing<D>& forcing, double dt) {
        auto S = compute_stress_S(grid_, state.fluid, stress_given, *state.map);
        auto S_wall = wall_stress(grid_, S);

        auto eta_modes = to_modes(mesh_, state.structure.displacement);
        auto boundary = build_deformed_boundary<D>(
            resample_modes(eta_modes, grid_columns()), 0.5);
        ScalarField traction_cols = compute_structure_traction(S_wall, boundary);
        ScalarField traction = columns_to_structure(traction_cols);

        // pressure-level multiplier: the shell mean velocity must stay zero
        // (adding a constant to p adds a uniform unit load on the graph wall)
        double mean_load = 0, mean_vel = 0;
        for (int i = 0; i < mesh_.nnodes(); ++i) {
            mean_load += forcing.g[i] + traction[i];
            mean_vel += state.structure.velocity[i];
        }
        mean_load /= mesh_.nnodes();
        mean_vel /= mesh_.nnodes();
        double lambda = -mean_load - mean_vel / dt;

        StructureLoad<DM> load;
        load.body_force = forcing.g;
        load.fluid_traction = traction;
        for (auto& v : load.fluid_traction) v += lambda;

        auto shell_next = step_shell(state.structure, load, dt, breach_limit_);
        auto map_next = std::make_shared<HanzawaMap<D>>(geom_, grid_, mesh_,
                                                        shell_next.displacement);
        auto wall_modes = to_modes(mesh_, shell_next.velocity);

        fluid_.step(state.fluid, *state.map, *map_next, wall_modes, forcing.f, stress_given, dt);
        state.fluid.pressure_offset = lambda;
        state.structure = shell_next;
        state.map = map_next;
        state.time += dt;
    }

    /// One solute step driven by the current fluid motion over [t, t+dt].
    void solute_step(CoupledState<D>& state, const HanzawaMap<D>& map_prev, double dt) {
        ScalarField rho_old = state.solute.density;
        solute_.step_density(state.solute, state.fluid.face_flux, map_prev, *state.map, dt);
        auto gradu = mapped_velocity_gradient(grid_, state.fluid, *state.map);
        solute_.step_stress(state.solute, rho_old, state.fluid.velocity, gradu, map_prev,
                            *state.map, dt);
    }

    /// One explicit partitioned sweep (motion with the current stress, then
    /// solute with the new motion).
    void step_coupled(CoupledState<D>& state, const Forcing<D>& forcing, double dt) {
        auto map_prev = state.map;
        SymField<D> frozen = state.solute.stress;
        motion_step(state, frozen, forcing, dt);
        solute_step(state, *map_prev, dt);
    }

    /// Solvent-structure subproblem over a window with the stress trajectory
    /// frozen. Returns the full motion trajectory (index 0 = window start).
    MotionTrajectory<D> solve_solvent_structure_window(const CoupledState<D>& start,
                                                       const std::vector<SymField<D>>& stress_traj,
                                                       const Forcing<D>& forcing, double dt) {
        MotionTrajectory<D> traj;
        CoupledState<D> s = start;
        traj.structures.push_back(s.structure);
        traj.fluids.push_back(s.fluid);
        traj.maps.push_back(s.map);
        for (size_t k = 0; k < stress_traj.size(); ++k) {
            motion_step(s, stress_traj[k], forcing, dt);
            traj.structures.push_back(s.structure);
            traj.fluids.push_back(s.fluid);
            traj.maps.push_back(s.map);
        }
        return traj;
    }

    /// Solute subproblem over a window with the motion frozen.
    SoluteTrajectory<D> solve_solute_window(const MotionTrajectory<D>& motion,
                                            const SoluteState<D>& solute0, double dt) {
        SoluteTrajectory<D> traj;
        SoluteStepper<D> stepper(grid_, solute_.config());
        SoluteState<D> s = solute0;
        traj.states.push_back(s);
        const size_t nsteps = motion.maps.size() - 1;
        for (size_t k = 0; k < nsteps; ++k) {
            ScalarField rho_old = s.density;
            stepper.step_density(s, motion.fluids[k + 1].face_flux, *motion.maps[k],
                                 *motion.maps[k + 1], dt);
            auto gradu =
                mapped_velocity_gradient(grid_, motion.fluids[k + 1], *motion.maps[k + 1]);
            stepper.step_stress(s, rho_old, motion.fluids[k + 1].velocity, gradu,
                                *motion.maps[k], *motion.maps[k + 1], dt);
            traj.states.push_back(s);
        }
        return traj;
    }

    /// Y-norm of the difference of two solute trajectories on the window:
    /// sup-in-time L2 plus the time-integrated H1 seminorm, J-weighted on
    /// the current iterate's domain (fields compared through the shared
    /// reference coordinates, i.e. the transformed-difference device).
    double ynorm_difference(const SoluteTrajectory<D>& a, const SoluteTrajectory<D>& b,
                            const MotionTrajectory<D>& motion_a, double dt) const {
        double sup_l2 = 0, int_h1 = 0;
        const size_t n = a.states.size();
        for (size_t k = 0; k < n; ++k) {
            const auto& map = *motion_a.maps[k];
            double l2 = 0, h1 = 0;
            ScalarField drho(grid_.ncells());
            std::array<ScalarField, sym_components(D)> dT;
            for (auto& c : dT) c.resize(grid_.ncells());
            for (int i = 0; i < grid_.ncells(); ++i) {
                drho[i] = a.states[k].density[i] - b.states[k].density[i];
                for (int c = 0; c < sym_components(D); ++c)
                    dT[c][i] = a.states[k].stress.comp[c][i] - b.states[k].stress.comp[c][i];
            }
            grid_.for_cells([&](int idx, const std::array<int, D>& iv) {
                double point_l2 = drho[idx] * drho[idx];
                Vec<D> gr = map.apply_B_cell(idx, gradient_neumann(grid_, drho, iv));
                double point_h1 = gr.dot(gr);
                for (int c = 0; c < sym_components(D); ++c) {
                    double w = (c < D) ? 1.0 : 2.0; // off-diagonals count twice
                    point_l2 += w * dT[c][idx] * dT[c][idx];
                    Vec<D> gt = map.apply_B_cell(idx, gradient_neumann(grid_, dT[c], iv));
                    point_h1 += w * gt.dot(gt);
                }
                l2 += map.J_cell(idx) * point_l2 * grid_.cell_volume();
                h1 += map.J_cell(idx) * point_h1 * grid_.cell_volume();
            });
            sup_l2 = std::max(sup_l2, l2);
            int_h1 += dt * h1;
        }
        return std::sqrt(sup_l2) + std::sqrt(int_h1);
    }

    /// Ball monitor: sup-in-time H1 norm of the solute iterate.
    double xnorm_monitor(const SoluteTrajectory<D>& traj,
                         const MotionTrajectory<D>& motion) const {
        double sup = 0;
        for (size_t k = 0; k < traj.states.size(); ++k) {
            const auto& map = *motion.maps[k];
            double acc = 0;
            grid_.for_cells([&](int idx, const std::array<int, D>& iv) {
                double v = traj.states[k].density[idx] * traj.states[k].density[idx];
                Vec<D> gr = map.apply_B_cell(idx,
                                             gradient_neumann(grid_, traj.states[k].density, iv));
                v += gr.dot(gr);
                for (int c = 0; c < sym_components(D); ++c) {
                    double w = (c < D) ? 1.0 : 2.0;
                    v += w * traj.states[k].stress.comp[c][idx]
                         * traj.states[k].stress.comp[c][idx];
                    Vec<D> gt = map.apply_B_cell(
                        idx, gradient_neumann(grid_, traj.states[k].stress.comp[c], iv));
                    v += w * gt.dot(gt);
                }
                acc += map.J_cell(idx) * v * grid_.cell_volume();
            });
            sup = std::max(sup, acc);
        }
        return std::sqrt(sup);
    }

    struct WindowResult {
        WindowReport report;
        MotionTrajectory<D> motion;
        SoluteTrajectory<D> solute;
    };

    /// Fixed-point iteration on one window: alternate the solvent-structure
    /// and solute subproblems from a frozen stress trajectory until the
    /// Y-norm of successive solute iterates drops below tolerance.
    WindowResult fixed_point_window(const CoupledState<D>& start, const Forcing<D>& forcing,
                                    const FixedPointConfig& cfg, double dt, int nsteps) {
        WindowResult res;
        res.report.t_start = start.time;
        res.report.window = nsteps * dt;

        // initial iterate: constant-in-time extrapolation of the start state
        SoluteTrajectory<D> iterate;
        iterate.states.assign(nsteps + 1, start.solute);
        double theta = cfg.relaxation;
        double prev_norm = -1;

        for (int it = 1; it <= cfg.max_iterations; ++it) {
            std::vector<SymField<D>> stress_traj(nsteps);
            for (int k = 0; k < nsteps; ++k) stress_traj[k] = iterate.states[k].stress;

            auto motion = solve_solvent_structure_window(start, stress_traj, forcing, dt);
            auto next = solve_solute_window(motion, start.solute, dt);

            double diff = ynorm_difference(next, iterate, motion, dt);
            res.report.y_norms.push_back(diff);
            if (prev_norm > 0) {
                double ratio = (prev_norm > 1e-300) ? diff / prev_norm : 0.0;
                res.report.ratios.push_back(ratio);
                if (ratio > 1.0) theta = std::max(0.25, 0.5 * theta); // damp on oscillation
            }
            res.report.iterations = it;

            if (theta == 1.0) {
                iterate = next;
            } else {
                for (int k = 0; k <= nsteps; ++k) {
                    for (int i = 0; i < grid_.ncells(); ++i) {
                        iterate.states[k].density[i] =
                            (1 - theta) * iterate.states[k].density[i]
                            + theta * next.states[k].density[i];
                        for (int c = 0; c < sym_components(D); ++c)
                            iterate.states[k].stress.comp[c][i] =
                                (1 - theta) * iterate.states[k].stress.comp[c][i]
                                + theta * next.states[k].stress.comp[c][i];
                    }
                }
            }
            prev_norm = diff;

            if (diff <= cfg.tolerance) {
                // accepted windows must contract: ratios above 1 - margin
                // mean the window is too long for this data
                for (double r : res.report.ratios)
                    if (r > 1.0 - cfg.contraction_margin)
                        throw NoContraction("window converged but the contraction ratio "
                                            + std::to_string(r) + " exceeds 1 - margin");
                res.report.converged = true;
                res.report.theta_final = theta;
                res.report.x_norm = xnorm_monitor(next, motion);
                res.motion = std::move(motion);
                res.solute = std::move(next);
                return res;
            }
        }
        throw NoContraction("window fixed point did not converge in "
                            + std::to_string(cfg.max_iterations) + " iterations (last diff "
                            + std::to_string(prev_norm) + ")");
    }

    /// Max interface residual |u o phi_eta - eta_t n| measured by one-sided
    /// extrapolation of the cell velocity to the wall.
    double interface_residual(const CoupledState<D>& state) const {
        const int nz = grid_.n[D - 1];
        ScalarField wall_vel_cols = structure_to_columns(state.structure.velocity);
        double worst = 0;
        grid_.for_cells([&](int idx, const std::array<int, D>& iv) {
            if (iv[D - 1] != nz - 1) return;
            auto iv2 = iv, iv3 = iv;
            iv2[D - 1] = nz - 2;
            iv3[D - 1] = nz - 3;
            int col = grid_.column_of(iv);
            for (int a = 0; a < D; ++a) {
                double uw = (15.0 * state.fluid.velocity.comp[a][idx]
                             - 10.0 * state.fluid.velocity.comp[a][grid_.index(iv2)]
                             + 3.0 * state.fluid.velocity.comp[a][grid_.index(iv3)])
                            / 8.0;
                double target = (a == D - 1) ? wall_vel_cols[col] : 0.0;
                worst = std::max(worst, std::abs(uw - target));
            }
        });
        return worst;
    }

    // structure-mesh <-> grid-column resampling (spectral) -----------------

    ScalarField structure_to_columns(const ScalarField& nodal) const {
        auto modes = resample_modes(to_modes(mesh_, nodal), grid_columns());
        std::array<double, DM> shift;
        for (int a = 0; a < DM; ++a) shift[a] = 0.5 * grid_.h[a];
        return sample_shifted(modes, shift, std::array<int, DM>{});
    }

    ScalarField columns_to_structure(const ScalarField& cols) const {
        StructureMesh<DM> colmesh(grid_columns(), geom_.structure_extent());
        auto modes = to_modes(colmesh, cols);
        std::array<double, DM> shift;
        for (int a = 0; a < DM; ++a) shift[a] = 0.5 * grid_.h[a];
        // samples live at half-shifted positions: shift back, then resample
        for (size_t m = 0; m < modes.modes.size(); ++m) {
            auto k = modes.wavevector(int(m));
            double phase = 0;
            for (int a = 0; a < DM; ++a) phase += k[a] * shift[a];
            modes.modes[m] *= std::exp(Cplx(0, phase));
        }
        auto res = resample_modes(modes, mesh_.n);
        return to_nodal(res);
    }

private:
    std::array<int, DM> grid_columns() const {
        std::array<int, DM> n;
        for (int a = 0; a < DM; ++a) n[a] = grid_.n[a];
        return n;
    }

    ReferenceGeometry<D> geom_;
    Grid<D> grid_;
    StructureMesh<DM> mesh_;
    FluidStepper<D> fluid_;
    SoluteStepper<D> solute_;
    double breach_limit_;
};

// global run -------------------------------------------------------------------

struct WindowEvent {
    int index;
    double t_start;
    double window;
    int iterations;
    bool converged;
    std::vector<double> ratios;
    double theta;
    double x_norm;
};

template <int D>
struct GlobalReport {
    RunStatus status = RunStatus::HorizonReached;
    double final_time = 0;
    double energy_data = 0; // E_w of the dataset
    EnergyLedger energy;
    LPSMonitor lps;
    AccelerationLedger acceleration;
    std::vector<MassAudit<D>> mass;
    std::vector<double> trace_residuals;
    std::vector<double> interface_residuals;
    std::vector<WindowEvent> windows;
};

/// Chain fixed-point windows to the horizon, shrinking the window on
/// NoContraction and re-expanding after successes. Diagnostics are replayed
/// over each accepted window's trajectory. TubeBreach terminates the run
/// cleanly (reported in the status, the last accepted state preserved).
template <int D>
using StepCallback = std::function<void(int step, double t, const StructureState<D - 1>&,
                                        const FluidState<D>&, const SoluteState<D>&,
                                        const HanzawaMap<D>&)>;

template <int D>
GlobalReport<D> run_global(CoupledDriver<D>& driver, CoupledState<D>& state,
                           const Forcing<D>& forcing, double horizon, FixedPointConfig cfg,
                           double dt, const LPSMonitor& lps_init = LPSMonitor(),
                           const std::function<void(const WindowEvent&)>& on_window = {},
                           const StepCallback<D>& on_step = {}) {
    GlobalReport<D> rep;
    rep.lps = lps_init;
    rep.energy_data = energy_data_functional(driver.grid(), *state.map, state.fluid,
                                             state.solute, state.structure, forcing.f,
                                             forcing.g, horizon);

    double window = cfg.window_length;
    int windex = 0;
    int successes = 0;
    int global_step = 0;
    const double tiny = 1e-12;

    // t = 0 diagnostics row
    update_energy(rep.energy, driver.grid(), *state.map, state.fluid, state.solute,
                  state.structure, forcing.f, forcing.g, state.time, 0.0);
    rep.mass.push_back(mass_audit(driver.grid(), *state.map, state.solute));

    while (state.time < horizon - tiny) {
        double remaining = horizon - state.time;
        double w = std::min(window, remaining);
        int nsteps = std::max(1, int(std::lround(w / dt)));
        if (nsteps * dt > remaining + tiny) nsteps = std::max(1, int(remaining / dt));

        typename CoupledDriver<D>::WindowResult result;
        try {
            result = driver.fixed_point_window(state, forcing, cfg, dt, nsteps);
        } catch (const NoContraction&) {
            if (window <= 2.0 * dt + tiny) {
                rep.status = RunStatus::NoContractionStop;
                rep.final_time = state.time;
                return rep;
            }
            window = std::max(2.0 * dt, 0.5 * window);
            successes = 0;
            continue;
        } catch (const TubeBreach&) {
            rep.status = RunStatus::TubeBreached;
            rep.final_time = state.time;
            return rep;
        }

        // replay diagnostics along the accepted trajectory
        for (int k = 0; k < nsteps; ++k) {
            const auto& m0 = *result.motion.maps[k];
            const auto& m1 = *result.motion.maps[k + 1];
            double t1 = state.time + (k + 1) * dt;
            update_energy(rep.energy, driver.grid(), m1, result.motion.fluids[k + 1],
                          result.solute.states[k + 1], result.motion.structures[k + 1],
                          forcing.f, forcing.g, t1, dt);
            lps_update(rep.lps, driver.grid(), m1, result.motion.fluids[k + 1],
                       result.motion.structures[k + 1], dt);
            acceleration_update(rep.acceleration, driver.grid(), m0, m1,
                                result.motion.fluids[k], result.motion.fluids[k + 1],
                                result.solute.states[k], result.solute.states[k + 1],
                                result.motion.structures[k], result.motion.structures[k + 1],
                                dt);
            rep.trace_residuals.push_back(trace_identity_residual(
                driver.grid(), m0, m1, result.motion.fluids[k], result.motion.fluids[k + 1],
                result.solute.states[k], result.solute.states[k + 1], dt));
            rep.mass.push_back(
                mass_audit(driver.grid(), m1, result.solute.states[k + 1]));
            if (on_step)
                on_step(global_step + k + 1, t1, result.motion.structures[k + 1],
                        result.motion.fluids[k + 1], result.solute.states[k + 1], m1);
        }
        global_step += nsteps;

        // advance the state to the window end
        state.structure = result.motion.structures.back();
        state.fluid = result.motion.fluids.back();
        state.map = result.motion.maps.back();
        state.solute = result.solute.states.back();
        state.time += nsteps * dt;

        CoupledState<D> probe = state;
        rep.interface_residuals.push_back(driver.interface_residual(probe));

        WindowEvent ev{windex++, result.report.t_start, result.report.window,
                       result.report.iterations, result.report.converged,
                       result.report.ratios, result.report.theta_final,
                       result.report.x_norm};
        rep.windows.push_back(ev);
        if (on_window) on_window(ev);

        if (++successes >= 2 && window < cfg.window_length) {
            window = std::min(cfg.window_length, 2.0 * window);
            successes = 0;
        }
    }
    rep.status = RunStatus::HorizonReached;
    rep.final_time = state.time;
    return rep;
}

} // namespace pfsi
