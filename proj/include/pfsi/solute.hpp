#pragma once

#include "pfsi/core/ops.hpp"
#include "pfsi/fluid.hpp"

namespace pfsi {

/// Polymer number density and extra stress tensor (upper triangle storage,
/// so symmetry holds structurally).
template <int D>
struct SoluteState {
    ScalarField density;
    SymField<D> stress;

    static SoluteState uniform(const Grid<D>& g, double rho0, const SymMat<D>& T0) {
        SoluteState s;
        s.density.assign(g.ncells(), rho0);
        s.stress.resize(g.ncells());
        for (int i = 0; i < g.ncells(); ++i) s.stress.set(i, T0);
        return s;
    }

    static SoluteState equilibrium(const Grid<D>& g, double rho0) {
        SymMat<D> T0 = SymMat<D>::identity();
        T0 *= rho0;
        return uniform(g, rho0, T0);
    }
};

template <int D>
struct PositivityReport {
    double min_density;
    int min_density_cell;
    double min_stress_eigenvalue;
    int min_stress_cell;
};

/// Pointwise minima of the density and of the smallest stress eigenvalue.
template <int D>
PositivityReport<D> check_positivity(const SoluteState<D>& state) {
    PositivityReport<D> r{};
    r.min_density = state.density.empty() ? 0.0 : state.density[0];
    r.min_density_cell = 0;
    r.min_stress_eigenvalue = state.stress.comp[0].empty()
                                  ? 0.0
                                  : state.stress.at(0).min_eigenvalue();
    r.min_stress_cell = 0;
    for (size_t i = 0; i < state.density.size(); ++i) {
        if (state.density[i] < r.min_density) {
            r.min_density = state.density[i];
            r.min_density_cell = int(i);
        }
        double ev = state.stress.at(int(i)).min_eigenvalue();
        if (ev < r.min_stress_eigenvalue) {
            r.min_stress_eigenvalue = ev;
            r.min_stress_cell = int(i);
        }
    }
    return r;
}

template <int D>
struct SoluteConfig {
    double cfl_limit = 0.5;
    double negative_density_tol = 1e-10;
    double relaxation_rate = 2.0; // Oldroyd-B relaxation toward rho I
};

/// Semi-implicit solute stepper: conservative flux-form advection of the
/// density (mass-exact on the moving domain), non-conservative advected
/// stress with the upper-convected source, Crank-Nicolson diffusion and
/// relaxation, Adams-Bashforth advective terms.
template <int D>
class SoluteStepper {
public:
    SoluteStepper(const Grid<D>& grid, SoluteConfig<D> cfg = {}) : grid_(grid), cfg_(cfg) {}

    const Grid<D>& grid() const { return grid_; }
    const SoluteConfig<D>& config() const { return cfg_; }

    /// Drop the multistep history (call when a run or window restarts).
    void reset_history() {
        has_rho_history_ = false;
        has_stress_history_ = false;
    }

    /// Advance the density: d/dt (J rho) + div_f(rho V_ale) = div_f(A grad rho),
    /// with the fluid's post-projection contravariant fluxes, zero-flux walls.
    void step_density(SoluteState<D>& state, const Eigen::VectorXd& fluid_flux,
                      const HanzawaMap<D>& map_prev, const HanzawaMap<D>& map_next, double dt) {
        const Grid<D>& g = grid_;
        const int nc = g.ncells();
        ensure_operators(map_prev, map_next, dt);

        Eigen::VectorXd V = ale_fluxes(fluid_flux, map_prev, map_next, dt);
        check_cfl(V, map_next, dt);

        // advective face fluxes rho_bar * V (wall faces carry none)
        Eigen::VectorXd adv = Eigen::VectorXd::Zero(total_faces(g));
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            for (int a = 0; a < D; ++a) {
                const bool top_wall = (a == D - 1) && g.vertical_walls && iv[a] == g.n[a] - 1;
                if (top_wall) continue;
                int nb = g.neighbor(iv, a, +1);
                double rbar = 0.5 * (state.density[idx] + state.density[nb]);
                adv[face_index(g, a, idx)] = rbar * V[face_index(g, a, idx)];
            }
        });
        ScalarField Nn = divergence_faces(g, adv);
        for (auto& v : Nn) v = -v;

        ScalarField nab2(nc);
        for (int i = 0; i < nc; ++i)
            nab2[i] = has_rho_history_ ? 1.5 * Nn[i] - 0.5 * rho_hist_[i] : Nn[i];
        rho_hist_ = Nn;
        has_rho_history_ = true;

        Eigen::VectorXd Ldiff_old = op_prev_.L * to_eigen(state.density);
        Eigen::VectorXd rhs(nc);
        for (int i = 0; i < nc; ++i)
            rhs[i] = map_prev.J_cell(i) * state.density[i] + dt * nab2[i]
                     + 0.5 * dt * Ldiff_old[i];

        state.density = from_eigen(rho_solver_.solve(rhs));

        double mn = field_min(state.density);
        if (mn < -cfg_.negative_density_tol)
            throw NegativeDensity("min density " + std::to_string(mn)
                                  + " fell below the tolerance band");
    }

    /// Advance the extra stress with a given velocity and mapped velocity
    /// gradient: explicit advection + upper-convected source, Crank-Nicolson
    /// diffusion and relaxation, the density source taken at both levels.
    void step_stress(SoluteState<D>& state, const ScalarField& rho_old,
                     const VecField<D>& u, const std::vector<Mat<D>>& grad_u,
                     const HanzawaMap<D>& map_prev, const HanzawaMap<D>& map_next, double dt) {
        const Grid<D>& g = grid_;
        const int nc = g.ncells();
        constexpr int NC = sym_components(D);
        ensure_operators(map_prev, map_next, dt);

        const double kappa = cfg_.relaxation_rate;

        // explicit term: -(c . B grad) T + (grad u) T + T (grad u)^T
        std::array<ScalarField, NC> Nn;
        for (auto& f : Nn) f.assign(nc, 0.0);
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            Vec<D> c = u.at(idx);
            c[D - 1] -= (map_next.delta_cell(idx) - map_prev.delta_cell(idx)) / dt;
            Vec<D> e = map_prev.B_cell(idx).apply_transpose(c);
            SymMat<D> uc = SymMat<D>::upper_convected(grad_u[idx], state.stress.at(idx));
            for (int k = 0; k < NC; ++k) {
                Vec<D> grad = gradient_neumann(g, state.stress.comp[k], iv);
                Nn[k][idx] = -e.dot(grad) + uc.c[k];
            }
        });
        if (!has_stress_history_) stress_hist_ = Nn;

        // shared factorization for all tensor components
        for (int k = 0; k < NC; ++k) {
            Eigen::VectorXd Lold = op_prev_.L * to_eigen(state.stress.comp[k]);
            Eigen::VectorXd rhs(nc);
            const bool diag = k < D;
            for (int i = 0; i < nc; ++i) {
                double nab2 = 1.5 * Nn[k][i] - 0.5 * stress_hist_[k][i];
                double J1 = map_next.J_cell(i);
                double J0 = map_prev.J_cell(i);
                double source = diag ? 0.5 * kappa * dt * (state.density[i] + rho_old[i]) : 0.0;
                rhs[i] = J1 * (state.stress.comp[k][i] * (1.0 - 0.5 * kappa * dt)
                               + dt * nab2 + source)
                         + 0.5 * dt * (J1 / J0) * Lold[i];
            }
            state.stress.comp[k] = from_eigen(stress_solver_.solve(rhs));
        }
        stress_hist_ = Nn;
        has_stress_history_ = true;
    }

private:
    /// ALE advective fluxes: fluid contravariant fluxes minus the domain
    /// flux (vertical faces move with the map increment).
    Eigen::VectorXd ale_fluxes(const Eigen::VectorXd& fluid_flux, const HanzawaMap<D>& map_prev,
                               const HanzawaMap<D>& map_next, double dt) const {
        const Grid<D>& g = grid_;
        Eigen::VectorXd V = fluid_flux;
        g.for_cells([&](int idx, const std::array<int, D>&) {
            double w = (map_next.delta_vface(idx) - map_prev.delta_vface(idx)) / dt;
            V[face_index(g, D - 1, idx)] -= w;
        });
        return V;
    }

    void check_cfl(const Eigen::VectorXd& V, const HanzawaMap<D>& map, double dt) const {
        const Grid<D>& g = grid_;
        double worst = 0;
        g.for_cells([&](int idx, const std::array<int, D>&) {
            double s = 0;
            for (int a = 0; a < D; ++a)
                s += std::abs(V[face_index(g, a, idx)]) / (map.J_face(a, idx) * g.h[a]);
            worst = std::max(worst, s * dt);
        });
        if (worst > cfg_.cfl_limit)
            throw CFLViolation("solute advective CFL " + std::to_string(worst) + " exceeds limit "
                               + std::to_string(cfg_.cfl_limit));
    }

    void ensure_operators(const HanzawaMap<D>& map_prev, const HanzawaMap<D>& map_next,
                          double dt) {
        if (prev_id_ != map_prev.id()) {
            if (map_prev.id() == next_id_)
                op_prev_ = op_next_;
            else
                op_prev_ = assemble_flux_operator(grid_, map_prev, WallFlux::Zero);
            prev_id_ = map_prev.id();
        }
        if (next_id_ != map_next.id() || dt_ != dt) {
            if (next_id_ != map_next.id()) {
                op_next_ = (map_next.id() == prev_id_)
                               ? op_prev_
                               : assemble_flux_operator(grid_, map_next, WallFlux::Zero);
                next_id_ = map_next.id();
            }
            const int nc = grid_.ncells();
            std::vector<Triplet> trip;
            trip.reserve(nc);
            for (int i = 0; i < nc; ++i) trip.emplace_back(i, i, map_next.J_cell(i));
            SpMat J1(nc, nc);
            J1.setFromTriplets(trip.begin(), trip.end());

            SpMat Mrho = J1 - 0.5 * dt * op_next_.L;
            rho_solver_.factor(Mrho);
            SpMat Mt = (1.0 + 0.5 * cfg_.relaxation_rate * dt) * J1 - 0.5 * dt * op_next_.L;
            stress_solver_.factor(Mt);
            dt_ = dt;
        }
    }

    Grid<D> grid_;
    SoluteConfig<D> cfg_;

    FluxOperator<D> op_prev_, op_next_;
    std::uint64_t prev_id_ = 0;
    std::uint64_t next_id_ = 0;
    double dt_ = -1;

    DirectSolver rho_solver_, stress_solver_;
    ScalarField rho_hist_;
    std::array<ScalarField, sym_components(D)> stress_hist_;
    bool has_rho_history_ = false;
    bool has_stress_history_ = false;
};

} // namespace pfsi
