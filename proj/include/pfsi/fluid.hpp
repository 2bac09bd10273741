#pragma once

#include "pfsi/core/ops.hpp"
#include "pfsi/shell.hpp"

namespace pfsi {

/// Solvent state on the reference grid (physical velocity components and
/// pressure sampled at cell centers, pulled back by the current map).
template <int D>
struct FluidState {
    VecField<D> velocity;
    ScalarField pressure;        // mean-zero projection pressure
    double pressure_offset = 0;  // global constant fixed by the load balance
    ScalarField wall_velocity;   // interface normal velocity at grid columns
    Eigen::VectorXd face_flux;   // contravariant fluxes after projection
    bool face_flux_current = false; // fluxes consistent with the velocity

    static FluidState rest(const Grid<D>& g) {
        FluidState s;
        s.velocity.resize(g.ncells());
        s.pressure.assign(g.ncells(), 0.0);
        s.wall_velocity.assign(g.ncolumns(), 0.0);
        s.face_flux = Eigen::VectorXd::Zero(total_faces(g));
        s.face_flux_current = true;
        return s;
    }

    ScalarField physical_pressure() const {
        ScalarField p = pressure;
        for (auto& v : p) v += pressure_offset;
        return p;
    }
};

/// Symmetric solvent stress S = grad u + (grad u)^T - p I + T in deformed
/// coordinates, assembled with mapped gradients on the reference grid.
template <int D>
using StressTensorS = SymField<D>;

template <int D>
struct FluidConfig {
    double viscosity = 1.0;
    double density = 1.0;
    double cfl_limit = 0.5;
    double divergence_check = 1e-8;
};

/// Contravariant face fluxes of a cell velocity: interpolate to faces and
/// apply J F^{-1}; the top wall flux is the prescribed interface velocity
/// (exactly), the rigid bottom wall flux is zero.
template <int D>
Eigen::VectorXd contravariant_face_fluxes(const Grid<D>& g, const HanzawaMap<D>& map,
                                          const VecField<D>& u, const ScalarField& wall_vel) {
    Eigen::VectorXd V = Eigen::VectorXd::Zero(total_faces(g));
    g.for_cells([&](int idx, const std::array<int, D>& iv) {
        for (int a = 0; a < D; ++a) {
            const bool top_wall = (a == D - 1) && g.vertical_walls && iv[a] == g.n[a] - 1;
            if (top_wall) {
                V[face_index(g, a, idx)] = wall_vel[g.column_of(iv)];
                continue;
            }
            int nb = g.neighbor(iv, a, +1);
            Vec<D> w;
            for (int i = 0; i < D; ++i) w[i] = 0.5 * (u.comp[i][idx] + u.comp[i][nb]);
            V[face_index(g, a, idx)] = map.contravariant_face(a, idx, w);
        }
    });
    return V;
}

/// Projection-method solvent stepper in mapped (ALE) coordinates. Owns the
/// per-step operator assembly; one instance drives one grid.
template <int D>
class FluidStepper {
public:
    static constexpr int DM = D - 1;

    FluidStepper(const Grid<D>& grid, FluidConfig<D> cfg = {}) : grid_(grid), cfg_(cfg) {}

    const Grid<D>& grid() const { return grid_; }
    const FluidConfig<D>& config() const { return cfg_; }

    /// One step of the semi-implicit ALE projection scheme: explicit mapped
    /// advection (domain velocity from the map increment), implicit mapped
    /// diffusion with the interface Dirichlet trace, then pressure
    /// projection on the face fluxes.
    void step(FluidState<D>& state, const HanzawaMap<D>& map_prev, const HanzawaMap<D>& map_next,
              const SpectralField<DM>& wall_velocity_modes, const VecField<D>& body_force,
              const SymField<D>& extra_stress, double dt) {
        const Grid<D>& g = grid_;
        const int nc = g.ncells();

        // interface trace at grid columns (cell-centered horizontal shift)
        ScalarField wall_new(g.ncolumns(), 0.0);
        std::array<ScalarField, DM> wall_grad;
        for (int h = 0; h < DM; ++h) wall_grad[h].assign(g.ncolumns(), 0.0);
        if (g.vertical_walls) {
            auto resampled = resample_modes(wall_velocity_modes, horizontal_counts());
            std::array<double, DM> shift;
            for (int a = 0; a < DM; ++a) shift[a] = 0.5 * g.h[a];
            wall_new = sample_shifted(resampled, shift, std::array<int, DM>{});
            for (int h = 0; h < DM; ++h) {
                std::array<int, DM> dv{};
                dv[h] = 1;
                wall_grad[h] = sample_shifted(resampled, shift, dv);
            }
        }

        // ALE advective velocity and CFL check
        VecField<D> cvel = state.velocity;
        for (int i = 0; i < nc; ++i)
            cvel.comp[D - 1][i] -= (map_next.delta_cell(i) - map_prev.delta_cell(i)) / dt;
        check_cfl(cvel, dt);

        // explicit right-hand side
        std::array<ScalarField, D> rhs;
        for (int i = 0; i < D; ++i) rhs[i].assign(nc, 0.0);
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            int col = g.column_of(iv);
            Mat<D> B = map_prev.B_cell(idx);
            Vec<D> e = B.apply_transpose(cvel.at(idx));
            Vec<D> gradp = B.apply(gradient_neumann(g, state.pressure, iv));
            double Jn = map_next.J_cell(idx);

            for (int i = 0; i < D; ++i) {
                // advection of component i with its own wall trace
                Vec<D> du = (i == D - 1 && g.vertical_walls)
                                ? gradient_dirichlet(g, state.velocity.comp[i], iv,
                                                     state.wall_velocity, col)
                                : gradient_wall_aware(state.velocity.comp[i], iv);
                double adv = e.dot(du);

                // mapped divergence of the extra stress (row i)
                double divT = 0;
                for (int k = 0; k < D; ++k) {
                    // d/dx_k of T_i., contracted with B column k
                    Vec<D> dT;
                    for (int j = 0; j < D; ++j) {
                        dT[j] = derivative_neumann(extra_stress.comp[detail::sym_index<D>(i, j)],
                                                   iv, k);
                    }
                    for (int j = 0; j < D; ++j) divT += B(j, k) * dT[j];
                }

                rhs[i][idx] = cfg_.density * Jn / dt * state.velocity.comp[i][idx]
                              + Jn * (cfg_.density * (-adv) + body_force.comp[i][idx] + divT
                                      - gradp[i]);
            }
        });

        // implicit diffusion with Dirichlet walls (factorization cached
        // while the map and step size stay frozen)
        refresh_cache(map_next, dt);
        const auto& op_dir = cache_.op_dir;
        const DirectSolver& momentum = cache_.momentum;

        std::array<ScalarField, DM> zero_grad;
        for (int h = 0; h < DM; ++h) zero_grad[h].assign(g.ncolumns(), 0.0);
        ScalarField zero_wall(g.ncolumns(), 0.0);

        VecField<D> ustar;
        ustar.resize(nc);
        for (int i = 0; i < D; ++i) {
            ScalarField bc = (i == D - 1)
                                 ? dirichlet_rhs(op_dir, wall_new, wall_grad)
                                 : dirichlet_rhs(op_dir, zero_wall, zero_grad);
            Eigen::VectorXd b = to_eigen(rhs[i]) + cfg_.viscosity * to_eigen(bc);
            ustar.comp[i] = from_eigen(momentum.solve(b));
        }

        // contravariant face fluxes of the provisional velocity
        Eigen::VectorXd V = face_fluxes(ustar, map_next, wall_new);

        // pressure projection on the face fluxes
        project_fluxes(state, ustar, V, map_next, dt);

        state.velocity = ustar;
        state.face_flux = V;
        state.face_flux_current = true;
        state.wall_velocity = wall_new;

        double div = mapped_divergence_max(V, map_next);
        if (div > cfg_.divergence_check)
            throw ProjectionSolveFailure("post-projection divergence " + std::to_string(div));
    }

    /// Projection of the current state onto the discretely divergence-free
    /// space (mapped face-flux divergence below solver tolerance). Reuses
    /// the stored face fluxes when they are still consistent with the
    /// velocity, which makes the projection idempotent.
    void project(FluidState<D>& state, const HanzawaMap<D>& map) {
        refresh_cache(map, cache_.dt > 0 ? cache_.dt : 1.0);
        Eigen::VectorXd V = state.face_flux_current
                                ? state.face_flux
                                : face_fluxes(state.velocity, map, state.wall_velocity);
        VecField<D> u = state.velocity;
        project_fluxes(state, u, V, map, 1.0);
        state.velocity = u;
        state.face_flux = V;
        state.face_flux_current = true;
    }

    /// Max-norm of the mapped discrete divergence of the stored face fluxes.
    double divergence_max(const FluidState<D>& state, const HanzawaMap<D>& map) const {
        return mapped_divergence_max(state.face_flux, map);
    }

    /// Contravariant face fluxes of a cell velocity with the wall trace
    /// imposed exactly on the wall faces.
    Eigen::VectorXd face_fluxes(const VecField<D>& u, const HanzawaMap<D>& map,
                                const ScalarField& wall_vel) const {
        return contravariant_face_fluxes(grid_, map, u, wall_vel);
    }

private:
    std::array<int, DM> horizontal_counts() const {
        std::array<int, DM> n;
        for (int a = 0; a < DM; ++a) n[a] = grid_.n[a];
        return n;
    }

    void check_cfl(const VecField<D>& c, double dt) const {
        double worst = 0;
        for (int i = 0; i < grid_.ncells(); ++i) {
            double s = 0;
            for (int a = 0; a < D; ++a) s += std::abs(c.comp[a][i]) / grid_.h[a];
            worst = std::max(worst, s * dt);
        }
        if (worst > cfg_.cfl_limit)
            throw CFLViolation("advective CFL " + std::to_string(worst) + " exceeds limit "
                               + std::to_string(cfg_.cfl_limit));
    }

    double derivative_neumann(const ScalarField& f, const std::array<int, D>& iv, int a) const {
        const Grid<D>& g = grid_;
        const bool wall = (a == D - 1) && g.vertical_walls;
        const int idx = g.index(iv);
        double fp = (wall && iv[a] == g.n[a] - 1) ? f[idx] : f[g.neighbor(iv, a, +1)];
        double fm = (wall && iv[a] == 0) ? f[idx] : f[g.neighbor(iv, a, -1)];
        return (fp - fm) / (2.0 * g.h[a]);
    }

    /// Central gradient of a horizontal velocity component: homogeneous
    /// Dirichlet ghosts at both walls.
    Vec<D> gradient_wall_aware(const ScalarField& f, const std::array<int, D>& iv) const {
        const Grid<D>& g = grid_;
        Vec<D> grad;
        const int idx = g.index(iv);
        for (int a = 0; a < D; ++a) {
            const bool wall = (a == D - 1) && g.vertical_walls;
            double fp = (wall && iv[a] == g.n[a] - 1) ? -f[idx] : f[g.neighbor(iv, a, +1)];
            double fm = (wall && iv[a] == 0) ? -f[idx] : f[g.neighbor(iv, a, -1)];
            grad[a] = (fp - fm) / (2.0 * g.h[a]);
        }
        return grad;
    }

    void project_fluxes(FluidState<D>& state, VecField<D>& u, Eigen::VectorXd& V,
                        const HanzawaMap<D>& map, double dt) {
        const Grid<D>& g = grid_;
        const auto& op_zero = cache_.op_zero;
        ScalarField divv = divergence_faces(g, V);
        Eigen::VectorXd r = cfg_.density * to_eigen(divv) / dt;
        r.array() -= r.mean(); // exact compatibility up to rounding
        Eigen::VectorXd rp = r;
        rp[0] = 0.0;
        Eigen::VectorXd phi = cache_.poisson.solve(rp);
        // one iterative refinement pass tightens the divergence residual
        Eigen::VectorXd resid = rp - cache_.L_pinned * phi;
        phi += cache_.poisson.solve(resid);

        // flux and cell-velocity corrections from the same operator
        V -= (dt / cfg_.density) * (op_zero.C * phi);
        ScalarField phif = from_eigen(phi);
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            Vec<D> gp = map.apply_B_cell(idx, gradient_neumann(g, phif, iv));
            for (int i = 0; i < D; ++i) u.comp[i][idx] -= dt / cfg_.density * gp[i];
        });
        for (int i = 0; i < g.ncells(); ++i) state.pressure[i] += phif[i];
        double mean = field_sum(state.pressure) / g.ncells();
        for (auto& v : state.pressure) v -= mean;
    }

    void refresh_cache(const HanzawaMap<D>& map, double dt) {
        if (cache_.valid && cache_.map_id == map.id() && cache_.dt == dt) return;
        const int nc = grid_.ncells();
        cache_.op_dir = assemble_flux_operator(grid_, map, WallFlux::Dirichlet);
        cache_.op_zero = assemble_flux_operator(grid_, map, WallFlux::Zero);

        SpMat M = -cfg_.viscosity * cache_.op_dir.L;
        std::vector<Triplet> trip;
        trip.reserve(nc);
        for (int i = 0; i < nc; ++i)
            trip.emplace_back(i, i, cfg_.density * map.J_cell(i) / dt);
        SpMat diag(nc, nc);
        diag.setFromTriplets(trip.begin(), trip.end());
        M = M + diag;
        cache_.momentum.factor(M);

        cache_.L_pinned = cache_.op_zero.L;
        pin_first_row(cache_.L_pinned);
        try {
            cache_.poisson.factor(cache_.L_pinned);
        } catch (const LinearSolveFailure&) {
            throw ProjectionSolveFailure("pressure Poisson factorization failed");
        }
        cache_.map_id = map.id();
        cache_.dt = dt;
        cache_.valid = true;
    }

    double mapped_divergence_max(const Eigen::VectorXd& V, const HanzawaMap<D>& map) const {
        ScalarField div = divergence_faces(grid_, V);
        double worst = 0;
        for (int i = 0; i < grid_.ncells(); ++i)
            worst = std::max(worst, std::abs(div[i] / map.J_cell(i)));
        return worst;
    }

    struct Cache {
        bool valid = false;
        std::uint64_t map_id = 0;
        double dt = -1.0;
        FluxOperator<D> op_dir, op_zero;
        SpMat L_pinned;
        DirectSolver momentum, poisson;
    };

    Grid<D> grid_;
    FluidConfig<D> cfg_;
    Cache cache_;
};

/// Mapped velocity gradient per cell: row i holds the deformed-coordinate
/// partial derivatives of component i (Dirichlet wall ghosts).
template <int D>
std::vector<Mat<D>> mapped_velocity_gradient(const Grid<D>& g, const FluidState<D>& state,
                                             const HanzawaMap<D>& map) {
    std::vector<Mat<D>> out(g.ncells());
    ScalarField zero_wall(g.ncolumns(), 0.0);
    g.for_cells([&](int idx, const std::array<int, D>& iv) {
        int col = g.column_of(iv);
        Mat<D> B = map.B_cell(idx);
        Mat<D> gradu;
        for (int i = 0; i < D; ++i) {
            Vec<D> raw;
            if (!g.vertical_walls)
                raw = gradient_neumann(g, state.velocity.comp[i], iv);
            else if (i == D - 1)
                raw = gradient_dirichlet(g, state.velocity.comp[i], iv, state.wall_velocity, col);
            else
                raw = gradient_dirichlet(g, state.velocity.comp[i], iv, zero_wall, col);
            Vec<D> mapped = B.apply(raw);
            for (int j = 0; j < D; ++j) gradu(i, j) = mapped[j];
        }
        out[idx] = gradu;
    });
    return out;
}

/// S = grad u + (grad u)^T - p I + T with mapped gradients.
template <int D>
SymField<D> compute_stress_S(const Grid<D>& g, const FluidState<D>& state,
                             const SymField<D>& extra_stress, const HanzawaMap<D>& map) {
    SymField<D> S;
    S.resize(g.ncells());
    ScalarField p = state.physical_pressure();
    auto gradu = mapped_velocity_gradient(g, state, map);
    g.for_cells([&](int idx, const std::array<int, D>&) {
        SymMat<D> s = extra_stress.at(idx);
        for (int i = 0; i < D; ++i) {
            for (int j = i; j < D; ++j) s.at(i, j) += gradu[idx](i, j) + gradu[idx](j, i);
            s.at(i, i) -= p[idx];
        }
        S.set(idx, s);
    });
    return S;
}

/// One-sided quadratic extrapolation of each stress component to the top
/// wall face, per grid column.
template <int D>
std::vector<SymMat<D>> wall_stress(const Grid<D>& g, const SymField<D>& S) {
    std::vector<SymMat<D>> out(g.ncolumns());
    const int nz = g.n[D - 1];
    g.for_cells([&](int idx, const std::array<int, D>& iv) {
        if (iv[D - 1] != nz - 1) return;
        auto iv2 = iv, iv3 = iv;
        iv2[D - 1] = nz - 2;
        iv3[D - 1] = nz - 3;
        int i2 = g.index(iv2), i3 = g.index(iv3);
        SymMat<D> s;
        for (int k = 0; k < sym_components(D); ++k)
            s.c[k] = (15.0 * S.comp[k][idx] - 10.0 * S.comp[k][i2] + 3.0 * S.comp[k][i3]) / 8.0;
        out[g.column_of(iv)] = s;
    });
    return out;
}

/// Scalar shell load from the solvent stress:
///   -(S n_eta) o phi_eta . n det(grad phi_eta) = -(S (-grad eta, 1))_d,
/// sampled at the boundary columns.
template <int D>
ScalarField compute_structure_traction(const std::vector<SymMat<D>>& S_wall,
                                       const DeformedBoundary<D>& boundary) {
    const int n = int(S_wall.size());
    ScalarField traction(n, 0.0);
    for (int c = 0; c < n; ++c) {
        double v = S_wall[c].at(D - 1, D - 1);
        for (int h = 0; h < D - 1; ++h) v -= S_wall[c].at(D - 1, h) * boundary.grad_eta[h][c];
        traction[c] = -v;
    }
    return traction;
}

} // namespace pfsi
