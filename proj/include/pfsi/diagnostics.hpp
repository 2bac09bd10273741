#pragma once

#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include "pfsi/core/errors.hpp"
#include "pfsi/fluid.hpp"
#include "pfsi/shell.hpp"
#include "pfsi/solute.hpp"

namespace pfsi {

// J-weighted quadratures on the moving domain -------------------------------

template <int D>
double weighted_l2_sq(const Grid<D>& g, const HanzawaMap<D>& map, const ScalarField& f) {
    double s = 0;
    for (int i = 0; i < g.ncells(); ++i) s += map.J_cell(i) * f[i] * f[i] * g.cell_volume();
    return s;
}

template <int D>
double weighted_integral(const Grid<D>& g, const HanzawaMap<D>& map, const ScalarField& f) {
    double s = 0;
    for (int i = 0; i < g.ncells(); ++i) s += map.J_cell(i) * f[i] * g.cell_volume();
    return s;
}

template <int D>
double weighted_l2_sq_vec(const Grid<D>& g, const HanzawaMap<D>& map, const VecField<D>& u) {
    double s = 0;
    for (int i = 0; i < g.ncells(); ++i) {
        double n2 = 0;
        for (int a = 0; a < D; ++a) n2 += u.comp[a][i] * u.comp[a][i];
        s += map.J_cell(i) * n2 * g.cell_volume();
    }
    return s;
}

/// Lp norm (J-weighted) of the velocity magnitude; p = infinity gives the
/// grid max norm.
template <int D>
double weighted_lp_norm_vec(const Grid<D>& g, const HanzawaMap<D>& map, const VecField<D>& u,
                            double p) {
    if (std::isinf(p)) {
        double m = 0;
        for (int i = 0; i < g.ncells(); ++i) {
            double n2 = 0;
            for (int a = 0; a < D; ++a) n2 += u.comp[a][i] * u.comp[a][i];
            m = std::max(m, std::sqrt(n2));
        }
        return m;
    }
    double s = 0;
    for (int i = 0; i < g.ncells(); ++i) {
        double n2 = 0;
        for (int a = 0; a < D; ++a) n2 += u.comp[a][i] * u.comp[a][i];
        s += map.J_cell(i) * std::pow(n2, p / 2.0) * g.cell_volume();
    }
    return std::pow(s, 1.0 / p);
}

// energy ledger --------------------------------------------------------------

/// One row per accepted step: every term of the weak-solution energy
/// relation, J-weighted on the moving domain.
struct EnergyRow {
    double t;
    double fluid_kinetic;   // 1/2 ||u||^2
    double shell_kinetic;   // 1/2 ||eta_t||^2
    double bending;         // 1/2 ||Lap eta||^2
    double trace_mass;      // integral of tr T
    double rho_l2;          // ||rho||^2
    double diss_grad_u;     // ||grad u||^2
    double diss_shell;      // ||eta_t grad||^2 (velocity gradient norm)
    double diss_trace;      // integral of tr T (free-energy dissipation rate)
    double input_f;         // integral of f . u
    double input_g;         // integral of g eta_t
};

struct EnergyLedger {
    std::vector<EnergyRow> rows;
    double cum_diss_grad_u = 0;
    double cum_diss_shell = 0;
    double cum_diss_trace = 0;
    double cum_input = 0;

    /// Left side of the discrete energy relation:
    /// sup_t (trace mass + ||u||^2 + ||eta_t||^2 + ||Lap eta||^2)
    /// + time integrals of (trace mass, ||grad u||^2, ||eta_t grad||^2).
    double inequality_lhs() const {
        double sup = 0;
        for (const auto& r : rows)
            sup = std::max(sup, r.trace_mass + 2 * r.fluid_kinetic + 2 * r.shell_kinetic
                                    + 2 * r.bending);
        return sup + cum_diss_trace + cum_diss_grad_u + cum_diss_shell;
    }

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        out << "# t fluid_kinetic shell_kinetic bending trace_mass rho_l2 diss_grad_u "
               "diss_shell diss_trace input_f input_g\n";
        out << std::setprecision(17);
        for (const auto& r : rows)
            out << r.t << ' ' << r.fluid_kinetic << ' ' << r.shell_kinetic << ' ' << r.bending
                << ' ' << r.trace_mass << ' ' << r.rho_l2 << ' ' << r.diss_grad_u << ' '
                << r.diss_shell << ' ' << r.diss_trace << ' ' << r.input_f << ' ' << r.input_g
                << '\n';
    }
};

/// Dataset functional of the energy relation, evaluated once at run start
/// (time-constant forcing integrated over the horizon).
template <int D>
double energy_data_functional(const Grid<D>& g, const HanzawaMap<D>& map0,
                              const FluidState<D>& fluid0, const SoluteState<D>& solute0,
                              const StructureState<D - 1>& shell0, const VecField<D>& f,
                              const ScalarField& g_load, double horizon) {
    ScalarField trT(g.ncells());
    for (int i = 0; i < g.ncells(); ++i) trT[i] = solute0.stress.at(i).trace();
    double ew = weighted_integral(g, map0, trT);
    ew += weighted_l2_sq_vec(g, map0, fluid0.velocity);
    ew += spectral_sobolev_sq(shell0.mesh, shell0.velocity, 0);
    ew += spectral_sobolev_sq(shell0.mesh, shell0.displacement, 2);
    ew += horizon * weighted_integral(g, map0, solute0.density);
    ew += horizon * weighted_l2_sq_vec(g, map0, f);
    double g2 = 0;
    for (double v : g_load) g2 += v * v * shell0.mesh.node_volume();
    ew += horizon * g2;
    return ew;
}

template <int D>
void update_energy(EnergyLedger& ledger, const Grid<D>& g, const HanzawaMap<D>& map,
                   const FluidState<D>& fluid, const SoluteState<D>& solute,
                   const StructureState<D - 1>& shell, const VecField<D>& f,
                   const ScalarField& g_load, double t, double dt) {
    EnergyRow r{};
    r.t = t;
    r.fluid_kinetic = 0.5 * weighted_l2_sq_vec(g, map, fluid.velocity);
    r.shell_kinetic = 0.5 * spectral_sobolev_sq(shell.mesh, shell.velocity, 0);
    r.bending = 0.5 * spectral_sobolev_sq(shell.mesh, shell.displacement, 2);

    ScalarField trT(g.ncells());
    for (int i = 0; i < g.ncells(); ++i) trT[i] = solute.stress.at(i).trace();
    r.trace_mass = weighted_integral(g, map, trT);
    r.rho_l2 = weighted_l2_sq(g, map, solute.density);

    auto gradu = mapped_velocity_gradient(g, fluid, map);
    double gu = 0, fu = 0;
    for (int i = 0; i < g.ncells(); ++i) {
        double n2 = 0;
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) n2 += gradu[i](a, b) * gradu[i](a, b);
        gu += map.J_cell(i) * n2 * g.cell_volume();
        double dot = 0;
        for (int a = 0; a < D; ++a) dot += f.comp[a][i] * fluid.velocity.comp[a][i];
        fu += map.J_cell(i) * dot * g.cell_volume();
    }
    r.diss_grad_u = gu;
    r.diss_shell = spectral_sobolev_sq(shell.mesh, shell.velocity, 1);
    r.diss_trace = r.trace_mass;
    r.input_f = fu;
    double gin = 0;
    for (int i = 0; i < shell.mesh.nnodes(); ++i)
        gin += g_load[i] * shell.velocity[i] * shell.mesh.node_volume();
    r.input_g = gin;

    for (double v : {r.fluid_kinetic, r.shell_kinetic, r.bending, r.trace_mass, r.rho_l2,
                     r.diss_grad_u, r.diss_shell, r.input_f, r.input_g})
        if (!std::isfinite(v)) throw SolverError("non-finite energy ledger entry");
    ledger.cum_diss_grad_u += dt * r.diss_grad_u;
    ledger.cum_diss_shell += dt * r.diss_shell;
    ledger.cum_diss_trace += dt * r.diss_trace;
    ledger.cum_input += dt * (r.input_f + r.input_g);
    ledger.rows.push_back(r);
}

// trace identity --------------------------------------------------------------

/// Per-step residual of the integrated trace relation
///   1/2 d/dt int tr T + int tr T = int T : grad u + d int rho
/// (trapezoidal in time, J-weighted; the dimension d is tr I).
template <int D>
double trace_identity_residual(const Grid<D>& g, const HanzawaMap<D>& map0,
                               const HanzawaMap<D>& map1, const FluidState<D>& fluid0,
                               const FluidState<D>& fluid1, const SoluteState<D>& sol0,
                               const SoluteState<D>& sol1, double dt) {
    auto trace_mass = [&](const HanzawaMap<D>& m, const SoluteState<D>& s) {
        ScalarField trT(g.ncells());
        for (int i = 0; i < g.ncells(); ++i) trT[i] = s.stress.at(i).trace();
        return weighted_integral(g, m, trT);
    };
    auto tgu = [&](const HanzawaMap<D>& m, const FluidState<D>& f, const SoluteState<D>& s) {
        auto gradu = mapped_velocity_gradient(g, f, m);
        double acc = 0;
        for (int i = 0; i < g.ncells(); ++i)
            acc += m.J_cell(i) * s.stress.at(i).ddot_full(gradu[i]) * g.cell_volume();
        return acc;
    };
    double m0 = trace_mass(map0, sol0), m1 = trace_mass(map1, sol1);
    double tr_avg = 0.5 * (m0 + m1);
    double tgu_avg = 0.5 * (tgu(map0, fluid0, sol0) + tgu(map1, fluid1, sol1));
    double rho_avg = 0.5 * (weighted_integral(g, map0, sol0.density)
                            + weighted_integral(g, map1, sol1.density));
    return std::abs(0.5 * (m1 - m0) + dt * tr_avg - dt * tgu_avg - double(D) * dt * rho_avg);
}

// mass audit -------------------------------------------------------------------

template <int D>
struct MassAudit {
    double rho_mass;
    double trace_mass;
};

template <int D>
MassAudit<D> mass_audit(const Grid<D>& g, const HanzawaMap<D>& map, const SoluteState<D>& s) {
    MassAudit<D> a{};
    a.rho_mass = weighted_integral(g, map, s.density);
    ScalarField trT(g.ncells());
    for (int i = 0; i < g.ncells(); ++i) trT[i] = s.stress.at(i).trace();
    a.trace_mass = weighted_integral(g, map, trT);
    return a;
}

// LPS monitor -------------------------------------------------------------------

/// Running Ladyzhenskaya-Prodi-Serrin norm ||u||_{L^r(0,t; L^s)} together
/// with the C^1 structure monitor. The admissibility arithmetic uses the
/// three-dimensional criterion 2/r + 3/s <= 1 regardless of the run's
/// spatial dimension.
struct LPSMonitor {
    double r = 4.0;
    double s = 6.0; // may be infinity
    bool admissible = false;
    double value_pow_r = 0.0;
    double max_eta = 0.0;
    double max_grad_eta = 0.0;

    LPSMonitor() = default;
    LPSMonitor(double r_, double s_) : r(r_), s(s_) {
        admissible = (r >= 2.0) && (s > 3.0) && (2.0 / r + 3.0 / s <= 1.0 + 1e-15);
    }

    double value() const { return std::pow(value_pow_r, 1.0 / r); }
};

template <int D>
void lps_update(LPSMonitor& mon, const Grid<D>& g, const HanzawaMap<D>& map,
                const FluidState<D>& fluid, const StructureState<D - 1>& shell, double dt) {
    double ls = weighted_lp_norm_vec(g, map, fluid.velocity, mon.s);
    mon.value_pow_r += dt * std::pow(ls, mon.r);
    mon.max_eta = std::max(mon.max_eta, field_max_abs(shell.displacement));
    auto modes = to_modes(shell.mesh, shell.displacement);
    for (int h = 0; h < D - 1; ++h) {
        std::array<int, D - 1> dv{};
        dv[h] = 1;
        auto de = sample_shifted(modes, std::array<double, D - 1>{}, dv);
        mon.max_grad_eta = std::max(mon.max_grad_eta, field_max_abs(de));
    }
}

// acceleration ledger -------------------------------------------------------------

/// Sup-in-time and time-integrated higher-order norms of a strong solution.
struct AccelerationLedger {
    double sup_grad_u = 0;       // ||grad u||^2
    double sup_shell_vel_h1 = 0; // ||eta_t||_{H1 seminorm}^2
    double sup_grad_lap_eta = 0; // ||grad Lap eta||^2
    double int_hess_u = 0;       // integral ||grad^2 u||^2
    double int_dt_u = 0;         // integral ||u_t||^2
    double int_grad_p = 0;       // integral ||grad p||^2
    double int_dt_lap_eta = 0;   // integral ||(Lap eta)_t||^2
    double int_dtt_eta = 0;      // integral ||eta_tt||^2
    double int_lap2_eta = 0;     // integral ||Lap^2 eta||^2
    double int_dt_rho = 0;       // integral ||rho_t||^2
    double int_dt_stress = 0;    // integral ||T_t||^2
};

template <int D>
void acceleration_update(AccelerationLedger& led, const Grid<D>& g, const HanzawaMap<D>& map0,
                         const HanzawaMap<D>& map1, const FluidState<D>& fluid0,
                         const FluidState<D>& fluid1, const SoluteState<D>& sol0,
                         const SoluteState<D>& sol1, const StructureState<D - 1>& shell0,
                         const StructureState<D - 1>& shell1, double dt) {
    auto gradu1 = mapped_velocity_gradient(g, fluid1, map1);

    double gu = 0;
    for (int i = 0; i < g.ncells(); ++i) {
        double n2 = 0;
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) n2 += gradu1[i](a, b) * gradu1[i](a, b);
        gu += map1.J_cell(i) * n2 * g.cell_volume();
    }
    led.sup_grad_u = std::max(led.sup_grad_u, gu);

    // mapped Hessian: gradient of each mapped first derivative
    {
        double h2 = 0;
        std::array<std::array<ScalarField, D>, D> dcomp;
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) dcomp[i][j].resize(g.ncells());
        for (int i = 0; i < g.ncells(); ++i)
            for (int a = 0; a < D; ++a)
                for (int b = 0; b < D; ++b) dcomp[a][b][i] = gradu1[i](a, b);
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            double cell = 0;
            for (int a = 0; a < D; ++a)
                for (int b = 0; b < D; ++b) {
                    Vec<D> raw = gradient_neumann(g, dcomp[a][b], iv);
                    Vec<D> mg = map1.apply_B_cell(idx, raw);
                    for (int c = 0; c < D; ++c) cell += mg[c] * mg[c];
                }
            h2 += map1.J_cell(idx) * cell * g.cell_volume();
        });
        led.int_hess_u += dt * h2;
    }

    // time derivative of u in the moving frame: du/dt - (B grad u) . domain velocity
    {
        double ut2 = 0;
        g.for_cells([&](int idx, const std::array<int, D>&) {
            double wdom = (map1.delta_cell(idx) - map0.delta_cell(idx)) / dt;
            double n2 = 0;
            for (int a = 0; a < D; ++a) {
                double dudt = (fluid1.velocity.comp[a][idx] - fluid0.velocity.comp[a][idx]) / dt;
                dudt -= gradu1[idx](a, D - 1) * wdom;
                n2 += dudt * dudt;
            }
            ut2 += map1.J_cell(idx) * n2 * g.cell_volume();
        });
        led.int_dt_u += dt * ut2;
    }

    // pressure gradient
    {
        double gp2 = 0;
        ScalarField p = fluid1.physical_pressure();
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            Vec<D> gp = map1.apply_B_cell(idx, gradient_neumann(g, p, iv));
            gp2 += map1.J_cell(idx) * gp.dot(gp) * g.cell_volume();
        });
        led.int_grad_p += dt * gp2;
    }

    // solute time derivatives (moving-frame correction folded into the
    // mapped advective sampling is higher order; plain differences here)
    {
        ScalarField drho(g.ncells());
        for (int i = 0; i < g.ncells(); ++i)
            drho[i] = (sol1.density[i] - sol0.density[i]) / dt;
        led.int_dt_rho += dt * weighted_l2_sq(g, map1, drho);
        double dT2 = 0;
        for (int i = 0; i < g.ncells(); ++i) {
            SymMat<D> d = sol1.stress.at(i) - sol0.stress.at(i);
            d *= 1.0 / dt;
            dT2 += map1.J_cell(i) * d.frobenius_sq() * g.cell_volume();
        }
        led.int_dt_stress += dt * dT2;
    }

    // shell norms (spectral symbols)
    led.sup_shell_vel_h1 =
        std::max(led.sup_shell_vel_h1, spectral_sobolev_sq(shell1.mesh, shell1.velocity, 1));
    led.sup_grad_lap_eta =
        std::max(led.sup_grad_lap_eta, spectral_sobolev_sq(shell1.mesh, shell1.displacement, 3));
    led.int_dt_lap_eta += dt * spectral_sobolev_sq(shell1.mesh, shell1.velocity, 2);
    led.int_lap2_eta += dt * spectral_sobolev_sq(shell1.mesh, shell1.displacement, 4);
    ScalarField acc(shell1.mesh.nnodes());
    for (int i = 0; i < shell1.mesh.nnodes(); ++i)
        acc[i] = (shell1.velocity[i] - shell0.velocity[i]) / dt;
    led.int_dtt_eta += dt * spectral_sobolev_sq(shell1.mesh, acc, 0);
}

} // namespace pfsi
