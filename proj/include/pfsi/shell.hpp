#pragma once

#include <limits>
#include <utility>

#include "pfsi/core/errors.hpp"
#include "pfsi/core/fft.hpp"
#include "pfsi/core/grid.hpp"

namespace pfsi {

/// Shell displacement and velocity on the periodic structure mesh.
template <int DM>
struct StructureState {
    StructureMesh<DM> mesh;
    ScalarField displacement;
    ScalarField velocity;

    static StructureState rest(const StructureMesh<DM>& m) {
        StructureState s;
        s.mesh = m;
        s.displacement.assign(m.nnodes(), 0.0);
        s.velocity.assign(m.nnodes(), 0.0);
        return s;
    }
};

/// Total load on the shell: prescribed body force plus the fluid traction
/// term (the latter already carries its sign from the momentum balance).
template <int DM>
struct StructureLoad {
    ScalarField body_force;
    ScalarField fluid_traction;

    static StructureLoad zero(int n) {
        StructureLoad l;
        l.body_force.assign(n, 0.0);
        l.fluid_traction.assign(n, 0.0);
        return l;
    }

    ScalarField total() const {
        ScalarField t = body_force;
        for (size_t i = 0; i < t.size(); ++i) t[i] += fluid_traction[i];
        return t;
    }
};

/// Squared spectral Sobolev seminorm: sum over modes of |k|^(2p) |c_k|^2
/// times the domain measure (p = 0 gives the squared L2 norm).
template <int DM>
double spectral_sobolev_sq(const StructureMesh<DM>& mesh, const ScalarField& nodal, int p) {
    auto modes = to_modes(mesh, nodal);
    return modes.weighted_mode_sum([p](const std::array<double, DM>& k) {
        double k2 = 0;
        for (int a = 0; a < DM; ++a) k2 += k[a] * k[a];
        double w = 1.0;
        for (int i = 0; i < p; ++i) w *= k2;
        return w;
    });
}

/// One implicit-midpoint step of the damped plate equation
///   d2/dt2 eta - d/dt Lap eta + Lap^2 eta = load,
/// diagonal per Fourier mode, with the load held constant over the step.
/// Throws TubeBreach if the new displacement reaches `breach_limit`.
template <int DM>
StructureState<DM> step_shell(const StructureState<DM>& state, const StructureLoad<DM>& load,
                              double dt,
                              double breach_limit = std::numeric_limits<double>::infinity()) {
    const auto& mesh = state.mesh;
    auto a = to_modes(mesh, state.displacement);
    auto b = to_modes(mesh, state.velocity);
    auto l = to_modes(mesh, load.total());

    for (size_t m = 0; m < a.modes.size(); ++m) {
        auto k = a.wavevector(int(m));
        double k2 = 0;
        for (int c = 0; c < DM; ++c) k2 += k[c] * k[c];
        double k4 = k2 * k2;
        Cplx am0 = a.modes[m], bm0 = b.modes[m];
        double denom = 1.0 + 0.5 * dt * k2 + 0.25 * dt * dt * k4;
        Cplx bm = (bm0 + 0.5 * dt * (l.modes[m] - k4 * am0)) / denom;
        a.modes[m] = am0 + dt * bm;
        b.modes[m] = 2.0 * bm - bm0;
    }

    StructureState<DM> out;
    out.mesh = mesh;
    out.displacement = to_nodal(a);
    out.velocity = to_nodal(b);
    if (field_max_abs(out.displacement) >= breach_limit)
        throw TubeBreach("shell displacement reached " + std::to_string(field_max_abs(out.displacement))
                         + " against limit " + std::to_string(breach_limit));
    return out;
}

/// Kinetic and bending energy of the shell state:
/// (1/2 ||velocity||^2, 1/2 ||Lap displacement||^2), both L2(omega).
template <int DM>
std::pair<double, double> shell_energy(const StructureState<DM>& state) {
    double kin = 0.5 * spectral_sobolev_sq(state.mesh, state.velocity, 0);
    double bend = 0.5 * spectral_sobolev_sq(state.mesh, state.displacement, 2);
    return {kin, bend};
}

} // namespace pfsi
