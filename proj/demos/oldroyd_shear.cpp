// Minimal library usage: start-up of the extra stress under a constant
// shear, printed as CSV (time, stress components, smallest eigenvalue).

#include <cstdio>

#include "pfsi/solute.hpp"

using namespace pfsi;

int main() {
    ReferenceGeometry<2> geom({1.0, 1.0}, 0.25);
    Grid<2> grid({8, 8}, {1.0, 1.0}, false);
    auto map = HanzawaMap<2>::identity(geom, grid);
    SoluteStepper<2> stepper(grid);

    auto state = SoluteState<2>::equilibrium(grid, 1.0);
    VecField<2> u;
    u.resize(grid.ncells());
    Mat<2> shear{};
    shear(0, 1) = 1.0;
    std::vector<Mat<2>> gradu(grid.ncells(), shear);
    Eigen::VectorXd no_flow = Eigen::VectorXd::Zero(total_faces(grid));

    double dt = 1e-3;
    std::printf("# t T_xx T_yy T_xy min_eig\n");
    for (int s = 0; s <= 3000; ++s) {
        if (s % 100 == 0) {
            auto t = state.stress.at(0);
            auto rep = check_positivity(state);
            std::printf("%g %g %g %g %g\n", s * dt, t.at(0, 0), t.at(1, 1), t.at(0, 1),
                        rep.min_stress_eigenvalue);
        }
        ScalarField rho_old = state.density;
        stepper.step_density(state, no_flow, map, map, dt);
        stepper.step_stress(state, rho_old, u, gradu, map, map, dt);
    }
    return 0;
}
