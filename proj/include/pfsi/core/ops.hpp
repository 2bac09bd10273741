#pragma once

#include <functional>
#include <type_traits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "pfsi/core/errors.hpp"
#include "pfsi/core/grid.hpp"
#include "pfsi/geometry.hpp"

namespace pfsi {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Flat face indexing: +faces of axis a occupy [a*ncells, (a+1)*ncells);
/// bottom wall faces (wall grids only) follow at D*ncells.
template <int D>
int total_faces(const Grid<D>& g) {
    return D * g.ncells() + (g.vertical_walls ? g.ncolumns() : 0);
}

template <int D>
int face_index(const Grid<D>& g, int axis, int cell_idx) {
    return axis * g.ncells() + cell_idx;
}

template <int D>
int lo_face_index(const Grid<D>& g, int col) {
    return D * g.ncells() + col;
}

/// Flux-form divergence of face data (1/h scaling included): at each cell,
/// sum over axes of (flux at +face - flux at -face) / h. The sum over all
/// cells telescopes to the wall fluxes exactly.
template <int D>
ScalarField divergence_faces(const Grid<D>& g, const Eigen::VectorXd& faces) {
    ScalarField out(g.ncells(), 0.0);
    g.for_cells([&](int idx, const std::array<int, D>& iv) {
        double s = 0;
        for (int a = 0; a < D; ++a) {
            double plus = faces[face_index(g, a, idx)];
            double minus;
            if (a == D - 1 && g.vertical_walls && iv[a] == 0)
                minus = faces[lo_face_index(g, g.column_of(iv))];
            else
                minus = faces[face_index(g, a, g.neighbor(iv, a, -1))];
            s += (plus - minus) / g.h[a];
        }
        out[idx] = s;
    });
    return out;
}

/// Sparse flux-form divergence operator matching divergence_faces.
template <int D>
SpMat divergence_matrix(const Grid<D>& g) {
    std::vector<Triplet> trip;
    trip.reserve(std::size_t(2) * D * g.ncells());
    g.for_cells([&](int idx, const std::array<int, D>& iv) {
        for (int a = 0; a < D; ++a) {
            trip.emplace_back(idx, face_index(g, a, idx), 1.0 / g.h[a]);
            if (a == D - 1 && g.vertical_walls && iv[a] == 0)
                trip.emplace_back(idx, lo_face_index(g, g.column_of(iv)), -1.0 / g.h[a]);
            else
                trip.emplace_back(idx, face_index(g, a, g.neighbor(iv, a, -1)), -1.0 / g.h[a]);
        }
    });
    SpMat Dm(g.ncells(), total_faces(g));
    Dm.setFromTriplets(trip.begin(), trip.end());
    return Dm;
}

enum class WallFlux {
    Zero,     ///< natural zero-flux wall (conormal Neumann)
    Dirichlet ///< ghost-eliminated Dirichlet wall values
};

/// Face-flux operator C for diffusion in mapped coordinates: C maps cell
/// values f to face fluxes (A grad f) . e_axis. Tangential derivatives at a
/// face average the central derivatives of the two adjacent cells; rows of
/// cells touching a wall fall back to one-sided differences. With
/// WallFlux::Zero wall-face rows are identically zero. With Dirichlet the
/// wall-normal part is ghost-eliminated into the matrix; the inhomogeneous
/// part is produced by `dirichlet_rhs`.
template <int D>
struct FluxOperator {
    SpMat C;           // faces x cells
    SpMat L;           // cells x cells, L = Dm * C
    Grid<D> grid;
    WallFlux wall = WallFlux::Zero;
    // cached wall-face metric data for the Dirichlet right-hand side
    ScalarField wall_Add;                      // A_dd at top wall faces, per column
    std::array<ScalarField, D - 1> wall_Adh;   // A_dh at top wall faces
};

namespace detail {

/// Central derivative stencil of axis b at cell iv, honoring periodicity and
/// clipping to one-sided differences against walls. Emits (cell, coef).
template <int D, typename Emit>
void central_derivative_stencil(const Grid<D>& g, const std::type_identity_t<std::array<int, D>>& iv,
                                int b, Emit&& emit) {
    const double h = g.h[b];
    const bool wall = (b == D - 1) && g.vertical_walls;
    if (!wall || (iv[b] > 0 && iv[b] < g.n[b] - 1)) {
        emit(g.neighbor(iv, b, +1), 0.5 / h);
        emit(g.neighbor(iv, b, -1), -0.5 / h);
    } else if (iv[b] == 0) {
        emit(g.neighbor(iv, b, +1), 1.0 / h);
        emit(g.index(iv), -1.0 / h);
    } else {
        emit(g.index(iv), 1.0 / h);
        emit(g.neighbor(iv, b, -1), -1.0 / h);
    }
}

} // namespace detail

template <int D>
FluxOperator<D> assemble_flux_operator(const Grid<D>& g, const HanzawaMap<D>& map, WallFlux wall) {
    constexpr int DM = D - 1;
    FluxOperator<D> op;
    op.grid = g;
    op.wall = wall;

    std::vector<Triplet> trip;
    trip.reserve(std::size_t(12) * D * g.ncells());

    auto emit_face = [&](int face, int cell, double coef) {
        trip.emplace_back(face, cell, coef);
    };

    g.for_cells([&](int idx, const std::array<int, D>& iv) {
        for (int a = 0; a < D; ++a) {
            const int face = face_index(g, a, idx);
            const bool top_wall_face =
                (a == D - 1) && g.vertical_walls && iv[a] == g.n[a] - 1;
            SymMat<D> A = map.A_face(a, idx);

            if (top_wall_face) {
                if (wall == WallFlux::Dirichlet) {
                    // normal part: A_dd * (2 g_wall - 2 f_top) / h
                    emit_face(face, idx, -2.0 * A.at(D - 1, D - 1) / g.h[a]);
                    // tangential parts of the interior field at the wall face:
                    // ghost = 2 g - f mirrors the Dirichlet extension, so the
                    // face-tangential derivative of f uses the wall values only
                    // (handled in dirichlet_rhs); no matrix contribution.
                }
                continue; // WallFlux::Zero: row stays empty
            }

            // normal derivative (compact)
            int nb = g.neighbor(iv, a, +1);
            emit_face(face, nb, A.at(a, a) / g.h[a]);
            emit_face(face, idx, -A.at(a, a) / g.h[a]);

            // tangential derivatives, averaged over the two adjacent cells
            for (int b = 0; b < D; ++b) {
                if (b == a) continue;
                double Aab = A.at(a, b);
                if (Aab == 0.0) continue;
                auto jv = g.multi_index(nb);
                detail::central_derivative_stencil(g, iv, b, [&](int c, double w) {
                    emit_face(face, c, 0.5 * Aab * w);
                });
                detail::central_derivative_stencil(g, jv, b, [&](int c, double w) {
                    emit_face(face, c, 0.5 * Aab * w);
                });
            }
        }
    });

    // bottom wall faces (below the tube: identity metric)
    if (g.vertical_walls && wall == WallFlux::Dirichlet) {
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            if (iv[D - 1] != 0) return;
            int face = lo_face_index(g, g.column_of(iv));
            // flux = (2 f_bot - 2 g_bot) / h; rigid wall has g_bot = 0
            emit_face(face, idx, 2.0 / g.h[D - 1]);
        });
    }

    op.C.resize(total_faces(g), g.ncells());
    op.C.setFromTriplets(trip.begin(), trip.end());
    op.L = divergence_matrix(g) * op.C;

    if (wall == WallFlux::Dirichlet && g.vertical_walls) {
        op.wall_Add.assign(g.ncolumns(), 1.0);
        for (int h = 0; h < DM; ++h) op.wall_Adh[h].assign(g.ncolumns(), 0.0);
        g.for_cells([&](int idx, const std::array<int, D>& iv) {
            if (iv[D - 1] != g.n[D - 1] - 1) return;
            int col = g.column_of(iv);
            SymMat<D> A = map.A_face(D - 1, idx);
            op.wall_Add[col] = A.at(D - 1, D - 1);
            for (int h = 0; h < DM; ++h) op.wall_Adh[h][col] = A.at(h, D - 1);
        });
    }
    return op;
}

/// Inhomogeneous Dirichlet contribution to div(A grad f): the divergence of
/// the wall-value part of the ghost-eliminated fluxes. `top` gives the wall
/// value per column and `top_grad` its tangential derivatives; the rigid
/// bottom wall is homogeneous.
template <int D>
ScalarField dirichlet_rhs(const FluxOperator<D>& op, const ScalarField& top,
                          const std::array<ScalarField, D - 1>& top_grad) {
    const Grid<D>& g = op.grid;
    ScalarField rhs(g.ncells(), 0.0);
    if (!g.vertical_walls) return rhs;
    const double hd = g.h[D - 1];
    g.for_cells([&](int idx, const std::array<int, D>& iv) {
        if (iv[D - 1] != g.n[D - 1] - 1) return;
        int col = g.column_of(iv);
        double flux = 2.0 * op.wall_Add[col] * top[col] / hd;
        for (int h = 0; h < D - 1; ++h) flux += op.wall_Adh[h][col] * top_grad[h][col];
        rhs[idx] += flux / hd; // + face of the top cell
    });
    return rhs;
}

/// Replace the first row by the identity row (pins the constant null space
/// of a compatible singular system; valid because left and right null
/// spaces are both spanned by constants).
inline void pin_first_row(SpMat& L) {
    std::vector<Triplet> trip;
    trip.reserve(std::size_t(L.nonZeros()) + 1);
    for (int k = 0; k < L.outerSize(); ++k)
        for (SpMat::InnerIterator it(L, k); it; ++it)
            if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
    trip.emplace_back(0, 0, 1.0);
    SpMat pinned(L.rows(), L.cols());
    pinned.setFromTriplets(trip.begin(), trip.end());
    L.swap(pinned);
}

/// Direct sparse solver wrapper.
class DirectSolver {
public:
    void factor(const SpMat& A) {
        solver_.compute(A);
        if (solver_.info() != Eigen::Success)
            throw LinearSolveFailure("sparse LU factorization failed");
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        Eigen::VectorXd x = solver_.solve(b);
        if (solver_.info() != Eigen::Success) throw LinearSolveFailure("sparse LU solve failed");
        return x;
    }

private:
    Eigen::SparseLU<SpMat> solver_;
};

inline Eigen::VectorXd to_eigen(const ScalarField& f) {
    Eigen::VectorXd v(f.size());
    for (size_t i = 0; i < f.size(); ++i) v[int(i)] = f[i];
    return v;
}

inline ScalarField from_eigen(const Eigen::VectorXd& v) {
    ScalarField f(v.size());
    for (int i = 0; i < v.size(); ++i) f[i] = v[i];
    return f;
}

// ---------------------------------------------------------------------------
// ghost-aware cell gradients
// ---------------------------------------------------------------------------

/// Central gradient of a scalar with mirror (zero normal derivative) ghosts
/// at walls.
template <int D>
Vec<D> gradient_neumann(const Grid<D>& g, const ScalarField& f,
                        const std::type_identity_t<std::array<int, D>>& iv) {
    Vec<D> grad;
    const int idx = g.index(iv);
    for (int a = 0; a < D; ++a) {
        const bool wall = (a == D - 1) && g.vertical_walls;
        double fp, fm;
        if (wall && iv[a] == g.n[a] - 1)
            fp = f[idx]; // mirror ghost
        else
            fp = f[g.neighbor(iv, a, +1)];
        if (wall && iv[a] == 0)
            fm = f[idx];
        else
            fm = f[g.neighbor(iv, a, -1)];
        grad[a] = (fp - fm) / (2.0 * g.h[a]);
    }
    return grad;
}

/// Central gradient of a velocity component with Dirichlet ghosts at walls
/// (top wall value per column, rigid bottom wall).
template <int D>
Vec<D> gradient_dirichlet(const Grid<D>& g, const ScalarField& f,
                          const std::type_identity_t<std::array<int, D>>& iv,
                          const ScalarField& top, int col) {
    Vec<D> grad;
    const int idx = g.index(iv);
    for (int a = 0; a < D; ++a) {
        const bool wall = (a == D - 1) && g.vertical_walls;
        double fp, fm;
        if (wall && iv[a] == g.n[a] - 1)
            fp = 2.0 * top[col] - f[idx];
        else
            fp = f[g.neighbor(iv, a, +1)];
        if (wall && iv[a] == 0)
            fm = -f[idx]; // ghost of the homogeneous bottom wall
        else
            fm = f[g.neighbor(iv, a, -1)];
        grad[a] = (fp - fm) / (2.0 * g.h[a]);
    }
    return grad;
}

} // namespace pfsi
