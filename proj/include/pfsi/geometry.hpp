#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "pfsi/core/errors.hpp"
#include "pfsi/core/fft.hpp"
#include "pfsi/core/grid.hpp"
#include "pfsi/core/tensor.hpp"

namespace pfsi {

/// Boundary-depth cutoff for the Hanzawa displacement. Defined for the
/// signed wall distance s in [-L, 0] (s = 0 on the flexible wall) with
/// value(0) = 1, value(-L) = 0, slope >= 0.
struct CutoffProfile {
    std::function<double(double)> value;
    std::function<double(double)> slope;
    double max_slope = 0.0;
};

/// C2 profile whose slope is a smoothed trapezoid: exact flats of relative
/// width 0.005 at both ends, smoothstep ramps of relative width 0.02, and a
/// plateau slope 1/(0.97 L). The plateau bound keeps the map Jacobian
/// 1 + eta * slope positive for all |eta| <= 0.96 L, past the breach margin.
inline CutoffProfile make_default_cutoff(double L) {
    const double f = 0.005, w = 0.02;
    const double p = 1.0 / (1.0 - 2.0 * f - w);

    auto ramp_area = [](double u) { return u * u * u - 0.5 * u * u * u * u; };
    auto smoothstep = [](double u) { return 3.0 * u * u - 2.0 * u * u * u; };

    auto psi = [=](double xi) {
        if (xi <= f) return 1.0;
        if (xi <= f + w) return 1.0 - p * w * ramp_area((xi - f) / w);
        if (xi <= 1.0 - f - w) return 1.0 - p * (0.5 * w + (xi - f - w));
        if (xi <= 1.0 - f) return p * w * ramp_area((1.0 - f - xi) / w);
        return 0.0;
    };
    auto g = [=](double xi) {
        if (xi <= f || xi >= 1.0 - f) return 0.0;
        if (xi <= f + w) return p * smoothstep((xi - f) / w);
        if (xi >= 1.0 - f - w) return p * smoothstep((1.0 - f - xi) / w);
        return p;
    };

    CutoffProfile c;
    c.value = [=](double s) {
        double xi = -s / L;
        if (xi <= 0.0) return 1.0;
        if (xi >= 1.0) return 0.0;
        return psi(xi);
    };
    c.slope = [=](double s) {
        double xi = -s / L;
        if (xi <= 0.0 || xi >= 1.0) return 0.0;
        return g(xi) / L;
    };
    c.max_slope = p / L;
    return c;
}

/// Linear profile (test use): value = 1 + s/L on [-L, 0].
inline CutoffProfile make_linear_cutoff(double L) {
    CutoffProfile c;
    c.value = [L](double s) {
        if (s >= 0.0) return 1.0;
        if (s <= -L) return 0.0;
        return 1.0 + s / L;
    };
    c.slope = [L](double s) { return (s > -L && s < 0.0) ? 1.0 / L : 0.0; };
    c.max_slope = 1.0 / L;
    return c;
}

/// Periodic channel reference domain: box (0, extent_0) x ... x (0, height),
/// flexible wall = top face parametrized as a graph, base normal = e_d,
/// rigid bottom wall. The tubular neighbourhood of the flexible wall has
/// half-width L measured downward from the top face.
template <int D>
struct ReferenceGeometry {
    static constexpr int structure_dim = D - 1;

    std::array<double, D> extent{};
    double tube_halfwidth = 0.0;
    CutoffProfile cutoff;

    ReferenceGeometry() = default;
    ReferenceGeometry(const std::array<double, D>& extent_, double L)
        : extent(extent_), tube_halfwidth(L), cutoff(make_default_cutoff(L)) {
        if (L <= 0.0) throw ValidationError("tube_halfwidth", "must be positive");
        if (L > 0.5 * extent[D - 1])
            throw ValidationError("tube_halfwidth", "must not exceed half the domain height");
        for (int a = 0; a < D; ++a)
            if (extent[a] <= 0.0) throw ValidationError("extent", "must be positive");
    }

    double height() const { return extent[D - 1]; }

    /// Signed wall distance of an interior point (<= 0, zero on the wall).
    double wall_distance(const Vec<D>& x) const { return x[D - 1] - height(); }

    /// Boundary parametrization phi(y) = (y, height).
    Vec<D> boundary_point(const std::array<double, D - 1>& y) const {
        Vec<D> p;
        for (int a = 0; a < D - 1; ++a) p[a] = y[a];
        p[D - 1] = height();
        return p;
    }

    Vec<D> base_normal() const {
        Vec<D> n;
        n[D - 1] = 1.0;
        return n;
    }

    /// Structure extents (horizontal box).
    std::array<double, D - 1> structure_extent() const {
        std::array<double, D - 1> e;
        for (int a = 0; a < D - 1; ++a) e[a] = extent[a];
        return e;
    }

    bool inside_closure(const Vec<D>& x, double tol = 1e-12) const {
        for (int a = 0; a < D; ++a)
            if (x[a] < -tol || x[a] > extent[a] + tol) return false;
        return true;
    }
};

/// Pullback matrices of a deformation gradient F: J = det F, B = F^{-T}
/// (mapped gradient is B grad), A = J F^{-1} F^{-T} (mapped Laplacian is
/// div(A grad)).
template <int D>
struct TransformMatrices {
    double J;
    SymMat<D> A;
    Mat<D> B;
};

template <int D>
inline TransformMatrices<D> transform_from_gradient(const Mat<D>& F) {
    TransformMatrices<D> t;
    t.J = F.det();
    if (std::abs(t.J) < 1e-12) throw SingularJacobian("deformation gradient is singular");
    Mat<D> Finv = F.inverse();
    t.B = Finv.transposed();
    Mat<D> a = Finv.mul(t.B);
    for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j) t.A.at(i, j) = t.J * a(i, j);
    return t;
}

/// Discrete Hanzawa transform of the channel geometry for one displacement
/// sample, with metric caches on a fluid grid. The displacement is purely
/// vertical, delta(x) = eta(y(x)) * cutoff(s(x)), so the deformation
/// gradient differs from the identity only in its last row
/// (eta' * cutoff, ..., 1 + eta * cutoff'), and all pullback quantities
/// derive from (J, F_{d,h}).
namespace detail {
inline std::uint64_t next_map_id() {
    static std::uint64_t counter = 0;
    return ++counter;
}
} // namespace detail

template <int D>
class HanzawaMap {
public:
    static constexpr int DM = D - 1;

    HanzawaMap() = default;

    /// Monotonic identifier; distinct per constructed map (used by steppers
    /// to cache factorized operators between steps on a frozen map).
    std::uint64_t id() const { return id_; }

    /// Identity map (eta = 0) on a grid; also valid for fully periodic grids.
    static HanzawaMap identity(const ReferenceGeometry<D>& geom, const Grid<D>& grid) {
        StructureMesh<DM> mesh(horizontal_counts(grid), geom.structure_extent());
        ScalarField zero(mesh.nnodes(), 0.0);
        return HanzawaMap(geom, grid, mesh, zero);
    }

    HanzawaMap(const ReferenceGeometry<D>& geom, const Grid<D>& grid,
               const StructureMesh<DM>& structure_mesh, const ScalarField& eta_nodal,
               int newton_budget = 60)
        : geom_(geom), grid_(grid), newton_budget_(newton_budget) {
        max_eta_ = field_max_abs(eta_nodal);
        if (max_eta_ >= geom.tube_halfwidth)
            throw DisplacementExceedsTube("max|eta| = " + std::to_string(max_eta_)
                                          + " exceeds tube half-width "
                                          + std::to_string(geom.tube_halfwidth));
        eta_modes_ = to_modes(structure_mesh, eta_nodal);
        // column data at the grid's horizontal resolution
        grid_modes_ = resample_modes(eta_modes_, horizontal_counts(grid));
        build_caches();
    }

    const ReferenceGeometry<D>& geometry() const { return geom_; }
    const Grid<D>& grid() const { return grid_; }
    const SpectralField<DM>& displacement_modes() const { return eta_modes_; }
    double max_displacement() const { return max_eta_; }

    // --- pointwise evaluation -------------------------------------------

    /// Forward map Psi_eta; identity outside the tubular neighbourhood.
    Vec<D> forward(const Vec<D>& x) const {
        if (!geom_.inside_closure(x)) throw OutOfDomain("point outside reference domain");
        double s = geom_.wall_distance(x);
        Vec<D> out = x;
        if (s > -geom_.tube_halfwidth)
            out[D - 1] += eta_at(x) * geom_.cutoff.value(s);
        return out;
    }

    /// Inverse by safeguarded Newton iteration on the vertical coordinate.
    Vec<D> inverse(const Vec<D>& X) const {
        double eta = eta_at(X); // horizontal coordinates are unchanged
        Vec<D> out = X;
        const double H = geom_.height();
        double target = X[D - 1];
        double lo = 0.0, hi = H;
        double z = target - eta * geom_.cutoff.value(target - H); // quasi-inverse start
        z = std::min(std::max(z, lo), hi);
        for (int it = 0; it < newton_budget_; ++it) {
            double s = z - H;
            double F = z + eta * geom_.cutoff.value(s) - target;
            if (std::abs(F) < 1e-13 * (1.0 + std::abs(target))) {
                out[D - 1] = z;
                return out;
            }
            if (F > 0)
                hi = z;
            else
                lo = z;
            double dF = 1.0 + eta * geom_.cutoff.slope(s);
            double znew = (dF > 1e-12) ? z - F / dF : 0.5 * (lo + hi);
            if (znew <= lo || znew >= hi) znew = 0.5 * (lo + hi);
            z = znew;
        }
        throw NonInvertible("Newton iteration for the inverse map did not converge");
    }

    /// Pointwise (J, A, B) of the map.
    TransformMatrices<D> transform(const Vec<D>& x) const {
        if (!geom_.inside_closure(x)) throw OutOfDomain("point outside reference domain");
        double s = geom_.wall_distance(x);
        double eta = eta_at(x);
        std::array<double, DM> de = grad_eta_at(x);
        double phi = geom_.cutoff.value(s);
        double dphi = geom_.cutoff.slope(s);
        double J = 1.0 + eta * dphi;
        std::array<double, DM> Fdh;
        for (int h = 0; h < DM; ++h) Fdh[h] = de[h] * phi;
        return from_metric(J, Fdh);
    }

    double jacobian_det(const Vec<D>& x) const { return transform(x).J; }

    // --- cached metric fields on the grid -------------------------------

    double J_cell(int idx) const { return J_cell_[idx]; }
    double delta_cell(int idx) const { return delta_cell_[idx]; }
    double J_face(int axis, int idx) const { return J_face_[axis][idx]; }
    double delta_vface(int idx) const { return delta_vface_[idx]; }

    const ScalarField& J_cells() const { return J_cell_; }

    std::array<double, DM> Fdh_cell(int idx) const {
        std::array<double, DM> f;
        for (int h = 0; h < DM; ++h) f[h] = Fdh_cell_[h][idx];
        return f;
    }
    std::array<double, DM> Fdh_face(int axis, int idx) const {
        std::array<double, DM> f;
        for (int h = 0; h < DM; ++h) f[h] = Fdh_face_[axis][h][idx];
        return f;
    }

    SymMat<D> A_cell(int idx) const { return A_from(J_cell_[idx], Fdh_cell(idx)); }
    SymMat<D> A_face(int axis, int idx) const {
        return A_from(J_face_[axis][idx], Fdh_face(axis, idx));
    }
    Mat<D> B_cell(int idx) const { return B_from(J_cell_[idx], Fdh_cell(idx)); }

    /// Mapped gradient: B grad, with the raw reference-coordinate gradient g.
    Vec<D> apply_B_cell(int idx, const Vec<D>& g) const {
        Vec<D> out = g;
        double J = J_cell_[idx];
        double gd = g[D - 1];
        for (int h = 0; h < DM; ++h) out[h] -= Fdh_cell_[h][idx] / J * gd;
        out[D - 1] = gd / J;
        return out;
    }

    /// Contravariant flux (J F^{-1} w) component through a +face of `axis`.
    double contravariant_face(int axis, int idx, const Vec<D>& w) const {
        if (axis < DM) return J_face_[axis][idx] * w[axis];
        double v = w[D - 1];
        for (int h = 0; h < DM; ++h) v -= Fdh_face_[axis][h][idx] * w[h];
        return v;
    }

    /// Vertical contravariant component at a cell (used for wall fluxes).
    double contravariant_vertical_cell(int idx, const Vec<D>& w) const {
        double v = w[D - 1];
        for (int h = 0; h < DM; ++h) v -= Fdh_cell_[h][idx] * w[h];
        return v;
    }

    double min_jacobian() const { return min_J_; }

    /// Wall-column displacement (eta at the fluid wall columns, cell-centered
    /// horizontal positions).
    const ScalarField& wall_eta() const { return wall_eta_; }
    /// Wall-column horizontal gradient of eta.
    const std::array<ScalarField, DM>& wall_grad_eta() const { return wall_grad_eta_; }

private:
    static std::array<int, DM> horizontal_counts(const Grid<D>& grid) {
        std::array<int, DM> n;
        for (int a = 0; a < DM; ++a) n[a] = grid.n[a];
        return n;
    }

    static SymMat<D> A_from(double J, const std::array<double, DM>& Fdh) {
        SymMat<D> A;
        double sum = 1.0;
        for (int h = 0; h < DM; ++h) {
            A.at(h, h) = J;
            A.at(h, D - 1) = -Fdh[h];
            sum += Fdh[h] * Fdh[h];
        }
        A.at(D - 1, D - 1) = sum / J;
        for (int h = 0; h < DM; ++h)
            for (int k = h + 1; k < DM; ++k) A.at(h, k) = 0.0;
        return A;
    }

    static Mat<D> B_from(double J, const std::array<double, DM>& Fdh) {
        Mat<D> B = Mat<D>::identity();
        for (int h = 0; h < DM; ++h) B(h, D - 1) = -Fdh[h] / J;
        B(D - 1, D - 1) = 1.0 / J;
        return B;
    }

    TransformMatrices<D> from_metric(double J, const std::array<double, DM>& Fdh) const {
        if (std::abs(J) < 1e-12) throw SingularJacobian("Jacobian determinant below 1e-12");
        TransformMatrices<D> t;
        t.J = J;
        t.A = A_from(J, Fdh);
        t.B = B_from(J, Fdh);
        return t;
    }

    double eta_at(const Vec<D>& x) const {
        std::array<double, DM> y;
        for (int a = 0; a < DM; ++a) y[a] = x[a];
        return eta_modes_.eval(y);
    }

    std::array<double, DM> grad_eta_at(const Vec<D>& x) const {
        std::array<double, DM> g;
        for (int h = 0; h < DM; ++h) {
            SpectralField<DM> d = eta_modes_;
            for (size_t m = 0; m < d.modes.size(); ++m) {
                auto k = d.wavevector(int(m));
                auto iv = d.mesh.multi_index(int(m));
                if (d.mesh.n[h] % 2 == 0 && iv[h] == d.mesh.n[h] / 2)
                    d.modes[m] = 0;
                else
                    d.modes[m] *= Cplx(0, k[h]);
            }
            std::array<double, DM> y;
            for (int a = 0; a < DM; ++a) y[a] = x[a];
            g[h] = d.eval(y);
        }
        return g;
    }

    void build_caches() {
        const int nc = grid_.ncells();
        const double H = geom_.height();

        // column samples: base (cell centers) and one shifted set per
        // horizontal axis (face centers of that axis)
        struct Columns {
            ScalarField eta;
            std::array<ScalarField, DM> deta;
        };
        auto sample_columns = [&](int shift_axis) {
            Columns c;
            std::array<double, DM> shift;
            for (int a = 0; a < DM; ++a) shift[a] = 0.5 * grid_.h[a];
            if (shift_axis >= 0) shift[shift_axis] += 0.5 * grid_.h[shift_axis];
            std::array<int, DM> no_deriv{};
            c.eta = sample_shifted(grid_modes_, shift, no_deriv);
            for (int h = 0; h < DM; ++h) {
                std::array<int, DM> dv{};
                dv[h] = 1;
                c.deta[h] = sample_shifted(grid_modes_, shift, dv);
            }
            return c;
        };
        Columns base = sample_columns(-1);
        std::array<Columns, DM> shifted;
        for (int a = 0; a < DM; ++a) shifted[a] = sample_columns(a);

        delta_cell_.assign(nc, 0.0);
        J_cell_.assign(nc, 1.0);
        delta_vface_.assign(nc, 0.0);
        for (int h = 0; h < DM; ++h) Fdh_cell_[h].assign(nc, 0.0);
        for (int a = 0; a < D; ++a) {
            J_face_[a].assign(nc, 1.0);
            for (int h = 0; h < DM; ++h) Fdh_face_[a][h].assign(nc, 0.0);
        }

        min_J_ = 1.0;
        grid_.for_cells([&](int idx, const std::array<int, D>& iv) {
            int col = grid_.column_of(iv);
            double s_c = (iv[D - 1] + 0.5) * grid_.h[D - 1] - H;
            double phi = geom_.cutoff.value(s_c);
            double dphi = geom_.cutoff.slope(s_c);
            delta_cell_[idx] = base.eta[col] * phi;
            J_cell_[idx] = 1.0 + base.eta[col] * dphi;
            for (int h = 0; h < DM; ++h) Fdh_cell_[h][idx] = base.deta[h][col] * phi;
            min_J_ = std::min(min_J_, J_cell_[idx]);

            // horizontal faces: shifted column, same depth
            for (int a = 0; a < DM; ++a) {
                J_face_[a][idx] = 1.0 + shifted[a].eta[col] * dphi;
                for (int h = 0; h < DM; ++h)
                    Fdh_face_[a][h][idx] = shifted[a].deta[h][col] * phi;
                min_J_ = std::min(min_J_, J_face_[a][idx]);
            }
            // vertical +face: same column, face depth
            double s_f = (iv[D - 1] + 1) * grid_.h[D - 1] - H;
            double phif = geom_.cutoff.value(s_f);
            double dphif = geom_.cutoff.slope(s_f);
            delta_vface_[idx] = base.eta[col] * phif;
            J_face_[D - 1][idx] = 1.0 + base.eta[col] * dphif;
            for (int h = 0; h < DM; ++h)
                Fdh_face_[D - 1][h][idx] = base.deta[h][col] * phif;
            min_J_ = std::min(min_J_, J_face_[D - 1][idx]);
        });
        if (min_J_ < 1e-12)
            throw SingularJacobian("Jacobian determinant lost positivity (min J = "
                                   + std::to_string(min_J_) + ")");

        wall_eta_ = base.eta;
        for (int h = 0; h < DM; ++h) wall_grad_eta_[h] = base.deta[h];
    }

    ReferenceGeometry<D> geom_;
    Grid<D> grid_;
    SpectralField<DM> eta_modes_;  // native structure resolution
    SpectralField<DM> grid_modes_; // resampled to the grid's columns
    double max_eta_ = 0.0;
    double min_J_ = 1.0;
    int newton_budget_ = 60;
    std::uint64_t id_ = detail::next_map_id();

    ScalarField delta_cell_, J_cell_, delta_vface_;
    std::array<ScalarField, DM> Fdh_cell_;
    std::array<ScalarField, D> J_face_;
    std::array<std::array<ScalarField, DM>, D> Fdh_face_;
    ScalarField wall_eta_;
    std::array<ScalarField, DM> wall_grad_eta_;
};

template <int D>
HanzawaMap<D> build_hanzawa_map(const ReferenceGeometry<D>& geom, const Grid<D>& grid,
                                const StructureMesh<D - 1>& mesh, const ScalarField& eta,
                                int newton_budget = 60) {
    return HanzawaMap<D>(geom, grid, mesh, eta, newton_budget);
}

/// Deformed flexible wall phi_eta(y) = phi(y) + n eta(y) sampled on a set of
/// structure columns (optionally half-cell shifted to fluid columns).
template <int D>
struct DeformedBoundary {
    static constexpr int DM = D - 1;

    StructureMesh<DM> mesh;
    ScalarField eta;
    std::array<ScalarField, DM> grad_eta;
    ScalarField surface_jacobian; // sqrt(1 + |grad eta|^2)
    ScalarField n_dot_neta;       // 1 / surface_jacobian

    Vec<D> point(const ReferenceGeometry<D>& geom, int node) const {
        auto y = mesh.node(mesh.multi_index(node));
        Vec<D> p;
        for (int a = 0; a < DM; ++a) p[a] = y[a];
        p[D - 1] = geom.height() + eta[node];
        return p;
    }

    Vec<D> normal(int node) const {
        Vec<D> n;
        for (int h = 0; h < DM; ++h) n[h] = -grad_eta[h][node];
        n[D - 1] = 1.0;
        double len = n.norm();
        for (int a = 0; a < D; ++a) n[a] /= len;
        return n;
    }
};

template <int D>
DeformedBoundary<D> build_deformed_boundary(const SpectralField<D - 1>& eta_modes,
                                            double half_cell_shift = 0.0) {
    constexpr int DM = D - 1;
    DeformedBoundary<D> b;
    b.mesh = eta_modes.mesh;
    std::array<double, DM> shift;
    for (int a = 0; a < DM; ++a) shift[a] = half_cell_shift * b.mesh.h[a];
    std::array<int, DM> nod{};
    b.eta = sample_shifted(eta_modes, shift, nod);
    for (int h = 0; h < DM; ++h) {
        std::array<int, DM> dv{};
        dv[h] = 1;
        b.grad_eta[h] = sample_shifted(eta_modes, shift, dv);
    }
    const int n = b.mesh.nnodes();
    b.surface_jacobian.resize(n);
    b.n_dot_neta.resize(n);
    for (int i = 0; i < n; ++i) {
        double g2 = 0;
        for (int h = 0; h < DM; ++h) g2 += b.grad_eta[h][i] * b.grad_eta[h][i];
        b.surface_jacobian[i] = std::sqrt(1.0 + g2);
        b.n_dot_neta[i] = 1.0 / b.surface_jacobian[i];
    }
    return b;
}

} // namespace pfsi
