#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <vector>

#include "pfsi/core/tensor.hpp"

namespace pfsi {

using ScalarField = std::vector<double>;

/// Uniform cell-centered grid on the reference box. Horizontal axes (all but
/// the last) are always periodic; the last axis is either wall-bounded
/// (rigid bottom, flexible top) or periodic (fixed-box mode).
template <int D>
struct Grid {
    std::array<int, D> n{};
    std::array<double, D> extent{};
    std::array<double, D> h{};
    bool vertical_walls = true;

    Grid() = default;
    Grid(const std::array<int, D>& n_, const std::array<double, D>& extent_, bool walls)
        : n(n_), extent(extent_), vertical_walls(walls) {
        for (int a = 0; a < D; ++a) h[a] = extent[a] / n[a];
    }

    int ncells() const {
        int c = 1;
        for (int a = 0; a < D; ++a) c *= n[a];
        return c;
    }

    /// Number of grid columns (cells per horizontal slab).
    int ncolumns() const {
        int c = 1;
        for (int a = 0; a < D - 1; ++a) c *= n[a];
        return c;
    }

    double cell_volume() const {
        double v = 1;
        for (int a = 0; a < D; ++a) v *= h[a];
        return v;
    }

    bool axis_periodic(int a) const { return a < D - 1 || !vertical_walls; }

    int index(const std::array<int, D>& iv) const {
        int idx = iv[D - 1];
        for (int a = D - 2; a >= 0; --a) idx = idx * n[a] + iv[a];
        return idx;
    }

    std::array<int, D> multi_index(int idx) const {
        std::array<int, D> iv;
        for (int a = 0; a < D; ++a) {
            iv[a] = idx % n[a];
            idx /= n[a];
        }
        return iv;
    }

    /// Column (horizontal) index of a cell.
    int column_of(const std::array<int, D>& iv) const {
        int idx = 0;
        for (int a = D - 2; a >= 0; --a) idx = idx * n[a] + iv[a];
        return idx;
    }

    Vec<D> center(const std::array<int, D>& iv) const {
        Vec<D> x;
        for (int a = 0; a < D; ++a) x[a] = (iv[a] + 0.5) * h[a];
        return x;
    }

    int wrap(int i, int a) const {
        int m = n[a];
        return ((i % m) + m) % m;
    }

    /// Index of the neighbor cell along axis a (dir = +-1), wrapping
    /// periodically. For wall axes the caller must not step outside.
    int neighbor(const std::array<int, D>& iv, int a, int dir) const {
        std::array<int, D> jv = iv;
        jv[a] = wrap(iv[a] + dir, a);
        return index(jv);
    }

    template <typename F>
    void for_cells(F&& f) const {
        std::array<int, D> iv{};
        const int nc = ncells();
        for (int idx = 0; idx < nc; ++idx) {
            f(idx, iv);
            for (int a = 0; a < D; ++a) {
                if (++iv[a] < n[a]) break;
                iv[a] = 0;
            }
        }
    }
};

template <int D>
struct VecField {
    std::array<ScalarField, D> comp;

    void resize(int nc, double v = 0.0) {
        for (auto& c : comp) c.assign(nc, v);
    }
    Vec<D> at(int idx) const {
        Vec<D> u;
        for (int a = 0; a < D; ++a) u[a] = comp[a][idx];
        return u;
    }
    void set(int idx, const Vec<D>& u) {
        for (int a = 0; a < D; ++a) comp[a][idx] = u[a];
    }
};

template <int D>
struct SymField {
    static constexpr int NC = sym_components(D);
    std::array<ScalarField, NC> comp;

    void resize(int nc, double v = 0.0) {
        for (auto& c : comp) c.assign(nc, v);
    }
    SymMat<D> at(int idx) const {
        SymMat<D> s;
        for (int k = 0; k < NC; ++k) s.c[k] = comp[k][idx];
        return s;
    }
    void set(int idx, const SymMat<D>& s) {
        for (int k = 0; k < NC; ++k) comp[k][idx] = s.c[k];
    }
};

/// Per-axis face data: value at the +face of every cell. For a wall-bounded
/// last axis the +face of the top cell is the flexible wall; `lo` stores the
/// bottom wall faces (one per column).
template <int D>
struct FaceField {
    std::array<ScalarField, D> plus;
    ScalarField lo;

    void resize(const Grid<D>& g, double v = 0.0) {
        for (auto& c : plus) c.assign(g.ncells(), v);
        lo.assign(g.ncolumns(), v);
    }
};

/// Periodic structure mesh (dimension DM = D-1), nodes at y_j = j*h.
template <int DM>
struct StructureMesh {
    std::array<int, DM> n{};
    std::array<double, DM> extent{};
    std::array<double, DM> h{};

    StructureMesh() = default;
    StructureMesh(const std::array<int, DM>& n_, const std::array<double, DM>& extent_)
        : n(n_), extent(extent_) {
        for (int a = 0; a < DM; ++a) h[a] = extent[a] / n[a];
    }

    int nnodes() const {
        int c = 1;
        for (int a = 0; a < DM; ++a) c *= n[a];
        return c;
    }
    double node_volume() const {
        double v = 1;
        for (int a = 0; a < DM; ++a) v *= h[a];
        return v;
    }
    int index(const std::array<int, DM>& iv) const {
        int idx = iv[DM - 1];
        for (int a = DM - 2; a >= 0; --a) idx = idx * n[a] + iv[a];
        return idx;
    }
    std::array<int, DM> multi_index(int idx) const {
        std::array<int, DM> iv;
        for (int a = 0; a < DM; ++a) {
            iv[a] = idx % n[a];
            idx /= n[a];
        }
        return iv;
    }
    std::array<double, DM> node(const std::array<int, DM>& iv) const {
        std::array<double, DM> y;
        for (int a = 0; a < DM; ++a) y[a] = iv[a] * h[a];
        return y;
    }
};

inline double field_max_abs(const ScalarField& f) {
    double m = 0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

inline double field_min(const ScalarField& f) {
    double m = f.empty() ? 0.0 : f[0];
    for (double v : f) m = std::min(m, v);
    return m;
}

inline double field_sum(const ScalarField& f) {
    double s = 0;
    for (double v : f) s += v;
    return s;
}

} // namespace pfsi
