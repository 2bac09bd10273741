#pragma once

#include <complex>
#include <vector>

#include <type_traits>
#include <unsupported/Eigen/FFT>

#include "pfsi/core/grid.hpp"

namespace pfsi {

using Cplx = std::complex<double>;

namespace detail {

inline void fft_forward_raw(std::vector<Cplx>& x) {
    Eigen::FFT<double> fft;
    std::vector<Cplx> out(x.size());
    fft.fwd(out, x);
    x.swap(out);
}

// Unscaled inverse via conjugation, so no reliance on scaling flags.
inline void fft_inverse_raw(std::vector<Cplx>& x) {
    for (auto& v : x) v = std::conj(v);
    fft_forward_raw(x);
    for (auto& v : x) v = std::conj(v);
}

template <int DM>
void fft_axis(const StructureMesh<DM>& mesh, std::vector<Cplx>& data, int axis, bool forward) {
    const int na = mesh.n[axis];
    const int total = mesh.nnodes();
    const int nlines = total / na;
    // stride of the axis in the flat layout (axis 0 fastest)
    int stride = 1;
    for (int a = 0; a < axis; ++a) stride *= mesh.n[a];

    std::vector<Cplx> line(na);
    for (int l = 0; l < nlines; ++l) {
        // base index of this line
        int rem = l;
        int base = 0;
        int mult = 1;
        for (int a = 0; a < DM; ++a) {
            if (a == axis) {
                mult *= na;
                continue;
            }
            int ia = rem % mesh.n[a];
            rem /= mesh.n[a];
            base += ia * mult;
            mult *= mesh.n[a];
        }
        for (int i = 0; i < na; ++i) line[i] = data[base + i * stride];
        if (forward)
            fft_forward_raw(line);
        else
            fft_inverse_raw(line);
        for (int i = 0; i < na; ++i) data[base + i * stride] = line[i];
    }
}

} // namespace detail

/// Signed integer frequency of DFT bin m on an axis with N points.
inline int signed_freq(int m, int N) { return (m <= N / 2) ? m : m - N; }

/// Periodic scalar field on the structure mesh represented by its Fourier
/// modes, normalized so that f(y) = sum_m c_m exp(i k_m . y).
template <int DM>
struct SpectralField {
    StructureMesh<DM> mesh;
    std::vector<Cplx> modes;

    SpectralField() = default;
    explicit SpectralField(const StructureMesh<DM>& m) : mesh(m), modes(m.nnodes(), Cplx(0, 0)) {}

    /// Wavenumber vector of mode with flat index idx.
    std::array<double, DM> wavevector(int idx) const {
        auto iv = mesh.multi_index(idx);
        std::array<double, DM> k;
        for (int a = 0; a < DM; ++a)
            k[a] = 2.0 * M_PI * signed_freq(iv[a], mesh.n[a]) / mesh.extent[a];
        return k;
    }

    double mean() const { return modes.empty() ? 0.0 : modes[0].real(); }

    /// L2(omega) inner-type sum: measure * sum_m w(k_m) |c_m|^2.
    template <typename W>
    double weighted_mode_sum(W&& w) const {
        double measure = 1.0;
        for (int a = 0; a < DM; ++a) measure *= mesh.extent[a];
        double s = 0;
        for (size_t m = 0; m < modes.size(); ++m) s += w(wavevector(int(m))) * std::norm(modes[m]);
        return measure * s;
    }

    /// Pointwise evaluation at an arbitrary point by direct mode summation.
    double eval(const std::array<double, DM>& y) const {
        Cplx s(0, 0);
        for (size_t m = 0; m < modes.size(); ++m) {
            auto k = wavevector(int(m));
            double phase = 0;
            for (int a = 0; a < DM; ++a) phase += k[a] * y[a];
            s += modes[m] * std::exp(Cplx(0, phase));
        }
        return s.real();
    }
};

template <int DM>
SpectralField<DM> to_modes(const StructureMesh<DM>& mesh, const ScalarField& nodal) {
    SpectralField<DM> f(mesh);
    for (int i = 0; i < mesh.nnodes(); ++i) f.modes[i] = Cplx(nodal[i], 0);
    for (int a = 0; a < DM; ++a) detail::fft_axis(mesh, f.modes, a, true);
    const double scale = 1.0 / mesh.nnodes();
    for (auto& c : f.modes) c *= scale;
    return f;
}

/// Nodal samples of the field on a grid shifted by `shift[a]` (physical
/// length) per axis, optionally differentiated `deriv[a]` times per axis.
/// Nyquist modes are dropped when differentiating an odd number of times.
template <int DM>
ScalarField sample_shifted(const SpectralField<DM>& f,
                           const std::type_identity_t<std::array<double, DM>>& shift,
                           const std::type_identity_t<std::array<int, DM>>& deriv) {
    std::vector<Cplx> work = f.modes;
    for (size_t m = 0; m < work.size(); ++m) {
        auto iv = f.mesh.multi_index(int(m));
        Cplx factor(1, 0);
        for (int a = 0; a < DM; ++a) {
            int sf = signed_freq(iv[a], f.mesh.n[a]);
            double k = 2.0 * M_PI * sf / f.mesh.extent[a];
            if (deriv[a] > 0) {
                if (f.mesh.n[a] % 2 == 0 && iv[a] == f.mesh.n[a] / 2 && deriv[a] % 2 == 1) {
                    factor = 0;
                    break;
                }
                for (int p = 0; p < deriv[a]; ++p) factor *= Cplx(0, k);
            }
            if (shift[a] != 0.0) factor *= std::exp(Cplx(0, k * shift[a]));
        }
        work[m] *= factor;
    }
    for (int a = 0; a < DM; ++a) detail::fft_axis(f.mesh, work, a, false);
    ScalarField out(f.mesh.nnodes());
    for (int i = 0; i < f.mesh.nnodes(); ++i) out[i] = work[i].real();
    return out;
}

template <int DM>
ScalarField to_nodal(const SpectralField<DM>& f) {
    return sample_shifted(f, std::array<double, DM>{}, std::array<int, DM>{});
}

/// Re-expand on a mesh with a different node count (spectral interpolation:
/// pad or truncate modes; Nyquist split symmetrically when padding).
template <int DM>
SpectralField<DM> resample_modes(const SpectralField<DM>& f,
                                 const std::type_identity_t<std::array<int, DM>>& n_dst) {
    StructureMesh<DM> dst(n_dst, f.mesh.extent);
    SpectralField<DM> g(dst);
    for (int m = 0; m < f.mesh.nnodes(); ++m) {
        auto iv = f.mesh.multi_index(m);
        std::array<int, DM> jv;
        bool keep = true;
        for (int a = 0; a < DM; ++a) {
            int sf = signed_freq(iv[a], f.mesh.n[a]);
            if (std::abs(sf) > dst.n[a] / 2) {
                keep = false;
                break;
            }
            jv[a] = (sf >= 0) ? sf : sf + dst.n[a];
        }
        if (keep) g.modes[dst.index(jv)] += f.modes[m];
    }
    return g;
}

} // namespace pfsi
