#pragma once

#include <cmath>
#include <vector>

#include "pfsi/core/errors.hpp"
#include "pfsi/core/ops.hpp"
#include "pfsi/core/parallel.hpp"
#include "pfsi/core/tensor.hpp"

namespace pfsi {

/// Truncated configuration domain [-Q, Q]^DQ, cell-centered (so the node set
/// is symmetric under q -> -q and odd moments vanish identically).
template <int DQ>
struct ConfigurationGrid {
    double q_extent = 6.0; // truncation radius Q
    int points_per_axis = 64;

    int ncells() const {
        int c = 1;
        for (int a = 0; a < DQ; ++a) c *= points_per_axis;
        return c;
    }
    double spacing() const { return 2.0 * q_extent / points_per_axis; }
    double cell_volume() const {
        double v = 1;
        for (int a = 0; a < DQ; ++a) v *= spacing();
        return v;
    }
    std::array<int, DQ> multi_index(int idx) const {
        std::array<int, DQ> iv;
        for (int a = 0; a < DQ; ++a) {
            iv[a] = idx % points_per_axis;
            idx /= points_per_axis;
        }
        return iv;
    }
    int index(const std::array<int, DQ>& iv) const {
        int idx = iv[DQ - 1];
        for (int a = DQ - 2; a >= 0; --a) idx = idx * points_per_axis + iv[a];
        return idx;
    }
    Vec<DQ> node(const std::array<int, DQ>& iv) const {
        Vec<DQ> q;
        for (int a = 0; a < DQ; ++a) q[a] = -q_extent + (iv[a] + 0.5) * spacing();
        return q;
    }
};

/// Hookean spring potential U = |q|^2/2 and its normalized Maxwellian on
/// the truncated grid.
template <int DQ>
struct MaxwellianModel {
    ConfigurationGrid<DQ> grid;
    ScalarField values; // discrete M, sums to 1 against the cell volume

    double potential(const Vec<DQ>& q) const { return 0.5 * q.dot(q); }
};

template <int DQ>
MaxwellianModel<DQ> build_maxwellian(const ConfigurationGrid<DQ>& grid) {
    if (grid.q_extent < 5.0)
        throw ValidationError("q_extent", "truncation radius must be at least 5");
    // Gaussian mass outside the box, by the product of 1D tails
    double inside1d = std::erf(grid.q_extent / std::sqrt(2.0));
    double outside = 1.0 - std::pow(inside1d, DQ);
    if (outside > 1e-6)
        throw TruncationTooSmall("Gaussian mass outside the truncated box: "
                                 + std::to_string(outside));

    MaxwellianModel<DQ> m;
    m.grid = grid;
    m.values.resize(grid.ncells());
    double sum = 0;
    for (int i = 0; i < grid.ncells(); ++i) {
        auto q = grid.node(grid.multi_index(i));
        m.values[i] = std::exp(-0.5 * q.dot(q));
        sum += m.values[i];
    }
    double scale = 1.0 / (sum * grid.cell_volume());
    for (auto& v : m.values) v *= scale;
    return m;
}

/// Probability density on (x, q): one q-profile per x node. A single x node
/// is the spatially homogeneous mode; otherwise x lives on a periodic 1D
/// grid of the given extent.
template <int DQ>
struct ProbabilityDensity {
    ConfigurationGrid<DQ> grid;
    int nx = 1;
    double x_extent = 1.0;
    std::vector<ScalarField> f; // [nx][ncells(q)]

    static ProbabilityDensity homogeneous(const MaxwellianModel<DQ>& m, double rho = 1.0) {
        ProbabilityDensity p;
        p.grid = m.grid;
        p.nx = 1;
        p.f.assign(1, m.values);
        for (auto& v : p.f[0]) v *= rho;
        return p;
    }

    double x_spacing() const { return x_extent / nx; }

    /// Total probability mass (q-volume times x measure).
    double total_mass() const {
        double s = 0;
        for (const auto& slice : f) s += field_sum(slice);
        double xw = (nx == 1) ? 1.0 : x_spacing();
        return s * grid.cell_volume() * xw;
    }
};

template <int DQ>
struct KineticMoments {
    std::vector<double> density;        // per x node
    std::vector<SymMat<DQ>> stress;     // per x node
};

/// Macroscopic closure moments: rho = integral of f dq, T = integral of
/// q (x) q f dq, per x node.
template <int DQ>
KineticMoments<DQ> close_moments(const ProbabilityDensity<DQ>& p) {
    KineticMoments<DQ> m;
    m.density.resize(p.nx);
    m.stress.resize(p.nx);
    const double dv = p.grid.cell_volume();
    for (int x = 0; x < p.nx; ++x) {
        double rho = 0;
        SymMat<DQ> T{};
        for (int i = 0; i < p.grid.ncells(); ++i) {
            auto q = p.grid.node(p.grid.multi_index(i));
            double w = p.f[x][i] * dv;
            rho += w;
            T += w * outer_self(q);
        }
        m.density[x] = rho;
        m.stress[x] = T;
    }
    return m;
}

template <int DQ>
struct KineticConfig {
    double cfl_limit = 0.5;
    double negative_tol = 1e-10;
};

/// Fokker-Planck stepper: explicit conservative configuration drift
/// div_q((grad u) q f), implicit conservative diffusion div_q(M grad(f/M))
/// in Scharfetter-Gummel form (the discrete Maxwellian is annihilated
/// exactly), explicit conservative x-advection/diffusion when x-resolved.
template <int DQ>
class KineticStepper {
public:
    KineticStepper(const MaxwellianModel<DQ>& maxwellian, KineticConfig<DQ> cfg = {})
        : m_(maxwellian), cfg_(cfg) {}

    const MaxwellianModel<DQ>& maxwellian() const { return m_; }

    /// One step with per-x velocity (x-component) and velocity gradient.
    /// For the homogeneous mode pass single-entry vectors.
    void step(ProbabilityDensity<DQ>& p, const std::vector<double>& u_x,
              const std::vector<Mat<DQ>>& grad_u, double dt) {
        const auto& qg = p.grid;
        const double hq = qg.spacing();

        // drift CFL over all x nodes
        double gmax = 0;
        for (const auto& G : grad_u) {
            double rowsum = 0;
            for (int i = 0; i < DQ; ++i)
                for (int j = 0; j < DQ; ++j) rowsum = std::max(rowsum, std::abs(G(i, j)));
            gmax = std::max(gmax, rowsum);
        }
        double drift_cfl = gmax * qg.q_extent * double(DQ) * dt / hq;
        if (drift_cfl > cfg_.cfl_limit)
            throw CFLViolation("configuration drift CFL " + std::to_string(drift_cfl));

        ensure_diffusion(qg, dt);

        // x-transport (explicit, conservative) for resolved runs
        std::vector<ScalarField> fx = p.f;
        if (p.nx > 1) {
            double hx = p.x_spacing();
            double xcfl = 0;
            for (double u : u_x) xcfl = std::max(xcfl, std::abs(u) * dt / hx);
            if (xcfl > cfg_.cfl_limit)
                throw CFLViolation("x-advection CFL " + std::to_string(xcfl));
            if (2.0 * dt / (hx * hx) > 0.9)
                throw CFLViolation("explicit x-diffusion number too large");
            for (int x = 0; x < p.nx; ++x) {
                int xp = (x + 1) % p.nx, xm = (x + p.nx - 1) % p.nx;
                double up = 0.5 * (u_x[x] + u_x[xp]);
                double um = 0.5 * (u_x[xm] + u_x[x]);
                for (int i = 0; i < qg.ncells(); ++i) {
                    double flux_p = up * 0.5 * (p.f[x][i] + p.f[xp][i])
                                    - (p.f[xp][i] - p.f[x][i]) / hx;
                    double flux_m = um * 0.5 * (p.f[xm][i] + p.f[x][i])
                                    - (p.f[x][i] - p.f[xm][i]) / hx;
                    fx[x][i] = p.f[x][i] - dt * (flux_p - flux_m) / hx;
                }
            }
        }

        // per-x configuration-space update
        parallel_for(p.nx, [&](int x) {
            const Mat<DQ>& G = grad_u[p.nx == 1 ? 0 : x];
            ScalarField rhs = fx[x];

            // explicit drift: conservative flux g_a(q_face) * avg(f)
            for (int a = 0; a < DQ; ++a) {
                for (int i = 0; i < qg.ncells(); ++i) {
                    auto iv = qg.multi_index(i);
                    if (iv[a] == qg.points_per_axis - 1) continue; // zero-flux boundary
                    auto jv = iv;
                    jv[a] += 1;
                    int j = qg.index(jv);
                    Vec<DQ> qf = qg.node(iv);
                    qf[a] += 0.5 * hq;
                    double g = 0;
                    for (int b = 0; b < DQ; ++b) g += G(a, b) * qf[b];
                    double flux = g * 0.5 * (fx[x][i] + fx[x][j]);
                    rhs[i] -= dt * flux / hq;
                    rhs[j] += dt * flux / hq;
                }
            }

            // symmetrized solve in g = f / sqrt(M): well-scaled coefficients
            Eigen::VectorXd gr(qg.ncells());
            for (int i = 0; i < qg.ncells(); ++i) gr[i] = rhs[i] / sqrtM_[i];
            Eigen::VectorXd gs = diffusion_.solve(gr);
            for (int i = 0; i < qg.ncells(); ++i) p.f[x][i] = gs[i] * sqrtM_[i];
        });

        double mn = 0;
        for (const auto& slice : p.f) mn = std::min(mn, field_min(slice));
        if (mn < -cfg_.negative_tol)
            throw NegativeDensity("kinetic density fell to " + std::to_string(mn));
    }

private:
    void ensure_diffusion(const ConfigurationGrid<DQ>& qg, double dt) {
        if (diffusion_valid_ && dt == dt_) return;
        const int n = qg.ncells();
        const double hq = qg.spacing();

        sqrtM_.resize(n);
        for (int i = 0; i < n; ++i) sqrtM_[i] = std::sqrt(m_.values[i]);

        // Similarity-transformed system in g = f / sqrt(M): the flux
        // M_face ((f/M)_+ - (f/M)_-)/hq with M_face = sqrt(M_+ M_-) turns
        // into unit off-diagonal couplings, so the matrix is symmetric and
        // well scaled while f = c M remains an exact fixed point.
        std::vector<Triplet> trip;
        trip.reserve(std::size_t(n) * (2 * DQ + 1));
        std::vector<double> diag(n, 1.0);
        auto add = [&](int r, int c, double v) { trip.emplace_back(r, c, v); };
        const double c0 = dt / (hq * hq);
        for (int a = 0; a < DQ; ++a) {
            for (int i = 0; i < n; ++i) {
                auto iv = qg.multi_index(i);
                if (iv[a] == qg.points_per_axis - 1) continue;
                auto jv = iv;
                jv[a] += 1;
                int j = qg.index(jv);
                double rij = sqrtM_[j] / sqrtM_[i]; // = sqrt(M_j / M_i)
                diag[i] += c0 * rij;
                add(i, j, -c0);
                diag[j] += c0 / rij;
                add(j, i, -c0);
            }
        }
        for (int i = 0; i < n; ++i) add(i, i, diag[i]);
        SpMat M(n, n);
        M.setFromTriplets(trip.begin(), trip.end());
        diffusion_.factor(M);
        dt_ = dt;
        diffusion_valid_ = true;
    }

    MaxwellianModel<DQ> m_;
    KineticConfig<DQ> cfg_;
    DirectSolver diffusion_;
    ScalarField sqrtM_;
    double dt_ = -1;
    bool diffusion_valid_ = false;
};

/// Fit of the moment relaxation rate: run the homogeneous kinetic solver
/// with grad u = 0 from an anisotropic start and fit the exponential decay
/// rate of |T - rho I| (the macroscopic relaxation coefficient).
template <int DQ>
double calibrate_relaxation_rate(const MaxwellianModel<DQ>& m, double dt = 1e-3,
                                 int steps = 400) {
    ProbabilityDensity<DQ> p;
    p.grid = m.grid;
    p.nx = 1;
    p.f.assign(1, ScalarField(m.grid.ncells()));
    // Gaussian with covariance diag(2, 1, ...), discretely normalized
    double sum = 0;
    for (int i = 0; i < m.grid.ncells(); ++i) {
        auto q = m.grid.node(m.grid.multi_index(i));
        double e = 0.25 * q[0] * q[0];
        for (int a = 1; a < DQ; ++a) e += 0.5 * q[a] * q[a];
        p.f[0][i] = std::exp(-e);
        sum += p.f[0][i];
    }
    for (auto& v : p.f[0]) v /= sum * m.grid.cell_volume();

    KineticStepper<DQ> stepper(m);
    std::vector<double> u0(1, 0.0);
    std::vector<Mat<DQ>> g0(1);

    std::vector<double> logdev, times;
    for (int s = 0; s < steps; ++s) {
        stepper.step(p, u0, g0, dt);
        auto mom = close_moments(p);
        SymMat<DQ> dev = mom.stress[0];
        for (int a = 0; a < DQ; ++a) dev.at(a, a) -= mom.density[0];
        double r = std::sqrt(dev.frobenius_sq());
        if (r > 1e-12) {
            logdev.push_back(std::log(r));
            times.push_back((s + 1) * dt);
        }
    }
    // least-squares slope
    double n = double(logdev.size()), st = 0, sy = 0, stt = 0, sty = 0;
    for (size_t i = 0; i < logdev.size(); ++i) {
        st += times[i];
        sy += logdev[i];
        stt += times[i] * times[i];
        sty += times[i] * logdev[i];
    }
    double slope = (n * sty - st * sy) / (n * stt - st * st);
    return -slope;
}

template <int DQ>
struct ClosureReport {
    double kappa;
    double max_stress_residual;  // midpoint finite-difference ODE residual
    double max_density_residual; // |d rho / dt|
};

/// Residual of the closed macroscopic moment system along a homogeneous
/// kinetic trajectory under a constant velocity gradient: the moments
/// should satisfy rho' = 0 and T' = G T + T G^T - kappa (T - rho I).
/// Optionally records the moment time series.
template <int DQ>
ClosureReport<DQ> verify_closure(const MaxwellianModel<DQ>& m, const Mat<DQ>& grad_u,
                                 double dt, int steps, double kappa,
                                 std::vector<std::pair<double, KineticMoments<DQ>>>* history
                                     = nullptr) {
    ProbabilityDensity<DQ> p = ProbabilityDensity<DQ>::homogeneous(m);
    KineticStepper<DQ> stepper(m);
    std::vector<double> u0(1, 0.0);
    std::vector<Mat<DQ>> g0(1, grad_u);

    ClosureReport<DQ> rep{kappa, 0.0, 0.0};
    auto prev = close_moments(p);
    if (history) history->push_back({0.0, prev});
    double scale = std::max(1.0, std::sqrt(prev.stress[0].frobenius_sq()));
    for (int s = 0; s < steps; ++s) {
        stepper.step(p, u0, g0, dt);
        auto cur = close_moments(p);
        if (history) history->push_back({(s + 1) * dt, cur});

        SymMat<DQ> mid = 0.5 * (cur.stress[0] + prev.stress[0]);
        double rho_mid = 0.5 * (cur.density[0] + prev.density[0]);
        SymMat<DQ> rhs = SymMat<DQ>::upper_convected(grad_u, mid);
        SymMat<DQ> relax = mid;
        for (int a = 0; a < DQ; ++a) relax.at(a, a) -= rho_mid;
        rhs -= kappa * relax;

        SymMat<DQ> resid = cur.stress[0] - prev.stress[0];
        resid *= 1.0 / dt;
        resid -= rhs;
        rep.max_stress_residual =
            std::max(rep.max_stress_residual, std::sqrt(resid.frobenius_sq()) / scale);
        rep.max_density_residual = std::max(
            rep.max_density_residual, std::abs(cur.density[0] - prev.density[0]) / dt);
        prev = cur;
        scale = std::max(scale, std::sqrt(cur.stress[0].frobenius_sq()));
    }
    return rep;
}

} // namespace pfsi
