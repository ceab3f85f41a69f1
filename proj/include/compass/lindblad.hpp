#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "compass/parallel.hpp"
#include "compass/special_functions.hpp"
#include "compass/states.hpp"
#include "compass/types.hpp"

namespace compass {

using CMatrix = Eigen::MatrixXcd;

/// Truncated number-basis density operator.  check() enforces Hermiticity,
/// unit trace and positivity up to the truncation slack.
struct FockDensityMatrix {
    int cutoff = 0;
    CMatrix entries;

    static FockDensityMatrix pure(const FockVector& v) {
        FockDensityMatrix rho;
        rho.cutoff = v.cutoff;
        Eigen::Map<const Eigen::VectorXcd> psi(v.amplitudes.data(), v.cutoff);
        rho.entries = psi * psi.adjoint();
        return rho;
    }

    static FockDensityMatrix thermal(double n_bar, int cutoff) {
        FockDensityMatrix rho;
        rho.cutoff = cutoff;
        rho.entries = CMatrix::Zero(cutoff, cutoff);
        const double r = n_bar / (1.0 + n_bar);
        for (int m = 0; m < cutoff; ++m)
            rho.entries(m, m) = std::pow(r, m) / (1.0 + n_bar);
        return rho;
    }

    double trace() const { return entries.trace().real(); }

    void check(double pos_slack = 1e-8) const {
        if ((entries - entries.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw numerics_error("density matrix: Hermiticity violated");
        if (std::abs(trace() - 1.0) > 1e-10)
            throw numerics_error("density matrix: trace deviates from 1");
        Eigen::SelfAdjointEigenSolver<CMatrix> es(entries, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -pos_slack)
            throw numerics_error("density matrix: negative eigenvalue beyond truncation slack");
    }
};

namespace detail {

/// Heat-bath generator applied in place via index shifts; every term is
/// O(cutoff^2).  The a a^dag diagonal uses the truncated matrix product
/// (zero in the last slot) so the generator is exactly trace-free.
inline void lindblad_apply(const CMatrix& r, double n_bar, CMatrix& out) {
    const int n = static_cast<int>(r.rows());
    out.resize(n, n);
    for (int m = 0; m < n; ++m) {
        const double dm = (m + 1 < n) ? m + 1.0 : 0.0;  // (a a^dag)_mm truncated
        for (int k = 0; k < n; ++k) {
            const double dk = (k + 1 < n) ? k + 1.0 : 0.0;
            cplx v = (n_bar + 1.0) * (-static_cast<double>(m + k)) * r(m, k) +
                     n_bar * (-(dm + dk)) * r(m, k);
            if (m + 1 < n && k + 1 < n)
                v += (n_bar + 1.0) * 2.0 * std::sqrt((m + 1.0) * (k + 1.0)) * r(m + 1, k + 1);
            if (m > 0 && k > 0)
                v += n_bar * 2.0 * std::sqrt(static_cast<double>(m) * k) * r(m - 1, k - 1);
            out(m, k) = v;
        }
    }
}

}  // namespace detail

/// Right-hand side of the master equation
///   (n_bar+1)(2 a rho adag - adag a rho - rho adag a)
///   + n_bar (2 adag rho a - a adag rho - rho a adag),
/// both terms carrying the same rate (dimensionless time).
inline CMatrix lindblad_rhs(const FockDensityMatrix& rho, const ReservoirParams& reservoir) {
    reservoir.validate();
    CMatrix out;
    detail::lindblad_apply(rho.entries, reservoir.n_bar, out);
    return out;
}

namespace detail {

inline CMatrix rk4_run(CMatrix rho, double n_bar, double tau, double dt) {
    const int steps = std::max(1, static_cast<int>(std::ceil(tau / dt - 1e-12)));
    const double h = tau / steps;
    CMatrix k1, k2, k3, k4, tmp;
    for (int s = 0; s < steps; ++s) {
        lindblad_apply(rho, n_bar, k1);
        tmp = rho + (h / 2) * k1;
        lindblad_apply(tmp, n_bar, k2);
        tmp = rho + (h / 2) * k2;
        lindblad_apply(tmp, n_bar, k3);
        tmp = rho + h * k3;
        lindblad_apply(tmp, n_bar, k4);
        rho += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint().eval());  // suppress Hermiticity drift
    }
    return rho;
}

inline double trace_norm_diff(const CMatrix& a, const CMatrix& b) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a - b, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

}  // namespace detail

/// Fixed-step RK4 integration of the master equation to time tau, with the
/// step-halving convergence check: the dt and dt/2 runs must agree to 1e-8 in
/// trace norm.  The result is re-Hermitized every step and validated against
/// the density-matrix invariants on output.
inline FockDensityMatrix evolve(const FockDensityMatrix& rho0, const ReservoirParams& reservoir,
                                double tau, double dt = 0.0) {
    reservoir.validate();
    if (!(tau >= 0.0)) throw std::domain_error("evolve: tau must be >= 0");
    if (dt == 0.0) dt = 1e-3 / (1.0 + reservoir.n_bar);
    if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be > 0");
    if (tau == 0.0) return rho0;

    FockDensityMatrix out;
    out.cutoff = rho0.cutoff;
    out.entries = detail::rk4_run(rho0.entries, reservoir.n_bar, tau, dt);
    const CMatrix half = detail::rk4_run(rho0.entries, reservoir.n_bar, tau, dt / 2);
    if (detail::trace_norm_diff(out.entries, half) > 1e-8)
        throw numerics_error("evolve: step-halving check failed; dt too large or cutoff too small");
    out.check();
    return out;
}

/// Displacement operator in the truncated basis from the closed-form matrix
/// elements (associated-Laguerre form); no matrix exponential involved.
inline CMatrix displacement_matrix(cplx alpha, int cutoff) {
    const double x = std::norm(alpha);
    CMatrix d(cutoff, cutoff);
    std::vector<double> lf(cutoff);
    for (int n = 0; n < cutoff; ++n) lf[n] = log_factorial(n);
    std::vector<double> lag(cutoff);
    for (int k = 0; k < cutoff; ++k) {  // k = row - col offset
        const int nmax = cutoff - k;
        lag[0] = 1.0;
        if (nmax > 1) lag[1] = 1.0 + k - x;
        for (int n = 1; n + 1 < nmax; ++n)
            lag[n + 1] = ((2.0 * n + k + 1.0 - x) * lag[n] - (n + k) * lag[n - 1]) / (n + 1.0);
        const cplx ak = std::pow(alpha, k);
        const cplx akc = std::pow(-std::conj(alpha), k);
        for (int n = 0; n < nmax; ++n) {
            const int m = n + k;
            const double f = std::exp(0.5 * (lf[n] - lf[m]) - 0.5 * x);
            d(m, n) = f * ak * lag[n];
            if (k > 0) d(n, m) = f * akc * lag[n];
        }
    }
    return d;
}

/// W(point) = tr(rho 2 D Pi Ddag)/(2 pi) in the truncated basis
/// (normalized-dxdy convention).  Errors out if the displacement pushes more
/// than 1e-8 of the state's mass past the truncation.
inline double wigner_from_density(const FockDensityMatrix& rho, PhasePoint point) {
    const int n = rho.cutoff;
    const CMatrix d = displacement_matrix(point.beta(), n);
    // leakage: mass of the displaced state lost to truncation, tr(rho (I - Ddag D))
    const CMatrix g = d.adjoint() * d;
    const double leak = 1.0 - rho.entries.cwiseProduct(g.transpose()).sum().real();
    if (std::abs(leak) > 1e-8)
        throw cutoff_error("wigner_from_density: displacement leakage above 1e-8");
    const CMatrix rd = rho.entries * d;
    cplx tr{};
    for (int i = 0; i < n; ++i) {
        const cplx diag = d.col(i).adjoint() * rd.col(i);
        tr += (i & 1) ? -diag : diag;
    }
    return tr.real() / M_PI;
}

/// Wigner values on a grid from a density matrix.  The spectral form keeps
/// only eigenvectors above a weight threshold, which makes short-time evolved
/// states much cheaper than the full matrix product per point.
inline WignerGrid wigner_grid_from_density(const FockDensityMatrix& rho, const GridSpec& spec,
                                           unsigned threads = default_threads(),
                                           double weight_cut = 1e-14) {
    const int n = rho.cutoff;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.entries);
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()(i) > weight_cut) keep.push_back(i);
    CMatrix vecs(n, static_cast<int>(keep.size()));
    Eigen::VectorXd w(static_cast<int>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        vecs.col(static_cast<int>(i)) = es.eigenvectors().col(keep[i]);
        w(static_cast<int>(i)) = es.eigenvalues()(keep[i]);
    }
    WignerGrid g = WignerGrid::make(spec);
    std::vector<double> parity(n);
    for (int i = 0; i < n; ++i) parity[i] = (i & 1) ? -1.0 : 1.0;
    std::vector<double> leak_rows(g.ny, 0.0);
    parallel_for(0, static_cast<std::size_t>(g.ny), threads, [&](std::size_t iy) {
        CMatrix proj;
        double worst_leak = 0.0;
        for (int ix = 0; ix < g.nx; ++ix) {
            const PhasePoint pt{g.x(ix), g.y(static_cast<int>(iy))};
            const CMatrix d = displacement_matrix(pt.beta(), n);
            proj = d.adjoint() * vecs;  // n x r
            double val = 0.0, kept = 0.0;
            for (int c = 0; c < proj.cols(); ++c) {
                double s = 0.0, nrm = 0.0;
                for (int r = 0; r < n; ++r) {
                    const double a2 = std::norm(proj(r, c));
                    s += parity[r] * a2;
                    nrm += a2;
                }
                val += w(c) * s;
                kept += w(c) * nrm;
            }
            worst_leak = std::max(worst_leak, w.sum() - kept);
            g.at(ix, static_cast<int>(iy)) = val / M_PI;
        }
        leak_rows[iy] = worst_leak;
    });
    for (double l : leak_rows)
        if (l > 1e-8)
            throw cutoff_error("wigner_grid_from_density: displacement leakage above 1e-8");
    return g;
}

/// tr(rho^2); 1 for pure states, 1/(2 n_bar + 1) at thermal equilibrium.
inline double purity(const FockDensityMatrix& rho) {
    return rho.entries.squaredNorm();  // Frobenius norm^2 equals tr(rho^2) for Hermitian rho
}

}  // namespace compass
