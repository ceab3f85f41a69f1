#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "compass/parallel.hpp"
#include "compass/special_functions.hpp"
#include "compass/states.hpp"
#include "compass/types.hpp"

namespace compass {

/// Raw auxiliaries of the thermal convolution kernel at (tau, point):
/// T = 1 - exp(-2 tau), T_bar = (1 + 2 n_bar) T, and the k's that enter the
/// evolved series.  k1..k3 diverge as tau -> 0 (the kernel tends to a delta);
/// evaluation code below uses an algebraically equivalent form that stays
/// finite there.
struct EvolvedKernelParams {
    double tau = 0.0;
    double T = 0.0;
    double T_bar = 0.0;
    cplx k1{}, k2{};
    double k3 = 0.0;

    static EvolvedKernelParams make(const ReservoirParams& reservoir, double tau,
                                    PhasePoint point) {
        reservoir.validate();
        if (!(tau >= 0.0)) throw std::domain_error("EvolvedKernelParams: tau must be >= 0");
        EvolvedKernelParams k;
        k.tau = tau;
        k.T = -std::expm1(-2.0 * tau);
        k.T_bar = (1.0 + 2.0 * reservoir.n_bar) * k.T;
        const double u = std::exp(-tau);
        const cplx eta = point.beta();
        k.k1 = 2.0 * u * eta / k.T_bar;
        k.k2 = 2.0 * u * std::conj(eta) / k.T_bar;
        k.k3 = 2.0 * u * u / k.T_bar;
        return k;
    }
};

/// Thermal-equilibrium Wigner function, the long-time limit for every state:
/// W_th = exp(-(x^2+y^2)/(2 n_bar + 1)) / (pi (2 n_bar + 1)).
inline double wigner_thermal(double n_bar, PhasePoint point) {
    if (!(n_bar >= 0.0)) throw std::domain_error("wigner_thermal: n_bar must be >= 0");
    const double s = 2.0 * n_bar + 1.0;
    return std::exp(-(point.x * point.x + point.y * point.y) / s) / (M_PI * s);
}

/// Closed-form Wigner function of a four-component cat state and its thermal
/// evolution.  Construction precomputes the component amplitudes and the
/// normalization; evaluation is a 4x4 pair sum of Gaussian prefactors times a
/// terminating series of two-index Hermite products.  All methods are const
/// and safe to call concurrently.
class WignerEvaluator {
public:
    explicit WignerEvaluator(const CompassParams& params)
        : params_(params),
          alpha_(component_amplitudes(params)),
          aleph_(normalization(params)) {
        const int p = params_.p;
        log_cm_base_.resize(p + 1);
        for (int m = 0; m <= p; ++m)
            log_cm_base_[m] = 2.0 * log_factorial(p) - 2.0 * log_factorial(m) -
                              log_factorial(p - m);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                log_g_[i][j] = -0.5 * (std::norm(alpha_[i]) + std::norm(alpha_[j]));
        zero_kernel_ = make_kernel(ReservoirParams{0.0}, 0.0);
    }

    const CompassParams& params() const { return params_; }
    double norm() const { return aleph_; }

    /// W at tau = 0.
    double initial(PhasePoint pt) const { return value(zero_kernel_, pt); }

    /// W after dimensionless time tau in contact with the reservoir.
    double evolved(const ReservoirParams& reservoir, double tau, PhasePoint pt) const {
        return value(make_kernel(reservoir, tau), pt);
    }

    /// Fills a grid at fixed tau, data-parallel over rows.  Exploits the
    /// conjugate pairing of the (i,j) and (j,i) terms, so each value is real
    /// by construction; agreement with the checked point path is unit tested.
    WignerGrid grid(const ReservoirParams& reservoir, double tau, const GridSpec& spec,
                    unsigned threads = default_threads()) const {
        const TauKernel k = make_kernel(reservoir, tau);
        WignerGrid g = WignerGrid::make(spec);
        parallel_for(0, static_cast<std::size_t>(g.ny), threads, [&](std::size_t iy) {
            const double y = g.y(static_cast<int>(iy));
            for (int ix = 0; ix < g.nx; ++ix)
                g.at(ix, static_cast<int>(iy)) = fast_value(k, {g.x(ix), y});
        });
        return g;
    }

    // -- internal kernel ------------------------------------------------

    /// Point-independent pieces at fixed tau.  den = T_bar + e^{-2 tau} stays
    /// positive for all tau >= 0, which is what makes the tau -> 0 limit of
    /// the series regular.
    struct TauKernel {
        double u = 1.0;          // e^{-tau}
        double tb = 0.0;         // T_bar
        double den = 1.0;        // T_bar + u^2
        double tb_minus_u2 = -1.0;
        std::vector<double> cm;  // series coefficients, m = 0..p
    };

    TauKernel make_kernel(const ReservoirParams& reservoir, double tau) const {
        reservoir.validate();
        if (!(tau >= 0.0)) throw std::domain_error("wigner evolved: tau must be >= 0");
        TauKernel k;
        k.u = std::exp(-tau);
        k.tb = (1.0 + 2.0 * reservoir.n_bar) * (-std::expm1(-2.0 * tau));
        k.den = k.tb + k.u * k.u;
        k.tb_minus_u2 = k.tb - k.u * k.u;
        fill_cm(k);
        return k;
    }

    double value(const TauKernel& k, PhasePoint pt) const {
        CompensatedSum re, im;
        double scale = 0.0;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                const cplx t = pair_term(k, pt, i, j);
                re.add(t.real());
                im.add(t.imag());
                scale = std::max(scale, std::abs(t));
            }
        }
        const double raw = re.value();
        const double residue = std::abs(im.value());
        // Residue is judged against the largest pair term; sub-1e-12
        // leftovers in output units are ignored regardless.
        if (residue > 1e-9 * scale && residue > 1e-12 * M_PI * aleph_)
            throw numerics_error("wigner: imaginary residue above tolerance (cancellation failure)");
        if (!std::isfinite(raw)) throw numerics_error("wigner: non-finite value");
        return raw / (M_PI * aleph_);
    }

private:
    void fill_cm(TauKernel& k) const {
        const int p = params_.p;
        k.cm.assign(p + 1, 0.0);
        const double em1 = k.tb_minus_u2 / k.den;  // E - 1 of the series
        for (int m = 0; m <= p; ++m) {
            const int r = p - m;
            if (em1 == 0.0 && r > 0) continue;
            double lg = log_cm_base_[m] + (r > 0 ? r * std::log(std::abs(em1)) : 0.0);
            double sign = (em1 < 0.0 && (r & 1)) ? -1.0 : 1.0;
            k.cm[m] = sign * std::exp(lg);
        }
    }

    cplx pair_term(const TauKernel& k, PhasePoint pt, int i, int j) const {
        const cplx eta = pt.beta();
        const cplx etc = std::conj(eta);
        const cplx ai = alpha_[i];
        const cplx ajc = std::conj(alpha_[j]);
        const double inv_den = 1.0 / k.den;
        const cplx expo =
            (-4.0 * std::norm(eta) + 4.0 * k.u * (eta * ajc + etc * ai) +
             4.0 * k.tb * ai * ajc) *
                (0.5 * inv_den) -
            ai * ajc + log_g_[i][j];
        const cplx gj = cplx{0, 1} * (2.0 * k.u * etc + k.tb_minus_u2 * ajc) * inv_den;
        const cplx gi = cplx{0, -1} * (2.0 * k.u * eta + k.tb_minus_u2 * ai) * inv_den;
        thread_local std::vector<cplx> h1, h2;
        hermite_column(params_.p, params_.q, gj, cplx{0, 1} * ai, h1);
        hermite_column(params_.p, params_.q, gi, cplx{0, -1} * ajc, h2);
        CompensatedSum sre, sim;
        for (int m = 0; m <= params_.p; ++m) {
            const cplx t = k.cm[m] * h1[m] * h2[m];
            sre.add(t.real());
            sim.add(t.imag());
        }
        return std::exp(expo) * cplx{sre.value(), sim.value()} * inv_den;
    }

    /// Grid inner loop: diagonal pairs contribute |H|^2 sums, off-diagonal
    /// pairs twice their real part.  Pairs whose magnitude bound falls below
    /// 1e-60 of the normalization are skipped.
    double fast_value(const TauKernel& k, PhasePoint pt) const {
        const int p = params_.p, q = params_.q;
        const cplx eta = pt.beta();
        const cplx etc = std::conj(eta);
        const double inv_den = 1.0 / k.den;
        const double norm_eta = std::norm(eta);
        const double skip_ln = std::log(M_PI * aleph_) - 138.0;  // 1e-60 of output scale
        thread_local std::vector<cplx> h1, h2;
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) {
            for (int j = i; j < 4; ++j) {
                const cplx ai = alpha_[i];
                const cplx ajc = std::conj(alpha_[j]);
                const cplx expo =
                    (-4.0 * norm_eta + 4.0 * k.u * (eta * ajc + etc * ai) +
                     4.0 * k.tb * ai * ajc) *
                        (0.5 * inv_den) -
                    ai * ajc + log_g_[i][j];
                const cplx gj = cplx{0, 1} * (2.0 * k.u * etc + k.tb_minus_u2 * ajc) * inv_den;
                const cplx gi = cplx{0, -1} * (2.0 * k.u * eta + k.tb_minus_u2 * ai) * inv_den;
                if (p + q > 0 &&
                    expo.real() + series_log_bound(k, gj, gi, ai, ajc) < skip_ln)
                    continue;
                hermite_column(p, q, gj, cplx{0, 1} * ai, h1);
                if (i == j) {
                    double s = 0.0;
                    for (int m = 0; m <= p; ++m) s += k.cm[m] * std::norm(h1[m]);
                    acc += std::exp(expo.real()) * s * inv_den;
                } else {
                    hermite_column(p, q, gi, cplx{0, -1} * ajc, h2);
                    cplx s{};
                    for (int m = 0; m <= p; ++m) s += k.cm[m] * h1[m] * h2[m];
                    acc += 2.0 * (std::exp(expo) * s).real() * inv_den;
                }
            }
        }
        if (!std::isfinite(acc)) throw numerics_error("wigner: non-finite value");
        return acc / (M_PI * aleph_);
    }

    /// ln upper bound on |sum_m cm H H| using
    /// |H_{m,q}(x,y)| <= min(m,q)! 2^(m+q) max(1,|x|)^m max(1,|y|)^q.
    double series_log_bound(const TauKernel& k, cplx gj, cplx gi, cplx ai, cplx ajc) const {
        const int p = params_.p, q = params_.q;
        const double lgj = std::max(0.0, std::log(std::abs(gj)));
        const double lgi = std::max(0.0, std::log(std::abs(gi)));
        const double lai = std::max(0.0, std::log(std::abs(ai) + 1e-300));
        const double laj = std::max(0.0, std::log(std::abs(ajc) + 1e-300));
        const double qpart = q * (lai + laj) + 2.0 * (p + q) * M_LN2 +
                             2.0 * log_factorial(std::min(p, q));
        double best = -1e300;
        for (int m = 0; m <= p; ++m) {
            if (k.cm[m] == 0.0) continue;
            best = std::max(best, std::log(std::abs(k.cm[m])) + m * (lgj + lgi));
        }
        return best + qpart + std::log(static_cast<double>(p + 1));
    }

    CompassParams params_;
    std::array<cplx, 4> alpha_;
    double aleph_;
    std::vector<double> log_cm_base_;
    double log_g_[4][4];
    TauKernel zero_kernel_;
};

/// W at tau = 0 (convenience wrapper; construct a WignerEvaluator for
/// repeated evaluation).
inline double wigner_initial(const CompassParams& params, PhasePoint point) {
    return WignerEvaluator(params).initial(point);
}

/// W at dimensionless time tau; tau = 0 reproduces wigner_initial exactly.
inline double wigner_evolved(const CompassParams& params, const ReservoirParams& reservoir,
                             double tau, PhasePoint point) {
    return WignerEvaluator(params).evolved(reservoir, tau, point);
}

// ---- finite-difference derivatives ------------------------------------

/// Richardson-extrapolated central difference of a scalar field, steps h and
/// h/2.
template <typename F>
std::array<double, 2> fd_gradient(F&& w, PhasePoint pt, double h = 1e-3) {
    auto d = [&](double hh, int axis) {
        PhasePoint a = pt, b = pt;
        (axis == 0 ? a.x : a.y) += hh;
        (axis == 0 ? b.x : b.y) -= hh;
        return (w(a) - w(b)) / (2.0 * hh);
    };
    std::array<double, 2> g;
    for (int axis = 0; axis < 2; ++axis)
        g[axis] = (4.0 * d(h / 2, axis) - d(h, axis)) / 3.0;
    return g;
}

template <typename F>
double fd_laplacian(F&& w, PhasePoint pt, double h = 1e-3) {
    auto lap = [&](double hh) {
        const double c = w(pt);
        const double xp = w({pt.x + hh, pt.y});
        const double xm = w({pt.x - hh, pt.y});
        const double yp = w({pt.x, pt.y + hh});
        const double ym = w({pt.x, pt.y - hh});
        return (xp + xm + yp + ym - 4.0 * c) / (hh * hh);
    };
    return (4.0 * lap(h / 2) - lap(h)) / 3.0;
}

enum class DerivativeKind { gradient, laplacian };

/// Gradient of the evolved Wigner function at a point.
inline std::array<double, 2> wigner_gradient(const CompassParams& params,
                                             const ReservoirParams& reservoir, double tau,
                                             PhasePoint point, double h = 1e-3) {
    WignerEvaluator ev(params);
    const auto k = ev.make_kernel(reservoir, tau);
    return fd_gradient([&](PhasePoint p) { return ev.value(k, p); }, point, h);
}

inline double wigner_laplacian(const CompassParams& params, const ReservoirParams& reservoir,
                               double tau, PhasePoint point, double h = 1e-3) {
    WignerEvaluator ev(params);
    const auto k = ev.make_kernel(reservoir, tau);
    return fd_laplacian([&](PhasePoint p) { return ev.value(k, p); }, point, h);
}

// ---- direct quadrature of the thermal convolution ----------------------

/// Evolves a sampled Wigner function by direct quadrature of the Gaussian
/// convolution kernel (separable in x and y, so two matrix products).  This
/// is an independent cross-check of the closed-form series path.
inline WignerGrid propagate_convolution(const WignerGrid& initial, const ReservoirParams& reservoir,
                                        double tau, unsigned threads = default_threads()) {
    reservoir.validate();
    if (!(tau > 0.0)) throw std::domain_error("propagate_convolution: tau must be > 0");

    // Simpson weights along each input axis; the input must carry the mass.
    auto simpson = [](int n, double h) {
        std::vector<double> w(n, 1.0);
        for (int i = 1; i < n - 1; ++i) w[i] = (i & 1) ? 4.0 : 2.0;
        for (double& v : w) v *= h / 3.0;
        return w;
    };
    const std::vector<double> wx = simpson(initial.nx, initial.dx());
    const std::vector<double> wy = simpson(initial.ny, initial.dy());
    double mass = 0.0;
    for (int iy = 0; iy < initial.ny; ++iy)
        for (int ix = 0; ix < initial.nx; ++ix) mass += wx[ix] * wy[iy] * initial.at(ix, iy);
    if (std::abs(mass - 1.0) > 1e-3)
        throw coverage_error("propagate_convolution: input grid does not capture the state mass");

    const double u = std::exp(-tau);
    const double tb = (1.0 + 2.0 * reservoir.n_bar) * (-std::expm1(-2.0 * tau));
    const double inv_tb = 1.0 / tb;
    const double kn = 1.0 / std::sqrt(M_PI * tb);

    // Kx[out][in] includes the quadrature weight of the input node.
    auto kernel_matrix = [&](int n_out, int n_in, auto x_out, auto x_in,
                             const std::vector<double>& w_in) {
        std::vector<double> m(static_cast<std::size_t>(n_out) * n_in);
        for (int o = 0; o < n_out; ++o)
            for (int i = 0; i < n_in; ++i) {
                const double d = x_out(o) - u * x_in(i);
                m[static_cast<std::size_t>(o) * n_in + i] = kn * std::exp(-d * d * inv_tb) * w_in[i];
            }
        return m;
    };
    WignerGrid out = initial;
    const auto kx = kernel_matrix(out.nx, initial.nx, [&](int i) { return out.x(i); },
                                  [&](int i) { return initial.x(i); }, wx);
    const auto ky = kernel_matrix(out.ny, initial.ny, [&](int i) { return out.y(i); },
                                  [&](int i) { return initial.y(i); }, wy);

    // tmp[oy][ix] = sum_iy Ky[oy][iy] W[iy][ix]
    std::vector<double> tmp(static_cast<std::size_t>(out.ny) * initial.nx, 0.0);
    parallel_for(0, static_cast<std::size_t>(out.ny), threads, [&](std::size_t oy) {
        double* row = &tmp[oy * initial.nx];
        for (int iy = 0; iy < initial.ny; ++iy) {
            const double kv = ky[oy * initial.ny + iy];
            const double* src = &initial.values[static_cast<std::size_t>(iy) * initial.nx];
            for (int ix = 0; ix < initial.nx; ++ix) row[ix] += kv * src[ix];
        }
    });
    parallel_for(0, static_cast<std::size_t>(out.ny), threads, [&](std::size_t oy) {
        const double* row = &tmp[oy * initial.nx];
        for (int ox = 0; ox < out.nx; ++ox) {
            double s = 0.0;
            const double* krow = &kx[static_cast<std::size_t>(ox) * initial.nx];
            for (int ix = 0; ix < initial.nx; ++ix) s += krow[ix] * row[ix];
            out.at(ox, static_cast<int>(oy)) = s;
        }
    });
    return out;
}

}  // namespace compass
