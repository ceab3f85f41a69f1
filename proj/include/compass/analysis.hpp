#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "compass/wigner.hpp"

namespace compass {

inline std::vector<double> simpson_weights(int n, double h) {
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("simpson_weights: need odd n >= 3");
    std::vector<double> w(n, h / 3.0);
    for (int i = 1; i < n - 1; ++i) w[i] *= (i & 1) ? 4.0 : 2.0;
    return w;
}

enum class Integrand { identity, abs, square };

/// Composite Simpson quadrature of f(W) over the lattice.
inline double integrate_2d(const WignerGrid& g, Integrand which) {
    const auto wx = simpson_weights(g.nx, g.dx());
    const auto wy = simpson_weights(g.ny, g.dy());
    double total = 0.0;
    for (int iy = 0; iy < g.ny; ++iy) {
        double row = 0.0;
        for (int ix = 0; ix < g.nx; ++ix) {
            const double v = g.at(ix, iy);
            row += wx[ix] * (which == Integrand::identity ? v
                             : which == Integrand::abs    ? std::abs(v)
                                                          : v * v);
        }
        total += wy[iy] * row;
    }
    return total;
}

/// Analysis window: covers the coherent lobes at radius X0 plus the spread
/// added by the photon operations, at a resolution that still resolves the
/// central interference tiles.
inline GridSpec default_grid(const CompassParams& params) {
    return {params.X0 + 2.0 * std::sqrt(static_cast<double>(params.p)) + 6.0, 601};
}

namespace detail {
inline void require_coverage(const WignerGrid& g, const char* who) {
    if (std::abs(integrate_2d(g, Integrand::identity) - 1.0) > 1e-3)
        throw coverage_error(std::string(who) + ": grid does not capture the state mass");
}
}  // namespace detail

/// Negative volume of the Wigner function, integral of |W| minus total mass.
/// Both integrals share the same Simpson weights, so a non-negative grid
/// gives exactly zero.
inline double negativity(const WignerEvaluator& ev, const ReservoirParams& reservoir, double tau,
                         const GridSpec& spec, unsigned threads = default_threads()) {
    const WignerGrid g = ev.grid(reservoir, tau, spec, threads);
    detail::require_coverage(g, "negativity");
    const auto wx = simpson_weights(g.nx, g.dx());
    const auto wy = simpson_weights(g.ny, g.dy());
    double delta = 0.0;
    for (int iy = 0; iy < g.ny; ++iy) {
        double row = 0.0;
        for (int ix = 0; ix < g.nx; ++ix) {
            const double v = g.at(ix, iy);
            row += wx[ix] * (std::abs(v) - v);
        }
        delta += wy[iy] * row;
    }
    return delta;
}

inline double negativity(const CompassParams& params, const ReservoirParams& reservoir,
                         double tau, const GridSpec& spec,
                         unsigned threads = default_threads()) {
    return negativity(WignerEvaluator(params), reservoir, tau, spec, threads);
}

/// Quadrature histogram along direction theta.
struct Tomogram {
    double theta = 0.0;
    std::vector<double> x_values;
    std::vector<double> r_values;

    double integral() const {
        const auto w = simpson_weights(static_cast<int>(x_values.size()),
                                       x_values[1] - x_values[0]);
        double s = 0.0;
        for (std::size_t i = 0; i < r_values.size(); ++i) s += w[i] * r_values[i];
        return s;
    }
    double mean() const {
        const auto w = simpson_weights(static_cast<int>(x_values.size()),
                                       x_values[1] - x_values[0]);
        double s = 0.0;
        for (std::size_t i = 0; i < r_values.size(); ++i) s += w[i] * x_values[i] * r_values[i];
        return s / integral();
    }
    double variance() const {
        const auto w = simpson_weights(static_cast<int>(x_values.size()),
                                       x_values[1] - x_values[0]);
        const double mu = mean();
        double s = 0.0;
        for (std::size_t i = 0; i < r_values.size(); ++i)
            s += w[i] * (x_values[i] - mu) * (x_values[i] - mu) * r_values[i];
        return s / integral();
    }
};

/// Projection of W onto the rotated quadrature x_theta: for each x_theta the
/// Wigner function is integrated along the orthogonal direction.  The
/// integration range must cover the support; the marginal is then normalized
/// to 1 within quadrature error.
inline Tomogram tomogram(const WignerEvaluator& ev, const ReservoirParams& reservoir, double tau,
                         double theta, double x_half_range, int n_points,
                         unsigned threads = default_threads(), bool check_coverage = true) {
    if (n_points < 3 || n_points % 2 == 0)
        throw std::invalid_argument("tomogram: n_points must be odd and >= 3");
    const auto k = ev.make_kernel(reservoir, tau);
    Tomogram t;
    t.theta = theta;
    t.x_values.resize(n_points);
    t.r_values.resize(n_points);
    const double dx = 2.0 * x_half_range / (n_points - 1);
    const int ny = n_points;
    const auto wy = simpson_weights(ny, 2.0 * x_half_range / (ny - 1));
    const double c = std::cos(theta), s = std::sin(theta);
    parallel_for(0, static_cast<std::size_t>(n_points), threads, [&](std::size_t i) {
        const double xt = -x_half_range + static_cast<double>(i) * dx;
        double acc = 0.0;
        for (int j = 0; j < ny; ++j) {
            const double yt = -x_half_range + j * (2.0 * x_half_range / (ny - 1));
            acc += wy[j] * ev.value(k, {xt * c - yt * s, xt * s + yt * c});
        }
        t.x_values[i] = xt;
        t.r_values[i] = acc;
    });
    if (check_coverage && std::abs(t.integral() - 1.0) > 1e-3)
        throw coverage_error("tomogram: integration range does not cover the support");
    return t;
}

/// Height of the evolved function at the origin relative to its initial
/// absolute height; +1 at tau = 0 for every even-parity state.
inline double central_ratio_d(const WignerEvaluator& ev, const ReservoirParams& reservoir,
                              double tau) {
    const double w0 = ev.initial({0, 0});
    if (std::abs(w0) < 1e-12)
        throw numerics_error("central_ratio_d: degenerate state, zero initial origin value");
    return ev.evolved(reservoir, tau, {0, 0}) / std::abs(w0);
}

inline double central_ratio_d(const CompassParams& params, const ReservoirParams& reservoir,
                              double tau) {
    return central_ratio_d(WignerEvaluator(params), reservoir, tau);
}

/// Linear entropy 1 - tr(rho^2) from the Wigner function: in the
/// normalized-dxdy convention tr(rho^2) = 2 pi Int W^2 dx dy, which
/// reproduces S = 0 for pure states and S = 2 nbar/(2 nbar + 1) at thermal
/// equilibrium exactly.
inline double linear_entropy(const WignerEvaluator& ev, const ReservoirParams& reservoir,
                             double tau, const GridSpec& spec,
                             unsigned threads = default_threads()) {
    const WignerGrid g = ev.grid(reservoir, tau, spec, threads);
    detail::require_coverage(g, "linear_entropy");
    return 1.0 - 2.0 * M_PI * integrate_2d(g, Integrand::square);
}

inline double linear_entropy(const CompassParams& params, const ReservoirParams& reservoir,
                             double tau, const GridSpec& spec,
                             unsigned threads = default_threads()) {
    return linear_entropy(WignerEvaluator(params), reservoir, tau, spec, threads);
}

/// Instantaneous entropy production of a pure state dropped into the bath:
/// Richardson-extrapolated one-sided difference S(h)/h with h = 1e-3, 5e-4.
/// A second extrapolation from the halved pair must agree within 1%,
/// otherwise the step sizes did not converge and an error is raised.
inline double entropy_rate_S0(const WignerEvaluator& ev, const ReservoirParams& reservoir,
                              const GridSpec& spec, unsigned threads = default_threads()) {
    const double s_init = linear_entropy(ev, reservoir, 0.0, spec, threads);
    if (std::abs(s_init) > 1e-4)
        throw numerics_error("entropy_rate_S0: initial state is not pure on this grid");
    const double h = 1e-3;
    const double e1 = linear_entropy(ev, reservoir, h, spec, threads) / h;
    const double e2 = linear_entropy(ev, reservoir, h / 2, spec, threads) / (h / 2);
    const double e3 = linear_entropy(ev, reservoir, h / 4, spec, threads) / (h / 4);
    const double r1 = 2.0 * e2 - e1;
    const double r2 = 2.0 * e3 - e2;
    if (std::abs(r1 - r2) > 0.01 * std::abs(r1))
        throw numerics_error("entropy_rate_S0: extrapolations differ by more than 1%");
    return r1;
}

inline double entropy_rate_S0(const CompassParams& params, const ReservoirParams& reservoir,
                              unsigned threads = default_threads()) {
    return entropy_rate_S0(WignerEvaluator(params), reservoir, default_grid(params), threads);
}

/// Percent change between two entropy rates.
inline double relative_change(double s0_a, double s0_b) {
    if (s0_a == 0.0) throw std::domain_error("relative_change: zero reference rate");
    return (s0_b - s0_a) / std::abs(s0_a) * 100.0;
}

/// Entropy along a time schedule, with the initial rate and the thermal
/// asymptote 2 nbar/(2 nbar + 1).
struct EntropyReport {
    std::vector<double> tau_values;
    std::vector<double> S_values;
    double S0 = 0.0;
    double S_inf = 0.0;
};

inline EntropyReport entropy_curve(const WignerEvaluator& ev, const ReservoirParams& reservoir,
                                   const std::vector<double>& taus, const GridSpec& spec,
                                   unsigned threads = default_threads(), bool with_rate = true) {
    EntropyReport rep;
    rep.tau_values = taus;
    rep.S_inf = 2.0 * reservoir.n_bar / (2.0 * reservoir.n_bar + 1.0);
    for (double tau : taus) rep.S_values.push_back(linear_entropy(ev, reservoir, tau, spec, threads));
    rep.S0 = with_rate ? entropy_rate_S0(ev, reservoir, spec, threads) : 0.0;
    return rep;
}

/// Wigner negativity along a time schedule.
struct NegativityReport {
    std::vector<double> tau_values;
    std::vector<double> delta_values;
};

inline NegativityReport negativity_curve(const WignerEvaluator& ev,
                                         const ReservoirParams& reservoir,
                                         const std::vector<double>& taus, const GridSpec& spec,
                                         unsigned threads = default_threads()) {
    NegativityReport rep;
    rep.tau_values = taus;
    for (double tau : taus)
        rep.delta_values.push_back(negativity(ev, reservoir, tau, spec, threads));
    return rep;
}

}  // namespace compass
