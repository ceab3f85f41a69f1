#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "compass/special_functions.hpp"

namespace compass {

/// Recipe for the four-component cat family: coherent amplitude scale X0,
/// p photon additions followed by q photon subtractions applied to each
/// component.  p = q = 0 with large X0 is the plain compass state; X0 = 0
/// with p = q degenerates to the vacuum.
struct CompassParams {
    double X0 = 0.0;
    int p = 0;
    int q = 0;

    void validate() const {
        if (!(X0 >= 0.0)) throw std::invalid_argument("CompassParams: X0 must be >= 0");
        if (p < 0 || q < 0) throw std::invalid_argument("CompassParams: p, q must be >= 0");
        if (p > hermite_degree_cap || q > hermite_degree_cap)
            throw std::domain_error("CompassParams: p, q above degree cap 200");
    }
};

/// The four coherent amplitudes (X0, -X0, iX0, -iX0)/sqrt(2).
inline std::array<cplx, 4> component_amplitudes(const CompassParams& params) {
    params.validate();
    const double a = params.X0 / M_SQRT2;
    return {cplx{a, 0.0}, cplx{-a, 0.0}, cplx{0.0, a}, cplx{0.0, -a}};
}

/// Squared norm of the unnormalized four-component superposition, evaluated
/// as the closed 4x4 double sum over two-index Hermite products.  The sum is
/// analytically real; an imaginary residue above 1e-9 relative signals that
/// cancellation destroyed the result, and is reported as an error instead of
/// being silently dropped.
inline double normalization(const CompassParams& params) {
    params.validate();
    const auto alpha = component_amplitudes(params);
    const int p = params.p, q = params.q;

    // n-sum coefficients (-1)^n (p!)^2 / (n! ((p-n)!)^2), log-domain.
    std::vector<double> coeff(static_cast<std::size_t>(p) + 1);
    const double lp2 = 2.0 * log_factorial(p);
    for (int n = 0; n <= p; ++n) {
        double c = std::exp(lp2 - log_factorial(n) - 2.0 * log_factorial(p - n));
        coeff[n] = (n & 1) ? -c : c;
    }

    CompensatedSum re, im;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const cplx ai = alpha[i], aj = alpha[j];
            const double lg = -0.5 * (std::norm(ai) + std::norm(aj));
            const cplx pref = std::exp(lg + std::conj(ai) * aj);
            CompensatedSum sre, sim;
            for (int n = 0; n <= p; ++n) {
                const cplx h1 = bivariate_hermite(p - n, q, cplx{0, 1} * aj, cplx{0, 1} * std::conj(ai));
                const cplx h2 = bivariate_hermite(p - n, q, cplx{0, 1} * std::conj(ai), cplx{0, 1} * aj);
                const cplx t = coeff[n] * h1 * h2;
                sre.add(t.real());
                sim.add(t.imag());
            }
            const cplx term = pref * cplx{sre.value(), sim.value()};
            re.add(term.real());
            im.add(term.imag());
        }
    }
    double sign = ((p + q) & 1) ? -1.0 : 1.0;
    const double val = sign * re.value();
    const double residue = std::abs(im.value());
    if (!(val > 0.0) || !std::isfinite(val))
        throw numerics_error("normalization: non-positive or non-finite result (cancellation failure)");
    if (residue > 1e-9 * val)
        throw numerics_error("normalization: imaginary residue above tolerance (cancellation failure)");
    return val;
}

/// Number-basis amplitudes of a normalized state, with the truncation recorded.
struct FockVector {
    int cutoff = 0;
    std::vector<cplx> amplitudes;

    double norm_sq() const {
        double s = 0.0;
        for (const cplx& a : amplitudes) s += std::norm(a);
        return s;
    }
    /// Probability mass on the top ten basis states; the convergence guard.
    double tail_mass() const {
        double s = 0.0;
        for (int n = std::max(0, cutoff - 10); n < cutoff; ++n) s += std::norm(amplitudes[n]);
        return s;
    }
};

/// Default truncation: coherent mean photon number X0^2/2, shifted up by the
/// photon operations, plus an 8-sigma Poisson margin.
inline int default_cutoff(const CompassParams& params) {
    const double base = std::ceil(params.X0 * params.X0 / 2.0);
    const double c = base + params.p + params.q + 8.0 * std::sqrt(base + params.p) + 20.0;
    return static_cast<int>(std::ceil(c));
}

namespace detail {

inline std::vector<cplx> coherent_amplitudes(cplx alpha, int cutoff) {
    std::vector<cplx> v(cutoff);
    if (alpha == cplx{}) {
        v[0] = 1.0;
        return v;
    }
    const double la = std::log(std::abs(alpha));
    const double aa = std::arg(alpha);
    const double h = -0.5 * std::norm(alpha);
    for (int n = 0; n < cutoff; ++n) {
        const double lm = h + n * la - 0.5 * log_factorial(n);
        v[n] = std::exp(lm) * cplx{std::cos(n * aa), std::sin(n * aa)};
    }
    return v;
}

inline void apply_creation(std::vector<cplx>& v) {
    for (std::size_t n = v.size() - 1; n > 0; --n) v[n] = std::sqrt(static_cast<double>(n)) * v[n - 1];
    v[0] = 0.0;
}

inline void apply_annihilation(std::vector<cplx>& v) {
    for (std::size_t n = 0; n + 1 < v.size(); ++n) v[n] = std::sqrt(static_cast<double>(n + 1)) * v[n + 1];
    v.back() = 0.0;
}

}  // namespace detail

/// Builds the normalized four-component state in a truncated number basis:
/// p creation operators then q annihilation operators applied to each
/// coherent component, components summed, result normalized.
inline FockVector build_fock_state(const CompassParams& params, int cutoff) {
    params.validate();
    if (cutoff < 4) throw std::invalid_argument("build_fock_state: cutoff too small");
    std::vector<cplx> total(cutoff, cplx{});
    for (const cplx& a : component_amplitudes(params)) {
        auto v = detail::coherent_amplitudes(a, cutoff);
        for (int k = 0; k < params.p; ++k) detail::apply_creation(v);
        for (int k = 0; k < params.q; ++k) detail::apply_annihilation(v);
        for (int n = 0; n < cutoff; ++n) total[n] += v[n];
    }
    FockVector out{cutoff, std::move(total)};
    const double n2 = out.norm_sq();
    if (!(n2 > 0.0) || !std::isfinite(n2))
        throw numerics_error("build_fock_state: state vanished or overflowed in the truncated basis");
    const double inv = 1.0 / std::sqrt(n2);
    for (cplx& a : out.amplitudes) a *= inv;
    if (out.tail_mass() > 1e-10)
        throw cutoff_error("build_fock_state: tail mass above 1e-10, cutoff too small");
    return out;
}

/// Overlap |<C|state>|^2 with the p = q = 0 reference at the same X0.
inline double overlap_F(const CompassParams& params, int cutoff) {
    const FockVector s = build_fock_state(params, cutoff);
    const FockVector c = build_fock_state({params.X0, 0, 0}, cutoff);
    cplx ov{};
    for (int n = 0; n < cutoff; ++n) ov += std::conj(c.amplitudes[n]) * s.amplitudes[n];
    return std::norm(ov);
}

}  // namespace compass
