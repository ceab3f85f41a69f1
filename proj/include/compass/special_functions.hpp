#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "compass/errors.hpp"

namespace compass {

using cplx = std::complex<double>;

/// Largest polynomial degree accepted by bivariate_hermite.  Beyond this the
/// factorial-weighted coefficients exceed what double precision can balance.
inline constexpr int hermite_degree_cap = 200;

/// ln(n!) via lgamma, exact-integer path for small n.
inline double log_factorial(int n) {
    if (n < 0) throw std::domain_error("log_factorial: negative argument");
    static const double small[] = {
        0.0,
        0.0,
        0.6931471805599453,
        1.791759469228055,
        3.1780538303479458,
        4.787491742782046,
        6.579251212010101,
        8.525161361065415,
        10.60460290274525,
        12.801827480081469};
    if (n < 10) return small[n];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

/// Neumaier (improved Kahan) accumulator.  Unlike plain Kahan summation it
/// stays exact when a large term arrives after the running sum has grown.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Compensated sum of complex terms; real and imaginary parts tracked
/// separately.
inline cplx compensated_sum(std::span<const cplx> terms) {
    CompensatedSum re, im;
    for (const cplx& t : terms) {
        re.add(t.real());
        im.add(t.imag());
    }
    return {re.value(), im.value()};
}

/// One multiplicative term held as log-magnitude plus phase, so that
/// factorial-scale coefficients can be combined without overflow and only
/// exponentiated once per term.
struct LogComplexTerm {
    double log_magnitude = 0.0;
    double phase = 0.0;

    LogComplexTerm operator*(const LogComplexTerm& o) const {
        return {log_magnitude + o.log_magnitude, phase + o.phase};
    }
    cplx value() const {
        const double m = std::exp(log_magnitude);
        return {m * std::cos(phase), m * std::sin(phase)};
    }
    static LogComplexTerm from(cplx z) {
        return {std::log(std::abs(z)), std::arg(z)};
    }
};

/// Two-index Hermite polynomial
///   H_{m,n}(x,y) = m! n! sum_k (-1)^k x^(m-k) y^(n-k) / (k!(m-k)!(n-k)!),
/// the finite sum obtained by expanding the generating function
/// exp(-st + sx + ty).  Coefficients are assembled in the log domain and the
/// terms accumulated with compensated summation; the alternating factorial
/// weights reach ~1e37 by degree 20.
inline cplx bivariate_hermite(int m, int n, cplx x, cplx y) {
    if (m < 0 || n < 0) throw std::domain_error("bivariate_hermite: negative degree");
    if (m > hermite_degree_cap || n > hermite_degree_cap)
        throw std::domain_error("bivariate_hermite: degree above cap 200");
    if (m == 0 && n == 0) return {1.0, 0.0};

    const double lx = std::log(std::abs(x));  // -inf when x == 0 is fine below
    const double ly = std::log(std::abs(y));
    const double lmn = log_factorial(m) + log_factorial(n);
    const int kmax = std::min(m, n);
    const bool real_args = (x.imag() == 0.0 && y.imag() == 0.0);
    const double ax = real_args ? 0.0 : std::arg(x);
    const double ay = real_args ? 0.0 : std::arg(y);

    // Additions below are grouped so that swapping (m,x) <-> (n,y) performs
    // bit-identical arithmetic: the index symmetry of the polynomial then
    // holds exactly, not merely to rounding.
    CompensatedSum re, im;
    for (int k = 0; k <= kmax; ++k) {
        const int mk = m - k;
        const int nk = n - k;
        if ((mk > 0 && x == cplx{}) || (nk > 0 && y == cplx{})) continue;
        const double lm = (lmn - log_factorial(k)) -
                          (log_factorial(mk) + log_factorial(nk)) +
                          ((mk > 0 ? mk * lx : 0.0) + (nk > 0 ? nk * ly : 0.0));
        if (real_args) {
            int neg = k;
            if (x.real() < 0.0) neg += mk;
            if (y.real() < 0.0) neg += nk;
            re.add((neg & 1 ? -1.0 : 1.0) * std::exp(lm));
        } else {
            const double ph = (mk * ax + nk * ay) + (k & 1 ? M_PI : 0.0);
            const cplx v = LogComplexTerm{lm, ph}.value();
            re.add(v.real());
            im.add(v.imag());
        }
    }
    return {re.value(), real_args ? 0.0 : im.value()};
}

/// Fills h[m] = H_{m,q}(x,y) for m = 0..p via the recurrence
///   H_{m+1,l} = x H_{m,l} - l H_{m,l-1},   H_{0,l} = y^l,
/// which costs O(p q) per point and avoids per-term exp calls in grid fills.
/// Agrees with bivariate_hermite (unit tested) and is templated on the scalar
/// so a wider type can be substituted if a parameter regime ever demands it.
template <typename Scalar = double>
void hermite_column(int p, int q, std::complex<Scalar> x, std::complex<Scalar> y,
                    std::vector<std::complex<Scalar>>& h) {
    using C = std::complex<Scalar>;
    h.assign(static_cast<std::size_t>(p) + 1, C{});
    thread_local std::vector<C> prev;
    prev.assign(static_cast<std::size_t>(p) + 1, C{});

    // l = 0 column: H_{m,0} = x^m
    h[0] = C{Scalar(1), Scalar(0)};
    for (int m = 0; m < p; ++m) h[m + 1] = x * h[m];
    for (int l = 1; l <= q; ++l) {
        std::swap(prev, h);
        h[0] = y * prev[0];
        for (int m = 0; m < p; ++m) h[m + 1] = x * h[m] - Scalar(l) * prev[m];
    }
}

}  // namespace compass
