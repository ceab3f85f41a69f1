#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "compass/errors.hpp"

namespace compass {

/// A point of the position-momentum plane.  The associated complex
/// coordinate is beta = (x + iy)/sqrt(2).
struct PhasePoint {
    double x = 0.0;
    double y = 0.0;

    std::complex<double> beta() const { return {x / M_SQRT2, y / M_SQRT2}; }
};

/// Heat-bath description: mean thermal photon number.  Time is dimensionless
/// (tau = omega t with the decay rate folded in), so nothing else is needed.
struct ReservoirParams {
    double n_bar = 0.0;

    void validate() const {
        if (!(n_bar >= 0.0)) throw std::invalid_argument("ReservoirParams: n_bar must be >= 0");
    }
};

/// Square sampling window [-L, L]^2 with n points per axis (n odd so Simpson
/// weights apply).
struct GridSpec {
    double L = 8.0;
    int n = 601;

    void validate() const {
        if (!(L > 0.0)) throw std::invalid_argument("GridSpec: L must be > 0");
        if (n < 3 || n % 2 == 0) throw std::invalid_argument("GridSpec: n must be odd and >= 3");
    }
};

/// Sampled Wigner function on a rectangular lattice, row-major by y then x.
/// Values are in the convention where the function integrates to 1 over
/// dx dy (vacuum peak 1/pi); the tag records this so serialized grids are
/// self-describing.
struct WignerGrid {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    int nx = 0, ny = 0;
    std::vector<double> values;  // values[iy * nx + ix]
    static constexpr const char* convention_tag = "normalized-dxdy";

    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dy() const { return (y_max - y_min) / (ny - 1); }
    double x(int ix) const { return x_min + ix * dx(); }
    double y(int iy) const { return y_min + iy * dy(); }
    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * nx + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * nx + ix]; }

    static WignerGrid make(const GridSpec& spec) {
        spec.validate();
        WignerGrid g;
        g.x_min = g.y_min = -spec.L;
        g.x_max = g.y_max = spec.L;
        g.nx = g.ny = spec.n;
        g.values.assign(static_cast<std::size_t>(spec.n) * spec.n, 0.0);
        return g;
    }
};

}  // namespace compass
