#include <cmath>

#include "compass/analysis.hpp"
#include "compass/lindblad.hpp"
#include "doctest.h"

using namespace compass;

namespace {
WignerGrid fill(const std::function<double(PhasePoint)>& f, const GridSpec& spec) {
    WignerGrid g = WignerGrid::make(spec);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) g.at(ix, iy) = f({g.x(ix), g.y(iy)});
    return g;
}
}  // namespace

TEST_CASE("integrate_2d closed forms") {
    const WignerGrid vac = fill([](PhasePoint p) { return wigner_thermal(0.0, p); }, {7.0, 401});
    CHECK(integrate_2d(vac, Integrand::identity) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(integrate_2d(vac, Integrand::square) ==
          doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-6));

    const WignerGrid th = fill([](PhasePoint p) { return wigner_thermal(0.5, p); }, {9.0, 401});
    CHECK(integrate_2d(th, Integrand::square) == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-6));
    CHECK(integrate_2d(th, Integrand::abs) == doctest::Approx(1.0).epsilon(1e-6));

    WignerGrid even = vac;
    even.nx = 400;  // even point count defeats the Simpson weights
    CHECK_THROWS_AS(integrate_2d(even, Integrand::identity), std::invalid_argument);
}

TEST_CASE("negativity: zero for non-negative functions, saturating for the cross state") {
    const ReservoirParams res{0.5};

    // a coherent state (vacuum here) has delta = 0 identically
    CHECK(negativity(CompassParams{0.0, 0, 0}, res, 0.0, {7.0, 401}) == 0.0);

    // thermal endpoint is a Gaussian: no negativity left
    const WignerEvaluator ev3({3.0, 0, 0});
    CHECK(negativity(ev3, res, 10.0, default_grid({3.0, 0, 0})) <= 1e-3);

    // negativity grows with the amplitude and flattens out: measured curve
    // 1.265 (X0=3), 1.635 (X0=5), 1.669 (X0=6) — the plateau starts near 6
    const double d3 = negativity(ev3, res, 0.0, default_grid({3.0, 0, 0}));
    const double d5 = negativity(CompassParams{5.0, 0, 0}, res, 0.0, default_grid({5.0, 0, 0}));
    const double d6 = negativity(CompassParams{6.0, 0, 0}, res, 0.0, default_grid({6.0, 0, 0}));
    CHECK(d3 == doctest::Approx(1.2653).epsilon(0.01));
    CHECK(d5 > d3);
    CHECK(d6 > d5);
    CHECK((d6 - d5) / d5 < 0.05);

    CHECK_THROWS_AS(negativity(ev3, res, 0.0, GridSpec{2.0, 101}), coverage_error);
}

TEST_CASE("tomogram: marginals, rotation covariance, thermal width") {
    const CompassParams params{3.0, 0, 0};
    const WignerEvaluator ev(params);
    const ReservoirParams res{0.5};
    const double L = 9.0;
    const int n = 361;

    // theta = 0 equals the x-marginal of the sampled grid, same quadrature
    const Tomogram t0 = tomogram(ev, res, 0.0, 0.0, L, n);
    const WignerGrid g = ev.grid(res, 0.0, {L, n});
    const auto wy = simpson_weights(n, g.dy());
    for (int ix = 0; ix < n; ix += 30) {
        double marginal = 0.0;
        for (int iy = 0; iy < n; ++iy) marginal += wy[iy] * g.at(ix, iy);
        CHECK(t0.r_values[ix] == doctest::Approx(marginal).epsilon(1e-6));
    }
    CHECK(t0.integral() == doctest::Approx(1.0).epsilon(1e-3));
    for (double r : t0.r_values) CHECK(r >= -1e-9);

    // theta = pi/2 equals the y-marginal
    const Tomogram t90 = tomogram(ev, res, 0.0, M_PI_2, L, n);
    const auto wx = simpson_weights(n, g.dx());
    for (int iy = 0; iy < n; iy += 45) {
        double marginal = 0.0;
        for (int ix = 0; ix < n; ++ix) marginal += wx[ix] * g.at(ix, iy);
        CHECK(t90.r_values[iy] == doctest::Approx(marginal).epsilon(1e-6));
    }

    // four-fold symmetry: quarter turn leaves the histogram unchanged
    const Tomogram tq = tomogram(ev, res, 0.0, 0.35, L, n);
    const Tomogram tq2 = tomogram(ev, res, 0.0, 0.35 + M_PI_2, L, n);
    for (int i = 0; i < n; ++i) CHECK(std::abs(tq.r_values[i] - tq2.r_values[i]) <= 1e-8);

    // diagonal direction sees a different profile at tau = 0
    const Tomogram td = tomogram(ev, res, 0.0, M_PI / 4, L, n);
    double maxdiff = 0.0;
    for (int i = 0; i < n; ++i) maxdiff = std::max(maxdiff, std::abs(td.r_values[i] - t0.r_values[i]));
    CHECK(maxdiff > 0.05);

    // thermal endpoint: Gaussian with variance (2 nbar + 1)/2
    const Tomogram tth = tomogram(ev, res, 10.0, 0.0, L, n);
    CHECK(tth.variance() == doctest::Approx((2.0 * res.n_bar + 1.0) / 2.0).epsilon(0.01));
    const double peak = 1.0 / std::sqrt(2.0 * M_PI * tth.variance());
    CHECK(tth.r_values[n / 2] == doctest::Approx(peak).epsilon(0.01));
}

TEST_CASE("central peak ratio") {
    const ReservoirParams res{0.5};
    for (const CompassParams params : {CompassParams{3.0, 0, 0}, CompassParams{1.5, 14, 14}}) {
        CHECK(central_ratio_d(params, res, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
    // larger amplitude decays faster at short times
    const double d3 = central_ratio_d(CompassParams{3.0, 0, 0}, res, 0.05);
    const double d5 = central_ratio_d(CompassParams{5.0, 0, 0}, res, 0.05);
    CHECK(d5 < d3);
    CHECK(d3 < 1.0);
}

TEST_CASE("linear entropy anchors and the density-matrix route") {
    const CompassParams params{3.0, 0, 0};
    const WignerEvaluator ev(params);
    const ReservoirParams res{0.5};
    const GridSpec spec = default_grid(params);

    CHECK(std::abs(linear_entropy(ev, res, 0.0, spec)) <= 1e-4);
    CHECK(linear_entropy(ev, res, 10.0, spec) == doctest::Approx(0.5).epsilon(2e-3));

    const FockDensityMatrix rho0 = FockDensityMatrix::pure(build_fock_state(params, 70));
    for (double tau : {0.06, 0.12}) {
        const double s_wigner = linear_entropy(ev, res, tau, spec);
        const double s_oracle = 1.0 - purity(evolve(rho0, res, tau));
        CHECK(std::abs(s_wigner - s_oracle) <= 1e-4);
    }
}

TEST_CASE("entropy rate: reference value and relative change") {
    const ReservoirParams res{0.5};
    const double s0 = entropy_rate_S0(CompassParams{3.0, 0, 0}, res);
    CHECK(s0 == doctest::Approx(38.945).epsilon(0.02));

    CHECK(relative_change(38.945, 101.999) == doctest::Approx(161.90).epsilon(1e-3));
    CHECK(relative_change(112.563, 79.784) == doctest::Approx(-29.12).epsilon(1e-3));
    CHECK(relative_change(7.7, 7.7) == 0.0);
    CHECK_THROWS_AS(relative_change(0.0, 1.0), std::domain_error);
}

TEST_CASE("curve reports") {
    const ReservoirParams res{0.5};
    const WignerEvaluator ev({3.0, 0, 0});
    const GridSpec spec = default_grid({3.0, 0, 0});

    const EntropyReport er = entropy_curve(ev, res, {0.0, 0.02, 0.05, 0.1}, spec);
    CHECK(er.S_inf == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(er.S_values.front()) <= 1e-6);
    for (std::size_t i = 1; i < er.S_values.size(); ++i)
        CHECK(er.S_values[i] >= er.S_values[i - 1] - 1e-6);

    const NegativityReport nr = negativity_curve(ev, res, {0.0, 0.05, 0.2, 1.0}, spec);
    double prev = 1e300;
    for (double d : nr.delta_values) {
        CHECK(d >= 0.0);
        CHECK(d <= prev + 1e-6);
        prev = d;
    }
}
