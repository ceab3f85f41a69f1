#include <cmath>
#include <complex>

#include "compass/wigner.hpp"
#include "doctest.h"

using namespace compass;

namespace {
double simpson_mass(const WignerGrid& g) {
    auto w = [](int i, int n) { return (i == 0 || i == n - 1) ? 1.0 : ((i & 1) ? 4.0 : 2.0); };
    double s = 0.0;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            s += w(ix, g.nx) * w(iy, g.ny) * g.at(ix, iy);
    return s * g.dx() * g.dy() / 9.0;
}
}  // namespace

TEST_CASE("origin values: vacuum peak and the even-parity anchor") {
    CHECK(wigner_initial({0.0, 0, 0}, {0, 0}) == doctest::Approx(1.0 / M_PI).epsilon(1e-12));

    // p = q preserves even parity, so the origin stays at the vacuum peak
    for (const CompassParams params : {CompassParams{3.0, 0, 0}, CompassParams{1.5, 14, 14},
                                       CompassParams{0.5, 14, 14}, CompassParams{1.5, 20, 20}}) {
        CHECK(wigner_initial(params, {0, 0}) == doctest::Approx(1.0 / M_PI).epsilon(1e-8));
    }
}

TEST_CASE("wigner_thermal closed form") {
    CHECK(wigner_thermal(0.0, {0, 0}) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
    CHECK(wigner_thermal(0.5, {0, 0}) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
    CHECK(wigner_thermal(0.5, {1, -2}) ==
          doctest::Approx(std::exp(-5.0 / 2.0) / (2.0 * M_PI)).epsilon(1e-14));

    for (double nbar : {0.0, 0.5, 1.0, 2.0}) {
        GridSpec spec{6.0 + 4.0 * nbar, 401};
        WignerGrid g = WignerGrid::make(spec);
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                g.at(ix, iy) = wigner_thermal(nbar, {g.x(ix), g.y(iy)});
        CHECK(simpson_mass(g) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("evolved kernel parameters") {
    const ReservoirParams res{0.5};
    const EvolvedKernelParams k = EvolvedKernelParams::make(res, 0.12, {0.3, -0.4});
    CHECK(k.T == doctest::Approx(1.0 - std::exp(-0.24)).epsilon(1e-14));
    CHECK(k.T_bar == doctest::Approx(2.0 * k.T).epsilon(1e-14));
    CHECK(k.T >= 0.0);
    CHECK(k.T < 1.0);
    CHECK(k.k3 > 0.0);
    CHECK(k.k3 == doctest::Approx(2.0 * std::exp(-0.24) / k.T_bar).epsilon(1e-12));
    CHECK_THROWS_AS(EvolvedKernelParams::make(res, -0.1, {0, 0}), std::domain_error);
}

TEST_CASE("short-time limit reproduces the initial function") {
    const WignerEvaluator ev({3.0, 0, 0});
    const ReservoirParams res{0.5};
    for (const PhasePoint pt : {PhasePoint{0, 0}, PhasePoint{0.7, -0.3}, PhasePoint{2.9, 0.1}}) {
        CHECK(ev.evolved(res, 1e-8, pt) == doctest::Approx(ev.initial(pt)).epsilon(1e-5));
        CHECK(ev.evolved(res, 0.0, pt) == ev.initial(pt));
    }
    const WignerEvaluator ev2({1.5, 3, 2});
    for (const PhasePoint pt : {PhasePoint{0.2, 0.4}, PhasePoint{-1.1, 0.9}}) {
        const double w0 = ev2.initial(pt);
        CHECK(ev2.evolved(res, 1e-8, pt) == doctest::Approx(w0).epsilon(1e-5));
    }
    CHECK_THROWS_AS(ev.evolved(res, -1e-3, {0, 0}), std::domain_error);
}

TEST_CASE("long-time limit is the thermal Gaussian") {
    const WignerEvaluator ev({3.0, 0, 0});
    const ReservoirParams res{0.5};
    CHECK(ev.evolved(res, 10.0, {0, 0}) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-5));

    const WignerGrid g = ev.grid(res, 10.0, {4.0, 81});
    double sup = 0.0;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            sup = std::max(sup, std::abs(g.at(ix, iy) - wigner_thermal(0.5, {g.x(ix), g.y(iy)})));
    CHECK(sup <= 1e-5);
}

TEST_CASE("grid fill matches the checked point path and stays normalized") {
    const CompassParams params{1.5, 2, 1};
    const WignerEvaluator ev(params);
    const ReservoirParams res{0.5};
    for (double tau : {0.0, 0.07}) {
        const WignerGrid g = ev.grid(res, tau, {9.0, 301});
        const auto k = ev.make_kernel(res, tau);
        for (int iy = 37; iy < g.ny; iy += 61) {
            for (int ix = 11; ix < g.nx; ix += 47) {
                const double pv = ev.value(k, {g.x(ix), g.y(iy)});
                CHECK(g.at(ix, iy) == doctest::Approx(pv).epsilon(1e-12));
            }
        }
    }

    for (const CompassParams p :
         {CompassParams{3.0, 0, 0}, CompassParams{1.5, 14, 14}, CompassParams{0.0, 0, 0}}) {
        const WignerEvaluator e(p);
        const GridSpec spec{p.X0 + 2.0 * std::sqrt(p.p) + 6.0, 601};
        for (double tau : {0.0, 0.12}) {
            CHECK(simpson_mass(e.grid(res, tau, spec)) == doctest::Approx(1.0).epsilon(5e-4));
        }
    }
}

TEST_CASE("four-fold rotational symmetry") {
    const ReservoirParams res{0.5};
    for (const CompassParams params : {CompassParams{3.0, 0, 0}, CompassParams{1.5, 14, 14}}) {
        const WignerEvaluator ev(params);
        for (double tau : {0.0, 0.06}) {
            const auto k = ev.make_kernel(res, tau);
            for (const PhasePoint pt :
                 {PhasePoint{0.37, 0.11}, PhasePoint{1.9, -0.6}, PhasePoint{-2.2, 2.2}}) {
                const double a = ev.value(k, pt);
                const double b = ev.value(k, {-pt.y, pt.x});
                CHECK(std::abs(a - b) <= 1e-9);
            }
        }
    }
}

TEST_CASE("finite-difference derivatives against closed forms") {
    const auto grad_vac = wigner_gradient({0.0, 0, 0}, {0.0}, 0.0, {0, 0});
    CHECK(std::abs(grad_vac[0]) < 1e-10);
    CHECK(std::abs(grad_vac[1]) < 1e-10);

    // thermal Gaussian: laplacian at origin is -4 W(0,0)/(2 nbar + 1)
    for (double nbar : {0.0, 0.5, 1.5}) {
        auto wth = [nbar](PhasePoint pt) { return wigner_thermal(nbar, pt); };
        const double lap = fd_laplacian(wth, {0, 0});
        const double want = -4.0 * wigner_thermal(nbar, {0, 0}) / (2.0 * nbar + 1.0);
        CHECK(lap == doctest::Approx(want).epsilon(1e-6));
    }

    const auto grad_c = wigner_gradient({3.0, 0, 0}, {0.5}, 0.0, {0, 0});
    CHECK(std::abs(grad_c[0]) < 1e-9);
    CHECK(std::abs(grad_c[1]) < 1e-9);
}

TEST_CASE("direct convolution quadrature agrees with the closed forms") {
    const ReservoirParams res{0.5};

    // vacuum in, broadened Gaussian out: per-axis variance (1 + 2 nbar (1 - e^{-2 tau}))/2
    {
        const WignerEvaluator vac({0.0, 0, 0});
        const WignerGrid g0 = vac.grid(res, 0.0, {8.0, 401});
        const WignerGrid g1 = propagate_convolution(g0, res, 1.0);
        const double var = (1.0 + 2.0 * res.n_bar * (1.0 - std::exp(-2.0))) / 2.0;
        double worst = 0.0;
        for (int iy = 0; iy < g1.ny; ++iy)
            for (int ix = 0; ix < g1.nx; ++ix) {
                const double r2 = g1.x(ix) * g1.x(ix) + g1.y(iy) * g1.y(iy);
                const double want = std::exp(-r2 / (2.0 * var)) / (2.0 * M_PI * var);
                worst = std::max(worst, std::abs(g1.at(ix, iy) - want));
            }
        CHECK(worst <= 1e-5);
    }

    // tau -> 0+: the smallest tau whose kernel the lattice still resolves
    // (width ~ 3 dx).  Quadrature error stays at the 1e-4 level and the
    // output drifts from the input only by the genuine evolution over tau.
    {
        const WignerEvaluator ev({1.5, 1, 1});
        const WignerGrid g0 = ev.grid(res, 0.0, {9.0, 601});
        const double tau = 4e-3;
        const WignerGrid g1 = propagate_convolution(g0, res, tau);
        const WignerGrid ga = ev.grid(res, tau, {9.0, 601});
        double vs_series = 0.0, vs_input = 0.0;
        for (std::size_t i = 0; i < g0.values.size(); ++i) {
            vs_series = std::max(vs_series, std::abs(ga.values[i] - g1.values[i]));
            vs_input = std::max(vs_input, std::abs(g0.values[i] - g1.values[i]));
        }
        CHECK(vs_series <= 1e-4);
        CHECK(vs_input <= 0.05);
    }

    // two independent evaluations of the evolved function
    {
        const WignerEvaluator ev({3.0, 0, 0});
        const WignerGrid g0 = ev.grid(res, 0.0, {9.0, 601});
        const WignerGrid g1 = propagate_convolution(g0, res, 0.06);
        const WignerGrid ga = ev.grid(res, 0.06, {9.0, 601});
        double worst = 0.0;
        for (std::size_t i = 0; i < ga.values.size(); ++i)
            worst = std::max(worst, std::abs(ga.values[i] - g1.values[i]));
        CHECK(worst <= 1e-4);
    }

    CHECK_THROWS_AS(propagate_convolution(WignerGrid::make({2.0, 51}), res, 0.1), coverage_error);
}
