#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "compass/analysis.hpp"
#include "compass/wigner.hpp"

namespace compass {

/// Patch quantities (volume and its rate) are reported on the scale where
/// the Wigner amplitude carries unit mass over d^2 beta, i.e. twice the
/// normalized-dxdy values; areas and rate ratios are scale-free.
inline constexpr double patch_amplitude_scale = 2.0;

using WignerFn = std::function<double(PhasePoint)>;

/// Closed polyline along a zero level line, counterclockwise.
struct Contour {
    std::vector<PhasePoint> points;  // first point repeated at the end when closed
    bool closed = false;

    double signed_area() const {
        double a = 0.0;
        for (std::size_t i = 0; i + 1 < points.size(); ++i)
            a += points[i].x * points[i + 1].y - points[i + 1].x * points[i].y;
        return 0.5 * a;
    }
    double perimeter() const {
        double l = 0.0;
        for (std::size_t i = 0; i + 1 < points.size(); ++i)
            l += std::hypot(points[i + 1].x - points[i].x, points[i + 1].y - points[i].y);
        return l;
    }
    bool encloses(PhasePoint p) const {  // even-odd crossing rule
        bool in = false;
        for (std::size_t i = 0; i + 1 < points.size(); ++i) {
            const PhasePoint &a = points[i], &b = points[i + 1];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double xc = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if (xc > p.x) in = !in;
            }
        }
        return in;
    }
};

struct Roi {
    double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
};

/// One row of the patch table.
struct PatchMetrics {
    double a0 = 0.0;        // initial patch area
    double v0 = 0.0;        // Wigner volume over the patch
    double vdot0 = 0.0;     // instantaneous volume rate
    double vdot_rel = 0.0;  // vdot0 / v0
    double adot0 = 0.0;     // instantaneous area rate
    char sign = '+';
};

namespace detail {

/// Bisects w along the segment [a, b] (where w changes sign) down to
/// |w| <= 1e-10 at the returned point.
inline PhasePoint bisect_zero(const WignerFn& w, PhasePoint a, PhasePoint b) {
    double wa = w(a);
    if (wa == 0.0) return a;
    for (int it = 0; it < 80; ++it) {
        const PhasePoint m{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        const double wm = w(m);
        if (std::abs(wm) <= 1e-10 || (std::abs(a.x - b.x) < 1e-14 && std::abs(a.y - b.y) < 1e-14))
            return m;
        if ((wm > 0) == (wa > 0)) {
            a = m;
            wa = wm;
        } else {
            b = m;
        }
    }
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

}  // namespace detail

/// Zero level lines of the sampled function inside the region of interest:
/// marching-squares cell classification on the grid, each edge crossing
/// refined by bisection on the supplied analytic evaluator, crossings chained
/// into polylines.  Closed loops come back counterclockwise; chains that run
/// into the region boundary come back with closed = false.
inline std::vector<Contour> extract_zero_contours(const WignerGrid& grid, const Roi& roi,
                                                  const WignerFn& w) {
    // index range of the roi within the grid
    const int ix0 = std::max(0, static_cast<int>(std::ceil((roi.x0 - grid.x_min) / grid.dx())));
    const int ix1 = std::min(grid.nx - 1, static_cast<int>(std::floor((roi.x1 - grid.x_min) / grid.dx())));
    const int iy0 = std::max(0, static_cast<int>(std::ceil((roi.y0 - grid.y_min) / grid.dy())));
    const int iy1 = std::min(grid.ny - 1, static_cast<int>(std::floor((roi.y1 - grid.y_min) / grid.dy())));
    if (ix1 - ix0 < 2 || iy1 - iy0 < 2)
        throw coverage_error("extract_zero_contours: region of interest smaller than grid cells");

    // Edge key: horizontal edges (cell corner (i,j) to (i+1,j)) get id 2*(j*nx+i),
    // vertical edges (corner (i,j) to (i,j+1)) get id 2*(j*nx+i)+1.
    const auto hkey = [&](int i, int j) { return 2 * (static_cast<long>(j) * grid.nx + i); };
    const auto vkey = [&](int i, int j) { return 2 * (static_cast<long>(j) * grid.nx + i) + 1; };

    std::map<long, PhasePoint> crossing;
    const auto crossing_point = [&](long key, PhasePoint a, PhasePoint b) {
        auto it = crossing.find(key);
        if (it != crossing.end()) return it->second;
        const PhasePoint p = detail::bisect_zero(w, a, b);
        crossing.emplace(key, p);
        return p;
    };

    // Per cell, collect the pairs of crossed edges (segments of the level line).
    std::map<long, std::vector<long>> links;  // edge key -> adjacent edge keys
    const auto connect = [&](long a, long b) {
        links[a].push_back(b);
        links[b].push_back(a);
    };
    for (int j = iy0; j < iy1; ++j) {
        for (int i = ix0; i < ix1; ++i) {
            const double v00 = grid.at(i, j), v10 = grid.at(i + 1, j);
            const double v01 = grid.at(i, j + 1), v11 = grid.at(i + 1, j + 1);
            int c = 0;
            if (v00 > 0) c |= 1;
            if (v10 > 0) c |= 2;
            if (v11 > 0) c |= 4;
            if (v01 > 0) c |= 8;
            if (c == 0 || c == 15) continue;
            const long bottom = hkey(i, j), top = hkey(i, j + 1);
            const long left = vkey(i, j), right = vkey(i + 1, j);
            switch (c) {
                case 1: case 14: connect(bottom, left); break;
                case 2: case 13: connect(bottom, right); break;
                case 3: case 12: connect(left, right); break;
                case 4: case 11: connect(top, right); break;
                case 6: case 9: connect(bottom, top); break;
                case 7: case 8: connect(top, left); break;
                case 5: case 10: {
                    // saddle cell: split by the sign at the cell center
                    const double vc = w({grid.x(i) + 0.5 * grid.dx(), grid.y(j) + 0.5 * grid.dy()});
                    const bool center_pos = vc > 0;
                    if ((c == 5) == center_pos) {
                        connect(bottom, right);
                        connect(top, left);
                    } else {
                        connect(bottom, left);
                        connect(top, right);
                    }
                    break;
                }
            }
        }
    }
    // materialize crossing points for every linked edge
    for (const auto& [key, adj] : links) {
        const bool horizontal = (key % 2 == 0);
        const long cell = key / 2;
        const int i = static_cast<int>(cell % grid.nx);
        const int j = static_cast<int>(cell / grid.nx);
        const PhasePoint a{grid.x(i), grid.y(j)};
        const PhasePoint b = horizontal ? PhasePoint{grid.x(i + 1), grid.y(j)}
                                        : PhasePoint{grid.x(i), grid.y(j + 1)};
        crossing_point(key, a, b);
    }

    // chain the segments into contours
    std::vector<Contour> out;
    std::map<long, bool> used;
    for (const auto& [start, adj0] : links) {
        if (used[start]) continue;
        // walk to one end (or back to start if the loop closes)
        std::vector<long> chain{start};
        used[start] = true;
        for (int dir = 0; dir < 2; ++dir) {
            long prev = start;
            const auto& nb = links[start];
            if (static_cast<int>(nb.size()) <= dir) break;
            long cur = nb[dir];
            while (cur != start && !used[cur]) {
                used[cur] = true;
                if (dir == 0)
                    chain.push_back(cur);
                else
                    chain.insert(chain.begin(), cur);
                const auto& nxt = links[cur];
                long follow = -1;
                for (long cand : nxt)
                    if (cand != prev) follow = cand;
                if (follow < 0) break;
                prev = cur;
                cur = follow;
            }
            if (cur == start && dir == 0) break;  // closed loop
        }
        Contour contour;
        for (long key : chain) contour.points.push_back(crossing.at(key));
        // closed if first and last chain edges share a cell link back to start
        const auto& endlinks = links[chain.back()];
        contour.closed = chain.size() > 2 &&
                         std::find(endlinks.begin(), endlinks.end(), chain.front()) != endlinks.end();
        if (contour.closed) {
            contour.points.push_back(contour.points.front());
            if (contour.signed_area() < 0.0) {
                std::reverse(contour.points.begin(), contour.points.end());
            }
        }
        if (contour.points.size() >= 3 || !contour.closed) out.push_back(std::move(contour));
    }
    return out;
}

namespace detail {

/// Projects a point onto the zero level line by a few Newton steps along the
/// gradient direction.
inline PhasePoint project_to_zero(const WignerFn& w, PhasePoint p, double fd_h) {
    for (int it = 0; it < 6; ++it) {
        const double val = w(p);
        if (std::abs(val) < 1e-12) break;
        const auto g = fd_gradient(w, p, fd_h);
        const double g2 = g[0] * g[0] + g[1] * g[1];
        if (g2 < 1e-18) break;
        p = {p.x - val * g[0] / g2, p.y - val * g[1] / g2};
    }
    return p;
}

}  // namespace detail

/// Inserts midpoints (projected back onto the level line) until every segment
/// is short, turns gently, and sees only a small change of ln|grad W| between
/// its endpoints.  Line integrals over the result resolve the near-saddle
/// pinch points where |grad W| dips by orders of magnitude.
inline Contour refine_contour(const Contour& contour, const WignerFn& w,
                              std::size_t min_vertices = 256, double fd_h = 1e-4) {
    if (!contour.closed)
        throw std::invalid_argument("refine_contour: open contour");
    const double max_len = std::max(contour.perimeter() / static_cast<double>(min_vertices), 1e-9);
    std::vector<PhasePoint> pts(contour.points.begin(), contour.points.end() - 1);
    std::vector<double> loggrad(pts.size());
    const auto lg = [&](PhasePoint p) {
        const auto g = fd_gradient(w, p, fd_h);
        return 0.5 * std::log(g[0] * g[0] + g[1] * g[1]);
    };
    for (std::size_t i = 0; i < pts.size(); ++i) loggrad[i] = lg(pts[i]);

    const std::size_t hard_cap = 60000;
    bool dirty = true;
    int sweeps = 0;
    while (dirty && pts.size() < hard_cap && sweeps < 24) {
        dirty = false;
        ++sweeps;
        std::vector<PhasePoint> np;
        std::vector<double> nl;
        np.reserve(pts.size() * 2);
        nl.reserve(pts.size() * 2);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const PhasePoint a = pts[i];
            const PhasePoint b = pts[(i + 1) % pts.size()];
            np.push_back(a);
            nl.push_back(loggrad[i]);
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            const double dlg = std::abs(loggrad[(i + 1) % pts.size()] - loggrad[i]);
            if (len < 1e-7) continue;
            if (len > max_len || dlg > 0.15) {
                PhasePoint m = detail::project_to_zero(
                    w, {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}, fd_h);
                np.push_back(m);
                nl.push_back(lg(m));
                dirty = true;
            }
        }
        pts.swap(np);
        loggrad.swap(nl);
    }
    Contour ref;
    ref.closed = true;
    ref.points = std::move(pts);
    ref.points.push_back(ref.points.front());
    if (ref.signed_area() < 0.0) std::reverse(ref.points.begin(), ref.points.end());
    return ref;
}

/// Quadrature of W over the contour interior: the interior is rasterized on
/// a local lattice, cells cut by the boundary get their covered-area fraction
/// from sub-row scanline overlaps.  Reported on the patch amplitude scale.
inline double patch_volume(const Contour& contour, const WignerFn& w, int cells_per_axis = 400,
                           unsigned threads = default_threads()) {
    if (!contour.closed) throw std::invalid_argument("patch_volume: open contour");
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& p : contour.points) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const int n = cells_per_axis;
    const double dx = (x1 - x0) / n, dy = (y1 - y0) / n;

    // x-intervals covered by the polygon at height y
    const auto row_intervals = [&](double y) {
        std::vector<double> xs;
        const auto& P = contour.points;
        for (std::size_t i = 0; i + 1 < P.size(); ++i) {
            const PhasePoint &a = P[i], &b = P[i + 1];
            if ((a.y > y) != (b.y > y)) xs.push_back(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
        }
        std::sort(xs.begin(), xs.end());
        return xs;
    };

    std::vector<double> row_sums(n, 0.0);
    parallel_for(0, static_cast<std::size_t>(n), threads, [&](std::size_t j) {
        // coverage fraction per cell from 4 sub-rows
        std::vector<double> cover(n, 0.0);
        for (int sub = 0; sub < 4; ++sub) {
            const double y = y0 + (j + (sub + 0.5) / 4.0) * dy;
            const auto xs = row_intervals(y);
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                const double lo = (xs[k] - x0) / dx, hi = (xs[k + 1] - x0) / dx;
                const int c0 = std::max(0, static_cast<int>(std::floor(lo)));
                const int c1 = std::min(n - 1, static_cast<int>(std::floor(hi)));
                for (int c = c0; c <= c1; ++c) {
                    const double seg = std::min(hi, c + 1.0) - std::max(lo, static_cast<double>(c));
                    if (seg > 0) cover[c] += seg / 4.0;
                }
            }
        }
        double acc = 0.0;
        const double yc = y0 + (j + 0.5) * dy;
        for (int c = 0; c < n; ++c) {
            if (cover[c] <= 0.0) continue;
            acc += cover[c] * w({x0 + (c + 0.5) * dx, yc});
        }
        row_sums[j] = acc * dx * dy;
    });
    double v = 0.0;
    for (double r : row_sums) v += r;
    return v * patch_amplitude_scale;
}

namespace detail {

struct BoundarySample {
    PhasePoint mid;
    double nx, ny, len;
};

inline std::vector<BoundarySample> boundary_samples(const Contour& contour) {
    std::vector<BoundarySample> out;
    const auto& P = contour.points;
    for (std::size_t i = 0; i + 1 < P.size(); ++i) {
        const double dx = P[i + 1].x - P[i].x;
        const double dy = P[i + 1].y - P[i].y;
        const double len = std::hypot(dx, dy);
        if (len < 1e-12) continue;  // degenerate segment
        // outward normal of a counterclockwise polygon
        out.push_back({{0.5 * (P[i].x + P[i + 1].x), 0.5 * (P[i].y + P[i + 1].y)},
                       dy / len, -dx / len, len});
    }
    return out;
}

}  // namespace detail

/// Instantaneous rate of the patch volume, the boundary flux
/// (nbar + 1/2) Int grad W . n dl, on the patch amplitude scale.
inline double volume_rate(const Contour& contour, const ReservoirParams& reservoir,
                          const WignerFn& w, double fd_h = 1e-4,
                          unsigned threads = default_threads()) {
    if (!contour.closed) throw std::invalid_argument("volume_rate: open contour");
    const auto segs = detail::boundary_samples(contour);
    if (segs.size() < 8) throw numerics_error("volume_rate: fewer than 8 usable segments");
    std::vector<double> acc(segs.size());
    parallel_for(0, segs.size(), threads, [&](std::size_t i) {
        const auto g = fd_gradient(w, segs[i].mid, fd_h);
        acc[i] = (g[0] * segs[i].nx + g[1] * segs[i].ny) * segs[i].len;
    });
    double flux = 0.0;
    for (double a : acc) flux += a;
    return (reservoir.n_bar + 0.5) * flux * patch_amplitude_scale;
}

/// Instantaneous rate of the patch area, from the curvature-free boundary
/// form  -2a - 2 pi (nbar + 1/2) - (nbar + 1/2) Int grad(ln|grad W|) . n dl.
/// The equivalent form  -2a +/- (nbar + 1/2) Int (lap W / |grad W|) dl  is
/// evaluated as well and both must agree within 1%.
inline double area_rate(const Contour& contour, const ReservoirParams& reservoir,
                        const WignerFn& w, char patch_sign = '+', double fd_h = 1e-4,
                        unsigned threads = default_threads()) {
    if (!contour.closed) throw std::invalid_argument("area_rate: open contour");
    const auto segs = detail::boundary_samples(contour);
    if (segs.size() < 8) throw numerics_error("area_rate: fewer than 8 usable segments");
    const double area = std::abs(contour.signed_area());
    const double k = reservoir.n_bar + 0.5;

    std::vector<double> i_log(segs.size()), i_lap(segs.size()), min_grad(segs.size(), 1e300);
    parallel_for(0, segs.size(), threads, [&](std::size_t i) {
        const auto& s = segs[i];
        const auto g = fd_gradient(w, s.mid, fd_h);
        const double gmag = std::hypot(g[0], g[1]);
        min_grad[i] = gmag;
        // directional derivative of ln|grad W| along the outward normal
        const double step = fd_h;
        const auto gp = fd_gradient(w, {s.mid.x + 0.5 * step * s.nx, s.mid.y + 0.5 * step * s.ny}, fd_h);
        const auto gm = fd_gradient(w, {s.mid.x - 0.5 * step * s.nx, s.mid.y - 0.5 * step * s.ny}, fd_h);
        i_log[i] = (0.5 * std::log(gp[0] * gp[0] + gp[1] * gp[1]) -
                    0.5 * std::log(gm[0] * gm[0] + gm[1] * gm[1])) / step * s.len;
        i_lap[i] = fd_laplacian(w, s.mid, fd_h) / gmag * s.len;
    });
    const double gmin = *std::min_element(min_grad.begin(), min_grad.end());
    if (gmin < 1e-6)
        throw numerics_error("area_rate: boundary gradient below 1e-6 (singular boundary)");
    double sum_log = 0.0, sum_lap = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        sum_log += i_log[i];
        sum_lap += i_lap[i];
    }
    const double sgn = (patch_sign == '+') ? 1.0 : -1.0;
    const double form_curvfree = -2.0 * area - 2.0 * M_PI * k - k * sum_log;
    const double form_direct = -2.0 * area + sgn * k * sum_lap;
    const double scale = std::max({std::abs(form_curvfree), std::abs(form_direct)});
    if (std::abs(form_curvfree - form_direct) > 0.01 * scale)
        throw numerics_error("area_rate: the two boundary forms disagree by more than 1%");
    return form_curvfree;
}

/// Area rate of a rotationally symmetric circular patch of radius r from the
/// radial profile derivatives:  -2 pi r^2 - 2 pi (nbar + 1/2)(1 + r W''/W').
inline double circular_area_rate(double radius, double w_prime, double w_second, double n_bar) {
    if (w_prime == 0.0)
        throw std::domain_error("circular_area_rate: vanishing radial derivative");
    const double area = M_PI * radius * radius;
    return -2.0 * area - 2.0 * M_PI * (n_bar + 0.5) * (1.0 + radius * w_second / w_prime);
}

/// The sign-constant region of W around the origin, bounded by the innermost
/// zero line: sampled on a local window, traced, and refined.
inline Contour central_patch(const WignerFn& w, double roi_half_width = 0.75,
                             int samples = 769, std::size_t min_vertices = 256,
                             unsigned threads = default_threads()) {
    WignerGrid g;
    g.x_min = g.y_min = -roi_half_width;
    g.x_max = g.y_max = roi_half_width;
    g.nx = g.ny = samples;
    g.values.resize(static_cast<std::size_t>(samples) * samples);
    parallel_for(0, static_cast<std::size_t>(samples), threads, [&](std::size_t iy) {
        for (int ix = 0; ix < samples; ++ix)
            g.at(ix, static_cast<int>(iy)) = w({g.x(ix), g.y(static_cast<int>(iy))});
    });
    const Roi roi{-roi_half_width, roi_half_width, -roi_half_width, roi_half_width};
    std::vector<Contour> contours = extract_zero_contours(g, roi, w);

    const Contour* best = nullptr;
    for (const Contour& c : contours) {
        if (!c.closed || !c.encloses({0, 0})) continue;
        if (!best || std::abs(c.signed_area()) < std::abs(best->signed_area())) best = &c;
    }
    if (!best) {
        if (contours.empty())
            throw numerics_error("central_patch: no zero line found (no central structure)");
        throw coverage_error(
            "central_patch: only open zero lines around the origin; region of interest too small");
    }
    return refine_contour(*best, w, min_vertices);
}

/// Full patch characterization at tau = 0 for one state.
inline PatchMetrics patch_metrics(const WignerEvaluator& ev, const ReservoirParams& reservoir,
                                  double roi_half_width = 0.75,
                                  unsigned threads = default_threads()) {
    const WignerFn w = [&](PhasePoint p) { return ev.initial(p); };
    const Contour c = central_patch(w, roi_half_width, 769, 256, threads);
    PatchMetrics m;
    m.sign = ev.initial({0, 0}) > 0 ? '+' : '-';
    m.a0 = std::abs(c.signed_area());
    m.v0 = patch_volume(c, w, 400, threads);
    m.vdot0 = volume_rate(c, reservoir, w, 1e-4, threads);
    m.vdot_rel = m.vdot0 / m.v0;
    m.adot0 = area_rate(c, reservoir, w, m.sign, 1e-4, threads);
    if ((m.v0 > 0) != (m.sign == '+'))
        throw numerics_error("patch_metrics: volume sign does not match the patch sign");
    if ((m.vdot0 > 0) == (m.v0 > 0))
        throw numerics_error("patch_metrics: volume and volume rate should have opposite signs");
    return m;
}

/// Patch table over a list of states (fixed reservoir, default nbar = 0.5).
inline std::vector<PatchMetrics> table2_pipeline(const std::vector<CompassParams>& rows,
                                                 double n_bar = 0.5,
                                                 unsigned threads = default_threads()) {
    std::vector<PatchMetrics> out;
    const ReservoirParams res{n_bar};
    for (const CompassParams& params : rows) {
        const WignerEvaluator ev(params);
        out.push_back(patch_metrics(ev, res, 0.75, threads));
    }
    return out;
}

// ---- direct finite-difference integration of the phase-space PDE ----------

/// dW/dtau = 2W + x dW/dx + y dW/dy + (nbar + 1/2)(d2W/dx2 + d2W/dy2),
/// 4th-order stencils inside, one-sided at the edges.
inline std::vector<double> fokker_planck_rhs(const WignerGrid& g, double n_bar,
                                             unsigned threads = default_threads()) {
    if (g.nx < 7 || g.ny < 7) throw std::invalid_argument("fokker_planck_rhs: grid too coarse");
    const double hx = g.dx(), hy = g.dy();
    const double diff = n_bar + 0.5;
    std::vector<double> out(g.values.size());

    // 4th-order first/second derivative stencils; rows select the offset
    // pattern near an edge (0,1 = left edge, 2 = interior, 3,4 = right edge).
    static const int off1[5][5] = {{0, 1, 2, 3, 4}, {-1, 0, 1, 2, 3}, {-2, -1, 0, 1, 2},
                                   {-3, -2, -1, 0, 1}, {-4, -3, -2, -1, 0}};
    static const double c1[5][5] = {{-25, 48, -36, 16, -3},
                                    {-3, -10, 18, -6, 1},
                                    {1, -8, 0, 8, -1},
                                    {-1, 6, -18, 10, 3},
                                    {3, -16, 36, -48, 25}};
    static const int off2[5][6] = {{0, 1, 2, 3, 4, 5}, {-1, 0, 1, 2, 3, 4}, {-2, -1, 0, 1, 2, 0},
                                   {-4, -3, -2, -1, 0, 1}, {-5, -4, -3, -2, -1, 0}};
    static const double c2[5][6] = {{45, -154, 214, -156, 61, -10},
                                    {10, -15, -4, 14, -6, 1},
                                    {-1, 16, -30, 16, -1, 0},
                                    {1, -6, 14, -4, -15, 10},
                                    {-10, 61, -156, 214, -154, 45}};
    const auto row1 = [](int i, int n) { return i < 2 ? i : (i >= n - 2 ? 5 - (n - i) : 2); };

    parallel_for(0, static_cast<std::size_t>(g.ny), threads, [&](std::size_t iy_s) {
        const int iy = static_cast<int>(iy_s);
        const int ry = row1(iy, g.ny);
        for (int ix = 0; ix < g.nx; ++ix) {
            const int rx = row1(ix, g.nx);
            double wx = 0, wy = 0, wxx = 0, wyy = 0;
            for (int t = 0; t < 5; ++t) {
                wx += c1[rx][t] * g.at(ix + off1[rx][t], iy);
                wy += c1[ry][t] * g.at(ix, iy + off1[ry][t]);
            }
            for (int t = 0; t < 6; ++t) {
                if (c2[rx][t] != 0.0) wxx += c2[rx][t] * g.at(ix + off2[rx][t], iy);
                if (c2[ry][t] != 0.0) wyy += c2[ry][t] * g.at(ix, iy + off2[ry][t]);
            }
            wx /= 12.0 * hx;
            wy /= 12.0 * hy;
            wxx /= 12.0 * hx * hx;
            wyy /= 12.0 * hy * hy;
            out[static_cast<std::size_t>(iy) * g.nx + ix] =
                2.0 * g.at(ix, iy) + g.x(ix) * wx + g.y(iy) * wy + diff * (wxx + wyy);
        }
    });
    return out;
}

/// Explicit RK4 time stepping of the phase-space PDE.  The two outer rings
/// are held at their initial (far-field, near-zero) values.  dt must satisfy
/// the diffusion stability bound 0.2 h^2/(nbar + 1/2).
inline WignerGrid fd_evolve(const WignerGrid& grid, double n_bar, double tau, double dt,
                            unsigned threads = default_threads()) {
    if (!(tau >= 0.0)) throw std::domain_error("fd_evolve: tau must be >= 0");
    const double h = std::min(grid.dx(), grid.dy());
    if (!(dt > 0.0) || dt > 0.2 * h * h / (n_bar + 0.5) + 1e-15)
        throw std::invalid_argument("fd_evolve: dt violates the diffusion stability bound");
    if (tau == 0.0) return grid;

    WignerGrid cur = grid;
    const int steps = std::max(1, static_cast<int>(std::ceil(tau / dt - 1e-12)));
    const double hstep = tau / steps;
    const auto clamp_boundary = [&](std::vector<double>& v) {
        for (int iy = 0; iy < cur.ny; ++iy)
            for (int ix = 0; ix < cur.nx; ++ix)
                if (ix < 2 || iy < 2 || ix >= cur.nx - 2 || iy >= cur.ny - 2)
                    v[static_cast<std::size_t>(iy) * cur.nx + ix] = 0.0;
    };
    std::vector<double> k1, k2, k3, k4;
    WignerGrid tmp = cur;
    for (int s = 0; s < steps; ++s) {
        k1 = fokker_planck_rhs(cur, n_bar, threads);
        clamp_boundary(k1);
        for (std::size_t i = 0; i < tmp.values.size(); ++i)
            tmp.values[i] = cur.values[i] + 0.5 * hstep * k1[i];
        k2 = fokker_planck_rhs(tmp, n_bar, threads);
        clamp_boundary(k2);
        for (std::size_t i = 0; i < tmp.values.size(); ++i)
            tmp.values[i] = cur.values[i] + 0.5 * hstep * k2[i];
        k3 = fokker_planck_rhs(tmp, n_bar, threads);
        clamp_boundary(k3);
        for (std::size_t i = 0; i < tmp.values.size(); ++i)
            tmp.values[i] = cur.values[i] + hstep * k3[i];
        k4 = fokker_planck_rhs(tmp, n_bar, threads);
        clamp_boundary(k4);
        for (std::size_t i = 0; i < cur.values.size(); ++i)
            cur.values[i] += hstep / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return cur;
}

}  // namespace compass
