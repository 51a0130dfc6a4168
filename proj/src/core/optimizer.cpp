#include "btcgarch/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "btcgarch/error.hpp"

namespace btcg::optim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sanitize(double f) { return std::isfinite(f) ? f : kInf; }

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

}  // namespace

MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0) fail(Errc::InvalidArgument, "empty parameter vector");
    const double dn = static_cast<double>(n);
    const double c_reflect = 1.0;
    const double c_expand = 1.0 + 2.0 / dn;
    const double c_contract = 0.75 - 1.0 / (2.0 * dn);
    const double c_shrink = 1.0 - 1.0 / dn;

    MinimizeResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        return sanitize(f(x));
    };

    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = opts.initial_step.size() == n ? opts.initial_step[i] : 0.1;
        pts[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    double previous_best = kInf;

    while (res.evaluations < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        {
            std::vector<std::vector<double>> p2(n + 1);
            std::vector<double> f2(n + 1);
            for (std::size_t i = 0; i <= n; ++i) {
                p2[i] = std::move(pts[order[i]]);
                f2[i] = fv[order[i]];
            }
            pts = std::move(p2);
            fv = std::move(f2);
        }
        if (std::isfinite(previous_best)) res.last_change = previous_best - fv[0];
        previous_best = fv[0];

        double xspread = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) xspread = std::max(xspread, std::fabs(pts[i][j] - pts[0][j]));
        }
        if (std::isfinite(fv[n]) && fv[n] - fv[0] <= opts.f_tolerance && xspread <= opts.x_tolerance) break;
        if (std::isfinite(fv[n]) && fv[n] - fv[0] <= opts.f_tolerance * 1e-3) break;
        ++res.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / dn;
        }
        const auto& worst = pts[n];
        for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + c_reflect * (centroid[j] - worst[j]);
        const double fr = eval(xr);

        if (fr < fv[0]) {
            for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + c_expand * (xr[j] - centroid[j]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[n] = xe;
                fv[n] = fe;
            } else {
                pts[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if (fr < fv[n - 1]) {
            pts[n] = xr;
            fv[n] = fr;
            continue;
        }
        bool shrink = false;
        if (fr < fv[n]) {
            for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + c_contract * (xr[j] - centroid[j]);
            const double fc = eval(xc);
            if (fc <= fr) {
                pts[n] = xc;
                fv[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + c_contract * (worst[j] - centroid[j]);
            const double fc = eval(xc);
            if (fc < fv[n]) {
                pts[n] = xc;
                fv[n] = fc;
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (std::size_t i = 1; i <= n; ++i) {
                for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[0][j] + c_shrink * (pts[i][j] - pts[0][j]);
                fv[i] = eval(pts[i]);
            }
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = pts[best];
    res.f = fv[best];
    return res;
}

MinimizeResult bfgs(const ObjectiveWithGradient& f, std::vector<double> x0, const QuasiNewtonOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0) fail(Errc::InvalidArgument, "empty parameter vector");
    constexpr double c1 = 1e-4;
    constexpr int max_backtracks = 60;

    MinimizeResult res;
    std::vector<double> x = std::move(x0);
    std::vector<double> g(n);
    double fx = sanitize(f(x, g));
    ++res.evaluations;
    if (!std::isfinite(fx)) {
        res.x = x;
        res.f = fx;
        res.gradient = g;
        return res;
    }

    std::vector<double> h(n * n, 0.0);  // inverse Hessian approximation, row-major
    auto reset = [&] {
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
    };
    reset();
    bool scaled = false;

    std::vector<double> d(n), xn(n), gn(n), s(n), y(n), hy(n);
    int small_steps = 0;
    while (res.iterations < opts.max_iterations) {
        if (max_abs(g) < opts.gradient_tolerance) break;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc -= h[i * n + j] * g[j];
            d[i] = acc;
        }
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            reset();
            scaled = false;
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = dot(g, d);
        }

        double step = 1.0;
        double fn = kInf;
        bool accepted = false;
        for (int k = 0; k < max_backtracks; ++k) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * d[i];
            fn = sanitize(f(xn, gn));
            ++res.evaluations;
            if (fn <= fx + c1 * step * slope) {
                accepted = true;
                break;
            }
            // quadratic interpolation of the backtrack, kept within [0.1, 0.5]
            double next = 0.5;
            if (std::isfinite(fn)) {
                const double denom = 2.0 * (fn - fx - step * slope);
                if (denom > 0.0) next = std::clamp(-slope * step / denom, 0.1, 0.5);
            }
            step *= next;
        }
        if (!accepted) break;
        ++res.iterations;

        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const double sy = dot(s, y);
        const double yy = dot(y, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * yy)) {
            if (!scaled) {
                reset();
                for (std::size_t i = 0; i < n; ++i) h[i * n + i] = sy / yy;
                scaled = true;
            }
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += h[i * n + j] * y[j];
                hy[i] = acc;
            }
            const double yhy = dot(y, hy);
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }

        res.last_change = fx - fn;
        x = xn;
        g = gn;
        fx = fn;
        if (res.last_change <= opts.f_tolerance * (1.0 + std::fabs(fx))) {
            if (++small_steps >= 3) break;
        } else {
            small_steps = 0;
        }
    }

    res.x = std::move(x);
    res.f = fx;
    res.gradient = std::move(g);
    return res;
}

}  // namespace btcg::optim
