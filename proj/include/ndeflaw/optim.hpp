#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace nde {

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

/// Nelder-Mead simplex minimization. `max_iter` bounds the number of
/// reflect/expand/contract steps; stops early when the relative spread of
/// simplex values falls below `tol`.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 const std::vector<double>& x0,
                                 const std::vector<double>& step,
                                 int max_iter, double tol) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

    auto order = [&] {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        std::vector<std::vector<double>> p2;
        std::vector<double> v2;
        for (auto i : idx) { p2.push_back(pts[i]); v2.push_back(vals[i]); }
        pts.swap(p2);
        vals.swap(v2);
    };

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        order();
        const double spread = std::fabs(vals[n] - vals[0]);
        if (spread <= tol * (std::fabs(vals[0]) + tol)) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + coef * (pts[n][j] - centroid[j]);
            return p;
        };

        auto xr = blend(-1.0);
        double fr = f(xr);
        if (fr < vals[0]) {
            auto xe = blend(-2.0);
            double fe = f(xe);
            if (fe < fr) { pts[n] = xe; vals[n] = fe; }
            else { pts[n] = xr; vals[n] = fr; }
        } else if (fr < vals[n - 1]) {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            auto xc = blend(fr < vals[n] ? -0.5 : 0.5);
            double fc = f(xc);
            if (fc < std::min(fr, vals[n])) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    vals[i] = f(pts[i]);
                }
            }
        }
    }
    order();
    return {pts[0], vals[0], iter};
}

}  // namespace nde
