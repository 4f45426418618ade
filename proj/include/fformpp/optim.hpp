#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace fformpp::optim {

struct NelderMeadOptions {
    int max_evals = 2000;
    double ftol = 1e-10;   // relative spread of simplex values
    double xtol = 1e-9;    // absolute simplex diameter
    double initial_step = 0.1;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int evals = 0;
    bool converged = false;
};

namespace detail {

/// Unconstrained Nelder–Mead on g.
inline NelderMeadResult nelder_mead_free(const std::function<double(const Eigen::VectorXd&)>& g, const Eigen::VectorXd& z0,
                                         const Eigen::VectorXd& steps, const NelderMeadOptions& opt) {
    const Eigen::Index n = z0.size();
    NelderMeadResult res;
    auto eval = [&](const Eigen::VectorXd& z) {
        ++res.evals;
        const double v = g(z);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };
    std::vector<Eigen::VectorXd> pts{z0};
    std::vector<double> vals{eval(z0)};
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd p = z0;
        p[i] += steps[i];
        pts.push_back(p);
        vals.push_back(eval(p));
    }

    std::vector<std::size_t> order(static_cast<std::size_t>(n) + 1);
    while (res.evals < opt.max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[static_cast<std::size_t>(n) - 1];

        double diam = 0.0;
        for (const auto& p : pts) diam = std::max(diam, (p - pts[best]).lpNorm<Eigen::Infinity>());
        const double spread = std::abs(vals[worst] - vals[best]);
        if ((spread <= opt.ftol * (std::abs(vals[best]) + opt.ftol) && diam <= std::sqrt(opt.xtol)) || diam <= opt.xtol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i : order) {
            if (i != worst) centroid += pts[i];
        }
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                           : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = eval(xc);
        if (fc < std::min(fr, vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i == best) continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    res.x = pts[static_cast<std::size_t>(it - vals.begin())];
    res.value = *it;
    return res;
}

} // namespace detail

/// Box-constrained Nelder–Mead. Coordinates with two finite bounds are searched on the
/// logit scale of their interval; unbounded coordinates are searched directly.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                    const NelderMeadOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    std::vector<bool> boxed(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) boxed[i] = std::isfinite(lower[i]) && std::isfinite(upper[i]) && upper[i] > lower[i];
    auto to_x = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (boxed[i]) {
                x[i] = lower[i] + (upper[i] - lower[i]) / (1.0 + std::exp(-z[i]));
            } else {
                x[i] = std::clamp(z[i], lower[i], upper[i]);
            }
        }
        return x;
    };
    Eigen::VectorXd z0(n), steps(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (boxed[i]) {
            const double span = upper[i] - lower[i];
            const double u = std::clamp((x0[i] - lower[i]) / span, 1e-6, 1.0 - 1e-6);
            z0[i] = std::log(u / (1.0 - u));
            steps[i] = 10.0 * opt.initial_step;
        } else {
            z0[i] = std::clamp(x0[i], lower[i], upper[i]);
            steps[i] = opt.initial_step * std::max(1.0, std::abs(z0[i]));
        }
    }
    auto res = detail::nelder_mead_free([&](const Eigen::VectorXd& z) { return f(to_x(z)); }, z0, steps, opt);
    res.x = to_x(res.x);
    return res;
}

struct LeastSquaresResult {
    Eigen::VectorXd x;
    double ssr = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Levenberg–Marquardt with forward-difference Jacobian for sum-of-squares objectives.
/// `residuals` may return an empty vector to signal an infeasible point.
inline LeastSquaresResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                                              Eigen::VectorXd x, int max_iter = 100, double tol = 1e-10) {
    LeastSquaresResult res;
    Eigen::VectorXd r = residuals(x);
    if (r.size() == 0 || !r.allFinite()) return res;
    double ssr = r.squaredNorm();
    double mu = 1e-3;
    const Eigen::Index k = x.size();
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        Eigen::MatrixXd J(r.size(), k);
        bool ok = true;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
            Eigen::VectorXd xh = x;
            xh[j] += h;
            Eigen::VectorXd rh = residuals(xh);
            if (rh.size() != r.size() || !rh.allFinite()) {
                xh[j] = x[j] - h;
                rh = residuals(xh);
                if (rh.size() != r.size() || !rh.allFinite()) {
                    ok = false;
                    break;
                }
                J.col(j) = (r - rh) / h;
            } else {
                J.col(j) = (rh - r) / h;
            }
        }
        if (!ok) break;
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        bool improved = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += mu * (JtJ.diagonal().array() + 1e-12).matrix();
            const Eigen::VectorXd step = A.ldlt().solve(-g);
            if (!step.allFinite()) {
                mu *= 10.0;
                continue;
            }
            const Eigen::VectorXd xn = x + step;
            const Eigen::VectorXd rn = residuals(xn);
            if (rn.size() == r.size() && rn.allFinite() && rn.squaredNorm() < ssr) {
                const double rel = (ssr - rn.squaredNorm()) / std::max(ssr, 1e-300);
                x = xn;
                r = rn;
                ssr = r.squaredNorm();
                mu = std::max(mu / 3.0, 1e-12);
                improved = true;
                if (rel < tol || step.norm() < tol * (x.norm() + tol)) {
                    res.converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if (!improved) {
            res.converged = true;  // no descent direction left: stationary to working precision
            break;
        }
        if (res.converged) break;
    }
    res.x = x;
    res.ssr = ssr;
    return res;
}

} // namespace fformpp::optim
