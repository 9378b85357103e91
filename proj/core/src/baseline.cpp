#include "okode/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "okode/errors.hpp"
#include "okode/simulate.hpp"

namespace okode {

Eigen::Vector2d cubic_rhs(const CubicModelParams& params, const Eigen::Vector2d& x) {
    const auto& p = params.p;
    const double V = x(0), R = x(1);
    const double V2 = V * V, V3 = V2 * V, R2 = R * R, R3 = R2 * R;
    return {p[0] * V + p[1] * V2 + p[2] * V3 + p[3] * R + p[4] * R2 + p[5] * R3 + p[6],
            p[7] * V + p[8] * V2 + p[9] * V3 + p[10] * R + p[11] * R2 + p[12] * R3 + p[13]};
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
    const Eigen::Index n = x0.size();
    if (n < 1) throw ValidationError("nelder_mead needs at least one parameter");

    int evaluations = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evaluations;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    std::vector<Eigen::VectorXd> simplex;
    simplex.reserve(static_cast<std::size_t>(n) + 1);
    simplex.push_back(x0);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd v = x0;
        v(i) = v(i) != 0.0 ? 1.05 * v(i) : 0.00025;
        simplex.push_back(v);
    }
    std::vector<double> values(simplex.size());
    for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(simplex.size());
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        {
            std::vector<Eigen::VectorXd> s2;
            std::vector<double> v2;
            s2.reserve(simplex.size());
            v2.reserve(values.size());
            for (std::size_t i : order) {
                s2.push_back(simplex[i]);
                v2.push_back(values[i]);
            }
            simplex.swap(s2);
            values.swap(v2);
        }
        const double best = values.front(), worst = values.back();
        double diameter = 0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            diameter = std::max(diameter, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
        if (std::isfinite(best) &&
            std::abs(worst - best) <= opts.tol * (std::abs(best) + opts.tol) &&
            diameter <= opts.xtol * (1.0 + simplex[0].cwiseAbs().maxCoeff())) {
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[static_cast<std::size_t>(i)];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected =
            centroid + opts.reflection * (centroid - simplex.back());
        const double f_r = eval(reflected);
        if (f_r < values.front()) {
            const Eigen::VectorXd expanded =
                centroid + opts.expansion * (reflected - centroid);
            const double f_e = eval(expanded);
            if (f_e < f_r) {
                simplex.back() = expanded;
                values.back() = f_e;
            } else {
                simplex.back() = reflected;
                values.back() = f_r;
            }
        } else if (f_r < values[values.size() - 2]) {
            simplex.back() = reflected;
            values.back() = f_r;
        } else {
            const Eigen::VectorXd contracted =
                centroid + opts.contraction * (simplex.back() - centroid);
            const double f_c = eval(contracted);
            if (f_c < values.back()) {
                simplex.back() = contracted;
                values.back() = f_c;
            } else {
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    simplex[i] = simplex[0] + opts.shrink * (simplex[i] - simplex[0]);
                    values[i] = eval(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return NelderMeadResult{simplex[best], values[best], it, evaluations};
}

int parameter_count(RhsFamily family) {
    return family == RhsFamily::fhn3 ? 3 : 14;
}

namespace {

VectorField make_field(RhsFamily family, const Eigen::VectorXd& theta) {
    if (family == RhsFamily::fhn3) {
        const FhnParams p{theta(0), theta(1), theta(2)};
        return [p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            if (p.c == 0) throw ValidationError("c = 0");
            return fhn_rhs(p, Eigen::Vector2d(x));
        };
    }
    CubicModelParams p;
    for (int i = 0; i < 14; ++i) p.p[static_cast<std::size_t>(i)] = theta(i);
    return [p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return cubic_rhs(p, Eigen::Vector2d(x));
    };
}

}  // namespace

ParametricFit fit_parametric(RhsFamily family, const TimeSeries& ts, int restarts,
                             std::uint64_t seed, int substeps) {
    if (restarts < 1) throw ValidationError("fit_parametric needs restarts >= 1");
    if (ts.dim() != 2) throw ValidationError("parametric baselines are 2-dimensional");
    const int n_params = parameter_count(family);
    const Eigen::Index n = ts.length();
    std::vector<double> grid(ts.times().data(), ts.times().data() + n);
    const Eigen::VectorXd y0 = ts.values().row(0).transpose();

    auto objective = [&](const Eigen::VectorXd& theta) -> double {
        if (family == RhsFamily::fhn3 && theta(2) == 0) {
            return std::numeric_limits<double>::infinity();
        }
        const VectorField f = make_field(family, theta);
        Eigen::VectorXd x = y0;
        double total = 0;
        std::size_t row = 1;
        for (std::size_t i = 0; i + 1 < grid.size(); ++i, ++row) {
            const double h = (grid[i + 1] - grid[i]) / substeps;
            for (int s = 0; s < substeps; ++s) {
                const Eigen::VectorXd k1 = f(x);
                const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
                const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
                const Eigen::VectorXd k4 = f(x + h * k3);
                x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e6) {
                    return std::numeric_limits<double>::infinity();
                }
            }
            total += (ts.values().row(static_cast<Eigen::Index>(row)).transpose() - x)
                         .squaredNorm();
        }
        return total;
    };

    ParametricFit fit;
    fit.mse = std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (int rstart = 0; rstart < restarts; ++rstart) {
        // one independent stream per restart keeps best-of-k a prefix property
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(rstart));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd x0(n_params);
        for (int i = 0; i < n_params; ++i) x0(i) = normal(rng);

        const NelderMeadResult res = nelder_mead(objective, x0);
        const double mse = res.value / static_cast<double>(n);
        fit.restarts.push_back(RestartRecord{rstart, mse, res.x});
        if (mse < fit.mse) {
            fit.mse = mse;
            fit.params = res.x;
            any_finite = std::isfinite(mse);
        }
    }
    if (!any_finite) {
        throw NumericalError("all parametric restarts diverged");
    }
    return fit;
}

}  // namespace okode
