#include "okode/smoother.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "okode/errors.hpp"

namespace okode {

double VariableSmoother::eval(double t) const {
    double acc = 0;
    for (Eigen::Index i = 0; i < train_times.size(); ++i)
        acc += coeffs(i) * kernel.eval(t, train_times(i));
    return acc;
}

double VariableSmoother::eval_derivative(double t) const {
    double acc = 0;
    for (Eigen::Index i = 0; i < train_times.size(); ++i)
        acc += coeffs(i) * kernel.time_derivative(t, train_times(i));
    return acc;
}

VariableSmoother fit_variable(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                              const GaussianKernel& kernel, double ridge) {
    if (!(ridge > 0)) {
        throw ValidationError("smoother ridge must be positive, got " + std::to_string(ridge));
    }
    if (times.size() != y.size() || times.size() < 2) {
        throw ValidationError("smoother needs matching times/values with n >= 2");
    }
    const Eigen::Index n = times.size();
    Eigen::MatrixXd K = kernel.gram(times, times);
    Eigen::MatrixXd A = K + ridge * Eigen::MatrixXd::Identity(n, n);
    Eigen::LDLT<Eigen::MatrixXd> solver(A);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("smoother system factorization failed");
    }
    Eigen::VectorXd b = solver.solve(y);
    const double rel = (A * b - y).norm() / std::max(y.norm(), 1e-300);
    if (!b.allFinite() || rel > 1e-8) {
        throw NumericalError("smoother solve left relative residual " + std::to_string(rel));
    }
    return VariableSmoother{kernel, ridge, times, std::move(b)};
}

Smoother::Smoother(std::vector<VariableSmoother> variables)
    : variables_(std::move(variables)) {
    if (variables_.empty()) {
        throw ValidationError("Smoother needs at least one variable");
    }
    const auto& t0 = variables_.front().train_times;
    for (std::size_t j = 1; j < variables_.size(); ++j) {
        if (variables_[j].train_times.size() != t0.size() ||
            (variables_[j].train_times - t0).cwiseAbs().maxCoeff() != 0) {
            throw ValidationError("smoother variables must share train times");
        }
    }
}

Eigen::VectorXd Smoother::eval(double t) const {
    Eigen::VectorXd out(dim());
    for (Eigen::Index j = 0; j < dim(); ++j) out(j) = variables_[static_cast<std::size_t>(j)].eval(t);
    return out;
}

Eigen::VectorXd Smoother::eval_derivative(double t) const {
    Eigen::VectorXd out(dim());
    for (Eigen::Index j = 0; j < dim(); ++j)
        out(j) = variables_[static_cast<std::size_t>(j)].eval_derivative(t);
    return out;
}

double loocv_explicit(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                      double gamma, double ridge) {
    const Eigen::Index n = times.size();
    const GaussianKernel k(gamma);
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd t_sub(n - 1), y_sub(n - 1);
        Eigen::Index w = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            t_sub(w) = times(j);
            y_sub(w) = y(j);
            ++w;
        }
        const VariableSmoother fit = fit_variable(t_sub, y_sub, k, ridge);
        const double e = y(i) - fit.eval(times(i));
        total += e * e;
    }
    return total;
}

LoocvChoice loocv_select(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                         std::span<const double> gamma_grid, std::span<const double> ridge_grid) {
    if (gamma_grid.empty() || ridge_grid.empty()) {
        throw ValidationError("cross-validation grids must be non-empty");
    }
    if (times.size() < 3) {
        throw ValidationError("leave-one-out selection needs n >= 3");
    }
    const Eigen::Index n = times.size();
    bool have = false;
    LoocvChoice best;
    for (double gamma : gamma_grid) {
        const GaussianKernel k(gamma);
        const Eigen::MatrixXd K = k.gram(times, times);
        for (double ridge : ridge_grid) {
            Eigen::MatrixXd A = K + ridge * Eigen::MatrixXd::Identity(n, n);
            Eigen::LDLT<Eigen::MatrixXd> solver(A);
            Eigen::MatrixXd H = K * solver.solve(Eigen::MatrixXd::Identity(n, n));
            double err = 0;
            bool shortcut_ok = true;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double denom = 1.0 - H(i, i);
                if (denom <= 1e-12) {
                    shortcut_ok = false;
                    break;
                }
            }
            if (shortcut_ok) {
                const Eigen::VectorXd yhat = H * y;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double e = (y(i) - yhat(i)) / (1.0 - H(i, i));
                    err += e * e;
                }
            } else {
                err = loocv_explicit(times, y, gamma, ridge);
            }
            // ties prefer the smoother model: larger ridge, then smaller gamma
            const bool better =
                !have || err < best.loo_error ||
                (err == best.loo_error &&
                 (ridge > best.ridge || (ridge == best.ridge && gamma < best.gamma)));
            if (better) {
                best = LoocvChoice{gamma, ridge, err};
                have = true;
            }
        }
    }
    return best;
}

std::vector<double> default_gamma_grid() {
    std::vector<double> g;
    for (int k = -6; k <= 4; ++k) g.push_back(std::ldexp(1.0, k));
    return g;
}

std::vector<double> default_ridge_grid() {
    std::vector<double> l;
    for (int k = -6; k <= 1; ++k) l.push_back(std::pow(10.0, k));
    return l;
}

Smoother fit_smoother_cv(const TimeSeries& ts, std::span<const double> gamma_grid,
                         std::span<const double> ridge_grid,
                         std::vector<LoocvChoice>* choices) {
    std::vector<VariableSmoother> vars;
    vars.reserve(static_cast<std::size_t>(ts.dim()));
    if (choices) choices->clear();
    for (Eigen::Index j = 0; j < ts.dim(); ++j) {
        const Eigen::VectorXd y = ts.values().col(j);
        const LoocvChoice c = loocv_select(ts.times(), y, gamma_grid, ridge_grid);
        vars.push_back(fit_variable(ts.times(), y, GaussianKernel(c.gamma), c.ridge));
        if (choices) choices->push_back(c);
    }
    return Smoother(std::move(vars));
}

}  // namespace okode
