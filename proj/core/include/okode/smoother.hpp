#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "okode/scalar_kernel.hpp"
#include "okode/timeseries.hpp"

namespace okode {

/// Kernel ridge model for one state variable: g_j(t) = sum_i b_ij k_j(t, t_i).
struct VariableSmoother {
    GaussianKernel kernel;
    double ridge;
    Eigen::VectorXd train_times;
    Eigen::VectorXd coeffs;

    double eval(double t) const;
    double eval_derivative(double t) const;
};

/// Fits (K + ridge I) b = y with a symmetric solve; ridge must be positive.
VariableSmoother fit_variable(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                              const GaussianKernel& kernel, double ridge);

/// Stacked per-variable smoothers sharing one time grid; evaluates g and gdot.
class Smoother {
public:
    explicit Smoother(std::vector<VariableSmoother> variables);

    Eigen::VectorXd eval(double t) const;
    Eigen::VectorXd eval_derivative(double t) const;

    Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(variables_.size()); }
    const VariableSmoother& variable(std::size_t j) const { return variables_.at(j); }
    const Eigen::VectorXd& train_times() const noexcept { return variables_.front().train_times; }

private:
    std::vector<VariableSmoother> variables_;
};

struct LoocvChoice {
    double gamma = 0;
    double ridge = 0;
    double loo_error = 0;
};

/// Exact leave-one-out CV over a (gamma, ridge) grid via the hat-matrix
/// shortcut e_i = (y_i - yhat_i) / (1 - H_ii); falls back to explicit refits
/// when a leverage approaches 1. Ties prefer larger ridge, then smaller gamma.
LoocvChoice loocv_select(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                         std::span<const double> gamma_grid, std::span<const double> ridge_grid);

/// Explicit n-refit leave-one-out error; the slow path and the test oracle.
double loocv_explicit(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                      double gamma, double ridge);

std::vector<double> default_gamma_grid();   // 2^-6 .. 2^4
std::vector<double> default_ridge_grid();   // 10^-6 .. 10^1

/// Runs loocv_select per variable and fits the chosen models.
Smoother fit_smoother_cv(const TimeSeries& ts,
                         std::span<const double> gamma_grid,
                         std::span<const double> ridge_grid,
                         std::vector<LoocvChoice>* choices = nullptr);

}  // namespace okode
