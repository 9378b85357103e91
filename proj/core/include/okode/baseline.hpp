#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "okode/timeseries.hpp"

namespace okode {

/// Coefficients of the two cubic polynomials in (V, R):
/// Vdot = p1 V + p2 V^2 + p3 V^3 + p4 R + p5 R^2 + p6 R^3 + p7
/// Rdot = p8 V + p9 V^2 + p10 V^3 + p11 R + p12 R^2 + p13 R^3 + p14
struct CubicModelParams {
    std::array<double, 14> p{};
};

Eigen::Vector2d cubic_rhs(const CubicModelParams& params, const Eigen::Vector2d& x);

struct NelderMeadOptions {
    int max_iters = 2000;
    double tol = 1e-12;          // relative simplex value spread
    double xtol = 1e-9;          // simplex diameter
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0;
    int iterations = 0;
    int evaluations = 0;
};

/// Downhill simplex with fminsearch-style initial simplex (5% steps, 0.00025
/// on zero coordinates).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opts = {});

enum class RhsFamily { fhn3, cubic14 };

int parameter_count(RhsFamily family);

struct RestartRecord {
    int restart = 0;
    double mse = 0;
    Eigen::VectorXd params;
};

struct ParametricFit {
    Eigen::VectorXd params;
    double mse = 0;              // per-observation mean of the fit objective
    std::vector<RestartRecord> restarts;
};

/// Simulate-and-compare least squares: integrates the candidate RHS from the
/// first observation and minimizes the squared mismatch with Nelder-Mead,
/// restarted from N(0,1) draws. Trajectories passing ||x|| > 1e6 score +inf.
ParametricFit fit_parametric(RhsFamily family, const TimeSeries& ts, int restarts,
                             std::uint64_t seed, int substeps = 10);

}  // namespace okode
