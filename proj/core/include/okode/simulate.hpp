#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "okode/gradient_matcher.hpp"
#include "okode/smoother.hpp"
#include "okode/timeseries.hpp"

namespace okode {

struct FhnParams {
    double a = 0.2;
    double b = 0.2;
    double c = 3.0;
};

Eigen::Vector2d fhn_rhs(const FhnParams& p, const Eigen::Vector2d& x);

/// Rate constants k1..k11 plus Michaelis constants Km1..Km6 of the
/// four-species calcium oscillator; R_i(x) = x / (x + Km_i).
struct CalciumParams {
    std::array<double, 11> k{};
    std::array<double, 6> km{};

    /// Shipped defaults: an oscillatory regime with period ~11.6 time units
    /// (>= 2 full cycles on the default [0, 30] window).
    static CalciumParams defaults();
};

Eigen::Vector4d calcium_rhs(const CalciumParams& p, const Eigen::Vector4d& x);

/// Key-value parameter files (`name value` lines, # comments).
FhnParams load_fhn_params(const std::string& path);
CalciumParams load_calcium_params(const std::string& path);
void save_fhn_params(const FhnParams& p, const std::string& path);
void save_calcium_params(const CalciumParams& p, const std::string& path);

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct IntegrationResult {
    Eigen::MatrixXd states;        // one row per grid time; rows past the
                                   // blow-up point are zero
    Eigen::Index rows_completed = 0;
    bool blew_up = false;
    double t_reached = 0;
};

/// Classic fixed-step RK4 with `substeps` uniform sub-intervals per grid
/// interval; stops early (without throwing) when the state leaves the finite
/// range.
IntegrationResult integrate_rk4_partial(const VectorField& f, const Eigen::VectorXd& x0,
                                        std::span<const double> t_grid, int substeps);

/// Throwing wrapper: BlowUpError on non-finite states.
Eigen::MatrixXd integrate_rk4(const VectorField& f, const Eigen::VectorXd& x0,
                              std::span<const double> t_grid, int substeps);

enum class NoiseMode { gaussian, zero_truncated_gaussian };

struct NoiseSpec {
    double variance = 0.1;
    NoiseMode mode = NoiseMode::gaussian;
    std::uint64_t seed = 0;
};

/// Adds iid N(0, variance) per entry; the zero-truncated mode clamps negative
/// observations to zero afterwards. Deterministic under the seed.
TimeSeries add_noise(const Eigen::VectorXd& times, const Eigen::MatrixXd& trajectory,
                     const NoiseSpec& spec);

/// sum_l ||y_l - g(t_l)||^2 over all observations.
double smoothing_error(const Smoother& g, const TimeSeries& ts);

/// sum_l ||gdot(tau_l) - h(g(tau_l))||^2 over the model grid.
double gm_error(const OdeModel& model, const Smoother& g, std::span<const double> taus);

enum class TrajectoryMode {
    self_consistent,  // integrate xdot = h(x) from g(t_0)
    along_g           // g(t_0) + cumulative quadrature of h(g(tau))
};

/// sum_{l>=1} ||y_l - xhat(t_l)||^2. On blow-up the partial sum over the
/// points reached is returned; trajectory_error_detail carries the flag.
double trajectory_error(const OdeModel& model, const Smoother& g, const TimeSeries& ts,
                        TrajectoryMode mode = TrajectoryMode::self_consistent,
                        int substeps = 20);

struct TrajectoryErrorDetail {
    double error = 0;
    bool blew_up = false;
    Eigen::Index points_compared = 0;
};
TrajectoryErrorDetail trajectory_error_detail(const OdeModel& model, const Smoother& g,
                                              const TimeSeries& ts,
                                              TrajectoryMode mode = TrajectoryMode::self_consistent,
                                              int substeps = 20);

/// Mean squared distance between two fields' trajectories from each initial
/// condition (v, r) on the grid; +inf where either integration blows up.
Eigen::MatrixXd error_map(const VectorField& learned, const VectorField& truth,
                          std::span<const double> v_grid, std::span<const double> r_grid,
                          double horizon, int n_points, int substeps = 20);

}  // namespace okode
