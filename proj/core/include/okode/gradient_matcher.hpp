#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "okode/operator_kernel.hpp"
#include "okode/smoother.hpp"

namespace okode {

/// Learned vector field h(x) = sum_l K(x, anchor_l) a_l.
class OdeModel {
public:
    /// anchors and coeffs are m x p, one support state / coefficient vector
    /// per row; ridge is the lambda_h the coefficients were fit with.
    OdeModel(OperatorKernel kernel, Eigen::MatrixXd anchors, Eigen::MatrixXd coeffs,
             double ridge);

    Eigen::VectorXd eval(const Eigen::VectorXd& x) const;

    const OperatorKernel& kernel() const noexcept { return kernel_; }
    const Eigen::MatrixXd& anchors() const noexcept { return anchors_; }
    const Eigen::MatrixXd& coeffs() const noexcept { return coeffs_; }
    double ridge() const noexcept { return ridge_; }
    Eigen::Index support_size() const noexcept { return anchors_.rows(); }
    Eigen::Index dim() const noexcept { return anchors_.cols(); }

    /// Coefficients as one stacked vector (a_1; ...; a_m).
    Eigen::VectorXd stacked_coeffs() const;

private:
    OperatorKernel kernel_;
    Eigen::MatrixXd anchors_;
    Eigen::MatrixXd coeffs_;
    double ridge_;
};

enum class TauMode { regular, uniform_random };

/// m evaluation times in (0, T]: an even grid ending at T, or sorted
/// seeded uniforms.
std::vector<double> sample_times(int m, double horizon, TauMode mode, std::uint64_t seed = 0);

/// Closed-form operator-valued kernel ridge fit: (K + lambda_h I) a = gdot,
/// with anchors g(tau_l) and targets gdot(tau_l).
OdeModel fit_ridge(const Smoother& g, std::span<const double> taus,
                   const OperatorKernel& kernel, double lambda_h);

enum class MultiSolver { direct, sgd };

struct MultiFitOptions {
    MultiSolver solver = MultiSolver::direct;
    int sgd_epochs = 20;
    int sgd_batch = 10;
    std::uint64_t sgd_seed = 0;
};

/// Joint fit over r series with the similarity coupling lambda_sim; models
/// share the kernel and the tau grid.
class MultiModel {
public:
    MultiModel(std::vector<OdeModel> models, double sim_weight);

    const std::vector<OdeModel>& models() const noexcept { return models_; }
    std::size_t count() const noexcept { return models_.size(); }
    double sim_weight() const noexcept { return sim_weight_; }

    /// Consensus vector field: the pointwise average of the r models.
    Eigen::VectorXd consensus(const Eigen::VectorXd& x) const;

private:
    std::vector<OdeModel> models_;
    double sim_weight_;
};

MultiModel fit_multi(std::span<const Smoother> smoothers, std::span<const double> taus,
                     const OperatorKernel& kernel, double lambda_h, double lambda_sim,
                     const MultiFitOptions& options = {});

/// Quadratic objective of the multi-series fit at stacked coefficients a:
/// 1/2 ||gdot - diagK a||^2 + lambda_h/2 a' diagK a
/// + lambda_sim/2 a' (r diagK - K) a. Exposed for diagnostics and tests.
double multi_objective(const Eigen::MatrixXd& diag_gram, const Eigen::MatrixXd& full_gram,
                       const Eigen::VectorXd& gdot, double lambda_h, double lambda_sim,
                       std::size_t r, const Eigen::VectorXd& a);

/// Assembles diagK (block diagonal of per-series Grams) and the full r x r
/// block Gram, plus the stacked gdot targets, for the given smoothers/taus.
struct MultiSystem {
    Eigen::MatrixXd diag_gram;
    Eigen::MatrixXd full_gram;
    Eigen::VectorXd gdot;
    std::vector<Eigen::MatrixXd> anchors;  // one m x p matrix per series
};
MultiSystem assemble_multi_system(std::span<const Smoother> smoothers,
                                  std::span<const double> taus,
                                  const OperatorKernel& kernel);

}  // namespace okode
