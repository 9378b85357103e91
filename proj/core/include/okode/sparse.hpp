#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "okode/gradient_matcher.hpp"

namespace okode {

struct SparseConfig {
    double lambda1 = 0.0;   // overall sparsity weight
    double alpha = 0.5;     // mix: 1 = pure group penalty, 0 = pure l1
    int max_iters = 5000;
    double tol = 1e-9;      // relative objective change stopping rule
};

/// Componentwise soft threshold sign(u_i) max(|u_i| - mu, 0).
Eigen::VectorXd prox_l1(const Eigen::VectorXd& u, double mu);

/// Blockwise shrinkage (1 - mu/||u_I||)_+ u_I over an explicit partition.
Eigen::VectorXd prox_group(const Eigen::VectorXd& u, double mu,
                           const std::vector<std::vector<Eigen::Index>>& groups);

/// Same on contiguous blocks of size block_size.
Eigen::VectorXd prox_group(const Eigen::VectorXd& u, double mu, Eigen::Index block_size);

/// Sparse group lasso prox: group shrinkage (weight lambda*alpha) applied to
/// the soft-thresholded input (weight lambda*(1-alpha)).
Eigen::VectorXd prox_sparse_group(const Eigen::VectorXd& u, double lambda, double alpha,
                                  Eigen::Index block_size);

struct SparseIterRecord {
    int iter = 0;
    double objective = 0;
    double step = 0;
    int zero_groups = 0;
};

struct SparseFitResult {
    OdeModel model;
    int iterations = 0;
    double objective = 0;
    bool converged = false;
};

/// Accelerated proximal gradient on the gradient-matching objective with the
/// sparse group lasso penalty. Step 1/L with L = ||K + lambda_h I||_F;
/// initialized at the closed-form ridge solution. Appends one record per
/// iteration to `trace` when given.
SparseFitResult fit_sparse(const Smoother& g, std::span<const double> taus,
                           const OperatorKernel& kernel, double lambda_h,
                           const SparseConfig& cfg,
                           std::vector<SparseIterRecord>* trace = nullptr);

/// Same solver on a preassembled system (gram = block Gram over the anchors,
/// gdot = stacked targets); used by warm-started sweeps.
struct SparseSystemFit {
    Eigen::VectorXd coeffs;
    int iterations = 0;
    double objective = 0;
    bool converged = false;
};
SparseSystemFit fit_sparse_system(const Eigen::MatrixXd& gram, const Eigen::VectorXd& gdot,
                                  Eigen::Index block_size, double lambda_h,
                                  const SparseConfig& cfg,
                                  const Eigen::VectorXd* warm_start = nullptr,
                                  std::vector<SparseIterRecord>* trace = nullptr);

/// Full sparse objective (smooth part + penalties) at stacked coefficients.
double sparse_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& gdot,
                        double lambda_h, double lambda1, double alpha,
                        Eigen::Index block_size, const Eigen::VectorXd& a);

struct SparsityReport {
    Eigen::Index zero_coeffs = 0;
    Eigen::Index zero_groups = 0;
    double coeff_fraction = 0;
    double group_fraction = 0;
};

/// Counts coefficients and whole anchor blocks below tol in absolute value.
SparsityReport sparsity_report(const OdeModel& model, double tol = 1e-8);

}  // namespace okode
