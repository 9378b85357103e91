#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>

#include "okode/gradient_matcher.hpp"
#include "okode/operator_kernel.hpp"

namespace okode {

struct KernelLearnConfig {
    int outer_iters = 10;   // alternations between coefficient and C steps
    int inner_iters = 50;   // projected gradient steps per C step
    double tol = 1e-8;      // relative objective change stopping rule
    Eigen::MatrixXd init_C; // empty => identity
};

/// Nearest PSD matrix in Frobenius norm: symmetrize, eigendecompose, clamp
/// negative eigenvalues to zero.
StructureMatrix project_psd(const Eigen::MatrixXd& M);

/// Loss of the decomposable-kernel C step at fixed coefficients:
/// 1/2 ||Gdot - C A K||_F^2 + lambda_h tr(C A K A').
/// Gdot and A are p x m (targets / coefficients as columns), K the m x m
/// scalar Gram over the anchors.
double structure_loss(const Eigen::MatrixXd& Gdot, const Eigen::MatrixXd& K,
                      const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, double lambda_h);

/// Symmetrized gradient of structure_loss in C: sym(-E K A' + lambda_h A K A')
/// with E = Gdot - C A K.
Eigen::MatrixXd structure_gradient(const Eigen::MatrixXd& Gdot, const Eigen::MatrixXd& K,
                                   const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                   double lambda_h);

/// Projected gradient descent on structure_loss with step 1/L_C,
/// L_C = ||A K K A'||_F^2, halving the step whenever a move would increase
/// the loss. A = 0 returns the initial C unchanged.
StructureMatrix fit_structure(const Eigen::MatrixXd& Gdot, const Eigen::MatrixXd& K,
                              const Eigen::MatrixXd& A, const StructureMatrix& init,
                              double lambda_h, const KernelLearnConfig& cfg);

/// Alternates {ridge fit of coefficients at current C; C step at current
/// coefficients} for the decomposable kernel. Returns the model from the
/// last coefficient step together with the final C.
std::pair<OdeModel, StructureMatrix> alternate_fit(const Smoother& g,
                                                   std::span<const double> taus,
                                                   const GaussianKernel& scalar,
                                                   double lambda_h,
                                                   const KernelLearnConfig& cfg);

}  // namespace okode
