#include "okode/kernel_learn.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>

#include "okode/errors.hpp"

namespace okode {

StructureMatrix project_psd(const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols()) throw ValidationError("project_psd needs a square matrix");
    const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) {
        throw NumericalError("project_psd eigendecomposition failed");
    }
    const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd out =
        es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    out = 0.5 * (out + out.transpose());  // kill rounding asymmetry
    return StructureMatrix(std::move(out));
}

double structure_loss(const Eigen::MatrixXd& Gdot, const Eigen::MatrixXd& K,
                      const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, double lambda_h) {
    const Eigen::MatrixXd H = C * A * K;  // predictions, one column per tau
    return 0.5 * (Gdot - H).squaredNorm() + lambda_h * (C * A * K * A.transpose()).trace();
}

Eigen::MatrixXd structure_gradient(const Eigen::MatrixXd& Gdot, const Eigen::MatrixXd& K,
                                   const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                   double lambda_h) {
    const Eigen::MatrixXd AK = A * K;
    const Eigen::MatrixXd E = Gdot - C * AK;
    const Eigen::MatrixXd G = -E * AK.transpose() + lambda_h * AK * A.transpose();
    return 0.5 * (G + G.transpose());
}

StructureMatrix fit_structure(const Eigen::MatrixXd& Gdot, const Eigen::MatrixXd& K,
                              const Eigen::MatrixXd& A, const StructureMatrix& init,
                              double lambda_h, const KernelLearnConfig& cfg) {
    if (cfg.inner_iters < 1) throw ValidationError("fit_structure needs inner_iters >= 1");
    // the Hessian acts as Delta -> Delta (AK)(AK)', so its Frobenius bound
    // is the safe step scale
    const Eigen::MatrixXd AK = A * K;
    const double lipschitz = (AK * AK.transpose()).norm();
    if (!(lipschitz > 0)) {
        return init;  // A = 0: the loss does not depend on C
    }

    Eigen::MatrixXd C = init.matrix();
    double loss = structure_loss(Gdot, K, A, C, lambda_h);
    const double step = 1.0 / lipschitz;
    for (int it = 0; it < cfg.inner_iters; ++it) {
        const Eigen::MatrixXd grad = structure_gradient(Gdot, K, A, C, lambda_h);
        if (grad.cwiseAbs().maxCoeff() == 0.0) break;
        double trial_step = step;
        bool moved = false;
        // halve the step until the projected move stops increasing the loss
        for (int halving = 0; halving < 40; ++halving) {
            const Eigen::MatrixXd trial = project_psd(C - trial_step * grad).matrix();
            const double trial_loss = structure_loss(Gdot, K, A, trial, lambda_h);
            if (trial_loss <= loss) {
                C = trial;
                loss = trial_loss;
                moved = true;
                break;
            }
            trial_step *= 0.5;
        }
        if (!moved) break;  // no descent direction left at this scale
    }
    return StructureMatrix(std::move(C));
}

std::pair<OdeModel, StructureMatrix> alternate_fit(const Smoother& g,
                                                   std::span<const double> taus,
                                                   const GaussianKernel& scalar,
                                                   double lambda_h,
                                                   const KernelLearnConfig& cfg) {
    if (cfg.outer_iters < 1) throw ValidationError("alternate_fit needs outer_iters >= 1");
    const Eigen::Index p = g.dim();
    StructureMatrix C = cfg.init_C.size() > 0 ? StructureMatrix(cfg.init_C)
                                              : StructureMatrix::identity(p);

    const Eigen::Index m = static_cast<Eigen::Index>(taus.size());
    Eigen::MatrixXd anchors(m, p);
    Eigen::MatrixXd Gdot(p, m);
    for (Eigen::Index l = 0; l < m; ++l) {
        anchors.row(l) = g.eval(taus[static_cast<std::size_t>(l)]).transpose();
        Gdot.col(l) = g.eval_derivative(taus[static_cast<std::size_t>(l)]);
    }
    const Eigen::MatrixXd K = scalar.gram(anchors, anchors);

    std::optional<OdeModel> model;
    double prev_loss = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < cfg.outer_iters; ++outer) {
        model = fit_ridge(g, taus, OperatorKernel::decomposable(scalar, C), lambda_h);
        const Eigen::MatrixXd A = model->coeffs().transpose();  // p x m
        C = fit_structure(Gdot, K, A, C, lambda_h, cfg);
        const double loss = structure_loss(Gdot, K, A, C.matrix(), lambda_h);
        if (std::isfinite(prev_loss) &&
            std::abs(prev_loss - loss) < cfg.tol * std::max(std::abs(prev_loss), 1e-300)) {
            break;
        }
        prev_loss = loss;
    }
    return {std::move(*model), std::move(C)};
}

}  // namespace okode
