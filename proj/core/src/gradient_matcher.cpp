#include "okode/gradient_matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "okode/errors.hpp"

namespace okode {

OdeModel::OdeModel(OperatorKernel kernel, Eigen::MatrixXd anchors, Eigen::MatrixXd coeffs,
                   double ridge)
    : kernel_(std::move(kernel)),
      anchors_(std::move(anchors)),
      coeffs_(std::move(coeffs)),
      ridge_(ridge) {
    if (anchors_.rows() < 1 || anchors_.rows() != coeffs_.rows() ||
        anchors_.cols() != coeffs_.cols()) {
        throw ValidationError("model anchors and coefficients must match in shape (m x p)");
    }
    if (!(ridge_ > 0)) {
        throw ValidationError("model ridge must be positive");
    }
}

Eigen::VectorXd OdeModel::eval(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) {
        throw ValidationError("eval input has dimension " + std::to_string(x.size()) +
                              ", model expects " + std::to_string(dim()));
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    for (Eigen::Index l = 0; l < support_size(); ++l) {
        out += kernel_.eval_block(x, anchors_.row(l).transpose()) * coeffs_.row(l).transpose();
    }
    return out;
}

Eigen::VectorXd OdeModel::stacked_coeffs() const {
    Eigen::VectorXd a(support_size() * dim());
    for (Eigen::Index l = 0; l < support_size(); ++l)
        a.segment(l * dim(), dim()) = coeffs_.row(l).transpose();
    return a;
}

std::vector<double> sample_times(int m, double horizon, TauMode mode, std::uint64_t seed) {
    if (m < 1) throw ValidationError("sample_times needs m >= 1");
    if (!(horizon > 0)) throw ValidationError("sample_times needs a positive horizon");
    std::vector<double> taus(static_cast<std::size_t>(m));
    if (mode == TauMode::regular) {
        const double step = horizon / m;
        for (int i = 0; i < m; ++i) taus[static_cast<std::size_t>(i)] = step * (i + 1);
        taus.back() = horizon;  // exact endpoint
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, horizon);
        for (auto& t : taus) t = horizon - u(rng);  // (0, horizon]
        std::sort(taus.begin(), taus.end());
    }
    return taus;
}

namespace {

Eigen::MatrixXd anchors_from_smoother(const Smoother& g, std::span<const double> taus) {
    Eigen::MatrixXd anchors(static_cast<Eigen::Index>(taus.size()), g.dim());
    for (std::size_t l = 0; l < taus.size(); ++l)
        anchors.row(static_cast<Eigen::Index>(l)) = g.eval(taus[l]).transpose();
    return anchors;
}

Eigen::VectorXd stacked_gdot(const Smoother& g, std::span<const double> taus) {
    const Eigen::Index p = g.dim();
    Eigen::VectorXd gd(static_cast<Eigen::Index>(taus.size()) * p);
    for (std::size_t l = 0; l < taus.size(); ++l)
        gd.segment(static_cast<Eigen::Index>(l) * p, p) = g.eval_derivative(taus[l]);
    return gd;
}

Eigen::MatrixXd unstack(const Eigen::VectorXd& a, Eigen::Index m, Eigen::Index p) {
    Eigen::MatrixXd out(m, p);
    for (Eigen::Index l = 0; l < m; ++l) out.row(l) = a.segment(l * p, p).transpose();
    return out;
}

}  // namespace

OdeModel fit_ridge(const Smoother& g, std::span<const double> taus,
                   const OperatorKernel& kernel, double lambda_h) {
    if (!(lambda_h > 0)) {
        throw ValidationError("fit_ridge needs lambda_h > 0");
    }
    if (taus.empty()) {
        throw ValidationError("fit_ridge needs at least one tau");
    }
    const Eigen::Index p = g.dim();
    const Eigen::Index m = static_cast<Eigen::Index>(taus.size());
    const Eigen::MatrixXd anchors = anchors_from_smoother(g, taus);
    const Eigen::VectorXd gd = stacked_gdot(g, taus);

    Eigen::MatrixXd K = kernel.block_gram(anchors);
    K.diagonal().array() += lambda_h;
    Eigen::LDLT<Eigen::MatrixXd> solver(K);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("gradient-matching system factorization failed");
    }
    const Eigen::VectorXd a = solver.solve(gd);
    const double rel = (K * a - gd).norm() / std::max(gd.norm(), 1e-300);
    if (!a.allFinite() || rel > 1e-8) {
        throw NumericalError("gradient-matching solve left relative residual " +
                             std::to_string(rel));
    }
    return OdeModel(kernel, anchors, unstack(a, m, p), lambda_h);
}

MultiModel::MultiModel(std::vector<OdeModel> models, double sim_weight)
    : models_(std::move(models)), sim_weight_(sim_weight) {
    if (models_.empty()) {
        throw ValidationError("MultiModel needs at least one model");
    }
    if (sim_weight_ < 0) {
        throw ValidationError("similarity weight must be nonnegative");
    }
}

Eigen::VectorXd MultiModel::consensus(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(models_.front().dim());
    for (const auto& m : models_) out += m.eval(x);
    return out / static_cast<double>(models_.size());
}

MultiSystem assemble_multi_system(std::span<const Smoother> smoothers,
                                  std::span<const double> taus,
                                  const OperatorKernel& kernel) {
    if (smoothers.empty()) throw ValidationError("fit_multi needs at least one series");
    const std::size_t r = smoothers.size();
    const Eigen::Index p = smoothers[0].dim();
    const Eigen::Index m = static_cast<Eigen::Index>(taus.size());
    const Eigen::Index blk = m * p;

    MultiSystem sys;
    sys.anchors.reserve(r);
    for (const auto& s : smoothers) {
        if (s.dim() != p) throw ValidationError("multi-series smoothers must share p");
        sys.anchors.push_back(anchors_from_smoother(s, taus));
    }
    sys.full_gram.setZero(static_cast<Eigen::Index>(r) * blk, static_cast<Eigen::Index>(r) * blk);
    sys.diag_gram.setZero(static_cast<Eigen::Index>(r) * blk, static_cast<Eigen::Index>(r) * blk);
    sys.gdot.resize(static_cast<Eigen::Index>(r) * blk);
    for (std::size_t i = 0; i < r; ++i) {
        sys.gdot.segment(static_cast<Eigen::Index>(i) * blk, blk) =
            stacked_gdot(smoothers[i], taus);
        for (std::size_t j = i; j < r; ++j) {
            const Eigen::MatrixXd Kij = kernel.cross_block_gram(sys.anchors[i], sys.anchors[j]);
            sys.full_gram.block(static_cast<Eigen::Index>(i) * blk,
                                static_cast<Eigen::Index>(j) * blk, blk, blk) = Kij;
            if (j != i) {
                sys.full_gram.block(static_cast<Eigen::Index>(j) * blk,
                                    static_cast<Eigen::Index>(i) * blk, blk, blk) =
                    Kij.transpose();
            } else {
                sys.diag_gram.block(static_cast<Eigen::Index>(i) * blk,
                                    static_cast<Eigen::Index>(i) * blk, blk, blk) = Kij;
            }
        }
    }
    return sys;
}

double multi_objective(const Eigen::MatrixXd& diag_gram, const Eigen::MatrixXd& full_gram,
                       const Eigen::VectorXd& gdot, double lambda_h, double lambda_sim,
                       std::size_t r, const Eigen::VectorXd& a) {
    const Eigen::VectorXd Da = diag_gram * a;
    const double data = 0.5 * (gdot - Da).squaredNorm();
    const double ridge = 0.5 * lambda_h * a.dot(Da);
    const double sim =
        0.5 * lambda_sim * (static_cast<double>(r) * a.dot(Da) - a.dot(full_gram * a));
    return data + ridge + sim;
}

MultiModel fit_multi(std::span<const Smoother> smoothers, std::span<const double> taus,
                     const OperatorKernel& kernel, double lambda_h, double lambda_sim,
                     const MultiFitOptions& options) {
    if (!(lambda_h > 0)) {
        throw ValidationError("fit_multi needs lambda_h > 0");
    }
    if (lambda_sim < 0) {
        throw ValidationError("fit_multi needs lambda_sim >= 0");
    }
    const std::size_t r = smoothers.size();
    MultiSystem sys = assemble_multi_system(smoothers, taus, kernel);
    const Eigen::Index p = smoothers[0].dim();
    const Eigen::Index m = static_cast<Eigen::Index>(taus.size());
    const Eigen::Index blk = m * p;
    const Eigen::Index dim = static_cast<Eigen::Index>(r) * blk;

    // stationarity of the quadratic objective:
    // (D D + lambda_h D + lambda_sim (r D - Kfull)) a = D gdot
    const Eigen::MatrixXd& D = sys.diag_gram;
    Eigen::MatrixXd M = D * D + lambda_h * D +
                        lambda_sim * (static_cast<double>(r) * D - sys.full_gram);
    const Eigen::VectorXd rhs = D * sys.gdot;

    Eigen::VectorXd a(dim);
    if (options.solver == MultiSolver::direct) {
        Eigen::LDLT<Eigen::MatrixXd> solver(M);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("multi-series system factorization failed; "
                                 "lambda_h must be positive");
        }
        a = solver.solve(rhs);
        if (!a.allFinite()) {
            throw NumericalError("multi-series solve produced non-finite coefficients");
        }
    } else {
        // stochastic block-coordinate descent with iterate averaging after
        // the first epoch; step 1/||M||_F
        const double L = M.norm();
        if (!(L > 0)) throw NumericalError("degenerate multi-series system");
        // decoupled ridge warm start
        for (std::size_t i = 0; i < r; ++i) {
            Eigen::MatrixXd Kii =
                D.block(static_cast<Eigen::Index>(i) * blk, static_cast<Eigen::Index>(i) * blk,
                        blk, blk);
            Kii.diagonal().array() += lambda_h;
            a.segment(static_cast<Eigen::Index>(i) * blk, blk) =
                Kii.ldlt().solve(sys.gdot.segment(static_cast<Eigen::Index>(i) * blk, blk));
        }
        std::mt19937_64 rng(options.sgd_seed);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(dim);
        long n_avg = 0;
        const int batch = std::max(options.sgd_batch, 1);
        for (int epoch = 0; epoch < options.sgd_epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(batch)) {
                const std::size_t hi = std::min(at + static_cast<std::size_t>(batch), order.size());
                const Eigen::VectorXd grad = M * a - rhs;
                for (std::size_t q = at; q < hi; ++q) a(order[q]) -= grad(order[q]) / L;
                if (epoch >= 1) {
                    avg += a;
                    ++n_avg;
                }
            }
        }
        if (n_avg > 0) a = avg / static_cast<double>(n_avg);
    }

    std::vector<OdeModel> models;
    models.reserve(r);
    for (std::size_t i = 0; i < r; ++i) {
        models.emplace_back(kernel, sys.anchors[i],
                            unstack(a.segment(static_cast<Eigen::Index>(i) * blk, blk), m, p),
                            lambda_h);
    }
    return MultiModel(std::move(models), lambda_sim);
}

}  // namespace okode
