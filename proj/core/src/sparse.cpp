#include "okode/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "okode/errors.hpp"

namespace okode {

Eigen::VectorXd prox_l1(const Eigen::VectorXd& u, double mu) {
    if (mu < 0) throw ValidationError("prox_l1 needs mu >= 0");
    Eigen::VectorXd out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double mag = std::abs(u(i)) - mu;
        out(i) = mag > 0 ? (u(i) > 0 ? mag : -mag) : 0.0;
    }
    return out;
}

Eigen::VectorXd prox_group(const Eigen::VectorXd& u, double mu,
                           const std::vector<std::vector<Eigen::Index>>& groups) {
    if (mu < 0) throw ValidationError("prox_group needs mu >= 0");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
    std::vector<bool> seen(static_cast<std::size_t>(u.size()), false);
    for (const auto& g : groups) {
        if (g.empty()) throw ValidationError("prox_group: empty group");
        double norm2 = 0;
        for (Eigen::Index idx : g) {
            if (idx < 0 || idx >= u.size() || seen[static_cast<std::size_t>(idx)]) {
                throw ValidationError("prox_group: groups must partition the indices");
            }
            seen[static_cast<std::size_t>(idx)] = true;
            norm2 += u(idx) * u(idx);
        }
        const double norm = std::sqrt(norm2);
        const double factor = norm > mu ? 1.0 - mu / norm : 0.0;
        for (Eigen::Index idx : g) out(idx) = factor * u(idx);
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
        throw ValidationError("prox_group: groups must cover all indices");
    }
    return out;
}

Eigen::VectorXd prox_group(const Eigen::VectorXd& u, double mu, Eigen::Index block_size) {
    if (block_size < 1 || u.size() % block_size != 0) {
        throw ValidationError("prox_group: block size must divide the dimension");
    }
    if (mu < 0) throw ValidationError("prox_group needs mu >= 0");
    Eigen::VectorXd out(u.size());
    for (Eigen::Index l = 0; l < u.size() / block_size; ++l) {
        const auto seg = u.segment(l * block_size, block_size);
        const double norm = seg.norm();
        const double factor = norm > mu ? 1.0 - mu / norm : 0.0;
        out.segment(l * block_size, block_size) = factor * seg;
    }
    return out;
}

Eigen::VectorXd prox_sparse_group(const Eigen::VectorXd& u, double lambda, double alpha,
                                  Eigen::Index block_size) {
    if (lambda < 0) throw ValidationError("prox_sparse_group needs lambda >= 0");
    if (alpha < 0 || alpha > 1) throw ValidationError("prox_sparse_group needs alpha in [0,1]");
    return prox_group(prox_l1(u, lambda * (1.0 - alpha)), lambda * alpha, block_size);
}

namespace {

int count_zero_groups(const Eigen::VectorXd& a, Eigen::Index block_size, double tol) {
    int zeros = 0;
    for (Eigen::Index l = 0; l < a.size() / block_size; ++l) {
        if (a.segment(l * block_size, block_size).cwiseAbs().maxCoeff() < tol) ++zeros;
    }
    return zeros;
}

double penalty(const Eigen::VectorXd& a, double lambda1, double alpha, Eigen::Index block_size) {
    double groups = 0;
    for (Eigen::Index l = 0; l < a.size() / block_size; ++l)
        groups += a.segment(l * block_size, block_size).norm();
    return lambda1 * (1.0 - alpha) * a.lpNorm<1>() + lambda1 * alpha * groups;
}

}  // namespace

double sparse_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& gdot,
                        double lambda_h, double lambda1, double alpha,
                        Eigen::Index block_size, const Eigen::VectorXd& a) {
    const Eigen::VectorXd Ka = gram * a;
    return 0.5 * (gdot - Ka).squaredNorm() + 0.5 * lambda_h * a.dot(Ka) +
           penalty(a, lambda1, alpha, block_size);
}

SparseSystemFit fit_sparse_system(const Eigen::MatrixXd& gram, const Eigen::VectorXd& gdot,
                                  Eigen::Index block_size, double lambda_h,
                                  const SparseConfig& cfg, const Eigen::VectorXd* warm_start,
                                  std::vector<SparseIterRecord>* trace) {
    if (!(lambda_h > 0)) throw ValidationError("fit_sparse needs lambda_h > 0");
    if (cfg.lambda1 < 0) throw ValidationError("fit_sparse needs lambda1 >= 0");
    if (cfg.alpha < 0 || cfg.alpha > 1) throw ValidationError("fit_sparse needs alpha in [0,1]");
    const Eigen::Index dim = gdot.size();

    Eigen::MatrixXd ridge_gram = gram;
    ridge_gram.diagonal().array() += lambda_h;

    // smooth gradient G(a) = K((K + lambda_h I)a - gdot) = M2 a - b;
    // its Lipschitz constant is ||M2||_2, bounded by the Frobenius norm
    const Eigen::MatrixXd M2 = gram * ridge_gram;
    const Eigen::VectorXd b = gram * gdot;
    const double L = M2.norm();

    Eigen::VectorXd a(dim);
    if (warm_start) {
        a = *warm_start;
    } else {
        a = ridge_gram.ldlt().solve(gdot);  // closed-form ridge start
    }

    auto objective = [&](const Eigen::VectorXd& v) {
        return sparse_objective(gram, gdot, lambda_h, cfg.lambda1, cfg.alpha, block_size, v);
    };

    Eigen::VectorXd extrap = a;
    double t = 1.0;
    double obj = objective(a);
    Eigen::VectorXd best = a;
    double best_obj = obj;
    int iterations = 0;
    bool converged = false;

    for (int it = 0; it < cfg.max_iters; ++it) {
        const Eigen::VectorXd grad = M2 * extrap - b;
        Eigen::VectorXd next =
            prox_sparse_group(extrap - grad / L, cfg.lambda1 / L, cfg.alpha, block_size);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        extrap = next + ((t - 1.0) / t_next) * (next - a);
        a = next;
        t = t_next;

        const double new_obj = objective(a);
        if (!std::isfinite(new_obj)) {
            throw NumericalError("sparse fit diverged (non-finite objective)");
        }
        iterations = it + 1;
        if (trace) {
            trace->push_back(SparseIterRecord{iterations, new_obj, 1.0 / L,
                                              count_zero_groups(a, block_size, 1e-8)});
        }
        if (new_obj < best_obj) {
            best = a;
            best_obj = new_obj;
        }
        const double rel = std::abs(new_obj - obj) / std::max(std::abs(obj), 1e-300);
        obj = new_obj;
        if (rel < cfg.tol) {
            converged = true;
            break;
        }
    }

    return SparseSystemFit{best, iterations, best_obj, converged};
}

SparseFitResult fit_sparse(const Smoother& g, std::span<const double> taus,
                           const OperatorKernel& kernel, double lambda_h,
                           const SparseConfig& cfg, std::vector<SparseIterRecord>* trace) {
    const Eigen::Index p = g.dim();
    const Eigen::Index m = static_cast<Eigen::Index>(taus.size());
    Eigen::MatrixXd anchors(m, p);
    Eigen::VectorXd gdot(m * p);
    for (Eigen::Index l = 0; l < m; ++l) {
        anchors.row(l) = g.eval(taus[static_cast<std::size_t>(l)]).transpose();
        gdot.segment(l * p, p) = g.eval_derivative(taus[static_cast<std::size_t>(l)]);
    }
    const Eigen::MatrixXd gram = kernel.block_gram(anchors);
    SparseSystemFit fit = fit_sparse_system(gram, gdot, p, lambda_h, cfg, nullptr, trace);

    Eigen::MatrixXd coeffs(m, p);
    for (Eigen::Index l = 0; l < m; ++l) coeffs.row(l) = fit.coeffs.segment(l * p, p).transpose();
    return SparseFitResult{OdeModel(kernel, anchors, coeffs, lambda_h), fit.iterations,
                           fit.objective, fit.converged};
}

SparsityReport sparsity_report(const OdeModel& model, double tol) {
    if (!(tol > 0)) throw ValidationError("sparsity_report needs tol > 0");
    SparsityReport rep;
    const Eigen::MatrixXd& A = model.coeffs();
    for (Eigen::Index l = 0; l < A.rows(); ++l) {
        bool group_zero = true;
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            if (std::abs(A(l, j)) < tol) {
                ++rep.zero_coeffs;
            } else {
                group_zero = false;
            }
        }
        if (group_zero) ++rep.zero_groups;
    }
    rep.coeff_fraction = static_cast<double>(rep.zero_coeffs) / static_cast<double>(A.size());
    rep.group_fraction = static_cast<double>(rep.zero_groups) / static_cast<double>(A.rows());
    return rep;
}

}  // namespace okode
