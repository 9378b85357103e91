#include "okode/scalar_kernel.hpp"

#include <cmath>
#include <string>

#include "okode/errors.hpp"

namespace okode {

GaussianKernel::GaussianKernel(double gamma) : gamma_(gamma) {
    if (!(gamma > 0) || !std::isfinite(gamma)) {
        throw ValidationError("Gaussian kernel needs gamma > 0, got " + std::to_string(gamma));
    }
}

double GaussianKernel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
    if (x.size() != z.size()) {
        throw ValidationError("kernel arguments differ in dimension: " +
                              std::to_string(x.size()) + " vs " + std::to_string(z.size()));
    }
    return std::exp(-gamma_ * (x - z).squaredNorm());
}

double GaussianKernel::eval(double x, double z) const noexcept {
    const double d = x - z;
    return std::exp(-gamma_ * d * d);
}

Eigen::MatrixXd GaussianKernel::gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) const {
    if (X.cols() != Z.cols()) {
        throw ValidationError("gram point lists differ in dimension: " +
                              std::to_string(X.cols()) + " vs " + std::to_string(Z.cols()));
    }
    Eigen::MatrixXd out(X.rows(), Z.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.rows(); ++j)
            out(i, j) = std::exp(-gamma_ * (X.row(i) - Z.row(j)).squaredNorm());
    return out;
}

Eigen::MatrixXd GaussianKernel::gram(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
    Eigen::MatrixXd out(x.size(), z.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = 0; j < z.size(); ++j) out(i, j) = eval(x(i), z(j));
    return out;
}

double GaussianKernel::time_derivative(double t, double t_i) const noexcept {
    const double d = t - t_i;
    return -2.0 * gamma_ * d * std::exp(-gamma_ * d * d);
}

}  // namespace okode
