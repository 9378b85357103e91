#pragma once

#include <Eigen/Dense>

namespace okode {

/// Gaussian kernel k(x, z) = exp(-gamma * ||x - z||^2).
class GaussianKernel {
public:
    explicit GaussianKernel(double gamma);

    double gamma() const noexcept { return gamma_; }

    double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
    double eval(double x, double z) const noexcept;

    /// Gram matrix between two point lists (one point per row).
    Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) const;
    /// Gram matrix between two lists of scalar points.
    Eigen::MatrixXd gram(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;

    /// d/dt k(t, t_i) = -2 gamma (t - t_i) exp(-gamma (t - t_i)^2).
    double time_derivative(double t, double t_i) const noexcept;

private:
    double gamma_;
};

}  // namespace okode
