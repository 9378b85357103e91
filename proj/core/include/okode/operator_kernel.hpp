#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "okode/scalar_kernel.hpp"

namespace okode {

/// Symmetric positive semidefinite output-structure matrix C.
class StructureMatrix {
public:
    /// Validates symmetry (1e-12) and eigenvalues >= -1e-10 * trace.
    explicit StructureMatrix(Eigen::MatrixXd C);

    static StructureMatrix identity(Eigen::Index p);

    const Eigen::MatrixXd& matrix() const noexcept { return C_; }
    Eigen::Index dim() const noexcept { return C_.rows(); }

private:
    Eigen::MatrixXd C_;
};

enum class KernelFamily { decomposable, transformable, hadamard };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Matrix-valued kernel on R^p. Decomposable: k(x,z) C. Transformable:
/// entry (i,j) = k(x_i, z_j) on the scalar coordinates. Hadamard: the
/// entrywise product of the two.
class OperatorKernel {
public:
    static OperatorKernel decomposable(GaussianKernel scalar, StructureMatrix structure);
    static OperatorKernel transformable(GaussianKernel scalar);
    static OperatorKernel hadamard(GaussianKernel scalar, StructureMatrix structure);

    /// Builds by family; throws ValidationError when structure is required
    /// but absent (or present for transformable).
    static OperatorKernel make(KernelFamily family, GaussianKernel scalar,
                               std::optional<StructureMatrix> structure);

    KernelFamily family() const noexcept { return family_; }
    const GaussianKernel& scalar() const noexcept { return scalar_; }
    bool has_structure() const noexcept { return structure_.has_value(); }
    const StructureMatrix& structure() const;

    /// K(x, z), a p x p block.
    Eigen::MatrixXd eval_block(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;

    /// mp x mp block Gram over one point list (points given one per row).
    Eigen::MatrixXd block_gram(const Eigen::MatrixXd& points) const;

    /// (m_a p) x (m_b p) block Gram comparing two point lists.
    Eigen::MatrixXd cross_block_gram(const Eigen::MatrixXd& points_a,
                                     const Eigen::MatrixXd& points_b) const;

private:
    OperatorKernel(KernelFamily family, GaussianKernel scalar,
                   std::optional<StructureMatrix> structure);

    KernelFamily family_;
    GaussianKernel scalar_;
    std::optional<StructureMatrix> structure_;
};

}  // namespace okode
