#include "okode/operator_kernel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>

#include "okode/errors.hpp"

namespace okode {

StructureMatrix::StructureMatrix(Eigen::MatrixXd C) : C_(std::move(C)) {
    if (C_.rows() != C_.cols() || C_.rows() < 1) {
        throw ValidationError("structure matrix must be square and non-empty");
    }
    if (!C_.allFinite()) {
        throw ValidationError("structure matrix entries must be finite");
    }
    if ((C_ - C_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ValidationError("structure matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw NumericalError("structure matrix eigendecomposition failed");
    }
    const double floor = -1e-10 * std::max(C_.trace(), 1.0);
    if (es.eigenvalues().minCoeff() < floor) {
        throw ValidationError("structure matrix must be positive semidefinite");
    }
}

StructureMatrix StructureMatrix::identity(Eigen::Index p) {
    return StructureMatrix(Eigen::MatrixXd::Identity(p, p));
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::decomposable: return "decomposable";
        case KernelFamily::transformable: return "transformable";
        case KernelFamily::hadamard: return "hadamard";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "decomposable") return KernelFamily::decomposable;
    if (name == "transformable") return KernelFamily::transformable;
    if (name == "hadamard") return KernelFamily::hadamard;
    throw ValidationError("unknown kernel family '" + name + "'");
}

OperatorKernel::OperatorKernel(KernelFamily family, GaussianKernel scalar,
                               std::optional<StructureMatrix> structure)
    : family_(family), scalar_(scalar), structure_(std::move(structure)) {}

OperatorKernel OperatorKernel::decomposable(GaussianKernel scalar, StructureMatrix structure) {
    return OperatorKernel(KernelFamily::decomposable, scalar, std::move(structure));
}

OperatorKernel OperatorKernel::transformable(GaussianKernel scalar) {
    return OperatorKernel(KernelFamily::transformable, scalar, std::nullopt);
}

OperatorKernel OperatorKernel::hadamard(GaussianKernel scalar, StructureMatrix structure) {
    return OperatorKernel(KernelFamily::hadamard, scalar, std::move(structure));
}

OperatorKernel OperatorKernel::make(KernelFamily family, GaussianKernel scalar,
                                    std::optional<StructureMatrix> structure) {
    if (family == KernelFamily::transformable) {
        if (structure.has_value()) {
            throw ValidationError("transformable kernel takes no structure matrix");
        }
        return transformable(scalar);
    }
    if (!structure.has_value()) {
        throw ValidationError(to_string(family) + " kernel requires a structure matrix");
    }
    return OperatorKernel(family, scalar, std::move(structure));
}

const StructureMatrix& OperatorKernel::structure() const {
    if (!structure_) {
        throw ValidationError(to_string(family_) + " kernel has no structure matrix");
    }
    return *structure_;
}

Eigen::MatrixXd OperatorKernel::eval_block(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& z) const {
    if (x.size() != z.size()) {
        throw ValidationError("eval_block arguments differ in dimension");
    }
    const Eigen::Index p = x.size();
    switch (family_) {
        case KernelFamily::decomposable:
            return scalar_.eval(x, z) * structure().matrix();
        case KernelFamily::transformable: {
            Eigen::MatrixXd out(p, p);
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = 0; j < p; ++j) out(i, j) = scalar_.eval(x(i), z(j));
            return out;
        }
        case KernelFamily::hadamard: {
            Eigen::MatrixXd tf(p, p);
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = 0; j < p; ++j) tf(i, j) = scalar_.eval(x(i), z(j));
            return (scalar_.eval(x, z) * structure().matrix()).cwiseProduct(tf);
        }
    }
    throw ValidationError("unreachable kernel family");
}

Eigen::MatrixXd OperatorKernel::cross_block_gram(const Eigen::MatrixXd& points_a,
                                                 const Eigen::MatrixXd& points_b) const {
    if (points_a.cols() != points_b.cols()) {
        throw ValidationError("cross_block_gram point lists differ in dimension");
    }
    const Eigen::Index p = points_a.cols();
    const Eigen::Index ma = points_a.rows();
    const Eigen::Index mb = points_b.rows();
    Eigen::MatrixXd out(ma * p, mb * p);
    for (Eigen::Index l = 0; l < ma; ++l)
        for (Eigen::Index s = 0; s < mb; ++s)
            out.block(l * p, s * p, p, p) =
                eval_block(points_a.row(l).transpose(), points_b.row(s).transpose());
    return out;
}

Eigen::MatrixXd OperatorKernel::block_gram(const Eigen::MatrixXd& points) const {
    if (points.rows() < 1) {
        throw ValidationError("block_gram needs at least one point");
    }
    // decomposable factorizes as scalar Gram entries times C; assemble that
    // way and let cross_block_gram stay the generic path
    if (family_ == KernelFamily::decomposable) {
        const Eigen::Index m = points.rows();
        const Eigen::Index p = points.cols();
        const Eigen::MatrixXd ks = scalar_.gram(points, points);
        const Eigen::MatrixXd& C = structure().matrix();
        Eigen::MatrixXd out(m * p, m * p);
        for (Eigen::Index l = 0; l < m; ++l)
            for (Eigen::Index s = 0; s < m; ++s) out.block(l * p, s * p, p, p) = ks(l, s) * C;
        return out;
    }
    return cross_block_gram(points, points);
}

}  // namespace okode
