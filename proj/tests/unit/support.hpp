#pragma once

// Shared test utilities. The solvers and sums here are deliberately naive:
// they serve as oracles independent of the library's Eigen-based paths.

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace test_support {

// Gaussian elimination with partial pivoting; the brute-force linear oracle.
inline Eigen::VectorXd solve_dense(Eigen::MatrixXd A, Eigen::VectorXd b) {
    const Eigen::Index n = A.rows();
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
        if (pivot != col) {
            A.row(pivot).swap(A.row(col));
            std::swap(b(pivot), b(col));
        }
        for (Eigen::Index r = col + 1; r < n; ++r) {
            const double f = A(r, col) / A(col, col);
            A.row(r) -= f * A.row(col);
            b(r) -= f * b(col);
        }
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        double acc = b(r);
        for (Eigen::Index c = r + 1; c < n; ++c) acc -= A(r, c) * x(c);
        x(r) = acc / A(r, r);
    }
    return x;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("okode_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return {};
    std::string out;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, got);
    std::fclose(f);
    return out;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = normal(rng);
    return M;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    return random_matrix(rng, n, 1, scale).col(0);
}

}  // namespace test_support
