#include <benchmark/benchmark.h>

#include <random>

#include "okode/gradient_matcher.hpp"
#include "okode/operator_kernel.hpp"
#include "okode/simulate.hpp"
#include "okode/sparse.hpp"

using namespace okode;

namespace {

Eigen::MatrixXd random_points(int m, int p, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd pts(m, p);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < p; ++j) pts(i, j) = normal(rng);
    return pts;
}

void BM_BlockGramDecomposable(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Eigen::MatrixXd pts = random_points(m, 2, 1);
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2));
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernel.block_gram(pts));
    }
}
BENCHMARK(BM_BlockGramDecomposable)->Arg(101)->Arg(404);

void BM_BlockGramTransformable(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Eigen::MatrixXd pts = random_points(m, 2, 1);
    const OperatorKernel kernel = OperatorKernel::transformable(GaussianKernel(0.5));
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernel.block_gram(pts));
    }
}
BENCHMARK(BM_BlockGramTransformable)->Arg(101);

void BM_RidgeSolve(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Eigen::MatrixXd pts = random_points(m, 2, 2);
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2));
    Eigen::MatrixXd gram = kernel.block_gram(pts);
    gram.diagonal().array() += 0.01;
    const Eigen::VectorXd rhs = random_points(2 * m, 1, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gram.ldlt().solve(rhs).eval());
    }
}
BENCHMARK(BM_RidgeSolve)->Arg(101)->Arg(404);

void BM_SparseFit(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Eigen::MatrixXd pts = random_points(m, 2, 4);
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2));
    const Eigen::MatrixXd gram = kernel.block_gram(pts);
    const Eigen::VectorXd gdot = random_points(2 * m, 1, 5);
    for (auto _ : state) {
        SparseConfig cfg;
        cfg.lambda1 = 0.5;
        cfg.alpha = 0.5;
        cfg.max_iters = 100;
        cfg.tol = 0;  // fixed iteration count for stable timing
        benchmark::DoNotOptimize(fit_sparse_system(gram, gdot, 2, 0.01, cfg));
    }
}
BENCHMARK(BM_SparseFit)->Arg(101);

void BM_Rk4Fhn(benchmark::State& state) {
    const VectorField f = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return fhn_rhs(FhnParams{}, Eigen::Vector2d(x));
    };
    std::vector<double> grid(41);
    for (int i = 0; i < 41; ++i) grid[static_cast<std::size_t>(i)] = 20.0 * i / 40.0;
    const Eigen::Vector2d x0(-1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate_rk4(f, x0, grid, 20));
    }
}
BENCHMARK(BM_Rk4Fhn);

void BM_ModelEval(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const OdeModel model(
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2)),
        random_points(m, 2, 6), random_points(m, 2, 7), 0.01);
    const Eigen::Vector2d x(0.3, -0.4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.eval(x));
    }
}
BENCHMARK(BM_ModelEval)->Arg(101)->Arg(404);

}  // namespace

BENCHMARK_MAIN();
