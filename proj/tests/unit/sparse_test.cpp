#include <doctest.h>

#include <cmath>
#include <random>

#include "okode/errors.hpp"
#include "okode/simulate.hpp"
#include "okode/sparse.hpp"
#include "support.hpp"

using namespace okode;

namespace {

// two-stage dense grid search; the prox oracle on 2-d instances
Eigen::Vector2d grid_argmin(const std::function<double(const Eigen::Vector2d&)>& f,
                            double lo, double hi, double coarse, double fine) {
    Eigen::Vector2d best(lo, lo);
    double best_val = f(best);
    for (double x = lo; x <= hi; x += coarse) {
        for (double y = lo; y <= hi; y += coarse) {
            const Eigen::Vector2d v(x, y);
            const double val = f(v);
            if (val < best_val) {
                best_val = val;
                best = v;
            }
        }
    }
    Eigen::Vector2d refined = best;
    for (double x = best(0) - coarse; x <= best(0) + coarse; x += fine) {
        for (double y = best(1) - coarse; y <= best(1) + coarse; y += fine) {
            const Eigen::Vector2d v(x, y);
            const double val = f(v);
            if (val < best_val) {
                best_val = val;
                refined = v;
            }
        }
    }
    return refined;
}

Smoother fhn_desk_smoother(int n = 21, double t_end = 10.0, std::uint64_t seed = 2) {
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = t_end * i / (n - 1);
    const VectorField f = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return fhn_rhs(FhnParams{}, Eigen::Vector2d(x));
    };
    const Eigen::MatrixXd truth = integrate_rk4(f, Eigen::Vector2d(-1, 1), grid, 20);
    Eigen::VectorXd times = Eigen::Map<const Eigen::VectorXd>(grid.data(), n);
    const TimeSeries ts = add_noise(times, truth, NoiseSpec{0.05, NoiseMode::gaussian, seed});
    std::vector<VariableSmoother> vars;
    for (Eigen::Index j = 0; j < 2; ++j)
        vars.push_back(fit_variable(ts.times(), ts.values().col(j), GaussianKernel(0.5), 0.05));
    return Smoother(std::move(vars));
}

}  // namespace

TEST_SUITE("sparse") {

TEST_CASE("prox_l1 closed forms") {
    Eigen::VectorXd u(2);
    u << 1.2, -0.3;
    const Eigen::VectorXd out = prox_l1(u, 0.5);
    CHECK(out(0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(out(1) == 0.0);
    CHECK((prox_l1(u, 0.0) - u).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(prox_l1(u, -1.0), ValidationError);
}

TEST_CASE("prox_l1 matches the grid-search oracle") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> uu(-2.0, 2.0);
    std::uniform_real_distribution<double> um(0.0, 1.5);
    for (int rep = 0; rep < 25; ++rep) {
        Eigen::Vector2d u(uu(rng), uu(rng));
        const double mu = um(rng);
        const Eigen::Vector2d expect = grid_argmin(
            [&](const Eigen::Vector2d& x) {
                return mu * x.lpNorm<1>() + 0.5 * (x - u).squaredNorm();
            },
            -3.0, 3.0, 0.02, 1e-3);
        const Eigen::VectorXd got = prox_l1(u, mu);
        CHECK((got - expect).cwiseAbs().maxCoeff() <= 2e-3);
    }
}

TEST_CASE("prox_group closed forms") {
    Eigen::VectorXd u(2);
    u << 3, 4;  // norm 5
    CHECK(prox_group(u, 5.0, 2).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd half = prox_group(u, 2.5, 2);
    CHECK(half(0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(half(1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("prox_group matches the grid-search oracle on one block") {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> uu(-2.0, 2.0);
    std::uniform_real_distribution<double> um(0.0, 1.5);
    for (int rep = 0; rep < 25; ++rep) {
        Eigen::Vector2d u(uu(rng), uu(rng));
        const double mu = um(rng);
        const Eigen::Vector2d expect = grid_argmin(
            [&](const Eigen::Vector2d& x) {
                return mu * x.norm() + 0.5 * (x - u).squaredNorm();
            },
            -3.0, 3.0, 0.02, 1e-3);
        const Eigen::VectorXd got = prox_group(u, mu, 2);
        CHECK((got - expect).cwiseAbs().maxCoeff() <= 2e-3);
    }
}

TEST_CASE("explicit partitions validate") {
    Eigen::VectorXd u(4);
    u << 1, 2, 3, 4;
    const std::vector<std::vector<Eigen::Index>> good{{0, 1}, {2, 3}};
    CHECK_NOTHROW(prox_group(u, 0.5, good));
    const std::vector<std::vector<Eigen::Index>> empty_group{{0, 1, 2, 3}, {}};
    CHECK_THROWS_AS(prox_group(u, 0.5, empty_group), ValidationError);
    const std::vector<std::vector<Eigen::Index>> missing{{0, 1}};
    CHECK_THROWS_AS(prox_group(u, 0.5, missing), ValidationError);
    const std::vector<std::vector<Eigen::Index>> overlap{{0, 1}, {1, 2, 3}};
    CHECK_THROWS_AS(prox_group(u, 0.5, overlap), ValidationError);

    // contiguous overload agrees with the explicit partition
    CHECK((prox_group(u, 0.7, good) - prox_group(u, 0.7, Eigen::Index{2}))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("prox operators are nonexpansive") {
    std::mt19937_64 rng(79);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::VectorXd u = test_support::random_vector(rng, 6, 2.0);
        const Eigen::VectorXd v = test_support::random_vector(rng, 6, 2.0);
        const double mu = 0.3 + 0.2 * static_cast<double>(rep % 5);
        CHECK((prox_l1(u, mu) - prox_l1(v, mu)).norm() <= (u - v).norm() + 1e-12);
        CHECK((prox_group(u, mu, 2) - prox_group(v, mu, 2)).norm() <= (u - v).norm() + 1e-12);
        CHECK((prox_sparse_group(u, mu, 0.4, 2) - prox_sparse_group(v, mu, 0.4, 2)).norm() <=
              (u - v).norm() + 1e-12);
    }
}

TEST_CASE("prox_sparse_group collapse cases") {
    std::mt19937_64 rng(83);
    const Eigen::VectorXd u = test_support::random_vector(rng, 6, 2.0);
    CHECK((prox_sparse_group(u, 0.8, 1.0, 2) - prox_group(u, 0.8, 2)).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((prox_sparse_group(u, 0.8, 0.0, 2) - prox_l1(u, 0.8)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((prox_sparse_group(u, 0.0, 0.5, 2) - u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lambda1 = 0 recovers the closed-form ridge fit") {
    const Smoother g = fhn_desk_smoother();
    const auto taus = sample_times(8, 10.0, TauMode::regular);
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2));
    const double lambda_h = 0.01;

    const OdeModel ridge = fit_ridge(g, taus, kernel, lambda_h);
    SparseConfig cfg;
    cfg.lambda1 = 0.0;
    const SparseFitResult res = fit_sparse(g, taus, kernel, lambda_h, cfg);
    CHECK((res.model.coeffs() - ridge.coeffs()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("huge lambda1 zeroes every coefficient") {
    const Smoother g = fhn_desk_smoother();
    const auto taus = sample_times(6, 10.0, TauMode::regular);
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2));
    const double lambda_h = 0.01;

    Eigen::MatrixXd anchors(6, 2);
    Eigen::VectorXd gdot(12);
    for (std::size_t l = 0; l < taus.size(); ++l) {
        anchors.row(static_cast<Eigen::Index>(l)) = g.eval(taus[l]).transpose();
        gdot.segment(static_cast<Eigen::Index>(l) * 2, 2) = g.eval_derivative(taus[l]);
    }
    Eigen::MatrixXd rg = kernel.block_gram(anchors);
    rg.diagonal().array() += lambda_h;
    const double L = (kernel.block_gram(anchors) * rg).norm();
    const double init_norm = rg.ldlt().solve(gdot).norm();

    SparseConfig cfg;
    cfg.lambda1 = 10.0 * L * std::max(init_norm, 1.0);
    const SparseFitResult res = fit_sparse(g, taus, kernel, lambda_h, cfg);
    CHECK(res.model.coeffs().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("accelerated solver matches a long unaccelerated run") {
    // oracle: plain ISTA (no momentum) on the same objective, run far longer
    const Smoother g = fhn_desk_smoother();
    const auto taus = sample_times(4, 10.0, TauMode::regular);
    const Eigen::Index p = 2;
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(p));
    const double lambda_h = 0.05;

    Eigen::MatrixXd anchors(4, p);
    Eigen::VectorXd gdot(4 * p);
    for (std::size_t l = 0; l < taus.size(); ++l) {
        anchors.row(static_cast<Eigen::Index>(l)) = g.eval(taus[l]).transpose();
        gdot.segment(static_cast<Eigen::Index>(l) * p, p) = g.eval_derivative(taus[l]);
    }
    const Eigen::MatrixXd gram = kernel.block_gram(anchors);

    SparseConfig cfg;
    cfg.lambda1 = 0.3;
    cfg.alpha = 0.5;
    cfg.max_iters = 2000;
    const SparseSystemFit fista = fit_sparse_system(gram, gdot, p, lambda_h, cfg);

    Eigen::MatrixXd rg = gram;
    rg.diagonal().array() += lambda_h;
    const double L = (gram * rg).norm();
    Eigen::VectorXd a = rg.ldlt().solve(gdot);
    for (int it = 0; it < 200000; ++it) {
        const Eigen::VectorXd grad = gram * (rg * a - gdot);
        a = prox_sparse_group(a - grad / L, cfg.lambda1 / L, cfg.alpha, p);
    }
    const double slow_obj = sparse_objective(gram, gdot, lambda_h, cfg.lambda1, cfg.alpha, p, a);
    CHECK(std::abs(fista.objective - slow_obj) <= 1e-6);
}

TEST_CASE("objective never ends above its initial value") {
    const Smoother g = fhn_desk_smoother();
    const auto taus = sample_times(10, 10.0, TauMode::regular);
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2));
    const double lambda_h = 0.02;

    Eigen::MatrixXd anchors(10, 2);
    Eigen::VectorXd gdot(20);
    for (std::size_t l = 0; l < taus.size(); ++l) {
        anchors.row(static_cast<Eigen::Index>(l)) = g.eval(taus[l]).transpose();
        gdot.segment(static_cast<Eigen::Index>(l) * 2, 2) = g.eval_derivative(taus[l]);
    }
    const Eigen::MatrixXd gram = kernel.block_gram(anchors);
    Eigen::MatrixXd rg = gram;
    rg.diagonal().array() += lambda_h;
    const Eigen::VectorXd init = rg.ldlt().solve(gdot);

    for (double lambda1 : {0.01, 0.1, 1.0}) {
        SparseConfig cfg;
        cfg.lambda1 = lambda1;
        cfg.alpha = 0.5;
        const SparseSystemFit res = fit_sparse_system(gram, gdot, 2, lambda_h, cfg);
        const double at_init =
            sparse_objective(gram, gdot, lambda_h, lambda1, cfg.alpha, 2, init);
        CHECK(res.objective <= at_init + 1e-12);
    }
}

TEST_CASE("zero groups grow monotonically along a warm-started lambda1 path") {
    const Smoother g = fhn_desk_smoother();
    const auto taus = sample_times(30, 10.0, TauMode::regular);
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(0.5), StructureMatrix::identity(2));
    const double lambda_h = 0.02;

    Eigen::MatrixXd anchors(30, 2);
    Eigen::VectorXd gdot(60);
    for (std::size_t l = 0; l < taus.size(); ++l) {
        anchors.row(static_cast<Eigen::Index>(l)) = g.eval(taus[l]).transpose();
        gdot.segment(static_cast<Eigen::Index>(l) * 2, 2) = g.eval_derivative(taus[l]);
    }
    const Eigen::MatrixXd gram = kernel.block_gram(anchors);

    std::optional<Eigen::VectorXd> warm;
    Eigen::Index prev_zero = 0;
    for (double lambda1 : {0.0, 0.05, 0.2, 1.0, 5.0, 25.0}) {
        SparseConfig cfg;
        cfg.lambda1 = lambda1;
        cfg.alpha = 0.5;
        const SparseSystemFit res =
            fit_sparse_system(gram, gdot, 2, lambda_h, cfg, warm ? &*warm : nullptr);
        warm = res.coeffs;
        Eigen::Index zeros = 0;
        for (Eigen::Index l = 0; l < 30; ++l)
            if (res.coeffs.segment(l * 2, 2).cwiseAbs().maxCoeff() < 1e-8) ++zeros;
        CHECK(zeros >= prev_zero);
        prev_zero = zeros;
    }
    CHECK(prev_zero == 30);  // the path ends fully sparse
}

TEST_CASE("sparsity_report counts coefficients and blocks") {
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(1.0), StructureMatrix::identity(2));
    std::mt19937_64 rng(89);
    const Eigen::MatrixXd anchors = test_support::random_matrix(rng, 4, 2);

    const OdeModel zero(kernel, anchors, Eigen::MatrixXd::Zero(4, 2), 0.1);
    const SparsityReport all = sparsity_report(zero);
    CHECK(all.coeff_fraction == 1.0);
    CHECK(all.group_fraction == 1.0);

    const OdeModel dense(kernel, anchors,
                         Eigen::MatrixXd(test_support::random_matrix(rng, 4, 2).array() + 3.0),
                         0.1);
    const SparsityReport none = sparsity_report(dense, 1e-12);
    CHECK(none.coeff_fraction == 0.0);
    CHECK(none.group_fraction == 0.0);

    Eigen::MatrixXd one_block = test_support::random_matrix(rng, 4, 2).array() + 2.0;
    one_block.row(2).setZero();
    const SparsityReport mixed = sparsity_report(OdeModel(kernel, anchors, one_block, 0.1));
    CHECK(mixed.zero_groups == 1);
    CHECK(mixed.zero_coeffs == 2);

    CHECK_THROWS_AS(sparsity_report(zero, 0.0), ValidationError);
}

}  // TEST_SUITE
