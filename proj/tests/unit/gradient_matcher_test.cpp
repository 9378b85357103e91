#include <doctest.h>

#include <cmath>
#include <random>

#include "okode/errors.hpp"
#include "okode/gradient_matcher.hpp"
#include "support.hpp"

using namespace okode;

namespace {

// a small two-variable smoother over [0, 4] fit to smooth data
Smoother make_smoother(double freq = 1.0, Eigen::Index n = 9) {
    Eigen::VectorXd t(n), y1(n), y2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        t(i) = 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        y1(i) = std::sin(freq * t(i));
        y2(i) = std::cos(freq * t(i));
    }
    std::vector<VariableSmoother> vars;
    vars.push_back(fit_variable(t, y1, GaussianKernel(1.0), 1e-4));
    vars.push_back(fit_variable(t, y2, GaussianKernel(1.0), 1e-4));
    return Smoother(std::move(vars));
}

OperatorKernel identity_kernel(double gamma, Eigen::Index p) {
    return OperatorKernel::decomposable(GaussianKernel(gamma), StructureMatrix::identity(p));
}

// steepest descent with exact line search on 1/2 a'Ma - a'b; the QP oracle
Eigen::VectorXd qp_minimize(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                            int iters = 200000, double tol = 1e-14) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(b.size());
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd g = M * a - b;
        const double gg = g.squaredNorm();
        if (gg < tol * tol) break;
        const double denom = g.dot(M * g);
        if (denom <= 0) break;
        a -= (gg / denom) * g;
    }
    return a;
}

}  // namespace

TEST_SUITE("gradient-matcher") {

TEST_CASE("sample_times regular grid") {
    const auto two = sample_times(2, 1.0, TauMode::regular);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(two[1] == 1.0);

    const auto many = sample_times(101, 20.0, TauMode::regular);
    REQUIRE(many.size() == 101);
    CHECK(many[1] - many[0] == doctest::Approx(20.0 / 101).epsilon(1e-12));
    CHECK(many[0] == doctest::Approx(20.0 / 101).epsilon(1e-12));
    CHECK(many.back() == 20.0);
}

TEST_CASE("sample_times random mode is reproducible and in range") {
    const auto a = sample_times(50, 3.0, TauMode::uniform_random, 99);
    const auto b = sample_times(50, 3.0, TauMode::uniform_random, 99);
    CHECK(a == b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] > 0.0);
        CHECK(a[i] <= 3.0);
        if (i) CHECK(a[i] >= a[i - 1]);
    }
    const auto c = sample_times(50, 3.0, TauMode::uniform_random, 100);
    CHECK(a != c);
}

TEST_CASE("fit_ridge satisfies the shrinkage bound") {
    const Smoother g = make_smoother();
    const auto taus = sample_times(7, 4.0, TauMode::regular);
    Eigen::VectorXd gdot(7 * 2);
    for (std::size_t l = 0; l < taus.size(); ++l)
        gdot.segment(static_cast<Eigen::Index>(l) * 2, 2) = g.eval_derivative(taus[l]);

    for (double lambda : {1e2, 1e4, 1e6}) {
        const OdeModel model = fit_ridge(g, taus, identity_kernel(1.0, 2), lambda);
        CHECK(model.stacked_coeffs().norm() <= gdot.norm() / lambda + 1e-12);
    }
}

TEST_CASE("single anchor scalar closed form") {
    // p=1, m=1, C=[1]: a = gdot(tau)/(1 + lambda)
    Eigen::VectorXd t(3), y(3);
    t << 0, 1, 2;
    y << 0.3, 0.9, 0.1;
    std::vector<VariableSmoother> vars;
    vars.push_back(fit_variable(t, y, GaussianKernel(0.5), 1e-3));
    const Smoother g(std::move(vars));

    const std::vector<double> taus{1.3};
    const double lambda = 0.7;
    const OdeModel model = fit_ridge(g, taus, identity_kernel(1.0, 1), lambda);
    const double expected = g.eval_derivative(1.3)(0) / (1.0 + lambda);
    CHECK(model.coeffs()(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fit_ridge matches an independent dense solve") {
    std::mt19937_64 rng(47);
    const Smoother g = make_smoother(1.3);
    const auto taus = sample_times(6, 4.0, TauMode::regular);
    const Eigen::MatrixXd B = test_support::random_matrix(rng, 2, 2);
    const StructureMatrix C(Eigen::MatrixXd(B * B.transpose()));
    const OperatorKernel kernel = OperatorKernel::decomposable(GaussianKernel(0.8), C);
    const double lambda = 0.05;

    const OdeModel model = fit_ridge(g, taus, kernel, lambda);

    Eigen::MatrixXd anchors(6, 2);
    Eigen::VectorXd gdot(12);
    for (std::size_t l = 0; l < taus.size(); ++l) {
        anchors.row(static_cast<Eigen::Index>(l)) = g.eval(taus[l]).transpose();
        gdot.segment(static_cast<Eigen::Index>(l) * 2, 2) = g.eval_derivative(taus[l]);
    }
    Eigen::MatrixXd A = kernel.block_gram(anchors);
    A.diagonal().array() += lambda;
    const Eigen::VectorXd oracle = test_support::solve_dense(A, gdot);
    CHECK((model.stacked_coeffs() - oracle).cwiseAbs().maxCoeff() <= 1e-10);

    // residual invariant as stated
    CHECK((A * model.stacked_coeffs() - gdot).norm() / gdot.norm() <= 1e-8);
}

TEST_CASE("fit_ridge validates lambda") {
    const Smoother g = make_smoother();
    const auto taus = sample_times(3, 4.0, TauMode::regular);
    CHECK_THROWS_AS(fit_ridge(g, taus, identity_kernel(1.0, 2), 0.0), ValidationError);
}

TEST_CASE("gm error is non-increasing as lambda_h decreases") {
    const Smoother g = make_smoother();
    const auto taus = sample_times(9, 4.0, TauMode::regular);
    const OperatorKernel kernel = identity_kernel(1.0, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {10.0, 1.0, 0.1, 0.01, 1e-4}) {
        const OdeModel model = fit_ridge(g, taus, kernel, lambda);
        double err = 0;
        for (double tau : taus)
            err += (g.eval_derivative(tau) - model.eval(g.eval(tau))).squaredNorm();
        CHECK(err <= prev + 1e-10);
        prev = err;
    }
}

TEST_CASE("eval with zero coefficients is the zero field") {
    const OdeModel model(identity_kernel(1.0, 2), Eigen::MatrixXd::Random(4, 2),
                         Eigen::MatrixXd::Zero(4, 2), 0.1);
    CHECK(model.eval(Eigen::Vector2d(0.3, -0.2)).norm() == 0.0);
}

TEST_CASE("single-term eval closed form") {
    std::mt19937_64 rng(53);
    const Eigen::MatrixXd B = test_support::random_matrix(rng, 2, 2);
    const Eigen::MatrixXd C = B * B.transpose();
    Eigen::MatrixXd anchor(1, 2), coeff(1, 2);
    anchor << 0.5, -0.5;
    coeff << 1.2, 0.3;
    const OdeModel model(
        OperatorKernel::decomposable(GaussianKernel(2.0), StructureMatrix(C)), anchor, coeff,
        0.1);
    const Eigen::Vector2d x(0.1, 0.9);
    const double k = GaussianKernel(2.0).eval(x, anchor.row(0).transpose());
    const Eigen::VectorXd expected = k * C * coeff.row(0).transpose();
    CHECK((model.eval(x) - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("eval matches a naive per-term sum") {
    std::mt19937_64 rng(59);
    const GaussianKernel k(0.9);
    const Eigen::MatrixXd B = test_support::random_matrix(rng, 2, 2);
    const StructureMatrix C(Eigen::MatrixXd(B * B.transpose()));
    const Eigen::MatrixXd anchors = test_support::random_matrix(rng, 6, 2);
    const Eigen::MatrixXd coeffs = test_support::random_matrix(rng, 6, 2);
    for (const auto& kernel : {OperatorKernel::decomposable(k, C),
                               OperatorKernel::transformable(k),
                               OperatorKernel::hadamard(k, C)}) {
        const OdeModel model(kernel, anchors, coeffs, 0.1);
        const Eigen::VectorXd x = test_support::random_vector(rng, 2);
        Eigen::VectorXd naive = Eigen::VectorXd::Zero(2);
        for (Eigen::Index l = 0; l < 6; ++l)
            naive += kernel.eval_block(x, anchors.row(l).transpose()) *
                     coeffs.row(l).transpose();
        CHECK((model.eval(x) - naive).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("multi fit with lambda_sim = 0 decouples into ridge fits") {
    std::vector<Smoother> smoothers{make_smoother(1.0), make_smoother(1.7)};
    const auto taus = sample_times(5, 4.0, TauMode::regular);
    const OperatorKernel kernel = identity_kernel(0.8, 2);
    const double lambda_h = 0.05;

    const MultiModel mm = fit_multi(smoothers, taus, kernel, lambda_h, 0.0);
    REQUIRE(mm.count() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const OdeModel single = fit_ridge(smoothers[i], taus, kernel, lambda_h);
        CHECK((mm.models()[i].coeffs() - single.coeffs()).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("multi fit with one series reduces to fit_ridge for any lambda_sim") {
    std::vector<Smoother> smoothers{make_smoother(1.0)};
    const auto taus = sample_times(5, 4.0, TauMode::regular);
    const OperatorKernel kernel = identity_kernel(0.8, 2);
    const OdeModel single = fit_ridge(smoothers[0], taus, kernel, 0.05);
    for (double lambda_sim : {0.0, 0.5, 5.0}) {
        const MultiModel mm = fit_multi(smoothers, taus, kernel, 0.05, lambda_sim);
        CHECK((mm.models()[0].coeffs() - single.coeffs()).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("multi direct solution matches a dense QP oracle; sgd gets close") {
    std::vector<Smoother> smoothers{make_smoother(1.0, 7), make_smoother(1.5, 7)};
    const std::vector<double> taus = sample_times(3, 4.0, TauMode::regular);
    const OperatorKernel kernel = identity_kernel(0.5, 2);
    const double lambda_h = 1.0;
    const double lambda_sim = 0.1;
    const std::size_t r = 2;

    const MultiSystem sys = assemble_multi_system(smoothers, taus, kernel);
    const Eigen::MatrixXd& D = sys.diag_gram;
    const Eigen::MatrixXd M =
        D * D + lambda_h * D + lambda_sim * (static_cast<double>(r) * D - sys.full_gram);
    const Eigen::VectorXd rhs = D * sys.gdot;
    const Eigen::VectorXd oracle = qp_minimize(M, rhs);
    const double oracle_obj =
        multi_objective(D, sys.full_gram, sys.gdot, lambda_h, lambda_sim, r, oracle);

    const MultiModel direct = fit_multi(smoothers, taus, kernel, lambda_h, lambda_sim);
    Eigen::VectorXd a_direct(rhs.size());
    a_direct << direct.models()[0].stacked_coeffs(), direct.models()[1].stacked_coeffs();
    const double direct_obj =
        multi_objective(D, sys.full_gram, sys.gdot, lambda_h, lambda_sim, r, a_direct);
    CHECK(std::abs(direct_obj - oracle_obj) <= 1e-6);
    CHECK((a_direct - oracle).cwiseAbs().maxCoeff() <= 1e-5);

    MultiFitOptions opts;
    opts.solver = MultiSolver::sgd;
    const MultiModel sgd = fit_multi(smoothers, taus, kernel, lambda_h, lambda_sim, opts);
    Eigen::VectorXd a_sgd(rhs.size());
    a_sgd << sgd.models()[0].stacked_coeffs(), sgd.models()[1].stacked_coeffs();
    const double sgd_obj =
        multi_objective(D, sys.full_gram, sys.gdot, lambda_h, lambda_sim, r, a_sgd);
    CHECK(sgd_obj - direct_obj <= 1e-3);
}

TEST_CASE("multi objective at the solution beats zero and the decoupled point") {
    std::vector<Smoother> smoothers{make_smoother(1.0), make_smoother(2.0)};
    const auto taus = sample_times(4, 4.0, TauMode::regular);
    const OperatorKernel kernel = identity_kernel(0.7, 2);
    const double lambda_h = 0.1, lambda_sim = 0.5;
    const std::size_t r = 2;

    const MultiSystem sys = assemble_multi_system(smoothers, taus, kernel);
    const MultiModel mm = fit_multi(smoothers, taus, kernel, lambda_h, lambda_sim);
    Eigen::VectorXd a(sys.gdot.size());
    a << mm.models()[0].stacked_coeffs(), mm.models()[1].stacked_coeffs();

    const auto obj = [&](const Eigen::VectorXd& v) {
        return multi_objective(sys.diag_gram, sys.full_gram, sys.gdot, lambda_h, lambda_sim, r,
                               v);
    };
    CHECK(obj(a) <= obj(Eigen::VectorXd::Zero(a.size())) + 1e-10);

    Eigen::VectorXd decoupled(a.size());
    const MultiModel dec = fit_multi(smoothers, taus, kernel, lambda_h, 0.0);
    decoupled << dec.models()[0].stacked_coeffs(), dec.models()[1].stacked_coeffs();
    CHECK(obj(a) <= obj(decoupled) + 1e-10);
}

TEST_CASE("pairwise RKHS distance shrinks as lambda_sim grows") {
    std::vector<Smoother> smoothers{make_smoother(1.0), make_smoother(2.0)};
    const auto taus = sample_times(5, 4.0, TauMode::regular);
    const OperatorKernel kernel = identity_kernel(0.7, 2);
    const double lambda_h = 0.1;

    const MultiSystem sys = assemble_multi_system(smoothers, taus, kernel);
    const Eigen::Index blk = sys.gdot.size() / 2;
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda_sim : {0.0, 0.1, 1.0, 10.0}) {
        const MultiModel mm = fit_multi(smoothers, taus, kernel, lambda_h, lambda_sim);
        const Eigen::VectorXd a1 = mm.models()[0].stacked_coeffs();
        const Eigen::VectorXd a2 = mm.models()[1].stacked_coeffs();
        const Eigen::MatrixXd K11 = sys.full_gram.topLeftCorner(blk, blk);
        const Eigen::MatrixXd K22 = sys.full_gram.bottomRightCorner(blk, blk);
        const Eigen::MatrixXd K12 = sys.full_gram.topRightCorner(blk, blk);
        const double dist2 = a1.dot(K11 * a1) + a2.dot(K22 * a2) - 2.0 * a1.dot(K12 * a2);
        CHECK(dist2 <= prev + 1e-9);
        prev = dist2;
    }
}

TEST_CASE("consensus averages the member fields") {
    std::mt19937_64 rng(61);
    const OperatorKernel kernel = identity_kernel(1.0, 2);
    const Eigen::MatrixXd anchors = test_support::random_matrix(rng, 4, 2);

    // r = 1: consensus is the single model
    std::vector<OdeModel> one;
    one.emplace_back(kernel, anchors, test_support::random_matrix(rng, 4, 2), 0.1);
    const MultiModel single(std::move(one), 0.0);
    const Eigen::Vector2d x(0.2, 0.4);
    CHECK((single.consensus(x) - single.models()[0].eval(x)).cwiseAbs().maxCoeff() == 0.0);

    // coefficients a and -a cancel
    const Eigen::MatrixXd coeffs = test_support::random_matrix(rng, 4, 2);
    std::vector<OdeModel> pair;
    pair.emplace_back(kernel, anchors, coeffs, 0.1);
    pair.emplace_back(kernel, anchors, Eigen::MatrixXd(-coeffs), 0.1);
    const MultiModel cancel(std::move(pair), 0.0);
    CHECK(cancel.consensus(x).cwiseAbs().maxCoeff() <= 1e-15);

    // r = 3: matches the mean of the member evaluations
    std::vector<OdeModel> trio;
    for (int i = 0; i < 3; ++i)
        trio.emplace_back(kernel, anchors, test_support::random_matrix(rng, 4, 2), 0.1);
    const MultiModel mm(std::move(trio), 0.0);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (const auto& m : mm.models()) mean += m.eval(x);
    mean /= 3.0;
    CHECK((mm.consensus(x) - mean).cwiseAbs().maxCoeff() <= 1e-12);
}

}  // TEST_SUITE
