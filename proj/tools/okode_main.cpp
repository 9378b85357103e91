// okode: nonparametric ODE estimation by two-step gradient matching with
// operator-valued kernels. Subcommands: simulate, fit, trajectory,
// sweep-alpha, error-map, compare.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "okode/baseline.hpp"
#include "okode/errors.hpp"
#include "okode/gradient_matcher.hpp"
#include "okode/kernel_learn.hpp"
#include "okode/model_io.hpp"
#include "okode/report.hpp"
#include "okode/simulate.hpp"
#include "okode/sparse.hpp"
#include "okode/timeseries.hpp"

namespace {

using namespace okode;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return out;
}

VectorField field_of(const OdeModel& model) {
    return [&model](const Eigen::VectorXd& x) { return model.eval(x); };
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string model = "fhn";
    std::string params_file;
    int n = 41;
    double t_end = 20.0;
    double sigma2 = 0.1;
    std::string noise_mode = "gaussian";
    std::uint64_t seed = 0;
    std::vector<double> x0;
    int substeps = 20;
    std::string out_truth = "truth.csv";
    std::string out_noisy = "noisy.csv";
};

int run_simulate(const SimulateArgs& args) {
    VectorField rhs;
    Eigen::VectorXd x0;
    if (args.model == "fhn") {
        const FhnParams p = args.params_file.empty() ? FhnParams{}
                                                     : load_fhn_params(args.params_file);
        rhs = [p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return fhn_rhs(p, Eigen::Vector2d(x));
        };
        x0 = Eigen::Vector2d(-1.0, 1.0);
    } else if (args.model == "calcium") {
        const CalciumParams p = args.params_file.empty()
                                    ? CalciumParams::defaults()
                                    : load_calcium_params(args.params_file);
        rhs = [p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return calcium_rhs(p, Eigen::Vector4d(x));
        };
        x0 = Eigen::Vector4d(0.1, 0.1, 0.1, 2.0);
    } else {
        throw ValidationError("unknown model '" + args.model + "' (fhn or calcium)");
    }
    if (!args.x0.empty()) {
        if (static_cast<Eigen::Index>(args.x0.size()) != x0.size()) {
            throw ValidationError("--x0 needs " + std::to_string(x0.size()) + " values");
        }
        for (std::size_t i = 0; i < args.x0.size(); ++i)
            x0(static_cast<Eigen::Index>(i)) = args.x0[i];
    }
    if (args.n < 2) throw ValidationError("--n must be at least 2");
    if (!(args.t_end > 0)) throw ValidationError("--t-end must be positive");

    const std::vector<double> grid = linspace(0.0, args.t_end, args.n);
    const Eigen::MatrixXd truth = integrate_rk4(rhs, x0, grid, args.substeps);
    Eigen::VectorXd times =
        Eigen::Map<const Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));

    NoiseSpec spec;
    spec.variance = args.sigma2;
    spec.seed = args.seed;
    if (args.noise_mode == "gaussian") {
        spec.mode = NoiseMode::gaussian;
    } else if (args.noise_mode == "zero-truncated") {
        spec.mode = NoiseMode::zero_truncated_gaussian;
    } else {
        throw ValidationError("unknown noise mode '" + args.noise_mode + "'");
    }

    write_csv(TimeSeries(times, truth), args.out_truth);
    write_csv(add_noise(times, truth, spec), args.out_noisy);
    std::cout << "wrote " << args.out_truth << " and " << args.out_noisy << " (" << args.n
              << " rows)\n";
    return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::vector<std::string> inputs;
    std::string mode = "ridge";
    std::string kernel = "decomposable";
    int m = 101;
    std::string tau_mode = "regular";
    std::uint64_t tau_seed = 0;
    std::vector<double> gamma_grid;
    std::vector<double> lambda_grid;
    std::vector<double> gamma_h_grid;
    std::vector<double> lambda_h_grid;
    double lambda1 = 0.1;
    double alpha = 0.5;
    double lambda_sim = 0.1;
    std::string solver = "direct";
    int outer_iters = 10;
    int inner_iters = 50;
    int jobs = 1;
    int substeps = 20;
    std::string out_model = "model.okm";
    std::string out_report = "report.txt";
};

struct GridSearchResult {
    double gamma = 0;
    double lambda_h = 0;
    double traj_error = std::numeric_limits<double>::infinity();
};

// Step 2 hyperparameters: minimize the empirical trajectory error of the
// ridge model against the observations.
GridSearchResult grid_search_h(const Smoother& smoother, const TimeSeries& ts,
                               std::span<const double> taus, KernelFamily family,
                               std::span<const double> gamma_grid,
                               std::span<const double> lambda_grid, int substeps, int jobs) {
    struct Point {
        double gamma, lambda;
    };
    std::vector<Point> points;
    for (double g : gamma_grid)
        for (double l : lambda_grid) points.push_back({g, l});

    std::vector<double> errors(points.size(), std::numeric_limits<double>::infinity());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            try {
                const OperatorKernel kernel = OperatorKernel::make(
                    family, GaussianKernel(points[i].gamma),
                    family == KernelFamily::transformable
                        ? std::nullopt
                        : std::optional<StructureMatrix>(StructureMatrix::identity(ts.dim())));
                const OdeModel model = fit_ridge(smoother, taus, kernel, points[i].lambda);
                const TrajectoryErrorDetail detail = trajectory_error_detail(
                    model, smoother, ts, TrajectoryMode::self_consistent, substeps);
                errors[i] = detail.blew_up ? std::numeric_limits<double>::infinity()
                                           : detail.error;
            } catch (const NumericalError&) {
                // leave +inf
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    GridSearchResult best;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (errors[i] < best.traj_error) {
            best = GridSearchResult{points[i].gamma, points[i].lambda, errors[i]};
        }
    }
    if (!std::isfinite(best.traj_error)) {
        throw NumericalError("every (gamma, lambda_h) grid point blew up during integration");
    }
    return best;
}

std::vector<double> taus_for(const TimeSeries& ts, const FitArgs& args) {
    const TauMode mode =
        args.tau_mode == "regular" ? TauMode::regular : TauMode::uniform_random;
    if (args.tau_mode != "regular" && args.tau_mode != "random") {
        throw ValidationError("--tau-mode must be regular or random");
    }
    std::vector<double> taus =
        sample_times(args.m, ts.t_end() - ts.t_start(), mode, args.tau_seed);
    for (double& t : taus) t += ts.t_start();
    return taus;
}

int run_fit(FitArgs args) {
    if (args.inputs.empty()) throw ValidationError("fit needs at least one --input");
    if (args.mode == "multi" && args.inputs.size() < 2) {
        throw ValidationError("--mode multi needs at least 2 input series");
    }
    if (args.mode != "multi" && args.inputs.size() > 1) {
        throw ValidationError("--mode " + args.mode + " takes exactly one input series");
    }
    if (args.gamma_grid.empty()) args.gamma_grid = default_gamma_grid();
    if (args.lambda_grid.empty()) args.lambda_grid = default_ridge_grid();
    if (args.gamma_h_grid.empty()) args.gamma_h_grid = default_gamma_grid();
    if (args.lambda_h_grid.empty()) args.lambda_h_grid = default_ridge_grid();
    const KernelFamily family = kernel_family_from_string(args.kernel);
    if (args.mode == "kernel-learn" && family != KernelFamily::decomposable) {
        throw ValidationError("--mode kernel-learn requires the decomposable kernel");
    }

    std::vector<TimeSeries> series;
    for (const auto& path : args.inputs) series.push_back(read_csv(path));
    const TimeSeriesBundle bundle(std::move(series));
    const TimeSeries& ts = bundle[0];

    // Step 1: per-variable smoothers by leave-one-out CV
    std::vector<Smoother> smoothers;
    std::vector<LoocvChoice> choices;
    for (std::size_t i = 0; i < bundle.count(); ++i) {
        std::vector<LoocvChoice> c;
        smoothers.push_back(fit_smoother_cv(bundle[i], args.gamma_grid, args.lambda_grid, &c));
        if (i == 0) choices = c;
    }

    const std::vector<double> taus = taus_for(ts, args);

    // Step 2: hyperparameters for h on the first series
    const GridSearchResult hp =
        grid_search_h(smoothers[0], ts, taus, family, args.gamma_h_grid, args.lambda_h_grid,
                      args.substeps, args.jobs);
    auto kernel_with = [&](double gamma) {
        return OperatorKernel::make(
            family, GaussianKernel(gamma),
            family == KernelFamily::transformable
                ? std::nullopt
                : std::optional<StructureMatrix>(StructureMatrix::identity(ts.dim())));
    };

    FitReport report;
    report.mode = args.mode;
    report.smoother_choices = choices;
    report.gamma_h = hp.gamma;
    report.lambda_h = hp.lambda_h;

    std::optional<OdeModel> model;
    if (args.mode == "ridge") {
        model = fit_ridge(smoothers[0], taus, kernel_with(hp.gamma), hp.lambda_h);
    } else if (args.mode == "sparse") {
        SparseConfig cfg;
        cfg.lambda1 = args.lambda1;
        cfg.alpha = args.alpha;
        const SparseFitResult res =
            fit_sparse(smoothers[0], taus, kernel_with(hp.gamma), hp.lambda_h, cfg);
        model = res.model;
        const SparsityReport sp = sparsity_report(*model);
        report.lambda1 = args.lambda1;
        report.alpha = args.alpha;
        report.iterations = res.iterations;
        report.converged = res.converged;
        report.zero_coeffs = sp.zero_coeffs;
        report.zero_groups = sp.zero_groups;
    } else if (args.mode == "kernel-learn") {
        KernelLearnConfig cfg;
        cfg.outer_iters = args.outer_iters;
        cfg.inner_iters = args.inner_iters;
        auto [learned, C] =
            alternate_fit(smoothers[0], taus, GaussianKernel(hp.gamma), hp.lambda_h, cfg);
        // refit so the stored model carries the final structure matrix
        model = fit_ridge(smoothers[0], taus,
                          OperatorKernel::decomposable(GaussianKernel(hp.gamma), C),
                          hp.lambda_h);
    } else if (args.mode == "multi") {
        MultiFitOptions opts;
        opts.solver = args.solver == "sgd" ? MultiSolver::sgd : MultiSolver::direct;
        if (args.solver != "direct" && args.solver != "sgd") {
            throw ValidationError("--solver must be direct or sgd");
        }
        const MultiModel mm = fit_multi(smoothers, taus, kernel_with(hp.gamma), hp.lambda_h,
                                        args.lambda_sim, opts);
        report.lambda_sim = args.lambda_sim;
        // serialize the per-series models next to the consensus report
        for (std::size_t i = 0; i < mm.count(); ++i) {
            save_model(mm.models()[i], args.out_model + "." + std::to_string(i));
        }
        model = mm.models()[0];
    } else {
        throw ValidationError("unknown mode '" + args.mode + "'");
    }

    save_model(*model, args.out_model);
    report.smoothing_error = smoothing_error(smoothers[0], ts);
    report.gm_error = gm_error(*model, smoothers[0], taus);
    report.trajectory_error = trajectory_error(*model, smoothers[0], ts,
                                               TrajectoryMode::self_consistent, args.substeps);
    report.write(args.out_report);
    std::cout << "wrote " << args.out_model << " and " << args.out_report
              << " (trajectory error " << fmt(report.trajectory_error) << ")\n";
    return 0;
}

// -------------------------------------------------------------- trajectory

struct TrajectoryArgs {
    std::string model_file;
    std::vector<double> x0;
    double t_end = 20.0;
    int n = 201;
    int substeps = 20;
    std::string out = "trajectory.csv";
};

int run_trajectory(const TrajectoryArgs& args) {
    const OdeModel model = load_model(args.model_file);
    if (static_cast<Eigen::Index>(args.x0.size()) != model.dim()) {
        throw ValidationError("--x0 needs " + std::to_string(model.dim()) + " values");
    }
    Eigen::VectorXd x0(model.dim());
    for (std::size_t i = 0; i < args.x0.size(); ++i)
        x0(static_cast<Eigen::Index>(i)) = args.x0[i];
    if (args.n < 2) throw ValidationError("--n must be at least 2");
    const std::vector<double> grid = linspace(0.0, args.t_end, args.n);
    const Eigen::MatrixXd traj = integrate_rk4(field_of(model), x0, grid, args.substeps);
    Eigen::VectorXd times =
        Eigen::Map<const Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
    write_csv(TimeSeries(times, traj), args.out);
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

// ------------------------------------------------------------- sweep-alpha

struct SweepArgs {
    std::string input;
    int m = 404;
    std::vector<double> alpha_grid{0.0, 0.5, 1.0};
    std::vector<double> lambda1_grid;
    double gamma_h = 0;     // 0: grid-search
    double lambda_h = 0;    // 0: grid-search
    std::vector<double> gamma_grid;
    std::vector<double> lambda_grid;
    int substeps = 20;
    int jobs = 1;
    std::string out = "sweep.csv";
};

int run_sweep(SweepArgs args) {
    if (args.input.empty()) throw ValidationError("sweep-alpha needs --input");
    if (args.lambda1_grid.empty()) {
        for (int k = -3; k <= 3; ++k) args.lambda1_grid.push_back(std::pow(10.0, k));
        args.lambda1_grid.insert(args.lambda1_grid.begin(), 0.0);
    }
    if (args.gamma_grid.empty()) args.gamma_grid = default_gamma_grid();
    if (args.lambda_grid.empty()) args.lambda_grid = default_ridge_grid();
    std::sort(args.lambda1_grid.begin(), args.lambda1_grid.end());

    const TimeSeries ts = read_csv(args.input);
    const Smoother smoother = fit_smoother_cv(ts, args.gamma_grid, args.lambda_grid);

    FitArgs taus_args;
    taus_args.m = args.m;
    const std::vector<double> taus = taus_for(ts, taus_args);

    double gamma_h = args.gamma_h, lambda_h = args.lambda_h;
    if (!(gamma_h > 0) || !(lambda_h > 0)) {
        const GridSearchResult hp =
            grid_search_h(smoother, ts, taus, KernelFamily::decomposable, args.gamma_grid,
                          args.lambda_grid, args.substeps, args.jobs);
        gamma_h = hp.gamma;
        lambda_h = hp.lambda_h;
    }

    const Eigen::Index p = ts.dim();
    const Eigen::Index m = static_cast<Eigen::Index>(taus.size());
    Eigen::MatrixXd anchors(m, p);
    Eigen::VectorXd gdot(m * p);
    for (Eigen::Index l = 0; l < m; ++l) {
        anchors.row(l) = smoother.eval(taus[static_cast<std::size_t>(l)]).transpose();
        gdot.segment(l * p, p) = smoother.eval_derivative(taus[static_cast<std::size_t>(l)]);
    }
    const OperatorKernel kernel =
        OperatorKernel::decomposable(GaussianKernel(gamma_h), StructureMatrix::identity(p));
    const Eigen::MatrixXd gram = kernel.block_gram(anchors);

    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + args.out + "' for writing");
    out << "alpha,lambda1,traj_error,zero_coeff_frac,zero_group_frac\n";
    for (double alpha : args.alpha_grid) {
        std::optional<Eigen::VectorXd> warm;
        for (double lambda1 : args.lambda1_grid) {
            SparseConfig cfg;
            cfg.lambda1 = lambda1;
            cfg.alpha = alpha;
            const SparseSystemFit fit = fit_sparse_system(
                gram, gdot, p, lambda_h, cfg, warm ? &*warm : nullptr);
            warm = fit.coeffs;
            Eigen::MatrixXd coeffs(m, p);
            for (Eigen::Index l = 0; l < m; ++l)
                coeffs.row(l) = fit.coeffs.segment(l * p, p).transpose();
            const OdeModel model(kernel, anchors, coeffs, lambda_h);
            const SparsityReport sp = sparsity_report(model);
            const double terr = trajectory_error(model, smoother, ts,
                                                 TrajectoryMode::self_consistent, args.substeps);
            out << fmt(alpha) << ',' << fmt(lambda1) << ',' << fmt(terr) << ','
                << fmt(sp.coeff_fraction) << ',' << fmt(sp.group_fraction) << "\n";
        }
    }
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

// --------------------------------------------------------------- error-map

struct ErrorMapArgs {
    std::vector<std::string> model_files;
    std::string params_file;
    double v_min = -2, v_max = 2;
    double r_min = -2, r_max = 2;
    int v_count = 5, r_count = 5;
    double horizon = 10.0;
    int n_points = 51;
    int substeps = 20;
    std::string out = "error_map.csv";
};

int run_error_map(const ErrorMapArgs& args) {
    if (args.model_files.empty()) throw ValidationError("error-map needs at least one --model");
    std::vector<OdeModel> models;
    for (const auto& f : args.model_files) models.push_back(load_model(f));
    const FhnParams p =
        args.params_file.empty() ? FhnParams{} : load_fhn_params(args.params_file);
    if (models.front().dim() != 2) {
        throw ValidationError("error-map needs 2-dimensional models");
    }

    const VectorField truth = [p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return fhn_rhs(p, Eigen::Vector2d(x));
    };
    const VectorField learned = [&models](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
        for (const auto& m : models) acc += m.eval(x);
        return acc / static_cast<double>(models.size());
    };

    const std::vector<double> v_grid = linspace(args.v_min, args.v_max, args.v_count);
    const std::vector<double> r_grid = linspace(args.r_min, args.r_max, args.r_count);
    const Eigen::MatrixXd map =
        error_map(learned, truth, v_grid, r_grid, args.horizon, args.n_points, args.substeps);

    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + args.out + "' for writing");
    out << "v,r,mse\n";
    for (Eigen::Index i = 0; i < map.rows(); ++i)
        for (Eigen::Index j = 0; j < map.cols(); ++j)
            out << fmt(v_grid[static_cast<std::size_t>(i)]) << ','
                << fmt(r_grid[static_cast<std::size_t>(j)]) << ',' << fmt(map(i, j)) << "\n";
    std::cout << "wrote " << args.out << " (mean " << fmt(map.mean()) << ")\n";
    return 0;
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
    std::string input;
    std::string truth;
    int m = 101;
    int restarts = 100;
    std::uint64_t seed = 0;
    int substeps = 20;
    int jobs = 1;
    std::string out = "compare.csv";
};

double true_mse(const VectorField& f, const TimeSeries& truth, int substeps) {
    std::vector<double> grid(truth.times().data(), truth.times().data() + truth.length());
    const IntegrationResult res =
        integrate_rk4_partial(f, truth.values().row(0).transpose(), grid, substeps);
    if (res.blew_up || res.rows_completed < truth.length()) {
        return std::numeric_limits<double>::infinity();
    }
    double total = 0;
    for (Eigen::Index l = 0; l < truth.length(); ++l)
        total += (truth.values().row(l) - res.states.row(l)).squaredNorm();
    return total / static_cast<double>(truth.length());
}

int run_compare(const CompareArgs& args) {
    if (args.input.empty() || args.truth.empty()) {
        throw ValidationError("compare needs --input (noisy) and --truth (noiseless) CSVs");
    }
    const TimeSeries noisy = read_csv(args.input);
    const TimeSeries truth = read_csv(args.truth);
    if (noisy.dim() != 2 || truth.dim() != 2 || noisy.length() != truth.length()) {
        throw ValidationError("compare expects matched 2-dimensional datasets");
    }

    // OKODE: LOO-CV smoother + grid-searched decomposable ridge fit
    const auto gammas = default_gamma_grid();
    const auto lambdas = default_ridge_grid();
    const Smoother smoother = fit_smoother_cv(noisy, gammas, lambdas);
    FitArgs taus_args;
    taus_args.m = args.m;
    const std::vector<double> taus = taus_for(noisy, taus_args);
    const GridSearchResult hp =
        grid_search_h(smoother, noisy, taus, KernelFamily::decomposable, gammas, lambdas,
                      args.substeps, args.jobs);
    const OdeModel okode_model =
        fit_ridge(smoother, taus,
                  OperatorKernel::decomposable(GaussianKernel(hp.gamma),
                                               StructureMatrix::identity(2)),
                  hp.lambda_h);
    const double mse_okode = true_mse(field_of(okode_model), truth, args.substeps);

    const ParametricFit fit3 = fit_parametric(RhsFamily::fhn3, noisy, args.restarts, args.seed);
    const FhnParams p3{fit3.params(0), fit3.params(1), fit3.params(2)};
    const double mse_3 = true_mse(
        [p3](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return fhn_rhs(p3, Eigen::Vector2d(x));
        },
        truth, args.substeps);

    const ParametricFit fit14 =
        fit_parametric(RhsFamily::cubic14, noisy, args.restarts, args.seed);
    CubicModelParams p14;
    for (int i = 0; i < 14; ++i) p14.p[static_cast<std::size_t>(i)] = fit14.params(i);
    const double mse_14 = true_mse(
        [p14](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return cubic_rhs(p14, Eigen::Vector2d(x));
        },
        truth, args.substeps);

    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + args.out + "' for writing");
    out << "# true-trajectory MSE per observation; profiled-estimation baseline out of scope\n";
    out << "method,mse\n";
    out << "okode," << fmt(mse_okode) << "\n";
    out << "parametric-3," << fmt(mse_3) << "\n";
    out << "parametric-14," << fmt(mse_14) << "\n";
    std::cout << "okode " << fmt(mse_okode) << ", parametric-3 " << fmt(mse_3)
              << ", parametric-14 " << fmt(mse_14) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric ODE estimation by gradient matching in RKHS"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Key-value config file ([subcommand] section or subcommand.key keys); "
                   "flags override it");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate benchmark data");
    c_sim->fallthrough();
    c_sim->add_option("--model", sim.model, "fhn or calcium");
    c_sim->add_option("--params", sim.params_file, "Ground-truth parameter file");
    c_sim->add_option("--n", sim.n, "Number of observations");
    c_sim->add_option("--t-end", sim.t_end, "Horizon");
    c_sim->add_option("--sigma2", sim.sigma2, "Noise variance (> 0)");
    c_sim->add_option("--noise-mode", sim.noise_mode, "gaussian or zero-truncated");
    c_sim->add_option("--seed", sim.seed, "Noise seed");
    c_sim->add_option("--x0", sim.x0, "Initial state (comma separated)")->delimiter(',');
    c_sim->add_option("--substeps", sim.substeps, "RK4 substeps per interval");
    c_sim->add_option("--out-truth", sim.out_truth, "Noiseless output CSV");
    c_sim->add_option("--out-noisy", sim.out_noisy, "Noisy output CSV");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Fit a nonparametric ODE model");
    c_fit->fallthrough();
    c_fit->add_option("--input", fit.inputs, "Input CSV (repeat for --mode multi)");
    c_fit->add_option("--mode", fit.mode, "ridge, sparse, kernel-learn, or multi");
    c_fit->add_option("--kernel", fit.kernel, "decomposable, transformable, or hadamard");
    c_fit->add_option("--m", fit.m, "Model grid size");
    c_fit->add_option("--tau-mode", fit.tau_mode, "regular or random");
    c_fit->add_option("--tau-seed", fit.tau_seed, "Seed for random taus");
    c_fit->add_option("--gamma-grid", fit.gamma_grid, "Smoother gamma grid")->delimiter(',');
    c_fit->add_option("--lambda-grid", fit.lambda_grid, "Smoother ridge grid")->delimiter(',');
    c_fit->add_option("--gamma-h-grid", fit.gamma_h_grid, "Model gamma grid")->delimiter(',');
    c_fit->add_option("--lambda-h-grid", fit.lambda_h_grid, "Model ridge grid")->delimiter(',');
    c_fit->add_option("--lambda1", fit.lambda1, "Sparsity weight (sparse mode)");
    c_fit->add_option("--alpha", fit.alpha, "l1/group mix (sparse mode)");
    c_fit->add_option("--lambda-sim", fit.lambda_sim, "Similarity weight (multi mode)");
    c_fit->add_option("--solver", fit.solver, "direct or sgd (multi mode)");
    c_fit->add_option("--outer-iters", fit.outer_iters, "Alternations (kernel-learn)");
    c_fit->add_option("--inner-iters", fit.inner_iters, "C steps per alternation");
    c_fit->add_option("--jobs", fit.jobs, "Parallel grid-search workers");
    c_fit->add_option("--substeps", fit.substeps, "RK4 substeps per interval");
    c_fit->add_option("--out-model", fit.out_model, "Model output file");
    c_fit->add_option("--out-report", fit.out_report, "Report output file");

    TrajectoryArgs traj;
    auto* c_traj = app.add_subcommand("trajectory", "Integrate a fitted model");
    c_traj->fallthrough();
    c_traj->add_option("--model", traj.model_file, "Model file")->required();
    c_traj->add_option("--x0", traj.x0, "Initial state")->delimiter(',')->required();
    c_traj->add_option("--t-end", traj.t_end, "Horizon");
    c_traj->add_option("--n", traj.n, "Output rows");
    c_traj->add_option("--substeps", traj.substeps, "RK4 substeps per interval");
    c_traj->add_option("--out", traj.out, "Output CSV");

    SweepArgs sweep;
    auto* c_sweep = app.add_subcommand("sweep-alpha", "Sparsity/error tradeoff sweep");
    c_sweep->fallthrough();
    c_sweep->add_option("--input", sweep.input, "Input CSV")->required();
    c_sweep->add_option("--m", sweep.m, "Model grid size");
    c_sweep->add_option("--alpha-grid", sweep.alpha_grid, "Alpha grid")->delimiter(',');
    c_sweep->add_option("--lambda1-grid", sweep.lambda1_grid, "Lambda1 grid")->delimiter(',');
    c_sweep->add_option("--gamma-h", sweep.gamma_h, "Model gamma (0: grid search)");
    c_sweep->add_option("--lambda-h", sweep.lambda_h, "Model ridge (0: grid search)");
    c_sweep->add_option("--gamma-grid", sweep.gamma_grid, "Search grid")->delimiter(',');
    c_sweep->add_option("--lambda-grid", sweep.lambda_grid, "Search grid")->delimiter(',');
    c_sweep->add_option("--substeps", sweep.substeps, "RK4 substeps per interval");
    c_sweep->add_option("--jobs", sweep.jobs, "Parallel grid-search workers");
    c_sweep->add_option("--out", sweep.out, "Output CSV");

    ErrorMapArgs emap;
    auto* c_emap = app.add_subcommand("error-map", "Generalization map over initial values");
    c_emap->fallthrough();
    c_emap->add_option("--model", emap.model_files, "Model file(s); several are averaged")
        ->required();
    c_emap->add_option("--params", emap.params_file, "True-parameter file");
    c_emap->add_option("--v-min", emap.v_min);
    c_emap->add_option("--v-max", emap.v_max);
    c_emap->add_option("--v-count", emap.v_count);
    c_emap->add_option("--r-min", emap.r_min);
    c_emap->add_option("--r-max", emap.r_max);
    c_emap->add_option("--r-count", emap.r_count);
    c_emap->add_option("--horizon", emap.horizon, "Integration horizon per cell");
    c_emap->add_option("--n-points", emap.n_points, "Comparison points per cell");
    c_emap->add_option("--substeps", emap.substeps, "RK4 substeps per interval");
    c_emap->add_option("--out", emap.out, "Output CSV");

    CompareArgs cmp;
    auto* c_cmp = app.add_subcommand("compare", "OKODE vs parametric baselines");
    c_cmp->fallthrough();
    c_cmp->add_option("--input", cmp.input, "Noisy CSV")->required();
    c_cmp->add_option("--truth", cmp.truth, "Noiseless CSV")->required();
    c_cmp->add_option("--m", cmp.m, "Model grid size");
    c_cmp->add_option("--restarts", cmp.restarts, "Parametric restarts");
    c_cmp->add_option("--seed", cmp.seed, "Restart seed");
    c_cmp->add_option("--substeps", cmp.substeps, "RK4 substeps per interval");
    c_cmp->add_option("--jobs", cmp.jobs, "Parallel grid-search workers");
    c_cmp->add_option("--out", cmp.out, "Output CSV");

    try {
        app.parse(argc, argv);
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_fit->parsed()) return run_fit(fit);
        if (c_traj->parsed()) return run_trajectory(traj);
        if (c_sweep->parsed()) return run_sweep(sweep);
        if (c_emap->parsed()) return run_error_map(emap);
        if (c_cmp->parsed()) return run_compare(cmp);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const okode::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const okode::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
