#include "okode/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "okode/errors.hpp"

namespace okode {

Eigen::Vector2d fhn_rhs(const FhnParams& p, const Eigen::Vector2d& x) {
    if (p.c == 0) throw ValidationError("FitzHugh-Nagumo needs c != 0");
    const double V = x(0), R = x(1);
    return {p.c * (V - V * V * V / 3.0 + R), -(1.0 / p.c) * (V - p.a + p.b * R)};
}

CalciumParams CalciumParams::defaults() {
    CalciumParams p;
    p.k = {0.09, 1.24, 0.64, 4.88, 2.08, 32.24, 20.0, 0.7, 13.58, 153.0, 4.85};
    p.km = {0.19, 1.18, 29.09, 2.67, 0.16, 0.05};
    return p;
}

Eigen::Vector4d calcium_rhs(const CalciumParams& p, const Eigen::Vector4d& x) {
    const double ga = x(0), pc = x(1), cac = x(2), car = x(3);
    auto mm = [&](double v, int i) {
        const double denom = v + p.km[static_cast<std::size_t>(i)];
        if (denom == 0) throw ValidationError("calcium rate denominator hit zero");
        return v / denom;
    };
    const auto& k = p.k;
    Eigen::Vector4d dx;
    dx(0) = k[0] + k[1] * ga - k[2] * pc * mm(ga, 0) - k[3] * cac * mm(ga, 1);
    dx(1) = k[4] * ga - k[5] * mm(pc, 2);
    dx(2) = k[6] * pc * cac * mm(car, 3) + k[7] * pc + k[8] * ga - k[9] * mm(cac, 4) -
            k[10] * mm(cac, 5);
    dx(3) = -k[6] * pc * cac * mm(car, 3) + k[10] * mm(cac, 5);
    return dx;
}

namespace {

std::map<std::string, double> read_key_value(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "' for reading");
    std::map<std::string, double> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        double value = 0;
        if (!(ss >> value)) {
            throw ValidationError(path + ": line " + std::to_string(line_no) +
                                  ": expected 'name value'");
        }
        kv[key] = value;
    }
    return kv;
}

double require(const std::map<std::string, double>& kv, const std::string& key,
               const std::string& path) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError(path + ": missing parameter '" + key + "'");
    return it->second;
}

void write_kv(std::ofstream& out, const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out << key << ' ' << buf << '\n';
}

}  // namespace

FhnParams load_fhn_params(const std::string& path) {
    const auto kv = read_key_value(path);
    FhnParams p;
    p.a = require(kv, "a", path);
    p.b = require(kv, "b", path);
    p.c = require(kv, "c", path);
    if (p.c == 0) throw ValidationError(path + ": c must be nonzero");
    return p;
}

void save_fhn_params(const FhnParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    write_kv(out, "a", p.a);
    write_kv(out, "b", p.b);
    write_kv(out, "c", p.c);
}

CalciumParams load_calcium_params(const std::string& path) {
    const auto kv = read_key_value(path);
    CalciumParams p;
    for (int i = 0; i < 11; ++i)
        p.k[static_cast<std::size_t>(i)] = require(kv, "k" + std::to_string(i + 1), path);
    for (int i = 0; i < 6; ++i) {
        p.km[static_cast<std::size_t>(i)] = require(kv, "Km" + std::to_string(i + 1), path);
        if (!(p.km[static_cast<std::size_t>(i)] > 0)) {
            throw ValidationError(path + ": Km" + std::to_string(i + 1) + " must be positive");
        }
    }
    return p;
}

void save_calcium_params(const CalciumParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    for (int i = 0; i < 11; ++i)
        write_kv(out, "k" + std::to_string(i + 1), p.k[static_cast<std::size_t>(i)]);
    for (int i = 0; i < 6; ++i)
        write_kv(out, "Km" + std::to_string(i + 1), p.km[static_cast<std::size_t>(i)]);
}

IntegrationResult integrate_rk4_partial(const VectorField& f, const Eigen::VectorXd& x0,
                                        std::span<const double> t_grid, int substeps) {
    if (substeps < 1) throw ValidationError("integrate_rk4 needs substeps >= 1");
    if (t_grid.size() < 1) throw ValidationError("integrate_rk4 needs a non-empty time grid");

    IntegrationResult res;
    res.states.setZero(static_cast<Eigen::Index>(t_grid.size()), x0.size());
    res.states.row(0) = x0.transpose();
    res.rows_completed = 1;
    res.t_reached = t_grid[0];

    Eigen::VectorXd x = x0;
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
        const double h = (t_grid[i + 1] - t_grid[i]) / substeps;
        for (int s = 0; s < substeps; ++s) {
            const Eigen::VectorXd k1 = f(x);
            const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
            const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
            const Eigen::VectorXd k4 = f(x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!x.allFinite()) {
                res.blew_up = true;
                res.t_reached = t_grid[i] + h * (s + 1);
                return res;
            }
        }
        res.states.row(static_cast<Eigen::Index>(i) + 1) = x.transpose();
        res.rows_completed = static_cast<Eigen::Index>(i) + 2;
        res.t_reached = t_grid[i + 1];
    }
    return res;
}

Eigen::MatrixXd integrate_rk4(const VectorField& f, const Eigen::VectorXd& x0,
                              std::span<const double> t_grid, int substeps) {
    IntegrationResult res = integrate_rk4_partial(f, x0, t_grid, substeps);
    if (res.blew_up) {
        throw BlowUpError("integration blew up at t = " + std::to_string(res.t_reached),
                          res.t_reached);
    }
    return std::move(res.states);
}

TimeSeries add_noise(const Eigen::VectorXd& times, const Eigen::MatrixXd& trajectory,
                     const NoiseSpec& spec) {
    if (!(spec.variance > 0)) {
        throw ValidationError("noise variance must be positive");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(spec.variance));
    Eigen::MatrixXd noisy = trajectory;
    for (Eigen::Index i = 0; i < noisy.rows(); ++i) {
        for (Eigen::Index j = 0; j < noisy.cols(); ++j) {
            noisy(i, j) += normal(rng);
            if (spec.mode == NoiseMode::zero_truncated_gaussian && noisy(i, j) < 0) {
                noisy(i, j) = 0.0;
            }
        }
    }
    return TimeSeries(times, std::move(noisy));
}

double smoothing_error(const Smoother& g, const TimeSeries& ts) {
    double total = 0;
    for (Eigen::Index l = 0; l < ts.length(); ++l) {
        total += (ts.values().row(l).transpose() - g.eval(ts.times()(l))).squaredNorm();
    }
    return total;
}

double gm_error(const OdeModel& model, const Smoother& g, std::span<const double> taus) {
    double total = 0;
    for (double tau : taus) {
        total += (g.eval_derivative(tau) - model.eval(g.eval(tau))).squaredNorm();
    }
    return total;
}

TrajectoryErrorDetail trajectory_error_detail(const OdeModel& model, const Smoother& g,
                                              const TimeSeries& ts, TrajectoryMode mode,
                                              int substeps) {
    const Eigen::Index n = ts.length();
    TrajectoryErrorDetail out;
    if (mode == TrajectoryMode::self_consistent) {
        const VectorField field = [&](const Eigen::VectorXd& x) { return model.eval(x); };
        std::vector<double> grid(ts.times().data(), ts.times().data() + n);
        const IntegrationResult res = integrate_rk4_partial(field, g.eval(ts.t_start()),
                                                            grid, substeps);
        out.blew_up = res.blew_up;
        for (Eigen::Index l = 1; l < res.rows_completed; ++l) {
            out.error += (ts.values().row(l) - res.states.row(l)).squaredNorm();
            ++out.points_compared;
        }
        return out;
    }
    // along-g: cumulative trapezoid of h(g(tau)) on the subdivided grid
    Eigen::VectorXd x = g.eval(ts.t_start());
    Eigen::VectorXd prev_val = model.eval(g.eval(ts.t_start()));
    for (Eigen::Index l = 1; l < n; ++l) {
        const double t0 = ts.times()(l - 1);
        const double t1 = ts.times()(l);
        const double h = (t1 - t0) / substeps;
        for (int s = 1; s <= substeps; ++s) {
            const Eigen::VectorXd val = model.eval(g.eval(t0 + h * s));
            x += 0.5 * h * (prev_val + val);
            prev_val = val;
        }
        if (!x.allFinite()) {
            out.blew_up = true;
            return out;
        }
        out.error += (ts.values().row(l).transpose() - x).squaredNorm();
        ++out.points_compared;
    }
    return out;
}

double trajectory_error(const OdeModel& model, const Smoother& g, const TimeSeries& ts,
                        TrajectoryMode mode, int substeps) {
    return trajectory_error_detail(model, g, ts, mode, substeps).error;
}

Eigen::MatrixXd error_map(const VectorField& learned, const VectorField& truth,
                          std::span<const double> v_grid, std::span<const double> r_grid,
                          double horizon, int n_points, int substeps) {
    if (v_grid.empty() || r_grid.empty()) throw ValidationError("error_map needs non-empty grids");
    if (n_points < 2) throw ValidationError("error_map needs n_points >= 2");
    std::vector<double> tgrid(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i)
        tgrid[static_cast<std::size_t>(i)] = horizon * i / (n_points - 1);

    Eigen::MatrixXd map(static_cast<Eigen::Index>(v_grid.size()),
                        static_cast<Eigen::Index>(r_grid.size()));
    for (std::size_t iv = 0; iv < v_grid.size(); ++iv) {
        for (std::size_t ir = 0; ir < r_grid.size(); ++ir) {
            Eigen::Vector2d x0(v_grid[iv], r_grid[ir]);
            const IntegrationResult a = integrate_rk4_partial(learned, x0, tgrid, substeps);
            const IntegrationResult b = integrate_rk4_partial(truth, x0, tgrid, substeps);
            if (a.blew_up || b.blew_up) {
                map(static_cast<Eigen::Index>(iv), static_cast<Eigen::Index>(ir)) =
                    std::numeric_limits<double>::infinity();
                continue;
            }
            double mse = 0;
            for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(n_points); ++l)
                mse += (a.states.row(l) - b.states.row(l)).squaredNorm();
            map(static_cast<Eigen::Index>(iv), static_cast<Eigen::Index>(ir)) =
                mse / n_points;
        }
    }
    return map;
}

}  // namespace okode
