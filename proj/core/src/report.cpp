#include "okode/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "okode/errors.hpp"

namespace okode {

namespace {
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string FitReport::to_key_value() const {
    std::ostringstream out;
    out << "mode " << mode << "\n";
    out << "smoothing_error " << num(smoothing_error) << "\n";
    out << "gm_error " << num(gm_error) << "\n";
    out << "trajectory_error " << num(trajectory_error) << "\n";
    for (std::size_t j = 0; j < smoother_choices.size(); ++j) {
        out << "smoother_gamma_" << (j + 1) << ' ' << num(smoother_choices[j].gamma) << "\n";
        out << "smoother_lambda_" << (j + 1) << ' ' << num(smoother_choices[j].ridge) << "\n";
        out << "smoother_loo_" << (j + 1) << ' ' << num(smoother_choices[j].loo_error) << "\n";
    }
    out << "gamma_h " << num(gamma_h) << "\n";
    out << "lambda_h " << num(lambda_h) << "\n";
    if (mode == "sparse") {
        out << "lambda1 " << num(lambda1) << "\n";
        out << "alpha " << num(alpha) << "\n";
        out << "iterations " << iterations << "\n";
        out << "converged " << (converged ? 1 : 0) << "\n";
        out << "zero_coeffs " << zero_coeffs << "\n";
        out << "zero_groups " << zero_groups << "\n";
    }
    if (mode == "multi") {
        out << "lambda_sim " << num(lambda_sim) << "\n";
    }
    return out.str();
}

void FitReport::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << to_key_value();
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

}  // namespace okode
