#pragma once

#include <string>
#include <vector>

#include "okode/smoother.hpp"

namespace okode {

/// Errors and chosen hyperparameters of one fit, written as a flat
/// key-value summary.
struct FitReport {
    double smoothing_error = 0;
    double gm_error = 0;
    double trajectory_error = 0;
    std::vector<LoocvChoice> smoother_choices;  // one per state variable
    double gamma_h = 0;
    double lambda_h = 0;
    std::string mode = "ridge";
    // solver diagnostics; meaning depends on mode
    int iterations = 0;
    bool converged = true;
    double lambda1 = 0;
    double alpha = 0;
    double lambda_sim = 0;
    Eigen::Index zero_coeffs = 0;
    Eigen::Index zero_groups = 0;

    std::string to_key_value() const;
    void write(const std::string& path) const;
};

}  // namespace okode
