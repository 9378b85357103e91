#pragma once

#include <string>

#include "okode/gradient_matcher.hpp"

namespace okode {

/// Serializes a model to a flat key-value + matrix-block text file:
///
///   okode_model 1
///   family <decomposable|transformable|hadamard>
///   gamma <g>
///   lambda_h <l>
///   p <p>
///   m <m>
///   C            (absent for transformable; p rows of p values)
///   anchors      (m rows of p values)
///   coeffs       (m rows of p values)
///
/// Values are written with 17 significant digits so load(save(m)) is exact.
void save_model(const OdeModel& model, const std::string& path);

OdeModel load_model(const std::string& path);

}  // namespace okode
